#include "dln/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dln {

void validate(const DlnParams& params) {
    if (!std::isfinite(params.mu_p) || !std::isfinite(params.sigma_p) || !std::isfinite(params.mu_n) ||
        !std::isfinite(params.sigma_n) || !std::isfinite(params.rho_pn))
        throw std::domain_error("DlnParams: non-finite parameter");
    if (params.sigma_p <= 0.0 || params.sigma_n <= 0.0)
        throw std::domain_error("DlnParams: sigma_p and sigma_n must be positive");
    if (std::abs(params.rho_pn) > 1.0) throw std::domain_error("DlnParams: |rho_pn| must be <= 1");
}

void require_nondegenerate(const DlnParams& params) {
    validate(params);
    if (std::abs(params.rho_pn) >= 1.0)
        throw std::domain_error("DlnParams: |rho_pn| = 1 gives a singular log-space covariance");
}

}  // namespace dln

#include "dln/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace dln {

void validate(const QuadratureOptions& opts) {
    if (!(opts.rel_tol > 0.0) || !std::isfinite(opts.rel_tol))
        throw std::domain_error("QuadratureOptions: rel_tol must be positive and finite");
    if (!(opts.abs_tol > 0.0) || !std::isfinite(opts.abs_tol))
        throw std::domain_error("QuadratureOptions: abs_tol must be positive and finite");
    if (opts.max_subdivisions < 1) throw std::domain_error("QuadratureOptions: max_subdivisions must be >= 1");
    if (!(opts.integration_range_halfwidth > 0.0) || !std::isfinite(opts.integration_range_halfwidth))
        throw std::domain_error("QuadratureOptions: integration_range_halfwidth must be positive and finite");
}

}  // namespace dln

#pragma once

#include <Eigen/Core>

#include "dln/common.hpp"

namespace dln {

// Five-parameter description of W = exp(X_p) - exp(X_n) with (X_p, X_n)
// bivariate Normal: log-scale locations/scales of the two components and
// their correlation.
struct DlnParams {
    double mu_p = 0.0;
    double sigma_p = 1.0;
    double mu_n = 0.0;
    double sigma_n = 1.0;
    double rho_pn = 0.0;

    DlnParams() = default;
    DlnParams(double mp, double sp, double mn, double sn, double r)
        : mu_p(mp), sigma_p(sp), mu_n(mn), sigma_n(sn), rho_pn(r) {}

    // Parameters of -W: the two components exchange roles.
    DlnParams swapped() const { return {mu_n, sigma_n, mu_p, sigma_p, rho_pn}; }

    bool symmetric() const { return mu_p == mu_n && sigma_p == sigma_n; }

    Eigen::Vector2d mean_log() const { return {mu_p, mu_n}; }

    Eigen::Matrix2d covariance_log() const {
        Eigen::Matrix2d s;
        const double c = sigma_p * sigma_n * rho_pn;
        s << sigma_p * sigma_p, c, c, sigma_n * sigma_n;
        return s;
    }
};

// Rejects non-finite fields, nonpositive sigmas, |rho| > 1.
void validate(const DlnParams& params);

// Additionally rejects |rho| = 1 (singular log-space covariance): required
// by every density/CDF path.
void require_nondegenerate(const DlnParams& params);

}  // namespace dln

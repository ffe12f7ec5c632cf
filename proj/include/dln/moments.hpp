#pragma once

#include <Eigen/Core>

#include "dln/params.hpp"

namespace dln {

// Component-space moments of (Y_p, Y_n) = (exp(X_p), exp(X_n)).
struct BvlnMoments {
    Eigen::Vector2d mu_hat;
    Eigen::Matrix2d sigma_hat;
};

// First five moments: mean, variance, then standardized ratios.
struct CentralMoments {
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    double m5 = 0.0;
};

BvlnMoments bvln_moments(const DlnParams& params);

// E[Y_p^i * Y_n^j] from the bivariate Normal MGF. Requires i + j <= 10;
// throws std::overflow_error when the log-scale result exceeds double range.
double mixed_raw_moment(int i, int j, const DlnParams& params);

double dln_mean(const DlnParams& params);
double dln_variance(const DlnParams& params);
double dln_skewness(const DlnParams& params);   // standardized, via coskewness terms
double dln_kurtosis(const DlnParams& params);   // standardized (not excess), via cokurtosis terms

// E[(W - EW)^k] by binomial expansion into mixed central moments; k in [1,5].
// Returns the raw central moment for k <= 2 and the standardized ratio
// m_k / m2^{k/2} for k >= 3. Independent of the dln_skewness/dln_kurtosis
// code path, which makes the pair a useful cross-check.
double dln_central_moment(int k, const DlnParams& params);

// All five theoretical moments in one call.
CentralMoments dln_moments(const DlnParams& params);

// Sample mean, unbiased variance, and standardized g-ratios (biased central
// moments; no small-sample corrections). Requires length >= 5; throws on
// constant data.
CentralMoments empirical_central_moments(const Eigen::Ref<const Eigen::VectorXd>& data);

}  // namespace dln

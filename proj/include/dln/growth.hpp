#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "dln/params.hpp"
#include "dln/quadrature.hpp"

namespace dln {

double asinh_val(double x);
double sinh_val(double x);

// Signed log compression: sign(x) * log(1 + |x|).
double neglog_val(double x);

// Density of asinh(W): f_DLN(sinh z) * cosh z.
double adln_pdf(double z, const DlnParams& params, const QuadratureOptions& opts = {});

// e^{x1} - e^{x2} = exp_factor * sinh_factor with exp_factor =
// 2 exp((x1+x2)/2) and sinh_factor = sinh((x1-x2)/2).
struct SinhFactorization {
    double exp_factor = 0.0;
    double sinh_factor = 0.0;
};

SinhFactorization sinh_factorization(double x1, double x2);

// Generalized percentage growth (z_{t+1} - z_t) / |z_t|; positive exactly
// when the level rose, whatever the sign of z_t.
double d_percent(double z_t, double z_t1);

// Log-point growth log(z_{t+1}) - log(z_t); positive levels only.
double d_log(double z_t, double z_t1);

// Growth of a difference of positive components:
// (yp_t dlog(yp) - yn_t dlog(yn)) / |yp_t - yn_t|.
double d_dln(double yp_t, double yp_t1, double yn_t, double yn_t1);

// Latent AR(1) X_{t+1} = (1-rho) mu + rho X_t + eps_t parameterized by its
// stationary standard deviation; the innovation scale follows.
struct Ar1Params {
    double rho = 0.0;
    double mu = 0.0;
    double sd = 1.0;

    double sigma() const { return sd * std::sqrt((1.0 - rho) * (1.0 + rho)); }
};

void validate(const Ar1Params& params);

// Two latent AR(1) components with correlated innovations; the observed
// series is W_t = exp(X^p_t) - exp(X^n_t).
struct DlnAr1Params {
    Ar1Params pos;
    Ar1Params neg;
    double rho_pn = 0.0;
};

void validate(const DlnAr1Params& params);

enum class Ar1Output { normal, lognormal };

// Simulates the latent process from X_0 = mu, drops the first burn_in
// states, and returns the next k as X (normal) or exp(X) (lognormal).
Eigen::VectorXd simulate_ar1(const Ar1Params& params, std::int64_t k, std::int64_t burn_in,
                             std::uint64_t seed, Ar1Output output);

// Component paths plus the innovations: eps_p[t]/eps_n[t] are the latent
// shocks stepping observation t to observation t+1 (one extra step past the
// window keeps the last entry defined). All vectors have length k.
struct DlnAr1Path {
    Eigen::VectorXd w;
    Eigen::VectorXd y_p;
    Eigen::VectorXd y_n;
    Eigen::VectorXd eps_p;
    Eigen::VectorXd eps_n;
};

DlnAr1Path simulate_ar1_dln(const DlnAr1Params& params, std::int64_t k, std::int64_t burn_in,
                            std::uint64_t seed);

// One (t, t+1) observation pair's growth measures; quantities whose
// denominator or domain condition fails are NaN.
struct GrowthRecord {
    double eps = std::numeric_limits<double>::quiet_NaN();
    double eps_over_abs = std::numeric_limits<double>::quiet_NaN();
    double d_pct = std::numeric_limits<double>::quiet_NaN();
    double d_log = std::numeric_limits<double>::quiet_NaN();
    double d_dln = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace dln

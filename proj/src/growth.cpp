#include "dln/growth.hpp"

#include <cmath>
#include <stdexcept>

#include "dln/density.hpp"
#include "dln/random.hpp"

namespace dln {

double asinh_val(double x) { return std::asinh(x); }

double sinh_val(double x) { return std::sinh(x); }

double neglog_val(double x) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::log1p(std::abs(x)), x);
}

double adln_pdf(double z, const DlnParams& params, const QuadratureOptions& opts) {
    if (!std::isfinite(z)) throw std::domain_error("adln_pdf: z must be finite");
    if (std::abs(z) > 700.0) return 0.0;  // sinh would overflow; the density is long gone
    return dln_pdf(std::sinh(z), params, opts) * std::cosh(z);
}

SinhFactorization sinh_factorization(double x1, double x2) {
    if (!std::isfinite(x1) || !std::isfinite(x2))
        throw std::domain_error("sinh_factorization: arguments must be finite");
    SinhFactorization out;
    out.exp_factor = 2.0 * std::exp(0.5 * (x1 + x2));
    out.sinh_factor = std::sinh(0.5 * (x1 - x2));
    if (!std::isfinite(out.exp_factor) || !std::isfinite(out.sinh_factor))
        throw std::overflow_error("sinh_factorization: factor overflow (|x| beyond ~700)");
    return out;
}

double d_percent(double z_t, double z_t1) {
    if (!std::isfinite(z_t) || !std::isfinite(z_t1))
        throw std::domain_error("d_percent: arguments must be finite");
    if (z_t == 0.0) throw std::domain_error("d_percent: undefined at z_t = 0");
    return (z_t1 - z_t) / std::abs(z_t);
}

double d_log(double z_t, double z_t1) {
    if (!(z_t > 0.0) || !(z_t1 > 0.0) || !std::isfinite(z_t) || !std::isfinite(z_t1))
        throw std::domain_error("d_log: both levels must be strictly positive and finite");
    return std::log(z_t1) - std::log(z_t);
}

double d_dln(double yp_t, double yp_t1, double yn_t, double yn_t1) {
    if (!(yp_t > 0.0) || !(yp_t1 > 0.0) || !(yn_t > 0.0) || !(yn_t1 > 0.0))
        throw std::domain_error("d_dln: all four component levels must be strictly positive");
    if (yp_t == yn_t) throw std::domain_error("d_dln: undefined at yp_t = yn_t (W_t = 0)");
    return (yp_t * d_log(yp_t, yp_t1) - yn_t * d_log(yn_t, yn_t1)) / std::abs(yp_t - yn_t);
}

void validate(const Ar1Params& params) {
    if (!std::isfinite(params.rho) || !std::isfinite(params.mu) || !std::isfinite(params.sd))
        throw std::domain_error("AR(1) parameters must be finite");
    if (!(std::abs(params.rho) < 1.0)) throw std::domain_error("AR(1): |rho| must be below 1");
    if (!(params.sd > 0.0)) throw std::domain_error("AR(1): stationary sd must be positive");
}

void validate(const DlnAr1Params& params) {
    validate(params.pos);
    validate(params.neg);
    if (!std::isfinite(params.rho_pn) || !(std::abs(params.rho_pn) < 1.0))
        throw std::domain_error("AR(1) pair: |rho_pn| must be below 1");
}

Eigen::VectorXd simulate_ar1(const Ar1Params& params, std::int64_t k, std::int64_t burn_in,
                             std::uint64_t seed, Ar1Output output) {
    validate(params);
    if (k < 1) throw std::domain_error("simulate_ar1: need at least one observation");
    if (burn_in < 0) throw std::domain_error("simulate_ar1: burn_in must be nonnegative");

    Rng rng(seed);
    const double sigma = params.sigma();
    const double drift = (1.0 - params.rho) * params.mu;
    double x = params.mu;
    Eigen::VectorXd out(k);
    for (std::int64_t t = 0; t < burn_in + k; ++t) {
        if (t >= burn_in) out[t - burn_in] = (output == Ar1Output::normal) ? x : std::exp(x);
        x = drift + params.rho * x + sigma * rng.normal();
    }
    return out;
}

DlnAr1Path simulate_ar1_dln(const DlnAr1Params& params, std::int64_t k, std::int64_t burn_in,
                            std::uint64_t seed) {
    validate(params);
    if (k < 1) throw std::domain_error("simulate_ar1_dln: need at least one observation");
    if (burn_in < 0) throw std::domain_error("simulate_ar1_dln: burn_in must be nonnegative");

    Rng rng(seed);
    const double sig_p = params.pos.sigma();
    const double sig_n = params.neg.sigma();
    const double drift_p = (1.0 - params.pos.rho) * params.pos.mu;
    const double drift_n = (1.0 - params.neg.rho) * params.neg.mu;

    DlnAr1Path path;
    path.w.resize(k);
    path.y_p.resize(k);
    path.y_n.resize(k);
    path.eps_p.resize(k);
    path.eps_n.resize(k);

    double xp = params.pos.mu;
    double xn = params.neg.mu;
    for (std::int64_t t = 0; t < burn_in + k; ++t) {
        const std::int64_t i = t - burn_in;
        if (i >= 0) {
            const double yp = std::exp(xp);
            const double yn = std::exp(xn);
            path.y_p[i] = yp;
            path.y_n[i] = yn;
            path.w[i] = yp - yn;
        }
        const auto [zp, zn] = rng.bivariate_normal(params.rho_pn);
        const double ep = sig_p * zp;
        const double en = sig_n * zn;
        if (i >= 0) {
            path.eps_p[i] = ep;
            path.eps_n[i] = en;
        }
        xp = drift_p + params.pos.rho * xp + ep;
        xn = drift_n + params.neg.rho * xn + en;
    }
    return path;
}

}  // namespace dln

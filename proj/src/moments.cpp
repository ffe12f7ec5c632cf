#include "dln/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace dln {

namespace {

constexpr double kExpOverflow = 700.0;

double checked_exp(double log_value, const char* what) {
    if (log_value > kExpOverflow) throw std::overflow_error(what);
    return std::exp(log_value);
}

double log_raw_moment(int i, int j, const DlnParams& p) {
    const double di = i, dj = j;
    return di * p.mu_p + 0.5 * di * di * p.sigma_p * p.sigma_p + dj * p.mu_n +
           0.5 * dj * dj * p.sigma_n * p.sigma_n + di * dj * p.sigma_p * p.sigma_n * p.rho_pn;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return r;
}

// E[(Y_p - mu_hat_p)^a (Y_n - mu_hat_n)^b] expanded into raw moments.
double mixed_central_moment(int a, int b, const DlnParams& p, double mu_hat_p, double mu_hat_n) {
    double sum = 0.0;
    for (int r = 0; r <= a; ++r) {
        for (int s = 0; s <= b; ++s) {
            const double raw = checked_exp(log_raw_moment(r, s, p), "dln moments: raw moment overflow");
            const double coef = binomial(a, r) * binomial(b, s) * std::pow(-mu_hat_p, a - r) *
                                std::pow(-mu_hat_n, b - s);
            sum += coef * raw;
        }
    }
    return sum;
}

// Orientation canonicalization: moment formulas are invariant (even order) or
// antisymmetric (odd order) under swapping the two components, but the
// floating-point summation order is not. Evaluating every moment in a fixed
// canonical orientation makes the swap identities hold bitwise.
bool swap_is_canonical(const DlnParams& p) {
    return std::tie(p.mu_n, p.sigma_n, p.mu_p, p.sigma_p) < std::tie(p.mu_p, p.sigma_p, p.mu_n, p.sigma_n);
}

struct Oriented {
    DlnParams params;
    double odd_sign;
};

Oriented orient(const DlnParams& p) {
    if (swap_is_canonical(p)) return {p.swapped(), -1.0};
    return {p, 1.0};
}

double central_moment_expansion(int k, const DlnParams& p) {
    const BvlnMoments bm = bvln_moments(p);
    double sum = 0.0;
    for (int j = 0; j <= k; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binomial(k, j) * mixed_central_moment(k - j, j, p, bm.mu_hat[0], bm.mu_hat[1]);
    }
    return sum;
}

}  // namespace

BvlnMoments bvln_moments(const DlnParams& params) {
    validate(params);
    BvlnMoments m;
    const double vp = params.sigma_p * params.sigma_p;
    const double vn = params.sigma_n * params.sigma_n;
    const double cpn = params.sigma_p * params.sigma_n * params.rho_pn;
    m.mu_hat[0] = checked_exp(params.mu_p + 0.5 * vp, "bvln_moments: mean overflow");
    m.mu_hat[1] = checked_exp(params.mu_n + 0.5 * vn, "bvln_moments: mean overflow");
    m.sigma_hat(0, 0) = m.mu_hat[0] * m.mu_hat[0] * std::expm1(vp);
    m.sigma_hat(1, 1) = m.mu_hat[1] * m.mu_hat[1] * std::expm1(vn);
    m.sigma_hat(0, 1) = m.mu_hat[0] * m.mu_hat[1] * std::expm1(cpn);
    m.sigma_hat(1, 0) = m.sigma_hat(0, 1);
    if (std::isinf(m.sigma_hat(0, 0)) || std::isinf(m.sigma_hat(1, 1)))
        throw std::overflow_error("bvln_moments: covariance overflow");
    return m;
}

double mixed_raw_moment(int i, int j, const DlnParams& params) {
    validate(params);
    if (i < 0 || j < 0) throw std::domain_error("mixed_raw_moment: negative order");
    if (i + j > 10) throw std::domain_error("mixed_raw_moment: i + j must be <= 10");
    return checked_exp(log_raw_moment(i, j, params), "mixed_raw_moment: overflow");
}

double dln_mean(const DlnParams& params) {
    validate(params);
    const double a = checked_exp(params.mu_p + 0.5 * params.sigma_p * params.sigma_p, "dln_mean: overflow");
    const double b = checked_exp(params.mu_n + 0.5 * params.sigma_n * params.sigma_n, "dln_mean: overflow");
    return a - b;
}

double dln_variance(const DlnParams& params) {
    validate(params);
    const auto o = orient(params);
    const BvlnMoments m = bvln_moments(o.params);
    return std::max(0.0, m.sigma_hat(0, 0) + m.sigma_hat(1, 1) - 2.0 * m.sigma_hat(0, 1));
}

double dln_skewness(const DlnParams& params) {
    validate(params);
    const auto o = orient(params);
    const DlnParams& p = o.params;
    const BvlnMoments bm = bvln_moments(p);
    const double sp = std::sqrt(bm.sigma_hat(0, 0));
    const double sn = std::sqrt(bm.sigma_hat(1, 1));
    const double var_w = dln_variance(p);
    if (!(var_w > 0.0)) throw std::domain_error("dln_skewness: zero variance");

    // Coskewness ratios S[a,b] = E[(Yp-mu)^a (Yn-mu)^b] / (sp^a sn^b).
    const auto cs = [&](int a, int b) {
        return mixed_central_moment(a, b, p, bm.mu_hat[0], bm.mu_hat[1]) /
               (std::pow(sp, a) * std::pow(sn, b));
    };
    const double num = sp * sp * sp * cs(3, 0) - 3.0 * sp * sp * sn * cs(2, 1) +
                       3.0 * sp * sn * sn * cs(1, 2) - sn * sn * sn * cs(0, 3);
    return o.odd_sign * num / std::pow(var_w, 1.5);
}

double dln_kurtosis(const DlnParams& params) {
    validate(params);
    const auto o = orient(params);
    const DlnParams& p = o.params;
    const BvlnMoments bm = bvln_moments(p);
    const double sp = std::sqrt(bm.sigma_hat(0, 0));
    const double sn = std::sqrt(bm.sigma_hat(1, 1));
    const double var_w = dln_variance(p);
    if (!(var_w > 0.0)) throw std::domain_error("dln_kurtosis: zero variance");

    // Cokurtosis ratios K[a,b] = E[(Yp-mu)^a (Yn-mu)^b] / (sp^a sn^b).
    const auto ck = [&](int a, int b) {
        return mixed_central_moment(a, b, p, bm.mu_hat[0], bm.mu_hat[1]) /
               (std::pow(sp, a) * std::pow(sn, b));
    };
    const double sp2 = sp * sp, sn2 = sn * sn;
    const double num = sp2 * sp2 * ck(4, 0) - 4.0 * sp2 * sp * sn * ck(3, 1) +
                       6.0 * sp2 * sn2 * ck(2, 2) - 4.0 * sp * sn2 * sn * ck(1, 3) + sn2 * sn2 * ck(0, 4);
    return num / (var_w * var_w);
}

double dln_central_moment(int k, const DlnParams& params) {
    validate(params);
    if (k < 1 || k > 5) throw std::domain_error("dln_central_moment: k must lie in [1,5]");
    if (k == 1) return 0.0;
    const auto o = orient(params);
    const double mk = central_moment_expansion(k, o.params);
    if (k == 2) return std::max(0.0, mk);
    const double m2 = std::max(0.0, central_moment_expansion(2, o.params));
    if (!(m2 > 0.0)) throw std::domain_error("dln_central_moment: zero variance");
    const double sign = (k % 2 == 1) ? o.odd_sign : 1.0;
    return sign * mk / std::pow(m2, 0.5 * k);
}

CentralMoments dln_moments(const DlnParams& params) {
    CentralMoments m;
    m.m1 = dln_mean(params);
    m.m2 = dln_variance(params);
    m.m3 = dln_skewness(params);
    m.m4 = dln_kurtosis(params);
    m.m5 = dln_central_moment(5, params);
    return m;
}

CentralMoments empirical_central_moments(const Eigen::Ref<const Eigen::VectorXd>& data) {
    const Eigen::Index n = data.size();
    if (n < 5) throw std::domain_error("empirical_central_moments: need at least 5 observations");
    const double mean = data.mean();
    double c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = data[i] - mean;
        const double d2 = d * d;
        c2 += d2;
        c3 += d2 * d;
        c4 += d2 * d2;
        c5 += d2 * d2 * d;
    }
    const double dn = static_cast<double>(n);
    const double v_biased = c2 / dn;
    if (!(v_biased > 0.0)) throw std::domain_error("empirical_central_moments: constant data");
    CentralMoments m;
    m.m1 = mean;
    m.m2 = c2 / (dn - 1.0);
    m.m3 = (c3 / dn) / std::pow(v_biased, 1.5);
    m.m4 = (c4 / dn) / (v_biased * v_biased);
    m.m5 = (c5 / dn) / std::pow(v_biased, 2.5);
    return m;
}

}  // namespace dln

#include "dln/common.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dln {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, then one Halley step against erfc.
double normal_quantile_seed(double p) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                                    1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                    6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                    -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                    3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_quantile: p must lie in [0, 1]");
    }
    double x = normal_quantile_seed(p);
    // Halley refinement: e = Phi(x) - p, u = e / phi(x).
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Theta-function form, fast for small arguments.
        const double t = std::exp(-pi * pi / (8.0 * x * x));
        const double sum = t * (1.0 + std::pow(t, 8.0) * (1.0 + std::pow(t, 16.0)));
        return 1.0 - std::sqrt(2.0 * pi) / x * sum;
    }
    const double e = std::exp(-2.0 * x * x);
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 40; ++k) {
        const double term = sign * std::pow(e, static_cast<double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-18) break;
        sign = -sign;
    }
    return 2.0 * std::max(0.0, sum);
}

}  // namespace dln

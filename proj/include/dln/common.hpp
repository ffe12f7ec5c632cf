#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dln {

// Numerical routine failed to reach its tolerance; carries the best value
// obtained and the achieved error estimate.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double value, double error_estimate)
        : std::runtime_error(what), value_(value), error_estimate_(error_estimate) {}
    double value() const { return value_; }
    double error_estimate() const { return error_estimate_; }

private:
    double value_;
    double error_estimate_;
};

// Maximum-likelihood search failed on every start.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Monte-Carlo calibration exceeded its failed-repetition budget or produced
// an unusable table.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double pi = 3.14159265358979323846;

// Quantile of the standard Normal distribution (Acklam's rational
// approximation polished by one Halley step on erfc).
double normal_quantile(double p);

// CDF of the standard Normal distribution.
double normal_cdf(double x);

// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

}  // namespace dln

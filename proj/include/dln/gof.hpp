#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dln/estimate.hpp"
#include "dln/params.hpp"
#include "dln/quadrature.hpp"
#include "dln/region.hpp"

namespace dln {

struct GofStatistics {
    double ks = 0.0;
    double chi2 = 0.0;
    double ad = 0.0;
    std::int64_t n_obs = 0;
};

// Sup distance between the empirical CDF and the fitted CDF.
double ks_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                    const QuadratureOptions& opts = {});

// Pearson statistic over bins equiprobable under the fitted CDF. n_bins = 0
// selects max(10, floor(n^{2/5})); bins are then merged left to right until
// every effective bin has expected count at least 5.
double chi2_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                      const QuadratureOptions& opts = {}, int n_bins = 0);

// Anderson-Darling A^2 with fitted CDF values clamped to [1e-12, 1 - 1e-12].
double ad_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                    const QuadratureOptions& opts = {});

// All three statistics from one pass over the sorted fitted-CDF values.
GofStatistics gof_statistics(const Eigen::Ref<const Eigen::VectorXd>& data,
                             const DlnParams& params, const QuadratureOptions& opts = {});

// Four-parameter exponential-sum approximation of the inverse CDF of a log
// statistic, fitted on percentiles p = 1..99 (percent units).
struct IcdfFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double r2 = 0.0;
    std::vector<std::pair<double, double>> percentile_grid;  // (p, empirical log stat)

    double operator()(double p) const;
    bool monotone_nondecreasing() const;  // sampled on a 1000-point grid over [0, 100]
};

// Nonlinear least squares of a*exp(b*p) + c*exp(d*p) against the empirical
// percentiles of the log statistics; multi-start over sign/scale patterns.
// Requires at least 100 samples.
IcdfFit fit_icdf_approx(const std::vector<double>& log_stat_samples);

// Inverts the fitted curve at log(stat) by bisection and returns 1 - p/100,
// clamped to {0, 1} outside the fitted range.
double p_value(double stat, const IcdfFit& fit);

// fit defaults to a throughput profile (three correlation starts, 0.12 grid
// spacing, 1e-6 node quadrature) rather than FitOptions{}: a calibration is
// thousands of fits, and pipelines that consult the resulting table should
// fit with the same profile.
struct CalibrationOptions {
    CalibrationOptions() {
        fit.rho_starts = {-0.9, 0.0, 0.9};
        fit.grid_spacing = 0.12;
        fit.quadrature.rel_tol = 1e-6;
    }

    FitOptions fit;
    double max_failure_rate = 0.05;
    int workers = 1;
};

struct NullCalibration {
    ParamRegion region;
    int n_reps = 0;
    int k_obs = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> log_ks;
    std::vector<double> log_chi2;
    std::vector<double> log_ad;
    IcdfFit ks_fit;
    IcdfFit chi2_fit;
    IcdfFit ad_fit;
    int redraws = 0;      // failed attempts across all repetitions
    int failed_reps = 0;  // repetitions that exhausted their redraw budget
};

// Null-distribution calibration: per repetition, draw parameters uniformly
// from the region, sample k_obs observations, fit by maximum likelihood, and
// compute the statistics against the fitted parameters. A failed attempt
// (one-sided sample, non-converged fit) is redrawn with a seed derived from
// the attempt index, up to 50 attempts per repetition; every redraw is
// counted. Repetitions that exhaust the budget are dropped, and more than
// max_failure_rate of them aborts (a region where draws systematically
// cannot be fit; isolated hard draws are absorbed by the redraws).
// Bit-reproducible for a given master_seed at any worker count
// (per-repetition RNG streams are derived from the repetition index).
NullCalibration calibrate_null(const ParamRegion& region, int n_reps, int k_obs,
                               std::uint64_t master_seed, const CalibrationOptions& opts = {});

// Versioned JSON round trip of the calibration record (percentile grids and
// coefficients; raw statistic samples are not serialized).
std::string calibration_to_json(const NullCalibration& cal);
NullCalibration calibration_from_json(const std::string& text);

}  // namespace dln

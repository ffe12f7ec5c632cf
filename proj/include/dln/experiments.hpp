#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dln/estimate.hpp"
#include "dln/region.hpp"

namespace dln {

enum class ExperimentKind { estimator, growth, calibrate };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

// Shared experiment description. The estimator experiment draws from
// `region`; the growth experiment ignores it (each process family carries
// its own preset region). Worker count and output paths deliberately do not
// enter the config hash: they cannot affect the numbers.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::estimator;
    ParamRegion region = ParamRegion::q();
    int n_reps = 500;
    int k_obs = 10000;
    int burn_in = 100;
    std::uint64_t master_seed = 1;
    bool subsample = true;
    bool with_mle = true;
    FitOptions fit;
    int workers = 1;
    std::string out_csv;
    std::string out_json;
};

void validate(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

// One record per (repetition, quantity); aggregate rows use rep = -1.
struct ResultRow {
    int rep = 0;
    std::string quantity;
    double value = 0.0;
};

struct ResultTable {
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::vector<ResultRow> rows;

    std::string to_csv() const;
    std::string to_json() const;

    // First aggregate row with this name; throws std::out_of_range if absent.
    double value_of(const std::string& quantity) const;
};

// Estimator pipeline: per repetition draws parameters from the region,
// compares theoretical against empirical moments (optionally on nested
// halved subsamples), fits by maximum likelihood, and computes GOF
// statistics; aggregates asinh-space correlation/median-bias/IQR per moment
// and per parameter. Repetitions whose fit fails are redrawn with a derived
// seed and counted. Byte-identical output for a given config at any worker
// count.
ResultTable run_estimator_experiment(const ExperimentConfig& config);

// Growth pipeline: for each process family (normal, lognormal, dln) draws
// AR(1) parameters from the family preset region, simulates k_obs periods
// after burn-in, computes per-period growth measures, and pools
// pairwise-complete correlations under three filters (all; Z_t>0 and
// Z_{t+1}>0; additionally Z_t>1).
ResultTable run_growth_experiment(const ExperimentConfig& config);

// Plot-data emission: writes CSV series (no rendering) under out_dir.
//   pdf-panels: density curves on linear and asinh axes for the showcase
//     parameter set (3,2,2,2,rho), rho in {-0.5, 0, 0.5};
//   icdf-fits: per-statistic percentile scatter plus fitted curve from a
//     calibration record, with recomputed R^2 in a summary file;
//   growth-scatter: per-family growth-measure pairs from one simulated path.
struct PlotDataRequest {
    std::string kind;
    std::string out_dir;
    std::string calibration_json;  // icdf-fits input path
    std::uint64_t seed = 1;
};

std::vector<std::string> emit_plot_data(const PlotDataRequest& req);

// Writes the table to config.out_csv / config.out_json where non-empty.
void write_result_files(const ResultTable& table, const ExperimentConfig& config);

}  // namespace dln

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dln/params.hpp"
#include "dln/quadrature.hpp"

namespace dln {

struct FitOptions {
    // Start spread chosen for basin coverage: walks started at extreme
    // correlations are the ones that find buried minority components, so the
    // ends sit close to the admissible boundary.
    std::vector<double> rho_starts{-0.9, -0.45, 0.0, 0.45, 0.9};
    int max_evals = 2000;      // objective evaluations per optimization round
    double param_tol = 1e-6;   // simplex diameter stopping rule
    double loglik_tol = 1e-8;  // relative objective-spread stopping rule
    QuadratureOptions quadrature{};
    // Spacing, in log|w| coordinates, of the per-candidate density tables the
    // objective interpolates the log density from (see fit_objective).
    double grid_spacing = 0.075;
};

void validate(const FitOptions& opts);

struct InitialGuess {
    double mu_p;
    double sigma_p;
    double mu_n;
    double sigma_n;
};

struct StartReport {
    double rho_start = 0.0;
    bool converged = false;
    double neg_loglik = 0.0;
    int evals = 0;
};

struct FitResult {
    DlnParams params;
    double neg_loglik = 0.0;
    std::vector<StartReport> per_start;
    std::int64_t n_obs = 0;
    double initial_neg_loglik = 0.0;  // best objective value across the starts' initial points
    bool small_sample = false;        // n_obs < 50
};

// Median/IQR starting values on the log of each sign class; sigma guesses
// are clamped below at 0.05. Requires at least two strictly positive and two
// strictly negative observations.
InitialGuess initial_guess(const Eigen::Ref<const Eigen::VectorXd>& data);

// Multi-start Nelder-Mead maximum likelihood in the unconstrained
// coordinates (mu_p, log sigma_p, mu_n, log sigma_n, atanh rho_pn).
// Deterministic for fixed data and options.
FitResult fit_mle(const Eigen::Ref<const Eigen::VectorXd>& data, const FitOptions& opts = {});

// The negative log-likelihood surface the optimizer actually minimizes. The
// sample is standardized to unit geometric scale (the family is closed under
// scaling), the density for a candidate parameter vector is tabulated per
// sign of w on a uniform grid in log|w| (grid_spacing apart, spanning that
// side's data), where its logarithm stays smooth on the scale of the
// component sigmas, and the log density at each datum is interpolated from
// it, plus a surcharge of n * max(0, log Z) where Z is the integral of the
// tabulated density. Z <= 1 for any candidate the grids resolve faithfully,
// so there the surface agrees with -dln_loglik to interpolation accuracy;
// candidates with sub-grid spikes (which would otherwise leak unnormalized
// mass into the interpolant) are repelled.
double fit_objective(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                     const FitOptions& opts = {});

// Hyndman-Fan type-2 sample quantile (averages at discontinuities), used by
// the initializer and the calibration percentile grids.
double sample_quantile(std::vector<double> sorted_or_not, double p);

}  // namespace dln

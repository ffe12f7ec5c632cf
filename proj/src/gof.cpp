#include "dln/gof.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "dln/common.hpp"
#include "dln/density.hpp"
#include "dln/random.hpp"

namespace dln {

namespace {

constexpr double kCdfClamp = 1e-12;
constexpr double kLogStatFloor = 1e-12;

std::vector<double> sorted_fitted_cdf(const Eigen::Ref<const Eigen::VectorXd>& data,
                                      const DlnParams& params, const QuadratureOptions& opts) {
    if (data.size() == 0) {
        throw std::domain_error("gof: data must be nonempty");
    }
    std::vector<double> x(data.data(), data.data() + data.size());
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw std::domain_error("gof: data must be finite");
        }
    }
    std::sort(x.begin(), x.end());
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        f[i] = dln_cdf(x[i], params, opts);
    }
    return f;
}

double ks_from_sorted(const std::vector<double>& f) {
    const double n = static_cast<double>(f.size());
    double d = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / n - f[i];
        const double lo = f[i] - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

double ad_from_sorted(const std::vector<double>& f) {
    const std::size_t n = f.size();
    const double nd = static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fi = std::clamp(f[i], kCdfClamp, 1.0 - kCdfClamp);
        const double fr = std::clamp(f[n - 1 - i], kCdfClamp, 1.0 - kCdfClamp);
        acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(fi) + std::log1p(-fr));
    }
    return -nd - acc / nd;
}

double chi2_from_cdf(const std::vector<double>& f, int requested_bins) {
    const std::size_t n = f.size();
    if (n < 50) {
        throw std::domain_error("chi2_statistic: need at least 50 observations");
    }
    const int bins = requested_bins > 0
                         ? requested_bins
                         : std::max(10, static_cast<int>(std::floor(std::pow(
                                            static_cast<double>(n), 0.4))));
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : f) {
        auto j = static_cast<long>(std::floor(v * bins));
        j = std::clamp(j, 0l, static_cast<long>(bins) - 1l);
        counts[static_cast<std::size_t>(j)] += 1.0;
    }
    // Equiprobable cells each carry expected count n/bins; merge consecutive
    // cells until every effective bin expects at least 5.
    const double cell_expected = static_cast<double>(n) / bins;
    std::vector<std::pair<double, double>> merged;  // (observed, expected)
    double obs = 0.0;
    double exp_mass = 0.0;
    for (int j = 0; j < bins; ++j) {
        obs += counts[static_cast<std::size_t>(j)];
        exp_mass += cell_expected;
        if (exp_mass >= 5.0) {
            merged.emplace_back(obs, exp_mass);
            obs = 0.0;
            exp_mass = 0.0;
        }
    }
    if (exp_mass > 0.0) {
        if (!merged.empty()) {
            merged.back().first += obs;
            merged.back().second += exp_mass;
        } else {
            merged.emplace_back(obs, exp_mass);
        }
    }
    if (merged.size() < 3) {
        throw std::domain_error("chi2_statistic: fewer than 3 effective bins after merging");
    }
    double stat = 0.0;
    for (const auto& [o, e] : merged) {
        const double diff = o - e;
        stat += diff * diff / e;
    }
    return stat;
}

}  // namespace

double ks_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                    const QuadratureOptions& opts) {
    return ks_from_sorted(sorted_fitted_cdf(data, params, opts));
}

double chi2_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                      const QuadratureOptions& opts, int n_bins) {
    return chi2_from_cdf(sorted_fitted_cdf(data, params, opts), n_bins);
}

double ad_statistic(const Eigen::Ref<const Eigen::VectorXd>& data, const DlnParams& params,
                    const QuadratureOptions& opts) {
    return ad_from_sorted(sorted_fitted_cdf(data, params, opts));
}

GofStatistics gof_statistics(const Eigen::Ref<const Eigen::VectorXd>& data,
                             const DlnParams& params, const QuadratureOptions& opts) {
    const std::vector<double> f = sorted_fitted_cdf(data, params, opts);
    GofStatistics s;
    s.ks = ks_from_sorted(f);
    s.chi2 = chi2_from_cdf(f, 0);
    s.ad = ad_from_sorted(f);
    s.n_obs = data.size();
    return s;
}

// ---------------------------------------------------------------------------
// Exponential-sum ICDF approximation.

double IcdfFit::operator()(double p) const {
    return a * std::exp(b * p) + c * std::exp(d * p);
}

bool IcdfFit::monotone_nondecreasing() const {
    constexpr int kGrid = 1000;
    double prev = (*this)(0.0);
    for (int i = 1; i <= kGrid; ++i) {
        const double cur = (*this)(100.0 * i / kGrid);
        if (cur < prev) return false;
        prev = cur;
    }
    return true;
}

namespace {

struct LmCandidate {
    Eigen::Vector4d theta;
    double sse = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// With pen_weight > 0 the residual vector gains one entry per point of a
// coarse [0, 100] grid, pen_weight * min(0, curve slope), so the same
// Levenberg-Marquardt loop also serves as a monotonicity-penalized refit.
constexpr int kSlopeGrid = 41;

double expsum_obj(const Eigen::VectorXd& p, const Eigen::VectorXd& y, const Eigen::Vector4d& th,
                  double pen_weight, Eigen::VectorXd& resid) {
    const auto n = p.size();
    resid.resize(pen_weight > 0.0 ? n + kSlopeGrid : n);
    resid.head(n) =
        (th[0] * (th[1] * p.array()).exp() + th[2] * (th[3] * p.array()).exp() - y.array())
            .matrix();
    if (pen_weight > 0.0) {
        for (int j = 0; j < kSlopeGrid; ++j) {
            const double q = 100.0 * j / (kSlopeGrid - 1);
            const double slope =
                th[0] * th[1] * std::exp(th[1] * q) + th[2] * th[3] * std::exp(th[3] * q);
            resid[n + j] = pen_weight * std::min(0.0, slope);
        }
    }
    return resid.squaredNorm();
}

double expsum_sse(const Eigen::VectorXd& p, const Eigen::VectorXd& y, const Eigen::Vector4d& th,
                  Eigen::VectorXd& resid) {
    return expsum_obj(p, y, th, 0.0, resid);
}

// Rates above ~2 overflow exp(rate * 99) territory and never fit percentile
// data; keep the exponents boxed.
Eigen::Vector4d clamp_rates(Eigen::Vector4d th) {
    th[1] = std::clamp(th[1], -2.0, 2.0);
    th[3] = std::clamp(th[3], -2.0, 2.0);
    return th;
}

LmCandidate lm_refine(const Eigen::VectorXd& p, const Eigen::VectorXd& y, Eigen::Vector4d theta,
                      double pen_weight = 0.0) {
    theta = clamp_rates(theta);
    Eigen::VectorXd resid;
    double sse = expsum_obj(p, y, theta, pen_weight, resid);
    double lambda = 1e-3;
    bool converged = false;
    for (int iter = 0; iter < 300; ++iter) {
        const Eigen::ArrayXd eb = (theta[1] * p.array()).exp();
        const Eigen::ArrayXd ed = (theta[3] * p.array()).exp();
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(resid.size(), 4);
        jac.col(0).head(p.size()) = eb.matrix();
        jac.col(1).head(p.size()) = (theta[0] * p.array() * eb).matrix();
        jac.col(2).head(p.size()) = ed.matrix();
        jac.col(3).head(p.size()) = (theta[2] * p.array() * ed).matrix();
        if (pen_weight > 0.0) {
            for (int j = 0; j < kSlopeGrid; ++j) {
                if (resid[p.size() + j] >= 0.0) continue;
                const double q = 100.0 * j / (kSlopeGrid - 1);
                const double ebq = std::exp(theta[1] * q);
                const double edq = std::exp(theta[3] * q);
                jac(p.size() + j, 0) = pen_weight * theta[1] * ebq;
                jac(p.size() + j, 1) = pen_weight * theta[0] * ebq * (1.0 + theta[1] * q);
                jac(p.size() + j, 2) = pen_weight * theta[3] * edq;
                jac(p.size() + j, 3) = pen_weight * theta[2] * edq * (1.0 + theta[3] * q);
            }
        }
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d grad = jac.transpose() * resid;
        bool stepped = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::Matrix4d damped = jtj;
            for (int k = 0; k < 4; ++k) {
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            }
            const Eigen::Vector4d delta = damped.ldlt().solve(-grad);
            const Eigen::Vector4d cand = clamp_rates(theta + delta);
            Eigen::VectorXd cand_resid;
            const double cand_sse = expsum_obj(p, y, cand, pen_weight, cand_resid);
            if (std::isfinite(cand_sse) && cand_sse < sse) {
                const double rel_drop = (sse - cand_sse) / (1.0 + sse);
                theta = cand;
                sse = cand_sse;
                resid.swap(cand_resid);
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel_drop < 1e-12) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e14) break;
        }
        if (!stepped) {
            // No descent direction left at maximal damping: stationary point.
            converged = true;
            break;
        }
        if (converged) break;
    }
    return {theta, sse, converged};
}

// A term a*e^{bp} is nondecreasing exactly when a*b >= 0; restricting both
// terms to that cone makes the whole curve monotone by construction. Scanning
// rate pairs with the coefficients from sign-checked linear least squares
// always yields at least the constant fit (rate 0), so this cannot fail.
LmCandidate monotone_cone_scan(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
    std::vector<double> rates = {0.0};
    for (double m : {0.001, 0.002, 0.005, 0.01,  0.02, 0.035, 0.06, 0.1,
                     0.16,  0.25,  0.4,   0.65,  1.0,  1.5,   2.0}) {
        rates.push_back(m);
        rates.push_back(-m);
    }
    std::vector<Eigen::VectorXd> cols;
    cols.reserve(rates.size());
    for (double r : rates) cols.push_back((r * p.array()).exp().matrix());

    auto feasible = [](double coef, double rate) { return coef * rate >= 0.0; };
    LmCandidate best;
    Eigen::VectorXd resid;
    auto consider = [&](double a, double b, double c, double d) {
        Eigen::Vector4d th;
        th << a, b, c, d;
        const double sse = expsum_sse(p, y, th, resid);
        if (std::isfinite(sse) && sse < best.sse) {
            best = {th, sse, true};
        }
    };

    for (std::size_t i = 0; i < rates.size(); ++i) {
        const double gram_i = cols[i].squaredNorm();
        const double single = cols[i].dot(y) / gram_i;
        if (feasible(single, rates[i])) consider(single, rates[i], 0.0, 0.0);
        for (std::size_t j = i + 1; j < rates.size(); ++j) {
            Eigen::Matrix2d xtx;
            xtx << gram_i, cols[i].dot(cols[j]), cols[i].dot(cols[j]), cols[j].squaredNorm();
            if (std::abs(xtx.determinant()) < 1e-12 * xtx(0, 0) * xtx(1, 1)) continue;
            const Eigen::Vector2d xty(cols[i].dot(y), cols[j].dot(y));
            const Eigen::Vector2d ac = xtx.ldlt().solve(xty);
            if (feasible(ac[0], rates[i]) && feasible(ac[1], rates[j])) {
                consider(ac[0], rates[i], ac[1], rates[j]);
            }
        }
    }
    return best;
}

}  // namespace

IcdfFit fit_icdf_approx(const std::vector<double>& log_stat_samples) {
    if (log_stat_samples.size() < 100) {
        throw std::domain_error("fit_icdf_approx: need at least 100 samples");
    }
    for (double v : log_stat_samples) {
        if (!std::isfinite(v)) {
            throw std::domain_error("fit_icdf_approx: samples must be finite");
        }
    }

    Eigen::VectorXd ps(99);
    Eigen::VectorXd ys(99);
    for (int k = 1; k <= 99; ++k) {
        ps[k - 1] = static_cast<double>(k);
        ys[k - 1] = sample_quantile(log_stat_samples, k / 100.0);
    }

    // Seed (b, d) pairs; (a, c) per pair from the 2x2 linear least squares
    // the model reduces to when the rates are held fixed.
    std::vector<std::pair<double, double>> rate_seeds = {
        {0.1553, -0.0011}, {0.1955, 0.0044}, {0.1350, -0.0060}};
    for (double b : {0.02, 0.05, 0.10, 0.15, 0.20, 0.30}) {
        for (double d : {-0.03, -0.01, -0.003, 0.003, 0.01, 0.03}) {
            rate_seeds.emplace_back(b, d);
        }
    }

    std::vector<LmCandidate> seeds;
    Eigen::VectorXd resid;
    for (const auto& [b, d] : rate_seeds) {
        Eigen::MatrixXd design(99, 2);
        design.col(0) = (b * ps.array()).exp().matrix();
        design.col(1) = (d * ps.array()).exp().matrix();
        const Eigen::Matrix2d xtx = design.transpose() * design;
        if (std::abs(xtx.determinant()) < 1e-20 * xtx(0, 0) * xtx(1, 1)) continue;
        const Eigen::Vector2d ac = xtx.ldlt().solve(design.transpose() * ys);
        Eigen::Vector4d theta;
        theta << ac[0], b, ac[1], d;
        LmCandidate cand;
        cand.theta = theta;
        cand.sse = expsum_sse(ps, ys, theta, resid);
        if (std::isfinite(cand.sse)) seeds.push_back(cand);
    }
    std::stable_sort(seeds.begin(), seeds.end(),
                     [](const LmCandidate& u, const LmCandidate& v) { return u.sse < v.sse; });
    if (seeds.size() > 8) seeds.resize(8);

    std::vector<LmCandidate> refined;
    for (const LmCandidate& s : seeds) {
        refined.push_back(lm_refine(ps, ys, s.theta));
    }
    std::stable_sort(refined.begin(), refined.end(),
                     [](const LmCandidate& u, const LmCandidate& v) { return u.sse < v.sse; });

    const double y_mean = ys.mean();
    const double ss_tot = (ys.array() - y_mean).matrix().squaredNorm();
    auto to_fit = [&](const Eigen::Vector4d& th) {
        IcdfFit fit;
        fit.a = th[0];
        fit.b = th[1];
        fit.c = th[2];
        fit.d = th[3];
        Eigen::VectorXd r;
        fit.r2 = ss_tot > 0.0 ? 1.0 - expsum_sse(ps, ys, th, r) / ss_tot : 1.0;
        fit.percentile_grid.reserve(99);
        for (int k = 0; k < 99; ++k) {
            fit.percentile_grid.emplace_back(ps[k], ys[k]);
        }
        return fit;
    };

    for (const LmCandidate& cand : refined) {
        if (!cand.converged) continue;
        IcdfFit fit = to_fit(cand.theta);
        if (fit.monotone_nondecreasing()) return fit;
    }

    // Percentile curves with a step near the top (a cluster of runaway fitted
    // statistics in the null sample) defeat every free least-squares optimum:
    // each one dips somewhere. Fall back to the best cone-constrained fit and
    // try to improve it under a slope penalty.
    const LmCandidate cone = monotone_cone_scan(ps, ys);
    Eigen::Vector4d best_theta = cone.theta;
    double best_sse = cone.sse;
    std::vector<Eigen::Vector4d> polish_starts = {cone.theta};
    if (!refined.empty()) polish_starts.push_back(refined.front().theta);
    for (const Eigen::Vector4d& start : polish_starts) {
        const LmCandidate polished = lm_refine(ps, ys, start, 200.0);
        const double sse = expsum_sse(ps, ys, polished.theta, resid);
        if (sse < best_sse && to_fit(polished.theta).monotone_nondecreasing()) {
            best_theta = polished.theta;
            best_sse = sse;
        }
    }
    return to_fit(best_theta);
}

double p_value(double stat, const IcdfFit& fit) {
    if (!(stat > 0.0) || !std::isfinite(stat)) {
        throw std::domain_error("p_value: statistic must be positive and finite");
    }
    if (!fit.monotone_nondecreasing()) {
        throw CalibrationError("p_value: ICDF fit is not monotone; calibration record is invalid");
    }
    const double target = std::log(stat);
    if (target <= fit(0.0)) return 1.0;
    if (target >= fit(100.0)) return 0.0;
    double lo = 0.0;
    double hi = 100.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (fit(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double p = 0.5 * (lo + hi);
    return std::clamp(1.0 - p / 100.0, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Null calibration.

namespace {

struct RepOutcome {
    double log_ks = 0.0;
    double log_chi2 = 0.0;
    double log_ad = 0.0;
    int failures = 0;
    bool ok = false;
};

RepOutcome run_calibration_rep(const ParamRegion& region, int k_obs, std::uint64_t master_seed,
                               int rep, const CalibrationOptions& opts) {
    RepOutcome out;
    constexpr int kMaxAttempts = 50;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_stream_seed(master_seed, static_cast<std::uint64_t>(rep),
                                   static_cast<std::uint64_t>(attempt)));
        const Eigen::VectorXd draw = region.draw(rng);
        DlnParams params;
        try {
            params = dln_params_from_draw(draw);
            validate(params);
        } catch (const std::exception&) {
            ++out.failures;
            continue;
        }
        const Eigen::VectorXd sample = dln_sample(params, k_obs, rng.raw());
        try {
            const FitResult fr = fit_mle(sample, opts.fit);
            const GofStatistics stats = gof_statistics(sample, fr.params, opts.fit.quadrature);
            out.log_ks = std::log(std::max(stats.ks, kLogStatFloor));
            out.log_chi2 = std::log(std::max(stats.chi2, kLogStatFloor));
            out.log_ad = std::log(std::max(stats.ad, kLogStatFloor));
            out.ok = true;
            return out;
        } catch (const EstimationError&) {
            ++out.failures;
        } catch (const NonConvergenceError&) {
            ++out.failures;
        } catch (const std::domain_error&) {
            ++out.failures;
        }
    }
    return out;
}

}  // namespace

NullCalibration calibrate_null(const ParamRegion& region, int n_reps, int k_obs,
                               std::uint64_t master_seed, const CalibrationOptions& opts) {
    validate(region);
    if (region.bounds.size() != 5) {
        throw std::domain_error("calibrate_null: region must describe the 5 DLN parameters");
    }
    if (n_reps < 100) {
        throw std::domain_error("calibrate_null: n_reps must be at least 100");
    }
    if (k_obs < 50) {
        throw std::domain_error("calibrate_null: k_obs must be at least 50");
    }
    if (!(opts.max_failure_rate >= 0.0 && opts.max_failure_rate <= 1.0)) {
        throw std::domain_error("calibrate_null: max_failure_rate must lie in [0, 1]");
    }

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(n_reps));
    const int workers = std::clamp(opts.workers, 1, 64);
    if (workers == 1) {
        for (int r = 0; r < n_reps; ++r) {
            outcomes[static_cast<std::size_t>(r)] =
                run_calibration_rep(region, k_obs, master_seed, r, opts);
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= n_reps) return;
                outcomes[static_cast<std::size_t>(r)] =
                    run_calibration_rep(region, k_obs, master_seed, r, opts);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    NullCalibration cal;
    cal.region = region;
    cal.n_reps = n_reps;
    cal.k_obs = k_obs;
    cal.master_seed = master_seed;
    cal.log_ks.reserve(static_cast<std::size_t>(n_reps));
    cal.log_chi2.reserve(static_cast<std::size_t>(n_reps));
    cal.log_ad.reserve(static_cast<std::size_t>(n_reps));
    for (const RepOutcome& out : outcomes) {
        cal.redraws += out.failures;
        if (!out.ok) {
            ++cal.failed_reps;
            continue;
        }
        cal.log_ks.push_back(out.log_ks);
        cal.log_chi2.push_back(out.log_chi2);
        cal.log_ad.push_back(out.log_ad);
    }
    if (cal.failed_reps > opts.max_failure_rate * n_reps) {
        throw CalibrationError("calibrate_null: " + std::to_string(cal.failed_reps) + " of " +
                               std::to_string(n_reps) +
                               " repetitions exhausted their redraw budget (" +
                               std::to_string(cal.redraws) + " failed attempts total)");
    }
    if (static_cast<int>(cal.log_ks.size()) < 100) {
        throw CalibrationError("calibrate_null: only " + std::to_string(cal.log_ks.size()) +
                               " usable repetitions; need at least 100 for percentile fits");
    }

    cal.ks_fit = fit_icdf_approx(cal.log_ks);
    cal.chi2_fit = fit_icdf_approx(cal.log_chi2);
    cal.ad_fit = fit_icdf_approx(cal.log_ad);
    return cal;
}

// ---------------------------------------------------------------------------
// JSON round trip.

namespace {

nlohmann::json icdf_to_json(const std::string& name, const IcdfFit& fit) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [p, y] : fit.percentile_grid) {
        grid.push_back({p, y});
    }
    return {{"name", name}, {"a", fit.a},   {"b", fit.b},
            {"c", fit.c},   {"d", fit.d},   {"r2", fit.r2},
            {"percentiles", std::move(grid)}};
}

IcdfFit icdf_from_json(const nlohmann::json& j) {
    IcdfFit fit;
    fit.a = j.at("a").get<double>();
    fit.b = j.at("b").get<double>();
    fit.c = j.at("c").get<double>();
    fit.d = j.at("d").get<double>();
    fit.r2 = j.at("r2").get<double>();
    for (const auto& pair : j.at("percentiles")) {
        fit.percentile_grid.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
    return fit;
}

}  // namespace

std::string calibration_to_json(const NullCalibration& cal) {
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& [lo, hi] : cal.region.bounds) {
        bounds.push_back({lo, hi});
    }
    const nlohmann::json doc = {
        {"version", 1},
        {"kind", "dln-gof-calibration"},
        {"region",
         {{"name", cal.region.name}, {"labels", cal.region.labels}, {"bounds", std::move(bounds)}}},
        {"n_reps", cal.n_reps},
        {"k_obs", cal.k_obs},
        {"master_seed", cal.master_seed},
        {"redraws", cal.redraws},
        {"failed_reps", cal.failed_reps},
        {"statistics",
         nlohmann::json::array({icdf_to_json("ks", cal.ks_fit), icdf_to_json("chi2", cal.chi2_fit),
                                icdf_to_json("ad", cal.ad_fit)})}};
    return doc.dump(2);
}

NullCalibration calibration_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.at("kind").get<std::string>() != "dln-gof-calibration" ||
        doc.at("version").get<int>() != 1) {
        throw std::domain_error("calibration_from_json: unrecognized document kind or version");
    }
    NullCalibration cal;
    const auto& region = doc.at("region");
    cal.region.name = region.at("name").get<std::string>();
    cal.region.labels = region.at("labels").get<std::vector<std::string>>();
    for (const auto& pair : region.at("bounds")) {
        cal.region.bounds.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
    cal.n_reps = doc.at("n_reps").get<int>();
    cal.k_obs = doc.at("k_obs").get<int>();
    cal.master_seed = doc.at("master_seed").get<std::uint64_t>();
    cal.redraws = doc.at("redraws").get<int>();
    cal.failed_reps = doc.at("failed_reps").get<int>();
    for (const auto& stat : doc.at("statistics")) {
        const std::string name = stat.at("name").get<std::string>();
        if (name == "ks") {
            cal.ks_fit = icdf_from_json(stat);
        } else if (name == "chi2") {
            cal.chi2_fit = icdf_from_json(stat);
        } else if (name == "ad") {
            cal.ad_fit = icdf_from_json(stat);
        } else {
            throw std::domain_error("calibration_from_json: unknown statistic '" + name + "'");
        }
    }
    return cal;
}

}  // namespace dln

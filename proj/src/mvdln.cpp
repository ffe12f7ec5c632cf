#include "dln/mvdln.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dln/common.hpp"
#include "dln/density.hpp"
#include "dln/random.hpp"

namespace dln {

namespace {

constexpr int kMaxDim = 8;
constexpr int kFragileDim = 5;
constexpr double kTailZ = 5.0;  // table reach; leaves ~3e-7 mass to the tail

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// asinh(exp(x)) without overflowing exp.
double asinh_of_exp(double x) {
    if (x > 30.0) return x + std::log(2.0);
    return std::asinh(std::exp(x));
}

std::uint64_t hash_doubles(const double* vals, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(vals);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

struct ScaleDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    double inv_sqrt_det = 0.0;
};

ScaleDecomposition decompose_scale(const Eigen::MatrixXd& scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scale);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("elliptical scale: eigendecomposition failed");
    ScaleDecomposition dec;
    dec.eigenvalues = solver.eigenvalues();
    dec.eigenvectors = solver.eigenvectors();
    const double lam_max = dec.eigenvalues.maxCoeff();
    if (!(dec.eigenvalues.minCoeff() > 0.0) ||
        dec.eigenvalues.minCoeff() <= 1e-14 * std::max(lam_max, 0.0))
        throw std::domain_error("elliptical scale: matrix is not positive definite");
    double log_det = 0.0;
    for (int i = 0; i < dec.eigenvalues.size(); ++i) log_det += std::log(dec.eigenvalues[i]);
    dec.inv_sqrt_det = std::exp(-0.5 * log_det);
    return dec;
}

// Gamma(dim/2) / (2 pi^{dim/2} normalizer); reduces to exactly 1 for dim 1
// with the symmetry normalizer 1/2.
double angular_constant(int dim, double normalizer) {
    return std::tgamma(0.5 * dim) / (2.0 * std::pow(pi, 0.5 * dim) * normalizer);
}

const RadialDensity& cached_radial(const SymDlnParams& baseline, int dim,
                                   const QuadratureOptions& opts) {
    struct Entry {
        std::uint64_t key;
        SymDlnParams baseline;
        int dim;
        QuadratureOptions opts;
        std::unique_ptr<RadialDensity> rad;
    };
    thread_local std::vector<Entry> cache;
    thread_local std::size_t evict_next = 0;

    const double key_vals[8] = {baseline.mu,
                                baseline.sigma,
                                baseline.rho,
                                static_cast<double>(dim),
                                opts.rel_tol,
                                opts.abs_tol,
                                static_cast<double>(opts.max_subdivisions),
                                opts.integration_range_halfwidth};
    const std::uint64_t key = hash_doubles(key_vals, 8);

    auto same = [&](const Entry& e) {
        return e.dim == dim && e.baseline.mu == baseline.mu && e.baseline.sigma == baseline.sigma &&
               e.baseline.rho == baseline.rho && e.opts.rel_tol == opts.rel_tol &&
               e.opts.abs_tol == opts.abs_tol && e.opts.max_subdivisions == opts.max_subdivisions &&
               e.opts.integration_range_halfwidth == opts.integration_range_halfwidth;
    };
    for (auto& e : cache)
        if (e.key == key && same(e)) return *e.rad;

    auto rad = std::make_unique<RadialDensity>(baseline, dim, opts);
    constexpr std::size_t kCapacity = 4;
    if (cache.size() < kCapacity) {
        cache.push_back({key, baseline, dim, opts, std::move(rad)});
        return *cache.back().rad;
    }
    auto& slot = cache[evict_next];
    evict_next = (evict_next + 1) % kCapacity;
    slot = {key, baseline, dim, opts, std::move(rad)};
    return *slot.rad;
}

}  // namespace

void validate(const SymDlnParams& params) {
    if (!std::isfinite(params.mu) || !std::isfinite(params.sigma) || !std::isfinite(params.rho))
        throw std::domain_error("symmetric baseline: parameters must be finite");
    if (!(params.sigma > 0.0)) throw std::domain_error("symmetric baseline: sigma must be positive");
    if (!(std::abs(params.rho) < 1.0))
        throw std::domain_error("symmetric baseline: |rho| must be strictly below 1");
}

void validate(const EllipticalDlnParams& params) {
    validate(params.baseline);
    const int n = params.dim();
    if (n < 1 || n > kMaxDim)
        throw std::domain_error("elliptical parameters: dimension must lie in [1, 8]");
    if (!params.location.allFinite())
        throw std::domain_error("elliptical parameters: location must be finite");
    if (params.scale.rows() != n || params.scale.cols() != n)
        throw std::domain_error("elliptical parameters: scale must be dim x dim");
    if (!params.scale.allFinite())
        throw std::domain_error("elliptical parameters: scale must be finite");
    const double mag = params.scale.cwiseAbs().maxCoeff();
    if ((params.scale - params.scale.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(mag, 1.0))
        throw std::domain_error("elliptical parameters: scale must be symmetric");
    decompose_scale(params.scale);
    if (n >= kFragileDim)
        std::cerr << "note: elliptical dimension " << n
                  << " pushes the radial normalizer across hundreds of log units; "
                     "expect reduced accuracy\n";
}

double radial_normalizer(const SymDlnParams& baseline, int dim, const QuadratureOptions& opts,
                         bool log_domain) {
    validate(baseline);
    validate(opts);
    if (dim < 1 || dim > kMaxDim)
        throw std::domain_error("radial_normalizer: dimension must lie in [1, 8]");

    const DlnParams base = baseline.to_dln();
    const double mu = baseline.mu;
    const double sigma = baseline.sigma;
    // The integrand r^{dim-1} f(r) peaks near log r = mu + dim sigma^2 and
    // decays Gaussian-fast on the log scale; below the distribution's scale
    // f flattens to f(0) and the r^{dim-1} weight takes over.
    const double t_star = mu + dim * sigma * sigma;
    const double t_hi = t_star + 12.0 * sigma;
    const double t_lo = t_star - 11.0 * sigma - 65.0 / dim;

    double value = 0.0;
    if (log_domain) {
        auto g = [&](double t) { return std::exp(dim * t) * dln_pdf(std::exp(t), base, opts); };
        const int n0 = std::clamp(static_cast<int>((t_hi - t_lo) / (0.25 * sigma)), 64, 768);
        const auto res = integrate_adaptive(g, t_lo, t_hi, opts, n0);
        if (!res.converged)
            throw NonConvergenceError("radial_normalizer: log-domain quadrature did not converge",
                                      res.value, res.error_estimate);
        value = res.value;
    } else {
        auto g = [&](double r) { return ipow(r, dim - 1) * dln_pdf(r, base, opts); };
        const double r_peak = std::exp(std::clamp(mu + (dim - 1) * sigma * sigma, -690.0, 690.0));
        const double r_hi = std::exp(std::min(t_hi, 690.0));
        std::vector<double> cuts{0.0, r_peak * 0x1.0p-30};
        while (cuts.back() < r_hi) cuts.push_back(std::min(cuts.back() * 2.0, r_hi));

        // Coarse pass to size the per-segment absolute budget of the fine pass.
        QuadratureOptions coarse = opts;
        coarse.rel_tol = 1e-4;
        coarse.abs_tol = 1e-290;
        coarse.max_subdivisions = 40;
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_adaptive(g, cuts[i], cuts[i + 1], coarse, 4).value;
        if (!(total > 0.0) || !std::isfinite(total))
            throw NonConvergenceError("radial_normalizer: direct quadrature found no mass", total,
                                      std::numeric_limits<double>::infinity());

        QuadratureOptions fine = opts;
        fine.rel_tol = 0.5 * opts.rel_tol;
        fine.abs_tol = opts.rel_tol * total / (4.0 * static_cast<double>(cuts.size()));
        double err = 0.0;
        value = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const auto res = integrate_adaptive(g, cuts[i], cuts[i + 1], fine, 8);
            value += res.value;
            err += res.error_estimate;
        }
        if (err > std::max(opts.abs_tol, opts.rel_tol * std::abs(value)))
            throw NonConvergenceError("radial_normalizer: direct quadrature did not converge", value,
                                      err);
    }
    if (!std::isfinite(value) || !(value > 0.0))
        throw NonConvergenceError("radial_normalizer: integral overflowed or vanished", value,
                                  std::numeric_limits<double>::infinity());
    return value;
}

RadialDensity::RadialDensity(const SymDlnParams& baseline, int dim, const QuadratureOptions& opts)
    : baseline_(baseline), dim_(dim), opts_(opts) {
    validate(baseline);
    validate(opts);
    if (dim < 1 || dim > kMaxDim)
        throw std::domain_error("RadialDensity: dimension must lie in [1, 8]");

    // dim 1: the baseline is symmetric about 0, so the norm's normalizer is
    // exactly half the unit mass.
    normalizer_ = (dim == 1) ? 0.5 : radial_normalizer(baseline, dim, opts, true);

    const DlnDistribution& base = cached_distribution(baseline.to_dln(), opts);
    const double u_hi =
        asinh_of_exp(baseline.mu + dim * baseline.sigma * baseline.sigma + kTailZ * baseline.sigma);

    // 4096-node CDF table in u = asinh(r); interval masses accumulated by
    // adaptive panels over the tabulated density sinh^{dim-1}(u) f_A(u).
    constexpr int kNodes = 4096;
    auto g = [&](double u) { return ipow(std::sinh(u), dim_ - 1) * std::exp(base.log_pdf_asinh(u)); };
    QuadratureOptions cell = opts;
    cell.rel_tol = 1e-9;
    cell.abs_tol = 1e-16;
    cell.max_subdivisions = 25;

    std::vector<double> xs(kNodes), ys(kNodes), slopes(kNodes);
    const double h = u_hi / (kNodes - 1);
    double cum = 0.0;
    xs[0] = 0.0;
    ys[0] = 0.0;
    slopes[0] = g(0.0) / normalizer_;
    for (int j = 1; j < kNodes; ++j) {
        xs[j] = j * h;
        cum += integrate_adaptive(g, xs[j - 1], xs[j], cell, 1).value;
        ys[j] = cum / normalizer_;
        slopes[j] = g(xs[j]) / normalizer_;
    }
    if (!(ys.back() > 0.0) || !std::isfinite(ys.back()))
        throw NonConvergenceError("RadialDensity: CDF table degenerate", ys.back(),
                                  std::numeric_limits<double>::infinity());
    if (ys.back() >= 1.0 - 1e-12) {
        const double scale = (1.0 - 1e-9) / ys.back();
        for (auto& y : ys) y *= scale;
        for (auto& s : slopes) s *= scale;
    }

    r_max_ = std::sinh(u_hi);
    cdf_at_r_max_ = ys.back();
    cdf_interp_ = MonotoneCubic(std::move(xs), std::move(ys), &slopes);
    tail_rate_ = std::max(pdf(r_max_) / (1.0 - cdf_at_r_max_), 1e-300);
}

double RadialDensity::pdf(double r) const {
    if (r < 0.0 || !std::isfinite(r)) return 0.0;
    return ipow(r, dim_ - 1) * dln_pdf(r, baseline_.to_dln(), opts_) / normalizer_;
}

double RadialDensity::cdf(double r) const {
    if (!(r > 0.0)) return 0.0;
    const double u = std::asinh(r);
    if (u < cdf_interp_.back_x()) return std::clamp(cdf_interp_(u), 0.0, 1.0);
    return 1.0 - (1.0 - cdf_at_r_max_) * std::exp(-tail_rate_ * (r - r_max_));
}

double RadialDensity::quantile(double p) const {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("RadialDensity::quantile: p must lie in (0, 1]");
    const double pe = std::min(p, 1.0 - 1e-16);
    if (pe <= cdf_at_r_max_) return std::sinh(cdf_interp_.inverse(pe));
    return r_max_ + std::log((1.0 - cdf_at_r_max_) / (1.0 - pe)) / tail_rate_;
}

double radial_pdf(double r, const RadialDensity& rad) { return rad.pdf(r); }

double mv_pdf(const Eigen::Ref<const Eigen::VectorXd>& z, const EllipticalDlnParams& params,
              const QuadratureOptions& opts) {
    validate(params);
    validate(opts);
    const int n = params.dim();
    if (z.size() != n) throw std::domain_error("mv_pdf: point dimension mismatch");

    const auto dec = decompose_scale(params.scale);
    const Eigen::VectorXd y = dec.eigenvectors.transpose() * (z - params.location);
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += y[i] * y[i] / dec.eigenvalues[i];
    const double r = std::sqrt(r2);

    const RadialDensity& rad = cached_radial(params.baseline, n, opts);
    const double m = angular_constant(n, rad.normalizer());
    return dec.inv_sqrt_det * m * dln_pdf(r, params.baseline.to_dln(), opts);
}

Eigen::MatrixXd mv_sample(const EllipticalDlnParams& params, std::int64_t n, std::uint64_t seed) {
    validate(params);
    if (n < 0) throw std::domain_error("mv_sample: sample size must be nonnegative");
    const int dim = params.dim();

    const auto dec = decompose_scale(params.scale);
    const Eigen::MatrixXd root = dec.eigenvectors *
                                 dec.eigenvalues.cwiseSqrt().asDiagonal() *
                                 dec.eigenvectors.transpose();
    const RadialDensity& rad = cached_radial(params.baseline, dim, QuadratureOptions{});

    // Per row: dim Gaussians for the direction, then one uniform for the
    // radial inverse-CDF draw.
    Rng rng(seed);
    Eigen::MatrixXd out(n, dim);
    Eigen::VectorXd dir(dim);
    for (std::int64_t i = 0; i < n; ++i) {
        double norm = 0.0;
        do {
            for (int k = 0; k < dim; ++k) dir[k] = rng.normal();
            norm = dir.norm();
        } while (!(norm > 1e-12));
        const double r = rad.quantile(rng.uniform());
        out.row(i) = (params.location + root * (dir * (r / norm))).transpose();
    }
    return out;
}

double mv_cdf(const Eigen::Ref<const Eigen::VectorXd>& w, const EllipticalDlnParams& params,
              const QuadratureOptions& opts) {
    validate(params);
    validate(opts);
    const int n = params.dim();
    if (w.size() != n) throw std::domain_error("mv_cdf: point dimension mismatch");

    if (n == 1) {
        const double s = std::sqrt(params.scale(0, 0));
        return dln_cdf((w[0] - params.location[0]) / s, params.baseline.to_dln(), opts);
    }
    if (n > 3)
        throw std::domain_error(
            "mv_cdf: nested quadrature supports dim <= 3; estimate larger-dimension "
            "probabilities by Monte Carlo over mv_sample draws");

    const auto dec = decompose_scale(params.scale);
    const Eigen::MatrixXd linv =
        dec.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * dec.eigenvectors.transpose();
    const RadialDensity& rad = cached_radial(params.baseline, n, opts);
    const double c = dec.inv_sqrt_det * angular_constant(n, rad.normalizer());

    const DlnDistribution& base = cached_distribution(params.baseline.to_dln(), opts);
    auto f_radial = [&base](double r) {
        const double u = std::asinh(r);
        return std::exp(base.log_pdf_asinh(u)) / std::cosh(u);
    };

    // Integration box in u = asinh(z): each coordinate is confined to the
    // reach of the standardized radius times its own scale.
    const double r_sup = std::sinh(base.grid_hi()) * 1.05;
    Eigen::VectorXd u_lo(n), u_hi(n);
    for (int i = 0; i < n; ++i) {
        const double sd = std::sqrt(params.scale(i, i));
        const double z_lo = params.location[i] - sd * r_sup;
        const double z_hi = std::min(w[i], params.location[i] + sd * r_sup);
        if (!(z_hi > z_lo)) return 0.0;
        u_lo[i] = std::asinh(z_lo);
        u_hi[i] = std::asinh(z_hi);
    }

    QuadratureOptions level_opts[3];
    level_opts[0] = opts;
    level_opts[0].rel_tol = std::max(opts.rel_tol, 1e-6);
    level_opts[0].abs_tol = std::max(opts.abs_tol, 1e-10);
    level_opts[1] = opts;
    level_opts[1].rel_tol = std::max(0.1 * opts.rel_tol, 1e-7);
    level_opts[1].abs_tol = 1e-12;
    level_opts[1].max_subdivisions = std::min(opts.max_subdivisions, 120);
    level_opts[2] = level_opts[1];
    level_opts[2].rel_tol = std::max(0.03 * opts.rel_tol, 3e-8);
    level_opts[2].abs_tol = 1e-13;

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    std::function<double(int)> level = [&](int k) -> double {
        auto integrand = [&](double u) {
            z[k] = std::sinh(u);
            const double jac = std::cosh(u);
            if (k + 1 == n) {
                const double r = (linv * (z - params.location)).norm();
                return jac * c * f_radial(r);
            }
            return jac * level(k + 1);
        };
        return integrate_adaptive(integrand, u_lo[k], u_hi[k], level_opts[k], 8).value;
    };

    auto outer_integrand = [&](double u) {
        z[0] = std::sinh(u);
        return std::cosh(u) * level(1);
    };
    const auto res = integrate_adaptive(outer_integrand, u_lo[0], u_hi[0], level_opts[0], 16);
    if (!res.converged)
        throw NonConvergenceError("mv_cdf: outer quadrature did not converge", res.value,
                                  res.error_estimate);
    return std::max(res.value, 0.0);
}

}  // namespace dln

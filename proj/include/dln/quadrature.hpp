#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "dln/common.hpp"

namespace dln {

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    int max_subdivisions = 200;
    // Cap, in the transformed integration coordinate, on how far the window
    // may extend on either side of its initial center.
    double integration_range_halfwidth = 40.0;
};

void validate(const QuadratureOptions& opts);

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod abscissae/weights on [-1,1] and the embedded 7-point
// Gauss weights (positive half; the rule is symmetric).
inline constexpr double gk15_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double g7_w[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelEstimate {
    double kronrod;
    double error;
};

// One GK15 panel over [a,b]; error scaled per the usual QUADPACK recipe.
template <typename F>
PanelEstimate gk15_panel(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double fc = f(c);
    double resk = fc * gk15_wk[7];
    double resg = fc * g7_w[3];
    double resabs = std::abs(resk);
    double fv[15];
    fv[7] = fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * gk15_x[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        const double sum = f1 + f2;
        resk += sum * gk15_wk[j];
        resabs += gk15_wk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) resg += sum * g7_w[j / 2];
    }
    const double mean = 0.5 * resk;
    double resasc = gk15_wk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j)
        resasc += gk15_wk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
    resasc *= half;
    resabs *= half;

    double err = std::abs((resk - resg) * half) * 200.0;
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(err / resasc, 1.5));
    return {resk * half, err};
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a,b]: the interval with the
// largest error estimate is bisected until the total estimate satisfies
// max(abs_tol, rel_tol*|I|) or max_subdivisions is exhausted.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& opts,
                                    int initial_intervals = 1) {
    struct Segment {
        double a, b, value, error;
    };

    QuadratureResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }

    const int n0 = std::max(1, initial_intervals);
    std::vector<Segment> segs;
    segs.reserve(static_cast<size_t>(n0) + static_cast<size_t>(opts.max_subdivisions) + 1);
    const double step = (b - a) / n0;
    for (int i = 0; i < n0; ++i) {
        const double sa = a + i * step;
        const double sb = (i + 1 == n0) ? b : a + (i + 1) * step;
        const auto est = detail::gk15_panel(f, sa, sb);
        segs.push_back({sa, sb, est.kronrod, est.error});
    }

    auto totals = [&segs]() {
        double v = 0.0, e = 0.0;
        for (const auto& s : segs) {
            v += s.value;
            e += s.error;
        }
        return std::pair<double, double>(v, e);
    };

    auto [value, error] = totals();
    int splits = 0;
    while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value)) &&
           splits < opts.max_subdivisions) {
        size_t worst = 0;
        for (size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        const Segment s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) break;  // interval at floating-point resolution
        const auto left = detail::gk15_panel(f, s.a, mid);
        const auto right = detail::gk15_panel(f, mid, s.b);
        segs[worst] = {s.a, mid, left.kronrod, left.error};
        segs.push_back({mid, s.b, right.kronrod, right.error});
        ++splits;
        std::tie(value, error) = totals();
    }

    res.value = value;
    res.error_estimate = error;
    res.subdivisions = splits;
    res.converged = error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
    return res;
}

namespace detail {

// Wynn epsilon-algorithm acceleration of a sequence of partial sums.
// diag_ stores the current counter-diagonal of the epsilon table in place;
// even columns carry the extrapolants.
class EpsilonTable {
public:
    void append(double partial_sum) {
        diag_.push_back(partial_sum);
        const int n = static_cast<int>(diag_.size()) - 1;
        double aux2 = 0.0;
        for (int j = n; j >= 1; --j) {
            const double aux1 = aux2;  // epsilon two columns back, previous diagonal
            aux2 = diag_[j - 1];
            const double diff = diag_[j] - aux2;
            diag_[j - 1] = (std::abs(diff) < 1e-305) ? 1e305 : aux1 + 1.0 / diff;
        }
        const double cand = diag_[n % 2];
        if (std::isfinite(cand) && std::abs(cand) < 1e300) {
            prev_ = last_;
            last_ = cand;
        }
    }

    double value() const { return last_; }
    double change() const { return std::abs(last_ - prev_); }

private:
    std::vector<double> diag_;
    double last_ = std::numeric_limits<double>::quiet_NaN();
    double prev_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace detail

// Integrates f over [x0, +inf) where f oscillates with the given half-period:
// consecutive half-period panels are integrated adaptively (panels can be far
// wider than the envelope's features) and their partial sums are extrapolated
// with the Wynn epsilon algorithm (the QAWF scheme). Panels stop at x_cap
// (pass +inf for none) or once the extrapolant settles over two consecutive
// panels; min_cover delays the convergence test until the panels have crossed
// the integrand's bulk, guarding against a run of near-zero leading panels.
template <typename F>
QuadratureResult integrate_oscillatory(F&& f, double x0, double half_period,
                                       const QuadratureOptions& opts, double x_cap,
                                       int max_panels = 400, double min_cover = 0.0) {
    detail::EpsilonTable eps;
    QuadratureOptions panel_opts = opts;
    panel_opts.abs_tol = std::max(opts.abs_tol * 0.05, 1e-300);
    panel_opts.max_subdivisions = 60;
    double partial = 0.0;
    double best = 0.0;
    double panel_err = 0.0;
    double prev_change = std::numeric_limits<double>::infinity();
    QuadratureResult res;
    for (int k = 0; k < max_panels; ++k) {
        const double a = x0 + k * half_period;
        if (a >= x_cap) {
            // Integrand support exhausted: the plain partial sum is exact here.
            res.value = partial;
            res.error_estimate = panel_err;
            res.converged = true;
            res.subdivisions = k;
            return res;
        }
        const double b = std::min(a + half_period, x_cap);
        const auto p = integrate_adaptive(f, a, b, panel_opts, 1);
        partial += p.value;
        panel_err = std::max(panel_err, p.error_estimate);
        eps.append(partial);
        best = eps.value();
        const double tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(best));
        if (k >= 6 && b >= min_cover && eps.change() < tol && prev_change < 10.0 * tol) {
            res.value = best;
            res.error_estimate = eps.change() + panel_err;
            res.converged = true;
            res.subdivisions = k + 1;
            return res;
        }
        prev_change = eps.change();
    }
    res.value = best;
    res.error_estimate = eps.change() + panel_err;
    res.converged = false;
    res.subdivisions = max_panels;
    return res;
}

}  // namespace dln

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dln {

// Cubic Hermite interpolation on a uniform grid with derivatives estimated
// by 4th-order finite-difference stencils. Intended for smooth functions
// (log densities); no monotonicity constraint.
class HermiteGrid {
public:
    HermiteGrid() = default;

    HermiteGrid(double u0, double h, std::vector<double> values) : u0_(u0), h_(h), f_(std::move(values)) {
        const size_t m = f_.size();
        if (m < 5) throw std::invalid_argument("HermiteGrid: need at least 5 nodes");
        d_.resize(m);
        const double s = 1.0 / (12.0 * h_);
        d_[0] = (-25.0 * f_[0] + 48.0 * f_[1] - 36.0 * f_[2] + 16.0 * f_[3] - 3.0 * f_[4]) * s;
        d_[1] = (-3.0 * f_[0] - 10.0 * f_[1] + 18.0 * f_[2] - 6.0 * f_[3] + f_[4]) * s;
        for (size_t i = 2; i + 2 < m; ++i)
            d_[i] = (8.0 * (f_[i + 1] - f_[i - 1]) + (f_[i - 2] - f_[i + 2])) * s;
        d_[m - 2] = (3.0 * f_[m - 1] + 10.0 * f_[m - 2] - 18.0 * f_[m - 3] + 6.0 * f_[m - 4] - f_[m - 5]) * s;
        d_[m - 1] = (25.0 * f_[m - 1] - 48.0 * f_[m - 2] + 36.0 * f_[m - 3] - 16.0 * f_[m - 4] + 3.0 * f_[m - 5]) * s;
    }

    double front_u() const { return u0_; }
    double back_u() const { return u0_ + h_ * (f_.size() - 1); }
    double step() const { return h_; }
    size_t size() const { return f_.size(); }
    const std::vector<double>& values() const { return f_; }

    // Evaluates the interpolant; clamps to the boundary cubics outside the grid.
    double operator()(double u) const {
        const double t = (u - u0_) / h_;
        ptrdiff_t i = static_cast<ptrdiff_t>(std::floor(t));
        const ptrdiff_t last = static_cast<ptrdiff_t>(f_.size()) - 2;
        if (i < 0) i = 0;
        if (i > last) i = last;
        const double s = t - i;
        const double s2 = s * s;
        const double a = f_[i];
        const double b = d_[i] * h_;
        const double fa1 = f_[i + 1];
        const double b1 = d_[i + 1] * h_;
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s2 * (3.0 - 2.0 * s);
        const double h11 = s2 * (s - 1.0);
        return h00 * a + h10 * b + h01 * fa1 + h11 * b1;
    }

private:
    double u0_ = 0.0;
    double h_ = 1.0;
    std::vector<double> f_;
    std::vector<double> d_;
};

// Monotone cubic Hermite interpolant (Fritsch-Carlson limiter) on an
// arbitrary strictly increasing abscissa grid; used for tabulated CDFs.
class MonotoneCubic {
public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> x, std::vector<double> y, const std::vector<double>* slopes = nullptr)
        : x_(std::move(x)), y_(std::move(y)) {
        const size_t m = x_.size();
        if (m < 2 || y_.size() != m) throw std::invalid_argument("MonotoneCubic: bad grid");
        d_.resize(m);
        std::vector<double> delta(m - 1);
        for (size_t i = 0; i + 1 < m; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        if (slopes) {
            d_ = *slopes;
        } else {
            d_[0] = delta[0];
            d_[m - 1] = delta[m - 2];
            for (size_t i = 1; i + 1 < m; ++i) d_[i] = 0.5 * (delta[i - 1] + delta[i]);
        }
        // Fritsch-Carlson: clamp slopes so the cubic never overshoots.
        for (size_t i = 0; i + 1 < m; ++i) {
            if (delta[i] == 0.0) {
                d_[i] = 0.0;
                d_[i + 1] = 0.0;
                continue;
            }
            const double alpha = d_[i] / delta[i];
            const double beta = d_[i + 1] / delta[i];
            if (alpha < 0.0) d_[i] = 0.0;
            if (beta < 0.0) d_[i + 1] = 0.0;
            const double norm2 = alpha * alpha + beta * beta;
            if (norm2 > 9.0) {
                const double tau = 3.0 / std::sqrt(norm2);
                d_[i] = tau * alpha * delta[i];
                d_[i + 1] = tau * beta * delta[i];
            }
        }
    }

    double front_x() const { return x_.front(); }
    double back_x() const { return x_.back(); }
    double front_y() const { return y_.front(); }
    double back_y() const { return y_.back(); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        const size_t i = locate(x);
        const double hx = x_[i + 1] - x_[i];
        const double s = (x - x_[i]) / hx;
        const double s2 = s * s;
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s2 * (3.0 - 2.0 * s);
        const double h11 = s2 * (s - 1.0);
        return h00 * y_[i] + h10 * d_[i] * hx + h01 * y_[i + 1] + h11 * d_[i + 1] * hx;
    }

    double derivative(double x) const {
        if (x <= x_.front() || x >= x_.back()) return 0.0;
        const size_t i = locate(x);
        const double hx = x_[i + 1] - x_[i];
        const double s = (x - x_[i]) / hx;
        const double dh00 = 6.0 * s * (s - 1.0);
        const double dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        const double dh01 = -dh00;
        const double dh11 = s * (3.0 * s - 2.0);
        return (dh00 * y_[i] + dh01 * y_[i + 1]) / hx + dh10 * d_[i] + dh11 * d_[i + 1];
    }

    // Inverse of a nondecreasing interpolant: smallest x with value(x) = y,
    // solved by bisection refined with guarded Newton steps.
    double inverse(double y) const {
        if (y <= y_.front()) return x_.front();
        if (y >= y_.back()) return x_.back();
        size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const size_t mid = (lo + hi) / 2;
            if (y_[mid] < y)
                lo = mid;
            else
                hi = mid;
        }
        double a = x_[lo], b = x_[hi];
        double x = 0.5 * (a + b);
        for (int it = 0; it < 100; ++it) {
            const double fx = (*this)(x)-y;
            if (std::abs(fx) < 1e-15) return x;
            if (fx > 0.0)
                b = x;
            else
                a = x;
            const double der = derivative(x);
            double next = (der > 0.0) ? x - fx / der : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (std::abs(next - x) < 1e-15 * (1.0 + std::abs(x))) return next;
            x = next;
        }
        return x;
    }

private:
    size_t locate(double x) const {
        size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const size_t mid = (lo + hi) / 2;
            if (x_[mid] <= x)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    std::vector<double> x_, y_, d_;
};

}  // namespace dln

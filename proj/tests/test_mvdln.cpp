#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Core>

#include "dln/density.hpp"
#include "dln/mvdln.hpp"
#include "dln/quadrature.hpp"

using namespace dln;

namespace {

EllipticalDlnParams standard(int dim, const SymDlnParams& base = {0.0, 1.0, 0.0}) {
    EllipticalDlnParams p;
    p.baseline = base;
    p.location = Eigen::VectorXd::Zero(dim);
    p.scale = Eigen::MatrixXd::Identity(dim, dim);
    return p;
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate(SymDlnParams{0.5, 1.2, -0.3}));
    CHECK_THROWS_AS(validate(SymDlnParams{0.0, 0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(validate(SymDlnParams{0.0, 1.0, 1.0}), std::domain_error);

    EllipticalDlnParams p = standard(3);
    CHECK_NOTHROW(validate(p));
    p.scale(0, 1) = 0.2;  // asymmetric scale
    CHECK_THROWS_AS(validate(p), std::domain_error);
    p = standard(3);
    p.scale(0, 0) = -1.0;
    CHECK_THROWS_AS(validate(p), std::domain_error);
    p = standard(9);
    CHECK_THROWS_AS(validate(p), std::domain_error);  // dimension cap
    p = standard(2);
    p.location = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(validate(p), std::domain_error);
}

TEST_CASE("one-dimensional reduction recovers the univariate density") {
    const SymDlnParams base{0.2, 0.9, 0.4};
    const EllipticalDlnParams p = standard(1, base);
    const DlnParams uni = base.to_dln();
    for (double z : {-4.0, -1.1, -0.2, 0.0, 0.6, 2.5, 7.0}) {
        Eigen::VectorXd v(1);
        v << z;
        CHECK(mv_pdf(v, p) == doctest::Approx(dln_pdf(z, uni)).epsilon(1e-9));
    }
}

TEST_CASE("the symmetric one-dimensional normalizer is one half") {
    CHECK(radial_normalizer({0.0, 1.0, 0.0}, 1) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(radial_normalizer({0.7, 1.3, -0.4}, 1) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("the two normalizer routes agree") {
    const SymDlnParams base{0.3, 1.1, 0.2};
    for (int dim : {1, 2, 3, 4}) {
        const double a = radial_normalizer(base, dim, {}, true);
        const double b = radial_normalizer(base, dim, {}, false);
        CHECK(a == doctest::Approx(b).epsilon(1e-8));
        CHECK(a > 0.0);
    }
}

TEST_CASE("radial density integrates to one and round-trips") {
    const SymDlnParams base{0.0, 1.0, 0.0};
    for (int dim : {1, 2, 3}) {
        const RadialDensity rad(base, dim);
        CHECK(rad.dim() == dim);

        QuadratureOptions opts;
        opts.rel_tol = 1e-9;
        opts.max_subdivisions = 400;
        const auto total = integrate_adaptive(
            [&](double u) { return rad.pdf(std::sinh(u)) * std::cosh(u); }, 1e-12, 25.0, opts, 32);
        REQUIRE(total.converged);
        CHECK(total.value == doctest::Approx(1.0).epsilon(1e-6));

        for (double q : {0.05, 0.3, 0.5, 0.8, 0.99}) {
            CHECK(rad.cdf(rad.quantile(q)) == doctest::Approx(q).epsilon(1e-6));
        }

        // pdf definition: r^{dim-1} f_DLN(r) / normalizer
        const double r = 1.3;
        const double expected =
            std::pow(r, dim - 1) * dln_pdf(r, base.to_dln()) / rad.normalizer();
        CHECK(rad.pdf(r) == doctest::Approx(expected).epsilon(1e-10));
        CHECK(radial_pdf(r, rad) == doctest::Approx(rad.pdf(r)).epsilon(1e-12));
    }
}

TEST_CASE("sampling is deterministic and matches the radial law") {
    EllipticalDlnParams p = standard(3);
    p.location << 1.0, -2.0, 0.5;
    const Eigen::MatrixXd a = mv_sample(p, 2000, 44);
    const Eigen::MatrixXd b = mv_sample(p, 2000, 44);
    REQUIRE(a.rows() == 2000);
    REQUIRE(a.cols() == 3);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // center recovery; the radial law has finite variance so the mean converges
    for (int j = 0; j < 3; ++j) {
        const double mean = a.col(j).mean();
        const double sd = std::sqrt((a.col(j).array() - mean).square().mean());
        CHECK(std::abs(mean - p.location[j]) < 4.0 * sd / std::sqrt(2000.0));
    }

    // empirical radial CDF against RadialDensity::cdf
    const RadialDensity rad(p.baseline, 3);
    const Eigen::MatrixXd centered = a.rowwise() - p.location.transpose();
    const Eigen::VectorXd norms = centered.rowwise().norm();
    for (double r : {0.5, 1.5, 4.0}) {
        const double ecdf =
            static_cast<double>((norms.array() <= r).count()) / static_cast<double>(norms.size());
        CHECK(std::abs(ecdf - rad.cdf(r)) < 0.05);
    }
}

TEST_CASE("scale matrices transform the sample") {
    EllipticalDlnParams p = standard(2);
    p.scale << 4.0, 0.0, 0.0, 1.0;
    const Eigen::MatrixXd x = mv_sample(p, 4000, 7);
    // the first coordinate carries twice the spread of the second
    const double s0 = std::sqrt(x.col(0).array().square().mean());
    const double s1 = std::sqrt(x.col(1).array().square().mean());
    CHECK(s0 / s1 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("rectangle probabilities reduce to the univariate CDF") {
    const SymDlnParams base{0.1, 1.0, 0.3};
    const EllipticalDlnParams p = standard(1, base);
    for (double w : {-2.0, 0.0, 1.5}) {
        Eigen::VectorXd v(1);
        v << w;
        CHECK(mv_cdf(v, p) == doctest::Approx(dln_cdf(w, base.to_dln())).epsilon(2e-4));
    }

    const EllipticalDlnParams p4 = standard(4);
    CHECK_THROWS_AS(mv_cdf(Eigen::VectorXd::Zero(4), p4), std::domain_error);
}

TEST_CASE("two-dimensional rectangle probability against Monte Carlo") {
    const EllipticalDlnParams p = standard(2, {0.0, 0.8, 0.2});
    Eigen::VectorXd corner(2);
    corner << 0.7, -0.4;
    const double exact = mv_cdf(corner, p);
    const Eigen::MatrixXd x = mv_sample(p, 200000, 606);
    const double mc = static_cast<double>(
                          ((x.col(0).array() <= corner[0]) && (x.col(1).array() <= corner[1]))
                              .count()) /
                      static_cast<double>(x.rows());
    CHECK(exact == doctest::Approx(mc).epsilon(0.03));
}

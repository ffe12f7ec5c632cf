#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Core>

#include "dln/density.hpp"
#include "dln/moments.hpp"
#include "dln/params.hpp"

using namespace dln;

// Reference values below were computed independently with 30-digit arithmetic
// from E[Yp^a Yn^b] = exp(a mu_p + b mu_n + (a^2 sp^2 + b^2 sn^2 + 2ab rho sp sn)/2).

TEST_CASE("moment oracles at the standard symmetric point") {
    const DlnParams p{0.0, 1.0, 0.0, 1.0, 0.0};
    CHECK(dln_mean(p) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(dln_variance(p) == doctest::Approx(9.34154854094321).epsilon(1e-12));
    CHECK(dln_skewness(p) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(dln_kurtosis(p) == doctest::Approx(58.468196088155763).epsilon(1e-10));
}

TEST_CASE("moment oracles at an asymmetric correlated point") {
    const DlnParams p{0.5, 0.8, -0.3, 0.6, 0.25};
    const CentralMoments m = dln_moments(p);
    CHECK(m.m1 == doctest::Approx(1.3835794008152483).epsilon(1e-12));
    CHECK(m.m2 == doctest::Approx(4.4488856276831878).epsilon(1e-12));
    CHECK(m.m3 == doctest::Approx(3.5553404525416362).epsilon(1e-11));
    CHECK(m.m4 == doctest::Approx(34.183519965155553).epsilon(1e-11));
    CHECK(m.m5 == doctest::Approx(563.56451708655941).epsilon(1e-10));
    CHECK(dln_mean(p) == doctest::Approx(m.m1).epsilon(1e-14));
    CHECK(dln_variance(p) == doctest::Approx(m.m2).epsilon(1e-14));
}

TEST_CASE("mean is invariant to the correlation") {
    for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
        const DlnParams p{1.0, 0.5, 0.0, 0.5, rho};
        CHECK(dln_mean(p) == doctest::Approx(1.9470683958512049).epsilon(1e-13));
    }
}

TEST_CASE("mixed raw moments") {
    CHECK(mixed_raw_moment(1, 1, {0.0, 1.0, 0.0, 1.0, 0.0}) ==
          doctest::Approx(2.7182818284590452).epsilon(1e-13));
    CHECK(mixed_raw_moment(2, 3, {0.3, 0.7, -0.2, 1.1, 0.4}) ==
          doctest::Approx(3916.6814289863886).epsilon(1e-12));
    CHECK(mixed_raw_moment(0, 0, {0.3, 0.7, -0.2, 1.1, 0.4}) == doctest::Approx(1.0));
    CHECK_THROWS(mixed_raw_moment(6, 5, {0.0, 1.0, 0.0, 1.0, 0.0}));
    CHECK_THROWS_AS(mixed_raw_moment(5, 5, {0.0, 30.0, 0.0, 30.0, 0.9}), std::overflow_error);
}

TEST_CASE("skewness and kurtosis agree with the binomial-expansion route") {
    const DlnParams pts[] = {{0.5, 0.8, -0.3, 0.6, 0.25},
                             {-1.0, 1.5, 0.7, 1.1, -0.6},
                             {2.0, 0.4, 1.5, 0.9, 0.8}};
    for (const auto& p : pts) {
        CHECK(dln_skewness(p) == doctest::Approx(dln_central_moment(3, p)).epsilon(1e-10));
        CHECK(dln_kurtosis(p) == doctest::Approx(dln_central_moment(4, p)).epsilon(1e-10));
        CHECK(dln_central_moment(1, p) == 0.0);
        CHECK(dln_variance(p) == doctest::Approx(dln_central_moment(2, p)).epsilon(1e-12));
    }
    CHECK_THROWS(dln_central_moment(0, pts[0]));
    CHECK_THROWS(dln_central_moment(6, pts[0]));
}

TEST_CASE("component moments") {
    const DlnParams p{0.3, 0.7, -0.2, 1.1, 0.4};
    const BvlnMoments bm = bvln_moments(p);
    const double mp = std::exp(0.3 + 0.5 * 0.49);
    const double mn = std::exp(-0.2 + 0.5 * 1.21);
    CHECK(bm.mu_hat[0] == doctest::Approx(mp).epsilon(1e-13));
    CHECK(bm.mu_hat[1] == doctest::Approx(mn).epsilon(1e-13));
    CHECK(bm.sigma_hat(0, 0) == doctest::Approx(mp * mp * (std::exp(0.49) - 1.0)).epsilon(1e-12));
    CHECK(bm.sigma_hat(1, 1) == doctest::Approx(mn * mn * (std::exp(1.21) - 1.0)).epsilon(1e-12));
    CHECK(bm.sigma_hat(0, 1) ==
          doctest::Approx(mp * mn * (std::exp(0.4 * 0.7 * 1.1) - 1.0)).epsilon(1e-12));
    CHECK(bm.sigma_hat(0, 1) == bm.sigma_hat(1, 0));

    // variance through the component covariance: Var(Yp - Yn)
    const double var = bm.sigma_hat(0, 0) + bm.sigma_hat(1, 1) - 2.0 * bm.sigma_hat(0, 1);
    CHECK(dln_variance(p) == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("empirical central moments on a tiny fixed sample") {
    Eigen::VectorXd data(5);
    data << -1.0, 0.0, 1.0, 2.0, -2.0;
    const CentralMoments m = empirical_central_moments(data);
    CHECK(m.m1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(m.m2 == doctest::Approx(2.5).epsilon(1e-14));  // unbiased
    CHECK(m.m3 == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(m.m4 == doctest::Approx(1.7).epsilon(1e-14));  // (34/5) / 2^2, biased ratios
    CHECK(m.m5 == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("empirical moments reject degenerate input") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(10, 3.0);
    CHECK_THROWS(empirical_central_moments(flat));
    Eigen::VectorXd tiny(3);
    tiny << 1.0, 2.0, 3.0;
    CHECK_THROWS(empirical_central_moments(tiny));
}

TEST_CASE("theoretical moments match a large sample") {
    const DlnParams p{0.5, 0.8, -0.3, 0.6, 0.25};
    const Eigen::VectorXd x = dln_sample(p, 200000, 20260815);
    const CentralMoments emp = empirical_central_moments(x);
    const CentralMoments theo = dln_moments(p);

    const double n = static_cast<double>(x.size());
    const double se_mean = std::sqrt(theo.m2 / n);
    CHECK(std::abs(emp.m1 - theo.m1) < 4.0 * se_mean);
    // variance of the sample variance involves the fourth moment
    const double se_var = theo.m2 * std::sqrt((theo.m4 - 1.0) / n);
    CHECK(std::abs(emp.m2 - theo.m2) < 4.0 * se_var);
    // the standardized ratios are heavy-tailed; sanity-band them only
    CHECK(emp.m3 / theo.m3 > 0.5);
    CHECK(emp.m3 / theo.m3 < 2.0);
    CHECK(emp.m4 / theo.m4 > 0.4);
    CHECK(emp.m4 / theo.m4 < 2.5);
}

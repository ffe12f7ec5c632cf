// Acceptance gate: one line per criterion, nonzero exit if any fail.
// Heavy sections print progress to stderr; results go to stdout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dln/density.hpp"
#include "dln/estimate.hpp"
#include "dln/experiments.hpp"
#include "dln/gof.hpp"
#include "dln/growth.hpp"
#include "dln/moments.hpp"
#include "dln/mvdln.hpp"
#include "dln/params.hpp"
#include "dln/quadrature.hpp"
#include "dln/random.hpp"
#include "dln/region.hpp"

using namespace dln;

namespace {

int g_failures = 0;

std::string fmt(double v, int prec = 4) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

void report(int idx, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    if (!pass) {
        ++g_failures;
    }
    std::printf("criterion %2d %-22s %s  %s  (%.0f s)\n", idx, (name + ":").c_str(),
                pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double integrated_mass(const DlnParams& p) {
    QuadratureOptions opts;
    opts.rel_tol = 1e-9;
    opts.abs_tol = 1e-12;
    opts.max_subdivisions = 400;
    const auto g = [&](double u) { return dln_pdf(std::sinh(u), p) * std::cosh(u); };
    return integrate_adaptive(g, -40.0, 40.0, opts, 64).value;
}

DlnParams draw_q(Rng& rng) { return dln_params_from_draw(ParamRegion::q().draw(rng)); }

void criterion_1() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        Rng rng(101);
        double worst = 0.0;
        for (int i = 0; i < 25; ++i) {
            worst = std::max(worst, std::abs(integrated_mass(draw_q(rng)) - 1.0));
        }
        double worst_a = 0.0;
        QuadratureOptions opts;
        opts.rel_tol = 1e-9;
        opts.max_subdivisions = 400;
        for (int i = 0; i < 10; ++i) {
            const DlnParams p = draw_q(rng);
            const auto g = [&](double z) { return adln_pdf(z, p); };
            const double mass = integrate_adaptive(g, -40.0, 40.0, opts, 64).value;
            worst_a = std::max(worst_a, std::abs(mass - 1.0));
        }
        double worst_r = 0.0;
        const SymDlnParams base{0.1, 0.9, 0.15};
        for (int dim = 1; dim <= 4; ++dim) {
            const RadialDensity rad(base, dim);
            const auto g = [&](double u) { return rad.pdf(std::sinh(u)) * std::cosh(u); };
            const double mass = integrate_adaptive(g, std::asinh(1e-12), 40.0, opts, 64).value;
            worst_r = std::max(worst_r, std::abs(mass - 1.0));
        }
        pass = worst <= 1e-6 && worst_a <= 1e-6 && worst_r <= 1e-6;
        detail = "max |mass-1|: dln " + fmt(worst, 3) + ", adln " + fmt(worst_a, 3) +
                 ", radial " + fmt(worst_r, 3) + " (tol 1e-6)";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(1, "normalization", pass, detail, t.seconds());
}

void criterion_2() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        Rng rng(202);
        double worst_z_mean = 0.0;
        double worst_z_var = 0.0;
        double worst_rel = 0.0;
        const int n = 1000000;
        for (int i = 0; i < 50; ++i) {
            const DlnParams p = draw_q(rng);
            const double m1 = dln_mean(p);
            const double v = dln_variance(p);

            // independent binomial-expansion route through mixed raw moments
            const double m1_b = mixed_raw_moment(1, 0, p) - mixed_raw_moment(0, 1, p);
            const double ew2 = mixed_raw_moment(2, 0, p) - 2.0 * mixed_raw_moment(1, 1, p) +
                               mixed_raw_moment(0, 2, p);
            const double v_b = ew2 - m1_b * m1_b;
            worst_rel = std::max(
                worst_rel, std::abs(m1 - m1_b) / std::max({std::abs(m1), std::abs(m1_b), 1e-30}));
            worst_rel = std::max(worst_rel,
                                 std::abs(v - v_b) / std::max({std::abs(v), std::abs(v_b), 1e-30}));

            // exact standard errors of the MC estimators
            const double kurt = dln_kurtosis(p);
            const double se_mean = std::sqrt(v / n);
            const double se_var = v * std::sqrt(std::max(kurt - 1.0, 0.0) / n);

            const Eigen::VectorXd w = dln_sample(p, n, derive_stream_seed(202, 9, i));
            const double mc_mean = w.mean();
            const double mc_var =
                (w.array() - mc_mean).square().sum() / static_cast<double>(n - 1);
            worst_z_mean = std::max(worst_z_mean, std::abs(mc_mean - m1) / se_mean);
            worst_z_var = std::max(worst_z_var, std::abs(mc_var - v) / se_var);
        }
        pass = worst_z_mean <= 3.0 && worst_z_var <= 3.0 && worst_rel <= 1e-10;
        detail = "max |z|: mean " + fmt(worst_z_mean, 3) + ", var " + fmt(worst_z_var, 3) +
                 " (<= 3); route diff " + fmt(worst_rel, 3) + " (<= 1e-10)";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(2, "moment oracle", pass, detail, t.seconds());
}

void criterion_3() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::estimator;
        cfg.n_reps = 500;
        cfg.k_obs = 10000;
        cfg.master_seed = 303;
        cfg.with_mle = false;
        cfg.subsample = false;
        const ResultTable table = run_estimator_experiment(cfg);
        double c[5];
        for (int i = 0; i < 5; ++i) {
            c[i] = table.value_of("corr_asinh_m" + std::to_string(i + 1));
        }
        pass = c[0] >= 0.995 && c[1] >= 0.97 && c[2] >= 0.85 && c[3] > 0.0 && c[4] > 0.0;
        detail = "asinh corr m1..m5: " + fmt(c[0]) + " " + fmt(c[1]) + " " + fmt(c[2]) + " " +
                 fmt(c[3]) + " " + fmt(c[4]) +
                 (c[3] <= std::min({c[0], c[1], c[2], c[4]}) ? " (m4 weakest)" : "");
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(3, "moment correlation", pass, detail, t.seconds());
}

void criterion_4() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::estimator;
        cfg.n_reps = 200;
        cfg.k_obs = 10000;
        cfg.master_seed = 404;
        cfg.with_mle = true;
        cfg.subsample = false;
        cfg.fit.quadrature.rel_tol = 1e-6;
        const ResultTable table = run_estimator_experiment(cfg);

        const char* names[5] = {"mu_p", "sigma_p", "mu_n", "sigma_n", "rho_pn"};
        double min_corr = 1.0;
        for (const char* nm : names) {
            min_corr = std::min(min_corr, table.value_of(std::string("corr_") + nm));
        }
        const double b_mu = std::max(std::abs(table.value_of("bias_mu_p")),
                                     std::abs(table.value_of("bias_mu_n")));
        const double b_sigma = std::max(std::abs(table.value_of("bias_sigma_p")),
                                        std::abs(table.value_of("bias_sigma_n")));
        pass = min_corr >= 0.85 && b_mu <= 0.02 && b_sigma <= 0.01;
        detail = "min corr " + fmt(min_corr) + " (>= 0.85); |bias| mu " + fmt(b_mu, 3) +
                 " (<= 0.02), sigma " + fmt(b_sigma, 3) + " (<= 0.01); failed reps " +
                 fmt(table.value_of("failed_reps"), 2);
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(4, "mle recovery", pass, detail, t.seconds());
}

NullCalibration criterion_5() {
    Timer t;
    bool pass = true;
    std::string detail;
    NullCalibration cal;
    bool have_cal = false;
    try {
        CalibrationOptions opts;
        cal = calibrate_null(ParamRegion::q(), 2000, 5000, 1, opts);
        have_cal = true;
        std::vector<double> ad_stats;
        ad_stats.reserve(cal.log_ad.size());
        for (double v : cal.log_ad) {
            ad_stats.push_back(std::exp(v));
        }
        const double q95 = sample_quantile(ad_stats, 0.95);
        const double lo = 3.110 * 0.85;
        const double hi = 3.110 * 1.15;
        const double r2_min =
            std::min({cal.ks_fit.r2, cal.chi2_fit.r2, cal.ad_fit.r2});
        pass = q95 >= lo && q95 <= hi && r2_min >= 0.98;
        detail = "A-D 95th pct " + fmt(q95) + " (band [" + fmt(lo) + ", " + fmt(hi) +
                 "]); R2 ks/chi2/ad " + fmt(cal.ks_fit.r2) + "/" + fmt(cal.chi2_fit.r2) + "/" +
                 fmt(cal.ad_fit.r2) + " (>= 0.98)";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(5, "ad critical value", pass, detail, t.seconds());
    if (!have_cal) {
        throw std::runtime_error("criterion 5 calibration unavailable for criterion 6");
    }
    return cal;
}

void criterion_6(const NullCalibration& cal) {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        const CalibrationOptions opts;
        const int reps = 500;
        const int k = 5000;
        int rej_ks = 0;
        int rej_chi2 = 0;
        int rej_ad = 0;
        int done = 0;
        for (int r = 0; r < reps; ++r) {
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 20) {
                    throw std::runtime_error("criterion 6: repetition kept failing");
                }
                try {
                    Rng rng(derive_stream_seed(606, 2 * r, attempt));
                    const DlnParams p = draw_q(rng);
                    const Eigen::VectorXd w =
                        dln_sample(p, k, derive_stream_seed(606, 2 * r + 1, attempt));
                    const FitResult fr = fit_mle(w, opts.fit);
                    const GofStatistics s = gof_statistics(w, fr.params, opts.fit.quadrature);
                    rej_ks += p_value(s.ks, cal.ks_fit) < 0.05 ? 1 : 0;
                    rej_chi2 += p_value(s.chi2, cal.chi2_fit) < 0.05 ? 1 : 0;
                    rej_ad += p_value(s.ad, cal.ad_fit) < 0.05 ? 1 : 0;
                    break;
                } catch (const EstimationError&) {
                    continue;
                }
            }
            if (++done % 100 == 0) {
                std::fprintf(stderr, "criterion 6: %d/%d reps\n", done, reps);
            }
        }
        const double f_ks = static_cast<double>(rej_ks) / reps;
        const double f_chi2 = static_cast<double>(rej_chi2) / reps;
        const double f_ad = static_cast<double>(rej_ad) / reps;
        const auto in_band = [](double f) { return f >= 0.02 && f <= 0.08; };
        pass = in_band(f_ks) && in_band(f_chi2) && in_band(f_ad);
        detail = "rejection at nominal 5%: ks " + fmt(f_ks, 3) + ", chi2 " + fmt(f_chi2, 3) +
                 ", ad " + fmt(f_ad, 3) + " (band [0.02, 0.08])";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(6, "null rejection", pass, detail, t.seconds());
}

void criterion_7() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::growth;
        cfg.n_reps = 200;
        cfg.k_obs = 1000;
        cfg.master_seed = 1;
        const ResultTable table = run_growth_experiment(cfg);

        const double cn = table.value_of("corr_normal_all_eps_rel__d_pct");
        const double cl = table.value_of("corr_lognormal_all_eps__d_log");
        const double cd = table.value_of("corr_dln_all_eps_rel__d_dln");
        const bool anchors = std::abs(cn - 0.973) <= 0.03 && std::abs(cl - 0.931) <= 0.05 &&
                             std::abs(cd - 0.944) <= 0.05;
        const bool order_ln =
            cl > table.value_of("corr_lognormal_all_eps__d_pct");
        const bool order_dln = table.value_of("corr_dln_pos_eps_rel__d_dln") >
                               table.value_of("corr_dln_pos_eps_rel__d_log");
        pass = anchors && order_ln && order_dln;
        detail = "normal " + fmt(cn) + " (0.973±0.03), lognormal " + fmt(cl) +
                 " (0.931±0.05), dln " + fmt(cd) + " (0.944±0.05); orderings " +
                 (order_ln ? "ln ok" : "ln VIOLATED") + ", " +
                 (order_dln ? "dln ok" : "dln VIOLATED");
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(7, "growth correlations", pass, detail, t.seconds());
}

void criterion_8() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        const DlnParams sets[5] = {{0.0, 1.0, 0.0, 1.0, 0.0},
                                   {0.5, 0.8, -0.3, 0.6, 0.0},
                                   {1.5, 1.2, 1.5, 1.2, 0.0},
                                   {-1.0, 0.7, 0.4, 1.4, 0.0},
                                   {2.0, 0.6, -2.0, 0.9, 0.0}};
        double worst = 0.0;
        for (const DlnParams& p : sets) {
            for (int j = 1; j <= 20; ++j) {
                const double w = dln_quantile(j / 21.0, p);
                worst = std::max(worst, std::abs(dln_pdf_cf(w, p) - dln_pdf(w, p)));
            }
        }
        pass = worst <= 1e-4;
        detail = "max |cf - direct| = " + fmt(worst, 3) + " (tol 1e-4) at 5 sets x 20 points";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(8, "cf cross-check", pass, detail, t.seconds());
}

void criterion_9() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        const SymDlnParams base{0.2, 1.1, 0.3};
        EllipticalDlnParams ell;
        ell.baseline = base;
        ell.location = Eigen::VectorXd::Zero(1);
        ell.scale = Eigen::MatrixXd::Identity(1, 1);
        const DlnParams uni = base.to_dln();

        double worst = 0.0;
        for (int j = 1; j <= 25; ++j) {
            const double w = dln_quantile(j / 26.0, uni);
            Eigen::VectorXd z(1);
            z << w;
            worst = std::max(worst, std::abs(mv_pdf(z, ell) - dln_pdf(w, uni)));
        }

        const int n = 100000;
        const Eigen::MatrixXd a = mv_sample(ell, n, 91);
        const Eigen::VectorXd b = dln_sample(uni, n, 92);
        std::vector<double> x(a.data(), a.data() + n);
        std::vector<double> y(b.data(), b.data() + n);
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        double d = 0.0;
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < x.size() && j < y.size()) {
            if (x[i] <= y[j]) {
                ++i;
            } else {
                ++j;
            }
            d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / n));
        }
        const double p_ks = kolmogorov_sf(std::sqrt(0.5 * n) * d);
        pass = worst <= 1e-9 && p_ks > 0.01;
        detail = "max pdf diff " + fmt(worst, 3) + " (<= 1e-9); two-sample KS p " + fmt(p_ks, 3) +
                 " (> 0.01)";
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(9, "multivariate reduction", pass, detail, t.seconds());
}

void criterion_10() {
    Timer t;
    bool pass = true;
    std::string detail;
    try {
        ExperimentConfig est;
        est.kind = ExperimentKind::estimator;
        est.n_reps = 10;
        est.k_obs = 300;
        est.master_seed = 7;
        est.fit.rho_starts = {-0.9, 0.0, 0.9};
        est.fit.grid_spacing = 0.12;
        est.fit.quadrature.rel_tol = 1e-6;

        ExperimentConfig growth;
        growth.kind = ExperimentKind::growth;
        growth.n_reps = 10;
        growth.k_obs = 200;
        growth.burn_in = 50;
        growth.master_seed = 7;

        bool est_ok = true;
        bool growth_ok = true;
        bool cal_ok = true;
        std::string est_ref;
        std::string growth_ref;
        std::string cal_ref;
        for (int workers : {1, 4, 8}) {
            est.workers = workers;
            const std::string e = run_estimator_experiment(est).to_csv();
            growth.workers = workers;
            const std::string g = run_growth_experiment(growth).to_csv();
            CalibrationOptions copts;
            copts.workers = workers;
            const std::string c =
                calibration_to_json(calibrate_null(ParamRegion::q(), 100, 120, 7, copts));
            if (workers == 1) {
                est_ref = e;
                growth_ref = g;
                cal_ref = c;
            } else {
                est_ok = est_ok && e == est_ref;
                growth_ok = growth_ok && g == growth_ref;
                cal_ok = cal_ok && c == cal_ref;
            }
        }
        pass = est_ok && growth_ok && cal_ok;
        detail = std::string("byte-identical at 1/4/8 workers: estimator ") +
                 (est_ok ? "yes" : "NO") + ", growth " + (growth_ok ? "yes" : "NO") +
                 ", calibration " + (cal_ok ? "yes" : "NO");
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    report(10, "determinism", pass, detail, t.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance gate: 10 criteria, fixed seeds, single binary\n");
    std::fflush(stdout);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    try {
        const NullCalibration cal = criterion_5();
        criterion_6(cal);
    } catch (const std::exception& e) {
        Timer t;
        report(6, "null rejection", false, std::string("skipped: ") + e.what(), t.seconds());
    }
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "dln/experiments.hpp"
#include "dln/gof.hpp"

using namespace dln;

namespace {

ExperimentConfig tiny_estimator() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::estimator;
    cfg.n_reps = 10;
    cfg.k_obs = 400;
    cfg.master_seed = 5;
    cfg.with_mle = true;
    cfg.subsample = true;
    cfg.fit.rho_starts = {0.0};
    cfg.fit.grid_spacing = 0.15;
    cfg.fit.quadrature.rel_tol = 1e-6;
    return cfg;
}

const ResultTable& tiny_estimator_table() {
    static const ResultTable t = [] {
        ExperimentConfig cfg = tiny_estimator();
        cfg.workers = 1;
        return run_estimator_experiment(cfg);
    }();
    return t;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("experiment kind names round trip") {
    for (ExperimentKind k :
         {ExperimentKind::estimator, ExperimentKind::growth, ExperimentKind::calibrate}) {
        CHECK(experiment_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS(experiment_kind_from_string("unknown"));
}

TEST_CASE("config hash ignores execution details and tracks the science") {
    ExperimentConfig a = tiny_estimator();
    ExperimentConfig b = a;
    b.workers = 8;
    b.out_csv = "/tmp/somewhere.csv";
    b.out_json = "/tmp/else.json";
    CHECK(config_hash(a) == config_hash(b));

    b = a;
    b.n_reps = 5;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.master_seed = 6;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.k_obs = 401;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.fit.grid_spacing = 0.14;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.region = ParamRegion::q_dln();
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("config JSON round trip") {
    const ExperimentConfig a = tiny_estimator();
    const ExperimentConfig b = config_from_json(config_to_json(a));
    CHECK(b.kind == a.kind);
    CHECK(b.n_reps == a.n_reps);
    CHECK(b.k_obs == a.k_obs);
    CHECK(b.master_seed == a.master_seed);
    CHECK(b.with_mle == a.with_mle);
    CHECK(b.subsample == a.subsample);
    CHECK(b.region.name == a.region.name);
    CHECK(b.fit.rho_starts == a.fit.rho_starts);
    CHECK(b.fit.grid_spacing == a.fit.grid_spacing);
    CHECK(config_hash(b) == config_hash(a));
}

TEST_CASE("estimator experiment output is byte-identical across worker counts") {
    const ResultTable& t1 = tiny_estimator_table();
    ExperimentConfig cfg = tiny_estimator();
    cfg.workers = 4;
    const ResultTable t4 = run_estimator_experiment(cfg);
    CHECK(t1.to_csv() == t4.to_csv());
    CHECK(t1.to_json() == t4.to_json());
}

TEST_CASE("estimator experiment carries the documented aggregates") {
    const ResultTable& t = tiny_estimator_table();

    const std::string csv = t.to_csv();
    CHECK(csv.rfind("config_hash,master_seed,rep,quantity,value\n", 0) == 0);

    for (int i = 1; i <= 5; ++i) {
        const std::string m = "m" + std::to_string(i);
        CHECK_NOTHROW(t.value_of("corr_asinh_" + m));
        CHECK_NOTHROW(t.value_of("bias_asinh_" + m));
        CHECK_NOTHROW(t.value_of("iqr_asinh_" + m));
    }
    for (const char* p : {"mu_p", "sigma_p", "mu_n", "sigma_n", "rho_pn"}) {
        CHECK_NOTHROW(t.value_of(std::string("corr_") + p));
        CHECK_NOTHROW(t.value_of(std::string("bias_") + p));
    }
    CHECK(t.value_of("n_reps_ok") + t.value_of("failed_reps") == doctest::Approx(10.0));
    // halved subsample layers exist down to 5 observations
    CHECK(t.value_of("k_s1") == doctest::Approx(200.0));
    CHECK_NOTHROW(t.value_of("corr_asinh_m1_s1"));
    CHECK_THROWS_AS(t.value_of("no_such_quantity"), std::out_of_range);
}

TEST_CASE("growth experiment output is byte-identical across worker counts") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::growth;
    cfg.n_reps = 10;
    cfg.k_obs = 300;
    cfg.burn_in = 50;
    cfg.master_seed = 3;
    cfg.workers = 1;
    const ResultTable t1 = run_growth_experiment(cfg);
    cfg.workers = 3;
    const ResultTable t3 = run_growth_experiment(cfg);
    CHECK(t1.to_csv() == t3.to_csv());

    // pooled correlations for each family and filter
    for (const char* fam : {"normal", "lognormal", "dln"}) {
        for (const char* filt : {"all", "pos", "pos1"}) {
            CHECK_NOTHROW(
                t1.value_of(std::string("records_") + fam + "_" + filt));
        }
    }
    CHECK_NOTHROW(t1.value_of("corr_normal_all_eps_rel__d_pct"));
    CHECK_NOTHROW(t1.value_of("corr_lognormal_all_eps__d_log"));
    CHECK_NOTHROW(t1.value_of("corr_dln_all_eps_rel__d_dln"));

    // the lognormal family keeps its levels positive, so the filtered record
    // count matches the unfiltered one
    CHECK(t1.value_of("records_lognormal_pos") ==
          doctest::Approx(t1.value_of("records_lognormal_all")));
}

TEST_CASE("config validation refuses nonsense") {
    ExperimentConfig cfg = tiny_estimator();
    cfg.n_reps = 5;
    CHECK_THROWS_AS(validate(cfg), std::domain_error);
    cfg = tiny_estimator();
    cfg.k_obs = 10;
    CHECK_THROWS_AS(validate(cfg), std::domain_error);
    cfg = tiny_estimator();
    cfg.workers = 0;
    CHECK_THROWS_AS(validate(cfg), std::domain_error);
    cfg = tiny_estimator();
    cfg.burn_in = -1;
    CHECK_THROWS_AS(validate(cfg), std::domain_error);
}

TEST_CASE("result files are written where requested") {
    ExperimentConfig cfg = tiny_estimator();
    cfg.with_mle = false;
    cfg.subsample = false;
    cfg.out_csv = "/tmp/dln_test_table.csv";
    cfg.out_json = "/tmp/dln_test_table.json";
    const ResultTable t = run_estimator_experiment(cfg);
    write_result_files(t, cfg);
    CHECK(slurp(cfg.out_csv) == t.to_csv());
    CHECK(slurp(cfg.out_json) == t.to_json());
    std::remove(cfg.out_csv.c_str());
    std::remove(cfg.out_json.c_str());
}

TEST_CASE("plot data emission") {
    PlotDataRequest req;
    req.kind = "pdf-panels";
    req.out_dir = "/tmp/dln_test_plots";
    const auto files = emit_plot_data(req);
    CHECK(files.size() >= 2);
    for (const auto& f : files) {
        const std::string text = slurp(f);
        CHECK(text.size() > 100);
        CHECK(text.find('\n') != std::string::npos);
        std::remove(f.c_str());
    }

    PlotDataRequest growth;
    growth.kind = "growth-scatter";
    growth.out_dir = "/tmp/dln_test_plots";
    growth.seed = 2;
    const auto gfiles = emit_plot_data(growth);
    CHECK(!gfiles.empty());
    for (const auto& f : gfiles) {
        CHECK(slurp(f).size() > 50);
        std::remove(f.c_str());
    }

    PlotDataRequest bad;
    bad.kind = "no-such-kind";
    bad.out_dir = "/tmp/dln_test_plots";
    CHECK_THROWS(emit_plot_data(bad));
}

TEST_CASE("icdf-fits plot data reads a calibration record") {
    NullCalibration cal;
    cal.region = ParamRegion::q();
    cal.n_reps = 150;
    cal.k_obs = 300;
    cal.master_seed = 4;
    auto fill = [](IcdfFit& f, double base) {
        f.a = base;
        f.b = 0.012;
        f.c = -base;
        f.d = -0.05;
        f.r2 = 0.99;
        for (int p = 1; p <= 99; ++p) {
            f.percentile_grid.emplace_back(static_cast<double>(p),
                                           base * std::exp(0.012 * p) - base * std::exp(-0.05 * p));
        }
    };
    fill(cal.ks_fit, 0.4);
    fill(cal.chi2_fit, 1.9);
    fill(cal.ad_fit, 0.8);

    const std::string path = "/tmp/dln_test_cal.json";
    {
        std::ofstream out(path);
        out << calibration_to_json(cal);
    }
    PlotDataRequest req;
    req.kind = "icdf-fits";
    req.out_dir = "/tmp/dln_test_plots";
    req.calibration_json = path;
    const auto files = emit_plot_data(req);
    CHECK(files.size() >= 3);
    for (const auto& f : files) {
        CHECK(slurp(f).size() > 50);
        std::remove(f.c_str());
    }
    std::remove(path.c_str());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "dln/density.hpp"
#include "dln/params.hpp"

using namespace dln;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliRun run_cli(const std::string& args) {
    const std::string err_path = "/tmp/dln_cli_stderr.txt";
    const std::string cmd = std::string(DLN_CLI_PATH) + " " + args + " 2>" + err_path;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliRun r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) {
        r.out.append(buf, got);
    }
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

std::vector<std::pair<double, double>> parse_xy_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "x,value");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return rows;
}

const char* kParamsText = "0.3,1.1,0.1,0.9,0.25";

DlnParams cli_params() { return {0.3, 1.1, 0.1, 0.9, 0.25}; }

void write_sample_file(const std::string& path, const DlnParams& p, int n, std::uint64_t seed) {
    const Eigen::VectorXd w = dln_sample(p, n, seed);
    std::ofstream out(path);
    out.precision(17);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        out << w[i] << "\n";
    }
}

}  // namespace

TEST_CASE("pdf, cdf and quantile match the library") {
    const DlnParams p = cli_params();

    CliRun r = run_cli(std::string("pdf --params ") + kParamsText + " --at -2.0,0.5,3.0");
    CHECK(r.exit_code == 0);
    auto rows = parse_xy_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].second == doctest::Approx(dln_pdf(-2.0, p)).epsilon(1e-14));
    CHECK(rows[1].second == doctest::Approx(dln_pdf(0.5, p)).epsilon(1e-14));
    CHECK(rows[2].second == doctest::Approx(dln_pdf(3.0, p)).epsilon(1e-14));

    r = run_cli(std::string("cdf --params ") + kParamsText + " --at -1.0,0.0,2.0");
    CHECK(r.exit_code == 0);
    rows = parse_xy_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].second == doctest::Approx(dln_cdf(0.0, p)).epsilon(1e-12));

    r = run_cli(std::string("quantile --params ") + kParamsText + " --at 0.25,0.5,0.9");
    CHECK(r.exit_code == 0);
    rows = parse_xy_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].second == doctest::Approx(dln_quantile(0.9, p)).epsilon(1e-10));
}

TEST_CASE("json output carries the operation and inputs") {
    const CliRun r =
        run_cli(std::string("pdf --params ") + kParamsText + " --at 1.0,2.0 --format json");
    CHECK(r.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("op") == "pdf");
    CHECK(doc.at("x").size() == 2);
    CHECK(doc.at("value").size() == 2);
    CHECK(doc.at("params").at("sigma_p") == doctest::Approx(1.1));
}

TEST_CASE("sampling is deterministic and matches the library") {
    const std::string args =
        std::string("sample --params ") + kParamsText + " --n 50 --seed 7";
    const CliRun a = run_cli(args);
    const CliRun b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);

    std::istringstream in(a.out);
    std::string line;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            vals.push_back(std::stod(line));
        }
    }
    REQUIRE(vals.size() == 50);
    const Eigen::VectorXd w = dln_sample(cli_params(), 50, 7);
    for (int i = 0; i < 50; ++i) {
        CHECK(vals[static_cast<std::size_t>(i)] == doctest::Approx(w[i]).epsilon(1e-15));
    }
}

TEST_CASE("fit recovers rough parameter scale from a file") {
    const std::string path = "/tmp/dln_cli_fit_input.txt";
    write_sample_file(path, cli_params(), 1200, 99);
    const CliRun r = run_cli("fit --input " + path);
    CHECK(r.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("n_obs") == 1200);
    CHECK(doc.at("params").at("sigma_p").get<double>() > 0.0);
    CHECK(doc.at("neg_loglik").get<double>() <=
          doc.at("initial_neg_loglik").get<double>() + 1e-9);
    CHECK(doc.at("small_sample") == false);

    // parameter vectors sit on a near-flat likelihood ridge at this sample
    // size, so compare laws: the fitted CDF at the true median stays close
    const DlnParams fitted{doc.at("params").at("mu_p").get<double>(),
                           doc.at("params").at("sigma_p").get<double>(),
                           doc.at("params").at("mu_n").get<double>(),
                           doc.at("params").at("sigma_n").get<double>(),
                           doc.at("params").at("rho_pn").get<double>()};
    const double median_true = dln_quantile(0.5, cli_params());
    CHECK(std::abs(dln_cdf(median_true, fitted) - 0.5) < 0.06);
    std::remove(path.c_str());
}

TEST_CASE("calibrate then gof runs end to end") {
    const std::string cal_path = "/tmp/dln_cli_cal.json";
    const CliRun cal = run_cli("calibrate --region Q --reps 100 --obs 120 --seed 1 --out " +
                               cal_path);
    CHECK(cal.exit_code == 0);
    CHECK(cal.err.find("calibrated region=Q") != std::string::npos);
    const nlohmann::json caldoc = nlohmann::json::parse(slurp(cal_path));
    CHECK(caldoc.at("n_reps") == 100);
    CHECK(caldoc.at("k_obs") == 120);

    const std::string data_path = "/tmp/dln_cli_gof_input.txt";
    write_sample_file(data_path, cli_params(), 800, 3);
    const CliRun gof = run_cli("gof --input " + data_path + " --calibration " + cal_path);
    CHECK(gof.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(gof.out);
    for (const char* k : {"ks", "chi2", "ad"}) {
        const double stat = doc.at("statistics").at(k).get<double>();
        const double p = doc.at("p_values").at(k).get<double>();
        CHECK(stat > 0.0);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    std::remove(data_path.c_str());
    std::remove(cal_path.c_str());
}

TEST_CASE("experiment subcommands write result tables") {
    const std::string csv_path = "/tmp/dln_cli_est.csv";
    const CliRun est = run_cli(
        "mc-estimators --no-mle --no-subsample --reps 10 --obs 150 --seed 4 --out " + csv_path);
    CHECK(est.exit_code == 0);
    const std::string csv = slurp(csv_path);
    CHECK(csv.rfind("config_hash,master_seed,rep,quantity,value\n", 0) == 0);
    CHECK(csv.find("corr_asinh_m1") != std::string::npos);
    CHECK(csv.find("corr_mu_p") == std::string::npos);
    std::remove(csv_path.c_str());

    const std::string json_path = "/tmp/dln_cli_growth.json";
    const CliRun growth = run_cli(
        "mc-growth --reps 10 --obs 120 --burn-in 30 --seed 4 --format json --out " + json_path);
    CHECK(growth.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(slurp(json_path));
    CHECK(doc.at("rows").size() > 10);
    std::remove(json_path.c_str());
}

TEST_CASE("plot-data emits figure series") {
    const CliRun r = run_cli("plot-data --kind pdf-panels --out /tmp/dln_cli_plots");
    CHECK(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string line;
    int files = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        ++files;
        CHECK(slurp(line).size() > 100);
        std::remove(line.c_str());
    }
    CHECK(files >= 2);

    const CliRun bad = run_cli("plot-data --kind no-such --out /tmp/dln_cli_plots");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("usage errors exit 2 and runtime errors exit 1") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("pdf --no-such-flag 1").exit_code == 2);

    const CliRun q = run_cli(std::string("quantile --params ") + kParamsText + " --at 1.5");
    CHECK(q.exit_code == 2);
    CHECK(q.err.find("usage error") != std::string::npos);

    const CliRun miss = run_cli("pdf --params 0.3,1.1,0.1,0.9,0.25");
    CHECK(miss.exit_code == 2);

    const CliRun badp = run_cli("pdf --params 0,-1,0,1,0 --at 1.0");
    CHECK(badp.exit_code == 2);
    CHECK(badp.err.find("usage error") != std::string::npos);

    CHECK(run_cli("gof --input /tmp/nope.txt").exit_code == 2);
    CHECK(run_cli("fit --input /tmp/definitely_not_here.txt").exit_code == 1);

    CHECK(run_cli("--help").exit_code == 0);
}

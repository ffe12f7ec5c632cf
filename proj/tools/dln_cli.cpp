#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include "dln/density.hpp"
#include "dln/estimate.hpp"
#include "dln/experiments.hpp"
#include "dln/gof.hpp"
#include "dln/mvdln.hpp"
#include "dln/params.hpp"
#include "dln/region.hpp"

namespace {

// Distinguishes bad invocations (exit 2) from failures at run time (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(field, &pos));
            while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) {
                ++pos;
            }
            if (pos != field.size()) {
                throw std::invalid_argument(field);
            }
        } catch (const std::exception&) {
            throw UsageError("cannot parse '" + field + "' as a number in list '" + text + "'");
        }
    }
    return out;
}

dln::DlnParams parse_params(const std::string& text) {
    const std::vector<double> v = parse_double_list(text);
    if (v.size() != 5) {
        throw UsageError("--params needs 5 comma-separated values (mu_p,sigma_p,mu_n,sigma_n,rho_pn), got " +
                         std::to_string(v.size()));
    }
    const dln::DlnParams params{v[0], v[1], v[2], v[3], v[4]};
    try {
        dln::validate(params);
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    return params;
}

dln::ParamRegion parse_region(const std::string& text) {
    try {
        if (text.rfind("custom:", 0) == 0) {
            const std::vector<double> v = parse_double_list(text.substr(7));
            if (v.size() != 10) {
                throw UsageError(
                    "custom region needs 10 numbers (lo,hi per dln parameter), got " +
                    std::to_string(v.size()));
            }
            dln::ParamRegion region = dln::ParamRegion::q();
            region.name = "custom";
            for (std::size_t i = 0; i < 5; ++i) {
                region.bounds[i] = {v[2 * i], v[2 * i + 1]};
            }
            dln::validate(region);
            return region;
        }
        return dln::ParamRegion::by_name(text);
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
}

// One value per line; a non-numeric first line is treated as a header. Lines
// with several comma-separated fields contribute their first field.
Eigen::VectorXd read_input_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open input file '" + path + "'");
    }
    std::vector<double> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::size_t comma = line.find(',');
        std::string field = comma == std::string::npos ? line : line.substr(0, comma);
        const std::size_t begin = field.find_first_not_of(" \t");
        if (begin == std::string::npos) {
            continue;
        }
        field = field.substr(begin);
        try {
            std::size_t pos = 0;
            const double v = std::stod(field, &pos);
            values.push_back(v);
        } catch (const std::exception&) {
            if (line_no == 1) {
                continue;  // header
            }
            throw std::runtime_error("cannot parse line " + std::to_string(line_no) + " of '" +
                                     path + "': '" + line + "'");
        }
    }
    if (values.empty()) {
        throw std::runtime_error("input file '" + path + "' contains no values");
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
}

// Rows of comma-separated coordinates, all with the same width; a non-numeric
// first line is treated as a header.
std::vector<std::vector<double>> read_input_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open input file '" + path + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        try {
            rows.push_back(parse_double_list(line));
        } catch (const UsageError&) {
            if (line_no == 1) {
                continue;  // header
            }
            throw std::runtime_error("cannot parse line " + std::to_string(line_no) + " of '" +
                                     path + "': '" + line + "'");
        }
    }
    if (rows.empty()) {
        throw std::runtime_error("input file '" + path + "' contains no rows");
    }
    for (const auto& row : rows) {
        if (row.size() != rows.front().size()) {
            throw std::runtime_error("rows of '" + path + "' have inconsistent widths");
        }
    }
    return rows;
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') {
            std::cout << '\n';
        }
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + out_path + "' for writing");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write to '" + out_path + "' failed");
    }
}

nlohmann::json params_to_json(const dln::DlnParams& p) {
    return {{"mu_p", p.mu_p},
            {"sigma_p", p.sigma_p},
            {"mu_n", p.mu_n},
            {"sigma_n", p.sigma_n},
            {"rho_pn", p.rho_pn}};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Shared flag bundle; subcommands bind the subset they use.
struct Flags {
    std::string params_text;
    std::string input;
    std::string format = "csv";
    std::string at_text;
    std::string region_text = "Q";
    std::string out;
    std::string calibration;
    std::string config_path;
    std::string kind;
    std::string baseline_text;
    std::string location_text;
    std::string scale_text;
    std::uint64_t seed = 1;
    std::int64_t n = 10;
    int reps = 0;
    int obs = 0;
    int burn_in = 100;
    int dim = 0;
    int workers = 1;
    bool no_mle = false;
    bool no_subsample = false;
};

void check_format(const std::string& format) {
    if (format != "csv" && format != "json") {
        throw UsageError("--format must be csv or json, got '" + format + "'");
    }
}

// pdf / cdf / quantile share the evaluate-at-points shape.
void run_point_eval(const Flags& f, const std::string& op) {
    check_format(f.format);
    const dln::DlnParams params = parse_params(f.params_text);
    std::vector<double> xs;
    if (!f.at_text.empty()) {
        xs = parse_double_list(f.at_text);
    }
    if (!f.input.empty()) {
        const Eigen::VectorXd file_values = read_input_values(f.input);
        xs.insert(xs.end(), file_values.data(), file_values.data() + file_values.size());
    }
    if (xs.empty()) {
        throw UsageError(op + " needs evaluation points via --at or --input");
    }
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (op == "pdf") {
            ys[i] = dln::dln_pdf(xs[i], params);
        } else if (op == "cdf") {
            ys[i] = dln::dln_cdf(xs[i], params);
        } else {
            if (!(xs[i] > 0.0 && xs[i] < 1.0)) {
                throw UsageError("quantile points must lie strictly inside (0,1), got " +
                                 fmt(xs[i]));
            }
            ys[i] = dln::dln_quantile(xs[i], params);
        }
    }
    if (f.format == "csv") {
        std::string csv = "x,value\n";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            csv += fmt(xs[i]);
            csv += ',';
            csv += fmt(ys[i]);
            csv += '\n';
        }
        write_or_print(f.out, csv);
    } else {
        const nlohmann::json doc = {
            {"op", op}, {"params", params_to_json(params)}, {"x", xs}, {"value", ys}};
        write_or_print(f.out, doc.dump(2));
    }
}

void run_sample(const Flags& f) {
    check_format(f.format);
    const dln::DlnParams params = parse_params(f.params_text);
    if (f.n < 1) {
        throw UsageError("--n must be positive");
    }
    const Eigen::VectorXd draws = dln::dln_sample(params, f.n, f.seed);
    if (f.format == "csv") {
        std::string csv;
        for (Eigen::Index i = 0; i < draws.size(); ++i) {
            csv += fmt(draws[i]);
            csv += '\n';
        }
        write_or_print(f.out, csv);
    } else {
        const nlohmann::json doc = {{"op", "sample"},
                                    {"params", params_to_json(params)},
                                    {"seed", f.seed},
                                    {"sample", std::vector<double>(draws.data(),
                                                                   draws.data() + draws.size())}};
        write_or_print(f.out, doc.dump(2));
    }
}

nlohmann::json fit_result_to_json(const dln::FitResult& fr) {
    nlohmann::json starts = nlohmann::json::array();
    for (const auto& s : fr.per_start) {
        starts.push_back({{"rho_start", s.rho_start},
                          {"converged", s.converged},
                          {"neg_loglik", s.neg_loglik},
                          {"evals", s.evals}});
    }
    return {{"params", params_to_json(fr.params)},
            {"neg_loglik", fr.neg_loglik},
            {"initial_neg_loglik", fr.initial_neg_loglik},
            {"n_obs", fr.n_obs},
            {"small_sample", fr.small_sample},
            {"per_start", std::move(starts)}};
}

void run_fit(const Flags& f) {
    check_format(f.format);
    if (f.input.empty()) {
        throw UsageError("fit needs --input");
    }
    const Eigen::VectorXd data = read_input_values(f.input);
    const dln::FitResult fr = dln::fit_mle(data);
    if (f.format == "csv") {
        const dln::DlnParams& p = fr.params;
        std::string csv = "quantity,value\n";
        csv += "mu_p," + fmt(p.mu_p) + "\n";
        csv += "sigma_p," + fmt(p.sigma_p) + "\n";
        csv += "mu_n," + fmt(p.mu_n) + "\n";
        csv += "sigma_n," + fmt(p.sigma_n) + "\n";
        csv += "rho_pn," + fmt(p.rho_pn) + "\n";
        csv += "neg_loglik," + fmt(fr.neg_loglik) + "\n";
        csv += "n_obs," + std::to_string(fr.n_obs) + "\n";
        write_or_print(f.out, csv);
    } else {
        write_or_print(f.out, fit_result_to_json(fr).dump(2));
    }
}

void run_gof(const Flags& f) {
    check_format(f.format);
    if (f.input.empty()) {
        throw UsageError("gof needs --input");
    }
    if (f.calibration.empty()) {
        throw UsageError("gof needs --calibration (a table produced by `calibrate`)");
    }
    const Eigen::VectorXd data = read_input_values(f.input);
    const dln::NullCalibration cal = dln::calibration_from_json(read_text_file(f.calibration));
    // Same fit profile the calibration used, so the p-values are consistent.
    const dln::CalibrationOptions cal_opts;
    const dln::FitResult fr = dln::fit_mle(data, cal_opts.fit);
    const dln::GofStatistics stats = dln::gof_statistics(data, fr.params, cal_opts.fit.quadrature);
    const double p_ks = dln::p_value(stats.ks, cal.ks_fit);
    const double p_chi2 = dln::p_value(stats.chi2, cal.chi2_fit);
    const double p_ad = dln::p_value(stats.ad, cal.ad_fit);
    if (f.format == "csv") {
        std::string csv = "quantity,value\n";
        csv += "ks," + fmt(stats.ks) + "\n";
        csv += "chi2," + fmt(stats.chi2) + "\n";
        csv += "ad," + fmt(stats.ad) + "\n";
        csv += "p_ks," + fmt(p_ks) + "\n";
        csv += "p_chi2," + fmt(p_chi2) + "\n";
        csv += "p_ad," + fmt(p_ad) + "\n";
        write_or_print(f.out, csv);
    } else {
        const nlohmann::json doc = {
            {"n_obs", stats.n_obs},
            {"params", params_to_json(fr.params)},
            {"statistics", {{"ks", stats.ks}, {"chi2", stats.chi2}, {"ad", stats.ad}}},
            {"p_values", {{"ks", p_ks}, {"chi2", p_chi2}, {"ad", p_ad}}}};
        write_or_print(f.out, doc.dump(2));
    }
}

dln::EllipticalDlnParams parse_elliptical(const Flags& f, int dim_hint) {
    if (f.baseline_text.empty()) {
        throw UsageError("multivariate commands need --baseline mu,sigma,rho");
    }
    const std::vector<double> b = parse_double_list(f.baseline_text);
    if (b.size() != 3) {
        throw UsageError("--baseline needs 3 comma-separated values (mu,sigma,rho)");
    }
    int dim = f.dim;
    std::vector<double> location;
    if (!f.location_text.empty()) {
        location = parse_double_list(f.location_text);
        if (dim == 0) {
            dim = static_cast<int>(location.size());
        }
    }
    if (dim == 0) {
        dim = dim_hint;
    }
    if (dim <= 0) {
        throw UsageError("cannot infer the dimension; pass --dim");
    }
    dln::EllipticalDlnParams params;
    params.baseline = dln::SymDlnParams{b[0], b[1], b[2]};
    params.location = Eigen::VectorXd::Zero(dim);
    if (!location.empty()) {
        if (static_cast<int>(location.size()) != dim) {
            throw UsageError("--location length disagrees with the dimension");
        }
        params.location = Eigen::Map<const Eigen::VectorXd>(location.data(), dim);
    }
    params.scale = Eigen::MatrixXd::Identity(dim, dim);
    if (!f.scale_text.empty()) {
        const std::vector<double> s = parse_double_list(f.scale_text);
        if (static_cast<int>(s.size()) != dim * dim) {
            throw UsageError("--scale needs dim*dim row-major entries");
        }
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                params.scale(i, j) = s[static_cast<std::size_t>(i * dim + j)];
            }
        }
    }
    try {
        dln::validate(params);
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    return params;
}

void run_mv_pdf(const Flags& f) {
    check_format(f.format);
    std::vector<std::vector<double>> points;
    if (!f.at_text.empty()) {
        points.push_back(parse_double_list(f.at_text));
    }
    if (!f.input.empty()) {
        const auto rows = read_input_rows(f.input);
        points.insert(points.end(), rows.begin(), rows.end());
    }
    if (points.empty()) {
        throw UsageError("mv-pdf needs a point via --at or rows via --input");
    }
    const dln::EllipticalDlnParams params =
        parse_elliptical(f, static_cast<int>(points.front().size()));
    const int dim = static_cast<int>(params.dim());
    std::vector<double> values(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (static_cast<int>(points[i].size()) != dim) {
            throw UsageError("evaluation point width disagrees with the dimension");
        }
        const Eigen::Map<const Eigen::VectorXd> z(points[i].data(), dim);
        values[i] = dln::mv_pdf(z, params);
    }
    if (f.format == "csv") {
        std::string csv;
        for (int j = 0; j < dim; ++j) {
            csv += "x" + std::to_string(j + 1) + ",";
        }
        csv += "value\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (int j = 0; j < dim; ++j) {
                csv += fmt(points[i][static_cast<std::size_t>(j)]);
                csv += ',';
            }
            csv += fmt(values[i]);
            csv += '\n';
        }
        write_or_print(f.out, csv);
    } else {
        const nlohmann::json doc = {{"op", "mv-pdf"},
                                    {"dim", dim},
                                    {"points", points},
                                    {"value", values}};
        write_or_print(f.out, doc.dump(2));
    }
}

void run_mv_sample(const Flags& f) {
    check_format(f.format);
    const dln::EllipticalDlnParams params = parse_elliptical(f, 0);
    if (f.n < 1) {
        throw UsageError("--n must be positive");
    }
    const Eigen::MatrixXd draws = dln::mv_sample(params, f.n, f.seed);
    if (f.format == "csv") {
        std::string csv;
        for (Eigen::Index i = 0; i < draws.rows(); ++i) {
            for (Eigen::Index j = 0; j < draws.cols(); ++j) {
                if (j > 0) {
                    csv += ',';
                }
                csv += fmt(draws(i, j));
            }
            csv += '\n';
        }
        write_or_print(f.out, csv);
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < draws.rows(); ++i) {
            std::vector<double> row(draws.cols());
            for (Eigen::Index j = 0; j < draws.cols(); ++j) {
                row[static_cast<std::size_t>(j)] = draws(i, j);
            }
            rows.push_back(row);
        }
        const nlohmann::json doc = {{"op", "mv-sample"}, {"seed", f.seed},
                                    {"sample", std::move(rows)}};
        write_or_print(f.out, doc.dump(2));
    }
}

void run_calibrate(const Flags& f) {
    const dln::ParamRegion region = parse_region(f.region_text);
    const int reps = f.reps > 0 ? f.reps : 2000;
    const int obs = f.obs > 0 ? f.obs : 5000;
    dln::CalibrationOptions opts;
    opts.workers = f.workers;
    const dln::NullCalibration cal = dln::calibrate_null(region, reps, obs, f.seed, opts);
    std::cerr << "calibrated region=" << region.name << " reps=" << reps << " obs=" << obs
              << " redraws=" << cal.redraws << " failed_reps=" << cal.failed_reps
              << " r2(ks)=" << cal.ks_fit.r2 << " r2(chi2)=" << cal.chi2_fit.r2
              << " r2(ad)=" << cal.ad_fit.r2 << "\n";
    write_or_print(f.out, dln::calibration_to_json(cal));
}

dln::ExperimentConfig experiment_config_from_flags(const Flags& f, dln::ExperimentKind kind,
                                                   const CLI::App* cmd) {
    dln::ExperimentConfig cfg;
    if (!f.config_path.empty()) {
        try {
            cfg = dln::config_from_json(read_text_file(f.config_path));
        } catch (const std::domain_error& e) {
            throw UsageError(e.what());
        }
        if (cfg.kind != kind) {
            throw UsageError("config file kind '" + dln::to_string(cfg.kind) +
                             "' does not match this subcommand");
        }
    } else {
        cfg.kind = kind;
        // Desk-scale defaults.
        if (kind == dln::ExperimentKind::estimator) {
            cfg.n_reps = 500;
            cfg.k_obs = 10000;
        } else {
            cfg.n_reps = 200;
            cfg.k_obs = 1000;
        }
    }
    if (cmd->count("--region") > 0) {
        cfg.region = parse_region(f.region_text);
    }
    if (f.reps > 0) {
        cfg.n_reps = f.reps;
    }
    if (f.obs > 0) {
        cfg.k_obs = f.obs;
    }
    if (cmd->count("--seed") > 0) {
        cfg.master_seed = f.seed;
    }
    if (cmd->count("--burn-in") > 0) {
        cfg.burn_in = f.burn_in;
    }
    if (cmd->count("--workers") > 0) {
        cfg.workers = f.workers;
    }
    if (f.no_mle) {
        cfg.with_mle = false;
    }
    if (f.no_subsample) {
        cfg.subsample = false;
    }
    if (!f.out.empty()) {
        if (f.format == "json") {
            cfg.out_json = f.out;
        } else {
            cfg.out_csv = f.out;
        }
    }
    try {
        dln::validate(cfg);
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

void run_experiment(const Flags& f, dln::ExperimentKind kind, const CLI::App* cmd) {
    check_format(f.format);
    const dln::ExperimentConfig cfg = experiment_config_from_flags(f, kind, cmd);
    const dln::ResultTable table = kind == dln::ExperimentKind::estimator
                                       ? dln::run_estimator_experiment(cfg)
                                       : dln::run_growth_experiment(cfg);
    dln::write_result_files(table, cfg);
    if (cfg.out_csv.empty() && cfg.out_json.empty()) {
        std::cout << (f.format == "json" ? table.to_json() : table.to_csv());
    }
}

void run_plot_data(const Flags& f) {
    if (f.kind.empty()) {
        throw UsageError("plot-data needs --kind {pdf-panels|icdf-fits|growth-scatter}");
    }
    if (f.out.empty()) {
        throw UsageError("plot-data needs --out <directory>");
    }
    dln::PlotDataRequest req;
    req.kind = f.kind;
    req.out_dir = f.out;
    req.calibration_json = f.calibration;
    req.seed = f.seed;
    std::vector<std::string> written;
    try {
        written = dln::emit_plot_data(req);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    for (const auto& path : written) {
        std::cout << path << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dln: difference-of-lognormals distribution toolkit"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* cmd, bool with_params) {
        if (with_params) {
            cmd->add_option("--params", f.params_text,
                            "mu_p,sigma_p,mu_n,sigma_n,rho_pn (comma-separated)");
        }
        cmd->add_option("--format", f.format, "Output format: csv or json");
        cmd->add_option("--out", f.out, "Output path (default: stdout)");
        return cmd;
    };

    CLI::App* pdf = add_common(app.add_subcommand("pdf", "Evaluate the density"), true);
    pdf->add_option("--at", f.at_text, "Comma-separated evaluation points");
    pdf->add_option("--input", f.input, "File of evaluation points, one per line");
    pdf->callback([&] { run_point_eval(f, "pdf"); });

    CLI::App* cdf = add_common(app.add_subcommand("cdf", "Evaluate the CDF"), true);
    cdf->add_option("--at", f.at_text, "Comma-separated evaluation points");
    cdf->add_option("--input", f.input, "File of evaluation points, one per line");
    cdf->callback([&] { run_point_eval(f, "cdf"); });

    CLI::App* quantile = add_common(app.add_subcommand("quantile", "Evaluate the inverse CDF"), true);
    quantile->add_option("--at", f.at_text, "Comma-separated probabilities in (0,1)");
    quantile->add_option("--input", f.input, "File of probabilities, one per line");
    quantile->callback([&] { run_point_eval(f, "quantile"); });

    CLI::App* sample = add_common(app.add_subcommand("sample", "Draw iid samples"), true);
    sample->add_option("--n,--obs", f.n, "Number of draws");
    sample->add_option("--seed", f.seed, "RNG seed");
    sample->callback([&] { run_sample(f); });

    CLI::App* fit = add_common(app.add_subcommand("fit", "Maximum-likelihood fit"), false);
    fit->add_option("--input", f.input, "Data file, one value per line")->required();
    fit->callback([&] {
        if (fit->count("--format") == 0) {
            f.format = "json";
        }
        run_fit(f);
    });

    CLI::App* gof = add_common(app.add_subcommand("gof", "Fit and test goodness of fit"), false);
    gof->add_option("--input", f.input, "Data file, one value per line")->required();
    gof->add_option("--calibration", f.calibration, "Calibration table JSON")->required();
    gof->callback([&] {
        if (gof->count("--format") == 0) {
            f.format = "json";
        }
        run_gof(f);
    });

    CLI::App* mv_pdf = add_common(app.add_subcommand("mv-pdf", "Evaluate the elliptical density"), false);
    mv_pdf->add_option("--baseline", f.baseline_text, "mu,sigma,rho of the symmetric baseline");
    mv_pdf->add_option("--dim", f.dim, "Dimension");
    mv_pdf->add_option("--location", f.location_text, "Location vector (comma-separated)");
    mv_pdf->add_option("--scale", f.scale_text, "Scale matrix, row-major (comma-separated)");
    mv_pdf->add_option("--at", f.at_text, "One evaluation point (comma-separated coordinates)");
    mv_pdf->add_option("--input", f.input, "File of points, one comma-separated row per point");
    mv_pdf->callback([&] { run_mv_pdf(f); });

    CLI::App* mv_sample = add_common(app.add_subcommand("mv-sample", "Draw from the elliptical extension"), false);
    mv_sample->add_option("--baseline", f.baseline_text, "mu,sigma,rho of the symmetric baseline");
    mv_sample->add_option("--dim", f.dim, "Dimension");
    mv_sample->add_option("--location", f.location_text, "Location vector");
    mv_sample->add_option("--scale", f.scale_text, "Scale matrix, row-major");
    mv_sample->add_option("--n,--obs", f.n, "Number of draws");
    mv_sample->add_option("--seed", f.seed, "RNG seed");
    mv_sample->callback([&] { run_mv_sample(f); });

    CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate GOF null distributions");
    calibrate->add_option("--region", f.region_text, "Q, Q_N, Q_LN, Q_DLN, or custom:<10 bounds>");
    calibrate->add_option("--reps", f.reps, "Repetitions (default 2000)");
    calibrate->add_option("--obs", f.obs, "Observations per repetition (default 5000)");
    calibrate->add_option("--seed", f.seed, "Master seed");
    calibrate->add_option("--workers", f.workers, "Worker threads");
    calibrate->add_option("--out", f.out, "Calibration JSON path (default: stdout)");
    calibrate->callback([&] { run_calibrate(f); });

    auto add_experiment_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", f.config_path, "Experiment config JSON file");
        cmd->add_option("--region", f.region_text, "Parameter region preset or custom:<bounds>");
        cmd->add_option("--reps", f.reps, "Repetitions");
        cmd->add_option("--obs", f.obs, "Observations (or periods) per repetition");
        cmd->add_option("--seed", f.seed, "Master seed");
        cmd->add_option("--burn-in", f.burn_in, "Burn-in periods (growth)");
        cmd->add_option("--workers", f.workers, "Worker threads");
        cmd->add_option("--format", f.format, "csv or json");
        cmd->add_option("--out", f.out, "Result table path (format chosen by --format)");
        return cmd;
    };

    CLI::App* mc_est = add_experiment_flags(
        app.add_subcommand("mc-estimators", "Moment/MLE estimator experiment"));
    mc_est->add_flag("--no-mle", f.no_mle, "Skip the MLE/GOF stage");
    mc_est->add_flag("--no-subsample", f.no_subsample, "Skip the nested subsample curves");
    mc_est->callback([&] { run_experiment(f, dln::ExperimentKind::estimator, mc_est); });

    CLI::App* mc_growth =
        add_experiment_flags(app.add_subcommand("mc-growth", "Growth-measure experiment"));
    mc_growth->callback([&] { run_experiment(f, dln::ExperimentKind::growth, mc_growth); });

    CLI::App* plot = app.add_subcommand("plot-data", "Emit figure-ready CSV series");
    plot->add_option("--kind", f.kind, "pdf-panels, icdf-fits, or growth-scatter");
    plot->add_option("--out", f.out, "Output directory");
    plot->add_option("--calibration", f.calibration, "Calibration JSON (icdf-fits)");
    plot->add_option("--seed", f.seed, "Simulation seed (growth-scatter)");
    plot->callback([&] { run_plot_data(f); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

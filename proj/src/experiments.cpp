#include "dln/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dln/common.hpp"
#include "dln/density.hpp"
#include "dln/gof.hpp"
#include "dln/growth.hpp"
#include "dln/moments.hpp"
#include "dln/random.hpp"

namespace dln {

namespace {

constexpr int kMaxAttempts = 50;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Pearson correlation over the pairwise-complete (both finite) entries.
double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double n = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isfinite(x[i]) && std::isfinite(y[i])) {
            n += 1.0;
            sx += x[i];
            sy += y[i];
        }
    }
    if (n < 2.0) {
        return kNaN;
    }
    const double mx = sx / n;
    const double my = sy / n;
    double cxy = 0.0;
    double cxx = 0.0;
    double cyy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isfinite(x[i]) && std::isfinite(y[i])) {
            cxy += (x[i] - mx) * (y[i] - my);
            cxx += (x[i] - mx) * (x[i] - mx);
            cyy += (y[i] - my) * (y[i] - my);
        }
    }
    const double denom = std::sqrt(cxx * cyy);
    return denom > 0.0 ? cxy / denom : kNaN;
}

std::vector<double> finite_only(const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const double x : v) {
        if (std::isfinite(x)) {
            out.push_back(x);
        }
    }
    return out;
}

double median_of(const std::vector<double>& v) {
    const std::vector<double> f = finite_only(v);
    return f.empty() ? kNaN : sample_quantile(f, 0.5);
}

double iqr_of(const std::vector<double>& v) {
    const std::vector<double> f = finite_only(v);
    return f.empty() ? kNaN : sample_quantile(f, 0.75) - sample_quantile(f, 0.25);
}

// Runs body(rep) for rep in [0, n_reps) on `workers` threads. Results must be
// written to rep-indexed slots; the first exception (by repetition index) is
// rethrown after the join, so a failure is reported identically at any worker
// count.
void parallel_for_reps(int n_reps, int workers, const std::function<void(int)>& body) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_reps));
    if (workers <= 1) {
        for (int r = 0; r < n_reps; ++r) {
            try {
                body(r);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int n_threads = std::min(workers, n_reps);
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < n_reps; r = next.fetch_add(1)) {
                    try {
                        body(r);
                    } catch (...) {
                        errors[static_cast<std::size_t>(r)] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
}

std::string canonical_config_text(const ExperimentConfig& c) {
    std::ostringstream os;
    os << to_string(c.kind) << '|' << c.region.name;
    for (std::size_t i = 0; i < c.region.bounds.size(); ++i) {
        os << '|' << c.region.labels[i] << ':' << format_value(c.region.bounds[i].first) << ','
           << format_value(c.region.bounds[i].second);
    }
    os << '|' << c.n_reps << '|' << c.k_obs << '|' << c.burn_in << '|' << c.master_seed << '|'
       << c.subsample << '|' << c.with_mle << "|fit:";
    for (const double s : c.fit.rho_starts) {
        os << format_value(s) << ',';
    }
    os << '|' << c.fit.max_evals << '|' << format_value(c.fit.param_tol) << '|'
       << format_value(c.fit.loglik_tol) << '|' << format_value(c.fit.grid_spacing) << '|'
       << format_value(c.fit.quadrature.rel_tol) << '|' << format_value(c.fit.quadrature.abs_tol)
       << '|' << c.fit.quadrature.max_subdivisions << '|'
       << format_value(c.fit.quadrature.integration_range_halfwidth);
    return os.str();
}

nlohmann::json fit_options_to_json(const FitOptions& fit) {
    return {{"rho_starts", fit.rho_starts},
            {"max_evals", fit.max_evals},
            {"param_tol", fit.param_tol},
            {"loglik_tol", fit.loglik_tol},
            {"grid_spacing", fit.grid_spacing},
            {"quadrature",
             {{"rel_tol", fit.quadrature.rel_tol},
              {"abs_tol", fit.quadrature.abs_tol},
              {"max_subdivisions", fit.quadrature.max_subdivisions},
              {"integration_range_halfwidth", fit.quadrature.integration_range_halfwidth}}}};
}

FitOptions fit_options_from_json(const nlohmann::json& j) {
    FitOptions fit;
    fit.rho_starts = j.value("rho_starts", fit.rho_starts);
    fit.max_evals = j.value("max_evals", fit.max_evals);
    fit.param_tol = j.value("param_tol", fit.param_tol);
    fit.loglik_tol = j.value("loglik_tol", fit.loglik_tol);
    fit.grid_spacing = j.value("grid_spacing", fit.grid_spacing);
    if (j.contains("quadrature")) {
        const auto& q = j.at("quadrature");
        fit.quadrature.rel_tol = q.value("rel_tol", fit.quadrature.rel_tol);
        fit.quadrature.abs_tol = q.value("abs_tol", fit.quadrature.abs_tol);
        fit.quadrature.max_subdivisions = q.value("max_subdivisions", fit.quadrature.max_subdivisions);
        fit.quadrature.integration_range_halfwidth =
            q.value("integration_range_halfwidth", fit.quadrature.integration_range_halfwidth);
    }
    return fit;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::estimator:
            return "estimator";
        case ExperimentKind::growth:
            return "growth";
        case ExperimentKind::calibrate:
            return "calibrate";
    }
    throw std::logic_error("to_string: unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "estimator") {
        return ExperimentKind::estimator;
    }
    if (name == "growth") {
        return ExperimentKind::growth;
    }
    if (name == "calibrate") {
        return ExperimentKind::calibrate;
    }
    throw std::domain_error("unknown experiment kind '" + name + "'");
}

void validate(const ExperimentConfig& config) {
    validate(config.region);
    validate(config.fit);
    if (config.n_reps < 10) {
        throw std::domain_error("ExperimentConfig: n_reps must be at least 10");
    }
    if (config.k_obs < 100) {
        throw std::domain_error("ExperimentConfig: k_obs must be at least 100");
    }
    if (config.burn_in < 0) {
        throw std::domain_error("ExperimentConfig: burn_in must be nonnegative");
    }
    if (config.workers < 1) {
        throw std::domain_error("ExperimentConfig: workers must be at least 1");
    }
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config_text(config))));
    return buf;
}

std::string config_to_json(const ExperimentConfig& config) {
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& [lo, hi] : config.region.bounds) {
        bounds.push_back({lo, hi});
    }
    const nlohmann::json doc = {
        {"kind", to_string(config.kind)},
        {"region",
         {{"name", config.region.name},
          {"labels", config.region.labels},
          {"bounds", std::move(bounds)}}},
        {"n_reps", config.n_reps},
        {"k_obs", config.k_obs},
        {"burn_in", config.burn_in},
        {"master_seed", config.master_seed},
        {"subsample", config.subsample},
        {"with_mle", config.with_mle},
        {"workers", config.workers},
        {"out_csv", config.out_csv},
        {"out_json", config.out_json},
        {"fit", fit_options_to_json(config.fit)}};
    return doc.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    ExperimentConfig config;
    config.kind = experiment_kind_from_string(doc.value("kind", std::string("estimator")));
    if (doc.contains("region")) {
        const auto& region = doc.at("region");
        if (region.is_string()) {
            config.region = ParamRegion::by_name(region.get<std::string>());
        } else {
            config.region.name = region.at("name").get<std::string>();
            config.region.labels = region.at("labels").get<std::vector<std::string>>();
            config.region.bounds.clear();
            for (const auto& pair : region.at("bounds")) {
                config.region.bounds.emplace_back(pair.at(0).get<double>(),
                                                  pair.at(1).get<double>());
            }
        }
    }
    config.n_reps = doc.value("n_reps", config.n_reps);
    config.k_obs = doc.value("k_obs", config.k_obs);
    config.burn_in = doc.value("burn_in", config.burn_in);
    config.master_seed = doc.value("master_seed", config.master_seed);
    config.subsample = doc.value("subsample", config.subsample);
    config.with_mle = doc.value("with_mle", config.with_mle);
    config.workers = doc.value("workers", config.workers);
    config.out_csv = doc.value("out_csv", config.out_csv);
    config.out_json = doc.value("out_json", config.out_json);
    if (doc.contains("fit")) {
        config.fit = fit_options_from_json(doc.at("fit"));
    }
    validate(config);
    return config;
}

std::string ResultTable::to_csv() const {
    std::string out = "config_hash,master_seed,rep,quantity,value\n";
    for (const auto& row : rows) {
        out += config_hash;
        out += ',';
        out += std::to_string(master_seed);
        out += ',';
        out += std::to_string(row.rep);
        out += ',';
        out += row.quantity;
        out += ',';
        out += format_value(row.value);
        out += '\n';
    }
    return out;
}

std::string ResultTable::to_json() const {
    nlohmann::json json_rows = nlohmann::json::array();
    for (const auto& row : rows) {
        json_rows.push_back({{"rep", row.rep}, {"quantity", row.quantity}, {"value", row.value}});
    }
    const nlohmann::json doc = {{"schema", "dln-mc-result/1"},
                                {"config_hash", config_hash},
                                {"master_seed", master_seed},
                                {"rows", std::move(json_rows)}};
    return doc.dump(2);
}

double ResultTable::value_of(const std::string& quantity) const {
    for (const auto& row : rows) {
        if (row.rep == -1 && row.quantity == quantity) {
            return row.value;
        }
    }
    throw std::out_of_range("ResultTable: no aggregate row named '" + quantity + "'");
}

// ---------------------------------------------------------------------------
// Estimator experiment.

namespace {

const std::array<const char*, 5> kParamNames = {"mu_p", "sigma_p", "mu_n", "sigma_n", "rho_pn"};

struct EstRepOutcome {
    bool ok = false;
    bool fitted = false;
    int redraws = 0;
    std::array<double, 5> theo{};
    std::array<double, 5> emp{};
    std::array<double, 5> true_p{};
    std::array<double, 5> fit_p{};
    GofStatistics gof{};
    // (s, subsample moments); sizes are k_obs >> s while at least 5.
    std::vector<std::pair<int, std::array<double, 5>>> sub;
};

std::array<double, 5> to_array(const CentralMoments& m) {
    return {m.m1, m.m2, m.m3, m.m4, m.m5};
}

std::array<double, 5> params_to_array(const DlnParams& p) {
    return {p.mu_p, p.sigma_p, p.mu_n, p.sigma_n, p.rho_pn};
}

EstRepOutcome run_estimator_rep(const ExperimentConfig& cfg, int rep) {
    EstRepOutcome out;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_stream_seed(cfg.master_seed, static_cast<std::uint64_t>(rep),
                                   static_cast<std::uint64_t>(attempt)));
        const Eigen::VectorXd draw = cfg.region.draw(rng);
        const DlnParams truth = dln_params_from_draw(draw);
        const Eigen::VectorXd data = dln_sample(truth, cfg.k_obs, rng.raw());
        try {
            EstRepOutcome candidate;
            candidate.theo = to_array(dln_moments(truth));
            candidate.emp = to_array(empirical_central_moments(data));
            candidate.true_p = params_to_array(truth);
            if (cfg.subsample) {
                for (int s = 1; s <= 11; ++s) {
                    const int n_s = cfg.k_obs >> s;
                    if (n_s < 5) {
                        break;
                    }
                    candidate.sub.emplace_back(
                        s, to_array(empirical_central_moments(data.head(n_s))));
                }
            }
            if (cfg.with_mle) {
                const FitResult fr = fit_mle(data, cfg.fit);
                candidate.fit_p = params_to_array(fr.params);
                candidate.gof = gof_statistics(data, fr.params, cfg.fit.quadrature);
                candidate.fitted = true;
            }
            candidate.ok = true;
            candidate.redraws = attempt;
            return candidate;
        } catch (const EstimationError&) {
        } catch (const NonConvergenceError&) {
        } catch (const std::domain_error&) {
        }
        ++out.redraws;
    }
    return out;
}

void append_moment_metrics(ResultTable& table, const std::vector<std::array<double, 5>>& theo,
                           const std::vector<std::array<double, 5>>& emp,
                           const std::string& suffix) {
    for (int i = 0; i < 5; ++i) {
        std::vector<double> x;
        std::vector<double> y;
        std::vector<double> diff;
        x.reserve(theo.size());
        y.reserve(theo.size());
        diff.reserve(theo.size());
        for (std::size_t r = 0; r < theo.size(); ++r) {
            const double a = std::asinh(theo[r][static_cast<std::size_t>(i)]);
            const double b = std::asinh(emp[r][static_cast<std::size_t>(i)]);
            x.push_back(a);
            y.push_back(b);
            diff.push_back(b - a);
        }
        const std::string m = "m" + std::to_string(i + 1) + suffix;
        table.rows.push_back({-1, "corr_asinh_" + m, pearson(x, y)});
        table.rows.push_back({-1, "bias_asinh_" + m, median_of(diff)});
        table.rows.push_back({-1, "iqr_asinh_" + m, iqr_of(diff)});
    }
}

}  // namespace

ResultTable run_estimator_experiment(const ExperimentConfig& config) {
    validate(config);
    if (config.kind != ExperimentKind::estimator) {
        throw std::invalid_argument("run_estimator_experiment: config kind is not 'estimator'");
    }

    std::vector<EstRepOutcome> outcomes(static_cast<std::size_t>(config.n_reps));
    parallel_for_reps(config.n_reps, config.workers,
                      [&](int rep) { outcomes[static_cast<std::size_t>(rep)] = run_estimator_rep(config, rep); });

    ResultTable table;
    table.config_hash = config_hash(config);
    table.master_seed = config.master_seed;

    int failed_reps = 0;
    int redraws_total = 0;
    for (int rep = 0; rep < config.n_reps; ++rep) {
        const EstRepOutcome& out = outcomes[static_cast<std::size_t>(rep)];
        redraws_total += out.redraws;
        if (!out.ok) {
            ++failed_reps;
            table.rows.push_back({rep, "failed", 1.0});
            continue;
        }
        table.rows.push_back({rep, "redraws", static_cast<double>(out.redraws)});
        for (int i = 0; i < 5; ++i) {
            table.rows.push_back(
                {rep, "theo_m" + std::to_string(i + 1), out.theo[static_cast<std::size_t>(i)]});
        }
        for (int i = 0; i < 5; ++i) {
            table.rows.push_back(
                {rep, "emp_m" + std::to_string(i + 1), out.emp[static_cast<std::size_t>(i)]});
        }
        for (const auto& [s, moments] : out.sub) {
            for (int i = 0; i < 5; ++i) {
                table.rows.push_back({rep,
                                      "emp_m" + std::to_string(i + 1) + "_s" + std::to_string(s),
                                      moments[static_cast<std::size_t>(i)]});
            }
        }
        if (out.fitted) {
            for (int j = 0; j < 5; ++j) {
                table.rows.push_back({rep, std::string("true_") + kParamNames[static_cast<std::size_t>(j)],
                                      out.true_p[static_cast<std::size_t>(j)]});
            }
            for (int j = 0; j < 5; ++j) {
                table.rows.push_back({rep, std::string("fit_") + kParamNames[static_cast<std::size_t>(j)],
                                      out.fit_p[static_cast<std::size_t>(j)]});
            }
            table.rows.push_back({rep, "gof_ks", out.gof.ks});
            table.rows.push_back({rep, "gof_chi2", out.gof.chi2});
            table.rows.push_back({rep, "gof_ad", out.gof.ad});
        }
    }

    table.rows.push_back({-1, "n_reps_ok", static_cast<double>(config.n_reps - failed_reps)});
    table.rows.push_back({-1, "failed_reps", static_cast<double>(failed_reps)});
    table.rows.push_back({-1, "redraws_total", static_cast<double>(redraws_total)});

    std::vector<std::array<double, 5>> theo;
    std::vector<std::array<double, 5>> emp;
    for (const auto& out : outcomes) {
        if (out.ok) {
            theo.push_back(out.theo);
            emp.push_back(out.emp);
        }
    }
    append_moment_metrics(table, theo, emp, "");

    if (config.subsample) {
        for (int s = 1; s <= 11; ++s) {
            const int n_s = config.k_obs >> s;
            if (n_s < 5) {
                break;
            }
            std::vector<std::array<double, 5>> sub_emp;
            std::vector<std::array<double, 5>> sub_theo;
            for (const auto& out : outcomes) {
                if (!out.ok) {
                    continue;
                }
                for (const auto& [rs, moments] : out.sub) {
                    if (rs == s) {
                        sub_emp.push_back(moments);
                        sub_theo.push_back(out.theo);
                        break;
                    }
                }
            }
            table.rows.push_back({-1, "k_s" + std::to_string(s), static_cast<double>(n_s)});
            append_moment_metrics(table, sub_theo, sub_emp, "_s" + std::to_string(s));
        }
    }

    if (config.with_mle) {
        for (int j = 0; j < 5; ++j) {
            std::vector<double> tv;
            std::vector<double> fv;
            std::vector<double> diff;
            for (const auto& out : outcomes) {
                if (out.ok && out.fitted) {
                    tv.push_back(out.true_p[static_cast<std::size_t>(j)]);
                    fv.push_back(out.fit_p[static_cast<std::size_t>(j)]);
                    diff.push_back(out.fit_p[static_cast<std::size_t>(j)] -
                                   out.true_p[static_cast<std::size_t>(j)]);
                }
            }
            const std::string name = kParamNames[static_cast<std::size_t>(j)];
            table.rows.push_back({-1, "corr_" + name, pearson(tv, fv)});
            table.rows.push_back({-1, "bias_" + name, median_of(diff)});
            table.rows.push_back({-1, "iqr_" + name, iqr_of(diff)});
        }
    }

    return table;
}

// ---------------------------------------------------------------------------
// Growth experiment.

namespace {

const std::array<const char*, 5> kGrowthQuantities = {"eps", "eps_rel", "d_pct", "d_log", "d_dln"};
const std::array<const char*, 3> kGrowthFilters = {"all", "pos", "pos1"};

struct FamilySpec {
    const char* name;
    ParamRegion region;
    int n_quantities;  // leading entries of kGrowthQuantities that exist
};

std::vector<FamilySpec> growth_families() {
    return {{"normal", ParamRegion::q_n(), 4},
            {"lognormal", ParamRegion::q_ln(), 4},
            {"dln", ParamRegion::q_dln(), 5}};
}

std::vector<std::pair<int, int>> quantity_pairs(int n_quantities) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_quantities; ++i) {
        for (int j = i + 1; j < n_quantities; ++j) {
            pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

// Pooled pairwise-complete accumulators: n, sum u, sum v, sum u^2, sum v^2,
// sum uv per (filter, pair).
struct GrowthRepSums {
    std::array<std::array<std::array<double, 6>, 10>, 3> sums{};
    std::array<double, 3> records{};
};

void fill_level_measures(GrowthRecord& rec, double eps, double z0, double z1) {
    rec.eps = eps;
    if (z0 != 0.0) {
        rec.eps_over_abs = eps / std::abs(z0);
        rec.d_pct = d_percent(z0, z1);
    }
    if (z0 > 0.0 && z1 > 0.0) {
        rec.d_log = d_log(z0, z1);
    }
}

void accumulate_records(GrowthRepSums& acc, const std::vector<GrowthRecord>& records,
                        const Eigen::VectorXd& z, const std::vector<std::pair<int, int>>& pairs) {
    for (std::size_t t = 0; t < records.size(); ++t) {
        const GrowthRecord& rec = records[t];
        const double z0 = z[static_cast<Eigen::Index>(t)];
        const double z1 = z[static_cast<Eigen::Index>(t) + 1];
        const std::array<double, 5> q = {rec.eps, rec.eps_over_abs, rec.d_pct, rec.d_log,
                                         rec.d_dln};
        const std::array<bool, 3> pass = {true, z0 > 0.0 && z1 > 0.0, z0 > 1.0 && z1 > 0.0};
        for (std::size_t f = 0; f < 3; ++f) {
            if (!pass[f]) {
                continue;
            }
            acc.records[f] += 1.0;
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
                const double u = q[static_cast<std::size_t>(pairs[pi].first)];
                const double v = q[static_cast<std::size_t>(pairs[pi].second)];
                if (std::isfinite(u) && std::isfinite(v)) {
                    auto& s = acc.sums[f][pi];
                    s[0] += 1.0;
                    s[1] += u;
                    s[2] += v;
                    s[3] += u * u;
                    s[4] += v * v;
                    s[5] += u * v;
                }
            }
        }
    }
}

GrowthRepSums run_growth_rep(const ExperimentConfig& cfg, const FamilySpec& family,
                             int family_index, int rep) {
    const std::uint64_t stream =
        (static_cast<std::uint64_t>(family_index) << 32) | static_cast<std::uint32_t>(rep);
    Rng rng(derive_stream_seed(cfg.master_seed, stream));
    const Eigen::VectorXd draw = family.region.draw(rng);
    const std::int64_t k = cfg.k_obs;
    const std::vector<std::pair<int, int>> pairs = quantity_pairs(family.n_quantities);
    GrowthRepSums acc;

    if (std::string(family.name) == "dln") {
        // Draw order: rho_p, rho_n, mu_p, mu_n, sd_p, sd_n, rho_pn.
        DlnAr1Params params;
        params.pos = {draw[0], draw[2], draw[4]};
        params.neg = {draw[1], draw[3], draw[5]};
        params.rho_pn = draw[6];
        const DlnAr1Path path = simulate_ar1_dln(params, k, cfg.burn_in, rng.raw());
        std::vector<GrowthRecord> records(static_cast<std::size_t>(k - 1));
        for (std::int64_t t = 0; t + 1 < k; ++t) {
            GrowthRecord& rec = records[static_cast<std::size_t>(t)];
            const double eps_hat = path.y_p[t] * path.eps_p[t] - path.y_n[t] * path.eps_n[t];
            fill_level_measures(rec, eps_hat, path.w[t], path.w[t + 1]);
            if (path.y_p[t] != path.y_n[t]) {
                rec.d_dln = d_dln(path.y_p[t], path.y_p[t + 1], path.y_n[t], path.y_n[t + 1]);
            }
        }
        accumulate_records(acc, records, path.w, pairs);
        return acc;
    }

    // Draw order: rho, mu, sd.
    const Ar1Params params{draw[0], draw[1], draw[2]};
    const bool log_space = std::string(family.name) == "lognormal";
    const Eigen::VectorXd z = simulate_ar1(params, k, cfg.burn_in, rng.raw(),
                                           log_space ? Ar1Output::lognormal : Ar1Output::normal);
    std::vector<GrowthRecord> records(static_cast<std::size_t>(k - 1));
    const double drift = (1.0 - params.rho) * params.mu;
    for (std::int64_t t = 0; t + 1 < k; ++t) {
        const double x0 = log_space ? std::log(z[t]) : z[t];
        const double x1 = log_space ? std::log(z[t + 1]) : z[t + 1];
        const double eps = x1 - drift - params.rho * x0;
        fill_level_measures(records[static_cast<std::size_t>(t)], eps, z[t], z[t + 1]);
    }
    accumulate_records(acc, records, z, pairs);
    return acc;
}

double corr_from_sums(const std::array<double, 6>& s) {
    const double n = s[0];
    if (n < 2.0) {
        return kNaN;
    }
    const double cov = n * s[5] - s[1] * s[2];
    const double vu = n * s[3] - s[1] * s[1];
    const double vv = n * s[4] - s[2] * s[2];
    const double denom = std::sqrt(vu * vv);
    return denom > 0.0 ? cov / denom : kNaN;
}

}  // namespace

ResultTable run_growth_experiment(const ExperimentConfig& config) {
    validate(config);
    if (config.kind != ExperimentKind::growth) {
        throw std::invalid_argument("run_growth_experiment: config kind is not 'growth'");
    }

    const std::vector<FamilySpec> families = growth_families();
    ResultTable table;
    table.config_hash = config_hash(config);
    table.master_seed = config.master_seed;

    std::vector<std::vector<GrowthRepSums>> per_family(families.size());
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        per_family[fi].resize(static_cast<std::size_t>(config.n_reps));
        parallel_for_reps(config.n_reps, config.workers, [&, fi](int rep) {
            per_family[fi][static_cast<std::size_t>(rep)] =
                run_growth_rep(config, families[fi], static_cast<int>(fi), rep);
        });
    }

    for (int rep = 0; rep < config.n_reps; ++rep) {
        for (std::size_t fi = 0; fi < families.size(); ++fi) {
            const GrowthRepSums& acc = per_family[fi][static_cast<std::size_t>(rep)];
            for (std::size_t f = 0; f < 3; ++f) {
                table.rows.push_back({rep,
                                      std::string("n_") + families[fi].name + "_" +
                                          kGrowthFilters[f],
                                      acc.records[f]});
            }
        }
    }

    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        const FamilySpec& family = families[fi];
        const std::vector<std::pair<int, int>> pairs = quantity_pairs(family.n_quantities);
        for (std::size_t f = 0; f < 3; ++f) {
            double records = 0.0;
            for (const auto& acc : per_family[fi]) {
                records += acc.records[f];
            }
            table.rows.push_back(
                {-1, std::string("records_") + family.name + "_" + kGrowthFilters[f], records});
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
                std::array<double, 6> pooled{};
                for (const auto& acc : per_family[fi]) {
                    for (int c = 0; c < 6; ++c) {
                        pooled[static_cast<std::size_t>(c)] +=
                            acc.sums[f][pi][static_cast<std::size_t>(c)];
                    }
                }
                const std::string name =
                    std::string("corr_") + family.name + "_" + kGrowthFilters[f] + "_" +
                    kGrowthQuantities[static_cast<std::size_t>(pairs[pi].first)] + "__" +
                    kGrowthQuantities[static_cast<std::size_t>(pairs[pi].second)];
                table.rows.push_back({-1, name, corr_from_sums(pooled)});
            }
        }
    }

    return table;
}

// ---------------------------------------------------------------------------
// Plot data.

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

std::vector<std::string> emit_pdf_panels(const PlotDataRequest& req) {
    const std::array<double, 3> rhos = {-0.5, 0.0, 0.5};
    const double u_max = 10.0;
    const int n_linear = 1201;
    const int n_asinh = 601;

    std::string linear = "w,rho_neg05,rho_zero,rho_pos05\n";
    const double w_max = sinh_val(u_max);
    for (int i = 0; i < n_linear; ++i) {
        const double w = -w_max + 2.0 * w_max * i / (n_linear - 1);
        linear += format_value(w);
        for (const double rho : rhos) {
            const DlnParams params{3.0, 2.0, 2.0, 2.0, rho};
            linear += ',';
            linear += format_value(dln_pdf(w, params));
        }
        linear += '\n';
    }

    std::string asinh_axis = "u,rho_neg05,rho_zero,rho_pos05\n";
    for (int i = 0; i < n_asinh; ++i) {
        const double u = -u_max + 2.0 * u_max * i / (n_asinh - 1);
        asinh_axis += format_value(u);
        for (const double rho : rhos) {
            const DlnParams params{3.0, 2.0, 2.0, 2.0, rho};
            asinh_axis += ',';
            asinh_axis += format_value(adln_pdf(u, params));
        }
        asinh_axis += '\n';
    }

    const std::string linear_path = join_path(req.out_dir, "pdf_panels_linear.csv");
    const std::string asinh_path = join_path(req.out_dir, "pdf_panels_asinh.csv");
    write_text_file(linear_path, linear);
    write_text_file(asinh_path, asinh_axis);
    return {linear_path, asinh_path};
}

std::vector<std::string> emit_icdf_fits(const PlotDataRequest& req) {
    if (req.calibration_json.empty()) {
        throw std::invalid_argument("plot kind 'icdf-fits' needs a calibration record path");
    }
    std::ifstream in(req.calibration_json, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open calibration record '" + req.calibration_json + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const NullCalibration cal = calibration_from_json(buffer.str());

    const std::array<std::pair<const char*, const IcdfFit*>, 3> fits = {
        std::make_pair("ks", &cal.ks_fit), std::make_pair("chi2", &cal.chi2_fit),
        std::make_pair("ad", &cal.ad_fit)};

    std::vector<std::string> written;
    std::string summary = "stat,r2_stored,r2_recomputed\n";
    for (const auto& [name, fit] : fits) {
        std::string csv = "p,empirical,fitted\n";
        double sse = 0.0;
        double sst = 0.0;
        double mean = 0.0;
        for (const auto& [p, y] : fit->percentile_grid) {
            mean += y;
        }
        mean /= static_cast<double>(fit->percentile_grid.size());
        for (const auto& [p, y] : fit->percentile_grid) {
            const double fitted = (*fit)(p);
            csv += format_value(p);
            csv += ',';
            csv += format_value(y);
            csv += ',';
            csv += format_value(fitted);
            csv += '\n';
            sse += (y - fitted) * (y - fitted);
            sst += (y - mean) * (y - mean);
        }
        const double r2 = sst > 0.0 ? 1.0 - sse / sst : kNaN;
        summary += name;
        summary += ',';
        summary += format_value(fit->r2);
        summary += ',';
        summary += format_value(r2);
        summary += '\n';
        const std::string path = join_path(req.out_dir, std::string("icdf_fit_") + name + ".csv");
        write_text_file(path, csv);
        written.push_back(path);
    }
    const std::string summary_path = join_path(req.out_dir, "icdf_fit_summary.csv");
    write_text_file(summary_path, summary);
    written.push_back(summary_path);
    return written;
}

// One simulated path per family at the center of its preset region; rows
// sorted by the x column so every emitted series has increasing x.
std::vector<std::string> emit_growth_scatter(const PlotDataRequest& req) {
    const std::vector<FamilySpec> families = growth_families();
    const std::int64_t k = 1000;
    const std::int64_t burn_in = 100;
    std::vector<std::string> written;

    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        const FamilySpec& family = families[fi];
        Eigen::VectorXd mid(static_cast<Eigen::Index>(family.region.bounds.size()));
        for (std::size_t i = 0; i < family.region.bounds.size(); ++i) {
            mid[static_cast<Eigen::Index>(i)] =
                0.5 * (family.region.bounds[i].first + family.region.bounds[i].second);
        }
        const std::uint64_t seed = derive_stream_seed(req.seed, fi);

        // (x, y1, y2) per family: the family's own growth measure on x.
        std::vector<std::array<double, 3>> rows;
        std::string header;
        if (std::string(family.name) == "dln") {
            DlnAr1Params params;
            params.pos = {mid[0], mid[2], mid[4]};
            params.neg = {mid[1], mid[3], mid[5]};
            params.rho_pn = mid[6];
            const DlnAr1Path path = simulate_ar1_dln(params, k, burn_in, seed);
            header = "eps_rel,d_dln,d_pct\n";
            for (std::int64_t t = 0; t + 1 < k; ++t) {
                GrowthRecord rec;
                const double eps_hat = path.y_p[t] * path.eps_p[t] - path.y_n[t] * path.eps_n[t];
                fill_level_measures(rec, eps_hat, path.w[t], path.w[t + 1]);
                if (path.y_p[t] != path.y_n[t]) {
                    rec.d_dln = d_dln(path.y_p[t], path.y_p[t + 1], path.y_n[t], path.y_n[t + 1]);
                }
                rows.push_back({rec.eps_over_abs, rec.d_dln, rec.d_pct});
            }
        } else {
            const Ar1Params params{mid[0], mid[1], mid[2]};
            const bool log_space = std::string(family.name) == "lognormal";
            const Eigen::VectorXd z = simulate_ar1(
                params, k, burn_in, seed, log_space ? Ar1Output::lognormal : Ar1Output::normal);
            const double drift = (1.0 - params.rho) * params.mu;
            header = log_space ? "eps,d_log,d_pct\n" : "eps_rel,d_pct,d_log\n";
            for (std::int64_t t = 0; t + 1 < k; ++t) {
                const double x0 = log_space ? std::log(z[t]) : z[t];
                const double x1 = log_space ? std::log(z[t + 1]) : z[t + 1];
                GrowthRecord rec;
                fill_level_measures(rec, x1 - drift - params.rho * x0, z[t], z[t + 1]);
                if (log_space) {
                    rows.push_back({rec.eps, rec.d_log, rec.d_pct});
                } else {
                    rows.push_back({rec.eps_over_abs, rec.d_pct, rec.d_log});
                }
            }
        }

        std::vector<std::array<double, 3>> kept;
        for (const auto& row : rows) {
            if (std::isfinite(row[0]) && std::isfinite(row[1]) && std::isfinite(row[2])) {
                kept.push_back(row);
            }
        }
        std::sort(kept.begin(), kept.end(),
                  [](const auto& a, const auto& b) { return a[0] < b[0]; });
        kept.erase(std::unique(kept.begin(), kept.end(),
                               [](const auto& a, const auto& b) { return a[0] == b[0]; }),
                   kept.end());

        std::string csv = header;
        for (const auto& row : kept) {
            csv += format_value(row[0]);
            csv += ',';
            csv += format_value(row[1]);
            csv += ',';
            csv += format_value(row[2]);
            csv += '\n';
        }
        const std::string path =
            join_path(req.out_dir, std::string("growth_scatter_") + family.name + ".csv");
        write_text_file(path, csv);
        written.push_back(path);
    }
    return written;
}

}  // namespace

std::vector<std::string> emit_plot_data(const PlotDataRequest& req) {
    if (req.out_dir.empty()) {
        throw std::invalid_argument("emit_plot_data: out_dir must be set");
    }
    std::filesystem::create_directories(req.out_dir);
    if (req.kind == "pdf-panels") {
        return emit_pdf_panels(req);
    }
    if (req.kind == "icdf-fits") {
        return emit_icdf_fits(req);
    }
    if (req.kind == "growth-scatter") {
        return emit_growth_scatter(req);
    }
    throw std::domain_error("emit_plot_data: unknown kind '" + req.kind +
                            "' (expected pdf-panels, icdf-fits, or growth-scatter)");
}

void write_result_files(const ResultTable& table, const ExperimentConfig& config) {
    if (!config.out_csv.empty()) {
        write_text_file(config.out_csv, table.to_csv());
    }
    if (!config.out_json.empty()) {
        write_text_file(config.out_json, table.to_json());
    }
}

}  // namespace dln

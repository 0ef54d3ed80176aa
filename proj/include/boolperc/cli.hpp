#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "boolperc/analysis.hpp"
#include "boolperc/io.hpp"
#include "boolperc/osss.hpp"

namespace boolperc::cli {

namespace fs = std::filesystem;

// Runs are identified by the hash of their canonical config (defaults
// filled, performance knobs excluded), so a sweep can resume: hashes
// already in runs.log are skipped unless forced. Artifacts under
// <out>/<hash>/ are deterministic functions of (config, seed).

struct CsvTable {
    std::vector<std::string> rows;

    void add(const std::string& hash, const std::string& query, double r, double lambda,
             double value, double stderr_, uint64_t n, uint64_t seed) {
        std::ostringstream os;
        os << hash << "," << query << "," << shortest(r) << "," << shortest(lambda) << ","
           << shortest(value) << "," << shortest(stderr_) << "," << n << "," << seed;
        rows.push_back(os.str());
    }

    std::string render() const {
        std::string out = "config_hash,query,r,lambda,value,stderr,n,seed\n";
        for (const auto& r : rows) {
            out += r;
            out += "\n";
        }
        return out;
    }
};

inline std::string timestamp_now() {
    if (const char* forced = std::getenv("BOOLPERC_TIMESTAMP")) return forced;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

inline std::vector<double> parse_grid(const json& j, const char* what) {
    std::vector<double> grid;
    if (j.is_array()) {
        for (const auto& v : j) grid.push_back(v.get<double>());
    } else if (j.is_object()) {
        const double lo = j.at("min").get<double>();
        const double hi = j.at("max").get<double>();
        const double step = j.at("step").get<double>();
        if (!(step > 0.0) || !(hi >= lo))
            throw config_error(std::string(what) + ": bad {min,max,step} grid");
        for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
    } else {
        throw config_error(std::string(what) + ": expected array or {min,max,step}");
    }
    if (grid.empty()) throw config_error(std::string(what) + ": empty grid");
    return grid;
}

inline double require_num(const json& cfg, const char* field) {
    if (!cfg.contains(field))
        throw config_error(std::string("missing required field \"") + field + "\"");
    return cfg.at(field).get<double>();
}

// Fill defaults and drop performance knobs; the result is hashed.
inline json canonicalize(json cfg) {
    if (!cfg.is_object()) throw config_error("config: expected a JSON object");
    if (!cfg.contains("command")) throw config_error("config.command: missing");
    if (!cfg.contains("model")) throw config_error("config.model: missing");
    const ModelSpec model = model_from_json(cfg.at("model"));  // validates
    cfg["model"] = model_to_json(model);
    if (!cfg.contains("seed")) cfg["seed"] = 1;
    if (!cfg.contains("n_reps")) cfg["n_reps"] = 1000;
    cfg.erase("threads");
    cfg.erase("out");
    cfg.erase("force");
    return cfg;
}

struct RunContext {
    json config;  // canonical
    ModelSpec model;
    uint64_t seed = 0;
    uint64_t n_reps = 0;
    int threads = 1;
    std::string hash;
    CsvTable csv;
    json report;
    std::vector<std::pair<std::string, std::string>> extra_files;
    std::vector<PlotSeries> plot;
    std::string plot_title;
};

namespace detail {

inline void cmd_theta(RunContext& ctx) {
    const auto grid = parse_grid(ctx.config.at("s_grid"), "s_grid");
    const ThetaCurve curve =
        estimate_theta_curve(ctx.model, grid, ctx.n_reps, ctx.seed, ctx.threads);
    json points = json::array();
    PlotSeries series{"theta_s", {}, {}};
    for (size_t j = 0; j < grid.size(); ++j) {
        ctx.csv.add(ctx.hash, "theta_s", grid[j], ctx.model.lambda, curve.values[j].mean,
                    curve.values[j].stderr_, ctx.n_reps, ctx.seed);
        points.push_back({{"s", grid[j]}, {"estimate", estimate_to_json(curve.values[j])}});
        series.x.push_back(grid[j]);
        series.y.push_back(curve.values[j].mean);
    }
    ctx.report["theta_curve"] = {{"theta0", curve.theta0},
                                 {"theta0_saturated", curve.theta0_saturated},
                                 {"points", points}};
    ctx.plot.push_back(std::move(series));
    ctx.plot_title = "theta_s vs s";
}

inline void cmd_crossing(RunContext& ctx) {
    std::vector<double> rs;
    if (ctx.config.contains("r_list")) rs = parse_grid(ctx.config.at("r_list"), "r_list");
    else rs.push_back(require_num(ctx.config, "r"));
    json arr = json::array();
    for (double r : rs) {
        const Estimate e = estimate_crossing(ctx.model, r, ctx.n_reps, ctx.seed, ctx.threads);
        ctx.csv.add(ctx.hash, "crossing", r, ctx.model.lambda, e.mean, e.stderr_, ctx.n_reps,
                    ctx.seed);
        arr.push_back({{"r", r}, {"estimate", estimate_to_json(e)}});
    }
    ctx.report["crossing"] = arr;
}

inline void cmd_critical(RunContext& ctx) {
    const std::string method =
        ctx.config.contains("method") ? ctx.config.at("method").get<std::string>() : "tilde";
    const auto bracket = ctx.config.at("bracket");
    if (!bracket.is_array() || bracket.size() != 2)
        throw config_error("bracket: expected [lo, hi]");
    const double lo = bracket[0].get<double>(), hi = bracket[1].get<double>();
    CriticalEstimate est;
    double probe_r = 0.0;
    if (method == "tilde") {
        std::vector<double> rs;
        if (ctx.config.contains("r_list")) rs = parse_grid(ctx.config.at("r_list"), "r_list");
        else rs.push_back(require_num(ctx.config, "r"));
        probe_r = *std::max_element(rs.begin(), rs.end());
        const int diag = ctx.config.contains("diag_grid")
                             ? ctx.config.at("diag_grid").get<int>()
                             : 0;
        est = find_lambda_tilde(ctx.model, rs, lo, hi, ctx.n_reps, ctx.seed, ctx.threads, diag);
    } else if (method == "theta_threshold") {
        probe_r = require_num(ctx.config, "r");
        const double threshold = ctx.config.contains("threshold")
                                     ? ctx.config.at("threshold").get<double>()
                                     : 0.05;
        est = find_lambda_c(ctx.model, probe_r, lo, hi, ctx.n_reps, threshold, ctx.seed,
                            ctx.threads);
    } else {
        throw config_error("critical.method: expected \"tilde\" or \"theta_threshold\"");
    }
    ctx.csv.add(ctx.hash, "lambda_" + method, probe_r, est.lambda_hat, est.lambda_hat,
                0.5 * (est.hi - est.lo), ctx.n_reps, ctx.seed);
    json probes = json::array();
    for (const auto& p : est.probes)
        probes.push_back({{"lambda", p.lambda}, {"estimate", estimate_to_json(p.estimate)}});
    json diags = json::array();
    for (const auto& [r, curve] : est.diagnostics) {
        json pts = json::array();
        PlotSeries series{"r=" + shortest(r), {}, {}};
        for (const auto& p : curve) {
            pts.push_back({{"lambda", p.lambda}, {"estimate", estimate_to_json(p.estimate)}});
            series.x.push_back(p.lambda);
            series.y.push_back(p.estimate.mean);
        }
        ctx.plot.push_back(std::move(series));
        diags.push_back({{"r", r}, {"points", pts}});
    }
    ctx.plot_title = "crossing vs lambda";
    ctx.report["critical"] = {{"method", est.method},
                              {"lambda_hat", est.lambda_hat},
                              {"bracket", {est.lo, est.hi}},
                              {"probes", probes},
                              {"diagnostics", diags}};
}

inline void cmd_osss(RunContext& ctx) {
    const double s = require_num(ctx.config, "s");
    const int L = static_cast<int>(require_num(ctx.config, "L"));
    const double r = require_num(ctx.config, "r");
    const OsssReport rep = osss_check(ctx.model, s, L, r, ctx.n_reps, ctx.seed, ctx.threads);
    ctx.csv.add(ctx.hash, "osss_var_f", r, ctx.model.lambda, rep.var_f, rep.var_sigma,
                ctx.n_reps, ctx.seed);
    ctx.csv.add(ctx.hash, "osss_sum_delta_inf", r, ctx.model.lambda, rep.sum_delta_inf,
                rep.sum_sigma, ctx.n_reps, ctx.seed);
    // Sparse per-coordinate table (nonzero delta or influence only).
    const CoordSet coords(ctx.model.d, L);
    std::string coord_csv = "x0,x1,x2,n,delta,inf\n";
    for (int32_t c = 0; c < coords.size(); ++c) {
        const double delta = rep.revealments.delta(c);
        const double inf = rep.influences.influence(c);
        if (delta == 0.0 && inf == 0.0) continue;
        const LatticePoint x = coords.site_of(c);
        std::ostringstream os;
        os << x[0] << "," << (ctx.model.d > 1 ? x[1] : 0) << ","
           << (ctx.model.d > 2 ? x[2] : 0) << "," << coords.band_of(c) << ","
           << shortest(delta) << "," << shortest(inf) << "\n";
        coord_csv += os.str();
    }
    ctx.report["osss"] = {{"var_f", rep.var_f},
                          {"var_sigma", rep.var_sigma},
                          {"sum_delta_inf", rep.sum_delta_inf},
                          {"sum_sigma", rep.sum_sigma},
                          {"theta", rep.theta},
                          {"ghost_influence", rep.influences.ghost_influence()},
                          {"violated", rep.violated},
                          {"s", s},
                          {"L", L},
                          {"r", r}};
    ctx.extra_files.emplace_back("coordinates.csv", coord_csv);
}

inline void cmd_russo(RunContext& ctx) {
    const double r = require_num(ctx.config, "r");
    const double dlambda = ctx.config.contains("dlambda")
                               ? ctx.config.at("dlambda").get<double>()
                               : 0.02 * ctx.model.lambda;
    const int K = ctx.config.contains("K") ? ctx.config.at("K").get<int>() : 4;
    const RussoReport rep = russo_check(ctx.model, r, ctx.model.lambda, dlambda, ctx.n_reps,
                                        ctx.seed, ctx.threads, K);
    ctx.csv.add(ctx.hash, "russo_finite_difference", r, ctx.model.lambda,
                rep.finite_difference.mean, rep.finite_difference.stderr_, ctx.n_reps,
                ctx.seed);
    ctx.csv.add(ctx.hash, "russo_pivotal_sum", r, ctx.model.lambda, rep.pivotal_sum.mean,
                rep.pivotal_sum.stderr_, ctx.n_reps, ctx.seed);
    ctx.report["russo"] = {{"finite_difference", estimate_to_json(rep.finite_difference)},
                           {"pivotal_sum", estimate_to_json(rep.pivotal_sum)},
                           {"dlambda", dlambda},
                           {"agree_4sigma", rep.agree},
                           {"sites", rep.per_site.size()}};
}

inline void cmd_renorm(RunContext& ctx) {
    const double alpha = require_num(ctx.config, "alpha");
    const double delta = require_num(ctx.config, "delta");
    const int grid = ctx.config.contains("u_grid") ? ctx.config.at("u_grid").get<int>() : 33;
    std::vector<double> rs;
    if (ctx.config.contains("r_list")) rs = parse_grid(ctx.config.at("r_list"), "r_list");
    else rs.push_back(require_num(ctx.config, "r"));
    json arr = json::array();
    for (double r : rs) {
        const RenormReport rep =
            renorm_report(ctx.model, r, alpha, delta, grid, ctx.n_reps, ctx.seed, ctx.threads);
        ctx.csv.add(ctx.hash, "renorm_implied_constant", r, ctx.model.lambda,
                    rep.implied_constant, 0.0, ctx.n_reps, ctx.seed);
        arr.push_back({{"r", r},
                       {"theta_alpha_r", estimate_to_json(rep.theta_alpha_r)},
                       {"pi_delta_r", rep.pi_delta_r},
                       {"max_product", rep.max_product},
                       {"max_product_sigma", rep.max_product_sigma},
                       {"implied_constant", rep.implied_constant},
                       {"positive_gap", rep.positive_gap}});
    }
    ctx.report["renorm"] = {{"alpha", alpha}, {"delta", delta}, {"reports", arr}};
}

inline void cmd_heavy_tail(RunContext& ctx) {
    const HeavyTailReport rep = verify_heavy_tail_lemma(
        ctx.model, require_num(ctx.config, "alpha"), require_num(ctx.config, "eta"),
        require_num(ctx.config, "eps"), require_num(ctx.config, "r0"),
        require_num(ctx.config, "r"), ctx.n_reps, ctx.seed, ctx.threads);
    ctx.csv.add(ctx.hash, "heavy_tail_conclusion_margin", rep.r, ctx.model.lambda,
                rep.conclusion_margin, 0.0, ctx.n_reps, ctx.seed);
    ctx.report["heavy_tail"] = {{"alpha", rep.alpha},       {"eta", rep.eta},
                                {"eps", rep.eps},           {"r0", rep.r0},
                                {"r", rep.r},               {"pi_alpha_r", rep.pi_alpha_r},
                                {"f1_holds", rep.f1_holds}, {"f2_holds", rep.f2_holds},
                                {"conclusion_holds", rep.conclusion_holds},
                                {"f1_worst_margin", rep.f1_worst_margin},
                                {"f2_worst_margin", rep.f2_worst_margin},
                                {"conclusion_margin", rep.conclusion_margin}};
}

inline void cmd_ratio(RunContext& ctx) {
    const auto grid = parse_grid(ctx.config.at("r_grid"), "r_grid");
    const auto points = ratio_curve(ctx.model, grid, ctx.n_reps, ctx.seed, ctx.threads);
    json arr = json::array();
    PlotSeries series{"theta/phi", {}, {}};
    for (const auto& p : points) {
        ctx.csv.add(ctx.hash, "theta_phi_ratio", p.r, ctx.model.lambda, p.ratio, p.ratio_sigma,
                    ctx.n_reps, ctx.seed);
        arr.push_back({{"r", p.r},
                       {"theta", p.theta},
                       {"theta_sigma", p.theta_sigma},
                       {"phi", p.phi},
                       {"ratio", p.ratio},
                       {"ratio_sigma", p.ratio_sigma}});
        series.x.push_back(p.r);
        series.y.push_back(p.ratio);
    }
    ctx.report["ratio_curve"] = arr;
    ctx.plot.push_back(std::move(series));
    ctx.plot_title = "theta_r / phi_r";
}

inline void cmd_decay_fit(RunContext& ctx) {
    const auto grid = parse_grid(ctx.config.at("s_grid"), "s_grid");
    const double s_min = ctx.config.contains("s_min") ? ctx.config.at("s_min").get<double>()
                                                      : grid.front();
    const ThetaCurve curve =
        estimate_theta_curve(ctx.model, grid, ctx.n_reps, ctx.seed, ctx.threads);
    const DecayFit fit = fit_exponential_decay(curve, s_min);
    ctx.csv.add(ctx.hash, "decay_rate", 0.0, ctx.model.lambda, fit.rate, 0.0, ctx.n_reps,
                ctx.seed);
    ctx.csv.add(ctx.hash, "decay_r_squared", 0.0, ctx.model.lambda, fit.r_squared, 0.0,
                ctx.n_reps, ctx.seed);
    for (size_t j = 0; j < grid.size(); ++j)
        ctx.csv.add(ctx.hash, "theta_s", grid[j], ctx.model.lambda, curve.values[j].mean,
                    curve.values[j].stderr_, ctx.n_reps, ctx.seed);
    ctx.report["decay_fit"] = {{"rate", fit.rate},
                               {"intercept", fit.intercept},
                               {"r_squared", fit.r_squared},
                               {"points", fit.points},
                               {"s_min", s_min}};
}

inline void cmd_sharpness(RunContext& ctx) {
    const auto grid = parse_grid(ctx.config.at("lambda_grid"), "lambda_grid");
    const double r_proxy = require_num(ctx.config, "r_proxy");
    const SharpnessScan scan =
        sharpness_scan(ctx.model, grid, r_proxy, ctx.n_reps, ctx.seed, ctx.threads);
    json arr = json::array();
    PlotSeries series{"theta", {}, {}};
    for (const auto& [lambda, est] : scan.points) {
        ctx.csv.add(ctx.hash, "theta_r_proxy", r_proxy, lambda, est.mean, est.stderr_,
                    ctx.n_reps, ctx.seed);
        arr.push_back({{"lambda", lambda}, {"estimate", estimate_to_json(est)}});
        series.x.push_back(lambda);
        series.y.push_back(est.mean);
    }
    ctx.report["sharpness"] = {{"points", arr},
                               {"slope", scan.slope},
                               {"intercept_lambda", scan.intercept_lambda},
                               {"fit_points", scan.fit_points}};
    ctx.plot.push_back(std::move(series));
    ctx.plot_title = "theta vs lambda";
}

inline void cmd_vacant(RunContext& ctx) {
    const double r = require_num(ctx.config, "r");
    const double h = ctx.config.contains("h") ? ctx.config.at("h").get<double>() : 0.1;
    const Estimate e = estimate_vacant(ctx.model, r, h, ctx.n_reps, ctx.seed, ctx.threads);
    ctx.csv.add(ctx.hash, "vacant_theta_star", r, ctx.model.lambda, e.mean, e.stderr_,
                ctx.n_reps, ctx.seed);
    ctx.report["vacant"] = {{"r", r}, {"h", h}, {"estimate", estimate_to_json(e)}};
}

}  // namespace detail

// Execute one canonical config; writes artifacts under out_dir/<hash>/.
inline int run_one(const json& canonical, const fs::path& out_dir, int threads,
                   bool want_plot) {
    RunContext ctx;
    ctx.config = canonical;
    ctx.model = model_from_json(canonical.at("model"));
    ctx.seed = canonical.at("seed").get<uint64_t>();
    ctx.n_reps = canonical.at("n_reps").get<uint64_t>();
    ctx.threads = threads;
    ctx.hash = hash_hex(config_hash(canonical));

    const std::string command = canonical.at("command").get<std::string>();
    if (command == "theta") detail::cmd_theta(ctx);
    else if (command == "crossing") detail::cmd_crossing(ctx);
    else if (command == "critical") detail::cmd_critical(ctx);
    else if (command == "osss") detail::cmd_osss(ctx);
    else if (command == "russo") detail::cmd_russo(ctx);
    else if (command == "renorm") detail::cmd_renorm(ctx);
    else if (command == "heavy-tail") detail::cmd_heavy_tail(ctx);
    else if (command == "ratio") detail::cmd_ratio(ctx);
    else if (command == "decay-fit") detail::cmd_decay_fit(ctx);
    else if (command == "sharpness") detail::cmd_sharpness(ctx);
    else if (command == "vacant") detail::cmd_vacant(ctx);
    else throw config_error("unknown command \"" + command + "\"");

    const fs::path dir = out_dir / ctx.hash;
    fs::create_directories(dir);
    write_file((dir / "results.csv").string(), ctx.csv.render());
    for (const auto& [name, content] : ctx.extra_files)
        write_file((dir / name).string(), content);

    json report;
    report["config"] = canonical;
    report["config_hash"] = ctx.hash;
    report["seed"] = ctx.seed;
    report["eps_trunc"] = ctx.model.eps_trunc;
    report["sharpness_moment_ok"] = satisfies_sharpness_moment(ctx.model.law, ctx.model.d);
    report["timestamp"] = timestamp_now();
    report["law"] = ctx.model.law.describe();
    report.update(ctx.report);
    write_file((dir / "report.json").string(), report.dump(2) + "\n");

    if (want_plot && !ctx.plot.empty())
        write_file((dir / "plot.svg").string(), render_svg_plot(ctx.plot_title, ctx.plot));
    return 0;
}

// Expand sweeps (model.lambda may be an array), honor the resume log, run.
inline int run(json cfg, const std::string& out_override,
               const std::optional<uint64_t>& seed_override, int threads_override,
               bool force) {
    if (!cfg.is_object()) throw config_error("config: expected a JSON object");
    std::string out = "runs";
    if (cfg.contains("out")) out = cfg.at("out").get<std::string>();
    if (!out_override.empty()) out = out_override;
    if (const char* env_out = std::getenv("BOOLPERC_OUT")) out = env_out;
    int threads = cfg.contains("threads") ? cfg.at("threads").get<int>() : 1;
    if (threads_override > 0) threads = threads_override;
    if (seed_override) cfg["seed"] = *seed_override;
    const bool want_plot = cfg.contains("plot") && cfg.at("plot").get<bool>();
    cfg.erase("plot");

    std::vector<json> expanded;
    if (cfg.contains("model") && cfg.at("model").is_object() &&
        cfg.at("model").contains("lambda") && cfg.at("model").at("lambda").is_array()) {
        for (const auto& lv : cfg.at("model").at("lambda")) {
            json sub = cfg;
            sub["model"]["lambda"] = lv;
            expanded.push_back(canonicalize(sub));
        }
    } else {
        expanded.push_back(canonicalize(cfg));
    }

    const fs::path out_dir(out);
    fs::create_directories(out_dir);
    const fs::path log_path = out_dir / "runs.log";

    std::set<std::string> done;
    if (fs::exists(log_path)) {
        std::ifstream in(log_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const json rec = json::parse(line);
                if (rec.value("status", "") == "ok")
                    done.insert(rec.value("hash", ""));
            } catch (...) {
                // tolerate torn lines from interrupted runs
            }
        }
    }

    for (const json& canonical : expanded) {
        const std::string hash = hash_hex(config_hash(canonical));
        if (!force && done.count(hash)) {
            std::cerr << "skip " << hash << " (already in runs.log; use --force to rerun)\n";
            continue;
        }
        run_one(canonical, out_dir, threads, want_plot);
        json rec = {{"hash", hash},
                    {"command", canonical.at("command")},
                    {"status", "ok"},
                    {"timestamp", timestamp_now()}};
        std::ofstream log(log_path, std::ios::app);
        log << rec.dump() << "\n";
        std::cout << hash << "\n";
    }
    return 0;
}

}  // namespace boolperc::cli

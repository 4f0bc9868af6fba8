#pragma once
// Experiment runner: strict JSON configs in, stamped artifacts out. Every
// output is written atomically, carries the tool version and config digest on
// its first line, and is byte-reproducible from (config, seed).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/curvature.hpp"
#include "infogap/error.hpp"
#include "infogap/escape.hpp"
#include "infogap/gap.hpp"
#include "infogap/io.hpp"
#include "infogap/parallel.hpp"
#include "infogap/verify.hpp"

namespace infogap {

// ---- strict config access ---------------------------------------------------

namespace cfgutil {

// Rejects keys outside the allowed set, reporting the offending path.
inline void check_keys(const nlohmann::json& j, const std::string& path,
                       const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: expected an object at " + path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key " + path + "." + it.key());
    }
}

inline double num(const nlohmann::json& j, const std::string& path, const std::string& key,
                  std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing required key " + path + "." + key);
    }
    if (!j.at(key).is_number()) throw ConfigError("config: expected a number at " + path + "." + key);
    return j.at(key).get<double>();
}

inline std::size_t count(const nlohmann::json& j, const std::string& path, const std::string& key,
                         std::optional<std::size_t> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing required key " + path + "." + key);
    }
    const nlohmann::json& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("config: expected a nonnegative integer at " + path + "." + key);
    return v.get<std::size_t>();
}

inline bool flag(const nlohmann::json& j, const std::string& path, const std::string& key,
                 bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError("config: expected a boolean at " + path + "." + key);
    return j.at(key).get<bool>();
}

inline std::string text(const nlohmann::json& j, const std::string& path, const std::string& key,
                        std::optional<std::string> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing required key " + path + "." + key);
    }
    if (!j.at(key).is_string()) throw ConfigError("config: expected a string at " + path + "." + key);
    return j.at(key).get<std::string>();
}

}  // namespace cfgutil

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::size_t threads = 1;
    bool force = false;
};

// ---- escape sweep -----------------------------------------------------------

inline void run_escape_sweep(const nlohmann::json& cfg, const std::string& out_dir,
                             std::uint64_t seed, const std::string& config_hash,
                             const RunOptions& opt) {
    cfgutil::check_keys(cfg, "$", {"command", "out_dir", "seed", "curv_min", "curv_saddle",
                                   "saddle_pos", "noise_std", "trials", "max_steps",
                                   "min_escaped", "settings"});
    WellSpec base;
    base.curv_min = cfgutil::num(cfg, "$", "curv_min", 1.0);
    base.curv_saddle = cfgutil::num(cfg, "$", "curv_saddle", 1.0);
    base.saddle_pos = cfgutil::num(cfg, "$", "saddle_pos", 1.0);
    base.noise_std = cfgutil::num(cfg, "$", "noise_std", 1.0);
    const std::size_t trials = cfgutil::count(cfg, "$", "trials", std::size_t{250});
    const std::size_t max_steps = cfgutil::count(cfg, "$", "max_steps", std::size_t{2000000});
    const std::size_t min_escaped = cfgutil::count(cfg, "$", "min_escaped", std::size_t{50});
    if (!cfg.contains("settings") || !cfg.at("settings").is_array() || cfg.at("settings").empty())
        throw ConfigError("config: $.settings must be a non-empty array");

    struct Group {
        double barrier, lr;
        std::size_t batch;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < cfg.at("settings").size(); ++i) {
        const auto& s = cfg.at("settings").at(i);
        std::string path = "$.settings[" + std::to_string(i) + "]";
        cfgutil::check_keys(s, path, {"barrier", "batch", "lr"});
        Group g;
        g.barrier = cfgutil::num(s, path, "barrier");
        g.lr = cfgutil::num(s, path, "lr");
        g.batch = cfgutil::count(s, path, "batch");
        groups.push_back(g);
    }
    // Reject unusable wells and unstable step sizes before any work starts.
    for (std::size_t i = 0; i < groups.size(); ++i) {
        WellSpec spec = base;
        spec.barrier = groups[i].barrier;
        try {
            Landscape probe(spec);
            if (!(groups[i].lr > 0.0) || groups[i].batch == 0 || trials == 0)
                throw ConfigError("lr, batch, and trials must be positive");
            if (groups[i].lr * probe.max_curvature() >= 2.0)
                throw ConfigError("lr * max curvature >= 2, descent unstable");
            // Kramers reasoning needs the iterate to sit in the well: reject
            // noise whose stationary spread around the minimum covers the basin.
            double spread = groups[i].lr * spec.noise_std * spec.noise_std /
                            (2.0 * spec.curv_min * static_cast<double>(groups[i].batch));
            if (spread >= spec.saddle_pos * spec.saddle_pos)
                throw ConfigError("noise swamps the well: sgd stationary variance " +
                                  format_double(spread) + " reaches the saddle");
        } catch (const Error& e) {
            throw ConfigError("config: $.settings[" + std::to_string(i) + "]: " + e.what());
        }
    }

    struct CellOut {
        EscapeSetting setting;
        std::vector<double> trial_steps;
        std::vector<bool> trial_censored;
    };
    std::function<CellOut(std::size_t)> cell = [&](std::size_t i) {
        WellSpec spec = base;
        spec.barrier = groups[i].barrier;
        Landscape land(spec);
        EscapeConfig ec;
        ec.lr = groups[i].lr;
        ec.batch = groups[i].batch;
        ec.trials = trials;
        ec.max_steps = max_steps;
        ec.seed = seed;
        ec.stream = i;
        EscapeResult res = run_escape_trials(land, ec);
        CellOut out;
        out.setting.barrier = groups[i].barrier;
        out.setting.lr = groups[i].lr;
        out.setting.batch = groups[i].batch;
        out.setting.curv_min = spec.curv_min;
        out.setting.curv_saddle = spec.curv_saddle;
        out.setting.mean_escape_steps = res.mean_escape_mle;
        out.setting.n_escaped = res.escape_steps.size();
        out.setting.n_censored = res.censored;
        out.trial_steps = std::move(res.trial_steps);
        out.trial_censored = std::move(res.trial_censored);
        return out;
    };
    std::vector<CellOut> cells = parallel_map<CellOut>(groups.size(), opt.threads, cell);

    // One row per trial; group summaries go to the fit JSON.
    std::string csv = stamp_line(config_hash) + "\n";
    csv += "setting,barrier,batch,lr,x,trial,steps,censored\n";
    std::vector<EscapeSetting> settings;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& s = cells[i].setting;
        settings.push_back(s);
        std::string prefix = std::to_string(i) + ',' + format_double(s.barrier) + ',' +
                             std::to_string(s.batch) + ',' + format_double(s.lr) + ',' +
                             format_double(static_cast<double>(s.batch) * s.barrier / s.lr) + ',';
        for (std::size_t t = 0; t < cells[i].trial_steps.size(); ++t) {
            csv += prefix + std::to_string(t) + ',' + format_double(cells[i].trial_steps[t]) + ',' +
                   (cells[i].trial_censored[t] ? "1" : "0") + '\n';
        }
    }
    atomic_write_file(std::filesystem::path(out_dir) / "escape_trials.csv", csv, opt.force);

    nlohmann::json fit_json;
    fit_json["config_hash"] = config_hash;
    fit_json["tool_version"] = kToolVersion;
    nlohmann::json group_rows = nlohmann::json::array();
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const auto& s = settings[i];
        group_rows.push_back({{"setting", i},
                              {"barrier", s.barrier},
                              {"batch", s.batch},
                              {"lr", s.lr},
                              {"x", static_cast<double>(s.batch) * s.barrier / s.lr},
                              {"n_escaped", s.n_escaped},
                              {"n_censored", s.n_censored},
                              {"mean_escape_steps", s.mean_escape_steps}});
    }
    fit_json["groups"] = group_rows;
    try {
        EscapeLawFit fit = fit_escape_law(settings, min_escaped);
        fit_json["slope"] = fit.slope;
        fit_json["intercept"] = fit.intercept;
        fit_json["r_squared"] = fit.r_squared;
        fit_json["p_hat"] = fit.p_hat;
        fit_json["used_groups"] = fit.used_groups;
        fit_json["warnings"] = fit.warnings;
    } catch (const Error& e) {
        fit_json["fit_error"] = e.what();
    }
    atomic_write_file(std::filesystem::path(out_dir) / "escape_fit.json", fit_json.dump() + "\n",
                      opt.force);
}

// ---- curvature sweep --------------------------------------------------------

inline void run_curvature_sweep(const nlohmann::json& cfg, const std::string& out_dir,
                                std::uint64_t seed, const std::string& config_hash,
                                const RunOptions& opt) {
    cfgutil::check_keys(cfg, "$", {"command", "out_dir", "seed", "levels", "y_size", "x_size",
                                   "hidden", "activation", "bias", "steps", "lr", "weight_decay",
                                   "seeds", "fisher_scope", "eps_floor", "delta_theta"});
    CurvatureSweepConfig c;
    c.levels = cfgutil::count(cfg, "$", "levels", std::size_t{6});
    c.y_size = cfgutil::count(cfg, "$", "y_size", std::size_t{4});
    c.x_size = cfgutil::count(cfg, "$", "x_size", std::size_t{6});
    c.hidden = cfgutil::count(cfg, "$", "hidden", std::size_t{8});
    try {
        c.activation = activation_from_name(cfgutil::text(cfg, "$", "activation", std::string("softplus")));
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: $.activation: ") + e.what());
    }
    c.bias = cfgutil::flag(cfg, "$", "bias", false);
    c.steps = cfgutil::count(cfg, "$", "steps", std::size_t{4000});
    c.lr = cfgutil::num(cfg, "$", "lr", 0.5);
    c.weight_decay = cfgutil::num(cfg, "$", "weight_decay", 0.05);
    c.seeds = cfgutil::count(cfg, "$", "seeds", std::size_t{10});
    try {
        c.fisher_scope = param_scope_from_name(cfgutil::text(cfg, "$", "fisher_scope", std::string("encoder")));
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: $.fisher_scope: ") + e.what());
    }
    c.eps_floor = cfgutil::num(cfg, "$", "eps_floor", 1e-6);
    c.delta_theta = cfgutil::num(cfg, "$", "delta_theta", 1e-2);
    c.base_seed = seed;

    CurvatureSweepResult result;
    try {
        result = entropy_curvature_sweep(c);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    std::string csv = stamp_line(config_hash) + "\n";
    csv += "level,H_nats,trF_median,trF_iqr,bound\n";
    for (const auto& row : result.rows) {
        csv += std::to_string(row.level) + ',' + format_double(row.h_nats) + ',' +
               format_double(row.trf_median) + ',' + format_double(row.trf_iqr) + ',' +
               format_double(row.bound_median) + '\n';
    }
    atomic_write_file(std::filesystem::path(out_dir) / "curvature_sweep.csv", csv, opt.force);

    nlohmann::json summary;
    summary["config_hash"] = config_hash;
    summary["tool_version"] = kToolVersion;
    summary["spearman_h_trf"] = result.spearman_h_trf;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : result.rows) {
        rows.push_back({{"level", row.level},
                        {"H_nats", row.h_nats},
                        {"max_entropy_gap", row.gap},
                        {"trF_median", row.trf_median},
                        {"trF_iqr", row.trf_iqr},
                        {"bound_median", row.bound_median},
                        {"nll_median", row.nll_median},
                        {"diverged", row.diverged},
                        {"flagged", row.flagged}});
    }
    summary["rows"] = rows;
    atomic_write_file(std::filesystem::path(out_dir) / "curvature_summary.json",
                      summary.dump() + "\n", opt.force);
}

// ---- gap sweep --------------------------------------------------------------

inline GapSweepConfig parse_gap_sweep_config(const nlohmann::json& cfg, std::uint64_t seed) {
    cfgutil::check_keys(cfg, "$", {"command", "out_dir", "seed", "grid", "task_goals",
                                   "pretrain_goals", "levels", "regimes", "n", "seeds", "hidden",
                                   "activation", "bias", "steps", "lr", "batch", "pretrain_steps",
                                   "pretrain_lr", "finetune_encoder_lr_scale", "coverage",
                                   "cmi_draws", "cmi_probe_units"});
    GapSweepConfig g;
    if (cfg.contains("grid")) {
        cfgutil::check_keys(cfg.at("grid"), "$.grid", {"width", "height"});
        g.grid.width = cfgutil::count(cfg.at("grid"), "$.grid", "width", std::size_t{5});
        g.grid.height = cfgutil::count(cfg.at("grid"), "$.grid", "height", std::size_t{5});
    }
    try {
        g.grid.goals = cfg.contains("task_goals")
                           ? cfg.at("task_goals").get<std::vector<std::size_t>>()
                           : default_task_goals();
        if (cfg.contains("pretrain_goals"))
            g.pretrain_goals = cfg.at("pretrain_goals").get<std::vector<std::size_t>>();
        if (cfg.contains("levels")) g.levels = cfg.at("levels").get<std::vector<double>>();
        if (cfg.contains("regimes")) {
            g.regimes.clear();
            for (const auto& r : cfg.at("regimes"))
                g.regimes.push_back(regime_from_name(r.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed list value: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: $.regimes: ") + e.what());
    }
    g.n = cfgutil::count(cfg, "$", "n", std::size_t{400});
    g.seeds = cfgutil::count(cfg, "$", "seeds", std::size_t{10});
    g.base_seed = seed;
    g.run.hidden = cfgutil::count(cfg, "$", "hidden", std::size_t{32});
    try {
        g.run.activation = activation_from_name(cfgutil::text(cfg, "$", "activation", std::string("tanh")));
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: $.activation: ") + e.what());
    }
    g.run.bias = cfgutil::flag(cfg, "$", "bias", true);
    g.run.steps = cfgutil::count(cfg, "$", "steps", std::size_t{20000});
    g.run.lr = cfgutil::num(cfg, "$", "lr", 0.2);
    g.run.batch = cfgutil::count(cfg, "$", "batch", std::size_t{16});
    g.run.pretrain_steps = cfgutil::count(cfg, "$", "pretrain_steps", std::size_t{6000});
    g.run.pretrain_lr = cfgutil::num(cfg, "$", "pretrain_lr", 0.5);
    g.run.finetune_encoder_lr_scale = cfgutil::num(cfg, "$", "finetune_encoder_lr_scale", 0.1);
    g.run.coverage = cfgutil::num(cfg, "$", "coverage", 0.3);
    g.run.cmi_draws = cfgutil::count(cfg, "$", "cmi_draws", std::size_t{20000});
    g.run.cmi_probe_units = cfgutil::count(cfg, "$", "cmi_probe_units", std::size_t{8});
    return g;
}

inline GapSweepResult run_gap_sweep_parallel(const GapSweepConfig& g, std::size_t threads,
                                             const std::string& config_hash) {
    GapSweepPlan plan = make_gap_sweep_plan(g);
    std::function<GapSweepRow(std::size_t)> cell = [&plan](std::size_t i) { return plan.run_cell(i); };
    GapSweepResult result;
    result.rows = parallel_map<GapSweepRow>(plan.cell_count(), threads, cell);
    for (auto& row : result.rows) row.report.config_hash = config_hash;
    summarize_gap_sweep(result, g);
    return result;
}

inline void run_gap_sweep(const nlohmann::json& cfg, const std::string& out_dir,
                          std::uint64_t seed, const std::string& config_hash,
                          const RunOptions& opt) {
    GapSweepConfig g = parse_gap_sweep_config(cfg, seed);
    // Surface unusable sweep parameters as config errors before any training.
    if (g.n == 0) throw ConfigError("config: $.n must be positive");
    if (!(g.run.coverage > 0.0 && g.run.coverage <= 1.0))
        throw ConfigError("config: $.coverage must lie in (0,1]");
    try {
        (void)make_gap_sweep_plan(g);
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    GapSweepResult result = run_gap_sweep_parallel(g, opt.threads, config_hash);

    atomic_write_file(std::filesystem::path(out_dir) / "gap_sweep.csv",
                      gap_sweep_csv(result, config_hash), opt.force);

    nlohmann::json summary;
    summary["config_hash"] = config_hash;
    summary["tool_version"] = kToolVersion;
    nlohmann::json srows = nlohmann::json::array();
    for (const auto& s : result.summary) {
        srows.push_back({{"level", s.level},
                         {"H_nats", s.h_nats},
                         {"regime", s.regime},
                         {"gap_median", s.gap_median},
                         {"trF_median", s.trf_median},
                         {"cmi_l1_median", s.cmi_l1_median},
                         {"cmi_l2_median", s.cmi_l2_median}});
    }
    summary["medians"] = srows;
    nlohmann::json corr = nlohmann::json::object();
    for (const auto& [regime, pairs] : result.correlations) {
        nlohmann::json c = nlohmann::json::object();
        for (const auto& [name, rho] : pairs) c["spearman_H_" + name] = rho;
        corr[regime] = c;
    }
    summary["correlations"] = corr;
    atomic_write_file(std::filesystem::path(out_dir) / "gap_summary.json", summary.dump() + "\n",
                      opt.force);
}

// ---- command entry points ---------------------------------------------------

// Exit codes: 0 success, 1 verification failure, 2 usage/config error.
inline int cmd_verify(const std::string& out_dir, bool force, const std::string& fault,
                      std::string& rendered) {
    VerifyOutcome outcome = run_verification(fault);
    std::string hash = digest_hex(std::string("verify:") + fault);
    std::string txt = stamp_line(hash) + "\n";
    for (const auto& c : outcome.results) {
        txt += std::string(c.passed ? "[PASS] " : "[FAIL] ") + c.name + ": " + c.measured + " (" +
               format_double(c.millis) + " ms)\n";
    }
    txt += outcome.all_passed ? "all checks passed\n" : "verification FAILED\n";
    rendered = txt;

    nlohmann::json j;
    j["config_hash"] = hash;
    j["tool_version"] = kToolVersion;
    j["all_passed"] = outcome.all_passed;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : outcome.results)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured},
                          {"millis", c.millis}});
    j["checks"] = checks;
    atomic_write_file(std::filesystem::path(out_dir) / "verify_report.json", j.dump() + "\n", force);
    atomic_write_file(std::filesystem::path(out_dir) / "verify_report.txt", txt, force);
    return outcome.all_passed ? 0 : 1;
}

inline int cmd_run(const std::string& config_path, const RunOptions& opt) {
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(read_file(config_path));
    } catch (const DataError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
    std::string command = cfgutil::text(cfg, "$", "command");
    std::string out_dir = opt.out_override.value_or(cfgutil::text(cfg, "$", "out_dir"));
    std::uint64_t seed = opt.seed_override.value_or(
        static_cast<std::uint64_t>(cfgutil::count(cfg, "$", "seed", std::size_t{1})));

    // The digest covers the effective config: file content with overrides applied.
    nlohmann::json effective = cfg;
    effective["seed"] = seed;
    std::string config_hash = digest_hex(effective.dump());

    std::filesystem::create_directories(out_dir);
    if (command == "escape_sweep") {
        run_escape_sweep(cfg, out_dir, seed, config_hash, opt);
    } else if (command == "curvature_sweep") {
        run_curvature_sweep(cfg, out_dir, seed, config_hash, opt);
    } else if (command == "gap_sweep") {
        run_gap_sweep(cfg, out_dir, seed, config_hash, opt);
    } else {
        throw ConfigError("config: unknown command '" + command + "' at $.command");
    }
    nlohmann::json stamped = effective;
    stamped["config_hash"] = config_hash;
    stamped["tool_version"] = kToolVersion;
    atomic_write_file(std::filesystem::path(out_dir) / "config.json", stamped.dump() + "\n",
                      opt.force);
    return 0;
}

// ---- report -----------------------------------------------------------------

namespace detail {

inline std::optional<std::string> stamp_hash_of(const std::string& first_line) {
    auto pos = first_line.find(" config ");
    if (pos == std::string::npos) return {};
    return first_line.substr(pos + 8);
}

struct ParsedCsv {
    std::string stamp_hash;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline ParsedCsv parse_stamped_csv(const std::filesystem::path& p) {
    ParsedCsv out;
    auto lines = split_lines(read_file(p));
    if (lines.size() < 2) throw DataError("report: truncated CSV " + p.string());
    if (auto h = stamp_hash_of(lines[0])) out.stamp_hash = *h;
    out.header = split_csv_line(lines[1]);
    for (std::size_t i = 2; i < lines.size(); ++i) out.rows.push_back(split_csv_line(lines[i]));
    return out;
}

inline std::size_t col_of(const ParsedCsv& csv, const std::string& name) {
    for (std::size_t i = 0; i < csv.header.size(); ++i)
        if (csv.header[i] == name) return i;
    throw DataError("report: missing column '" + name + "'");
}

}  // namespace detail

// Aggregates whatever recognized artifacts the directory holds into one
// summary JSON plus flat plot CSVs. Hash disagreements between files are
// reported as warnings, not errors.
inline int cmd_report(const std::string& dir, const RunOptions& opt, std::string& rendered) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw ConfigError("report: no such directory: " + dir);
    fs::path out_dir = opt.out_override ? fs::path(*opt.out_override) : fs::path(dir);
    nlohmann::json summary;
    std::vector<std::string> warnings;
    std::set<std::string> hashes;
    bool found_any = false;
    std::string plot_csvs;

    fs::path gap_csv = fs::path(dir) / "gap_sweep.csv";
    if (fs::exists(gap_csv)) {
        found_any = true;
        auto csv = detail::parse_stamped_csv(gap_csv);
        if (!csv.stamp_hash.empty()) hashes.insert(csv.stamp_hash);
        std::size_t c_level = detail::col_of(csv, "level");
        std::size_t c_h = detail::col_of(csv, "H_nats");
        std::size_t c_regime = detail::col_of(csv, "regime");
        std::size_t c_gap = detail::col_of(csv, "gap");
        std::size_t c_trf = detail::col_of(csv, "trF");
        std::size_t c_c1 = detail::col_of(csv, "cmi_l1");
        std::size_t c_c2 = detail::col_of(csv, "cmi_l2");
        std::size_t c_flag = detail::col_of(csv, "escaped_flags");

        std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> groups;
        std::map<std::string, double> level_h;
        for (const auto& row : csv.rows) {
            if (row[c_flag] == "1") continue;
            auto key = std::make_pair(row[c_level], row[c_regime]);
            groups[key].push_back({parse_double(row[c_gap]), parse_double(row[c_trf]),
                                   parse_double(row[c_c1]), parse_double(row[c_c2])});
            level_h[row[c_level]] = parse_double(row[c_h]);
        }
        nlohmann::json medians = nlohmann::json::array();
        std::map<std::string, std::vector<std::pair<double, std::vector<double>>>> per_regime;
        std::string plot = "level,H_nats,regime,gap_median,gap_iqr,trF_median,cmi_l1_median,cmi_l2_median\n";
        for (const auto& [key, vals] : groups) {
            std::vector<double> gaps, trfs, c1s, c2s;
            for (const auto& v : vals) {
                gaps.push_back(v[0]);
                trfs.push_back(v[1]);
                c1s.push_back(v[2]);
                c2s.push_back(v[3]);
            }
            double h = level_h[key.first];
            double gm = median(gaps), gi = iqr(gaps), tm = median(trfs);
            double m1 = median(c1s), m2 = median(c2s);
            medians.push_back({{"level", key.first}, {"regime", key.second}, {"H_nats", h},
                               {"gap_median", gm}, {"gap_iqr", gi}, {"trF_median", tm},
                               {"cmi_l1_median", m1}, {"cmi_l2_median", m2}});
            per_regime[key.second].push_back({h, {gm, tm, m1, m2}});
            plot += key.first + ',' + format_double(h) + ',' + key.second + ',' +
                    format_double(gm) + ',' + format_double(gi) + ',' + format_double(tm) + ',' +
                    format_double(m1) + ',' + format_double(m2) + '\n';
        }
        nlohmann::json corr = nlohmann::json::object();
        for (auto& [regime, pts] : per_regime) {
            std::sort(pts.begin(), pts.end());
            std::vector<double> hs, gs, ts, m1s, m2s;
            for (const auto& [h, v] : pts) {
                hs.push_back(h);
                gs.push_back(v[0]);
                ts.push_back(v[1]);
                m1s.push_back(v[2]);
                m2s.push_back(v[3]);
            }
            nlohmann::json c = nlohmann::json::object();
            auto safe = [&](const std::vector<double>& ys) -> nlohmann::json {
                if (hs.size() < 2) return nullptr;
                try {
                    return spearman(hs, ys);
                } catch (const Error&) {
                    return nullptr;
                }
            };
            c["spearman_H_gap"] = safe(gs);
            c["spearman_H_trF"] = safe(ts);
            c["spearman_H_cmi_l1"] = safe(m1s);
            c["spearman_H_cmi_l2"] = safe(m2s);
            corr[regime] = c;
        }
        summary["gap"] = {{"medians", medians}, {"correlations", corr}};
        std::string stamp = stamp_line(csv.stamp_hash.empty() ? "unknown" : csv.stamp_hash);
        atomic_write_file(out_dir / "report_gap_medians.csv", stamp + "\n" + plot, opt.force);
        plot_csvs += "report_gap_medians.csv ";
    }

    fs::path esc_csv = fs::path(dir) / "escape_trials.csv";
    if (fs::exists(esc_csv)) {
        found_any = true;
        auto csv = detail::parse_stamped_csv(esc_csv);
        if (!csv.stamp_hash.empty()) hashes.insert(csv.stamp_hash);
        std::size_t c_set = detail::col_of(csv, "setting");
        std::size_t c_x = detail::col_of(csv, "x");
        std::size_t c_steps = detail::col_of(csv, "steps");
        std::size_t c_cens = detail::col_of(csv, "censored");
        struct Group {
            double x = 0.0;
            std::vector<double> events, censored;
        };
        std::map<std::string, Group> by_setting;
        for (const auto& row : csv.rows) {
            Group& g = by_setting[row[c_set]];
            g.x = parse_double(row[c_x]);
            if (row[c_cens] == "1")
                g.censored.push_back(parse_double(row[c_steps]));
            else
                g.events.push_back(parse_double(row[c_steps]));
        }
        std::vector<double> xs, ys;
        std::string plot = "setting,x,n_escaped,n_censored,mean_escape_steps,log_mean\n";
        for (const auto& [name, g] : by_setting) {
            if (g.events.empty()) continue;
            double m = censored_exponential_mean(g.events, g.censored);
            xs.push_back(g.x);
            ys.push_back(std::log(m));
            plot += name + ',' + format_double(g.x) + ',' + std::to_string(g.events.size()) + ',' +
                    std::to_string(g.censored.size()) + ',' + format_double(m) + ',' +
                    format_double(std::log(m)) + '\n';
        }
        nlohmann::json esc = nlohmann::json::object();
        if (xs.size() >= 2) {
            LineFit lf = ols_fit(xs, ys);
            esc["slope"] = lf.slope;
            esc["intercept"] = lf.intercept;
            esc["r_squared"] = lf.r_squared;
        }
        fs::path fit_path = fs::path(dir) / "escape_fit.json";
        if (fs::exists(fit_path)) {
            auto fit = nlohmann::json::parse(read_file(fit_path));
            if (fit.contains("config_hash")) hashes.insert(fit.at("config_hash").get<std::string>());
            esc["fit_file"] = fit;
        }
        summary["escape"] = esc;
        std::string stamp = stamp_line(csv.stamp_hash.empty() ? "unknown" : csv.stamp_hash);
        atomic_write_file(out_dir / "report_escape.csv", stamp + "\n" + plot, opt.force);
        plot_csvs += "report_escape.csv ";
    }

    fs::path curv_csv = fs::path(dir) / "curvature_sweep.csv";
    if (fs::exists(curv_csv)) {
        found_any = true;
        auto csv = detail::parse_stamped_csv(curv_csv);
        if (!csv.stamp_hash.empty()) hashes.insert(csv.stamp_hash);
        std::size_t c_h = detail::col_of(csv, "H_nats");
        std::size_t c_trf = detail::col_of(csv, "trF_median");
        std::size_t c_bound = detail::col_of(csv, "bound");
        std::vector<double> hs, trfs, bounds;
        for (const auto& row : csv.rows) {
            hs.push_back(parse_double(row[c_h]));
            trfs.push_back(parse_double(row[c_trf]));
            bounds.push_back(parse_double(row[c_bound]));
        }
        nlohmann::json curv = nlohmann::json::object();
        if (hs.size() >= 2) {
            curv["spearman_H_trF"] = spearman(hs, trfs);
            curv["spearman_H_bound"] = spearman(hs, bounds);
        }
        fs::path cs_path = fs::path(dir) / "curvature_summary.json";
        if (fs::exists(cs_path)) {
            auto cs = nlohmann::json::parse(read_file(cs_path));
            if (cs.contains("config_hash")) hashes.insert(cs.at("config_hash").get<std::string>());
            curv["summary_file"] = cs;
        }
        summary["curvature"] = curv;
    }

    if (!found_any) throw ConfigError("report: no recognized run outputs in " + dir);
    if (hashes.size() > 1) {
        std::string w = "mixed config hashes across artifacts:";
        for (const auto& h : hashes) w += " " + h;
        warnings.push_back(w);
    }
    summary["warnings"] = warnings;
    summary["tool_version"] = kToolVersion;
    std::string combined;
    for (const auto& h : hashes) combined += h;
    summary["config_hash"] = hashes.size() == 1 ? *hashes.begin() : digest_hex(combined);
    atomic_write_file(out_dir / "summary.json", summary.dump() + "\n", opt.force);

    rendered = "report written: summary.json";
    if (!plot_csvs.empty()) rendered += " " + plot_csvs;
    for (const auto& w : warnings) rendered += "\nwarning: " + w;
    rendered += "\n";
    return 0;
}

}  // namespace infogap

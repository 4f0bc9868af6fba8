#pragma once
// Exact generalization-gap measurement on enumerable imitation tasks. The
// true distribution is a finite table, so the expected loss is a sum, the
// gap is exact bookkeeping, and regime comparisons (frozen / fine-tuned /
// from-scratch encoders) are free of estimation noise.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/cond_table.hpp"
#include "infogap/curvature.hpp"
#include "infogap/error.hpp"
#include "infogap/gridworld.hpp"
#include "infogap/histogram.hpp"
#include "infogap/io.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"
#include "infogap/stats.hpp"
#include "infogap/train.hpp"

namespace infogap {

struct StateAction {
    std::size_t x = 0;
    std::size_t y = 0;
};

// i.i.d. draws from p(x) p(y|x). With `support` given, x is drawn from p(x)
// restricted (and renormalized) to that subset; this is the coverage knob.
inline std::vector<StateAction> sample_dataset(const ToyTask& task, std::size_t n, RngStream& rng,
                                               const std::vector<std::size_t>* support = nullptr) {
    if (n == 0) throw ArgumentError("sample_dataset: n must be positive");
    std::vector<double> marginal;
    std::vector<std::size_t> index_map;
    if (support) {
        if (support->empty()) throw ArgumentError("sample_dataset: empty support");
        double total = 0.0;
        for (std::size_t x : *support) {
            if (x >= task.n_states()) throw ArgumentError("sample_dataset: support out of range");
            total += task.expert.x_marginal[x];
        }
        if (!(total > 0.0)) throw ValidationError("sample_dataset: support has zero mass");
        for (std::size_t x : *support) {
            marginal.push_back(task.expert.x_marginal[x] / total);
            index_map.push_back(x);
        }
    } else {
        marginal = task.expert.x_marginal;
        index_map.resize(task.n_states());
        for (std::size_t x = 0; x < index_map.size(); ++x) index_map[x] = x;
    }
    std::vector<StateAction> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t x = index_map[rng.categorical(marginal)];
        out[i].x = x;
        out[i].y = rng.categorical(task.expert.rows[x]);
    }
    return out;
}

inline std::vector<Example> to_examples(const ToyTask& task, std::span<const StateAction> draws) {
    std::vector<Example> out(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        out[i].x = task.features[draws[i].x];
        out[i].y = draws[i].y;
    }
    return out;
}

// True expected bounded loss, by full enumeration of the task table.
inline double exact_expected_loss(const ModelState& m, const ToyTask& task) {
    return population_nll(m, task.expert, task.feature_fn());
}

enum class Regime { Frozen, Finetune, Scratch };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Frozen: return "frozen";
        case Regime::Finetune: return "finetune";
        default: return "scratch";
    }
}

inline Regime regime_from_name(const std::string& s) {
    if (s == "frozen") return Regime::Frozen;
    if (s == "finetune") return Regime::Finetune;
    if (s == "scratch") return Regime::Scratch;
    throw ArgumentError("unknown regime '" + s + "'");
}

struct GapRunConfig {
    std::size_t hidden = 32;
    Activation activation = Activation::Tanh;
    bool bias = true;
    std::size_t pretrain_steps = 6000;
    double pretrain_lr = 0.5;
    std::size_t steps = 20000;
    double lr = 0.2;
    std::size_t batch = 16;
    double finetune_encoder_lr_scale = 0.1;
    double coverage = 0.3;          // fraction of states the sample may touch
    std::size_t cmi_draws = 20000;  // draws for the binned information probe
    std::size_t cmi_probe_units = 8;
};

struct GapReport {
    std::string regime;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double expected_loss = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    double cmi_l1 = std::numeric_limits<double>::quiet_NaN();  // I(X; hidden bins | Y)
    double cmi_l2 = std::numeric_limits<double>::quiet_NaN();  // I(X; logit bins | Y)
    double trf = std::numeric_limits<double>::quiet_NaN();     // trained Fisher trace
    bool flagged = false;
    std::string note;
    std::string config_hash;
};

// Full outcome of one regime run; the report is the durable part, the rest
// supports tests and downstream diagnostics.
struct GapRun {
    GapReport report;
    ModelState model;
    std::vector<double> encoder_at_start;  // encoder slice when task training began
};

namespace detail {

// Sign-pattern id over the first `probe_units` coordinates of a layer.
inline std::size_t sign_probe_id(std::span<const double> z, std::size_t probe_units) {
    std::size_t id = 0;
    const std::size_t d = std::min(z.size(), probe_units);
    for (std::size_t i = 0; i < d; ++i) {
        if (std::isnan(z[i])) throw DataError("sign_probe_id: NaN activation");
        id = (id << 1) | (z[i] > 0.0 ? 1u : 0u);
    }
    return id;
}

// Plug-in I(X; Z_l | Y) from sampled (x, y) pairs with deterministic
// per-state representations, for both probed layers at once.
inline std::pair<double, double> cmi_probes(const ModelState& m, const ToyTask& task,
                                            std::size_t draws, std::size_t probe_units,
                                            RngStream& rng) {
    const std::size_t nx = task.n_states();
    const std::size_t ny = kGridActions;
    // Representations are deterministic per state: precompute bin ids.
    std::vector<std::size_t> z1(nx), z2(nx);
    std::size_t z1_space = std::size_t{1} << std::min<std::size_t>(probe_units, m.arch.hidden.empty() ? 0 : m.arch.hidden[0]);
    std::size_t z2_space = std::size_t{1} << m.arch.n_outputs;
    for (std::size_t x = 0; x < nx; ++x) {
        ForwardTrace t = forward(m, task.features[x]);
        z1[x] = m.arch.hidden.empty() ? 0 : detail::sign_probe_id(t.post[0], probe_units);
        z2[x] = detail::sign_probe_id(t.logits, m.arch.n_outputs);
    }
    if (m.arch.hidden.empty()) z1_space = 1;

    std::vector<std::vector<std::size_t>> cols(4);
    for (auto& c : cols) c.reserve(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        std::size_t x = rng.categorical(task.expert.x_marginal);
        std::size_t y = rng.categorical(task.expert.rows[x]);
        cols[0].push_back(x);
        cols[1].push_back(y);
        cols[2].push_back(z1[x]);
        cols[3].push_back(z2[x]);
    }
    JointHistogram h = histogram_from_columns(
        {{"x", nx}, {"y", ny}, {"z1", std::max<std::size_t>(z1_space, 1)}, {"z2", z2_space}},
        cols);
    double c1 = (z1_space > 1) ? cond_mutual_info(h, "x", "z1", "y") : 0.0;
    double c2 = cond_mutual_info(h, "x", "z2", "y");
    return {c1, c2};
}

}  // namespace detail

// Trains one regime on the task and measures the gap exactly.
//   scratch  - fresh model, all layers trained.
//   frozen   - encoder pretrained on `pretrain` (disjoint goals), copied in,
//              then held at zero learning rate; head trained fresh.
//   finetune - as frozen, but the encoder moves at a scaled learning rate.
// Divergence during any training stage yields a flagged report, not a throw.
inline GapRun run_regime(const ToyTask& task, const ToyTask* pretrain, Regime regime,
                         std::size_t n, const GapRunConfig& cfg, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("run_regime: n must be positive");
    if (!(cfg.coverage > 0.0 && cfg.coverage <= 1.0))
        throw DomainError("run_regime: coverage in (0,1]");
    if ((regime != Regime::Scratch) && pretrain == nullptr)
        throw ArgumentError("run_regime: frozen/finetune regimes need a pretraining task");
    if (pretrain && pretrain->input_dim != task.input_dim)
        throw DimensionError("run_regime: pretraining feature space differs from task");

    Arch arch;
    arch.input_dim = task.input_dim;
    arch.hidden = {cfg.hidden};
    arch.n_outputs = kGridActions;
    arch.activation = cfg.activation;
    arch.bias = cfg.bias;

    GapRun run;
    GapReport& rep = run.report;
    rep.regime = regime_name(regime);
    rep.n = n;
    rep.seed = seed;

    RngStream init_rng(seed, 0);
    RngStream coverage_rng(seed, 1);
    RngStream data_rng(seed, 2);
    RngStream train_rng(seed, 3);
    RngStream cmi_rng(seed, 4);
    RngStream pretrain_rng(seed, 5);

    ModelState m = ModelState::init(arch, init_rng);

    TrainConfig tc;
    tc.steps = cfg.steps;
    tc.lr = cfg.lr;
    tc.batch = cfg.batch;

    if (regime != Regime::Scratch) {
        ModelState pre = ModelState::init(arch, pretrain_rng);
        TrainConfig ptc;
        ptc.steps = cfg.pretrain_steps;
        ptc.lr = cfg.pretrain_lr;
        try {
            train_population_gd(pre, pretrain->expert, pretrain->feature_fn(), ptc);
        } catch (const DataError& e) {
            rep.flagged = true;
            rep.note = std::string("pretraining diverged: ") + e.what();
            run.model = m;
            return run;
        }
        auto [elo, ehi] = m.encoder_range();
        for (std::size_t i = elo; i < ehi; ++i) m.theta[i] = pre.theta[i];
        tc.layer_lr_scale.assign(m.slices.size(), 1.0);
        for (std::size_t l = 0; l + 1 < m.slices.size(); ++l)
            tc.layer_lr_scale[l] = (regime == Regime::Frozen) ? 0.0 : cfg.finetune_encoder_lr_scale;
    }

    auto [elo, ehi] = m.encoder_range();
    run.encoder_at_start.assign(m.theta.begin() + static_cast<std::ptrdiff_t>(elo),
                                m.theta.begin() + static_cast<std::ptrdiff_t>(ehi));

    // Coverage subset: a uniform random draw of distinct states.
    const std::size_t n_states = task.n_states();
    std::size_t covered =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.coverage * static_cast<double>(n_states) + 0.5));
    std::vector<std::size_t> perm(n_states);
    for (std::size_t i = 0; i < n_states; ++i) perm[i] = i;
    for (std::size_t i = 0; i < covered; ++i) {
        std::size_t j = i + coverage_rng.uniform_below(n_states - i);
        std::swap(perm[i], perm[j]);
    }
    std::vector<std::size_t> support(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(covered));
    std::sort(support.begin(), support.end());

    auto draws = sample_dataset(task, n, data_rng, &support);
    auto examples = to_examples(task, draws);

    try {
        rep.train_loss = train_sgd(m, examples, tc, train_rng);
    } catch (const DataError& e) {
        rep.flagged = true;
        rep.note = std::string("training diverged: ") + e.what();
        run.model = m;
        return run;
    }

    rep.expected_loss = exact_expected_loss(m, task);
    rep.gap = rep.expected_loss - rep.train_loss;

    // Gibbs floor: the expected bounded loss can undercut H(Y|X) only by the
    // clipping slack; anything more indicates a bookkeeping bug.
    double h = cond_entropy(task.expert);
    if (rep.expected_loss < h - 1e-6)
        throw ValidationError("run_regime: expected loss fell below the entropy floor");

    auto [c1, c2] = detail::cmi_probes(m, task, cfg.cmi_draws, cfg.cmi_probe_units, cmi_rng);
    rep.cmi_l1 = c1;
    rep.cmi_l2 = c2;
    rep.trf = fisher_exact(m, task.expert, task.feature_fn(), ParamScope::All, false).trace;

    run.model = std::move(m);
    return run;
}

// ---- entropy ladder sweep --------------------------------------------------

struct GapSweepConfig {
    GridTaskConfig grid;                      // goals = task goals
    std::vector<std::size_t> pretrain_goals;
    std::vector<double> levels = {0.0, 0.25, 0.5, 0.75, 1.0};  // expert noise
    std::vector<Regime> regimes = {Regime::Frozen, Regime::Scratch};
    std::size_t n = 400;
    std::size_t seeds = 10;
    std::uint64_t base_seed = 1;
    GapRunConfig run;
};

struct GapSweepRow {
    std::size_t level = 0;
    double h_nats = 0.0;
    GapReport report;
};

struct GapSweepSummaryRow {
    std::size_t level = 0;
    double h_nats = 0.0;
    std::string regime;
    double gap_median = 0.0;
    double trf_median = 0.0;
    double cmi_l1_median = 0.0;
    double cmi_l2_median = 0.0;
};

struct GapSweepResult {
    std::vector<GapSweepRow> rows;            // per (level, regime, seed)
    std::vector<GapSweepSummaryRow> summary;  // per (level, regime)
    // Spearman of H(Y|X) against each median diagnostic, per regime name.
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> correlations;
};

inline std::uint64_t gap_cell_seed(std::uint64_t base, std::size_t level, std::size_t regime_idx,
                                   std::size_t seed_idx) {
    return base + 1000000ull * (level + 1) + 10000ull * (regime_idx + 1) + seed_idx;
}

// The sweep body for one cell, exposed so the runner can parallelize.
struct GapSweepPlan {
    std::vector<ToyTask> tasks;  // one per level
    ToyTask pretrain;
    GapSweepConfig cfg;

    std::size_t cell_count() const { return cfg.levels.size() * cfg.regimes.size() * cfg.seeds; }

    GapSweepRow run_cell(std::size_t flat) const {
        const std::size_t per_level = cfg.regimes.size() * cfg.seeds;
        const std::size_t level = flat / per_level;
        const std::size_t regime_idx = (flat % per_level) / cfg.seeds;
        const std::size_t seed_idx = flat % cfg.seeds;
        GapSweepRow row;
        row.level = level;
        row.h_nats = cond_entropy(tasks[level].expert);
        Regime regime = cfg.regimes[regime_idx];
        GapRun r = run_regime(tasks[level], regime == Regime::Scratch ? nullptr : &pretrain,
                              regime, cfg.n, cfg.run,
                              gap_cell_seed(cfg.base_seed, level, regime_idx, seed_idx));
        row.report = r.report;
        return row;
    }
};

inline GapSweepPlan make_gap_sweep_plan(const GapSweepConfig& cfg) {
    if (cfg.levels.empty()) throw ArgumentError("gap sweep: need at least one level");
    if (cfg.regimes.empty()) throw ArgumentError("gap sweep: need at least one regime");
    if (cfg.seeds == 0) throw ArgumentError("gap sweep: need at least one seed");
    GapSweepPlan plan;
    plan.cfg = cfg;
    ToyTask base = make_gridworld_task(cfg.grid);
    for (double lam : cfg.levels) plan.tasks.push_back(with_expert_noise(base, lam));
    bool needs_pretrain = false;
    for (Regime r : cfg.regimes) needs_pretrain = needs_pretrain || (r != Regime::Scratch);
    if (needs_pretrain) {
        GridTaskConfig pcfg = cfg.grid;
        pcfg.goals = cfg.pretrain_goals.empty()
                         ? default_pretrain_goals(cfg.grid.width * cfg.grid.height, cfg.grid.goals)
                         : cfg.pretrain_goals;
        plan.pretrain = make_gridworld_task(pcfg);
    }
    return plan;
}

// Aggregates medians per (level, regime) and rank correlations against H.
inline void summarize_gap_sweep(GapSweepResult& result, const GapSweepConfig& cfg) {
    result.summary.clear();
    result.correlations.clear();
    for (std::size_t ri = 0; ri < cfg.regimes.size(); ++ri) {
        std::string rname = regime_name(cfg.regimes[ri]);
        std::vector<double> hs, gap_med, trf_med, c1_med, c2_med;
        for (std::size_t level = 0; level < cfg.levels.size(); ++level) {
            std::vector<double> gaps, trfs, c1s, c2s;
            double h = 0.0;
            for (const auto& row : result.rows) {
                if (row.level != level || row.report.regime != rname || row.report.flagged) continue;
                h = row.h_nats;
                gaps.push_back(row.report.gap);
                trfs.push_back(row.report.trf);
                c1s.push_back(row.report.cmi_l1);
                c2s.push_back(row.report.cmi_l2);
            }
            if (gaps.empty()) continue;
            GapSweepSummaryRow s;
            s.level = level;
            s.h_nats = h;
            s.regime = rname;
            s.gap_median = median(gaps);
            s.trf_median = median(trfs);
            s.cmi_l1_median = median(c1s);
            s.cmi_l2_median = median(c2s);
            result.summary.push_back(s);
            hs.push_back(h);
            gap_med.push_back(s.gap_median);
            trf_med.push_back(s.trf_median);
            c1_med.push_back(s.cmi_l1_median);
            c2_med.push_back(s.cmi_l2_median);
        }
        std::vector<std::pair<std::string, double>> corr;
        if (hs.size() >= 2) {
            auto safe_spearman = [&](const std::vector<double>& ys) {
                try {
                    return spearman(hs, ys);
                } catch (const Error&) {
                    return std::numeric_limits<double>::quiet_NaN();
                }
            };
            corr.emplace_back("gap", safe_spearman(gap_med));
            corr.emplace_back("trF", safe_spearman(trf_med));
            corr.emplace_back("cmi_l1", safe_spearman(c1_med));
            corr.emplace_back("cmi_l2", safe_spearman(c2_med));
        }
        result.correlations.emplace_back(rname, std::move(corr));
    }
}

// Serial driver; the CLI runner substitutes its own parallel fan-out.
inline GapSweepResult sweep_entropy_gap(const GapSweepConfig& cfg) {
    GapSweepPlan plan = make_gap_sweep_plan(cfg);
    GapSweepResult result;
    for (std::size_t cell = 0; cell < plan.cell_count(); ++cell)
        result.rows.push_back(plan.run_cell(cell));
    summarize_gap_sweep(result, cfg);
    return result;
}

// Per-seed CSV rows in the documented column order.
inline std::string gap_sweep_csv(const GapSweepResult& result, const std::string& config_hash) {
    std::string csv = stamp_line(config_hash) + "\n";
    csv += "level,H_nats,regime,n,seed,train_loss,expected_loss,gap,trF,cmi_l1,cmi_l2,escaped_flags\n";
    for (const auto& row : result.rows) {
        csv += std::to_string(row.level) + ',' + format_double(row.h_nats) + ',' +
               row.report.regime + ',' + std::to_string(row.report.n) + ',' +
               std::to_string(row.report.seed) + ',' + format_double(row.report.train_loss) + ',' +
               format_double(row.report.expected_loss) + ',' + format_double(row.report.gap) + ',' +
               format_double(row.report.trf) + ',' + format_double(row.report.cmi_l1) + ',' +
               format_double(row.report.cmi_l2) + ',' + (row.report.flagged ? "1" : "0") + '\n';
    }
    return csv;
}

inline nlohmann::json gap_report_to_json(const GapReport& r) {
    nlohmann::json j;
    j["regime"] = r.regime;
    j["n"] = r.n;
    j["seed"] = r.seed;
    j["train_loss"] = r.train_loss;
    j["expected_loss"] = r.expected_loss;
    j["gap"] = r.gap;
    j["cmi_l1"] = r.cmi_l1;
    j["cmi_l2"] = r.cmi_l2;
    j["trF"] = r.trf;
    j["flagged"] = r.flagged;
    j["note"] = r.note;
    j["config_hash"] = r.config_hash;
    return j;
}

}  // namespace infogap

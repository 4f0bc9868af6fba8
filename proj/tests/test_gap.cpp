#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "infogap/gap.hpp"
#include "infogap/gridworld.hpp"
#include "infogap/io.hpp"
#include "infogap/rng.hpp"
#include "infogap/stats.hpp"

using namespace infogap;

namespace {

ToyTask standard_task(double noise) {
    GridTaskConfig cfg;
    cfg.goals = default_task_goals();
    cfg.expert_noise = noise;
    return make_gridworld_task(cfg);
}

GapRunConfig small_run_config() {
    GapRunConfig cfg;
    cfg.hidden = 8;
    cfg.steps = 1200;
    cfg.lr = 0.2;
    cfg.batch = 8;
    cfg.coverage = 1.0;
    cfg.cmi_draws = 2000;
    cfg.cmi_probe_units = 6;
    cfg.pretrain_steps = 300;
    return cfg;
}

}  // namespace

// ---- gridworld expert -------------------------------------------------------

TEST_CASE("expert action takes the horizontal leg first", "[gridworld]") {
    // 5-wide grid; cell r*5+c. Goal 6 sits at row 1, column 1.
    REQUIRE(expert_action(6, 6, 5) == kActStay);
    REQUIRE(expert_action(5, 6, 5) == kActRight);   // same row, left of goal
    REQUIRE(expert_action(7, 6, 5) == kActLeft);    // same row, right of goal
    REQUIRE(expert_action(1, 6, 5) == kActDown);    // same column, above goal
    REQUIRE(expert_action(11, 6, 5) == kActUp);     // same column, below goal
    // Diagonal offsets resolve horizontally before vertically.
    REQUIRE(expert_action(0, 12, 5) == kActRight);
    REQUIRE(expert_action(24, 0, 5) == kActLeft);
}

TEST_CASE("gridworld task construction rejects bad configs", "[gridworld]") {
    GridTaskConfig cfg;
    cfg.goals = {0};
    cfg.width = 1;
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), ArgumentError);
    cfg.width = 5;
    cfg.goals = {};
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), ArgumentError);
    cfg.goals = {0};
    cfg.expert_noise = -0.01;
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), DomainError);
    cfg.expert_noise = 1.01;
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), DomainError);
    cfg.expert_noise = 0.2;
    cfg.goals = {25};  // off the 5x5 board
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), ArgumentError);
    cfg.width = 100;
    cfg.height = 100;
    cfg.goals = {0, 1};  // 20000 states, over the enumerable budget
    REQUIRE_THROWS_AS(make_gridworld_task(cfg), ArgumentError);
}

TEST_CASE("gridworld task table, features, and indexing", "[gridworld]") {
    ToyTask task = standard_task(0.2);
    REQUIRE(task.n_cells() == 25);
    REQUIRE(task.n_states() == 100);
    REQUIRE(task.input_dim == 27);
    REQUIRE(task.expert.x_size() == 100);
    REQUIRE(task.expert.y_size() == kGridActions);
    REQUIRE(task.expert.y_alphabet ==
            std::vector<std::string>{"up", "down", "left", "right", "stay"});

    // On-goal row: stay gets (1 - 0.2) + 0.2/5, every other action 0.2/5.
    std::size_t on_goal = task.state_index(0, 6);
    REQUIRE(task.expert.x_alphabet[on_goal] == "g6_c6");
    REQUIRE(task.expert.rows[on_goal][kActStay] == Catch::Approx(0.84).margin(1e-15));
    REQUIRE(task.expert.rows[on_goal][kActUp] == Catch::Approx(0.04).margin(1e-15));
    // Goal 13 from cell 12: one column to the right.
    std::size_t step_right = task.state_index(1, 12);
    REQUIRE(task.expert.rows[step_right][kActRight] == Catch::Approx(0.84).margin(1e-15));
    REQUIRE(task.expert.rows[step_right][kActLeft] == Catch::Approx(0.04).margin(1e-15));
    // Uniform state marginal.
    for (double p : task.expert.x_marginal) REQUIRE(p == Catch::Approx(0.01).margin(1e-15));

    // Features: location onehot plus normalized goal coordinates.
    const auto& f = task.features[on_goal];
    REQUIRE(f.size() == 27);
    REQUIRE(f[6] == 1.0);
    for (std::size_t i = 0; i < 25; ++i)
        if (i != 6) REQUIRE(f[i] == 0.0);
    REQUIRE(f[25] == Catch::Approx(0.25).margin(1e-15));  // goal 6 row 1 of 4
    REQUIRE(f[26] == Catch::Approx(0.25).margin(1e-15));  // goal 6 col 1 of 4
    const auto& g = task.features[task.state_index(3, 0)];  // goal 23 = row 4, col 3
    REQUIRE(g[0] == 1.0);
    REQUIRE(g[25] == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(g[26] == Catch::Approx(0.75).margin(1e-15));

    // The state -> feature map is injective across all 100 states.
    std::set<std::vector<double>> distinct(task.features.begin(), task.features.end());
    REQUIRE(distinct.size() == task.n_states());

    REQUIRE_THROWS_AS(task.state_index(4, 0), ArgumentError);
    REQUIRE_THROWS_AS(task.state_index(0, 25), ArgumentError);
    FeatureFn fn = task.feature_fn();
    REQUIRE(fn(5) == task.features[5]);
    REQUIRE_THROWS_AS(fn(100), ArgumentError);
}

TEST_CASE("expert noise is the conditional entropy knob", "[gridworld]") {
    ToyTask det = standard_task(0.0);
    REQUIRE(cond_entropy(det.expert) == 0.0);

    ToyTask uni = standard_task(1.0);
    REQUIRE(cond_entropy(uni.expert) == Catch::Approx(std::log(5.0)).margin(1e-14));

    // lambda = 0.25: every row is (0.8, 0.05 x4) up to permutation.
    ToyTask mid = standard_task(0.25);
    REQUIRE(cond_entropy(mid.expert) == Catch::Approx(0.7776612957674943).margin(1e-12));

    double prev = -1.0;
    for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double h = cond_entropy(standard_task(lam).expert);
        REQUIRE(h > prev);
        prev = h;
    }

    // Re-noising keeps everything but the rows fixed.
    ToyTask base = standard_task(0.2);
    ToyTask redone = with_expert_noise(base, 0.7);
    REQUIRE(redone.expert_noise == 0.7);
    REQUIRE(redone.goals == base.goals);
    REQUIRE(redone.features == base.features);
    REQUIRE(redone.expert.x_marginal == base.expert.x_marginal);
}

TEST_CASE("default goal split covers the board disjointly", "[gridworld]") {
    REQUIRE(default_task_goals() == std::vector<std::size_t>{6, 13, 16, 23});
    std::vector<std::size_t> pre = default_pretrain_goals(25, default_task_goals());
    REQUIRE(pre == std::vector<std::size_t>{0, 2, 4, 7, 9, 11, 14, 17, 19, 21, 24});
    for (std::size_t g : pre)
        for (std::size_t t : default_task_goals()) REQUIRE(g != t);
}

// ---- sampling ---------------------------------------------------------------

TEST_CASE("sample_dataset respects the support restriction", "[gap]") {
    ToyTask task = standard_task(0.5);
    std::vector<std::size_t> support = {3, 57};
    RngStream rng(77, 0);
    auto draws = sample_dataset(task, 2000, rng, &support);
    REQUIRE(draws.size() == 2000);
    for (const auto& d : draws) {
        REQUIRE((d.x == 3 || d.x == 57));
        REQUIRE(d.y < kGridActions);
    }
}

TEST_CASE("sample_dataset draws match the table frequencies", "[gap]") {
    ToyTask task = standard_task(0.5);
    const std::size_t n = 100000;

    // Restricted marginal: two equal-mass states -> 50/50.
    std::vector<std::size_t> support = {3, 57};
    RngStream rng(78, 0);
    auto draws = sample_dataset(task, n, rng, &support);
    std::vector<double> x_counts(2, 0.0);
    for (const auto& d : draws) x_counts[d.x == 3 ? 0 : 1] += 1.0;
    std::vector<double> x_expected(2, n / 2.0);
    REQUIRE(chi_square_stat(x_counts, x_expected) < chi_square_quantile(1.0, 1e-3));

    // Conditional rows: pin a single state and test the 5-way action split.
    std::size_t on_goal = task.state_index(0, 6);
    std::vector<std::size_t> single = {on_goal};
    RngStream rng2(79, 0);
    auto draws2 = sample_dataset(task, n, rng2, &single);
    std::vector<double> y_counts(kGridActions, 0.0);
    for (const auto& d : draws2) y_counts[d.y] += 1.0;
    std::vector<double> y_expected;
    for (double p : task.expert.rows[on_goal]) y_expected.push_back(p * n);
    REQUIRE(chi_square_stat(y_counts, y_expected) < chi_square_quantile(4.0, 1e-3));
}

TEST_CASE("sample_dataset rejects bad requests", "[gap]") {
    ToyTask task = standard_task(0.2);
    RngStream rng(80, 0);
    REQUIRE_THROWS_AS(sample_dataset(task, 0, rng), ArgumentError);
    std::vector<std::size_t> empty;
    REQUIRE_THROWS_AS(sample_dataset(task, 10, rng, &empty), ArgumentError);
    std::vector<std::size_t> oob = {100};
    REQUIRE_THROWS_AS(sample_dataset(task, 10, rng, &oob), ArgumentError);
    ToyTask dead = task;
    dead.expert.x_marginal[3] = 0.0;
    dead.expert.x_marginal[57] = 0.0;
    std::vector<std::size_t> support = {3, 57};
    REQUIRE_THROWS_AS(sample_dataset(dead, 10, rng, &support), ValidationError);
}

TEST_CASE("to_examples pairs cached features with drawn actions", "[gap]") {
    ToyTask task = standard_task(0.2);
    std::vector<StateAction> draws = {{2, 1}, {30, 4}};
    auto ex = to_examples(task, draws);
    REQUIRE(ex.size() == 2);
    REQUIRE(ex[0].x == task.features[2]);
    REQUIRE(ex[0].y == 1);
    REQUIRE(ex[1].x == task.features[30]);
    REQUIRE(ex[1].y == 4);
}

// ---- exact expected loss ----------------------------------------------------

TEST_CASE("exact expected loss equals the hand enumeration", "[gap]") {
    GridTaskConfig gcfg;
    gcfg.width = 2;
    gcfg.height = 2;
    gcfg.goals = {3};
    gcfg.expert_noise = 0.4;
    ToyTask task = make_gridworld_task(gcfg);

    Arch arch;
    arch.input_dim = task.input_dim;
    arch.hidden = {3};
    arch.n_outputs = kGridActions;
    RngStream rng(21, 0);
    ModelState m = ModelState::init(arch, rng);

    double manual = 0.0;
    for (std::size_t x = 0; x < task.n_states(); ++x) {
        ForwardTrace tr = forward(m, task.features[x]);
        for (std::size_t y = 0; y < kGridActions; ++y)
            manual += task.expert.x_marginal[x] * task.expert.rows[x][y] *
                      clipped_nll(tr.log_probs[y]);
    }
    REQUIRE(exact_expected_loss(m, task) == Catch::Approx(manual).margin(1e-12));
}

TEST_CASE("exact expected loss agrees with a large Monte Carlo estimate", "[gap]") {
    ToyTask task = standard_task(0.3);
    Arch arch;
    arch.input_dim = task.input_dim;
    arch.hidden = {8};
    arch.n_outputs = kGridActions;
    RngStream init_rng(31, 0);
    ModelState m = ModelState::init(arch, init_rng);
    double exact = exact_expected_loss(m, task);

    // Per-state losses are deterministic: cache them once.
    std::vector<std::vector<double>> loss_xy(task.n_states());
    for (std::size_t x = 0; x < task.n_states(); ++x) {
        ForwardTrace tr = forward(m, task.features[x]);
        for (std::size_t y = 0; y < kGridActions; ++y)
            loss_xy[x].push_back(clipped_nll(tr.log_probs[y]));
    }

    const std::size_t n = 200000;
    RngStream rng(32, 0);
    auto draws = sample_dataset(task, n, rng);
    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) losses[i] = loss_xy[draws[i].x][draws[i].y];
    double mc = mean(losses);
    double se = sample_std(losses) / std::sqrt(static_cast<double>(n));
    REQUIRE(std::abs(mc - exact) <= 3.0 * se + 1e-12);
}

// ---- regime runs ------------------------------------------------------------

TEST_CASE("run_regime rejects bad arguments up front", "[gap]") {
    ToyTask task = standard_task(0.3);
    GapRunConfig cfg = small_run_config();
    REQUIRE_THROWS_AS(run_regime(task, nullptr, Regime::Scratch, 0, cfg, 1), ArgumentError);
    GapRunConfig zero = cfg;
    zero.coverage = 0.0;
    REQUIRE_THROWS_AS(run_regime(task, nullptr, Regime::Scratch, 10, zero, 1), DomainError);
    GapRunConfig wide = cfg;
    wide.coverage = 1.5;
    REQUIRE_THROWS_AS(run_regime(task, nullptr, Regime::Scratch, 10, wide, 1), DomainError);
    REQUIRE_THROWS_AS(run_regime(task, nullptr, Regime::Frozen, 10, cfg, 1), ArgumentError);
    GridTaskConfig small;
    small.width = 4;
    small.height = 4;
    small.goals = {5};
    ToyTask other = make_gridworld_task(small);
    REQUIRE_THROWS_AS(run_regime(task, &other, Regime::Frozen, 10, cfg, 1), DimensionError);
}

TEST_CASE("scratch run reports an exact, reproducible gap", "[gap]") {
    ToyTask task = standard_task(0.3);
    GapRunConfig cfg = small_run_config();
    GapRun run = run_regime(task, nullptr, Regime::Scratch, 300, cfg, 5);
    const GapReport& rep = run.report;

    REQUIRE(rep.regime == "scratch");
    REQUIRE(rep.n == 300);
    REQUIRE(rep.seed == 5);
    REQUIRE_FALSE(rep.flagged);
    REQUIRE(rep.note.empty());

    // The gap is bookkeeping, not estimation: exact identity, and the stored
    // expected loss must reproduce from the returned model.
    REQUIRE(rep.gap == rep.expected_loss - rep.train_loss);
    REQUIRE(rep.expected_loss == exact_expected_loss(run.model, task));
    REQUIRE(rep.expected_loss >= cond_entropy(task.expert) - 1e-6);

    REQUIRE(std::isfinite(rep.trf));
    REQUIRE(rep.trf > 0.0);
    REQUIRE(rep.cmi_l1 >= 0.0);
    REQUIRE(rep.cmi_l2 >= 0.0);

    auto [elo, ehi] = run.model.encoder_range();
    REQUIRE(run.encoder_at_start.size() == ehi - elo);

    GapRun again = run_regime(task, nullptr, Regime::Scratch, 300, cfg, 5);
    REQUIRE(again.report.train_loss == rep.train_loss);
    REQUIRE(again.report.expected_loss == rep.expected_loss);
    REQUIRE(again.report.gap == rep.gap);
    REQUIRE(again.report.trf == rep.trf);
    REQUIRE(again.report.cmi_l1 == rep.cmi_l1);
    REQUIRE(again.report.cmi_l2 == rep.cmi_l2);
    REQUIRE(again.model.theta == run.model.theta);
}

TEST_CASE("full coverage on a deterministic expert closes the gap", "[gap]") {
    ToyTask task = standard_task(0.0);
    GapRunConfig cfg = small_run_config();
    cfg.hidden = 16;
    cfg.steps = 4000;
    cfg.lr = 0.3;
    cfg.batch = 16;
    cfg.cmi_draws = 1000;
    GapRun run = run_regime(task, nullptr, Regime::Scratch, 400, cfg, 3);
    REQUIRE_FALSE(run.report.flagged);
    REQUIRE(run.report.train_loss < 0.05);
    REQUIRE(run.report.expected_loss < 0.10);
    REQUIRE(std::abs(run.report.gap) <= 0.05);
}

TEST_CASE("a zeroed encoder yields a constant predictor pinned near log 5", "[gap]") {
    ToyTask task = standard_task(1.0);
    Arch arch;
    arch.input_dim = task.input_dim;
    arch.hidden = {8};
    arch.n_outputs = kGridActions;
    RngStream init_rng(41, 0);
    ModelState m = ModelState::init(arch, init_rng);
    auto [elo, ehi] = m.encoder_range();
    for (std::size_t i = elo; i < ehi; ++i) m.theta[i] = 0.0;

    RngStream data_rng(42, 0);
    auto examples = to_examples(task, sample_dataset(task, 200, data_rng));
    TrainConfig tc;
    tc.steps = 2000;
    tc.lr = 0.3;
    tc.batch = 8;
    tc.layer_lr_scale = {0.0, 1.0};
    RngStream train_rng(43, 0);
    double train_loss = train_sgd(m, examples, tc, train_rng);

    for (std::size_t i = elo; i < ehi; ++i) REQUIRE(m.theta[i] == 0.0);
    // All states collapse to the same hidden point, so predictions match.
    ForwardTrace a = forward(m, task.features[0]);
    ForwardTrace b = forward(m, task.features[99]);
    REQUIRE(a.probs == b.probs);

    // Against a uniform expert no predictor beats log 5, and the best constant
    // head sits right at it.
    const double ln5 = std::log(5.0);
    double expected = exact_expected_loss(m, task);
    REQUIRE(expected >= ln5 - 1e-12);
    REQUIRE(expected <= ln5 + 0.05);
    REQUIRE(train_loss >= ln5 - 0.10);
    REQUIRE(train_loss <= ln5 + 0.05);
    REQUIRE(std::abs(expected - train_loss) <= 0.10);
}

TEST_CASE("starved coverage opens a positive gap on every seed", "[gap]") {
    ToyTask task = standard_task(0.2);
    GapRunConfig cfg = small_run_config();
    cfg.steps = 1000;
    cfg.lr = 0.3;
    cfg.coverage = 0.01;  // one covered state out of 100
    cfg.cmi_draws = 500;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        GapRun run = run_regime(task, nullptr, Regime::Scratch, 200, cfg, seed);
        REQUIRE_FALSE(run.report.flagged);
        REQUIRE(run.report.gap > 0.3);
    }
}

TEST_CASE("frozen regime holds the pretrained encoder bit-for-bit", "[gap]") {
    ToyTask task = standard_task(0.3);
    GridTaskConfig pcfg;
    pcfg.goals = default_pretrain_goals(25, default_task_goals());
    ToyTask pre = make_gridworld_task(pcfg);

    GapRunConfig cfg = small_run_config();
    cfg.steps = 800;
    cfg.cmi_draws = 500;

    GapRun frozen = run_regime(task, &pre, Regime::Frozen, 200, cfg, 9);
    REQUIRE_FALSE(frozen.report.flagged);
    REQUIRE(frozen.report.regime == "frozen");
    REQUIRE(frozen.report.gap == frozen.report.expected_loss - frozen.report.train_loss);
    auto [elo, ehi] = frozen.model.encoder_range();
    for (std::size_t i = elo; i < ehi; ++i)
        REQUIRE(frozen.model.theta[i] == frozen.encoder_at_start[i - elo]);

    GapRun tuned = run_regime(task, &pre, Regime::Finetune, 200, cfg, 9);
    REQUIRE_FALSE(tuned.report.flagged);
    REQUIRE(tuned.report.regime == "finetune");
    // Same seed -> the same pretrained encoder went in...
    REQUIRE(tuned.encoder_at_start == frozen.encoder_at_start);
    // ...but the finetune run is allowed to move it.
    bool moved = false;
    for (std::size_t i = elo; i < ehi; ++i)
        moved = moved || (tuned.model.theta[i] != tuned.encoder_at_start[i - elo]);
    REQUIRE(moved);
}

// ---- sweep plumbing ---------------------------------------------------------

TEST_CASE("gap cell seeds separate every sweep coordinate", "[gap]") {
    REQUIRE(gap_cell_seed(7, 2, 1, 3) == 3020010ull);
    REQUIRE(gap_cell_seed(1, 0, 0, 0) == 1010001ull);
    std::set<std::uint64_t> seen;
    for (std::size_t level = 0; level < 2; ++level)
        for (std::size_t regime = 0; regime < 2; ++regime)
            for (std::size_t seed = 0; seed < 3; ++seed)
                seen.insert(gap_cell_seed(1, level, regime, seed));
    REQUIRE(seen.size() == 12);
}

TEST_CASE("regime names round trip and reject strangers", "[gap]") {
    REQUIRE(regime_name(Regime::Frozen) == "frozen");
    REQUIRE(regime_name(Regime::Finetune) == "finetune");
    REQUIRE(regime_name(Regime::Scratch) == "scratch");
    REQUIRE(regime_from_name("frozen") == Regime::Frozen);
    REQUIRE(regime_from_name("finetune") == Regime::Finetune);
    REQUIRE(regime_from_name("scratch") == Regime::Scratch);
    REQUIRE_THROWS_AS(regime_from_name("bogus"), ArgumentError);
}

TEST_CASE("entropy sweep smoke: rows, summary, correlations, csv", "[gap]") {
    GapSweepConfig cfg;
    cfg.grid.width = 4;
    cfg.grid.height = 4;
    cfg.grid.goals = {5};
    cfg.levels = {0.0, 1.0};
    cfg.regimes = {Regime::Scratch};
    cfg.seeds = 1;
    cfg.n = 100;
    cfg.base_seed = 2;
    cfg.run = small_run_config();
    cfg.run.hidden = 6;
    cfg.run.steps = 400;
    cfg.run.cmi_draws = 500;
    cfg.run.cmi_probe_units = 4;

    GapSweepResult result = sweep_entropy_gap(cfg);
    REQUIRE(result.rows.size() == 2);
    REQUIRE(result.rows[0].level == 0);
    REQUIRE(result.rows[0].h_nats == 0.0);
    REQUIRE(result.rows[1].level == 1);
    REQUIRE(result.rows[1].h_nats == Catch::Approx(std::log(5.0)).margin(1e-12));
    for (const auto& row : result.rows) {
        REQUIRE_FALSE(row.report.flagged);
        REQUIRE(row.report.regime == "scratch");
        REQUIRE(row.report.gap == row.report.expected_loss - row.report.train_loss);
    }

    REQUIRE(result.summary.size() == 2);
    REQUIRE(result.summary[0].gap_median == result.rows[0].report.gap);
    REQUIRE(result.summary[1].gap_median == result.rows[1].report.gap);
    REQUIRE(result.correlations.size() == 1);
    REQUIRE(result.correlations[0].first == "scratch");
    std::vector<std::string> names;
    for (const auto& kv : result.correlations[0].second) names.push_back(kv.first);
    REQUIRE(names == std::vector<std::string>{"gap", "trF", "cmi_l1", "cmi_l2"});

    std::string csv = gap_sweep_csv(result, "deadbeef");
    auto lines = split_lines(csv);
    REQUIRE(lines.size() == 4);
    REQUIRE(lines[0] == stamp_line("deadbeef"));
    REQUIRE(lines[1] ==
            "level,H_nats,regime,n,seed,train_loss,expected_loss,gap,trF,cmi_l1,cmi_l2,escaped_flags");
    auto fields = split_csv_line(lines[2]);
    REQUIRE(fields.size() == 12);
    REQUIRE(fields[2] == "scratch");
    REQUIRE(parse_double(fields[7]) == result.rows[0].report.gap);
    REQUIRE(fields[11] == "0");
}

TEST_CASE("sweep planning validates inputs and builds the pretrain split", "[gap]") {
    GapSweepConfig cfg;
    cfg.grid.width = 4;
    cfg.grid.height = 4;
    cfg.grid.goals = {5};
    cfg.seeds = 1;

    GapSweepConfig bad = cfg;
    bad.levels = {};
    REQUIRE_THROWS_AS(make_gap_sweep_plan(bad), ArgumentError);
    bad = cfg;
    bad.regimes = {};
    REQUIRE_THROWS_AS(make_gap_sweep_plan(bad), ArgumentError);
    bad = cfg;
    bad.seeds = 0;
    REQUIRE_THROWS_AS(make_gap_sweep_plan(bad), ArgumentError);

    // A frozen regime forces a pretraining task on the complementary goals.
    cfg.regimes = {Regime::Frozen};
    GapSweepPlan plan = make_gap_sweep_plan(cfg);
    REQUIRE(plan.tasks.size() == cfg.levels.size());
    REQUIRE(plan.cell_count() == cfg.levels.size());
    REQUIRE(plan.pretrain.goals.size() == 8);
    REQUIRE(plan.pretrain.n_states() == 128);
    for (std::size_t g : plan.pretrain.goals) REQUIRE(g != 5);
}

TEST_CASE("gap reports serialize every field", "[gap]") {
    GapReport r;
    r.regime = "frozen";
    r.n = 42;
    r.seed = 7;
    r.train_loss = 0.25;
    r.expected_loss = 0.75;
    r.gap = 0.5;
    r.cmi_l1 = 0.125;
    r.cmi_l2 = 0.0625;
    r.trf = 3.5;
    r.flagged = true;
    r.note = "training diverged";
    r.config_hash = "deadbeef";
    nlohmann::json j = gap_report_to_json(r);
    REQUIRE(j["regime"] == "frozen");
    REQUIRE(j["n"] == 42);
    REQUIRE(j["seed"] == 7);
    REQUIRE(j["train_loss"] == 0.25);
    REQUIRE(j["expected_loss"] == 0.75);
    REQUIRE(j["gap"] == 0.5);
    REQUIRE(j["cmi_l1"] == 0.125);
    REQUIRE(j["cmi_l2"] == 0.0625);
    REQUIRE(j["trF"] == 3.5);
    REQUIRE(j["flagged"] == true);
    REQUIRE(j["note"] == "training diverged");
    REQUIRE(j["config_hash"] == "deadbeef");
}

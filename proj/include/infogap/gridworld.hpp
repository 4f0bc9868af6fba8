#pragma once
// Enumerable imitation task: reach-goal navigation on a small grid. A state
// is (cell, goal); the expert follows a shortest path (horizontal moves
// first) with a tunable uniform-noise mix that sets H(Y|X). Features split
// into a context group (goal coordinates) and a location group (cell onehot),
// and the map from state to features is injective.

#include <cstddef>
#include <string>
#include <vector>

#include "infogap/cond_table.hpp"
#include "infogap/error.hpp"
#include "infogap/train.hpp"

namespace infogap {

// Action order is fixed: up, down, left, right, stay.
inline constexpr std::size_t kGridActions = 5;
inline constexpr std::size_t kActUp = 0, kActDown = 1, kActLeft = 2, kActRight = 3, kActStay = 4;

struct GridTaskConfig {
    std::size_t width = 5;
    std::size_t height = 5;
    std::vector<std::size_t> goals;  // goal cells of this split
    double expert_noise = 0.2;       // uniform mix weight in [0, 1]
};

struct ToyTask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::size_t> goals;
    double expert_noise = 0.0;
    CondTable expert;                           // states = goals x cells
    std::vector<std::vector<double>> features;  // per state, cached
    std::size_t input_dim = 0;

    std::size_t n_cells() const { return width * height; }
    std::size_t n_states() const { return goals.size() * n_cells(); }

    std::size_t state_index(std::size_t goal_idx, std::size_t cell) const {
        if (goal_idx >= goals.size() || cell >= n_cells())
            throw ArgumentError("ToyTask: state components out of range");
        return goal_idx * n_cells() + cell;
    }

    FeatureFn feature_fn() const {
        const auto* feats = &features;
        return [feats](std::size_t x) {
            if (x >= feats->size()) throw ArgumentError("ToyTask features: state out of range");
            return (*feats)[x];
        };
    }
};

// Shortest-path action with the horizontal leg taken first; `stay` on goal.
inline std::size_t expert_action(std::size_t cell, std::size_t goal, std::size_t width) {
    std::size_t r = cell / width, c = cell % width;
    std::size_t gr = goal / width, gc = goal % width;
    if (c < gc) return kActRight;
    if (c > gc) return kActLeft;
    if (r < gr) return kActDown;
    if (r > gr) return kActUp;
    return kActStay;
}

inline ToyTask make_gridworld_task(const GridTaskConfig& cfg) {
    if (cfg.width < 2 || cfg.height < 2) throw ArgumentError("make_gridworld_task: grid too small");
    if (cfg.goals.empty()) throw ArgumentError("make_gridworld_task: need at least one goal");
    if (!(cfg.expert_noise >= 0.0 && cfg.expert_noise <= 1.0))
        throw DomainError("make_gridworld_task: expert_noise in [0,1]");
    const std::size_t n_cells = cfg.width * cfg.height;
    if (n_cells * cfg.goals.size() > 10000)
        throw ArgumentError("make_gridworld_task: state space exceeds the enumerable budget");
    for (std::size_t g : cfg.goals)
        if (g >= n_cells) throw ArgumentError("make_gridworld_task: goal cell out of range");

    ToyTask task;
    task.width = cfg.width;
    task.height = cfg.height;
    task.goals = cfg.goals;
    task.expert_noise = cfg.expert_noise;
    task.input_dim = n_cells + 2;

    const std::size_t n_states = cfg.goals.size() * n_cells;
    std::vector<std::vector<double>> rows(n_states, std::vector<double>(kGridActions, 0.0));
    std::vector<std::string> x_names(n_states);
    task.features.resize(n_states);
    const double lam = cfg.expert_noise;
    const double u = 1.0 / static_cast<double>(kGridActions);
    for (std::size_t gi = 0; gi < cfg.goals.size(); ++gi) {
        std::size_t goal = cfg.goals[gi];
        double gr = static_cast<double>(goal / cfg.width) / static_cast<double>(cfg.height - 1);
        double gc = static_cast<double>(goal % cfg.width) / static_cast<double>(cfg.width - 1);
        for (std::size_t cell = 0; cell < n_cells; ++cell) {
            std::size_t x = gi * n_cells + cell;
            std::size_t best = expert_action(cell, goal, cfg.width);
            for (std::size_t a = 0; a < kGridActions; ++a)
                rows[x][a] = (a == best) ? (1.0 - lam) + lam * u : lam * u;
            x_names[x] = "g" + std::to_string(goal) + "_c" + std::to_string(cell);
            // Location group: cell onehot. Context group: goal coordinates.
            std::vector<double> f(task.input_dim, 0.0);
            f[cell] = 1.0;
            f[n_cells] = gr;
            f[n_cells + 1] = gc;
            task.features[x] = std::move(f);
        }
    }
    task.expert = make_cond_table(std::move(rows));
    task.expert.x_alphabet = std::move(x_names);
    task.expert.y_alphabet = {"up", "down", "left", "right", "stay"};
    return task;
}

// Same grid and goals at a different expert noise level; the entropy knob for
// sweeps. p(x), features, and budgets stay identical across levels.
inline ToyTask with_expert_noise(const ToyTask& base, double noise) {
    GridTaskConfig cfg;
    cfg.width = base.width;
    cfg.height = base.height;
    cfg.goals = base.goals;
    cfg.expert_noise = noise;
    return make_gridworld_task(cfg);
}

// Default split of a 5x5 grid: four interior task goals, with every second
// remaining cell as a pretraining goal so pretraining sees the whole board.
inline std::vector<std::size_t> default_task_goals() { return {6, 13, 16, 23}; }

inline std::vector<std::size_t> default_pretrain_goals(std::size_t n_cells,
                                                       const std::vector<std::size_t>& task_goals) {
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < n_cells; ++c) {
        bool is_task = false;
        for (std::size_t t : task_goals) is_task = is_task || (t == c);
        if (!is_task) rest.push_back(c);
    }
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < rest.size(); i += 2) picked.push_back(rest[i]);
    return picked;
}

}  // namespace infogap

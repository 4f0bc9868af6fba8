#pragma once
// Couples the entropy ladder to escape dynamics on a real model loss surface.
// Two runs with symmetry-broken initializations land in distinct (permutation
// related) minima; the linear-interpolation barrier between them is the
// barrier proxy, and SGD with data noise started in the sharper basin gives
// an empirical escape time toward the other basin.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "infogap/cond_table.hpp"
#include "infogap/curvature.hpp"
#include "infogap/error.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"
#include "infogap/train.hpp"

namespace infogap {

struct BridgeConfig {
    std::size_t hidden = 8;
    Activation activation = Activation::Tanh;
    bool bias = true;
    std::size_t train_steps = 3000;
    double train_lr = 0.5;
    double weight_decay = 0.01;
    std::size_t interp_points = 41;
    std::size_t escape_max_steps = 200000;
    double escape_lr = 0.4;
    std::size_t escape_batch = 2;
    std::uint64_t seed = 1;
};

struct BridgeRow {
    std::size_t level = 0;
    double h_nats = 0.0;
    double barrier_proxy = 0.0;   // max interpolated loss minus start-basin loss
    double basin_distance = 0.0;  // parameter-space distance between minima
    double sharper_trace = 0.0;   // Fisher trace at the chosen start basin
    double escape_steps = std::numeric_limits<double>::quiet_NaN();
    bool censored = false;
    bool flagged = false;
    std::string note;
};

inline std::vector<BridgeRow> entropy_escape_bridge(const std::vector<CondTable>& family,
                                                    const BridgeConfig& cfg) {
    if (family.empty()) throw ArgumentError("entropy_escape_bridge: empty family");
    std::vector<BridgeRow> rows;
    for (std::size_t level = 0; level < family.size(); ++level) {
        const CondTable& table = family[level];
        FeatureFn features = onehot_features(table.x_size());
        Arch arch;
        arch.input_dim = table.x_size();
        arch.hidden = {cfg.hidden};
        arch.n_outputs = table.y_size();
        arch.activation = cfg.activation;
        arch.bias = cfg.bias;

        TrainConfig tc;
        tc.steps = cfg.train_steps;
        tc.lr = cfg.train_lr;
        tc.weight_decay = cfg.weight_decay;

        BridgeRow row;
        row.level = level;
        row.h_nats = cond_entropy(table);

        RngStream rng_a(cfg.seed, 2 * level);
        RngStream rng_b(cfg.seed, 2 * level + 1);
        ModelState a = ModelState::init(arch, rng_a);
        ModelState b = ModelState::init(arch, rng_b);
        try {
            train_population_gd(a, table, features, tc);
            train_population_gd(b, table, features, tc);
        } catch (const DataError& e) {
            row.flagged = true;
            row.note = std::string("training diverged: ") + e.what();
            rows.push_back(row);
            continue;
        }

        double dist = 0.0;
        for (std::size_t i = 0; i < a.theta.size(); ++i) {
            double d = a.theta[i] - b.theta[i];
            dist += d * d;
        }
        row.basin_distance = std::sqrt(dist);
        if (row.basin_distance < 1e-3) {
            row.flagged = true;
            row.note = "initializations converged to the same basin";
            rows.push_back(row);
            continue;
        }

        // Start from the sharper basin (larger Fisher trace).
        double tr_a = fisher_exact(a, table, features, ParamScope::All, false).trace;
        double tr_b = fisher_exact(b, table, features, ParamScope::All, false).trace;
        const ModelState& start = (tr_a >= tr_b) ? a : b;
        const ModelState& other = (tr_a >= tr_b) ? b : a;
        row.sharper_trace = std::max(tr_a, tr_b);

        ModelState interp = start;
        double start_loss = population_nll(start, table, features);
        double peak = start_loss;
        for (std::size_t i = 0; i < cfg.interp_points; ++i) {
            double t = static_cast<double>(i) / static_cast<double>(cfg.interp_points - 1);
            for (std::size_t j = 0; j < interp.theta.size(); ++j)
                interp.theta[j] = (1.0 - t) * start.theta[j] + t * other.theta[j];
            peak = std::max(peak, population_nll(interp, table, features));
        }
        row.barrier_proxy = peak - start_loss;

        // SGD with sampling noise; escape when the iterate crosses the
        // midpoint hyperplane between the two minima.
        std::vector<double> dir(start.theta.size());
        std::vector<double> mid(start.theta.size());
        for (std::size_t j = 0; j < dir.size(); ++j) {
            dir[j] = other.theta[j] - start.theta[j];
            mid[j] = 0.5 * (other.theta[j] + start.theta[j]);
        }
        ModelState walker = start;
        RngStream esc_rng(cfg.seed, 1000000 + level);
        TrainConfig esc_cfg;
        esc_cfg.lr = cfg.escape_lr;
        std::vector<Example> batch(cfg.escape_batch);
        row.censored = true;
        for (std::size_t step = 1; step <= cfg.escape_max_steps; ++step) {
            for (std::size_t bi = 0; bi < cfg.escape_batch; ++bi) {
                std::size_t x = esc_rng.categorical(table.x_marginal);
                std::size_t y = esc_rng.categorical(table.rows[x]);
                batch[bi].x = features(x);
                batch[bi].y = y;
            }
            LossGrad lg = nll_loss(walker, batch);
            if (!std::isfinite(lg.loss)) {
                row.flagged = true;
                row.note = "escape walk diverged";
                break;
            }
            for (std::size_t j = 0; j < walker.theta.size(); ++j)
                walker.theta[j] -= esc_cfg.lr * lg.grad[j];
            double side = 0.0;
            for (std::size_t j = 0; j < dir.size(); ++j)
                side += (walker.theta[j] - mid[j]) * dir[j];
            if (side > 0.0) {
                row.escape_steps = static_cast<double>(step);
                row.censored = false;
                break;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace infogap

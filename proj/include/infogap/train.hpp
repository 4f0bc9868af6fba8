#pragma once
// Shared optimizers. Two modes cover every experiment: full-batch gradient
// descent on the exact population objective (enumerable tasks), and plain
// minibatch SGD on a finite sample. Per-layer learning-rate multipliers
// express frozen and slow-moving parameter blocks.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "infogap/cond_table.hpp"
#include "infogap/error.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"

namespace infogap {

// Maps a context index to the model input vector.
using FeatureFn = std::function<std::vector<double>(std::size_t)>;

inline FeatureFn onehot_features(std::size_t n) {
    return [n](std::size_t x) {
        if (x >= n) throw ArgumentError("onehot_features: index out of range");
        std::vector<double> v(n, 0.0);
        v[x] = 1.0;
        return v;
    };
}

// Exact population objective: sum_x p(x) sum_y p(y|x) * clipped_nll(y|x).
inline double population_nll(const ModelState& m, const CondTable& t, const FeatureFn& features) {
    if (m.arch.n_outputs != t.y_size()) throw DimensionError("population_nll: output/alphabet mismatch");
    double loss = 0.0;
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        if (t.x_marginal[x] == 0.0) continue;
        ForwardTrace tr = forward(m, features(x));
        for (std::size_t y = 0; y < t.y_size(); ++y) {
            double w = t.x_marginal[x] * t.rows[x][y];
            if (w > 0.0) loss += w * clipped_nll(tr.log_probs[y]);
        }
    }
    return loss;
}

inline LossGrad population_nll_grad(const ModelState& m, const CondTable& t,
                                    const FeatureFn& features,
                                    const std::vector<bool>* layer_trainable = nullptr) {
    if (m.arch.n_outputs != t.y_size()) throw DimensionError("population_nll_grad: output/alphabet mismatch");
    LossGrad r;
    r.grad.assign(m.theta.size(), 0.0);
    std::vector<double> up(m.arch.n_outputs, 0.0);
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        if (t.x_marginal[x] == 0.0) continue;
        ForwardTrace tr = forward(m, features(x));
        bool any = false;
        for (std::size_t y = 0; y < t.y_size(); ++y) {
            double w = t.x_marginal[x] * t.rows[x][y];
            if (w == 0.0) continue;
            double lp = tr.log_probs[y];
            r.loss += w * clipped_nll(lp);
            if (-lp < kLossClip) {
                up[y] = -w;
                any = true;
            }
        }
        if (any) {
            backward_into(m, tr, up, 1.0, r.grad, layer_trainable);
            for (auto& u : up) u = 0.0;
        }
    }
    return r;
}

struct TrainConfig {
    std::size_t steps = 1000;
    double lr = 0.1;
    double weight_decay = 0.0;
    std::size_t batch = 0;                   // 0 means full batch / population
    std::vector<double> layer_lr_scale;      // empty means 1.0 everywhere
};

namespace detail {

inline void apply_update(ModelState& m, const std::vector<double>& grad, const TrainConfig& cfg) {
    for (std::size_t l = 0; l < m.slices.size(); ++l) {
        double lr = cfg.lr;
        if (!cfg.layer_lr_scale.empty()) {
            if (cfg.layer_lr_scale.size() != m.slices.size())
                throw DimensionError("apply_update: lr scale size != layer count");
            lr *= cfg.layer_lr_scale[l];
        }
        if (lr == 0.0) continue;  // frozen slice stays bit-identical
        const LayerSlice& s = m.slices[l];
        for (std::size_t i = s.w_begin; i < s.end; ++i)
            m.theta[i] -= lr * (grad[i] + cfg.weight_decay * m.theta[i]);
    }
}

inline std::vector<bool> trainable_mask(const ModelState& m, const TrainConfig& cfg) {
    std::vector<bool> mask(m.slices.size(), true);
    if (!cfg.layer_lr_scale.empty())
        for (std::size_t l = 0; l < mask.size(); ++l) mask[l] = cfg.layer_lr_scale[l] != 0.0;
    return mask;
}

}  // namespace detail

// Full-batch descent on the exact population objective. Returns final loss
// (decay excluded). Non-finite objectives abort with DataError.
inline double train_population_gd(ModelState& m, const CondTable& t, const FeatureFn& features,
                                  const TrainConfig& cfg) {
    auto mask = detail::trainable_mask(m, cfg);
    double loss = 0.0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        LossGrad lg = population_nll_grad(m, t, features, &mask);
        loss = lg.loss;
        if (!std::isfinite(loss)) throw DataError("train_population_gd: objective diverged");
        detail::apply_update(m, lg.grad, cfg);
    }
    return population_nll(m, t, features);
}

// Minibatch SGD over a fixed training sample, batches drawn with replacement.
inline double train_sgd(ModelState& m, std::span<const Example> data, const TrainConfig& cfg,
                        RngStream& rng) {
    if (data.empty()) throw ArgumentError("train_sgd: empty dataset");
    if (cfg.batch == 0) throw ArgumentError("train_sgd: batch size must be positive");
    auto mask = detail::trainable_mask(m, cfg);
    std::vector<Example> batch(cfg.batch);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t b = 0; b < cfg.batch; ++b)
            batch[b] = data[rng.uniform_below(data.size())];
        LossGrad lg = nll_loss(m, batch, &mask);
        if (!std::isfinite(lg.loss)) throw DataError("train_sgd: objective diverged");
        detail::apply_update(m, lg.grad, cfg);
    }
    double final_loss = 0.0;
    for (const auto& ex : data) {
        ForwardTrace tr = forward(m, ex.x);
        final_loss += clipped_nll(tr.log_probs[ex.y]);
    }
    return final_loss / static_cast<double>(data.size());
}

}  // namespace infogap

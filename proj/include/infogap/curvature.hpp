#pragma once
// Curvature instruments: Fisher information of the model policy under a
// reference conditional distribution, finite-difference Hessians of arbitrary
// smooth objectives, and the score-based ceiling that converts entropy gaps
// into a Fisher-trace bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/cond_table.hpp"
#include "infogap/error.hpp"
#include "infogap/matrix.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"
#include "infogap/stats.hpp"
#include "infogap/train.hpp"

namespace infogap {

// Which flat-parameter block the curvature is measured over.
enum class ParamScope { All, Encoder, Head };

inline std::string param_scope_name(ParamScope s) {
    switch (s) {
        case ParamScope::All: return "all";
        case ParamScope::Encoder: return "encoder";
        default: return "head";
    }
}

inline ParamScope param_scope_from_name(const std::string& s) {
    if (s == "all") return ParamScope::All;
    if (s == "encoder") return ParamScope::Encoder;
    if (s == "head") return ParamScope::Head;
    throw ArgumentError("unknown parameter scope '" + s + "'");
}

inline std::pair<std::size_t, std::size_t> scope_range(const ModelState& m, ParamScope s) {
    switch (s) {
        case ParamScope::All: return {0, m.param_count()};
        case ParamScope::Encoder: return m.encoder_range();
        default: return m.head_range();
    }
}

struct FisherReport {
    std::string mode;  // "exact" or "sampled"
    ParamScope scope = ParamScope::All;
    std::size_t k = 0;  // scoped parameter count
    double trace = 0.0;
    std::vector<double> top_eigenvalues;
    std::optional<Matrix> matrix;
    std::size_t draws = 0;        // sampled mode only
    double trace_stderr = 0.0;    // sampled mode only
};

// Exact Fisher by full enumeration over x and y:
//   F = sum_x p(x) sum_y p_model(y|x) g g^T,  g = d/dtheta log p_model(y|x),
// restricted to the scoped parameter block.
inline FisherReport fisher_exact(const ModelState& m, const CondTable& t, const FeatureFn& features,
                                 ParamScope scope = ParamScope::All, bool with_matrix = true) {
    if (m.arch.n_outputs != t.y_size()) throw DimensionError("fisher_exact: output/alphabet mismatch");
    auto [lo, hi] = scope_range(m, scope);
    const std::size_t k = hi - lo;
    if (k == 0) throw ArgumentError("fisher_exact: empty parameter scope");
    FisherReport rep;
    rep.mode = "exact";
    rep.scope = scope;
    rep.k = k;
    if (with_matrix) rep.matrix = Matrix::zeros(k, k);

    std::vector<double> g(m.param_count());
    std::vector<double> up(m.arch.n_outputs, 0.0);
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        double px = t.x_marginal[x];
        if (px == 0.0) continue;
        ForwardTrace tr = forward(m, features(x));
        for (std::size_t y = 0; y < t.y_size(); ++y) {
            double w = px * tr.probs[y];
            if (w == 0.0) continue;
            std::fill(g.begin(), g.end(), 0.0);
            up[y] = 1.0;
            backward_into(m, tr, up, 1.0, g);
            up[y] = 0.0;
            double sq = 0.0;
            for (std::size_t i = lo; i < hi; ++i) sq += g[i] * g[i];
            rep.trace += w * sq;
            if (rep.matrix) {
                Matrix& f = *rep.matrix;
                for (std::size_t i = lo; i < hi; ++i) {
                    double wi = w * g[i];
                    if (wi == 0.0) continue;
                    for (std::size_t j = lo; j < hi; ++j) f.at(i - lo, j - lo) += wi * g[j];
                }
            }
        }
    }
    if (rep.matrix) {
        auto pairs = sym_eigen(*rep.matrix);
        for (std::size_t i = 0; i < std::min<std::size_t>(5, pairs.size()); ++i)
            rep.top_eigenvalues.push_back(pairs[i].value);
    }
    return rep;
}

// Monte Carlo Fisher trace: draws (x, y) from p(x) p_model(y|x) and averages
// the squared score norm. Standard error comes from the draw variance.
inline FisherReport fisher_sampled(const ModelState& m, const CondTable& t,
                                   const FeatureFn& features, std::size_t draws, RngStream& rng,
                                   ParamScope scope = ParamScope::All) {
    if (draws == 0) throw ArgumentError("fisher_sampled: need at least one draw");
    if (m.arch.n_outputs != t.y_size()) throw DimensionError("fisher_sampled: output/alphabet mismatch");
    auto [lo, hi] = scope_range(m, scope);
    if (hi == lo) throw ArgumentError("fisher_sampled: empty parameter scope");
    FisherReport rep;
    rep.mode = "sampled";
    rep.scope = scope;
    rep.k = hi - lo;
    rep.draws = draws;

    std::vector<double> g(m.param_count());
    std::vector<double> up(m.arch.n_outputs, 0.0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        std::size_t x = rng.categorical(t.x_marginal);
        ForwardTrace tr = forward(m, features(x));
        std::size_t y = rng.categorical(tr.probs);
        std::fill(g.begin(), g.end(), 0.0);
        up[y] = 1.0;
        backward_into(m, tr, up, 1.0, g);
        up[y] = 0.0;
        double sq = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sq += g[i] * g[i];
        sum += sq;
        sum_sq += sq * sq;
    }
    const double n = static_cast<double>(draws);
    rep.trace = sum / n;
    if (draws > 1) {
        double var = (sum_sq - sum * sum / n) / (n - 1.0);
        rep.trace_stderr = std::sqrt(std::max(var, 0.0) / n);
    }
    return rep;
}

// ---- finite-difference Hessian ---------------------------------------------

using GradFn = std::function<std::vector<double>(std::span<const double>)>;

// Symmetric central-difference Hessian of a smooth objective given its exact
// gradient. Column j uses step rel_step * (1 + |theta_j|); the result is
// symmetrized by averaging. Guarded to K <= 300 for the O(K^2) cost.
inline Matrix hessian_fd(const GradFn& grad_fn, std::span<const double> theta,
                         double rel_step = 1e-4) {
    const std::size_t k = theta.size();
    if (k == 0) throw ArgumentError("hessian_fd: empty parameter vector");
    if (k > 300) throw ArgumentError("hessian_fd: parameter count exceeds the K <= 300 guard");
    if (!(rel_step > 0.0)) throw DomainError("hessian_fd: step must be positive");
    Matrix h(k, k);
    std::vector<double> point(theta.begin(), theta.end());
    for (std::size_t j = 0; j < k; ++j) {
        const double step = rel_step * (1.0 + std::abs(theta[j]));
        const double saved = point[j];
        point[j] = saved + step;
        std::vector<double> gp = grad_fn(point);
        point[j] = saved - step;
        std::vector<double> gm = grad_fn(point);
        point[j] = saved;
        if (gp.size() != k || gm.size() != k) throw DimensionError("hessian_fd: gradient size mismatch");
        for (std::size_t i = 0; i < k; ++i) {
            double v = (gp[i] - gm[i]) / (2.0 * step);
            if (!std::isfinite(v)) throw DataError("hessian_fd: non-finite difference quotient");
            h.at(i, j) = v;
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            double v = 0.5 * (h.at(i, j) + h.at(j, i));
            h.at(i, j) = v;
            h.at(j, i) = v;
        }
    return h;
}

// Hessian of the mean clipped NLL on a fixed batch.
inline Matrix hessian_fd(const ModelState& m, std::span<const Example> batch,
                         double rel_step = 1e-4) {
    ModelState probe = m;
    GradFn fn = [&probe, batch](std::span<const double> th) {
        probe.theta.assign(th.begin(), th.end());
        return nll_loss(probe, batch).grad;
    };
    return hessian_fd(fn, m.theta, rel_step);
}

// ---- entropy-gap score ceiling ---------------------------------------------

struct ScoreBoundRow {
    std::size_t x = 0;
    double gap = 0.0;       // D_x
    double eps = 0.0;       // effective minimum support probability
    double c = 0.0;         // per-coordinate score ceiling C_x
};

struct ScoreBoundReport {
    std::vector<ScoreBoundRow> rows;
    double delta_theta = 0.0;
    std::size_t k = 1;
    double trace_bound = 0.0;  // max_x k * C_x^2
};

namespace detail {

inline ScoreBoundReport score_bound_impl(const CondTable& t, std::span<const double> eps_by_x,
                                         double delta_theta, std::size_t k) {
    if (!(delta_theta > 0.0)) throw DomainError("score_bound: delta_theta must be positive");
    if (k == 0) throw DomainError("score_bound: k must be positive");
    ScoreBoundReport rep;
    rep.delta_theta = delta_theta;
    rep.k = k;
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        ScoreBoundRow row;
        row.x = x;
        row.gap = entropy_gap(t, x);
        row.eps = eps_by_x[x];
        if (!(row.eps > 0.0)) throw DomainError("score_bound: eps must be positive");
        row.c = std::log1p(std::sqrt(2.0 * std::max(row.gap, 0.0)) / row.eps) / delta_theta;
        rep.rows.push_back(row);
        rep.trace_bound = std::max(rep.trace_bound, static_cast<double>(k) * row.c * row.c);
    }
    return rep;
}

}  // namespace detail

// Ceiling on per-coordinate scores from the entropy gap alone:
//   C_x = log(1 + sqrt(2 D_x) / eps_x) / delta_theta,
// with eps_x = max(min support probability of the reference row, eps_floor).
// The Fisher-trace bound is max_x k * C_x^2. C_x = 0 exactly when D_x = 0.
inline ScoreBoundReport score_bound(const CondTable& t, double eps_floor, double delta_theta,
                                    std::size_t k = 1) {
    if (!(eps_floor > 0.0)) throw DomainError("score_bound: eps_floor must be positive");
    std::vector<double> eps(t.x_size());
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        auto ref = reference_set(t, x);
        double pmin = 1.0;
        for (std::size_t y : ref) pmin = std::min(pmin, t.rows[x][y]);
        eps[x] = std::max(pmin, eps_floor);
    }
    return detail::score_bound_impl(t, eps, delta_theta, k);
}

// Same ceiling with eps_x measured from a trained model's own probabilities
// over the reference support (floored to keep logs finite).
inline ScoreBoundReport score_bound_measured(const CondTable& t, const ModelState& m,
                                             const FeatureFn& features, double eps_floor,
                                             double delta_theta, std::size_t k = 1) {
    if (!(eps_floor > 0.0)) throw DomainError("score_bound_measured: eps_floor must be positive");
    if (m.arch.n_outputs != t.y_size())
        throw DimensionError("score_bound_measured: output/alphabet mismatch");
    std::vector<double> eps(t.x_size());
    for (std::size_t x = 0; x < t.x_size(); ++x) {
        auto ref = reference_set(t, x);
        ForwardTrace tr = forward(m, features(x));
        double pmin = 1.0;
        for (std::size_t y : ref) pmin = std::min(pmin, tr.probs[y]);
        eps[x] = std::max(pmin, eps_floor);
    }
    return detail::score_bound_impl(t, eps, delta_theta, k);
}

// ---- entropy sweep ----------------------------------------------------------

struct CurvatureSweepConfig {
    std::size_t levels = 6;
    std::size_t y_size = 4;
    std::size_t x_size = 6;
    std::size_t hidden = 8;
    Activation activation = Activation::Softplus;
    bool bias = false;
    std::size_t steps = 4000;
    double lr = 0.5;
    double weight_decay = 0.05;
    std::size_t seeds = 10;
    std::uint64_t base_seed = 1;
    ParamScope fisher_scope = ParamScope::Encoder;
    double eps_floor = 1e-6;
    double delta_theta = 1e-2;
};

struct CurvatureSweepRow {
    std::size_t level = 0;
    double h_nats = 0.0;
    double gap = 0.0;           // max_x D_x at this level
    double trf_median = 0.0;
    double trf_iqr = 0.0;
    double bound_median = 0.0;  // Score-ceiling trace bound, measured eps
    double nll_median = 0.0;
    std::size_t diverged = 0;   // seeds dropped for non-finite objectives
    bool flagged = false;       // true when any seed diverged
};

struct CurvatureSweepResult {
    std::vector<CurvatureSweepRow> rows;
    double spearman_h_trf = 0.0;  // across levels, on per-level medians
};

// Trains a fresh probe model per (level, seed) on the exact population
// objective with weight decay, then measures the scoped Fisher trace and the
// measured-eps score ceiling. Divergent seeds are dropped and flagged, never
// silently substituted.
inline CurvatureSweepResult entropy_curvature_sweep(const CurvatureSweepConfig& cfg) {
    RngStream family_rng(cfg.base_seed, 0);
    auto family = make_entropy_family(cfg.levels, cfg.y_size, family_rng, cfg.x_size);
    FeatureFn features = onehot_features(cfg.x_size);

    Arch arch;
    arch.input_dim = cfg.x_size;
    arch.hidden = {cfg.hidden};
    arch.n_outputs = cfg.y_size;
    arch.activation = cfg.activation;
    arch.bias = cfg.bias;

    TrainConfig tc;
    tc.steps = cfg.steps;
    tc.lr = cfg.lr;
    tc.weight_decay = cfg.weight_decay;

    CurvatureSweepResult result;
    std::vector<double> h_by_level, trf_by_level;
    for (std::size_t level = 0; level < family.size(); ++level) {
        const CondTable& table = family[level];
        CurvatureSweepRow row;
        row.level = level;
        row.h_nats = cond_entropy(table);
        for (std::size_t x = 0; x < table.x_size(); ++x)
            row.gap = std::max(row.gap, entropy_gap(table, x));

        std::vector<double> traces, bounds, nlls;
        for (std::size_t s = 0; s < cfg.seeds; ++s) {
            RngStream init_rng(cfg.base_seed, 1000 + level * cfg.seeds + s);
            ModelState m = ModelState::init(arch, init_rng);
            double nll = 0.0;
            try {
                nll = train_population_gd(m, table, features, tc);
            } catch (const DataError&) {
                row.diverged += 1;
                row.flagged = true;
                continue;
            }
            FisherReport fr = fisher_exact(m, table, features, cfg.fisher_scope, false);
            ScoreBoundReport sb = score_bound_measured(table, m, features, cfg.eps_floor,
                                                      cfg.delta_theta, fr.k);
            traces.push_back(fr.trace);
            bounds.push_back(sb.trace_bound);
            nlls.push_back(nll);
        }
        if (!traces.empty()) {
            row.trf_median = median(traces);
            row.trf_iqr = iqr(traces);
            row.bound_median = median(bounds);
            row.nll_median = median(nlls);
            h_by_level.push_back(row.h_nats);
            trf_by_level.push_back(row.trf_median);
        } else {
            row.flagged = true;
        }
        result.rows.push_back(row);
    }
    if (h_by_level.size() >= 2) result.spearman_h_trf = spearman(h_by_level, trf_by_level);
    return result;
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::json fisher_report_to_json(const FisherReport& r) {
    nlohmann::json j;
    j["mode"] = r.mode;
    j["scope"] = param_scope_name(r.scope);
    j["k"] = r.k;
    j["trace"] = r.trace;
    j["top_eigenvalues"] = r.top_eigenvalues;
    if (r.matrix) j["matrix"] = matrix_to_json(*r.matrix);
    if (r.mode == "sampled") {
        j["draws"] = r.draws;
        j["trace_stderr"] = r.trace_stderr;
    }
    return j;
}

inline nlohmann::json score_bound_to_json(const ScoreBoundReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"x", row.x}, {"gap", row.gap}, {"eps", row.eps}, {"c", row.c}});
    nlohmann::json j;
    j["rows"] = rows;
    j["delta_theta"] = r.delta_theta;
    j["k"] = r.k;
    j["trace_bound"] = r.trace_bound;
    return j;
}

}  // namespace infogap

#pragma once
// Small MLP policy head with exact reverse-mode gradients. The forward pass
// records a tape of primitive ops (affine, pointwise nonlinearity,
// log-softmax); the backward pass replays it in reverse. Parameters live in
// one flat vector so curvature code can slice them freely.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/error.hpp"
#include "infogap/rng.hpp"

namespace infogap {

enum class Activation { Tanh, Softplus };

inline std::string activation_name(Activation a) {
    return a == Activation::Tanh ? "tanh" : "softplus";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "softplus") return Activation::Softplus;
    throw ArgumentError("unknown activation '" + s + "'");
}

struct Arch {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;  // widths of hidden layers, possibly empty
    std::size_t n_outputs = 0;
    Activation activation = Activation::Tanh;
    bool bias = true;

    std::size_t n_layers() const { return hidden.size() + 1; }

    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w;
        w.push_back(input_dim);
        for (auto h : hidden) w.push_back(h);
        w.push_back(n_outputs);
        return w;
    }
};

inline void validate(const Arch& a) {
    if (a.input_dim == 0) throw ValidationError("Arch: input_dim must be positive");
    if (a.n_outputs < 2) throw ValidationError("Arch: need at least 2 outputs");
    for (auto h : a.hidden)
        if (h == 0) throw ValidationError("Arch: zero-width hidden layer");
}

// Flat-parameter slice of one affine layer.
struct LayerSlice {
    std::size_t in = 0, out = 0;
    std::size_t w_begin = 0;  // out*in weights, row-major by output unit
    std::size_t b_begin = 0;  // out biases (b_begin == w_end when absent)
    std::size_t end = 0;
};

struct ModelState {
    Arch arch;
    std::vector<double> theta;
    std::vector<LayerSlice> slices;

    static ModelState zeros(const Arch& arch) {
        validate(arch);
        ModelState m;
        m.arch = arch;
        auto w = arch.widths();
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < w.size(); ++l) {
            LayerSlice s;
            s.in = w[l];
            s.out = w[l + 1];
            s.w_begin = off;
            s.b_begin = off + s.in * s.out;
            s.end = s.b_begin + (arch.bias ? s.out : 0);
            off = s.end;
            m.slices.push_back(s);
        }
        m.theta.assign(off, 0.0);
        return m;
    }

    // Gaussian weights scaled by 1/sqrt(fan_in); biases start at zero.
    static ModelState init(const Arch& arch, RngStream& rng) {
        ModelState m = zeros(arch);
        for (const auto& s : m.slices) {
            double scale = 1.0 / std::sqrt(static_cast<double>(s.in));
            for (std::size_t i = s.w_begin; i < s.b_begin; ++i) m.theta[i] = scale * rng.normal();
        }
        return m;
    }

    std::size_t param_count() const { return theta.size(); }

    // Encoder = every layer before the output head.
    std::pair<std::size_t, std::size_t> encoder_range() const {
        return {0, slices.back().w_begin};
    }
    std::pair<std::size_t, std::size_t> head_range() const {
        return {slices.back().w_begin, theta.size()};
    }
};

// Everything the backward pass needs, captured during forward.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> post;  // post-activation per hidden layer
    std::vector<double> logits;
    std::vector<double> log_probs;
    std::vector<double> probs;
};

namespace detail {

inline void affine(const ModelState& m, std::size_t l, std::span<const double> in,
                   std::vector<double>& out) {
    const LayerSlice& s = m.slices[l];
    out.assign(s.out, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
        double acc = m.arch.bias ? m.theta[s.b_begin + o] : 0.0;
        const double* w = m.theta.data() + s.w_begin + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) acc += w[i] * in[i];
        out[o] = acc;
    }
}

inline double act_forward(Activation a, double x) {
    if (a == Activation::Tanh) return std::tanh(x);
    // softplus, stable for large |x|
    return (x > 0.0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Derivative recovered from the post-activation value.
inline double act_deriv_from_post(Activation a, double h) {
    if (a == Activation::Tanh) return 1.0 - h * h;
    return 1.0 - std::exp(-h);  // sigmoid of the pre-activation
}

}  // namespace detail

inline ForwardTrace forward(const ModelState& m, std::span<const double> x) {
    if (x.size() != m.arch.input_dim) throw DimensionError("forward: input dimension mismatch");
    ForwardTrace t;
    t.input.assign(x.begin(), x.end());
    std::vector<double> cur(t.input);
    const std::size_t L = m.slices.size();
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        detail::affine(m, l, cur, next);
        for (auto& v : next) v = detail::act_forward(m.arch.activation, v);
        t.post.push_back(next);
        cur = next;
    }
    detail::affine(m, L - 1, cur, t.logits);

    double mx = t.logits[0];
    for (double v : t.logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : t.logits) z += std::exp(v - mx);
    double lse = mx + std::log(z);
    t.log_probs.resize(t.logits.size());
    t.probs.resize(t.logits.size());
    for (std::size_t i = 0; i < t.logits.size(); ++i) {
        t.log_probs[i] = t.logits[i] - lse;
        t.probs[i] = std::exp(t.log_probs[i]);
    }
    return t;
}

// Reverse sweep. `d_log_probs` is the objective gradient with respect to the
// log-probability outputs; `scale` times the parameter gradient is added into
// `grad_out` (size K). Frozen layers (mask false) contribute exact zeros.
inline void backward_into(const ModelState& m, const ForwardTrace& t,
                          std::span<const double> d_log_probs, double scale,
                          std::span<double> grad_out,
                          const std::vector<bool>* layer_trainable = nullptr) {
    const std::size_t L = m.slices.size();
    if (d_log_probs.size() != m.arch.n_outputs) throw DimensionError("backward_into: bad upstream size");
    if (grad_out.size() != m.theta.size()) throw DimensionError("backward_into: bad gradient buffer");
    if (layer_trainable && layer_trainable->size() != L)
        throw DimensionError("backward_into: mask size != layer count");

    // log-softmax backward: d_logits = d - softmax * sum(d)
    double dsum = 0.0;
    for (double v : d_log_probs) dsum += v;
    std::vector<double> dout(d_log_probs.size());
    for (std::size_t i = 0; i < dout.size(); ++i) dout[i] = d_log_probs[i] - t.probs[i] * dsum;

    std::vector<double> din;
    for (std::size_t li = L; li-- > 0;) {
        const LayerSlice& s = m.slices[li];
        const std::vector<double>& in = (li == 0) ? t.input : t.post[li - 1];
        const bool trainable = !layer_trainable || (*layer_trainable)[li];
        if (trainable) {
            for (std::size_t o = 0; o < s.out; ++o) {
                double g = scale * dout[o];
                double* gw = grad_out.data() + s.w_begin + o * s.in;
                for (std::size_t i = 0; i < s.in; ++i) gw[i] += g * in[i];
                if (m.arch.bias) grad_out[s.b_begin + o] += g;
            }
        }
        if (li == 0) break;
        din.assign(s.in, 0.0);
        for (std::size_t o = 0; o < s.out; ++o) {
            const double* w = m.theta.data() + s.w_begin + o * s.in;
            double g = dout[o];
            for (std::size_t i = 0; i < s.in; ++i) din[i] += w[i] * g;
        }
        const std::vector<double>& h = t.post[li - 1];
        for (std::size_t i = 0; i < s.in; ++i)
            din[i] *= detail::act_deriv_from_post(m.arch.activation, h[i]);
        dout = din;
    }
}

// Gradient of log p(y | x) with respect to all parameters.
inline std::vector<double> grad_logp(const ModelState& m, std::span<const double> x, std::size_t y) {
    if (y >= m.arch.n_outputs) throw ArgumentError("grad_logp: label out of range");
    ForwardTrace t = forward(m, x);
    std::vector<double> up(m.arch.n_outputs, 0.0);
    up[y] = 1.0;
    std::vector<double> g(m.theta.size(), 0.0);
    backward_into(m, t, up, 1.0, g);
    return g;
}

// Bounded per-example loss: -log p clipped above at kLossClip nats. The
// probability floor 1e-9 used at evaluation time is subsumed by the clip
// (-log 1e-9 > kLossClip), so one formula serves train and eval.
inline constexpr double kLossClip = 20.0;

inline double clipped_nll(double log_p) {
    double l = -log_p;
    if (!(l < kLossClip)) return kLossClip;  // also catches inf/nan from p == 0
    return l;
}

struct Example {
    std::vector<double> x;
    std::size_t y = 0;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean clipped NLL over a batch with its exact gradient. Clipped examples sit
// on the plateau and contribute zero gradient. Accumulation order is fixed by
// the batch order, so results are bit-reproducible.
inline LossGrad nll_loss(const ModelState& m, std::span<const Example> batch,
                         const std::vector<bool>* layer_trainable = nullptr) {
    if (batch.empty()) throw ArgumentError("nll_loss: empty batch");
    LossGrad r;
    r.grad.assign(m.theta.size(), 0.0);
    const double w = 1.0 / static_cast<double>(batch.size());
    std::vector<double> up(m.arch.n_outputs, 0.0);
    for (const auto& ex : batch) {
        if (ex.y >= m.arch.n_outputs) throw ArgumentError("nll_loss: label out of range");
        ForwardTrace t = forward(m, ex.x);
        double lp = t.log_probs[ex.y];
        r.loss += w * clipped_nll(lp);
        if (-lp < kLossClip) {
            up[ex.y] = -1.0;
            backward_into(m, t, up, w, r.grad, layer_trainable);
            up[ex.y] = 0.0;
        }
    }
    return r;
}

// ---- checkpoints -----------------------------------------------------------

inline nlohmann::json arch_to_json(const Arch& a) {
    nlohmann::json j;
    j["input_dim"] = a.input_dim;
    j["hidden"] = a.hidden;
    j["n_outputs"] = a.n_outputs;
    j["activation"] = activation_name(a.activation);
    j["bias"] = a.bias;
    return j;
}

inline Arch arch_from_json(const nlohmann::json& j) {
    Arch a;
    a.input_dim = j.at("input_dim").get<std::size_t>();
    a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    a.n_outputs = j.at("n_outputs").get<std::size_t>();
    a.activation = activation_from_name(j.at("activation").get<std::string>());
    a.bias = j.at("bias").get<bool>();
    validate(a);
    return a;
}

inline nlohmann::json checkpoint_to_json(const ModelState& m) {
    nlohmann::json j;
    j["arch"] = arch_to_json(m.arch);
    j["theta"] = m.theta;
    return j;
}

inline ModelState checkpoint_from_json(const nlohmann::json& j) {
    ModelState m = ModelState::zeros(arch_from_json(j.at("arch")));
    auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != m.theta.size())
        throw DimensionError("checkpoint_from_json: parameter count mismatch");
    m.theta = std::move(theta);
    return m;
}

}  // namespace infogap

#pragma once
// Plug-in information estimates on finite joint histograms, plus the binning
// machinery that turns continuous network activations into discrete columns.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/error.hpp"
#include "infogap/model.hpp"

namespace infogap {

struct AxisSpec {
    std::string name;
    std::size_t size = 0;
};

struct JointHistogram {
    std::vector<AxisSpec> axes;
    std::vector<std::uint64_t> counts;  // row-major over axis indices
    std::uint64_t total = 0;

    std::size_t axis_index(const std::string& name) const {
        for (std::size_t i = 0; i < axes.size(); ++i)
            if (axes[i].name == name) return i;
        throw ArgumentError("JointHistogram: unknown axis '" + name + "'");
    }

    std::size_t flat_index(std::span<const std::size_t> idx) const {
        if (idx.size() != axes.size()) throw DimensionError("JointHistogram: index arity mismatch");
        std::size_t flat = 0;
        for (std::size_t d = 0; d < axes.size(); ++d) {
            if (idx[d] >= axes[d].size) throw ArgumentError("JointHistogram: index out of range");
            flat = flat * axes[d].size + idx[d];
        }
        return flat;
    }
};

inline JointHistogram make_histogram(std::vector<AxisSpec> axes) {
    if (axes.empty()) throw ArgumentError("make_histogram: need at least one axis");
    std::size_t cells = 1;
    for (const auto& a : axes) {
        if (a.size == 0) throw ArgumentError("make_histogram: axis '" + a.name + "' has zero size");
        if (cells > (std::size_t{1} << 40) / a.size)
            throw ArgumentError("make_histogram: cell space too large");
        cells *= a.size;
    }
    JointHistogram h;
    h.axes = std::move(axes);
    h.counts.assign(cells, 0);
    return h;
}

inline void add_count(JointHistogram& h, std::span<const std::size_t> idx, std::uint64_t c = 1) {
    h.counts[h.flat_index(idx)] += c;
    h.total += c;
}

// Build from parallel index columns, one entry per observation.
inline JointHistogram histogram_from_columns(std::vector<AxisSpec> axes,
                                             std::span<const std::vector<std::size_t>> columns) {
    if (columns.size() != axes.size()) throw DimensionError("histogram_from_columns: column arity mismatch");
    JointHistogram h = make_histogram(std::move(axes));
    const std::size_t n = columns.empty() ? 0 : columns[0].size();
    for (const auto& c : columns)
        if (c.size() != n) throw DimensionError("histogram_from_columns: ragged columns");
    std::vector<std::size_t> idx(columns.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t d = 0; d < columns.size(); ++d) idx[d] = columns[d][r];
        add_count(h, idx);
    }
    return h;
}

namespace detail {

// Marginal counts over a subset of axes, row-major in the kept order.
inline std::vector<std::uint64_t> marginal_counts(const JointHistogram& h,
                                                  std::span<const std::size_t> keep,
                                                  std::vector<std::size_t>& kept_sizes) {
    kept_sizes.clear();
    std::size_t cells = 1;
    for (std::size_t d : keep) {
        kept_sizes.push_back(h.axes[d].size);
        cells *= h.axes[d].size;
    }
    std::vector<std::uint64_t> out(cells, 0);
    std::vector<std::size_t> idx(h.axes.size(), 0);
    for (std::size_t flat = 0; flat < h.counts.size(); ++flat) {
        if (h.counts[flat] != 0) {
            std::size_t rem = flat;
            for (std::size_t d = h.axes.size(); d-- > 0;) {
                idx[d] = rem % h.axes[d].size;
                rem /= h.axes[d].size;
            }
            std::size_t mflat = 0;
            for (std::size_t k = 0; k < keep.size(); ++k) mflat = mflat * kept_sizes[k] + idx[keep[k]];
            out[mflat] += h.counts[flat];
        }
    }
    return out;
}

inline double clamp_rounding(double v) {
    return (v < 0.0 && v >= -1e-12) ? 0.0 : v;
}

}  // namespace detail

// Plug-in mutual information I(a; b) in nats from empirical frequencies.
inline double mutual_info(const JointHistogram& h, std::size_t a, std::size_t b) {
    if (a >= h.axes.size() || b >= h.axes.size()) throw ArgumentError("mutual_info: axis out of range");
    if (a == b) throw ArgumentError("mutual_info: axes must be distinct");
    if (h.total == 0) throw ValidationError("mutual_info: empty histogram");
    std::vector<std::size_t> sizes;
    std::size_t keep[2] = {a, b};
    auto joint = detail::marginal_counts(h, keep, sizes);
    const std::size_t na = sizes[0], nb = sizes[1];
    std::vector<double> ca(na, 0.0), cb(nb, 0.0);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            ca[i] += static_cast<double>(joint[i * nb + j]);
            cb[j] += static_cast<double>(joint[i * nb + j]);
        }
    const double n = static_cast<double>(h.total);
    double mi = 0.0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            double cij = static_cast<double>(joint[i * nb + j]);
            if (cij > 0.0) mi += (cij / n) * std::log(cij * n / (ca[i] * cb[j]));
        }
    return detail::clamp_rounding(mi);
}

inline double mutual_info(const JointHistogram& h, const std::string& a, const std::string& b) {
    return mutual_info(h, h.axis_index(a), h.axis_index(b));
}

// Plug-in conditional mutual information I(a; b | c) in nats.
inline double cond_mutual_info(const JointHistogram& h, std::size_t a, std::size_t b,
                               std::size_t c) {
    if (a >= h.axes.size() || b >= h.axes.size() || c >= h.axes.size())
        throw ArgumentError("cond_mutual_info: axis out of range");
    if (a == b || a == c || b == c) throw ArgumentError("cond_mutual_info: axes must be distinct");
    if (h.total == 0) throw ValidationError("cond_mutual_info: empty histogram");
    std::vector<std::size_t> sizes;
    std::size_t keep[3] = {a, b, c};
    auto joint = detail::marginal_counts(h, keep, sizes);
    const std::size_t na = sizes[0], nb = sizes[1], nc = sizes[2];
    std::vector<double> nac(na * nc, 0.0), nbc(nb * nc, 0.0), ncc(nc, 0.0);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t k = 0; k < nc; ++k) {
                double v = static_cast<double>(joint[(i * nb + j) * nc + k]);
                nac[i * nc + k] += v;
                nbc[j * nc + k] += v;
                ncc[k] += v;
            }
    const double n = static_cast<double>(h.total);
    double cmi = 0.0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t k = 0; k < nc; ++k) {
                double v = static_cast<double>(joint[(i * nb + j) * nc + k]);
                if (v > 0.0)
                    cmi += (v / n) * std::log(v * ncc[k] / (nac[i * nc + k] * nbc[j * nc + k]));
            }
    return detail::clamp_rounding(cmi);
}

inline double cond_mutual_info(const JointHistogram& h, const std::string& a, const std::string& b,
                               const std::string& c) {
    return cond_mutual_info(h, h.axis_index(a), h.axis_index(b), h.axis_index(c));
}

// ---- activation binning ----------------------------------------------------

enum class ClampPolicy { ClampToEnds, Error };

// Per-dimension bin edges, outer boundaries included (infinities permitted).
// A dimension with edges [e0, ..., ek] has k bins [e_i, e_{i+1}).
struct BinningSpec {
    std::vector<std::vector<double>> edges;
    ClampPolicy policy = ClampPolicy::ClampToEnds;

    std::size_t n_bins(std::size_t dim) const { return edges[dim].size() - 1; }
};

inline void validate(const BinningSpec& spec) {
    if (spec.edges.empty()) throw ValidationError("BinningSpec: no dimensions");
    for (const auto& e : spec.edges) {
        if (e.size() < 3) throw ValidationError("BinningSpec: need at least 2 bins per dimension");
        for (std::size_t i = 0; i + 1 < e.size(); ++i)
            if (!(e[i] < e[i + 1])) throw ValidationError("BinningSpec: edges must be strictly increasing");
    }
}

// Uniform sign-pattern spec: two bins per dimension split at zero.
inline BinningSpec sign_binning(std::size_t dims) {
    BinningSpec s;
    const double inf = std::numeric_limits<double>::infinity();
    s.edges.assign(dims, {-inf, 0.0, inf});
    return s;
}

inline std::size_t bin_of(const BinningSpec& spec, std::size_t dim, double v) {
    if (std::isnan(v)) throw DataError("bin_of: NaN value");
    const auto& e = spec.edges[dim];
    if (v < e.front() || v >= e.back()) {
        if (spec.policy == ClampPolicy::Error) throw DataError("bin_of: value outside binning range");
        return (v < e.front()) ? 0 : e.size() - 2;
    }
    std::size_t lo = 0, hi = e.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (v < e[mid]) hi = mid;
        else lo = mid;
    }
    return lo;
}

struct BinnedColumn {
    std::vector<std::size_t> ids;
    std::size_t n_bins = 0;  // size of the combined bin space
};

// Discretize one traced layer (hidden index 0..n_hidden-1; n_hidden = logits)
// across a set of inputs into mixed-radix bin-tuple ids.
inline BinnedColumn bin_representations(const ModelState& m,
                                        std::span<const std::vector<double>> inputs,
                                        std::size_t layer, const BinningSpec& spec) {
    validate(spec);
    const std::size_t n_hidden = m.arch.hidden.size();
    if (layer > n_hidden) throw ArgumentError("bin_representations: layer index out of range");
    const std::size_t width = (layer < n_hidden) ? m.arch.hidden[layer] : m.arch.n_outputs;
    if (spec.edges.size() != width)
        throw DimensionError("bin_representations: spec dimensions != layer width");
    std::size_t space = 1;
    for (std::size_t d = 0; d < width; ++d) {
        if (space > (std::size_t{1} << 40) / spec.n_bins(d))
            throw ArgumentError("bin_representations: combined bin space too large");
        space *= spec.n_bins(d);
    }
    BinnedColumn out;
    out.n_bins = space;
    out.ids.reserve(inputs.size());
    for (const auto& x : inputs) {
        ForwardTrace t = forward(m, x);
        const std::vector<double>& z = (layer < n_hidden) ? t.post[layer] : t.logits;
        std::size_t id = 0;
        for (std::size_t d = 0; d < width; ++d) id = id * spec.n_bins(d) + bin_of(spec, d, z[d]);
        out.ids.push_back(id);
    }
    return out;
}

// ---- weight-information ceiling --------------------------------------------

// Upper bound on the information stored in K trained weights with squared
// norm |theta|^2, total curvature trH, and inverse temperature beta:
//   (K/2) [ log|theta|^2 + log trH - K log(K^2 beta / 2) ]   (nats)
inline double weight_info_ceiling(std::size_t K, double theta_sq_norm, double trH, double beta) {
    if (K == 0) throw DomainError("weight_info_ceiling: K must be positive");
    if (!(theta_sq_norm > 0.0)) throw DomainError("weight_info_ceiling: |theta|^2 must be positive");
    if (!(trH > 0.0)) throw DomainError("weight_info_ceiling: trH must be positive");
    if (!(beta > 0.0)) throw DomainError("weight_info_ceiling: beta must be positive");
    const double k = static_cast<double>(K);
    return 0.5 * k * (std::log(theta_sq_norm) + std::log(trH) - k * std::log(k * k * beta / 2.0));
}

// ---- serialization ---------------------------------------------------------

// File format: {axes: [names], shape: [sizes], counts: [flat row-major]}.
inline nlohmann::json histogram_to_json(const JointHistogram& h) {
    nlohmann::json j;
    std::vector<std::string> names;
    std::vector<std::size_t> shape;
    for (const auto& a : h.axes) {
        names.push_back(a.name);
        shape.push_back(a.size);
    }
    j["axes"] = names;
    j["shape"] = shape;
    j["counts"] = h.counts;
    return j;
}

inline JointHistogram histogram_from_json(const nlohmann::json& j) {
    auto names = j.at("axes").get<std::vector<std::string>>();
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (names.size() != shape.size()) throw DataError("histogram_from_json: axes/shape length mismatch");
    std::vector<AxisSpec> axes;
    for (std::size_t i = 0; i < names.size(); ++i) axes.push_back({names[i], shape[i]});
    JointHistogram h = make_histogram(std::move(axes));
    auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
    if (counts.size() != h.counts.size()) throw DataError("histogram_from_json: counts size mismatch");
    h.counts = std::move(counts);
    h.total = 0;
    for (auto c : h.counts) h.total += c;
    return h;
}

}  // namespace infogap

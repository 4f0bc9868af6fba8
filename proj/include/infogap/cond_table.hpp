#pragma once
// Finite conditional distributions p(y|x) with per-context support volumes,
// entropy accounting, and the deviation bounds driven by the entropy gap
// D_x = log V_x - H(Y|X=x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infogap/error.hpp"
#include "infogap/rng.hpp"

namespace infogap {

// x * log(x) with the 0 log 0 := 0 convention. Nats throughout.
inline double xlogx(double x) { return (x > 0.0) ? x * std::log(x) : 0.0; }

inline double row_entropy(std::span<const double> row) {
    double h = 0.0;
    for (double p : row) h -= xlogx(p);
    return h;
}

struct CondTable {
    std::vector<std::string> x_alphabet;
    std::vector<std::string> y_alphabet;
    std::vector<double> x_marginal;          // p(x), sums to 1
    std::vector<std::vector<double>> rows;   // rows[x][y] = p(y | x)
    std::vector<double> volumes;             // V_x >= support size (counting measure)

    std::size_t x_size() const { return x_alphabet.size(); }
    std::size_t y_size() const { return y_alphabet.size(); }

    std::size_t x_index(const std::string& sym) const {
        for (std::size_t i = 0; i < x_alphabet.size(); ++i)
            if (x_alphabet[i] == sym) return i;
        throw ArgumentError("CondTable: unknown x symbol '" + sym + "'");
    }

    std::size_t support_count(std::size_t x) const {
        std::size_t c = 0;
        for (double p : rows[x])
            if (p > 0.0) ++c;
        return c;
    }
};

// Validates all structural invariants; every constructor path funnels here.
inline void validate(const CondTable& t) {
    const std::size_t nx = t.x_alphabet.size();
    const std::size_t ny = t.y_alphabet.size();
    if (nx == 0 || ny == 0) throw ValidationError("CondTable: empty alphabet");
    if (t.rows.size() != nx) throw ValidationError("CondTable: row count != |x alphabet|");
    if (t.x_marginal.size() != nx) throw ValidationError("CondTable: marginal size != |x alphabet|");
    if (t.volumes.size() != nx) throw ValidationError("CondTable: volumes size != |x alphabet|");
    double msum = 0.0;
    for (double p : t.x_marginal) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("CondTable: bad marginal entry");
        msum += p;
    }
    if (std::abs(msum - 1.0) > 1e-12) throw ValidationError("CondTable: marginal does not sum to 1");
    for (std::size_t x = 0; x < nx; ++x) {
        if (t.rows[x].size() != ny) throw ValidationError("CondTable: ragged row");
        double rsum = 0.0;
        std::size_t support = 0;
        for (double p : t.rows[x]) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("CondTable: negative or non-finite probability");
            if (p > 0.0) ++support;
            rsum += p;
        }
        if (std::abs(rsum - 1.0) > 1e-12) throw ValidationError("CondTable: row does not sum to 1");
        if (!(t.volumes[x] >= static_cast<double>(support) - 1e-12))
            throw ValidationError("CondTable: volume below support size");
    }
}

// Builder with defaults: uniform marginal, volumes = support counts.
inline CondTable make_cond_table(std::vector<std::vector<double>> rows,
                                 std::vector<double> x_marginal = {},
                                 std::vector<double> volumes = {}) {
    CondTable t;
    t.rows = std::move(rows);
    const std::size_t nx = t.rows.size();
    if (nx == 0) throw ValidationError("make_cond_table: no rows");
    const std::size_t ny = t.rows[0].size();
    t.x_alphabet.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) t.x_alphabet[i] = "x" + std::to_string(i);
    t.y_alphabet.resize(ny);
    for (std::size_t j = 0; j < ny; ++j) t.y_alphabet[j] = "y" + std::to_string(j);
    t.x_marginal = x_marginal.empty()
                       ? std::vector<double>(nx, 1.0 / static_cast<double>(nx))
                       : std::move(x_marginal);
    if (volumes.empty()) {
        t.volumes.resize(nx);
        for (std::size_t x = 0; x < nx; ++x) t.volumes[x] = static_cast<double>(t.support_count(x));
    } else {
        t.volumes = std::move(volumes);
    }
    validate(t);
    return t;
}

// H(Y | X) = sum_x p(x) H(Y | X=x), in nats.
inline double cond_entropy(const CondTable& t) {
    double h = 0.0;
    for (std::size_t x = 0; x < t.x_size(); ++x) h += t.x_marginal[x] * row_entropy(t.rows[x]);
    return h;
}

// D_x = log V_x - H(Y|X=x). Equals KL(p(.|x) || uniform on the V_x-point
// reference set) whenever the declared volume matches a counting support.
inline double entropy_gap(const CondTable& t, std::size_t x) {
    if (x >= t.x_size()) throw ArgumentError("entropy_gap: x index out of range");
    if (!(t.volumes[x] > 0.0)) throw DomainError("entropy_gap: volume must be positive");
    return std::log(t.volumes[x]) - row_entropy(t.rows[x]);
}

inline double entropy_gap(const CondTable& t, const std::string& x_sym) {
    return entropy_gap(t, t.x_index(x_sym));
}

// Reference set that V_x counts over: the strict support when V_x matches it,
// the full y alphabet when V_x matches that, otherwise the volume is
// inconsistent with a counting measure and deviation bounds are undefined.
inline std::vector<std::size_t> reference_set(const CondTable& t, std::size_t x) {
    if (x >= t.x_size()) throw ArgumentError("reference_set: x index out of range");
    const double v = t.volumes[x];
    const double vr = std::round(v);
    if (std::abs(v - vr) > 1e-9)
        throw ValidationError("reference_set: volume is not an integer count");
    std::vector<std::size_t> support;
    for (std::size_t y = 0; y < t.y_size(); ++y)
        if (t.rows[x][y] > 0.0) support.push_back(y);
    if (static_cast<std::size_t>(vr) == support.size()) return support;
    if (static_cast<std::size_t>(vr) == t.y_size()) {
        std::vector<std::size_t> all(t.y_size());
        for (std::size_t y = 0; y < t.y_size(); ++y) all[y] = y;
        return all;
    }
    throw ValidationError("reference_set: volume matches neither support nor alphabet");
}

struct PinskerCheck {
    double gap = 0.0;        // D_x
    double sup_dev = 0.0;    // sup_y |p(y|x) - 1/V_x| over the reference set
    double sup_bound = 0.0;  // sqrt(D_x / 2)
    double pair_dev = 0.0;   // max_{y,y'} |p(y|x) - p(y'|x)|
    double pair_bound = 0.0; // sqrt(2 D_x)
};

// Deviation-from-uniformity measurements against their entropy-gap bounds.
inline PinskerCheck pinsker_bounds(const CondTable& t, std::size_t x) {
    auto ref = reference_set(t, x);
    PinskerCheck c;
    c.gap = entropy_gap(t, x);
    const double u = 1.0 / t.volumes[x];
    double pmin = 1.0, pmax = 0.0;
    for (std::size_t y : ref) {
        double p = t.rows[x][y];
        c.sup_dev = std::max(c.sup_dev, std::abs(p - u));
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
    }
    c.pair_dev = pmax - pmin;
    c.sup_bound = std::sqrt(std::max(c.gap, 0.0) / 2.0);
    c.pair_bound = std::sqrt(2.0 * std::max(c.gap, 0.0));
    return c;
}

inline PinskerCheck pinsker_bounds(const CondTable& t, const std::string& x_sym) {
    return pinsker_bounds(t, t.x_index(x_sym));
}

// Convex mix of every row toward the uniform row; lambda in [0, 1].
inline CondTable mix_toward_uniform(const CondTable& t, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("mix_toward_uniform: lambda in [0,1]");
    CondTable out = t;
    const double u = 1.0 / static_cast<double>(t.y_size());
    for (auto& row : out.rows)
        for (auto& p : row) p = (1.0 - lambda) * p + lambda * u;
    for (std::size_t x = 0; x < out.x_size(); ++x)
        out.volumes[x] = (lambda > 0.0) ? static_cast<double>(out.y_size())
                                        : static_cast<double>(out.support_count(x));
    validate(out);
    return out;
}

// Ladder of tables interpolating deterministic rows (level 0) to uniform rows
// (last level) on an even lambda grid, so conditional entropy runs from
// exactly 0 up to exactly log(y_size). Argmax positions cycle through a
// random permutation of the y alphabet.
inline std::vector<CondTable> make_entropy_family(std::size_t levels, std::size_t y_size,
                                                  RngStream& rng, std::size_t x_size = 0) {
    if (levels < 2) throw ArgumentError("make_entropy_family: need at least 2 levels");
    if (y_size < 2) throw ArgumentError("make_entropy_family: need at least 2 outcomes");
    if (x_size == 0) x_size = y_size;

    std::vector<std::size_t> perm(y_size);
    for (std::size_t i = 0; i < y_size; ++i) perm[i] = i;
    for (std::size_t i = y_size - 1; i > 0; --i) {
        std::size_t j = rng.uniform_below(i + 1);
        std::swap(perm[i], perm[j]);
    }

    std::vector<CondTable> family;
    family.reserve(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        double lambda = static_cast<double>(l) / static_cast<double>(levels - 1);
        std::vector<std::vector<double>> rows(x_size, std::vector<double>(y_size, 0.0));
        const double u = 1.0 / static_cast<double>(y_size);
        for (std::size_t x = 0; x < x_size; ++x) {
            std::size_t peak = perm[x % y_size];
            for (std::size_t y = 0; y < y_size; ++y)
                rows[x][y] = (y == peak) ? (1.0 - lambda) + lambda * u : lambda * u;
        }
        family.push_back(make_cond_table(std::move(rows)));
    }
    return family;
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::json cond_table_to_json(const CondTable& t) {
    nlohmann::json j;
    j["x_alphabet"] = t.x_alphabet;
    j["y_alphabet"] = t.y_alphabet;
    j["x_marginal"] = t.x_marginal;
    j["rows"] = t.rows;
    j["volumes"] = t.volumes;
    return j;
}

inline CondTable cond_table_from_json(const nlohmann::json& j) {
    CondTable t;
    t.x_alphabet = j.at("x_alphabet").get<std::vector<std::string>>();
    t.y_alphabet = j.at("y_alphabet").get<std::vector<std::string>>();
    t.x_marginal = j.at("x_marginal").get<std::vector<double>>();
    t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
    t.volumes = j.at("volumes").get<std::vector<double>>();
    validate(t);
    return t;
}

}  // namespace infogap

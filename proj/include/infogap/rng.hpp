#pragma once
// Counter-based random streams. A stream is a pure function of
// (seed, stream_id, counter), so any experiment cell can be replayed in
// isolation and results do not depend on scheduling order.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "infogap/error.hpp"

namespace infogap {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 output permutation.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Distinct (seed, stream_id) pairs give independent streams by construction;
// draws walk a counter through the SplitMix64 permutation.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                             detail::mix64(stream_id + 0x5851F42D4C957F2Dull))),
          counter_(0) {}

    // Deterministic child stream, for fanning one cell into sub-tasks.
    RngStream split(std::uint64_t child_id) const {
        return RngStream(SplitTag{}, key_, child_id);
    }

    std::uint64_t next_u64() {
        counter_ += 1;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw ArgumentError("uniform_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            std::uint64_t v = next_u64();
            if (v < limit) return v % n;
        }
    }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() {
        double u = uniform();
        if (u < 0x1.0p-60) u = 0x1.0p-60;
        return -std::log(u);
    }

    // Index draw from an explicit probability row (assumed normalized).
    std::size_t categorical(std::span<const double> probs) {
        if (probs.empty()) throw ArgumentError("categorical: empty probability row");
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;
    }

    // Flat Dirichlet(1,...,1) draw: normalized exponentials.
    std::vector<double> dirichlet_flat(std::size_t k) {
        if (k == 0) throw ArgumentError("dirichlet_flat: k must be positive");
        std::vector<double> v(k);
        double total = 0.0;
        for (auto& x : v) {
            x = exponential();
            total += x;
        }
        for (auto& x : v) x /= total;
        return v;
    }

private:
    struct SplitTag {};
    RngStream(SplitTag, std::uint64_t raw_key, std::uint64_t child_tag)
        : key_(detail::mix64(raw_key ^ detail::mix64(child_tag + detail::kGolden))), counter_(0) {}

    std::uint64_t key_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace infogap

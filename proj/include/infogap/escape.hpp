#pragma once
// SGD escape-time laboratory. The landscape is a 1-D asymmetric well built
// from quadratic caps joined by a C^2 quintic bridge, so the barrier height
// and the curvatures at the minimum and at the saddle are exact inputs, not
// measurements. Per-sample losses add random tilts; minibatch averaging then
// gives gradient noise with covariance proportional to 1/batch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "infogap/error.hpp"
#include "infogap/rng.hpp"
#include "infogap/stats.hpp"

namespace infogap {

struct WellSpec {
    double barrier = 0.2;         // loss rise from minimum to saddle
    double curv_min = 1.0;        // curvature at the minimum (positive)
    double curv_saddle = 1.0;     // |curvature| at the saddle (positive)
    double saddle_pos = 1.0;      // coordinate of the saddle along the escape axis
    std::size_t extra_dims = 0;   // transverse harmonic dimensions
    double transverse_curv = 1.0;
    double noise_std = 1.0;       // per-sample linear tilt scale
    double noise_curv_std = 0.0;  // per-sample quadratic tilt scale
};

// Piecewise landscape along the escape axis u:
//   u <= u1          : (curv_min/2) u^2
//   u1 <= u <= u2    : quintic Hermite bridge (C^2 at both joins)
//   u >= u2          : barrier - (curv_saddle/2)(u - saddle_pos)^2
// The minimum sits exactly at 0 with value 0; the saddle exactly at
// saddle_pos with value `barrier`.
class Landscape {
public:
    explicit Landscape(const WellSpec& spec) : s_(spec) {
        if (!(s_.barrier > 0.0)) throw DomainError("Landscape: barrier must be positive");
        if (!(s_.curv_min > 0.0) || !(s_.curv_saddle > 0.0))
            throw DomainError("Landscape: curvatures must be positive");
        if (!(s_.saddle_pos > 0.0)) throw DomainError("Landscape: saddle_pos must be positive");
        if (s_.extra_dims > 0 && !(s_.transverse_curv > 0.0))
            throw DomainError("Landscape: transverse curvature must be positive");
        if (s_.noise_std < 0.0 || s_.noise_curv_std < 0.0)
            throw DomainError("Landscape: noise scales must be nonnegative");
        u1_ = 0.40 * s_.saddle_pos;
        u2_ = 0.75 * s_.saddle_pos;
        // Hermite endpoint data for the bridge segment.
        p0_ = 0.5 * s_.curv_min * u1_ * u1_;
        m0_ = s_.curv_min * u1_;
        c0_ = s_.curv_min;
        double r = u2_ - s_.saddle_pos;
        p1_ = s_.barrier - 0.5 * s_.curv_saddle * r * r;
        m1_ = -s_.curv_saddle * r;
        c1_ = -s_.curv_saddle;
        // Reject parameter combinations whose bridge dips or back-tracks:
        // the well must rise monotonically from minimum to saddle.
        const int grid = 512;
        double prev = well_value(0.0);
        for (int i = 1; i <= grid; ++i) {
            double u = s_.saddle_pos * static_cast<double>(i) / grid;
            double v = well_value(u);
            if (v < prev - 1e-12 * std::max(1.0, std::abs(prev)))
                throw ValidationError("Landscape: bridge segment is not monotone; adjust curvatures");
            prev = v;
        }
    }

    const WellSpec& spec() const { return s_; }
    std::size_t dim() const { return 1 + s_.extra_dims; }

    double well_value(double u) const {
        if (u <= u1_) return 0.5 * s_.curv_min * u * u;
        if (u >= u2_) {
            double r = u - s_.saddle_pos;
            return s_.barrier - 0.5 * s_.curv_saddle * r * r;
        }
        double d = u2_ - u1_;
        double t = (u - u1_) / d;
        return p0_ * h0(t) + m0_ * d * h1(t) + c0_ * d * d * h2(t) + p1_ * g0(t) +
               m1_ * d * g1(t) + c1_ * d * d * g2(t);
    }

    double well_slope(double u) const {
        if (u <= u1_) return s_.curv_min * u;
        if (u >= u2_) return -s_.curv_saddle * (u - s_.saddle_pos);
        double d = u2_ - u1_;
        double t = (u - u1_) / d;
        return (p0_ * dh0(t) + m0_ * d * dh1(t) + c0_ * d * d * dh2(t) + p1_ * dg0(t) +
                m1_ * d * dg1(t) + c1_ * d * d * dg2(t)) /
               d;
    }

    double value(std::span<const double> theta) const {
        check_dim(theta.size());
        double v = well_value(theta[0]);
        for (std::size_t i = 1; i < theta.size(); ++i)
            v += 0.5 * s_.transverse_curv * theta[i] * theta[i];
        return v;
    }

    std::vector<double> grad(std::span<const double> theta) const {
        check_dim(theta.size());
        std::vector<double> g(theta.size());
        g[0] = well_slope(theta[0]);
        for (std::size_t i = 1; i < theta.size(); ++i) g[i] = s_.transverse_curv * theta[i];
        return g;
    }

    double max_curvature() const {
        double c = std::max(s_.curv_min, s_.curv_saddle);
        if (s_.extra_dims > 0) c = std::max(c, s_.transverse_curv);
        return c;
    }

private:
    static double h0(double t) { return 1 + t * t * t * (-10 + t * (15 - 6 * t)); }
    static double h1(double t) { return t + t * t * t * (-6 + t * (8 - 3 * t)); }
    static double h2(double t) { return t * t * (0.5 + t * (-1.5 + t * (1.5 - 0.5 * t))); }
    static double g0(double t) { return t * t * t * (10 + t * (-15 + 6 * t)); }
    static double g1(double t) { return t * t * t * (-4 + t * (7 - 3 * t)); }
    static double g2(double t) { return t * t * t * (0.5 + t * (-1 + 0.5 * t)); }
    static double dh0(double t) { return t * t * (-30 + t * (60 - 30 * t)); }
    static double dh1(double t) { return 1 + t * t * (-18 + t * (32 - 15 * t)); }
    static double dh2(double t) { return t * (1 + t * (-4.5 + t * (6 - 2.5 * t))); }
    static double dg0(double t) { return t * t * (30 + t * (-60 + 30 * t)); }
    static double dg1(double t) { return t * t * (-12 + t * (28 - 15 * t)); }
    static double dg2(double t) { return t * t * (1.5 + t * (-4 + 2.5 * t)); }

    void check_dim(std::size_t n) const {
        if (n != dim()) throw DimensionError("Landscape: parameter dimension mismatch");
    }

    WellSpec s_;
    double u1_ = 0.0, u2_ = 0.0;
    double p0_ = 0.0, m0_ = 0.0, c0_ = 0.0, p1_ = 0.0, m1_ = 0.0, c1_ = 0.0;
};

struct EscapeConfig {
    double lr = 0.1;
    std::size_t batch = 8;
    std::size_t trials = 100;
    std::size_t max_steps = 10000000;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
};

struct EscapeResult {
    std::vector<double> escape_steps;  // uncensored first-passage step counts
    std::size_t censored = 0;
    std::size_t max_steps = 0;
    std::vector<double> trial_steps;   // per trial, in trial order
    std::vector<bool> trial_censored;  // parallel to trial_steps
    // Mean escape steps under an exponential tail, censored trials counted as
    // survival time. NaN when every trial was censored.
    double mean_escape_mle = std::numeric_limits<double>::quiet_NaN();
};

// Runs independent SGD trials from the minimum until the escape-axis
// coordinate first crosses the saddle position. Batch gradients draw the
// aggregated tilt directly from its exact N(0, sigma^2/batch) law, which is
// distributionally identical to averaging `batch` per-sample tilts.
// Trajectories are bit-reproducible per (seed, stream).
inline EscapeResult run_escape_trials(const Landscape& land, const EscapeConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw DomainError("run_escape_trials: lr must be positive");
    if (cfg.batch == 0) throw ArgumentError("run_escape_trials: batch must be positive");
    if (cfg.trials == 0) throw ArgumentError("run_escape_trials: need at least one trial");
    if (cfg.lr * land.max_curvature() >= 2.0)
        throw ConfigError("run_escape_trials: lr * max curvature >= 2, descent unstable");

    const WellSpec& spec = land.spec();
    const double tilt_std = spec.noise_std / std::sqrt(static_cast<double>(cfg.batch));
    const double curv_tilt_std = spec.noise_curv_std / std::sqrt(static_cast<double>(cfg.batch));
    const std::size_t dim = land.dim();

    EscapeResult res;
    res.max_steps = cfg.max_steps;
    std::vector<double> theta(dim);
    std::vector<double> censored_times;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        RngStream rng(cfg.seed, (cfg.stream << 20) + trial);
        std::fill(theta.begin(), theta.end(), 0.0);
        bool escaped = false;
        for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
            std::vector<double> g = land.grad(theta);
            double bcurv = (curv_tilt_std > 0.0) ? curv_tilt_std * rng.normal() : 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double noise = tilt_std * rng.normal() + bcurv * theta[i];
                theta[i] -= cfg.lr * (g[i] + noise);
            }
            if (theta[0] >= spec.saddle_pos) {
                res.escape_steps.push_back(static_cast<double>(step));
                res.trial_steps.push_back(static_cast<double>(step));
                res.trial_censored.push_back(false);
                escaped = true;
                break;
            }
        }
        if (!escaped) {
            res.censored += 1;
            censored_times.push_back(static_cast<double>(cfg.max_steps));
            res.trial_steps.push_back(static_cast<double>(cfg.max_steps));
            res.trial_censored.push_back(true);
        }
    }
    if (!res.escape_steps.empty())
        res.mean_escape_mle = censored_exponential_mean(res.escape_steps, censored_times);
    return res;
}

// Mean escape time from the reaction-coordinate rate formula:
//   tau = (2 pi / curv_saddle) * exp[(2 B dl / lr) (p / curv_min + (1-p) / curv_saddle)]
inline double kramers_predict(double dl, double lr, double batch, double curv_min,
                              double curv_saddle, double p) {
    if (!(dl >= 0.0)) throw DomainError("kramers_predict: barrier must be nonnegative");
    if (!(lr > 0.0) || !(batch > 0.0)) throw DomainError("kramers_predict: lr and batch must be positive");
    if (!(curv_min > 0.0) || !(curv_saddle > 0.0))
        throw DomainError("kramers_predict: curvatures must be positive");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("kramers_predict: p must lie in (0,1)");
    const double expo = (2.0 * batch * dl / lr) * (p / curv_min + (1.0 - p) / curv_saddle);
    return (2.0 * 3.14159265358979323846 / curv_saddle) * std::exp(expo);
}

// One measured group of escape trials at a fixed (barrier, batch, lr).
struct EscapeSetting {
    double barrier = 0.0;
    double lr = 0.0;
    std::size_t batch = 0;
    double curv_min = 0.0;
    double curv_saddle = 0.0;
    double mean_escape_steps = 0.0;
    std::size_t n_escaped = 0;
    std::size_t n_censored = 0;
};

struct EscapeLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    // Interpolation weight implied by the fitted slope when all groups share
    // one curvature pair; reported as-is, NaN when not identified.
    double p_hat = std::numeric_limits<double>::quiet_NaN();
    std::size_t used_groups = 0;
    std::vector<std::string> warnings;
};

// Regression of log mean escape steps on batch * barrier / lr. Groups with
// fewer than `min_escaped` uncensored trials are excluded with a warning.
inline EscapeLawFit fit_escape_law(std::span<const EscapeSetting> settings,
                                   std::size_t min_escaped = 50) {
    EscapeLawFit fit;
    std::vector<double> xs, ys;
    bool shared_curv = true;
    double ca = 0.0, cb = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const auto& s = settings[i];
        if (s.n_escaped < min_escaped) {
            fit.warnings.push_back("group " + std::to_string(i) + " excluded: only " +
                                   std::to_string(s.n_escaped) + " uncensored trials");
            continue;
        }
        if (!(s.mean_escape_steps > 0.0)) {
            fit.warnings.push_back("group " + std::to_string(i) + " excluded: nonpositive mean");
            continue;
        }
        if (first) {
            ca = s.curv_min;
            cb = s.curv_saddle;
            first = false;
        } else if (s.curv_min != ca || s.curv_saddle != cb) {
            shared_curv = false;
        }
        xs.push_back(static_cast<double>(s.batch) * s.barrier / s.lr);
        ys.push_back(std::log(s.mean_escape_steps));
    }
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4)
        throw ArgumentError("fit_escape_law: need at least 4 usable groups with distinct x values");
    LineFit lf = ols_fit(xs, ys);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    fit.used_groups = xs.size();
    if (shared_curv && ca != cb) {
        fit.p_hat = (fit.slope / 2.0 - 1.0 / cb) / (1.0 / ca - 1.0 / cb);
    } else if (!shared_curv) {
        fit.warnings.push_back("mixed curvature pairs across groups; p not identified");
    } else {
        fit.warnings.push_back("equal curvatures make p unidentifiable from the slope");
    }
    return fit;
}

}  // namespace infogap

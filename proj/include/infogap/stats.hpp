#pragma once
// Small statistics toolbox used by the experiment drivers: robust summaries,
// rank correlation, least squares, and a censored-exponential mean estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "infogap/error.hpp"

namespace infogap {

inline double median(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("median: empty sample");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Interquartile range with linear interpolation between order statistics.
inline double iqr(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("iqr: empty sample");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(v.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        std::size_t hi = std::min(lo + 1, v.size() - 1);
        double frac = pos - static_cast<double>(lo);
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };
    return quantile(0.75) - quantile(0.25);
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw ArgumentError("sample_std: need at least 2 points");
    double m = mean(xs);
    double s2 = 0.0;
    for (double x : xs) s2 += (x - m) * (x - m);
    return std::sqrt(s2 / static_cast<double>(xs.size() - 1));
}

// Fractional ranks with ties averaged.
inline std::vector<double> ranks_with_ties(std::span<const double> xs) {
    std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

// Spearman rank correlation (Pearson on tie-averaged ranks).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DimensionError("spearman: length mismatch");
    if (xs.size() < 2) throw ArgumentError("spearman: need at least 2 points");
    auto rx = ranks_with_ties(xs);
    auto ry = ranks_with_ties(ys);
    double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ArgumentError("spearman: constant input has no rank correlation");
    return sxy / std::sqrt(sxx * syy);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DimensionError("ols_fit: length mismatch");
    if (xs.size() < 2) throw ArgumentError("ols_fit: need at least 2 points");
    double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ArgumentError("ols_fit: degenerate x values");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

// MLE for the mean of an exponential under right-censoring:
// total observed time (including censored caps) over the number of events.
inline double censored_exponential_mean(std::span<const double> event_times,
                                        std::span<const double> censored_times) {
    if (event_times.empty()) throw ArgumentError("censored_exponential_mean: no uncensored events");
    double total = 0.0;
    for (double t : event_times) total += t;
    for (double t : censored_times) total += t;
    return total / static_cast<double>(event_times.size());
}

// Pearson chi-square statistic against expected counts.
inline double chi_square_stat(std::span<const double> observed, std::span<const double> expected) {
    if (observed.size() != expected.size()) throw DimensionError("chi_square_stat: length mismatch");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) throw DomainError("chi_square_stat: expected counts must be positive");
        double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    return stat;
}

// Upper quantile of chi-square(k) via the Wilson-Hilferty cube approximation.
inline double chi_square_quantile(double dof, double p_upper) {
    if (dof <= 0.0) throw DomainError("chi_square_quantile: dof must be positive");
    if (p_upper <= 0.0 || p_upper >= 1.0) throw DomainError("chi_square_quantile: p in (0,1)");
    // Inverse normal via Acklam-style rational approximation on the tail.
    auto inv_norm = [](double p) {
        const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
        const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01, -1.328068155288572e+01};
        const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
        const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
        const double plow = 0.02425;
        double q, r;
        if (p < plow) {
            q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        if (p <= 1.0 - plow) {
            q = p - 0.5;
            r = q * q;
            return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
                   (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
        }
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    };
    double z = inv_norm(1.0 - p_upper);
    double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
    return dof * t * t * t;
}

}  // namespace infogap

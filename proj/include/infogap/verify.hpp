#pragma once
// One-shot verification suite: fast oracle and invariant checks with stable
// names, shared by the CLI `verify` command and the acceptance harness. Each
// check returns a measured summary so failures are diagnosable from the
// report alone. The fault parameter deliberately corrupts one computation,
// as a negative control that the suite can actually fail.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "infogap/cond_table.hpp"
#include "infogap/curvature.hpp"
#include "infogap/error.hpp"
#include "infogap/escape.hpp"
#include "infogap/gap.hpp"
#include "infogap/gridworld.hpp"
#include "infogap/histogram.hpp"
#include "infogap/io.hpp"
#include "infogap/matrix.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"
#include "infogap/stats.hpp"

namespace infogap {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string measured;
    double millis = 0.0;
};

namespace checks {

// Deviation bounds from the entropy gap on random rows: zero violations
// of sup_dev <= sqrt(D/2) and pair_dev <= sqrt(2D) (both + 1e-12).
inline CheckResult pinsker_lemma_sweep(std::size_t n_rows = 1000) {
    CheckResult r;
    r.name = "pinsker_lemma_sweep";
    RngStream rng(7, 100);
    std::size_t violations = 0;
    double worst_margin = 1e9;
    for (std::size_t i = 0; i < n_rows; ++i) {
        std::size_t size = 2 + i % 15;  // 2..16
        auto row = rng.dirichlet_flat(size);
        CondTable t = make_cond_table({row});
        PinskerCheck c = pinsker_bounds(t, std::size_t{0});
        double m1 = c.sup_bound + 1e-12 - c.sup_dev;
        double m2 = c.pair_bound + 1e-12 - c.pair_dev;
        worst_margin = std::min(worst_margin, std::min(m1, m2));
        if (m1 < 0.0 || m2 < 0.0) ++violations;
    }
    r.passed = (violations == 0);
    r.measured = std::to_string(n_rows) + " rows, " + std::to_string(violations) +
                 " violations, worst margin " + format_double(worst_margin);
    return r;
}

// Exact Fisher of a linear-softmax model against the analytic covariance
// diag(p) - p p^T embedded per onehot input block; uniform trace 0.75.
inline CheckResult fisher_softmax_oracle() {
    CheckResult r;
    r.name = "fisher_softmax_oracle";
    const std::size_t nx = 3, ny = 4;
    Arch arch;
    arch.input_dim = nx;
    arch.hidden = {};
    arch.n_outputs = ny;
    arch.bias = false;
    RngStream rng(11, 0);
    ModelState m = ModelState::init(arch, rng);
    std::vector<std::vector<double>> rows(nx, std::vector<double>(ny, 1.0 / ny));
    CondTable t = make_cond_table(rows);
    FeatureFn feat = onehot_features(nx);
    FisherReport fr = fisher_exact(m, t, feat, ParamScope::All, true);

    // Analytic matrix: for each input x, block diag(p_x) - p_x p_x^T over the
    // weight column feeding from x, scaled by p(x); zero across blocks.
    double max_diff = 0.0;
    const Matrix& f = *fr.matrix;
    for (std::size_t x = 0; x < nx; ++x) {
        ForwardTrace tr = forward(m, feat(x));
        for (std::size_t a = 0; a < ny; ++a)
            for (std::size_t xb = 0; xb < nx; ++xb)
                for (std::size_t b = 0; b < ny; ++b) {
                    // theta index of W[a][x] in row-major (out x in) layout:
                    std::size_t ia = a * nx + x, ib = b * nx + xb;
                    double expect = 0.0;
                    if (xb == x) {
                        double pa = tr.probs[a], pb = tr.probs[b];
                        expect = t.x_marginal[x] * ((a == b ? pa : 0.0) - pa * pb);
                    }
                    max_diff = std::max(max_diff, std::abs(f.at(ia, ib) - expect));
                }
    }

    // Zero weights give the uniform predictive row; trace must be 3/4.
    ModelState m0 = ModelState::zeros(arch);
    double tr0 = fisher_exact(m0, t, feat, ParamScope::All, false).trace;
    double trace_err = std::abs(tr0 - 0.75);

    r.passed = (max_diff <= 1e-10) && (trace_err <= 1e-10);
    r.measured = "matrix max diff " + format_double(max_diff) + ", uniform trace err " +
                 format_double(trace_err);
    return r;
}

// Reverse-mode gradients against central finite differences across the
// architecture matrix. fault == "gradient" injects a one-coordinate error.
inline CheckResult gradient_check(const std::string& fault = "") {
    CheckResult r;
    r.name = "gradient_check";
    struct Case {
        std::vector<std::size_t> hidden;
        Activation act;
        bool bias;
    };
    std::vector<Case> cases = {
        {{}, Activation::Tanh, false},         {{}, Activation::Tanh, true},
        {{5}, Activation::Tanh, true},         {{5}, Activation::Softplus, true},
        {{8}, Activation::Softplus, false},    {{6, 4}, Activation::Tanh, true},
        {{6, 4}, Activation::Softplus, false}, {{4, 4, 4}, Activation::Tanh, true},
    };
    double worst = 0.0;
    std::size_t tested = 0;
    RngStream rng(23, 0);
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        Arch arch;
        arch.input_dim = 6;
        arch.hidden = cases[ci].hidden;
        arch.n_outputs = 4;
        arch.activation = cases[ci].act;
        arch.bias = cases[ci].bias;
        RngStream init(23, 10 + ci);
        ModelState m = ModelState::init(arch, init);
        std::vector<Example> batch(3);
        for (auto& ex : batch) {
            ex.x.resize(arch.input_dim);
            for (auto& v : ex.x) v = rng.normal();
            ex.y = rng.uniform_below(arch.n_outputs);
        }
        LossGrad lg = nll_loss(m, batch);
        if (fault == "gradient") lg.grad[0] += 1e-3;
        const std::size_t k = m.param_count();
        const std::size_t n_probe = std::min<std::size_t>(25, k);
        for (std::size_t p = 0; p < n_probe; ++p) {
            std::size_t j = (p * 7919) % k;
            const double h = 1e-5 * (1.0 + std::abs(m.theta[j]));
            ModelState probe = m;
            probe.theta[j] = m.theta[j] + h;
            double lp = nll_loss(probe, batch).loss;
            probe.theta[j] = m.theta[j] - h;
            double lm = nll_loss(probe, batch).loss;
            double fd = (lp - lm) / (2.0 * h);
            double rel = std::abs(lg.grad[j] - fd) /
                         std::max({1.0, std::abs(lg.grad[j]), std::abs(fd)});
            worst = std::max(worst, rel);
            ++tested;
        }
    }
    r.passed = worst <= 1e-4;
    r.measured = std::to_string(tested) + " coordinates over " + std::to_string(cases.size()) +
                 " architectures, worst rel err " + format_double(worst);
    return r;
}

// I(a; (b,c)) for the chain identity, merging b and c into one axis.
inline double joint_mutual_info(const JointHistogram& h, std::size_t a, std::size_t b,
                                std::size_t c) {
    JointHistogram merged = make_histogram({{"a", h.axes[a].size},
                                            {"bc", h.axes[b].size * h.axes[c].size}});
    std::vector<std::size_t> idx(h.axes.size(), 0);
    for (std::size_t flat = 0; flat < h.counts.size(); ++flat) {
        if (h.counts[flat] == 0) continue;
        std::size_t rem = flat;
        for (std::size_t d = h.axes.size(); d-- > 0;) {
            idx[d] = rem % h.axes[d].size;
            rem /= h.axes[d].size;
        }
        std::size_t mi[2] = {idx[a], idx[b] * h.axes[c].size + idx[c]};
        add_count(merged, mi, h.counts[flat]);
    }
    return mutual_info(merged, 0, 1);
}

// Chain rule I(a;b|c) = I(a;(b,c)) - I(a;c) on random histograms, and the
// plug-in CMI against brute-force triple summation.
inline CheckResult cmi_chain_identity(std::size_t n_hists = 200) {
    CheckResult r;
    r.name = "cmi_chain_identity";
    RngStream rng(31, 0);
    double worst_chain = 0.0, worst_brute = 0.0;
    for (std::size_t i = 0; i < n_hists; ++i) {
        std::size_t na = 2 + rng.uniform_below(3);
        std::size_t nb = 2 + rng.uniform_below(3);
        std::size_t nc = 2 + rng.uniform_below(3);
        JointHistogram h = make_histogram({{"a", na}, {"b", nb}, {"c", nc}});
        for (std::size_t cell = 0; cell < h.counts.size(); ++cell) {
            std::uint64_t v = rng.uniform_below(20);  // zeros included
            h.counts[cell] = v;
            h.total += v;
        }
        if (h.total == 0) {
            h.counts[0] = 1;
            h.total = 1;
        }
        double cmi = cond_mutual_info(h, 0, 1, 2);
        double chain = joint_mutual_info(h, 0, 1, 2) - mutual_info(h, 0, 2);
        worst_chain = std::max(worst_chain, std::abs(cmi - chain));

        // Brute force: direct triple sum over empirical frequencies.
        double brute = 0.0;
        std::vector<double> pc(nc, 0.0), pac(na * nc, 0.0), pbc(nb * nc, 0.0);
        const double n = static_cast<double>(h.total);
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t c = 0; c < nc; ++c) {
                    double p = static_cast<double>(h.counts[(a * nb + b) * nc + c]) / n;
                    pc[c] += p;
                    pac[a * nc + c] += p;
                    pbc[b * nc + c] += p;
                }
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t c = 0; c < nc; ++c) {
                    double p = static_cast<double>(h.counts[(a * nb + b) * nc + c]) / n;
                    if (p > 0.0) brute += p * std::log(p * pc[c] / (pac[a * nc + c] * pbc[b * nc + c]));
                }
        worst_brute = std::max(worst_brute, std::abs(cmi - brute));
    }
    r.passed = (worst_chain <= 1e-10) && (worst_brute <= 1e-12);
    r.measured = std::to_string(n_hists) + " histograms, worst chain gap " +
                 format_double(worst_chain) + ", worst brute-force gap " +
                 format_double(worst_brute);
    return r;
}

// Closed-loop slope recovery: escape means generated from the rate formula
// with lognormal noise must regress back to the formula's slope within 5%.
inline CheckResult kramers_closed_loop() {
    CheckResult r;
    r.name = "kramers_closed_loop";
    const double ca = 1.0, cb = 1.6, p_true = 0.35;
    const double slope_true = 2.0 * (p_true / ca + (1.0 - p_true) / cb);
    RngStream rng(41, 0);
    std::vector<EscapeSetting> settings;
    double dls[] = {0.05, 0.08, 0.11};
    double lrs[] = {0.1, 0.2};
    std::size_t batches[] = {4, 8};
    for (double dl : dls)
        for (double lr : lrs)
            for (std::size_t b : batches) {
                EscapeSetting s;
                s.barrier = dl;
                s.lr = lr;
                s.batch = b;
                s.curv_min = ca;
                s.curv_saddle = cb;
                double tau = kramers_predict(dl, lr, static_cast<double>(b), ca, cb, p_true);
                s.mean_escape_steps = tau * std::exp(0.1 * rng.normal());
                s.n_escaped = 1000;
                settings.push_back(s);
            }
    EscapeLawFit fit = fit_escape_law(settings, 50);
    double rel = std::abs(fit.slope - slope_true) / slope_true;
    r.passed = rel <= 0.05;
    r.measured = "slope " + format_double(fit.slope) + " vs true " + format_double(slope_true) +
                 " (rel err " + format_double(rel) + ", R2 " + format_double(fit.r_squared) + ")";
    return r;
}

// Eigendecomposition sanity: reconstruction, orthonormality, trace identity.
inline CheckResult eigen_reconstruction() {
    CheckResult r;
    r.name = "eigen_reconstruction";
    RngStream rng(53, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 6;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) a.at(i, j) = a.at(j, i) = rng.normal();
        auto pairs = sym_eigen(a);
        double tr_sum = 0.0;
        Matrix recon(n, n);
        for (const auto& pr : pairs) {
            tr_sum += pr.value;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    recon.at(i, j) += pr.value * pr.vector[i] * pr.vector[j];
        }
        double scale = std::max(1.0, frobenius_norm(a));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                worst = std::max(worst, std::abs(recon.at(i, j) - a.at(i, j)) / scale);
        worst = std::max(worst, std::abs(tr_sum - trace(a)) / scale);
    }
    r.passed = worst <= 1e-9;
    r.measured = "worst relative reconstruction error " + format_double(worst);
    return r;
}

// Gap identity and entropy floor on a real (tiny) benchmark run.
inline CheckResult gap_bookkeeping() {
    CheckResult r;
    r.name = "gap_bookkeeping";
    GridTaskConfig g;
    g.width = 3;
    g.height = 3;
    g.goals = {4};
    g.expert_noise = 0.3;
    ToyTask task = make_gridworld_task(g);
    GapRunConfig cfg;
    cfg.hidden = 8;
    cfg.steps = 300;
    cfg.batch = 8;
    cfg.lr = 0.2;
    cfg.coverage = 1.0;
    cfg.cmi_draws = 2000;
    GapRun run = run_regime(task, nullptr, Regime::Scratch, 50, cfg, 5);
    double identity = std::abs(run.report.gap - (run.report.expected_loss - run.report.train_loss));
    double floor_slack = run.report.expected_loss - (cond_entropy(task.expert) - 1e-6);
    r.passed = !run.report.flagged && identity <= 1e-12 && floor_slack >= 0.0;
    r.measured = "identity residual " + format_double(identity) + ", entropy floor slack " +
                 format_double(floor_slack);
    return r;
}

// Streams replay bit-exactly and distinct streams decorrelate.
inline CheckResult rng_reproducibility() {
    CheckResult r;
    r.name = "rng_reproducibility";
    RngStream a1(99, 3), a2(99, 3), b(99, 4);
    bool same = true, differ = false;
    for (int i = 0; i < 64; ++i) {
        auto va = a1.next_u64();
        same = same && (va == a2.next_u64());
        differ = differ || (va != b.next_u64());
    }
    RngStream s1 = RngStream(99, 3).split(7);
    RngStream s2 = RngStream(99, 3).split(7);
    for (int i = 0; i < 8; ++i) same = same && (s1.next_u64() == s2.next_u64());
    r.passed = same && differ;
    r.measured = same ? (differ ? "replay exact, streams independent" : "streams collide")
                      : "replay mismatch";
    return r;
}

}  // namespace checks

struct VerifyOutcome {
    std::vector<CheckResult> results;
    bool all_passed = true;
};

// Runs every check. `fault` names a deliberate corruption for negative
// controls; "" runs clean.
inline VerifyOutcome run_verification(const std::string& fault = "") {
    VerifyOutcome out;
    auto timed = [&out](CheckResult c, std::chrono::steady_clock::time_point t0) {
        auto t1 = std::chrono::steady_clock::now();
        c.millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
        out.all_passed = out.all_passed && c.passed;
        out.results.push_back(std::move(c));
    };
    auto run = [&](auto&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        timed(fn(), t0);
    };
    run([] { return checks::pinsker_lemma_sweep(); });
    run([] { return checks::fisher_softmax_oracle(); });
    run([&fault] { return checks::gradient_check(fault); });
    run([] { return checks::cmi_chain_identity(); });
    run([] { return checks::kramers_closed_loop(); });
    run([] { return checks::eigen_reconstruction(); });
    run([] { return checks::gap_bookkeeping(); });
    run([] { return checks::rng_reproducibility(); });
    return out;
}

}  // namespace infogap

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "infogap/cond_table.hpp"
#include "infogap/histogram.hpp"
#include "infogap/model.hpp"
#include "infogap/rng.hpp"
#include "oracles.hpp"

using namespace infogap;

// ---- conditional tables -----------------------------------------------------

TEST_CASE("row entropy on hand rows", "[table]") {
    REQUIRE(row_entropy(std::vector<double>{1.0, 0.0}) == 0.0);
    REQUIRE(row_entropy(std::vector<double>{0.5, 0.5}) == Catch::Approx(std::log(2.0)).margin(1e-15));
    // H(0.75, 0.25) = -(0.75 ln 0.75 + 0.25 ln 0.25)
    REQUIRE(row_entropy(std::vector<double>{0.75, 0.25}) == Catch::Approx(0.5623351446188083).margin(1e-12));
}

TEST_CASE("table validation rejects malformed input", "[table]") {
    REQUIRE_THROWS_AS(make_cond_table({{0.5, 0.6}}), ValidationError);          // row sum != 1
    REQUIRE_THROWS_AS(make_cond_table({{1.2, -0.2}}), ValidationError);         // negative entry
    REQUIRE_THROWS_AS(make_cond_table({{0.5, 0.5}}, {0.9}), ValidationError);   // marginal sum != 1
    REQUIRE_THROWS_AS(make_cond_table({{0.5, 0.5}}, {}, {1.0}), ValidationError);  // volume < support
    CondTable ragged = make_cond_table({{0.5, 0.5}, {1.0, 0.0}});
    ragged.rows[1].push_back(0.0);
    REQUIRE_THROWS_AS(validate(ragged), ValidationError);
}

TEST_CASE("entropy gap against hand values", "[table]") {
    // Uniform row with volume = support: D = 0 up to rounding.
    CondTable u = make_cond_table({{0.25, 0.25, 0.25, 0.25}});
    REQUIRE(entropy_gap(u, std::size_t{0}) == Catch::Approx(0.0).margin(1e-15));
    // Deterministic row with default volume 1: D = log 1 - 0 = 0.
    CondTable det = make_cond_table({{1.0, 0.0, 0.0, 0.0}});
    REQUIRE(entropy_gap(det, std::size_t{0}) == 0.0);
    // Same row measured against the whole 4-point alphabet: D = ln 4.
    CondTable det4 = make_cond_table({{1.0, 0.0, 0.0, 0.0}}, {}, {4.0});
    REQUIRE(entropy_gap(det4, std::size_t{0}) == Catch::Approx(std::log(4.0)).margin(1e-15));
    REQUIRE(entropy_gap(det4, "x0") == entropy_gap(det4, std::size_t{0}));
    REQUIRE_THROWS_AS(entropy_gap(det4, std::size_t{5}), ArgumentError);
}

TEST_CASE("conditional entropy weights rows by the marginal", "[table]") {
    CondTable t = make_cond_table({{1.0, 0.0}, {0.5, 0.5}}, {0.25, 0.75});
    REQUIRE(cond_entropy(t) == Catch::Approx(0.75 * std::log(2.0)).margin(1e-15));
}

TEST_CASE("reference set resolves support, alphabet, or rejects", "[table]") {
    CondTable t = make_cond_table({{0.5, 0.5, 0.0, 0.0}});
    REQUIRE(reference_set(t, 0) == std::vector<std::size_t>{0, 1});
    t.volumes[0] = 4.0;  // full alphabet reading
    REQUIRE(reference_set(t, 0) == std::vector<std::size_t>{0, 1, 2, 3});
    t.volumes[0] = 3.0;  // matches neither
    REQUIRE_THROWS_AS(reference_set(t, 0), ValidationError);
    t.volumes[0] = 2.5;  // not a count at all
    REQUIRE_THROWS_AS(reference_set(t, 0), ValidationError);
}

TEST_CASE("deviation bounds on a hand row", "[table]") {
    CondTable t = make_cond_table({{0.75, 0.25}});
    PinskerCheck c = pinsker_bounds(t, std::size_t{0});
    REQUIRE(c.gap == Catch::Approx(std::log(2.0) - 0.5623351446188083).margin(1e-12));
    REQUIRE(c.sup_dev == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(c.pair_dev == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(c.sup_bound == Catch::Approx(std::sqrt(c.gap / 2.0)).margin(1e-15));
    REQUIRE(c.pair_bound == Catch::Approx(std::sqrt(2.0 * c.gap)).margin(1e-15));
    REQUIRE(c.sup_dev <= c.sup_bound);
    REQUIRE(c.pair_dev <= c.pair_bound);
}

TEST_CASE("deviation bounds hold across random simplex rows", "[table]") {
    RngStream rng(101, 0);
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t k = 2 + rng.uniform_below(9);
        auto row = rng.dirichlet_flat(k);
        // Declare the full alphabet as the reference volume.
        CondTable t = make_cond_table({row}, {}, {static_cast<double>(k)});
        PinskerCheck c = pinsker_bounds(t, std::size_t{0});
        REQUIRE(c.sup_dev <= c.sup_bound + 1e-12);
        REQUIRE(c.pair_dev <= c.pair_bound + 1e-12);
    }
}

TEST_CASE("mixing toward uniform shrinks the gap", "[table]") {
    CondTable t = make_cond_table({{0.9, 0.1, 0.0}}, {}, {3.0});
    CondTable half = mix_toward_uniform(t, 0.5);
    REQUIRE(entropy_gap(half, std::size_t{0}) < entropy_gap(t, std::size_t{0}));
    CondTable full = mix_toward_uniform(t, 1.0);
    REQUIRE(entropy_gap(full, std::size_t{0}) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE_THROWS_AS(mix_toward_uniform(t, 1.5), DomainError);
}

TEST_CASE("entropy ladder runs exactly from zero to log of the alphabet", "[table]") {
    RngStream rng(102, 0);
    auto family = make_entropy_family(6, 4, rng);
    REQUIRE(family.size() == 6);
    REQUIRE(cond_entropy(family.front()) == 0.0);
    REQUIRE(cond_entropy(family.back()) == Catch::Approx(std::log(4.0)).margin(1e-14));
    for (std::size_t i = 1; i < family.size(); ++i)
        REQUIRE(cond_entropy(family[i]) > cond_entropy(family[i - 1]));
    REQUIRE_THROWS_AS(make_entropy_family(1, 4, rng), ArgumentError);
    REQUIRE_THROWS_AS(make_entropy_family(3, 1, rng), ArgumentError);
}

TEST_CASE("table serialization round-trips bit-exactly", "[table]") {
    RngStream rng(103, 0);
    CondTable t = make_cond_table({rng.dirichlet_flat(4), rng.dirichlet_flat(4)});
    CondTable back = cond_table_from_json(cond_table_to_json(t));
    REQUIRE(back.rows == t.rows);
    REQUIRE(back.x_marginal == t.x_marginal);
    REQUIRE(back.volumes == t.volumes);
    REQUIRE(back.x_alphabet == t.x_alphabet);
}

// ---- histograms -------------------------------------------------------------

TEST_CASE("mutual information on hand tables", "[histogram]") {
    // Perfectly coupled pair of binary variables: I = ln 2.
    JointHistogram h = make_histogram({{"a", 2}, {"b", 2}});
    add_count(h, std::vector<std::size_t>{0, 0}, 5);
    add_count(h, std::vector<std::size_t>{1, 1}, 5);
    REQUIRE(mutual_info(h, "a", "b") == Catch::Approx(std::log(2.0)).margin(1e-14));
    // Independent uniform pair: I = 0 exactly after rounding clamp.
    JointHistogram ind = make_histogram({{"a", 2}, {"b", 2}});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) add_count(ind, std::vector<std::size_t>{i, j}, 3);
    REQUIRE(mutual_info(ind, 0, 1) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(mutual_info(ind, 0, 1) >= 0.0);
    REQUIRE_THROWS_AS(mutual_info(h, 0, 0), ArgumentError);
}

TEST_CASE("plug-in estimates agree with an entropy-sum oracle", "[histogram]") {
    RngStream rng(201, 0);
    // Entropy of a count vector, written independently of the estimators.
    auto count_entropy = [](const std::vector<std::uint64_t>& c) {
        double n = 0.0;
        for (auto v : c) n += static_cast<double>(v);
        double h = 0.0;
        for (auto v : c)
            if (v > 0) {
                double p = static_cast<double>(v) / n;
                h -= p * std::log(p);
            }
        return h;
    };
    for (int rep = 0; rep < 20; ++rep) {
        JointHistogram h = make_histogram({{"a", 3}, {"b", 4}, {"c", 2}});
        for (int draws = 0; draws < 60; ++draws) {
            std::vector<std::size_t> idx = {rng.uniform_below(3), rng.uniform_below(4),
                                            rng.uniform_below(2)};
            add_count(h, idx, 1 + rng.uniform_below(5));
        }
        std::vector<std::size_t> sizes;
        auto count_marginal = [&](std::vector<std::size_t> keep) {
            return detail::marginal_counts(h, keep, sizes);
        };
        double ha = count_entropy(count_marginal({0}));
        double hb = count_entropy(count_marginal({1}));
        double hc = count_entropy(count_marginal({2}));
        double hab = count_entropy(count_marginal({0, 1}));
        double hac = count_entropy(count_marginal({0, 2}));
        double hbc = count_entropy(count_marginal({1, 2}));
        double habc = count_entropy(count_marginal({0, 1, 2}));
        REQUIRE(mutual_info(h, 0, 1) == Catch::Approx(ha + hb - hab).margin(1e-12));
        REQUIRE(cond_mutual_info(h, 0, 1, 2) ==
                Catch::Approx(hac + hbc - hc - habc).margin(1e-12));
    }
}

TEST_CASE("conditional information obeys the chain identity", "[histogram]") {
    RngStream rng(202, 0);
    for (int rep = 0; rep < 30; ++rep) {
        JointHistogram h = make_histogram({{"a", 3}, {"b", 3}, {"c", 3}});
        for (int draws = 0; draws < 40; ++draws) {
            std::vector<std::size_t> idx = {rng.uniform_below(3), rng.uniform_below(3),
                                            rng.uniform_below(3)};
            add_count(h, idx);
        }
        // Merge (b, c) into one 9-way axis to measure I(a; (b,c)).
        JointHistogram merged = make_histogram({{"a", 3}, {"bc", 9}});
        std::vector<std::size_t> idx(3);
        for (std::size_t flat = 0; flat < h.counts.size(); ++flat)
            if (h.counts[flat] != 0) {
                std::size_t rem = flat;
                idx[2] = rem % 3;
                rem /= 3;
                idx[1] = rem % 3;
                idx[0] = rem / 3;
                add_count(merged, std::vector<std::size_t>{idx[0], idx[1] * 3 + idx[2]},
                          h.counts[flat]);
            }
        double lhs = cond_mutual_info(h, 0, 1, 2);
        double rhs = mutual_info(merged, 0, 1) - mutual_info(h, 0, 2);
        REQUIRE(lhs == Catch::Approx(rhs).margin(1e-10));
    }
}

TEST_CASE("information is invariant under symbol relabeling", "[histogram]") {
    RngStream rng(203, 0);
    JointHistogram h = make_histogram({{"a", 4}, {"b", 3}});
    for (int draws = 0; draws < 50; ++draws)
        add_count(h, std::vector<std::size_t>{rng.uniform_below(4), rng.uniform_below(3)});
    // Reverse the a axis.
    JointHistogram perm = make_histogram({{"a", 4}, {"b", 3}});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            add_count(perm, std::vector<std::size_t>{3 - i, j}, h.counts[i * 3 + j]);
    REQUIRE(mutual_info(perm, 0, 1) == Catch::Approx(mutual_info(h, 0, 1)).margin(1e-14));
}

TEST_CASE("two-dimensional estimate matches the direct-table computation", "[histogram]") {
    RngStream rng(204, 0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::vector<double>> counts(3, std::vector<double>(4, 0.0));
        JointHistogram h = make_histogram({{"a", 3}, {"b", 4}});
        for (int draws = 0; draws < 80; ++draws) {
            std::size_t i = rng.uniform_below(3), j = rng.uniform_below(4);
            counts[i][j] += 1.0;
            add_count(h, std::vector<std::size_t>{i, j});
        }
        REQUIRE(mutual_info(h, 0, 1) == Catch::Approx(oracles::table_mi(counts)).margin(1e-12));
    }
}

TEST_CASE("histogram serialization round-trips", "[histogram]") {
    JointHistogram h = make_histogram({{"x", 2}, {"y", 3}});
    add_count(h, std::vector<std::size_t>{0, 2}, 7);
    add_count(h, std::vector<std::size_t>{1, 0}, 2);
    auto j = histogram_to_json(h);
    REQUIRE(j.at("axes").get<std::vector<std::string>>() == std::vector<std::string>{"x", "y"});
    REQUIRE(j.at("shape").get<std::vector<std::size_t>>() == std::vector<std::size_t>{2, 3});
    JointHistogram back = histogram_from_json(j);
    REQUIRE(back.counts == h.counts);
    REQUIRE(back.total == h.total);
    auto bad = j;
    bad["counts"] = std::vector<std::uint64_t>{1, 2};
    REQUIRE_THROWS_AS(histogram_from_json(bad), DataError);
}

// ---- binning ----------------------------------------------------------------

TEST_CASE("bin lookup respects edges and clamp policy", "[histogram]") {
    BinningSpec s;
    s.edges = {{0.0, 1.0, 2.0, 3.0}};
    validate(s);
    REQUIRE(bin_of(s, 0, 0.5) == 0);
    REQUIRE(bin_of(s, 0, 1.0) == 1);   // half-open [1, 2)
    REQUIRE(bin_of(s, 0, 2.9) == 2);
    REQUIRE(bin_of(s, 0, -5.0) == 0);  // clamps below
    REQUIRE(bin_of(s, 0, 9.0) == 2);   // clamps above
    s.policy = ClampPolicy::Error;
    REQUIRE_THROWS_AS(bin_of(s, 0, -5.0), DataError);
    REQUIRE_THROWS_AS(bin_of(s, 0, std::nan("")), DataError);
    BinningSpec bad;
    bad.edges = {{0.0, 0.0, 1.0}};
    REQUIRE_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("sign binning splits each dimension at zero", "[histogram]") {
    BinningSpec s = sign_binning(3);
    REQUIRE(s.edges.size() == 3);
    REQUIRE(s.n_bins(0) == 2);
    REQUIRE(bin_of(s, 0, -0.5) == 0);
    REQUIRE(bin_of(s, 1, 0.0) == 1);
    REQUIRE(bin_of(s, 2, 0.5) == 1);
}

TEST_CASE("layer discretization produces deterministic mixed-radix ids", "[histogram]") {
    Arch arch;
    arch.input_dim = 3;
    arch.hidden = {4};
    arch.n_outputs = 2;
    RngStream rng(301, 0);
    ModelState m = ModelState::init(arch, rng);
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> x(3);
        for (auto& v : x) v = rng.normal();
        inputs.push_back(x);
    }
    BinningSpec s = sign_binning(4);
    BinnedColumn c1 = bin_representations(m, inputs, 0, s);
    BinnedColumn c2 = bin_representations(m, inputs, 0, s);
    REQUIRE(c1.n_bins == 16);
    REQUIRE(c1.ids == c2.ids);
    for (auto id : c1.ids) REQUIRE(id < c1.n_bins);
    // Zero weights push every activation to tanh(0) = 0: one occupied bin.
    ModelState z = ModelState::zeros(arch);
    BinnedColumn cz = bin_representations(z, inputs, 0, s);
    for (auto id : cz.ids) REQUIRE(id == cz.ids[0]);
    // The logits layer is addressable one past the hidden layers.
    BinnedColumn cl = bin_representations(m, inputs, 1, sign_binning(2));
    REQUIRE(cl.n_bins == 4);
    REQUIRE_THROWS_AS(bin_representations(m, inputs, 2, s), ArgumentError);
    REQUIRE_THROWS_AS(bin_representations(m, inputs, 0, sign_binning(3)), DimensionError);
}

TEST_CASE("refining bins never loses information about the input", "[histogram]") {
    Arch arch;
    arch.input_dim = 2;
    arch.hidden = {2};
    arch.n_outputs = 2;
    RngStream rng(302, 0);
    ModelState m = ModelState::init(arch, rng);
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 40; ++i) inputs.push_back({rng.normal(), rng.normal()});

    BinningSpec coarse;
    coarse.edges.assign(2, {-8.0, 0.0, 8.0});
    BinningSpec fine;
    fine.edges.assign(2, {-8.0, -0.5, 0.0, 0.5, 8.0});  // nested refinement

    auto info_with_input = [&](const BinningSpec& spec) {
        BinnedColumn c = bin_representations(m, inputs, 0, spec);
        JointHistogram h = make_histogram({{"x", inputs.size()}, {"z", c.n_bins}});
        for (std::size_t i = 0; i < inputs.size(); ++i)
            add_count(h, std::vector<std::size_t>{i, c.ids[i]});
        return mutual_info(h, 0, 1);
    };
    REQUIRE(info_with_input(fine) >= info_with_input(coarse) - 1e-12);
}

// ---- weight-information ceiling ---------------------------------------------

TEST_CASE("weight information ceiling on hand values", "[histogram]") {
    // K=2, |theta|^2=1, trH=2, beta=0.5: (K/2)[0 + ln 2 - 2 ln 1] = ln 2.
    REQUIRE(weight_info_ceiling(2, 1.0, 2.0, 0.5) == Catch::Approx(std::log(2.0)).margin(1e-14));
    // Scaling trH by e raises the ceiling by exactly K/2 nats.
    for (std::size_t K : {2u, 5u, 9u}) {
        double base = weight_info_ceiling(K, 3.0, 1.7, 0.25);
        double scaled = weight_info_ceiling(K, 3.0, 1.7 * std::exp(1.0), 0.25);
        REQUIRE(scaled - base == Catch::Approx(static_cast<double>(K) / 2.0).margin(1e-10));
        // Monotone in both curvature and norm.
        REQUIRE(weight_info_ceiling(K, 3.0, 2.0, 0.25) > base);
        REQUIRE(weight_info_ceiling(K, 4.0, 1.7, 0.25) > base);
    }
    REQUIRE_THROWS_AS(weight_info_ceiling(0, 1.0, 1.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(weight_info_ceiling(2, -1.0, 1.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(weight_info_ceiling(2, 1.0, 0.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(weight_info_ceiling(2, 1.0, 1.0, -2.0), DomainError);
}

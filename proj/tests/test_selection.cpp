#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "safs/selection.hpp"
#include "safs/synthetic.hpp"

using namespace safs;

namespace {

/// One feature column with the given per-value (positives, size) counts.
dataset from_strata(const std::vector<std::pair<int, int>>& strata) {
    feature_spec spec{"f", {}};
    std::vector<code_t> col;
    std::vector<std::uint8_t> y;
    for (std::size_t u = 0; u < strata.size(); ++u) {
        spec.values.push_back("v" + std::to_string(u));
        for (int i = 0; i < strata[u].second; ++i) {
            col.push_back(static_cast<code_t>(u));
            y.push_back(i < strata[u].first ? 1 : 0);
        }
    }
    return dataset({spec}, {col}, y);
}

} // namespace

TEST(ValueOddsRatio, Examples) {
    EXPECT_DOUBLE_EQ(value_odds_ratio(0.25, 0.25), 1.0);
    EXPECT_DOUBLE_EQ(value_odds_ratio(0.5, 0.25), 3.0);
    // all-positive stratum of 4: (4 + 0.5) / (4 + 1) = 0.9, odds 9 vs 1/3
    EXPECT_DOUBLE_EQ(stratum_mean(4, 4), 0.9);
    EXPECT_NEAR(value_odds_ratio(stratum_mean(4, 4), 0.25), 27.0, 1e-12);
    EXPECT_DOUBLE_EQ(stratum_mean(0, 4), 0.1);
    EXPECT_THROW(value_odds_ratio(0.5, 0.0), data_error);
    EXPECT_THROW(value_odds_ratio(0.5, 1.0), data_error);
}

TEST(FeatureOddsProfile, NullFeature) {
    const auto d = from_strata({{1, 4}, {2, 8}, {3, 12}});
    const auto p = feature_odds_profile(d, 0);
    for (double r : p.ratios) EXPECT_DOUBLE_EQ(r, 1.0);
    EXPECT_EQ(p.strata_sizes, (std::vector<std::uint64_t>{4, 8, 12}));
}

TEST(FeatureOddsProfile, BinaryFeature) {
    // strata 4/8 and 2/16 have means 0.5 and 0.125, and 6/24 gives mu_g = 0.25
    const auto d = from_strata({{4, 8}, {2, 16}});
    ASSERT_DOUBLE_EQ(d.global_mean(), 0.25);
    const auto p = feature_odds_profile(d, 0);
    EXPECT_NEAR(p.ratios[0], 3.0, 1e-12);
    EXPECT_NEAR(p.ratios[1], (0.125 / 0.875) / (0.25 / 0.75), 1e-12);
    EXPECT_NEAR(p.ratios[1], 0.428571428571, 1e-9);
    EXPECT_DOUBLE_EQ(p.strata_means[1], 0.125);
}

TEST(FeatureOddsProfile, SingleValueFeature) {
    const auto d = from_strata({{3, 10}});
    const auto p = feature_odds_profile(d, 0);
    ASSERT_EQ(p.ratios.size(), 1u);
    EXPECT_DOUBLE_EQ(p.ratios[0], 1.0);
    EXPECT_THROW(feature_odds_profile(d, 1), usage_error);
}

TEST(HoyerSparsity, Axioms) {
    EXPECT_EQ(hoyer_sparsity(std::vector<double>{1, 0, 0, 0}), 1.0);
    for (double c : {1e-9, 0.3, 1.0, 7.0, 1e9}) {
        EXPECT_EQ(hoyer_sparsity(std::vector<double>{c, c, c, c}), 0.0);
        EXPECT_EQ(hoyer_sparsity(std::vector<double>{c, c, c}), 0.0);
    }
    EXPECT_NEAR(hoyer_sparsity(std::vector<double>{3, 1, 1, 1}), 2.0 - 6.0 / std::sqrt(12.0), 1e-15);
    EXPECT_NEAR(hoyer_sparsity(std::vector<double>{3, 1, 1, 1}), 0.2679491924311227, 1e-15);
}

TEST(HoyerSparsity, DegenerateCases) {
    EXPECT_EQ(hoyer_sparsity(std::vector<double>{5.0}), 0.0);
    EXPECT_EQ(hoyer_sparsity(std::vector<double>{0, 0, 0}), 0.0);
    EXPECT_EQ(hoyer_sparsity(std::vector<double>{}), 0.0);
    EXPECT_THROW(hoyer_sparsity(std::vector<double>{1, -1}), usage_error);
    EXPECT_THROW(hoyer_sparsity(std::vector<double>{1, INFINITY}), usage_error);
}

TEST(HoyerSparsity, PropertiesOnRandomVectors) {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t c = 2 + gen() % 15;
        std::vector<double> v(c);
        for (auto& x : v) x = gen() % 4 == 0 ? 0.0 : unit(gen) * 10;
        if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) v[0] = 1;
        const double eta = hoyer_sparsity(v);
        ASSERT_GE(eta, 0.0);
        ASSERT_LE(eta, 1.0);
        EXPECT_NEAR(eta, std::clamp(oracle::hoyer(v), 0.0, 1.0), 1e-12);
        auto scaled = v;
        for (auto& x : scaled) x *= 1234.5;
        EXPECT_NEAR(hoyer_sparsity(scaled), eta, 1e-12);
        auto permuted = v;
        std::shuffle(permuted.begin(), permuted.end(), gen);
        EXPECT_NEAR(hoyer_sparsity(permuted), eta, 1e-12);
    }
}

TEST(RankFeatures, PlantedFeatureBeatsNoise) {
    // feature 0 carries one elevated-odds value; feature 1 is noise
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        synthetic_config cfg;
        cfg.rows = 2000;
        cfg.cardinalities = {4, 4};
        cfg.base_rate = 0.25;
        cfg.planted = subgroup_description({{0, {2}}});
        cfg.q_true = 3.0;
        cfg.seed = seed;
        const auto r = rank_features(synthesize(cfg));
        if (r.order.front() == 0) ++wins;
    }
    EXPECT_GE(wins, 45);
}

TEST(RankFeatures, IdenticalCopiesTieByIndex) {
    const auto base = from_strata({{4, 8}, {2, 16}, {1, 10}});
    std::vector<feature_spec> specs;
    std::vector<std::vector<code_t>> cols;
    for (int copy = 0; copy < 4; ++copy) {
        auto spec = base.feature(0);
        spec.name = "copy" + std::to_string(copy);
        specs.push_back(spec);
        cols.emplace_back(base.column(0).begin(), base.column(0).end());
    }
    const dataset d(specs, cols, {base.outcome().begin(), base.outcome().end()});
    const auto r = rank_features(d);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2, 3}));
    for (double s : r.scores) EXPECT_EQ(s, r.scores[0]);
}

TEST(RankFeatures, ClonedColumnStaysAdjacent) {
    synthetic_config cfg;
    cfg.rows = 3000;
    cfg.cardinalities = {3, 4, 2, 5, 4};
    cfg.planted = subgroup_description({{1, {0}}, {3, {1, 2}}});
    cfg.q_true = 2.5;
    cfg.seed = 9;
    const auto d0 = synthesize(cfg);
    auto specs = d0.features();
    std::vector<std::vector<code_t>> cols;
    for (std::size_t m = 0; m < d0.num_features(); ++m) cols.emplace_back(d0.column(m).begin(), d0.column(m).end());
    specs.push_back(d0.feature(3));
    specs.back().name = "clone";
    cols.push_back(cols[3]);
    const dataset d(specs, cols, {d0.outcome().begin(), d0.outcome().end()});
    const auto r = rank_features(d);
    EXPECT_NEAR(r.scores[3], r.scores[5], 1e-12);
    const auto pos3 = std::find(r.order.begin(), r.order.end(), 3u) - r.order.begin();
    const auto pos5 = std::find(r.order.begin(), r.order.end(), 5u) - r.order.begin();
    EXPECT_EQ(std::abs(pos3 - pos5), 1);
}

TEST(RankFeatures, ValueRelabelingDoesNotChangeEta) {
    const auto d = from_strata({{4, 8}, {2, 16}, {1, 10}, {7, 9}});
    std::vector<code_t> col(d.column(0).begin(), d.column(0).end());
    const std::vector<code_t> perm = {2, 0, 3, 1};
    for (auto& c : col) c = perm[c];
    const dataset permuted({d.feature(0)}, {col}, {d.outcome().begin(), d.outcome().end()});
    EXPECT_NEAR(rank_features(permuted).scores[0], rank_features(d).scores[0], 1e-12);
}

TEST(RankFeatures, SingletonAndPermutation) {
    const auto d = from_strata({{4, 8}, {2, 16}});
    EXPECT_EQ(rank_features(d).order, (std::vector<std::size_t>{0}));
    synthetic_config cfg;
    cfg.rows = 500;
    cfg.cardinalities = std::vector<std::size_t>(12, 3);
    cfg.seed = 5;
    auto r = rank_features(synthesize(cfg));
    std::sort(r.order.begin(), r.order.end());
    for (std::size_t m = 0; m < r.order.size(); ++m) EXPECT_EQ(r.order[m], m);
}

TEST(RankFeatures, NullFeatureSparsityVanishes) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        synthetic_config cfg;
        cfg.rows = 50000;
        cfg.cardinalities = {4};
        cfg.seed = seed;
        EXPECT_LT(rank_features(synthesize(cfg)).scores[0], 0.15);
    }
}

TEST(RankFeatures, ResultIndependentOfWorkers) {
    synthetic_config cfg;
    cfg.rows = 3000;
    cfg.cardinalities = std::vector<std::size_t>(9, 4);
    cfg.planted = subgroup_description({{2, {0}}});
    cfg.q_true = 2;
    cfg.seed = 1;
    const auto d = synthesize(cfg);
    const auto a = rank_features(d, 1), b = rank_features(d, 4);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.order, b.order);
}

TEST(RankFeatures, DegenerateOutcome) {
    const auto d = from_strata({{0, 8}, {0, 16}});
    EXPECT_THROW(rank_features(d), data_error);
    EXPECT_THROW(mutual_info_rank(d), data_error);
}

TEST(SelectTopK, Cuts) {
    feature_ranking r{ranking_method::safs, {0.2, 0.9, 0.9, 0.1}, {}};
    r.order = descending_order(r.scores);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 2, 0, 3}));
    EXPECT_EQ(select_top_k(r, 4), r.order);
    EXPECT_EQ(select_top_k(r, 1), (std::vector<std::size_t>{1}));
    EXPECT_THROW(select_top_k(r, 0), usage_error);
    EXPECT_THROW(select_top_k(r, 5), usage_error);
}

TEST(SelectTopK, SweepGrid) {
    EXPECT_EQ(top_k_grid(41), (std::vector<std::size_t>{4, 8, 12, 16, 20, 25, 29, 33, 37, 41}));
    EXPECT_EQ(top_k_grid(40), (std::vector<std::size_t>{4, 8, 12, 16, 20, 24, 28, 32, 36, 40}));
    EXPECT_EQ(top_k_grid(3), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(MutualInformation, IndependentFeatureIsZero) {
    // exact independence: each value has the same 1:3 outcome split
    const auto d = from_strata({{2, 8}, {4, 16}, {3, 12}});
    EXPECT_NEAR(mutual_information(d, 0), 0.0, 1e-15);
}

TEST(MutualInformation, FeatureEqualToOutcome) {
    const auto d = from_strata({{0, 30}, {10, 10}});
    const double mu = 0.25;
    EXPECT_NEAR(mutual_information(d, 0), -mu * std::log(mu) - (1 - mu) * std::log(1 - mu), 1e-12);
}

TEST(MutualInformation, TwoByTwoTable) {
    // rows = feature values, columns = (y=1, y=0): [[30,10],[10,30]]
    const auto d = from_strata({{30, 40}, {10, 40}});
    const double expected = oracle::mutual_information({{30, 10}, {10, 30}});
    EXPECT_NEAR(expected, 0.13081203594113694, 1e-12); // 0.75 ln 1.5 - 0.25 ln 2
    EXPECT_NEAR(mutual_information(d, 0), expected, 1e-12);
}

TEST(MutualInformation, RankingUsesSameOrderRules) {
    synthetic_config cfg;
    cfg.rows = 4000;
    cfg.cardinalities = {3, 3, 3, 3};
    cfg.planted = subgroup_description({{3, {1}}});
    cfg.q_true = 4;
    cfg.seed = 3;
    const auto r = mutual_info_rank(synthesize(cfg));
    EXPECT_EQ(r.method, ranking_method::mutual_information);
    EXPECT_EQ(r.order.front(), 3u);
    EXPECT_EQ(r.order, descending_order(r.scores));
}

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles/chi_square.hpp"
#include "streambal/baselines.hpp"

using namespace streambal;

namespace {

Population points(std::vector<double> pis, bool coords = true) {
    std::vector<Unit> units;
    for (std::size_t k = 0; k < pis.size(); ++k) {
        Unit u;
        u.id = static_cast<UnitId>(k + 1);
        u.pi = pis[k];
        if (coords) u.coords = {std::cos(1.7 * k) * k, std::sin(0.9 * k)};
        units.push_back(u);
    }
    return validate_population(units);
}

}  // namespace

TEST(ChiSquareOracle, KnownQuantiles) {
    EXPECT_NEAR(oracle::chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
    EXPECT_NEAR(oracle::chi_square_sf(30.14352720564616, 19), 0.05, 1e-9);
    EXPECT_NEAR(oracle::chi_square_sf(0.0, 4), 1.0, 1e-15);
}

TEST(DesignNames, RoundTrip) {
    for (auto k : {DesignKind::proposed, DesignKind::local_pivotal, DesignKind::rejective_poisson,
                   DesignKind::poisson, DesignKind::local_cube})
        EXPECT_EQ(parse_design(design_name(k)), k);
    EXPECT_EQ(parse_design("max_entropy"), DesignKind::rejective_poisson);
    EXPECT_FALSE(parse_design("cube").has_value());
}

TEST(LocalPivotal, PairSelectsExactlyOne) {
    auto pop = points({0.5, 0.5});
    Rng rng(4);
    int first = 0;
    const int runs = 4000;
    for (int r = 0; r < runs; ++r) {
        const auto s = local_pivotal(pop, rng);
        ASSERT_EQ(s.count(), 1u);
        first += s.selected(0);
    }
    EXPECT_NEAR(first / double(runs), 0.5, 4 * 0.5 / std::sqrt(runs));
}

TEST(LocalPivotal, IntegerPisUnchanged) {
    auto pop = points({1.0, 1.0, 1.0});
    Rng rng(1);
    EXPECT_EQ(local_pivotal(pop, rng), SampleVector({1, 1, 1}));
}

TEST(LocalPivotal, FixedSizeAndCoordsRequired) {
    auto pop = points({0.3, 0.7, 0.25, 0.75, 0.5, 0.5});
    Rng rng(9);
    for (int r = 0; r < 500; ++r) EXPECT_EQ(local_pivotal(pop, rng).count(), 3u);
    auto flat = points({0.5, 0.5}, false);
    EXPECT_THROW(local_pivotal(flat, rng), ConfigError);
}

TEST(RejectivePoisson, PairIsBalanced) {
    auto pop = points({0.5, 0.5});
    Rng rng(2);
    std::vector<std::size_t> counts(2, 0);
    for (int r = 0; r < 6000; ++r) {
        const auto s = rejective_poisson(pop, 1, rng);
        ASSERT_EQ(s.count(), 1u);
        ++counts[s.selected(0) ? 0 : 1];
    }
    EXPECT_GT(oracle::chi_square_sf(oracle::uniform_chi_square(counts), 1), 0.001);
}

TEST(RejectivePoisson, AllOnes) {
    auto pop = points({1.0, 1.0, 1.0});
    Rng rng(2);
    EXPECT_EQ(rejective_poisson(pop, 3, rng), SampleVector({1, 1, 1}));
}

TEST(RejectivePoisson, EqualPiUniformOverSamples) {
    auto pop = points({0.5, 0.5, 0.5, 0.5});
    Rng rng(77);
    std::map<std::vector<std::uint8_t>, std::size_t> seen;
    for (int r = 0; r < 60000; ++r) {
        const auto s = rejective_poisson(pop, 2, rng);
        ++seen[{s.values().begin(), s.values().end()}];
    }
    ASSERT_EQ(seen.size(), 6u);
    std::vector<std::size_t> counts;
    for (const auto& [k, c] : seen) counts.push_back(c);
    EXPECT_GT(oracle::chi_square_sf(oracle::uniform_chi_square(counts), 5), 0.001);
}

TEST(RejectivePoisson, Errors) {
    auto pop = points({0.5, 0.5, 0.5});
    Rng rng(1);
    EXPECT_THROW(rejective_poisson(pop, 2, rng), ConfigError);
    auto tiny = points({0.5, 0.5});
    EXPECT_THROW(rejective_poisson(tiny, 1, rng, 0), SamplingError);
}

TEST(Poisson, ExpectedSize) {
    auto pop = points({0.2, 0.4, 0.6, 0.8});
    Rng rng(3);
    double total = 0.0;
    for (int r = 0; r < 5000; ++r) total += poisson(pop, rng).count();
    // var of the size is sum pi(1-pi) = 0.8
    EXPECT_NEAR(total / 5000, 2.0, 4 * std::sqrt(0.8 / 5000));
}

TEST(Determinism, SameSeedSameSample) {
    auto pop = points({0.3, 0.7, 0.25, 0.75, 0.5, 0.5});
    Rng a(5), b(5);
    for (int r = 0; r < 20; ++r) {
        EXPECT_EQ(local_pivotal(pop, a), local_pivotal(pop, b));
        EXPECT_EQ(rejective_poisson(pop, 3, a), rejective_poisson(pop, 3, b));
    }
}

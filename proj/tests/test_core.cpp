#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "streambal/core.hpp"

using namespace streambal;

namespace {

Unit unit(UnitId id, double pi, std::vector<double> aux, std::vector<double> y = {}) {
    Unit u;
    u.id = id;
    u.pi = pi;
    u.aux = std::move(aux);
    u.y = std::move(y);
    return u;
}

}  // namespace

TEST(Validate, WellFormedPassesUnchanged) {
    auto pop = validate_population({unit(1, 0.5, {1}), unit(2, 0.5, {2}), unit(3, 0.5, {3})});
    EXPECT_EQ(pop.size(), 3u);
    EXPECT_EQ(pop.p, 1u);
    EXPECT_EQ(pop.q, 0u);
    EXPECT_FALSE(pop.has_coords());
}

TEST(Validate, PiOneIsPreDecided) {
    auto pop = validate_population({unit(1, 0.5, {1}), unit(2, 1.0, {1})});
    EXPECT_FALSE(pop.pre_decided(0));
    EXPECT_TRUE(pop.pre_decided(1));
}

TEST(Validate, DimensionMismatch) {
    EXPECT_THROW(validate_population({unit(1, 0.5, {1}), unit(2, 0.5, {1, 2})}), DimensionError);
    Unit a = unit(1, 0.5, {1});
    Unit b = unit(2, 0.5, {1});
    a.coords = {0.0, 0.0};
    b.coords = {0.0};
    EXPECT_THROW(validate_population({a, b}), DimensionError);
}

TEST(Validate, RangeAndFiniteness) {
    try {
        validate_population({unit(1, 0.5, {1}), unit(7, 1.5, {1})});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
    }
    EXPECT_THROW(validate_population({unit(1, -0.1, {1})}), ValidationError);
    EXPECT_THROW(validate_population({unit(1, 0.5, {NAN})}), ValidationError);
    EXPECT_THROW(validate_population({unit(1, 0.5, {1}), unit(1, 0.5, {1})}), ValidationError);
    EXPECT_THROW(validate_population({}), ValidationError);
}

TEST(Validate, ZeroPiDropped) {
    auto pop = validate_population({unit(1, 0.5, {1}), unit(2, 0.0, {1}), unit(3, 0.5, {1})});
    ASSERT_EQ(pop.size(), 2u);
    EXPECT_EQ(pop.units[1].id, 3);
    ASSERT_EQ(pop.dropped_zero_pi.size(), 1u);
    EXPECT_EQ(pop.dropped_zero_pi[0], 2);
}

TEST(HorvitzThompson, EqualPiConstantY) {
    auto pop = validate_population({unit(1, 0.5, {}, {1}), unit(2, 0.5, {}, {1}), unit(3, 0.5, {}, {1}),
                                    unit(4, 0.5, {}, {1})});
    EXPECT_DOUBLE_EQ(ht_estimate(SampleVector({1, 0, 1, 0}), pop, 0), 4.0);
}

TEST(HorvitzThompson, UnequalPi) {
    auto pop = validate_population({unit(1, 0.2, {}, {2}), unit(2, 0.5, {}, {5}), unit(3, 1.0, {}, {7})});
    EXPECT_NEAR(ht_estimate(SampleVector({1, 0, 1}), pop, 0), 17.0, 1e-12);
    EXPECT_EQ(ht_estimate(SampleVector({0, 0, 0}), pop, 0), 0.0);
}

TEST(HorvitzThompson, MissingYAndMisalignment) {
    auto pop = validate_population({unit(1, 0.5, {}), unit(2, 0.5, {})});
    EXPECT_THROW(ht_estimate(SampleVector({1, 0}), pop, 0), ConfigError);
    auto with_y = validate_population({unit(1, 0.5, {}, {1}), unit(2, 0.5, {}, {1})});
    EXPECT_THROW(ht_estimate(SampleVector({1}), with_y, 0), DimensionError);
}

TEST(HorvitzThompson, LinearInY) {
    auto pop = validate_population({unit(1, 0.3, {}, {1.5, 4.5}), unit(2, 0.6, {}, {-2, -6}),
                                    unit(3, 0.9, {}, {3, 9})});
    SampleVector s({1, 1, 0});
    EXPECT_NEAR(3.0 * ht_estimate(s, pop, 0), ht_estimate(s, pop, 1), 1e-12);
}

TEST(HorvitzThompson, EqualPiFixedSizeIsExpansion) {
    std::vector<Unit> units;
    for (int k = 0; k < 10; ++k) units.push_back(unit(k, 0.3, {}, {k * 1.25}));
    auto pop = validate_population(units);
    SampleVector s({0, 1, 0, 0, 1, 0, 0, 0, 1, 0});
    EXPECT_NEAR(ht_estimate(s, pop, 0), (10.0 / 3.0) * (1.25 + 5.0 + 10.0), 1e-12);
}

TEST(BalanceResidual, OriginalPiGivesZero) {
    auto pop = validate_population({unit(1, 0.3, {0.3, 2.0}), unit(2, 0.45, {0.45, -1.0}),
                                    unit(3, 0.25, {0.25, 7.5})});
    for (double r : balance_residual(pop, pop.pis())) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(BalanceResidual, PairExamples) {
    auto pop = validate_population({unit(1, 0.5, {0.5}), unit(2, 0.5, {0.5})});
    EXPECT_NEAR(balance_residual(pop, std::vector<double>{1, 0})[0], 0.0, 1e-15);
    EXPECT_NEAR(balance_residual(pop, std::vector<double>{1, 1})[0], 1.0, 1e-15);
    EXPECT_THROW(balance_residual(pop, std::vector<double>{1}), DimensionError);
}

TEST(CompensatedSum, RecoversCancellation) {
    std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(SampleVectorTest, CountAndEquality) {
    SampleVector a({1, 0, 1, 1});
    EXPECT_EQ(a.count(), 3u);
    EXPECT_TRUE(a.selected(0));
    EXPECT_FALSE(a.selected(1));
    EXPECT_EQ(a, SampleVector({1, 0, 1, 1}));
}

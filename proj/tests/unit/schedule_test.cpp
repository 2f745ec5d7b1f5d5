#include "support.hpp"

#include <snips/schedule.hpp>

using namespace snips;

TEST(Schedule, FaceHyperparametersRatio) {
    const auto s = make_geometric_schedule(90, 0.01, 500, 0.1, 3.3e-2, 5);
    EXPECT_NEAR(common_ratio(s), 0.982, 5e-4);
    EXPECT_EQ(s.size(), 500u);
    EXPECT_EQ(s.level(0), 90.0);
    EXPECT_EQ(s.level(499), 0.01);
}

TEST(Schedule, BedroomHyperparametersRatio) {
    EXPECT_NEAR(common_ratio(make_geometric_schedule(190, 0.01, 1086, 0.1, 1.8e-2, 3)), 0.991, 5e-4);
}

TEST(Schedule, ThreeLevelDecade) {
    const auto s = make_geometric_schedule(1, 1e-2, 3, 0.0, 1.0, 1);
    EXPECT_EQ(s.level(0), 1.0);
    EXPECT_NEAR(s.level(1), 0.1, 1e-15);
    EXPECT_EQ(s.level(2), 0.01);
}

TEST(Schedule, RejectsBadParameters) {
    EXPECT_THROW(NoiseSchedule({1.0, 1.0}, 0.1, 1.0, 1), ArgumentError);
    EXPECT_THROW(NoiseSchedule({1.0, 2.0}, 0.1, 1.0, 1), ArgumentError);
    EXPECT_THROW(NoiseSchedule({1.0, 0.5}, -0.1, 1.0, 1), ArgumentError);
    EXPECT_THROW(NoiseSchedule({1.0, 0.5}, 0.1, 0.0, 1), ArgumentError);
    EXPECT_THROW(NoiseSchedule({1.0, 0.5}, 0.1, 1.0, 0), ArgumentError);
    EXPECT_THROW(NoiseSchedule({}, 0.1, 1.0, 1), ArgumentError);
    EXPECT_THROW(make_geometric_schedule(0.01, 1, 5, 0.1, 1, 1), ArgumentError);
}

TEST(Crossing, NoiselessIsVacuouslyValid) {
    const auto svd = svd_decompose(test::diagonal_operator({1.0, 0.3}));
    const auto report = validate_crossing(NoiseSchedule({1.0, 0.1}, 0.0, 1.0, 1), svd);
    EXPECT_TRUE(report.valid);
    EXPECT_EQ(report.count(CrossingStatus::Noiseless), 2u);
    const auto part = partition_spectrum(1e-6, 0.0, svd);
    EXPECT_EQ(part.greater.size(), 2u);
}

TEST(Crossing, CrossesAtSecondLevel) {
    const auto svd = svd_decompose(make_identity(1));
    const auto report = validate_crossing(NoiseSchedule({1.0, 0.1}, 0.5, 1.0, 1), svd);
    ASSERT_TRUE(report.valid);
    EXPECT_EQ(report.coordinates[0].status, CrossingStatus::Crossed);
    EXPECT_EQ(report.coordinates[0].crossing_level, std::optional<std::size_t>(1)); // 0-based: the second level
}

TEST(Crossing, NeverBelowIsInvalid) {
    const auto report = validate_crossing(NoiseSchedule({1.0, 0.9}, 0.5, 1.0, 1), svd_decompose(make_identity(1)));
    EXPECT_FALSE(report.valid);
    EXPECT_EQ(report.coordinates[0].status, CrossingStatus::NeverBelow);
}

TEST(Crossing, StartingBelowIsInvalid) {
    const auto report = validate_crossing(NoiseSchedule({1.0, 0.1}, 0.5, 1.0, 1), svd_decompose(test::diagonal_operator({0.2})));
    EXPECT_FALSE(report.valid);
    EXPECT_EQ(report.coordinates[0].status, CrossingStatus::StartsBelow);
}

TEST(Crossing, ExactEqualityReportedAndNearLevelsSurfaced) {
    const auto svd = svd_decompose(make_identity(1));
    const auto eq = validate_crossing(NoiseSchedule({1.0, 0.5, 0.25}, 0.5, 1.0, 1), svd);
    EXPECT_EQ(eq.coordinates[0].status, CrossingStatus::CrossedAtEquality);
    EXPECT_EQ(eq.coordinates[0].equality_levels, std::vector<std::size_t>{1});
    const auto near = validate_crossing(NoiseSchedule({1.0, 0.5 * (1 + 1e-12), 0.25}, 0.5, 1.0, 1), svd);
    EXPECT_EQ(near.coordinates[0].near_levels, std::vector<std::size_t>{1});
}

TEST(Crossing, DeskOperatorsCrossUnderFaceSchedule) {
    for (double sigma0 : {0.04, 0.1}) {
        const auto schedule = default_schedule(sigma0);
        for (const auto& op : {make_uniform_blur(16, 5), make_block_average(16, 2), make_block_average(16, 4),
                               make_random_projection(256, 0.25, 1), make_random_projection(256, 0.125, 2)}) {
            EXPECT_TRUE(validate_crossing(schedule, svd_decompose(op)).valid) << op.rows() << " sigma0=" << sigma0;
        }
    }
}

TEST(Partition, ThreeRegimes) {
    const auto svd = svd_decompose(test::diagonal_operator({0.5, 0.05, 0.0}));
    const auto p = partition_spectrum(1.0, 0.1, svd);
    EXPECT_EQ(p.greater, std::vector<Index>{0});
    EXPECT_EQ(p.less, std::vector<Index>{1});
    EXPECT_EQ(p.zero, std::vector<Index>{2});
}

TEST(Partition, NoiselessHasNoLessSet) {
    const auto svd = svd_decompose(test::diagonal_operator({0.5, 1e-3, 0.0}));
    const auto p = partition_spectrum(0.01, 0.0, svd);
    EXPECT_TRUE(p.less.empty());
    EXPECT_EQ(p.zero, std::vector<Index>{2});
    EXPECT_EQ(p.greater, (std::vector<Index>{0, 1}));
}

TEST(Partition, LargeSigmaMakesEveryMeasuredCoordinateGreater) {
    const auto svd = svd_decompose(test::diagonal_operator({0.5, 0.05, 0.0}));
    EXPECT_TRUE(partition_spectrum(1e4, 0.1, svd).less.empty());
}

TEST(Partition, EqualityRoutesToLess) {
    const auto svd = svd_decompose(test::diagonal_operator({0.5}));
    EXPECT_EQ(partition_spectrum(0.2, 0.1, svd).less, std::vector<Index>{0});
}

TEST(Partition, SetPartitionOnRandomDraws) {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> s(6);
        for (auto& v : s) v = u(rng) < 0.2 ? 0.0 : u(rng) * 2;
        const auto svd = svd_decompose(test::diagonal_operator(s));
        const auto p = partition_spectrum(0.01 + u(rng), u(rng) * 0.3, svd);
        std::vector<int> seen(6, 0);
        for (const auto* set : {&p.zero, &p.less, &p.greater})
            for (Index j : *set) ++seen[static_cast<std::size_t>(j)];
        for (int k : seen) EXPECT_EQ(k, 1);
    }
}

TEST(Partition, CoordinatesOnlyMoveFromGreaterToLess) {
    Rng rng(4);
    const auto svd = svd_decompose(LinearOperator(test::gaussian_matrix(6, 8, rng)));
    const auto schedule = make_geometric_schedule(50, 0.01, 200, 0.1, 1, 1);
    auto prev = partition_spectrum(schedule.level(0), 0.1, svd);
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const auto cur = partition_spectrum(schedule.level(i), 0.1, svd);
        for (std::size_t j = 0; j < cur.regime.size(); ++j) {
            if (prev.regime[j] == Regime::Less) EXPECT_EQ(cur.regime[j], Regime::Less);
            if (prev.regime[j] == Regime::Zero) EXPECT_EQ(cur.regime[j], Regime::Zero);
        }
        prev = cur;
    }
}

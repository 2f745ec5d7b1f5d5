#include "support.hpp"

#include <snips/oracle.hpp>
#include <snips/score.hpp>

using namespace snips;

namespace {

DegradationSVD scalar_svd(double s) {
    return {Matrix::Identity(1, 1), Vector::Constant(1, s), Matrix::Identity(1, 1), Vector::Constant(1, s)};
}

Vector score_at(const DegradationSVD& svd, const Vector& y, const Vector& x, double sigma_i, double sigma0,
                const ScoreModel& prior) {
    const Vector y_t = svd.u.transpose() * y;
    return conditional_score({y_t, x, sigma_i, sigma0, svd, prior}, partition_spectrum(sigma_i, sigma0, svd));
}

class NanScore final : public ScoreModel {
public:
    explicit NanScore(Index n) : n_(n) {}
    Index dim() const override { return n_; }
    void score_into(const Eigen::Ref<const Vector>&, double, Eigen::Ref<Vector> out) const override {
        out.setConstant(std::nan(""));
    }

private:
    Index n_;
};

} // namespace

TEST(ConditionalScore, ZeroOperatorIsPureSynthesis) {
    Rng rng(1);
    const auto prior = test::random_gaussian_prior(4, rng);
    const auto svd = svd_decompose(make_zero(3, 4));
    const Vector x = test::gaussian_matrix(4, 1, rng).col(0);
    const Vector y = test::gaussian_matrix(3, 1, rng).col(0);
    const Vector d = score_at(svd, y, x, 0.7, 0.1, prior);
    EXPECT_TRUE(d.isApprox(svd.v.transpose() * prior.score(x, 0.7), 1e-14));
}

TEST(ConditionalScore, ScalarGreaterRegimeValue) {
    const auto prior = GaussianPrior::isotropic(1, 0.0, 1.0);
    const Vector d = score_at(scalar_svd(1.0), Vector::Constant(1, 0.5), Vector::Zero(1), 1.0, 0.1, prior);
    EXPECT_NEAR(d[0], 0.5 / 0.99, 1e-15);
    EXPECT_NEAR(d[0], 0.50505, 1e-5);
}

TEST(ConditionalScore, ScalarGaussianMatchesExactConditionalInBothRegimes) {
    const auto prior = GaussianPrior::isotropic(1, 0.0, 1.0);
    for (double sigma_i : {2.0, 0.5, 0.11, 0.09, 0.05, 0.01}) {
        for (double y : {-0.3, 0.5, 1.7}) {
            const auto exact = oracle::scalar_gaussian_conditional(0.0, 1.0, 1.0, sigma_i, 0.1, y);
            for (double x : {-1.0, 0.0, 0.4, 2.0}) {
                const double d = score_at(scalar_svd(1.0), Vector::Constant(1, y), Vector::Constant(1, x), sigma_i, 0.1,
                                          prior)[0];
                EXPECT_NEAR(d, exact.score(x), 1e-8 * std::max(1.0, std::abs(exact.score(x))))
                    << "sigma_i=" << sigma_i;
            }
        }
    }
}

TEST(ConditionalScore, VBasisDiagonalGaussianMatchesPerCoordinatePosterior) {
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        const Index n = 5, m = 4;
        const auto svd0 = svd_decompose(LinearOperator(test::gaussian_matrix(m, n, rng)));
        // Prior diagonal in the V basis so the per-coordinate factorization is exact.
        Vector c(n), mu_t(n);
        for (Index j = 0; j < n; ++j) {
            c[j] = 0.05 + u(rng);
            mu_t[j] = u(rng);
        }
        const GaussianPrior prior(svd0.v * mu_t, svd0.v * c.asDiagonal() * svd0.v.transpose());
        const double sigma0 = 0.1;
        const double sigma_i = 0.02 + 0.3 * u(rng);
        const Vector x_t = test::gaussian_matrix(n, 1, rng).col(0);
        const Vector y = test::gaussian_matrix(m, 1, rng).col(0);
        const Vector y_t = svd0.u.transpose() * y;
        const Vector d = score_at(svd0, y, svd0.v * x_t, sigma_i, sigma0, prior);
        for (Index j = 0; j < n; ++j) {
            const double s = svd0.extended_singulars[j];
            const double yj = j < m ? y_t[j] : 0.0;
            const double expected = oracle::scalar_gaussian_conditional(mu_t[j], c[j], s, sigma_i, sigma0, yj).score(x_t[j]);
            EXPECT_NEAR(d[j], expected, 1e-6 * std::max(1.0, std::abs(expected))) << "coordinate " << j;
        }
    }
}

TEST(ConditionalScore, UnifiedEvaluationEqualsPerCoordinate) {
    Rng rng(3);
    for (const auto& [m, n] : std::vector<std::pair<Index, Index>>{{4, 6}, {6, 4}, {5, 5}, {1, 3}}) {
        const auto prior = test::random_gaussian_prior(n, rng);
        Matrix h = test::gaussian_matrix(m, n, rng);
        const auto svd = svd_decompose(LinearOperator(h));
        const Vector x = test::gaussian_matrix(n, 1, rng).col(0);
        const Vector y_t = svd.u.transpose() * test::gaussian_matrix(m, 1, rng).col(0);
        for (double sigma_i : {5.0, 0.3, 0.05, 0.001}) {
            const auto part = partition_spectrum(sigma_i, 0.1, svd);
            const ConditionalScoreInputs inp{y_t, x, sigma_i, 0.1, svd, prior};
            const Vector a = conditional_score(inp, part);
            const Vector b = conditional_score_unified(inp, part);
            EXPECT_LE((a - b).norm(), 1e-12 * (1 + a.norm())) << m << "x" << n << " sigma_i=" << sigma_i;
        }
    }
}

TEST(ConditionalScore, ZeroCoordinatesIgnoreMeasurement) {
    Rng rng(4);
    const auto prior = test::random_gaussian_prior(5, rng);
    const auto svd = svd_decompose(LinearOperator(test::gaussian_matrix(3, 5, rng)));
    const Vector x = test::gaussian_matrix(5, 1, rng).col(0);
    const Vector y1 = test::gaussian_matrix(3, 1, rng).col(0);
    const Vector y2 = y1 + test::gaussian_matrix(3, 1, rng).col(0);
    const auto part = partition_spectrum(0.2, 0.1, svd);
    ASSERT_EQ(part.zero.size(), 2u);
    const Vector d1 = score_at(svd, y1, x, 0.2, 0.1, prior);
    const Vector d2 = score_at(svd, y2, x, 0.2, 0.1, prior);
    for (Index j : part.zero) EXPECT_EQ(d1[j], d2[j]);
}

TEST(ConditionalScore, GreaterCoordinatesIgnorePrior) {
    Rng rng(5);
    const auto p1 = test::random_gaussian_prior(4, rng);
    const auto p2 = test::random_gaussian_prior(4, rng);
    const auto svd = svd_decompose(LinearOperator(test::gaussian_matrix(4, 4, rng)));
    const Vector x = test::gaussian_matrix(4, 1, rng).col(0);
    const Vector y = test::gaussian_matrix(4, 1, rng).col(0);
    const double sigma_i = 0.1 / svd.singulars[1] * 1.0001; // at least two greater, rest less
    const auto part = partition_spectrum(sigma_i, 0.1, svd);
    ASSERT_GE(part.greater.size(), 2u);
    ASSERT_GE(part.less.size(), 1u);
    const Vector d1 = score_at(svd, y, x, sigma_i, 0.1, p1);
    const Vector d2 = score_at(svd, y, x, sigma_i, 0.1, p2);
    for (Index j : part.greater) EXPECT_EQ(d1[j], d2[j]);
    for (Index j : part.less) EXPECT_NE(d1[j], d2[j]);
}

TEST(ConditionalScore, ExactBoundaryIsCappedAndFinite) {
    const auto prior = GaussianPrior::isotropic(1, 0.0, 1.0);
    const auto svd = scalar_svd(0.5);
    const auto part = partition_spectrum(0.2, 0.1, svd);
    ASSERT_EQ(part.regime[0], Regime::Less);
    ScoreDiagnostics diag;
    const Vector d = conditional_score({Vector::Constant(1, 0.3), Vector::Zero(1), 0.2, 0.1, svd, prior}, part, &diag);
    EXPECT_TRUE(d.allFinite());
    EXPECT_EQ(diag.capped_weights, 1u);
}

TEST(ConditionalScore, NanFromPriorIsNumericError) {
    const NanScore prior(2);
    const auto svd = svd_decompose(make_zero(2, 2));
    EXPECT_THROW(score_at(svd, Vector::Zero(2), Vector::Zero(2), 0.5, 0.1, prior), NumericError);
}

TEST(StepSizes, ZeroSingularUsesSigmaSquared) {
    const auto svd = svd_decompose(make_zero(1, 1));
    EXPECT_DOUBLE_EQ(step_sizes(0.5, 0.1, svd, partition_spectrum(0.5, 0.1, svd)).values[0], 0.25);
}

TEST(StepSizes, GreaterRegimeValue) {
    const auto svd = scalar_svd(1.0);
    EXPECT_NEAR(step_sizes(0.5, 0.1, svd, partition_spectrum(0.5, 0.1, svd)).values[0], 0.24, 1e-15);
}

TEST(StepSizes, NegativeInverseFiniteDifferenceHessian) {
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-4;
    for (int regime = 0; regime < 3; ++regime) {
        for (int t = 0; t < 20; ++t) {
            const double sigma_i = 0.01 * std::pow(100.0, u(rng));
            const double sigma0 = 0.02 + 0.1 * u(rng);
            const double s = regime == 0 ? 0.0 : sigma0 / sigma_i * (regime == 1 ? 1.5 + 5 * u(rng) : 0.1 + 0.7 * u(rng));
            const auto svd = scalar_svd(s);
            const double alpha = step_sizes(sigma_i, sigma0, svd, partition_spectrum(sigma_i, sigma0, svd)).values[0];
            // Prior variance negligible next to σ_i²: the denoiser is locally constant.
            const auto cond = oracle::scalar_gaussian_conditional(0.5, 1e-6 * sigma_i * sigma_i, s, sigma_i, sigma0, u(rng));
            const double x = cond.mean + 0.3 * std::sqrt(cond.variance);
            const double hess = (cond.log_density(x + h) - 2 * cond.log_density(x) + cond.log_density(x - h)) / (h * h);
            EXPECT_NEAR(alpha, -1.0 / hess, 1e-4 * alpha) << "regime " << regime;
        }
    }
}

TEST(StepSizes, ContinuousAcrossBoundary) {
    const double s = 0.5, sigma0 = 0.1, boundary = sigma0 / s;
    const auto svd = scalar_svd(s);
    for (double eps : {1e-6, 1e-9, 1e-12}) {
        const double above = boundary * (1 + eps), below = boundary * (1 - eps);
        const double a_above = step_sizes(above, sigma0, svd, partition_spectrum(above, sigma0, svd)).values[0];
        const double a_below = step_sizes(below, sigma0, svd, partition_spectrum(below, sigma0, svd)).values[0];
        EXPECT_LE(std::abs(a_above - a_below), 1e-8 + 5 * eps * boundary * boundary);
        EXPECT_LE(a_above, 3 * eps * boundary * boundary);
    }
}

TEST(StepSizes, ExactBoundaryIsFlooredAndReported) {
    const auto svd = scalar_svd(0.5);
    const auto a = step_sizes(0.2, 0.1, svd, partition_spectrum(0.2, 0.1, svd));
    EXPECT_EQ(a.floor_hits, 1u);
    EXPECT_DOUBLE_EQ(a.values[0], 1e-12 * 0.04);
}

#include "support.hpp"

#include <snips/diagnostics.hpp>
#include <snips/oracle.hpp>

using namespace snips;

TEST(GaussianPosterior, EqualPrecisionFusion) {
    const auto prior = GaussianPrior::isotropic(3, 0.0, 1.0);
    const Vector y = Eigen::Vector3d(0.4, -1.0, 2.0);
    const auto post = oracle::exact_gaussian_posterior(prior, make_identity(3), 1.0, y);
    EXPECT_TRUE(post.mean.isApprox(y / 2, 1e-14));
    EXPECT_TRUE(post.covariance.isApprox(Matrix::Identity(3, 3) / 2, 1e-14));
}

TEST(GaussianPosterior, ZeroOperatorReturnsPrior) {
    Rng rng(1);
    const auto prior = test::random_gaussian_prior(4, rng);
    const auto post = oracle::exact_gaussian_posterior(prior, make_zero(2, 4), 0.1, Eigen::Vector2d(3, -3));
    EXPECT_TRUE(post.mean.isApprox(prior.mean(), 1e-10));
    EXPECT_TRUE(post.covariance.isApprox(prior.covariance(), 1e-10));
}

TEST(GaussianPosterior, PrecisionAndSchurFormsAgree) {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto prior = test::random_gaussian_prior(6, rng);
        const LinearOperator op(test::gaussian_matrix(4, 6, rng));
        const Vector y = test::gaussian_matrix(4, 1, rng).col(0);
        const double sigma0 = 0.05 + 0.1 * t;
        const auto a = oracle::exact_gaussian_posterior(prior, op, sigma0, y);
        const auto b = oracle::exact_gaussian_posterior_schur(prior, op, sigma0, y);
        EXPECT_LE((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LE((a.covariance - b.covariance).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(GaussianPosterior, NoiselessNeedsFullColumnRank) {
    const auto prior = GaussianPrior::isotropic(2, 0, 1);
    const auto post = oracle::exact_gaussian_posterior(prior, make_identity(2), 0.0, Eigen::Vector2d(0.3, 0.6));
    EXPECT_TRUE(post.mean.isApprox(Eigen::Vector2d(0.3, 0.6)));
    EXPECT_EQ(post.covariance, Matrix::Zero(2, 2));
    EXPECT_THROW(oracle::exact_gaussian_posterior(prior, make_zero(2, 2), 0.0, Eigen::Vector2d(0, 0)), NumericError);
}

namespace {

struct CarveStats {
    double var_combined;
    double var_free;
};

/// Var(s·n - z_T) on a coupled coordinate and Var(n) on a zero-singular coordinate at one level.
CarveStats carve_variance(double s, double sigma0, std::vector<double> levels, std::size_t level, int draws) {
    Matrix h(1, 2);
    h << s, 0.0;
    const auto svd = svd_decompose(LinearOperator(h));
    const NoiseSchedule schedule(std::move(levels), sigma0, 1.0, 1);
    Rng rng(42);
    std::normal_distribution<double> normal;
    std::vector<double> comb, free;
    for (int d = 0; d < draws; ++d) {
        const Vector z = Vector::Constant(1, sigma0 * normal(rng));
        const auto carved = oracle::carve_noise_sequence(z, schedule, svd, rng);
        comb.push_back(s * carved.levels[level][0] - carved.z_t[0]);
        free.push_back(carved.levels[level][1]);
    }
    const double a = test::sample_std(comb), b = test::sample_std(free);
    return {a * a, b * b};
}

} // namespace

TEST(Carve, LessRegimeVariance) {
    const auto st = carve_variance(1.0, 0.1, {1.0, 0.05}, 1, 100000);
    EXPECT_NEAR(st.var_combined / 0.0075, 1.0, 0.02);
    EXPECT_NEAR(st.var_free / 0.0025, 1.0, 0.02);
}

TEST(Carve, GreaterRegimeVariance) {
    const auto st = carve_variance(1.0, 0.1, {1.0, 0.05}, 0, 100000);
    EXPECT_NEAR(st.var_combined / 0.99, 1.0, 0.02);
    EXPECT_NEAR(st.var_free / 1.0, 1.0, 0.02);
}

TEST(Carve, ZeroSingularCoordinateIndependentOfMeasurementNoise) {
    Matrix h(1, 2);
    h << 1.0, 0.0;
    const auto svd = svd_decompose(LinearOperator(h));
    const NoiseSchedule schedule({1.0, 0.05}, 0.1, 1.0, 1);
    Rng rng(3);
    Vector zs(20000), ns(20000);
    for (Index d = 0; d < zs.size(); ++d) {
        const Vector z = Vector::Constant(1, 0.1 * standard_normal(1, rng)[0]);
        const auto carved = oracle::carve_noise_sequence(z, schedule, svd, rng);
        const Index free = svd.extended_singulars[0] == 0.0 ? 0 : 1;
        zs[d] = carved.z_t[0];
        ns[d] = carved.levels[1][free];
    }
    EXPECT_LT(std::abs(pearson_correlation(zs, ns)), 0.03);
}

TEST(Carve, InvalidCrossingRefused) {
    const auto svd = svd_decompose(make_identity(1));
    Rng rng(4);
    EXPECT_THROW(oracle::carve_noise_sequence(Vector::Zero(1), NoiseSchedule({1.0, 0.9}, 0.5, 1.0, 1), svd, rng),
                 ArgumentError);
}

TEST(Carve, CombinedNoiseIsGaussian) {
    Matrix h(1, 1);
    h << 0.8;
    const auto svd = svd_decompose(LinearOperator(h));
    const NoiseSchedule schedule({2.0, 0.5, 0.1, 0.02}, 0.1, 1.0, 1);
    Rng rng(5);
    std::normal_distribution<double> normal;
    int passes = 0;
    for (int batch = 0; batch < 100; ++batch) {
        Vector r(10000);
        for (Index d = 0; d < r.size(); ++d) {
            const auto carved = oracle::carve_noise_sequence(Vector::Constant(1, 0.1 * normal(rng)), schedule, svd, rng);
            r[d] = 0.8 * carved.levels[2][0] - carved.z_t[0];
        }
        passes += dagostino_k2(r).pvalue > 0.05;
    }
    EXPECT_GE(passes, 90);
}

TEST(Carve, ResidualIndependentOfIterateOnlyUnderCarving) {
    // x ~ N(0.5, C), y = s x + z, x̃ = x + n. With carved noise y - s x̃ is independent of x̃;
    // with n drawn independently of z it is not.
    const double s = 1.0, sigma0 = 0.1, sigma_i = 0.08, c = 0.01;
    const auto svd = svd_decompose(make_identity(1));
    const NoiseSchedule schedule({1.0, sigma_i}, sigma0, 1.0, 1);
    Rng rng(6);
    std::normal_distribution<double> normal;
    const Index draws = 100000;
    Vector carved_r(draws), carved_x(draws), indep_r(draws), indep_x(draws);
    for (Index d = 0; d < draws; ++d) {
        const double x = 0.5 + std::sqrt(c) * normal(rng);
        const double z = sigma0 * normal(rng);
        const auto carved = oracle::carve_noise_sequence(Vector::Constant(1, z), schedule, svd, rng);
        const double n_carved = svd.v(0, 0) * carved.levels[1][0];
        carved_x[d] = x + n_carved;
        carved_r[d] = (s * x + z) - s * carved_x[d];
        const double n_indep = sigma_i * normal(rng);
        indep_x[d] = x + n_indep;
        indep_r[d] = (s * x + z) - s * indep_x[d];
    }
    EXPECT_LT(std::abs(pearson_correlation(carved_r, carved_x)), 0.02);
    EXPECT_GT(std::abs(pearson_correlation(indep_r, indep_x)), 0.2);
}

TEST(BruteForce, SingleGaussianMatchesClosedForm) {
    const GmmPrior gmm({1.0}, {GaussianPrior::isotropic(1, 0.3, 0.04)});
    for (double sigma_i : {0.5, 0.05}) {
        const oracle::BruteForceConditionalScore bf(gmm, Vector::Constant(1, 1.0), sigma_i, 0.1, Vector::Constant(1, 0.45));
        const auto exact = oracle::scalar_gaussian_conditional(0.3, 0.04, 1.0, sigma_i, 0.1, 0.45);
        for (double x : {0.0, 0.3, 0.6}) {
            const double got = bf.score(Vector::Constant(1, x))[0];
            EXPECT_NEAR(got, exact.score(x), 1e-4 * std::max(1.0, std::abs(exact.score(x)))) << sigma_i << " " << x;
        }
    }
}

TEST(BruteForce, SymmetricMixtureAtOriginIsZero) {
    const GmmPrior gmm({0.5, 0.5}, {GaussianPrior::isotropic(1, -0.5, 0.02), GaussianPrior::isotropic(1, 0.5, 0.02)});
    const oracle::BruteForceConditionalScore bf(gmm, Vector::Constant(1, 1.0), 0.3, 0.1, Vector::Zero(1));
    EXPECT_NEAR(bf.score(Vector::Zero(1))[0], 0.0, 1e-8);
}

TEST(BruteForce, GreaterRegimeIsMeasurementOnly) {
    const GmmPrior gmm({0.4, 0.6}, {GaussianPrior::isotropic(1, 0.2, 0.01), GaussianPrior::isotropic(1, 0.8, 0.02)});
    const double s = 1.0, sigma_i = 1.0, sigma0 = 0.1, y = 0.55;
    const oracle::BruteForceConditionalScore bf(gmm, Vector::Constant(1, s), sigma_i, sigma0, Vector::Constant(1, y),
                                               {0.005, 6.0, 1e-5});
    for (double x : {-0.5, 0.4, 1.5}) {
        const double measurement_only = s * (y - s * x) / (sigma_i * sigma_i * s * s - sigma0 * sigma0);
        EXPECT_NEAR(bf.score(Vector::Constant(1, x))[0], measurement_only, 0.05 * std::abs(measurement_only));
    }
}

TEST(BruteForce, TwoDimensionalFactorizesForProductPrior) {
    const GmmPrior gmm({1.0}, {GaussianPrior(Eigen::Vector2d(0.3, 0.6), Eigen::Vector2d(0.03, 0.05).asDiagonal())});
    const Vector s = Eigen::Vector2d(1.0, 0.0);
    const oracle::BruteForceConditionalScore bf(gmm, s, 0.2, 0.1, Eigen::Vector2d(0.4, 0.0));
    const Vector x = Eigen::Vector2d(0.35, 0.5);
    const Vector g = bf.score(x);
    const auto c0 = oracle::scalar_gaussian_conditional(0.3, 0.03, 1.0, 0.2, 0.1, 0.4);
    const auto c1 = oracle::scalar_gaussian_conditional(0.6, 0.05, 0.0, 0.2, 0.1, 0.0);
    EXPECT_NEAR(g[0], c0.score(0.35), 1e-4 * std::abs(c0.score(0.35)) + 1e-6);
    EXPECT_NEAR(g[1], c1.score(0.5), 1e-4 * std::abs(c1.score(0.5)) + 1e-6);
}

TEST(BruteForce, CoarseGridRefused) {
    const GmmPrior gmm({1.0}, {GaussianPrior::isotropic(1, 0.0, 1.0)});
    EXPECT_THROW(oracle::BruteForceConditionalScore(gmm, Vector::Ones(1), 0.1, 0.1, Vector::Zero(1), {0.05, 6.0, 1e-5}),
                 ArgumentError);
}

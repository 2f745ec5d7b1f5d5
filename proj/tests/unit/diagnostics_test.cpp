#include "support.hpp"

#include <snips/diagnostics.hpp>

using namespace snips;

namespace {

Vector sawtooth_series() {
    Vector v(50);
    for (Index k = 0; k < 50; ++k) v[k] = static_cast<double>((k * 37) % 101) / 101.0 + 0.01 * static_cast<double>(k);
    return v;
}

Vector exponential_series() {
    Vector v(30);
    for (Index k = 0; k < 30; ++k) v[k] = std::exp(0.05 * static_cast<double>(k));
    return v;
}

} // namespace

// Reference values from scipy.stats.normaltest / skewtest / kurtosistest.
TEST(DAgostino, MatchesReferenceImplementation) {
    const auto a = dagostino_k2(sawtooth_series());
    EXPECT_NEAR(a.k2, 1.5896620860528996, 1e-10);
    EXPECT_NEAR(a.pvalue, 0.4516575391672424, 1e-10);
    EXPECT_NEAR(a.skew_z, -0.13708469588505082, 1e-10);
    EXPECT_NEAR(a.kurtosis_z, -1.2533434773464944, 1e-10);

    const auto b = dagostino_k2(exponential_series());
    EXPECT_NEAR(b.k2, 3.398649387310333, 1e-10);
    EXPECT_NEAR(b.pvalue, 0.18280693306037696, 1e-10);
    EXPECT_NEAR(b.skew_z, 1.2926815646020433, 1e-10);
    EXPECT_NEAR(b.kurtosis_z, -1.3143910224314326, 1e-10);
}

TEST(DAgostino, RejectsShortOrConstantInput) {
    EXPECT_THROW(dagostino_k2(Vector::Zero(19)), ArgumentError);
    EXPECT_THROW(dagostino_k2(Vector::Constant(40, 2.0)), NumericError);
}

TEST(Faithfulness, WhiteGaussianResidualPasses) {
    Rng rng(11);
    const double sigma0 = 0.1;
    const Vector r = sigma0 * standard_normal(4096, rng);
    const auto rep = faithfulness_of_residual(r, sigma0);
    EXPECT_TRUE(rep.pass_std);
    EXPECT_TRUE(rep.pass_normality);
    EXPECT_TRUE(rep.pass_rho);
    EXPECT_TRUE(rep.passed());
    EXPECT_NEAR(rep.residual_std, sigma0, 0.005);
}

TEST(Faithfulness, ZeroResidualIsDegenerate) {
    const auto noisy = faithfulness_of_residual(Vector::Zero(100), 0.1);
    EXPECT_TRUE(noisy.degenerate);
    EXPECT_FALSE(noisy.pass_std);
    EXPECT_FALSE(noisy.passed());
    const auto noiseless = faithfulness_of_residual(Vector::Zero(100), 0.0);
    EXPECT_TRUE(noiseless.pass_std);
}

// One spike per hundred entries has roughly the right spread but is far from Gaussian.
TEST(Faithfulness, SpikyResidualPassesStdButFailsNormality) {
    Rng rng(12);
    Vector r = Vector::Zero(2000);
    for (Index k = 0; k < r.size(); k += 100) r[k] = 1.0;
    r += 1e-6 * standard_normal(r.size(), rng);
    const auto rep = faithfulness_of_residual(r, 0.1);
    EXPECT_TRUE(rep.pass_std);
    EXPECT_FALSE(rep.pass_normality);
    EXPECT_FALSE(rep.passed());
}

TEST(Faithfulness, CorrelatedResidualFailsRho) {
    Rng rng(13);
    const Vector w = standard_normal(4001, rng);
    const Vector r = 0.1 / std::sqrt(2.0) * (w.head(4000) + w.tail(4000));
    const auto rep = faithfulness_of_residual(r, 0.1);
    EXPECT_NEAR(rep.neighbor_rho, 0.5, 0.05);
    EXPECT_FALSE(rep.pass_rho);
}

TEST(Faithfulness, SmallMeasurementSkipsNormality) {
    const auto rep = faithfulness_of_residual(Eigen::Vector3d(0.1, -0.1, 0.05), 0.1);
    EXPECT_FALSE(rep.normality_applicable);
    EXPECT_FALSE(rep.pass_normality);
    EXPECT_THROW(faithfulness_of_residual(Vector::Zero(1), 0.1), ArgumentError);
}

TEST(Faithfulness, OperatorFormUsesResidual) {
    const Vector y = Eigen::Vector2d(1.0, 2.0);
    EXPECT_THROW(faithfulness(make_identity(3), Vector::Zero(3), y, 0.1), ArgumentError);
    const auto rep = faithfulness(make_identity(2), y, y, 0.0);
    EXPECT_TRUE(rep.degenerate);
}

TEST(Psnr, KnownValues) {
    const Vector ref = Vector::Zero(100);
    EXPECT_NEAR(psnr(Vector::Constant(100, 0.1), ref), 20.0, 1e-12);
    EXPECT_NEAR(psnr(Vector::Constant(100, std::sqrt(1e-3)), ref), 30.0, 1e-12);
    EXPECT_TRUE(std::isinf(psnr(ref, ref)));
    const Vector a = Eigen::Vector3d(0.1, 0.5, 0.9);
    const Vector b = Eigen::Vector3d(0.2, 0.4, 0.7);
    EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
    EXPECT_NEAR(psnr((a.array() + 0.3).matrix(), (b.array() + 0.3).matrix()), psnr(a, b), 1e-12);
    EXPECT_THROW(psnr(a, Vector::Zero(2)), ArgumentError);
}

TEST(PsnrGap, IdenticalSamplesHaveNoGap) {
    const Vector ref = Eigen::Vector3d(0.2, 0.4, 0.6);
    const Vector s = Eigen::Vector3d(0.25, 0.35, 0.6);
    EXPECT_NEAR(sample_vs_mean_gap({s, s, s}, ref).gap_db, 0.0, 1e-12);
    EXPECT_EQ(sample_vs_mean_gap({ref, ref}, ref).gap_db, 0.0);
}

TEST(PsnrGap, TwoIndependentErrorsGiveThreeDecibels) {
    // Two samples ref ± e with orthogonal e of equal norm: the mean error halves the MSE.
    const Vector ref = Vector::Constant(4, 0.5);
    const Vector e1 = (Vector(4) << 0.1, -0.1, 0.1, -0.1).finished();
    const Vector e2 = (Vector(4) << 0.1, 0.1, -0.1, -0.1).finished();
    const auto g = sample_vs_mean_gap({ref + e1, ref + e2}, ref);
    EXPECT_NEAR(g.gap_db, 10.0 * std::log10(2.0), 1e-12);
}

TEST(PsnrGap, GapIsNonNegative) {
    Rng rng(14);
    const Vector ref = Vector::Constant(64, 0.5);
    for (int t = 0; t < 20; ++t) {
        std::vector<Vector> samples;
        for (int k = 0; k < 4; ++k) samples.push_back(ref + 0.05 * standard_normal(64, rng));
        EXPECT_GE(sample_vs_mean_gap(samples, ref).gap_db, -1e-12);
    }
    EXPECT_THROW(sample_vs_mean_gap({ref}, ref), ArgumentError);
}

TEST(Reports, FieldNamesAreStable) {
    EXPECT_EQ(csv_header(), "residual_std,dagostino_pvalue,neighbor_rho,pass_std,pass_normality,pass_rho");
    FaithfulnessReport r;
    r.residual_std = 0.1;
    r.pass_rho = true;
    const auto j = to_json(r);
    for (const auto& f : faithfulness_fields()) EXPECT_TRUE(j.contains(f)) << f;
    EXPECT_EQ(to_csv_row(r), "0.1,0,0,false,false,true");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

#ifndef SNIPS_REPRODUCTION_HPP
#define SNIPS_REPRODUCTION_HPP

// Desk-scale reproduction suite: statistical checks binding the sampler to exact
// oracles. Every tolerance is fixed here; run_suite() is deterministic given a seed.

#include "diagnostics.hpp"
#include "harness.hpp"
#include "oracle.hpp"
#include "sampler.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace snips::reproduction {

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Haar-distributed orthogonal matrix.
inline Matrix random_orthogonal(Index n, Rng& rng) {
    Matrix g(n, n);
    std::normal_distribution<double> normal;
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r) g(r, c) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    for (Index c = 0; c < n; ++c)
        if (qr.matrixQR()(c, c) < 0.0) q.col(c) *= -1.0;
    return q;
}

struct GaussianProblem {
    std::string label;
    LinearOperator op;
    GaussianPrior prior;
    double sigma0;
    Vector x_true;
    Vector y;
};

/// Random H = U Σ V^T with one exactly-zero singular value and the rest log-uniform in
/// [0.05, 2], a random SPD prior on pixel scale, and y drawn from the model.
inline GaussianProblem make_random_gaussian_problem(Index n, Index m, double sigma0, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    const Index k = std::min(m, n);
    Vector s(k);
    for (Index j = 0; j < k; ++j) s[j] = 0.05 * std::pow(40.0, unit(rng));
    if (k >= 3) s[k - 1] = 0.0;
    std::sort(s.data(), s.data() + k, std::greater<>());
    Matrix sigma = Matrix::Zero(m, n);
    for (Index j = 0; j < k; ++j) sigma(j, j) = s[j];
    const Matrix h = random_orthogonal(m, rng) * sigma * random_orthogonal(n, rng).transpose();

    Matrix a(n, n);
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r) a(r, c) = normal(rng);
    Matrix cov = a * a.transpose() * (0.05 / static_cast<double>(n)) + 0.01 * Matrix::Identity(n, n);
    cov = 0.5 * (cov + cov.transpose());
    Vector mean(n);
    for (Index j = 0; j < n; ++j) mean[j] = 0.3 + 0.4 * unit(rng);
    GaussianPrior prior(mean, cov);
    Vector x = prior.sample(rng);
    LinearOperator op(h);
    Vector y = op.apply(x) + sigma0 * standard_normal(m, rng);
    std::ostringstream label;
    label << "N=" << n << " M=" << m << " sigma0=" << sigma0;
    return {label.str(), std::move(op), std::move(prior), sigma0, std::move(x), std::move(y)};
}

/// Empirical covariance of column samples.
inline Matrix sample_covariance(const std::vector<Vector>& xs, const Vector& mean) {
    Matrix c = Matrix::Zero(mean.size(), mean.size());
    for (const auto& x : xs) {
        const Vector d = x - mean;
        c.noalias() += d * d.transpose();
    }
    return c / static_cast<double>(xs.size() - 1);
}

// --- 1. Gaussian posterior equivalence -------------------------------------------------

struct PosteriorMatch {
    double max_abs_z = 0.0;   // |empirical mean - exact mean| / standard error, worst coordinate
    double cov_rel_error = 0.0; // ||C_emp - C_exact||_F / ||C_exact||_F
    std::size_t succeeded = 0;
};

inline PosteriorMatch compare_with_posterior(const std::vector<Vector>& samples, const oracle::GaussianPosterior& post) {
    PosteriorMatch m;
    m.succeeded = samples.size();
    Vector mean = Vector::Zero(post.mean.size());
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    const Matrix cov = sample_covariance(samples, mean);
    for (Index j = 0; j < mean.size(); ++j) {
        const double se = std::sqrt(cov(j, j) / static_cast<double>(samples.size()));
        m.max_abs_z = std::max(m.max_abs_z, std::abs(mean[j] - post.mean[j]) / se);
    }
    m.cov_rel_error = (cov - post.covariance).norm() / post.covariance.norm();
    return m;
}

/// Hyperparameters used by the exact-posterior checks: the default ladder with τ = 20.
inline NoiseSchedule posterior_check_schedule(double sigma0) {
    return make_geometric_schedule(90.0, 0.01, 500, sigma0, 3.3e-2, 20);
}

inline harness::Outcome gaussian_posterior_equivalence(std::uint64_t seed) {
    constexpr std::size_t kChains = 2000;
    constexpr double kMaxZ = 3.0;
    constexpr double kMaxCovRel = 0.15;
    const std::array<std::tuple<Index, Index, double>, 5> shapes{
        {{8, 8, 0.05}, {8, 6, 0.1}, {6, 4, 0.05}, {8, 5, 0.1}, {5, 5, 0.1}}};

    Rng rng(seed);
    harness::Outcome out;
    out.threshold = "per problem: max|z| <= 3 and cov Frobenius-rel <= 0.15 (2000 chains)";
    out.pass = true;
    std::ostringstream detail;
    double worst_cov = 0.0;
    for (const auto& [n, m, sigma0] : shapes) {
        const GaussianProblem p = make_random_gaussian_problem(n, m, sigma0, rng);
        const DegradationSVD svd = svd_decompose(p.op);
        const auto post = oracle::exact_gaussian_posterior(p.prior, p.op, sigma0, p.y);
        const SamplerConfig cfg{posterior_check_schedule(sigma0), rng(), TracePolicy::None, std::nullopt};
        const ManyResult many = snips_sample_many(svd, p.y, p.prior, cfg, kChains, default_workers());
        if (many.succeeded != kChains) throw NumericError("chains diverged in " + p.label);
        const PosteriorMatch match = compare_with_posterior(many.samples(), post);
        const auto part_first = partition_spectrum(90.0, sigma0, svd);
        const auto part_last = partition_spectrum(0.01, sigma0, svd);
        const bool ok = match.max_abs_z <= kMaxZ && match.cov_rel_error <= kMaxCovRel;
        out.pass = out.pass && ok;
        worst_cov = std::max(worst_cov, match.cov_rel_error);
        detail << "[" << p.label << " zero=" << part_first.zero.size() << " greater@1=" << part_first.greater.size()
               << " less@L=" << part_last.less.size() << ": max|z|=" << std::setprecision(3) << match.max_abs_z
               << " covrel=" << match.cov_rel_error << (ok ? "" : " FAIL") << "] ";
    }
    out.statistic = worst_cov;
    out.detail = detail.str();
    return out;
}

// --- 2. Carved-noise variance law -----------------------------------------------------

struct VarianceLawCheck {
    double s = 0.0;
    double sigma0 = 0.0;
    double max_rel_error = 0.0;
    std::size_t levels_checked = 0;
};

/// Monte-Carlo of Var(s·n_i - z_T) over `draws` carvings against the two-branch law
/// s²σ_i² - σ_0² (σ_i s > σ_0) / σ_0² - s²σ_i² (otherwise); also Var(n_i) = σ_i² on a
/// zero singular direction.
inline VarianceLawCheck check_variance_law(double s, double sigma0, const std::vector<double>& levels,
                                           std::size_t draws, Rng& rng) {
    Matrix h(1, 2);
    h << s, 0.0;
    const DegradationSVD svd = svd_decompose(LinearOperator(h));
    const NoiseSchedule schedule(levels, sigma0, 1.0, 1);
    const Index coupled = svd.extended_singulars[0] > 0.0 ? 0 : 1;
    const Index free = 1 - coupled;
    const std::size_t count = levels.size();
    std::vector<double> sum_sq(count, 0.0);
    std::vector<double> sum(count, 0.0);
    std::vector<double> free_sq(count, 0.0);
    std::normal_distribution<double> normal;
    Vector z(1);
    for (std::size_t d = 0; d < draws; ++d) {
        z[0] = sigma0 * normal(rng);
        const auto carved = oracle::carve_noise_sequence(z, schedule, svd, rng);
        for (std::size_t i = 0; i < count; ++i) {
            const double r = s * carved.levels[i][coupled] - carved.z_t[0];
            sum[i] += r;
            sum_sq[i] += r * r;
            free_sq[i] += carved.levels[i][free] * carved.levels[i][free];
        }
    }
    VarianceLawCheck c{s, sigma0, 0.0, 0};
    const double nd = static_cast<double>(draws);
    for (std::size_t i = 0; i < count; ++i) {
        const double sl = s * levels[i];
        if (sl == sigma0) continue;
        const double expected = sl > sigma0 ? sl * sl - sigma0 * sigma0 : sigma0 * sigma0 - sl * sl;
        const double mean = sum[i] / nd;
        const double var = (sum_sq[i] - nd * mean * mean) / (nd - 1.0);
        c.max_rel_error = std::max(c.max_rel_error, std::abs(var / expected - 1.0));
        c.max_rel_error = std::max(c.max_rel_error, std::abs(free_sq[i] / nd / (levels[i] * levels[i]) - 1.0));
        ++c.levels_checked;
    }
    return c;
}

inline harness::Outcome variance_law(std::uint64_t seed) {
    constexpr std::size_t kDraws = 100000;
    constexpr double kTol = 0.02;
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<VarianceLawCheck> checks;
    checks.push_back(check_variance_law(1.0, 0.1, {1.0, 0.3, 0.05, 0.01}, kDraws, rng));
    for (int t = 0; t < 5; ++t) {
        const double s = 0.2 + 1.8 * unit(rng);
        const double sigma0 = 0.02 + 0.18 * unit(rng);
        const double anchor = sigma0 / s;
        std::vector<double> levels;
        const double top = anchor * (3.0 + 7.0 * unit(rng));
        const double bottom = anchor * (0.02 + 0.3 * unit(rng));
        const std::size_t count = 6;
        for (std::size_t i = 0; i < count; ++i)
            levels.push_back(top * std::pow(bottom / top, static_cast<double>(i) / static_cast<double>(count - 1)));
        checks.push_back(check_variance_law(s, sigma0, levels, kDraws, rng));
    }
    harness::Outcome out;
    out.threshold = "max relative variance error <= 0.02 (1e5 draws)";
    std::ostringstream detail;
    for (const auto& c : checks) {
        out.statistic = std::max(out.statistic, c.max_rel_error);
        detail << "[s=" << std::setprecision(3) << c.s << " sigma0=" << c.sigma0 << " levels=" << c.levels_checked
               << " err=" << c.max_rel_error << "] ";
    }
    out.pass = out.statistic <= kTol;
    out.detail = detail.str();
    return out;
}

// --- 3. Conditional score vs quadrature ------------------------------------------------

inline double relative_error(const std::vector<double>& got, const std::vector<double>& want) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        num += (got[k] - want[k]) * (got[k] - want[k]);
        den += want[k] * want[k];
    }
    return std::sqrt(num / den);
}

/// Library conditional score for the scalar problem H = [s], with U = V = [1] so the
/// V-domain coincides with signal space.
inline double library_scalar_score(const ScoreModel& prior, double s, double sigma_i, double sigma0, double y_t,
                                   double x_tilde) {
    DegradationSVD svd{Matrix::Identity(1, 1), Vector::Constant(1, s), Matrix::Identity(1, 1), Vector::Constant(1, s)};
    const Vector y = Vector::Constant(1, y_t);
    const Vector x = Vector::Constant(1, x_tilde);
    const auto part = partition_spectrum(sigma_i, sigma0, svd);
    return conditional_score({y, x, sigma_i, sigma0, svd, prior}, part)[0];
}

struct ScoreCase {
    std::string label;
    double s;
    double sigma_i;
    double sigma0;
    double y_t;
};

inline harness::Outcome score_vs_bruteforce(std::uint64_t seed) {
    (void)seed;
    const GmmPrior gmm({0.5, 0.5}, {GaussianPrior::isotropic(1, 0.2, 0.01), GaussianPrior::isotropic(1, 0.8, 0.01)});
    const GmmPrior skewed({0.3, 0.7},
                          {GaussianPrior::isotropic(1, 0.25, 0.004), GaussianPrior::isotropic(1, 0.7, 0.02)});
    const std::vector<ScoreCase> greater{{"greater s=1", 1.0, 0.5, 0.1, 0.55},
                                         {"greater s=0.5", 0.5, 1.0, 0.1, 0.3}};
    const std::vector<ScoreCase> less{{"less s=1", 1.0, 0.05, 0.1, 0.6}, {"less s=0.5", 0.5, 0.08, 0.1, 0.2}};

    std::ostringstream detail;
    double worst_greater = 0.0;
    double worst_less = 0.0;
    const auto run = [&](const GmmPrior& prior, const ScoreCase& c, const char* prior_name) {
        const oracle::BruteForceConditionalScore oracle(prior, Vector::Constant(1, c.s), c.sigma_i, c.sigma0,
                                                        Vector::Constant(1, c.y_t));
        std::vector<double> got;
        std::vector<double> want;
        for (int k = 0; k <= 8; ++k) {
            const double xt = -0.2 + 0.175 * k;
            got.push_back(library_scalar_score(prior, c.s, c.sigma_i, c.sigma0, c.y_t, xt));
            want.push_back(oracle.score(Vector::Constant(1, xt))[0]);
        }
        const double err = relative_error(got, want);
        detail << "[" << prior_name << " " << c.label << ": rel=" << std::setprecision(3) << err << "] ";
        return err;
    };
    for (const auto& c : greater) {
        worst_greater = std::max(worst_greater, run(gmm, c, "sym"));
        worst_greater = std::max(worst_greater, run(skewed, c, "skew"));
    }
    for (const auto& c : less) {
        worst_less = std::max(worst_less, run(gmm, c, "sym"));
        worst_less = std::max(worst_less, run(skewed, c, "skew"));
    }

    // K = 1: the closed-form scalar posterior is exact.
    const GmmPrior single({1.0}, {GaussianPrior::isotropic(1, 0.4, 0.03)});
    double worst_single = 0.0;
    for (const auto& c : {greater[0], greater[1], less[0], less[1]}) {
        std::vector<double> got;
        std::vector<double> want;
        const auto exact = oracle::scalar_gaussian_conditional(0.4, 0.03, c.s, c.sigma_i, c.sigma0, c.y_t);
        for (int k = 0; k <= 8; ++k) {
            const double xt = -0.2 + 0.175 * k;
            got.push_back(library_scalar_score(single, c.s, c.sigma_i, c.sigma0, c.y_t, xt));
            want.push_back(exact.score(xt));
        }
        worst_single = std::max(worst_single, relative_error(got, want));
    }
    detail << "[K=1 closed form: rel=" << worst_single << "]";

    harness::Outcome out;
    out.threshold = "greater <= 0.05, less <= 0.10, K=1 <= 1e-6 (relative L2 over 9 points)";
    out.statistic = std::max({worst_greater / 0.05, worst_less / 0.10, worst_single / 1e-6});
    out.pass = worst_greater <= 0.05 && worst_less <= 0.10 && worst_single <= 1e-6;
    out.detail = "statistic = worst error / tolerance. " + detail.str();
    return out;
}

// --- 4. Step sizes vs finite-difference Hessian ----------------------------------------

/// -1 / (d²/dx̃² log p(x̃ | y)) by central differences, for a scalar Gaussian problem whose
/// prior variance is negligible next to σ_i² (denoiser output locally constant).
inline double fd_negative_inverse_hessian(double s, double sigma_i, double sigma0, double y_t, double h) {
    const double prior_var = 1e-6 * sigma_i * sigma_i;
    const auto cond = oracle::scalar_gaussian_conditional(0.3, prior_var, s, sigma_i, sigma0, y_t);
    const double x = cond.mean + 0.5 * std::sqrt(cond.variance);
    const double second =
        (cond.log_density(x + h) - 2.0 * cond.log_density(x) + cond.log_density(x - h)) / (h * h);
    return -1.0 / second;
}

inline harness::Outcome step_size_hessian(std::uint64_t seed) {
    constexpr double kTol = 1e-4;
    constexpr double kFdStep = 1e-4;
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst[3] = {0.0, 0.0, 0.0};
    const char* names[3] = {"zero", "greater", "less"};
    for (int regime = 0; regime < 3; ++regime) {
        for (int t = 0; t < 20; ++t) {
            const double sigma_i = 0.01 * std::pow(1000.0, unit(rng));
            const double sigma0 = 0.01 + 0.19 * unit(rng);
            double s = 0.0;
            if (regime == 1) s = sigma0 * (1.2 + 8.8 * unit(rng)) / sigma_i;
            if (regime == 2) s = sigma0 * (0.1 + 0.7 * unit(rng)) / sigma_i;
            const double y_t = unit(rng);
            const DegradationSVD svd = svd_decompose(LinearOperator(Matrix::Constant(1, 1, s)));
            const auto part = partition_spectrum(sigma_i, sigma0, svd);
            const double expected_regime[3] = {0, 1, 2};
            const int got_regime = part.regime[0] == Regime::Zero ? 0 : part.regime[0] == Regime::Greater ? 1 : 2;
            if (got_regime != static_cast<int>(expected_regime[regime]))
                throw NumericError("step-size check: generated configuration landed in the wrong regime");
            const double alpha = step_sizes(sigma_i, sigma0, svd, part).values[0];
            const double fd = fd_negative_inverse_hessian(s, sigma_i, sigma0, y_t, kFdStep);
            worst[regime] = std::max(worst[regime], std::abs(alpha - fd) / fd);
        }
    }
    harness::Outcome out;
    out.threshold = "relative error <= 1e-4 in each regime (20 configs each, h = 1e-4)";
    out.statistic = std::max({worst[0], worst[1], worst[2]});
    out.pass = out.statistic <= kTol;
    std::ostringstream detail;
    for (int r = 0; r < 3; ++r) detail << names[r] << "=" << std::setprecision(3) << worst[r] << " ";
    out.detail = detail.str();
    return out;
}

// --- 5. Faithfulness battery --------------------------------------------------------------

struct ImageTask {
    std::string name;
    LinearOperator op;
};

/// 16×16 versions of the standard degradations: 5×5 uniform blur, 2:1 block averaging,
/// 25% random projection.
inline std::vector<ImageTask> desk_tasks(Index side, std::uint64_t seed) {
    std::vector<ImageTask> tasks;
    tasks.push_back({"deblur", make_uniform_blur(side, 5)});
    tasks.push_back({"sr2", make_block_average(side, 2)});
    tasks.push_back({"cs25", make_random_projection(side * side, 0.25, seed)});
    return tasks;
}

inline GaussianPrior desk_image_prior(Index side) { return make_smooth_image_prior(side, 0.5, 0.04, 2.0, 0.002); }

inline Vector concat(const std::vector<Vector>& parts) {
    Index total = 0;
    for (const auto& p : parts) total += p.size();
    Vector out(total);
    Index off = 0;
    for (const auto& p : parts) {
        out.segment(off, p.size()) = p;
        off += p.size();
    }
    return out;
}

inline Vector sample_exact_posterior(const oracle::GaussianPosterior& post, Rng& rng) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(post.covariance);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return post.mean + eig.eigenvectors() * root.cwiseProduct(standard_normal(post.mean.size(), rng));
}

inline harness::Outcome faithfulness_battery(std::uint64_t seed) {
    constexpr Index kSide = 16;
    constexpr int kRuns = 20;
    constexpr int kChannels = 3;
    constexpr double kSigma0 = 0.1;
    Rng rng(seed);
    const auto tasks = desk_tasks(kSide, rng());
    std::vector<DegradationSVD> svds;
    for (const auto& t : tasks) svds.push_back(svd_decompose(t.op));
    const GaussianPrior prior = desk_image_prior(kSide);

    int std_ok = 0, rho_ok = 0, norm_ok = 0;
    int ctl_std = 0, ctl_rho = 0, ctl_norm = 0;
    std::ostringstream per_run;
    for (int run = 0; run < kRuns; ++run) {
        const std::size_t t = static_cast<std::size_t>(run) % tasks.size();
        const auto& op = tasks[t].op;
        std::vector<Vector> residuals;
        std::vector<Vector> control;
        for (int ch = 0; ch < kChannels; ++ch) {
            const Vector x = prior.sample(rng);
            const Vector y = op.apply(x) + kSigma0 * standard_normal(op.rows(), rng);
            const SamplerConfig cfg{posterior_check_schedule(kSigma0), rng(), TracePolicy::None, std::nullopt};
            const Vector x_hat = snips_sample(svds[t], y, prior, cfg).sample;
            residuals.push_back(y - op.apply(x_hat));
            const auto post = oracle::exact_gaussian_posterior(prior, op, kSigma0, y);
            control.push_back(y - op.apply(sample_exact_posterior(post, rng)));
        }
        const auto rep = faithfulness_of_residual(concat(residuals), kSigma0);
        const auto ctl = faithfulness_of_residual(concat(control), kSigma0);
        std_ok += rep.pass_std;
        rho_ok += rep.pass_rho;
        norm_ok += rep.pass_normality;
        ctl_std += ctl.pass_std;
        ctl_rho += ctl.pass_rho;
        ctl_norm += ctl.pass_normality;
        per_run << tasks[t].name << "(M=" << kChannels * op.rows() << ") std/s0=" << std::setprecision(3)
                << rep.residual_std / kSigma0 << " p=" << rep.dagostino_pvalue << " rho=" << rep.neighbor_rho << "; ";
    }
    harness::Outcome out;
    out.threshold = "std within 5% in >= 95% of runs, |rho| < 0.1 in all, p > 0.05 in >= 85%";
    out.pass = std_ok * 100 >= 95 * kRuns && rho_ok == kRuns && norm_ok * 100 >= 85 * kRuns;
    out.statistic = static_cast<double>(std_ok) / kRuns;
    std::ostringstream detail;
    detail << "SNIPS: std " << std_ok << "/" << kRuns << ", rho " << rho_ok << "/" << kRuns << ", normality "
           << norm_ok << "/" << kRuns << ". Exact-posterior control: std " << ctl_std << "/" << kRuns << ", rho "
           << ctl_rho << "/" << kRuns << ", normality " << ctl_norm << "/" << kRuns << ". Runs: " << per_run.str();
    out.detail = detail.str();
    return out;
}

// --- 6. Sample vs mean PSNR gap -----------------------------------------------------------

inline harness::Outcome psnr_gap(std::uint64_t seed) {
    constexpr Index kSide = 16;
    constexpr std::size_t kChains = 8;
    constexpr double kSigma0 = 0.1;
    Rng rng(seed);
    std::vector<ImageTask> tasks;
    tasks.push_back({"deblur", make_uniform_blur(kSide, 5)});
    tasks.push_back({"sr2", make_block_average(kSide, 2)});
    tasks.push_back({"sr4", make_block_average(kSide, 4)});
    tasks.push_back({"cs25", make_random_projection(kSide * kSide, 0.25, rng())});
    tasks.push_back({"cs12.5", make_random_projection(kSide * kSide, 0.125, rng())});
    const GaussianPrior prior = desk_image_prior(kSide);

    int in_band = 0;
    std::ostringstream detail;
    double mean_gap = 0.0;
    for (const auto& task : tasks) {
        const DegradationSVD svd = svd_decompose(task.op);
        const Vector x = prior.sample(rng);
        const Vector y = task.op.apply(x) + kSigma0 * standard_normal(task.op.rows(), rng);
        const SamplerConfig cfg{default_schedule(kSigma0), rng(), TracePolicy::None, std::nullopt};
        const ManyResult many = snips_sample_many(svd, y, prior, cfg, kChains, default_workers());
        const PsnrGap gap = sample_vs_mean_gap(many.samples(), x);
        const bool ok = gap.gap_db >= 1.5 && gap.gap_db <= 3.5;
        in_band += ok;
        mean_gap += gap.gap_db / static_cast<double>(tasks.size());
        detail << task.name << ": sample " << std::setprecision(4) << gap.mean_of_sample_psnr << " dB, mean "
               << gap.psnr_of_mean << " dB, gap " << gap.gap_db << (ok ? "" : " (out of band)") << "; ";
    }
    harness::Outcome out;
    out.threshold = "gap in [1.5, 3.5] dB on >= 4 of 5 problems (K=8)";
    out.statistic = mean_gap;
    out.pass = in_band >= 4;
    out.detail = std::to_string(in_band) + "/5 in band; " + detail.str();
    return out;
}

// --- 7. Degenerate operators ----------------------------------------------------------

inline GmmPrior synthesis_gmm() {
    Matrix c0 = Matrix::Identity(2, 2) * 0.01;
    Matrix c1 = Matrix::Identity(2, 2) * 0.005;
    Matrix c2 = Matrix::Identity(2, 2) * 0.02;
    return GmmPrior({0.2, 0.5, 0.3}, {GaussianPrior(Eigen::Vector2d(0.2, 0.2), c0),
                                      GaussianPrior(Eigen::Vector2d(0.8, 0.3), c1),
                                      GaussianPrior(Eigen::Vector2d(0.5, 0.8), c2)});
}

inline std::size_t nearest_component(const GmmPrior& gmm, const Vector& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gmm.size(); ++k) {
        const double d = (x - gmm.components()[k].mean()).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

inline harness::Outcome degenerations(std::uint64_t seed) {
    constexpr std::size_t kChains = 2000;
    Rng rng(seed);
    std::ostringstream detail;

    // H = I: scalar posterior denoising.
    const double prior_mean = 0.4, prior_var = 0.05, sigma0 = 0.1, y_obs = 0.55;
    const GaussianPrior prior = GaussianPrior::isotropic(1, prior_mean, prior_var);
    const LinearOperator identity = make_identity(1);
    const DegradationSVD id_svd = svd_decompose(identity);
    const Vector y = Vector::Constant(1, y_obs);
    const auto post = oracle::exact_gaussian_posterior(prior, identity, sigma0, y);
    const SamplerConfig den_cfg{posterior_check_schedule(sigma0), rng(), TracePolicy::None, std::nullopt};
    const ManyResult den = snips_sample_many(id_svd, y, prior, den_cfg, kChains, default_workers());
    const double se = den.std[0] / std::sqrt(static_cast<double>(den.succeeded));
    const double z = std::abs(den.mean[0] - post.mean[0]) / se;
    const double std_rel = std::abs(den.std[0] / std::sqrt(post.covariance(0, 0)) - 1.0);
    const bool den_ok = den.succeeded == kChains && z <= 3.0 && std_rel <= 0.10;
    const bool den_repro = snips_sample(id_svd, y, prior, den_cfg).sample == snips_sample(id_svd, y, prior, den_cfg).sample;
    detail << "denoise: |z|=" << std::setprecision(3) << z << " std rel err=" << std_rel
           << (den_repro ? " reproducible" : " NOT reproducible") << "; ";

    // H = 0, σ_0 = 0: synthesis from a 2-D mixture.
    const GmmPrior gmm = synthesis_gmm();
    const LinearOperator zero = make_zero(2, 2);
    const DegradationSVD zero_svd = svd_decompose(zero);
    const Vector y0 = Vector::Zero(2);
    const SamplerConfig syn_cfg{posterior_check_schedule(0.0), rng(), TracePolicy::None, std::nullopt};
    const ManyResult syn = snips_sample_many(zero_svd, y0, gmm, syn_cfg, kChains, default_workers());
    std::vector<double> counts(gmm.size(), 0.0);
    for (const auto& s : syn.samples()) counts[nearest_component(gmm, s)] += 1.0;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < gmm.size(); ++k) {
        const double expected = gmm.weights()[k] * static_cast<double>(syn.succeeded);
        chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    const double p = chi_square_sf(chi2, static_cast<double>(gmm.size() - 1));
    const bool syn_repro =
        snips_sample(zero_svd, y0, gmm, syn_cfg).sample == snips_sample(zero_svd, y0, gmm, syn_cfg).sample;
    detail << "synthesis occupancy " << counts[0] / syn.succeeded << "/" << counts[1] / syn.succeeded << "/"
           << counts[2] / syn.succeeded << " vs 0.2/0.5/0.3, chi2 p=" << p
           << (syn_repro ? " reproducible" : " NOT reproducible");

    harness::Outcome out;
    out.threshold = "denoise |z| <= 3 and std within 10%; synthesis chi2 p > 0.01; bit-identical reruns";
    out.statistic = p;
    out.pass = den_ok && den_repro && syn.succeeded == kChains && p > 0.01 && syn_repro;
    out.detail = detail.str();
    return out;
}

// --- 8. D'Agostino calibration ------------------------------------------------------------

inline harness::Outcome dagostino_calibration(std::uint64_t seed) {
    constexpr int kTrials = 10000;
    constexpr Index kM = 4096;
    Rng rng(seed);
    int rejections = 0;
    for (int t = 0; t < kTrials; ++t) rejections += dagostino_k2(standard_normal(kM, rng)).pvalue <= 0.05;
    harness::Outcome out;
    out.statistic = static_cast<double>(rejections) / kTrials;
    out.threshold = "rejection rate in [0.035, 0.065]";
    out.pass = out.statistic >= 0.035 && out.statistic <= 0.065;
    out.detail = std::to_string(rejections) + " of " + std::to_string(kTrials) + " rejected at level 0.05";
    return out;
}

inline harness::Suite make_suite() {
    harness::Suite suite;
    suite.add("gaussian_posterior", "SNIPS samples match the exact Gaussian posterior", gaussian_posterior_equivalence);
    suite.add("variance_law", "carved noise obeys the two-branch variance law", variance_law);
    suite.add("score_vs_quadrature", "conditional score matches quadrature on 1-D mixtures", score_vs_bruteforce);
    suite.add("step_size_hessian", "step sizes equal the negative inverse Hessian diagonal", step_size_hessian);
    suite.add("faithfulness", "residuals y - Hx look like white N(0, sigma0^2) noise", faithfulness_battery);
    suite.add("psnr_gap", "mean of 8 samples beats a single sample by 1.5-3.5 dB", psnr_gap);
    suite.add("degenerations", "H=I denoising and H=0 synthesis special cases", degenerations);
    suite.add("dagostino_calibration", "normality test has nominal size under H0", dagostino_calibration);
    return suite;
}

inline harness::SuiteResult run_suite(const std::vector<std::string>& selection, std::uint64_t seed,
                                      const std::function<void(const harness::TestResult&)>& on_result = {}) {
    return make_suite().run(selection, seed, on_result);
}

} // namespace snips::reproduction

#endif // SNIPS_REPRODUCTION_HPP

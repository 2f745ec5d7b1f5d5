#ifndef SNIPS_ORACLE_HPP
#define SNIPS_ORACLE_HPP

// Ground truth used to check the sampler and the score: exact Gaussian posteriors,
// the carved annealing-noise construction, and quadrature-based conditional scores.

#include "operators.hpp"
#include "priors.hpp"
#include "schedule.hpp"

#include <cmath>
#include <vector>

namespace snips::oracle {

struct GaussianPosterior {
    Vector mean;
    Matrix covariance;
};

namespace detail {

/// Symmetrizes and clips eigenvalues in [-1e-10, 0) to zero.
inline Matrix clean_covariance(const Matrix& c) {
    Matrix sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericError("posterior covariance eigendecomposition failed");
    Vector lambda = eig.eigenvalues();
    if (lambda.size() > 0 && lambda.minCoeff() < -1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff()))
        throw NumericError("posterior covariance is not positive semidefinite");
    lambda = lambda.cwiseMax(0.0);
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

inline void check_shapes(const GaussianPrior& prior, const LinearOperator& op, const Eigen::Ref<const Vector>& y) {
    if (op.cols() != prior.dim()) throw ArgumentError("posterior: operator columns do not match prior dimension");
    if (y.size() != op.rows()) throw ArgumentError("posterior: measurement length does not match operator rows");
}

} // namespace detail

/// Precision form: Σ_post = (C^{-1} + H^T H/σ_0²)^{-1}, μ_post = Σ_post (C^{-1}μ + H^T y/σ_0²).
/// With σ_0 = 0 the operator must have full column rank and the posterior collapses to a point.
inline GaussianPosterior exact_gaussian_posterior(const GaussianPrior& prior, const LinearOperator& op, double sigma0,
                                                  const Eigen::Ref<const Vector>& y) {
    detail::check_shapes(prior, op, y);
    const Matrix& h = op.matrix();
    const Index n = prior.dim();
    if (sigma0 == 0.0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(h);
        if (qr.rank() < n) throw NumericError("posterior: noiseless measurement with rank-deficient operator");
        return {qr.solve(y), Matrix::Zero(n, n)};
    }
    if (!(sigma0 > 0.0)) throw ArgumentError("posterior: sigma0 must be >= 0");
    const Matrix& q = prior.eigenvectors();
    const Matrix c_inv = q * prior.eigenvalues().cwiseInverse().asDiagonal() * q.transpose();
    const double w = 1.0 / (sigma0 * sigma0);
    const Matrix precision = c_inv + w * h.transpose() * h;
    const Eigen::LDLT<Matrix> ldlt(0.5 * (precision + precision.transpose()));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericError("posterior: singular precision matrix");
    const Matrix cov = ldlt.solve(Matrix::Identity(n, n));
    const Vector mean = ldlt.solve(c_inv * prior.mean() + w * h.transpose() * y);
    return {mean, detail::clean_covariance(cov)};
}

/// Joint-Gaussian conditioning (Schur complement) on (x, y):
///   μ_post = μ + C H^T S^{-1}(y - Hμ),  Σ_post = C - C H^T S^{-1} H C,  S = H C H^T + σ_0² I.
inline GaussianPosterior exact_gaussian_posterior_schur(const GaussianPrior& prior, const LinearOperator& op,
                                                        double sigma0, const Eigen::Ref<const Vector>& y) {
    detail::check_shapes(prior, op, y);
    const Matrix& h = op.matrix();
    const Matrix& c = prior.covariance();
    const Matrix ch = c * h.transpose();
    const Matrix s = h * ch + sigma0 * sigma0 * Matrix::Identity(op.rows(), op.rows());
    const Eigen::LDLT<Matrix> ldlt(s);
    if (ldlt.info() != Eigen::Success) throw NumericError("posterior: singular innovation covariance");
    const Vector mean = prior.mean() + ch * ldlt.solve(y - h * prior.mean());
    const Matrix cov = c - ch * ldlt.solve(ch.transpose());
    return {mean, detail::clean_covariance(cov)};
}

/// Per-level annealing noise carved out of the measurement noise.
/// levels[i] holds n_i (V-domain, length N) for schedule level i; etas[i] = n_i - n_{i+1}
/// with n_{L+1} = 0. z_t = U^T z.
struct CarvedNoise {
    std::vector<Vector> levels;
    std::vector<Vector> etas;
    Vector z_t;
};

/// Each coordinate is a Brownian path B in variance-time with B(σ_0²/s_j²) = z_T,j/s_j and
/// n_i = B(σ_i²). Levels below the crossing are bridge points (portions of z); levels above
/// add independent increments. Coordinates with s_j = 0 are independent of z.
inline CarvedNoise carve_noise_sequence(const Eigen::Ref<const Vector>& z, const NoiseSchedule& schedule,
                                        const DegradationSVD& svd, Rng& rng) {
    if (z.size() != svd.rows()) throw ArgumentError("carve: measurement noise has wrong length");
    if (!validate_crossing(schedule, svd).valid)
        throw ArgumentError("carve: schedule does not cross sigma0/s_j for every nonzero singular value");

    const Index n = svd.cols();
    const std::size_t count = schedule.size();
    const auto& sig = schedule.levels();
    const double sigma0 = schedule.sigma0();
    std::normal_distribution<double> normal;

    CarvedNoise out;
    out.z_t = svd.u.transpose() * z;
    out.levels.assign(count, Vector::Zero(n));

    for (Index j = 0; j < n; ++j) {
        const double s = svd.extended_singulars[j];
        const bool coupled = s > 0.0 && j < svd.rows();
        // Anchor: variance-time t_anchor with known value b_anchor.
        const double t_anchor = coupled ? (sigma0 * sigma0) / (s * s) : 0.0;
        const double b_anchor = coupled ? out.z_t[j] / s : 0.0;

        std::vector<std::size_t> below;
        std::vector<std::size_t> above;
        for (std::size_t i = 0; i < count; ++i) (sig[i] * sig[i] < t_anchor ? below : above).push_back(i);

        // Levels are in decreasing σ order, so `below` walks from the anchor toward zero as a
        // Brownian bridge pinned at (0, 0) and (t_anchor, b_anchor).
        double t_prev = t_anchor;
        double b_prev = b_anchor;
        for (std::size_t i : below) {
            const double t = sig[i] * sig[i];
            const double mean = b_prev * t / t_prev;
            const double var = t * (t_prev - t) / t_prev;
            const double b = mean + std::sqrt(std::max(var, 0.0)) * normal(rng);
            out.levels[i][j] = b;
            t_prev = t;
            b_prev = b;
        }
        // Above the anchor: independent increments, walking upward.
        t_prev = t_anchor;
        b_prev = b_anchor;
        for (auto it = above.rbegin(); it != above.rend(); ++it) {
            const double t = sig[*it] * sig[*it];
            const double b = b_prev + std::sqrt(std::max(t - t_prev, 0.0)) * normal(rng);
            out.levels[*it][j] = b;
            t_prev = t;
            b_prev = b;
        }
    }

    out.etas.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        out.etas[i] = i + 1 < count ? Vector(out.levels[i] - out.levels[i + 1]) : out.levels[i];
    return out;
}

/// Covariance between the V-domain annealing noise n_j at level σ_i and the measurement
/// noise z_T,j under the carved construction: s·min(σ_i², σ_0²/s²).
inline double carved_noise_covariance(double s, double sigma_i, double sigma0) {
    if (s == 0.0) return 0.0;
    return s * std::min(sigma_i * sigma_i, sigma0 * sigma0 / (s * s));
}

/// Exact p(x̃ | y) for the scalar model x ~ N(μ, C), y = s x + z, x̃ = x + n with carved (n, z).
struct ScalarGaussianConditional {
    double mean = 0.0;
    double variance = 0.0;

    double log_density(double x_tilde) const {
        const double d = x_tilde - mean;
        return -0.5 * (d * d / variance + std::log(2.0 * M_PI * variance));
    }
    double score(double x_tilde) const { return -(x_tilde - mean) / variance; }
};

inline ScalarGaussianConditional scalar_gaussian_conditional(double prior_mean, double prior_var, double s,
                                                             double sigma_i, double sigma0, double y_t) {
    const double var_xt = prior_var + sigma_i * sigma_i;
    if (s == 0.0) return {prior_mean, var_xt};
    const double cov_xt_y = s * prior_var + carved_noise_covariance(s, sigma_i, sigma0);
    const double var_y = s * s * prior_var + sigma0 * sigma0;
    const double gain = cov_xt_y / var_y;
    const double var = var_xt - gain * cov_xt_y;
    if (!(var > 0.0)) throw NumericError("scalar conditional: non-positive variance");
    return {prior_mean + gain * (y_t - s * prior_mean), var};
}

struct QuadratureSpec {
    double step = 0.0;   // 0 picks min(σ_i, σ_0, smallest component std)/10
    double extent = 6.0; // half-width in combined standard deviations
    double fd_step = 1e-5;
};

namespace detail {

/// log of a sum of exp(values) with a running max.
struct LogSumExp {
    double top = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    void add(double v) {
        if (v == -std::numeric_limits<double>::infinity()) return;
        if (v > top) {
            acc = acc * std::exp(top - v) + 1.0;
            top = v;
        } else {
            acc += std::exp(v - top);
        }
    }
    double value() const { return top + std::log(acc); }
};

inline double component_min_std(const GmmPrior& prior) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : prior.components()) m = std::min(m, std::sqrt(c.eigenvalues().minCoeff()));
    return m;
}

} // namespace detail

/// Brute-force ∇_{x̃} log p(x̃ | y_T) for a 1-D or 2-D GMM prior living directly in the
/// V-domain (Σ diagonal with entries s). The joint density p(x̃, y) = ∫ p(x) p(x̃, y | x) dx is
/// integrated on a uniform grid and differentiated by central differences.
class BruteForceConditionalScore {
public:
    BruteForceConditionalScore(const GmmPrior& prior, Vector s, double sigma_i, double sigma0, Vector y_t,
                               QuadratureSpec spec = {})
        : prior_(prior), s_(std::move(s)), sigma_i_(sigma_i), sigma0_(sigma0), y_t_(std::move(y_t)), spec_(spec) {
        const Index d = prior_.dim();
        if (d < 1 || d > 2) throw ArgumentError("brute force score: only 1-D and 2-D priors are supported");
        if (s_.size() != d || y_t_.size() != d) throw ArgumentError("brute force score: s and y_T must match prior dim");
        if (!(sigma_i_ > 0.0)) throw ArgumentError("brute force score: sigma_i must be positive");
        const double comp_std = detail::component_min_std(prior_);
        if (spec_.step == 0.0) {
            double base = std::min(sigma_i_, comp_std);
            if (sigma0_ > 0.0) base = std::min(base, sigma0_);
            spec_.step = base / 10.0;
        }
        if (spec_.step > sigma_i_ / 10.0) throw ArgumentError("brute force score: grid step coarser than sigma_i/10");

        // Integration box: prior support ± extent·(largest component std).
        double max_std = 0.0;
        for (const auto& c : prior_.components()) max_std = std::max(max_std, std::sqrt(c.eigenvalues().maxCoeff()));
        lo_ = Vector(d);
        hi_ = Vector(d);
        for (Index k = 0; k < d; ++k) {
            double mn = std::numeric_limits<double>::infinity();
            double mx = -mn;
            for (const auto& c : prior_.components()) {
                mn = std::min(mn, c.mean()[k]);
                mx = std::max(mx, c.mean()[k]);
            }
            lo_[k] = mn - spec_.extent * max_std;
            hi_[k] = mx + spec_.extent * max_std;
        }
        for (Index k = 0; k < d; ++k) {
            const double cov = carved_noise_covariance(s_[k], sigma_i_, sigma0_);
            const bool coupled = s_[k] != 0.0;
            Noise nz;
            nz.coupled = coupled;
            if (coupled) {
                const double det = sigma_i_ * sigma_i_ * sigma0_ * sigma0_ - cov * cov;
                if (!(det > 0.0)) throw NumericError("brute force score: degenerate (n, z) covariance at the boundary");
                nz.inv_nn = sigma0_ * sigma0_ / det;
                nz.inv_zz = sigma_i_ * sigma_i_ / det;
                nz.inv_nz = -cov / det;
                nz.log_norm = -0.5 * std::log(4.0 * M_PI * M_PI * det);
            } else {
                nz.inv_nn = 1.0 / (sigma_i_ * sigma_i_);
                nz.log_norm = -0.5 * std::log(2.0 * M_PI * sigma_i_ * sigma_i_);
            }
            noise_.push_back(nz);
        }
    }

    double step() const noexcept { return spec_.step; }

    /// log p(x̃, y_T) up to the grid-cell volume constant.
    double log_joint(const Eigen::Ref<const Vector>& x_tilde) const {
        const Index d = prior_.dim();
        detail::LogSumExp lse;
        const double h = spec_.step;
        const auto count = [&](Index k) { return static_cast<Index>(std::ceil((hi_[k] - lo_[k]) / h)) + 1; };
        Vector x(d);
        if (d == 1) {
            for (Index a = 0; a < count(0); ++a) {
                x[0] = lo_[0] + static_cast<double>(a) * h;
                lse.add(log_integrand(x, x_tilde));
            }
        } else {
            for (Index a = 0; a < count(0); ++a) {
                x[0] = lo_[0] + static_cast<double>(a) * h;
                for (Index b = 0; b < count(1); ++b) {
                    x[1] = lo_[1] + static_cast<double>(b) * h;
                    lse.add(log_integrand(x, x_tilde));
                }
            }
        }
        return lse.value();
    }

    Vector score(const Eigen::Ref<const Vector>& x_tilde) const {
        const Index d = prior_.dim();
        if (x_tilde.size() != d) throw ArgumentError("brute force score: point has wrong dimension");
        Vector g(d);
        const double fh = spec_.fd_step;
        for (Index k = 0; k < d; ++k) {
            Vector plus = x_tilde;
            Vector minus = x_tilde;
            plus[k] += fh;
            minus[k] -= fh;
            g[k] = (log_joint(plus) - log_joint(minus)) / (2.0 * fh);
        }
        return g;
    }

    std::vector<Vector> score_on(const std::vector<Vector>& points) const {
        std::vector<Vector> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(score(p));
        return out;
    }

private:
    struct Noise {
        bool coupled = false;
        double inv_nn = 0.0;
        double inv_zz = 0.0;
        double inv_nz = 0.0;
        double log_norm = 0.0;
    };

    double log_integrand(const Vector& x, const Eigen::Ref<const Vector>& x_tilde) const {
        double acc = log_prior(x);
        for (Index k = 0; k < x.size(); ++k) {
            const Noise& nz = noise_[static_cast<std::size_t>(k)];
            const double n = x_tilde[k] - x[k];
            if (nz.coupled) {
                const double z = y_t_[k] - s_[k] * x[k];
                acc += nz.log_norm - 0.5 * (nz.inv_nn * n * n + 2.0 * nz.inv_nz * n * z + nz.inv_zz * z * z);
            } else {
                acc += nz.log_norm - 0.5 * nz.inv_nn * n * n;
            }
        }
        return acc;
    }

    double log_prior(const Vector& x) const {
        detail::LogSumExp lse;
        for (std::size_t k = 0; k < prior_.size(); ++k)
            lse.add(std::log(prior_.weights()[k]) + prior_.components()[k].log_density(x, 0.0));
        return lse.value();
    }

    const GmmPrior& prior_;
    Vector s_;
    double sigma_i_;
    double sigma0_;
    Vector y_t_;
    QuadratureSpec spec_;
    Vector lo_;
    Vector hi_;
    std::vector<Noise> noise_;
};

inline Vector conditional_score_bruteforce(const GmmPrior& prior, const Vector& s, double sigma_i, double sigma0,
                                           const Vector& y_t, const Vector& x_tilde, QuadratureSpec spec = {}) {
    return BruteForceConditionalScore(prior, s, sigma_i, sigma0, y_t, spec).score(x_tilde);
}

} // namespace snips::oracle

#endif // SNIPS_ORACLE_HPP

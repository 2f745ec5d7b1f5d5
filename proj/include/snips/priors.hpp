#ifndef SNIPS_PRIORS_HPP
#define SNIPS_PRIORS_HPP

// Score models s(x̃, σ) ≈ ∇ log p_σ(x̃), where p_σ is the prior blurred by N(0, σ²I).
// Every model here is a denoiser D(x̃, σ) = E[x | x̃] in disguise:
//     s(x̃, σ) = (D(x̃, σ) - x̃) / σ².

#include "core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

namespace snips {

class ScoreModel {
public:
    virtual ~ScoreModel() = default;

    virtual Index dim() const = 0;

    /// Writes s(x, σ) into out. Implementations must not allocate per call when avoidable;
    /// the sampler calls this τ·L times per chain.
    virtual void score_into(const Eigen::Ref<const Vector>& x, double sigma, Eigen::Ref<Vector> out) const = 0;

    /// False for models backed by a single external session.
    virtual bool thread_safe() const { return true; }

    Vector score(const Eigen::Ref<const Vector>& x, double sigma) const {
        check_input(x);
        Vector out(dim());
        score_into(x, sigma, out);
        return out;
    }

protected:
    void check_input(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim())
            throw ArgumentError("score model of dimension " + std::to_string(dim()) + " given vector of length " +
                                std::to_string(x.size()));
    }
};

class GaussianPrior final : public ScoreModel {
public:
    GaussianPrior(Vector mean, Matrix covariance) : mean_(std::move(mean)), covariance_(std::move(covariance)) {
        const Index n = mean_.size();
        if (n < 1) throw ArgumentError("gaussian prior: empty mean");
        if (covariance_.rows() != n || covariance_.cols() != n)
            throw ArgumentError("gaussian prior: covariance shape does not match mean");
        if (!mean_.allFinite() || !covariance_.allFinite())
            throw ArgumentError("gaussian prior: non-finite parameters");
        const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
        if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ArgumentError("gaussian prior: covariance is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance_);
        if (eig.info() != Eigen::Success) throw NumericError("gaussian prior: eigendecomposition failed");
        eigenvalues_ = eig.eigenvalues();
        eigenvectors_ = eig.eigenvectors();
        if (!(eigenvalues_.minCoeff() > 0.0))
            throw ArgumentError("gaussian prior: covariance is not positive definite");
    }

    static GaussianPrior isotropic(Index n, double mean, double variance) {
        return GaussianPrior(Vector::Constant(n, mean), Matrix::Identity(n, n) * variance);
    }

    Index dim() const override { return mean_.size(); }
    const Vector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

    /// -(C + σ²I)^{-1}(x - μ); σ = 0 gives the clean prior score.
    void score_into(const Eigen::Ref<const Vector>& x, double sigma, Eigen::Ref<Vector> out) const override {
        if (!(sigma >= 0.0)) throw ArgumentError("gaussian score: sigma must be >= 0");
        const double s2 = sigma * sigma;
        Vector coeffs = eigenvectors_.transpose() * (x - mean_);
        for (Index k = 0; k < coeffs.size(); ++k) {
            const double var = eigenvalues_[k] + s2;
            if (!(var > 0.0)) throw NumericError("gaussian score: singular smoothed covariance");
            coeffs[k] /= -var;
        }
        out.noalias() = eigenvectors_ * coeffs;
    }

    /// E[x | x̃] for x̃ = x + N(0, σ²I).
    Vector denoise(const Eigen::Ref<const Vector>& x, double sigma) const {
        const Vector s = score(x, sigma);
        return x + sigma * sigma * s;
    }

    /// log N(x; μ, C + σ²I) including the normalizing constant.
    double log_density(const Eigen::Ref<const Vector>& x, double sigma) const {
        check_input(x);
        const double s2 = sigma * sigma;
        const Vector coeffs = eigenvectors_.transpose() * (x - mean_);
        double quad = 0.0;
        double logdet = 0.0;
        for (Index k = 0; k < coeffs.size(); ++k) {
            const double var = eigenvalues_[k] + s2;
            quad += coeffs[k] * coeffs[k] / var;
            logdet += std::log(var);
        }
        return -0.5 * (quad + logdet + static_cast<double>(dim()) * std::log(2.0 * M_PI));
    }

    Vector sample(Rng& rng) const {
        const Vector z = standard_normal(dim(), rng);
        return mean_ + eigenvectors_ * eigenvalues_.cwiseSqrt().cwiseProduct(z);
    }

private:
    Vector mean_;
    Matrix covariance_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
};

/// Stationary squared-exponential prior over a side×side image:
/// C_ab = variance·exp(-|p_a - p_b|²/(2ℓ²)) + nugget·δ_ab.
inline GaussianPrior make_smooth_image_prior(Index side, double mean, double variance, double length_scale,
                                             double nugget) {
    if (side < 1 || !(variance > 0.0) || !(length_scale > 0.0) || !(nugget > 0.0))
        throw ArgumentError("smooth image prior: side, variance, length scale and nugget must be positive");
    const Index n = side * side;
    Matrix c(n, n);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            const double dr = static_cast<double>(a / side - b / side);
            const double dc = static_cast<double>(a % side - b % side);
            c(a, b) = variance * std::exp(-(dr * dr + dc * dc) / (2.0 * length_scale * length_scale));
        }
        c(a, a) += nugget;
    }
    return GaussianPrior(Vector::Constant(n, mean), std::move(c));
}

class GmmPrior final : public ScoreModel {
public:
    GmmPrior(std::vector<double> weights, std::vector<GaussianPrior> components)
        : weights_(std::move(weights)), components_(std::move(components)) {
        if (weights_.empty() || weights_.size() != components_.size())
            throw ArgumentError("gmm prior: need one weight per component");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("gmm prior: weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("gmm prior: weights must sum to 1");
        for (const auto& c : components_)
            if (c.dim() != components_.front().dim())
                throw ArgumentError("gmm prior: components have different dimensions");
        log_weights_.reserve(weights_.size());
        for (double w : weights_) log_weights_.push_back(std::log(w));
    }

    Index dim() const override { return components_.front().dim(); }
    std::size_t size() const noexcept { return components_.size(); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<GaussianPrior>& components() const noexcept { return components_; }

    /// Posterior responsibilities P(k | x̃) under the σ-blurred mixture, computed in log space.
    Vector responsibilities(const Eigen::Ref<const Vector>& x, double sigma) const {
        check_input(x);
        Vector logr(static_cast<Index>(size()));
        for (std::size_t k = 0; k < size(); ++k)
            logr[static_cast<Index>(k)] = log_weights_[k] + components_[k].log_density(x, sigma);
        const double top = logr.maxCoeff();
        if (!std::isfinite(top)) throw NumericError("gmm: responsibilities overflowed");
        Vector r = (logr.array() - top).exp().matrix();
        return r / r.sum();
    }

    /// log Σ_k w_k N(x; μ_k, C_k + σ²I).
    double log_density(const Eigen::Ref<const Vector>& x, double sigma) const {
        check_input(x);
        double top = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(size());
        for (std::size_t k = 0; k < size(); ++k) {
            terms[k] = log_weights_[k] + components_[k].log_density(x, sigma);
            top = std::max(top, terms[k]);
        }
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - top);
        return top + std::log(acc);
    }

    Vector denoise(const Eigen::Ref<const Vector>& x, double sigma) const {
        if (!(sigma > 0.0)) throw ArgumentError("gmm denoise: sigma must be positive");
        const Vector r = responsibilities(x, sigma);
        Vector d = Vector::Zero(dim());
        for (std::size_t k = 0; k < size(); ++k) d += r[static_cast<Index>(k)] * components_[k].denoise(x, sigma);
        return d;
    }

    void score_into(const Eigen::Ref<const Vector>& x, double sigma, Eigen::Ref<Vector> out) const override {
        out = (denoise(x, sigma) - x) / (sigma * sigma);
    }

    Vector sample(Rng& rng, std::size_t* component = nullptr) const {
        std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
        const std::size_t k = pick(rng);
        if (component) *component = k;
        return components_[k].sample(rng);
    }

private:
    std::vector<double> weights_;
    std::vector<double> log_weights_;
    std::vector<GaussianPrior> components_;
};

/// Adapts any callable D(x, σ) into a score model through the denoising residual.
template <typename Denoiser>
class DenoiserScore final : public ScoreModel {
public:
    DenoiserScore(Index n, Denoiser denoiser) : n_(n), denoiser_(std::move(denoiser)) {}

    Index dim() const override { return n_; }

    void score_into(const Eigen::Ref<const Vector>& x, double sigma, Eigen::Ref<Vector> out) const override {
        if (!(sigma > 0.0)) throw ArgumentError("denoiser score: sigma must be positive");
        const Vector d = denoiser_(Vector(x), sigma);
        if (d.size() != n_) throw ArgumentError("denoiser returned wrong dimension");
        out = (d - x) / (sigma * sigma);
    }

private:
    Index n_;
    Denoiser denoiser_;
};

} // namespace snips

#endif // SNIPS_PRIORS_HPP

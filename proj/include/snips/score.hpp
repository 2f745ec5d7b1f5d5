#ifndef SNIPS_SCORE_HPP
#define SNIPS_SCORE_HPP

// Conditional score ∇ log p(x̃_T | y_T) in the V-domain and the diagonal
// Newton step sizes that precondition the Langevin update.

#include "priors.hpp"
#include "schedule.hpp"

#include <cmath>

namespace snips {

struct ConditionalScoreInputs {
    const Vector& y_t; // U^T y, length M
    const Vector& x;   // current iterate in signal space, length N
    double sigma_i;
    double sigma0;
    const DegradationSVD& svd;
    const ScoreModel& prior;
};

/// Counts of coordinates whose measurement weight hit the exact-boundary cap.
struct ScoreDiagnostics {
    std::size_t capped_weights = 0;
};

/// 1 / |σ_0² - σ_i² s²|, capped at 1/(1e-12·max(σ_0², σ_i²)) where the denominator vanishes.
inline double measurement_weight(double s, double sigma_i, double sigma0, bool& capped) {
    const double gap = std::abs(sigma0 * sigma0 - sigma_i * sigma_i * s * s);
    const double floor = 1e-12 * std::max(sigma0 * sigma0, sigma_i * sigma_i);
    capped = !(gap > floor);
    return 1.0 / (capped ? floor : gap);
}

/// V-domain kernel shared by conditional_score and the sampler.
///   zero:    d_j = p_j
///   greater: d_j = s_j (y_T - s x_T)_j / (σ_i² s_j² - σ_0²)
///   less:    d_j = s_j (y_T - s x_T)_j / (σ_0² - σ_i² s_j²) + p_j
/// where p = V^T s(x, σ_i). `prior_t` is ignored on greater coordinates and may be
/// empty when the partition has no zero/less coordinates.
inline void conditional_score_vdomain(const Eigen::Ref<const Vector>& y_t_padded, const Eigen::Ref<const Vector>& x_t,
                                      const Eigen::Ref<const Vector>& prior_t, double sigma_i, double sigma0,
                                      const Vector& extended_singulars, const SpectrumPartition& partition,
                                      Eigen::Ref<Vector> out, ScoreDiagnostics* diag = nullptr) {
    const Index n = x_t.size();
    for (Index j = 0; j < n; ++j) {
        const Regime regime = partition.regime[static_cast<std::size_t>(j)];
        if (regime == Regime::Zero) {
            out[j] = prior_t[j];
            continue;
        }
        const double s = extended_singulars[j];
        bool capped = false;
        const double w = measurement_weight(s, sigma_i, sigma0, capped);
        if (capped && diag) ++diag->capped_weights;
        const double meas = s * (y_t_padded[j] - s * x_t[j]) * w;
        out[j] = regime == Regime::Greater ? meas : meas + prior_t[j];
    }
}

inline Vector conditional_score(const ConditionalScoreInputs& inp, const SpectrumPartition& partition,
                                ScoreDiagnostics* diag = nullptr) {
    const Index n = inp.svd.cols();
    if (inp.y_t.size() != inp.svd.rows()) throw ArgumentError("conditional score: y_T has wrong length");
    if (inp.x.size() != n) throw ArgumentError("conditional score: x has wrong length");
    if (inp.prior.dim() != n) throw ArgumentError("conditional score: prior dimension mismatch");
    if (partition.dim() != static_cast<std::size_t>(n)) throw ArgumentError("conditional score: partition size mismatch");

    Vector y_pad = Vector::Zero(n);
    const Index k = std::min(inp.svd.rows(), n);
    y_pad.head(k) = inp.y_t.head(k);
    const Vector x_t = inp.svd.v.transpose() * inp.x;

    Vector prior_t = Vector::Zero(n);
    if (partition.greater.size() != static_cast<std::size_t>(n)) {
        const Vector ps = inp.prior.score(inp.x, inp.sigma_i);
        if (!ps.allFinite()) throw NumericError("conditional score: prior score is not finite");
        prior_t = inp.svd.v.transpose() * ps;
    }
    Vector d(n);
    conditional_score_vdomain(y_pad, x_t, prior_t, inp.sigma_i, inp.sigma0, inp.svd.extended_singulars, partition, d,
                              diag);
    return d;
}

/// Dense evaluation of Σ^T |σ_0²I - σ_i²ΣΣ^T|^† (y_T - ΣV^T x) + (V^T s(x,σ_i))|_{not >}.
/// Materializes the M×M pseudo-inverse; used to cross-check the per-coordinate kernel.
inline Vector conditional_score_unified(const ConditionalScoreInputs& inp, const SpectrumPartition& partition) {
    const Index m = inp.svd.rows();
    const Index n = inp.svd.cols();
    Matrix sigma = Matrix::Zero(m, n);
    for (Index j = 0; j < inp.svd.singulars.size(); ++j) sigma(j, j) = inp.svd.singulars[j];
    const Matrix inner = inp.sigma0 * inp.sigma0 * Matrix::Identity(m, m) -
                         inp.sigma_i * inp.sigma_i * sigma * sigma.transpose();
    Matrix pinv = Matrix::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
        const double a = std::abs(inner(j, j));
        pinv(j, j) = a > 0.0 ? 1.0 / a : 0.0;
    }
    const Vector x_t = inp.svd.v.transpose() * inp.x;
    Vector d = sigma.transpose() * pinv * (inp.y_t - sigma * x_t);
    Vector prior_t = inp.svd.v.transpose() * inp.prior.score(inp.x, inp.sigma_i);
    for (Index j = 0; j < n; ++j)
        if (partition.regime[static_cast<std::size_t>(j)] != Regime::Greater) d[j] += prior_t[j];
    return d;
}

struct StepSizeVector {
    Vector values;
    std::size_t floor_hits = 0; // entries clamped to 1e-12·σ_i²
};

/// Diagonal of A_i, the negative inverse of the diagonal Hessian approximation:
///   zero: σ_i²;  greater: σ_i² - σ_0²/s²;  less: σ_i²(1 - s²σ_i²/σ_0²).
inline StepSizeVector step_sizes(double sigma_i, double sigma0, const DegradationSVD& svd,
                                 const SpectrumPartition& partition) {
    if (!(sigma_i > 0.0)) throw ArgumentError("step sizes: sigma_i must be positive");
    const Vector& s = svd.extended_singulars;
    if (partition.dim() != static_cast<std::size_t>(s.size())) throw ArgumentError("step sizes: partition size mismatch");
    const double var = sigma_i * sigma_i;
    const double floor = 1e-12 * var;
    StepSizeVector out{Vector(s.size()), 0};
    for (Index j = 0; j < s.size(); ++j) {
        double a = var;
        switch (partition.regime[static_cast<std::size_t>(j)]) {
        case Regime::Zero: break;
        case Regime::Greater: a = var - sigma0 * sigma0 / (s[j] * s[j]); break;
        case Regime::Less: a = sigma0 > 0.0 ? var * (1.0 - s[j] * s[j] * var / (sigma0 * sigma0)) : floor; break;
        }
        if (!(a > floor)) {
            a = floor;
            ++out.floor_hits;
        }
        out.values[j] = a;
    }
    return out;
}

} // namespace snips

#endif // SNIPS_SCORE_HPP

#ifndef SNIPS_DIAGNOSTICS_HPP
#define SNIPS_DIAGNOSTICS_HPP

// Measurement-faithfulness checks and reconstruction metrics.

#include "operators.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace snips {

/// Upper tail of the χ² distribution with `df` degrees of freedom.
inline double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw ArgumentError("chi-square: degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

struct NormalityTest {
    double skew_z = 0.0;
    double kurtosis_z = 0.0;
    double k2 = 0.0;
    double pvalue = 0.0;
};

/// D'Agostino–Pearson omnibus K² test: squared skewness and kurtosis z-scores,
/// referred to χ² with two degrees of freedom. Needs at least 20 values.
inline NormalityTest dagostino_k2(const Eigen::Ref<const Vector>& values) {
    const double n = static_cast<double>(values.size());
    if (values.size() < 20) throw ArgumentError("D'Agostino test needs at least 20 values");
    const double mean = values.mean();
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (Index k = 0; k < values.size(); ++k) {
        const double d = values[k] - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw NumericError("D'Agostino test on zero-variance data");

    NormalityTest t;
    {
        const double b1 = m3 / std::pow(m2, 1.5);
        const double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
        const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                             ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
        const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
        const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
        const double alpha = std::sqrt(2.0 / (w2 - 1.0));
        const double r = y / alpha;
        t.skew_z = delta * std::log(r + std::sqrt(r * r + 1.0));
    }
    {
        const double b2 = m4 / (m2 * m2);
        const double expected = 3.0 * (n - 1.0) / (n + 1.0);
        const double var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
        const double x = (b2 - expected) / std::sqrt(var_b2);
        const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                                  std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
        const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
        const double term1 = 1.0 - 2.0 / (9.0 * a);
        const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
        double term2 = std::numeric_limits<double>::quiet_NaN();
        if (denom != 0.0) term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
        t.kurtosis_z = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
    }
    t.k2 = t.skew_z * t.skew_z + t.kurtosis_z * t.kurtosis_z;
    t.pvalue = std::isfinite(t.k2) ? chi_square_sf(t.k2, 2.0) : 0.0;
    return t;
}

inline double pearson_correlation(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size() || a.size() < 2) throw ArgumentError("correlation needs two equal-length series");
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(denom > 0.0)) return 0.0;
    return da.dot(db) / denom;
}

/// Correlation of (r_k, r_{k+1}) over consecutive entries in storage order.
inline double neighbor_correlation(const Eigen::Ref<const Vector>& r) {
    if (r.size() < 3) return 0.0;
    return pearson_correlation(r.head(r.size() - 1), r.tail(r.size() - 1));
}

struct FaithfulnessReport {
    double residual_std = 0.0;
    double dagostino_pvalue = 0.0;
    double neighbor_rho = 0.0;
    bool pass_std = false;
    bool pass_normality = false;
    bool pass_rho = false;
    bool normality_applicable = true; // false when M < 20
    bool degenerate = false;          // residual has zero variance

    bool passed() const noexcept { return pass_std && pass_normality && pass_rho; }
};

inline constexpr Index kMinNormalitySamples = 20;

/// Residual r = y - H x̂ should look like white N(0, σ_0²) noise.
inline FaithfulnessReport faithfulness_of_residual(const Eigen::Ref<const Vector>& residual, double sigma0) {
    FaithfulnessReport rep;
    const Index m = residual.size();
    if (m < 2) throw ArgumentError("faithfulness needs at least two measurements");
    const double mean = residual.mean();
    const double var = (residual.array() - mean).square().sum() / static_cast<double>(m - 1);
    rep.residual_std = std::sqrt(var);
    rep.normality_applicable = m >= kMinNormalitySamples;
    if (!(var > 0.0)) {
        rep.degenerate = true;
        rep.residual_std = 0.0;
        rep.pass_std = sigma0 == 0.0;
        return rep;
    }
    rep.pass_std = sigma0 > 0.0 && std::abs(rep.residual_std / sigma0 - 1.0) <= 0.05;
    rep.neighbor_rho = neighbor_correlation(residual);
    rep.pass_rho = std::abs(rep.neighbor_rho) < 0.1;
    if (rep.normality_applicable) {
        rep.dagostino_pvalue = dagostino_k2(residual).pvalue;
        rep.pass_normality = rep.dagostino_pvalue > 0.05;
    }
    return rep;
}

inline FaithfulnessReport faithfulness(const LinearOperator& op, const Eigen::Ref<const Vector>& x_hat,
                                       const Eigen::Ref<const Vector>& y, double sigma0) {
    if (y.size() != op.rows()) throw ArgumentError("faithfulness: measurement length does not match operator");
    return faithfulness_of_residual(y - op.apply(x_hat), sigma0);
}

inline const std::vector<std::string>& faithfulness_fields() {
    static const std::vector<std::string> fields{"residual_std", "dagostino_pvalue", "neighbor_rho",
                                                 "pass_std",     "pass_normality",   "pass_rho"};
    return fields;
}

inline nlohmann::json to_json(const FaithfulnessReport& r) {
    return nlohmann::json{{"residual_std", r.residual_std}, {"dagostino_pvalue", r.dagostino_pvalue},
                          {"neighbor_rho", r.neighbor_rho}, {"pass_std", r.pass_std},
                          {"pass_normality", r.pass_normality}, {"pass_rho", r.pass_rho}};
}

inline std::string csv_header() {
    std::string h;
    for (const auto& f : faithfulness_fields()) h += (h.empty() ? "" : ",") + f;
    return h;
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

inline std::string to_csv_row(const FaithfulnessReport& r) {
    return format_double(r.residual_std) + "," + format_double(r.dagostino_pvalue) + "," +
           format_double(r.neighbor_rho) + "," + (r.pass_std ? "true" : "false") + "," +
           (r.pass_normality ? "true" : "false") + "," + (r.pass_rho ? "true" : "false");
}

/// 10·log10(1/MSE) for signals in [0, 1]; +inf when identical.
inline double psnr(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& ref) {
    if (x.size() != ref.size() || x.size() == 0) throw ArgumentError("psnr: size mismatch");
    const double mse = (x - ref).squaredNorm() / static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

struct PsnrGap {
    double mean_of_sample_psnr = 0.0;
    double psnr_of_mean = 0.0;
    double gap_db = 0.0;
};

inline PsnrGap sample_vs_mean_gap(const std::vector<Vector>& samples, const Eigen::Ref<const Vector>& ref) {
    if (samples.size() < 2) throw ArgumentError("sample_vs_mean_gap needs at least two samples");
    Vector mean = Vector::Zero(ref.size());
    double total = 0.0;
    for (const auto& s : samples) {
        total += psnr(s, ref);
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    PsnrGap g;
    g.mean_of_sample_psnr = total / static_cast<double>(samples.size());
    g.psnr_of_mean = psnr(mean, ref);
    g.gap_db = std::isinf(g.mean_of_sample_psnr) && std::isinf(g.psnr_of_mean) ? 0.0
                                                                               : g.psnr_of_mean - g.mean_of_sample_psnr;
    return g;
}

} // namespace snips

#endif // SNIPS_DIAGNOSTICS_HPP

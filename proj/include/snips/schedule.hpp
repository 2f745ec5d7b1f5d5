#ifndef SNIPS_SCHEDULE_HPP
#define SNIPS_SCHEDULE_HPP

#include "operators.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace snips {

/// Annealing levels σ_1 > … > σ_L > 0 plus the measurement noise σ_0 and the
/// Langevin constants (step scale c, inner iterations τ).
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> levels, double sigma0, double c, std::size_t tau)
        : levels_(std::move(levels)), sigma0_(sigma0), c_(c), tau_(tau) {
        if (levels_.empty()) throw ArgumentError("schedule: no levels");
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            if (!std::isfinite(levels_[i]) || levels_[i] <= 0.0)
                throw ArgumentError("schedule: levels must be finite and positive");
            if (i > 0 && !(levels_[i] < levels_[i - 1]))
                throw ArgumentError("schedule: levels must be strictly decreasing");
        }
        if (!std::isfinite(sigma0_) || sigma0_ < 0.0) throw ArgumentError("schedule: sigma0 must be finite and >= 0");
        if (!std::isfinite(c_) || c_ <= 0.0) throw ArgumentError("schedule: step constant c must be positive");
        if (tau_ < 1) throw ArgumentError("schedule: tau must be at least 1");
    }

    const std::vector<double>& levels() const noexcept { return levels_; }
    std::size_t size() const noexcept { return levels_.size(); }
    double level(std::size_t i) const { return levels_.at(i); }
    double sigma0() const noexcept { return sigma0_; }
    double c() const noexcept { return c_; }
    std::size_t tau() const noexcept { return tau_; }

    NoiseSchedule with_sigma0(double sigma0) const { return {levels_, sigma0, c_, tau_}; }
    NoiseSchedule with_tau(std::size_t tau) const { return {levels_, sigma0_, c_, tau}; }

private:
    std::vector<double> levels_;
    double sigma0_;
    double c_;
    std::size_t tau_;
};

/// σ_i = sigma1·r^(i-1), r = (sigmaL/sigma1)^(1/(L-1)); both endpoints are exact.
inline NoiseSchedule make_geometric_schedule(double sigma1, double sigmaL, std::size_t count, double sigma0,
                                             double c, std::size_t tau) {
    if (!(sigmaL > 0.0) || !(sigma1 > sigmaL) || !std::isfinite(sigma1))
        throw ArgumentError("geometric schedule: need sigma1 > sigmaL > 0");
    if (count < 2) throw ArgumentError("geometric schedule: need at least two levels");
    const double ratio = std::pow(sigmaL / sigma1, 1.0 / static_cast<double>(count - 1));
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i) levels[i] = sigma1 * std::pow(ratio, static_cast<double>(i));
    levels.front() = sigma1;
    levels.back() = sigmaL;
    return NoiseSchedule(std::move(levels), sigma0, c, tau);
}

/// Hyperparameters of the 64×64 face experiments: c=3.3e-2, τ=5, L=500, σ_1=90, σ_L=0.01.
inline NoiseSchedule default_schedule(double sigma0) { return make_geometric_schedule(90.0, 0.01, 500, sigma0, 3.3e-2, 5); }

inline double common_ratio(const NoiseSchedule& schedule) {
    if (schedule.size() < 2) return 1.0;
    return schedule.level(1) / schedule.level(0);
}

enum class Regime : unsigned char { Zero, Less, Greater };

struct SpectrumPartition {
    std::vector<Index> zero;
    std::vector<Index> less;
    std::vector<Index> greater;
    std::vector<Regime> regime; // per V-domain coordinate
    std::size_t level_index = 0;

    std::size_t dim() const noexcept { return regime.size(); }
};

/// zero: s_j = 0; greater: σ_i s_j > σ_0; less: everything else, including σ_i s_j = σ_0.
inline SpectrumPartition partition_spectrum(double sigma_i, double sigma0, const DegradationSVD& svd,
                                            std::size_t level_index = 0) {
    if (!(sigma_i > 0.0)) throw ArgumentError("partition: sigma_i must be positive");
    SpectrumPartition p;
    p.level_index = level_index;
    const Vector& s = svd.extended_singulars;
    p.regime.resize(static_cast<std::size_t>(s.size()));
    for (Index j = 0; j < s.size(); ++j) {
        Regime r;
        if (s[j] == 0.0)
            r = Regime::Zero;
        else if (sigma_i * s[j] > sigma0)
            r = Regime::Greater;
        else
            r = Regime::Less;
        p.regime[static_cast<std::size_t>(j)] = r;
        switch (r) {
        case Regime::Zero: p.zero.push_back(j); break;
        case Regime::Less: p.less.push_back(j); break;
        case Regime::Greater: p.greater.push_back(j); break;
        }
    }
    return p;
}

enum class CrossingStatus {
    Crossed,         // σ_{i-1} s > σ_0 > σ_i s for some i
    CrossedAtEquality, // passes through σ_i s = σ_0 exactly
    NeverBelow,      // σ_L s > σ_0
    StartsBelow,     // σ_1 s < σ_0
    Noiseless        // σ_0 = 0: vacuously fine
};

struct CoordinateCrossing {
    Index coordinate = 0;
    double singular = 0.0;
    CrossingStatus status = CrossingStatus::Crossed;
    std::optional<std::size_t> crossing_level;   // first level (0-based) with σ_i s <= σ_0
    std::vector<std::size_t> equality_levels;    // σ_i s == σ_0
    std::vector<std::size_t> near_levels;        // |σ_i s - σ_0| <= 1e-9 σ_0, not equal
};

struct CrossingReport {
    std::vector<CoordinateCrossing> coordinates; // nonzero singular values only
    bool valid = true;

    std::size_t count(CrossingStatus status) const {
        std::size_t n = 0;
        for (const auto& c : coordinates) n += c.status == status ? 1 : 0;
        return n;
    }
};

inline CrossingReport validate_crossing(const NoiseSchedule& schedule, const DegradationSVD& svd) {
    CrossingReport report;
    const double sigma0 = schedule.sigma0();
    const auto& levels = schedule.levels();
    for (Index j = 0; j < svd.singulars.size(); ++j) {
        const double s = svd.singulars[j];
        if (s == 0.0) continue;
        CoordinateCrossing entry;
        entry.coordinate = j;
        entry.singular = s;
        if (sigma0 == 0.0) {
            entry.status = CrossingStatus::Noiseless;
            report.coordinates.push_back(std::move(entry));
            continue;
        }
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const double scaled = levels[i] * s;
            if (scaled == sigma0)
                entry.equality_levels.push_back(i);
            else if (std::abs(scaled - sigma0) <= 1e-9 * sigma0)
                entry.near_levels.push_back(i);
            if (!entry.crossing_level && scaled <= sigma0) entry.crossing_level = i;
        }
        if (levels.front() * s < sigma0)
            entry.status = CrossingStatus::StartsBelow;
        else if (!entry.crossing_level)
            entry.status = CrossingStatus::NeverBelow;
        else if (!entry.equality_levels.empty())
            entry.status = CrossingStatus::CrossedAtEquality;
        else
            entry.status = CrossingStatus::Crossed;
        if (entry.status == CrossingStatus::StartsBelow || entry.status == CrossingStatus::NeverBelow)
            report.valid = false;
        report.coordinates.push_back(std::move(entry));
    }
    return report;
}

} // namespace snips

#endif // SNIPS_SCHEDULE_HPP

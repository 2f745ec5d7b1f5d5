#ifndef SNIPS_CORE_HPP
#define SNIPS_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace snips {

inline constexpr const char* kVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad caller input: shapes, ranges, malformed configuration.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced an unusable result (singular system, NaN).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecompositionError : public NumericError {
public:
    DecompositionError(const std::string& what, Index rows, Index cols)
        : NumericError(what + " (operator " + std::to_string(rows) + "x" + std::to_string(cols) + ")"),
          rows_(rows), cols_(cols) {}

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

private:
    Index rows_;
    Index cols_;
};

/// A Langevin chain produced a non-finite iterate.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t level, std::size_t step)
        : NumericError("sampler diverged at level " + std::to_string(level) + ", step " + std::to_string(step)),
          level_(level), step_(step) {}

    std::size_t level() const noexcept { return level_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t level_;
    std::size_t step_;
};

/// Malformed bytes on a binary wire or in a binary file.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds from (master, counter).
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept {
    return mix_seed(mix_seed(master) ^ mix_seed(counter + 0x632BE59BD9B4E019ULL));
}

inline Vector standard_normal(Index n, Rng& rng) {
    std::normal_distribution<double> dist;
    Vector z(n);
    for (Index j = 0; j < n; ++j) z[j] = dist(rng);
    return z;
}

inline bool all_finite(const Eigen::Ref<const Vector>& v) { return v.allFinite(); }

} // namespace snips

#endif // SNIPS_CORE_HPP

#ifndef SNIPS_TEST_SUPPORT_HPP
#define SNIPS_TEST_SUPPORT_HPP

#include <snips/core.hpp>
#include <snips/operators.hpp>
#include <snips/priors.hpp>

#include <gtest/gtest.h>

namespace snips::test {

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    std::normal_distribution<double> normal;
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
    return m;
}

inline GaussianPrior random_gaussian_prior(Index n, Rng& rng) {
    const Matrix a = gaussian_matrix(n, n, rng);
    Matrix cov = a * a.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
    cov = 0.5 * (cov + cov.transpose());
    return GaussianPrior(gaussian_matrix(n, 1, rng).col(0), cov);
}

/// Operator whose SVD is diag(s) in the standard basis (up to signs).
inline LinearOperator diagonal_operator(const std::vector<double>& s) {
    Matrix h = Matrix::Zero(static_cast<Index>(s.size()), static_cast<Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) h(static_cast<Index>(j), static_cast<Index>(j)) = s[j];
    return LinearOperator(h);
}

inline double sample_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace snips::test

#endif

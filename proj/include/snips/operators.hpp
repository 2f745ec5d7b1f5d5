#ifndef SNIPS_OPERATORS_HPP
#define SNIPS_OPERATORS_HPP

// Degradation operators y = Hx as dense matrices, and their SVD.

#include "core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

namespace snips {

class LinearOperator {
public:
    explicit LinearOperator(Matrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() < 1 || entries_.cols() < 1)
            throw ArgumentError("operator must have at least one row and one column");
        if (!entries_.allFinite())
            throw ArgumentError("operator entries must be finite");
    }

    Index rows() const noexcept { return entries_.rows(); }
    Index cols() const noexcept { return entries_.cols(); }
    const Matrix& matrix() const noexcept { return entries_; }

    Vector apply(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != cols())
            throw ArgumentError("operator applied to vector of length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(cols()));
        return entries_ * x;
    }

    bool operator==(const LinearOperator&) const = default;

private:
    Matrix entries_;
};

/// H = U diag(s) V^T with U (M x M) and V (N x N) orthogonal.
struct DegradationSVD {
    Matrix u;
    Vector singulars;          // min(M, N) entries, descending
    Matrix v;
    Vector extended_singulars; // N entries, zero past min(M, N)

    Index rows() const noexcept { return u.rows(); }
    Index cols() const noexcept { return v.rows(); }

    /// Σ applied to a V-domain vector; result lives in the U-domain (length M).
    Vector sigma_apply(const Eigen::Ref<const Vector>& x_t) const {
        Vector out = Vector::Zero(rows());
        const Index k = singulars.size();
        out.head(k) = singulars.cwiseProduct(x_t.head(k));
        return out;
    }

    Matrix reconstruct() const {
        Matrix sigma = Matrix::Zero(rows(), cols());
        for (Index j = 0; j < singulars.size(); ++j) sigma(j, j) = singulars[j];
        return u * sigma * v.transpose();
    }

    /// y_T = U^T y, zero-padded or truncated to N entries so it indexes like the V-domain.
    Vector project_measurement(const Eigen::Ref<const Vector>& y) const {
        if (y.size() != rows())
            throw ArgumentError("measurement has length " + std::to_string(y.size()) + ", expected " +
                                std::to_string(rows()));
        const Vector full = u.transpose() * y;
        Vector out = Vector::Zero(cols());
        const Index k = std::min(rows(), cols());
        out.head(k) = full.head(k);
        return out;
    }
};

/// Singular values below max(M,N)·eps·s_max are snapped to exactly zero so rank
/// deficiency shows up in the zero partition instead of as 1e-17 noise.
inline DegradationSVD svd_decompose(const LinearOperator& op) {
    const Index m = op.rows();
    const Index n = op.cols();
    Eigen::BDCSVD<Matrix> svd(op.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success)
        throw DecompositionError("singular value decomposition failed", m, n);

    Vector s = svd.singularValues();
    Matrix u = svd.matrixU();
    Matrix v = svd.matrixV();
    if (!s.allFinite() || !u.allFinite() || !v.allFinite())
        throw DecompositionError("singular value decomposition produced non-finite values", m, n);

    const Index k = s.size();
    std::vector<Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s[a] > s[b]; });
    if (!std::is_sorted(order.begin(), order.end())) {
        Vector s_sorted(k);
        Matrix u_sorted = u;
        Matrix v_sorted = v;
        for (Index j = 0; j < k; ++j) {
            const Index src = order[static_cast<std::size_t>(j)];
            s_sorted[j] = s[src];
            u_sorted.col(j) = u.col(src);
            v_sorted.col(j) = v.col(src);
        }
        s = std::move(s_sorted);
        u = std::move(u_sorted);
        v = std::move(v_sorted);
    }

    const double s_max = k > 0 ? s[0] : 0.0;
    const double cutoff = static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon() * s_max;
    for (Index j = 0; j < k; ++j)
        if (s[j] <= cutoff) s[j] = 0.0;

    Vector extended = Vector::Zero(n);
    extended.head(k) = s;
    return DegradationSVD{std::move(u), std::move(s), std::move(v), std::move(extended)};
}

/// Uniform kernel×kernel box blur on a side×side image with wrap-around boundary.
inline LinearOperator make_uniform_blur(Index side, Index kernel) {
    if (side < 1) throw ArgumentError("blur: side must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw ArgumentError("blur: kernel width must be odd");
    if (kernel > side) throw ArgumentError("blur: kernel wider than image");

    const Index n = side * side;
    const Index half = kernel / 2;
    const double weight = 1.0 / static_cast<double>(kernel * kernel);
    Matrix h = Matrix::Zero(n, n);
    for (Index r = 0; r < side; ++r) {
        for (Index c = 0; c < side; ++c) {
            const Index row = r * side + c;
            for (Index dr = -half; dr <= half; ++dr) {
                for (Index dc = -half; dc <= half; ++dc) {
                    const Index rr = ((r + dr) % side + side) % side;
                    const Index cc = ((c + dc) % side + side) % side;
                    h(row, rr * side + cc) += weight;
                }
            }
        }
    }
    return LinearOperator(std::move(h));
}

/// Averages each non-overlapping block×block tile into one pixel.
inline LinearOperator make_block_average(Index side, Index block) {
    if (side < 1 || block < 1) throw ArgumentError("block average: side and block must be positive");
    if (side % block != 0) throw ArgumentError("block average: block does not divide side");

    const Index low = side / block;
    const double weight = 1.0 / static_cast<double>(block * block);
    Matrix h = Matrix::Zero(low * low, side * side);
    for (Index br = 0; br < low; ++br)
        for (Index bc = 0; bc < low; ++bc)
            for (Index r = br * block; r < (br + 1) * block; ++r)
                for (Index c = bc * block; c < (bc + 1) * block; ++c)
                    h(br * low + bc, r * side + c) = weight;
    return LinearOperator(std::move(h));
}

/// round(keep_fraction·n) orthonormal rows, drawn Haar-uniformly from the seed.
inline LinearOperator make_random_projection(Index n, double keep_fraction, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("random projection: signal dimension must be positive");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw ArgumentError("random projection: keep_fraction must lie in (0, 1]");
    const auto m = static_cast<Index>(std::llround(keep_fraction * static_cast<double>(n)));
    if (m < 1) throw ArgumentError("random projection: keep_fraction keeps zero rows");

    Rng rng(seed);
    std::normal_distribution<double> dist;
    Matrix g(n, m);
    for (Index c = 0; c < m; ++c)
        for (Index r = 0; r < n; ++r) g(r, c) = dist(rng);

    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, m);
    const Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (Index c = 0; c < m; ++c)
        if (r(c, c) < 0.0) q.col(c) *= -1.0;
    return LinearOperator(q.transpose());
}

/// Keeps the listed coordinates (in ascending order) and drops the rest.
inline LinearOperator make_inpainting_mask(Index n, std::vector<Index> kept) {
    if (n < 1) throw ArgumentError("inpainting: signal dimension must be positive");
    if (kept.empty()) throw ArgumentError("inpainting: no kept indices");
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
        throw ArgumentError("inpainting: duplicate kept index");
    if (kept.front() < 0 || kept.back() >= n) throw ArgumentError("inpainting: kept index out of range");

    Matrix h = Matrix::Zero(static_cast<Index>(kept.size()), n);
    for (std::size_t r = 0; r < kept.size(); ++r) h(static_cast<Index>(r), kept[r]) = 1.0;
    return LinearOperator(std::move(h));
}

inline LinearOperator make_identity(Index n) { return LinearOperator(Matrix::Identity(n, n)); }

inline LinearOperator make_zero(Index m, Index n) { return LinearOperator(Matrix::Zero(m, n)); }

} // namespace snips

#endif // SNIPS_OPERATORS_HPP

#pragma once

#include "tccs/error.hpp"
#include "tccs/instrument.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tccs {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Extents of a third-order tensor.
struct Dims {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t n3 = 0;

    [[nodiscard]] constexpr std::size_t size() const noexcept { return n1 * n2 * n3; }
    [[nodiscard]] constexpr std::size_t slice_size() const noexcept { return n1 * n2; }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
    return std::to_string(d.n1) + "x" + std::to_string(d.n2) + "x" + std::to_string(d.n3);
}

/// Real n1 x n2 x n3 tensor.
///
/// Storage is slice-major: frontal slice k is a contiguous row-major n1 x n2
/// block, so entry (i, j, k) lives at offset (k * n1 + i) * n2 + j. Slice access
/// is O(n1 * n2) and maps directly onto an Eigen row-major matrix.
///
/// Zero extents are accepted (an empty slab is a legitimate intermediate, e.g.
/// the complement of a full index set); user-facing entry points validate
/// positivity themselves.
class DenseTensor3 {
public:
    DenseTensor3() = default;

    explicit DenseTensor3(Dims dims) : dims_(dims), values_(dims.size(), 0.0), meter_(dims.size()) {}

    /// Takes ownership of `values` laid out as described above. Rejects a size
    /// mismatch and any non-finite entry.
    DenseTensor3(Dims dims, std::vector<double> values)
        : dims_(dims), values_(std::move(values)), meter_(values_.size()) {
        if (values_.size() != dims_.size()) {
            throw ShapeError("tensor " + to_string(dims_) + " needs " + std::to_string(dims_.size()) +
                             " values, got " + std::to_string(values_.size()));
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw DomainError("tensor values must be finite");
        }
    }

    static DenseTensor3 zeros(Dims dims) { return DenseTensor3(dims); }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t n1() const noexcept { return dims_.n1; }
    [[nodiscard]] std::size_t n2() const noexcept { return dims_.n2; }
    [[nodiscard]] std::size_t n3() const noexcept { return dims_.n3; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return (k * dims_.n1 + i) * dims_.n2 + j;
    }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept { return values_[offset(i, j, k)]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return values_[offset(i, j, k)];
    }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    /// Frontal slice k as an n1 x n2 row-major view.
    [[nodiscard]] Eigen::Map<const RowMatrixXd> slice(std::size_t k) const noexcept {
        return {values_.data() + k * dims_.slice_size(), static_cast<Eigen::Index>(dims_.n1),
                static_cast<Eigen::Index>(dims_.n2)};
    }
    [[nodiscard]] Eigen::Map<RowMatrixXd> slice(std::size_t k) noexcept {
        return {values_.data() + k * dims_.slice_size(), static_cast<Eigen::Index>(dims_.n1),
                static_cast<Eigen::Index>(dims_.n2)};
    }

    DenseTensor3& operator+=(const DenseTensor3& other) {
        require_same_dims(other, "+=");
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
        return *this;
    }
    DenseTensor3& operator-=(const DenseTensor3& other) {
        require_same_dims(other, "-=");
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
        return *this;
    }
    DenseTensor3& operator*=(double c) noexcept {
        for (double& v : values_) v *= c;
        return *this;
    }

    friend DenseTensor3 operator+(DenseTensor3 a, const DenseTensor3& b) { return a += b; }
    friend DenseTensor3 operator-(DenseTensor3 a, const DenseTensor3& b) { return a -= b; }
    friend DenseTensor3 operator*(double c, DenseTensor3 a) { return a *= c; }
    friend DenseTensor3 operator*(DenseTensor3 a, double c) { return a *= c; }

    /// Bitwise equality of dims and values.
    friend bool operator==(const DenseTensor3& a, const DenseTensor3& b) {
        return a.dims_ == b.dims_ && a.values_ == b.values_;
    }

private:
    void require_same_dims(const DenseTensor3& other, const char* op) const {
        if (other.dims_ != dims_) {
            throw ShapeError(std::string("operator") + op + ": " + to_string(dims_) + " vs " +
                             to_string(other.dims_));
        }
    }

    Dims dims_{};
    std::vector<double> values_;
    instrument::EntryMeter meter_;
};

/// Ordered list of 0-based indices into a dimension of extent `bound`.
/// Duplicates are only legal when the set was drawn with replacement.
class IndexSet {
public:
    IndexSet() = default;

    IndexSet(std::vector<std::size_t> indices, std::size_t bound, bool with_replacement = false)
        : indices_(std::move(indices)), bound_(bound), with_replacement_(with_replacement) {
        for (std::size_t idx : indices_) {
            if (idx >= bound_) {
                throw ParameterError("index " + std::to_string(idx) + " out of range for bound " +
                                     std::to_string(bound_));
            }
        }
        if (!with_replacement_) {
            std::vector<std::size_t> sorted = indices_;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                throw ParameterError("duplicate index in an index set drawn without replacement");
            }
        }
    }

    /// {0, 1, ..., n-1}.
    static IndexSet full(std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return {std::move(idx), n, false};
    }

    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
    [[nodiscard]] std::size_t bound() const noexcept { return bound_; }
    [[nodiscard]] bool with_replacement() const noexcept { return with_replacement_; }
    [[nodiscard]] std::size_t operator[](std::size_t n) const noexcept { return indices_[n]; }
    [[nodiscard]] auto begin() const noexcept { return indices_.begin(); }
    [[nodiscard]] auto end() const noexcept { return indices_.end(); }

    /// Membership mask over [0, bound).
    [[nodiscard]] std::vector<bool> mask() const {
        std::vector<bool> m(bound_, false);
        for (std::size_t idx : indices_) m[idx] = true;
        return m;
    }

    /// Sorted indices of [0, bound) not contained in the set.
    [[nodiscard]] IndexSet complement() const {
        const auto m = mask();
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n < bound_; ++n) {
            if (!m[n]) out.push_back(n);
        }
        return {std::move(out), bound_, false};
    }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
    std::vector<std::size_t> indices_;
    std::size_t bound_ = 0;
    bool with_replacement_ = false;
};

// ---------------------------------------------------------------------------
// Block-matrix views
// ---------------------------------------------------------------------------

/// Stacks the frontal slices vertically: rows [k*n1, (k+1)*n1) hold slice k.
inline Eigen::MatrixXd unfold(const DenseTensor3& t) {
    const auto& d = t.dims();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d.n1 * d.n3), static_cast<Eigen::Index>(d.n2));
    for (std::size_t k = 0; k < d.n3; ++k) {
        m.middleRows(static_cast<Eigen::Index>(k * d.n1), static_cast<Eigen::Index>(d.n1)) = t.slice(k);
    }
    return m;
}

inline DenseTensor3 fold(const Eigen::MatrixXd& m, Dims dims) {
    if (static_cast<std::size_t>(m.rows()) != dims.n1 * dims.n3 ||
        static_cast<std::size_t>(m.cols()) != dims.n2) {
        throw ShapeError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " does not unfold a " + to_string(dims) + " tensor");
    }
    DenseTensor3 t(dims);
    for (std::size_t k = 0; k < dims.n3; ++k) {
        t.slice(k) = m.middleRows(static_cast<Eigen::Index>(k * dims.n1), static_cast<Eigen::Index>(dims.n1));
    }
    return t;
}

struct BcircOptions {
    std::size_t max_entries = 100'000'000;
};

/// Block-circulant matrix of `t`; block (a, b) is frontal slice (a - b) mod n3.
/// Materializes O(n1 n2 n3^2) entries, so it is meant for verification on small
/// inputs only and refuses anything above `opts.max_entries`.
inline Eigen::MatrixXd bcirc(const DenseTensor3& t, BcircOptions opts = {}) {
    const auto& d = t.dims();
    const std::size_t rows = d.n1 * d.n3;
    const std::size_t cols = d.n2 * d.n3;
    if (rows != 0 && cols > opts.max_entries / rows) {
        throw ParameterError("bcirc: " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " exceeds the entry cap of " + std::to_string(opts.max_entries));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t a = 0; a < d.n3; ++a) {
        for (std::size_t b = 0; b < d.n3; ++b) {
            const std::size_t k = (a + d.n3 - b) % d.n3;
            m.block(static_cast<Eigen::Index>(a * d.n1), static_cast<Eigen::Index>(b * d.n2),
                    static_cast<Eigen::Index>(d.n1), static_cast<Eigen::Index>(d.n2)) = t.slice(k);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Elementary tensors and maps
// ---------------------------------------------------------------------------

/// n x n x n3 tensor whose first frontal slice is the identity, all others zero.
inline DenseTensor3 identity_tensor(std::size_t n, std::size_t n3) {
    if (n == 0 || n3 == 0) throw ParameterError("identity_tensor: n and n3 must be positive");
    DenseTensor3 t(Dims{n, n, n3});
    for (std::size_t i = 0; i < n; ++i) t(i, i, 0) = 1.0;
    return t;
}

/// Tensor transpose: transpose every frontal slice, then reverse slices 2..n3.
inline DenseTensor3 ttranspose(const DenseTensor3& t) {
    const auto& d = t.dims();
    DenseTensor3 out(Dims{d.n2, d.n1, d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        const std::size_t src = (d.n3 - k) % d.n3;
        out.slice(k) = t.slice(src).transpose();
    }
    return out;
}

enum class NormKind { frobenius, infinity, inf2 };

/// Entrywise norms. `inf2` is the l_{inf,2} norm: the largest Frobenius norm
/// over all horizontal slices [T]_{i,:,:} and lateral slices [T]_{:,j,:}.
inline double norm(const DenseTensor3& t, NormKind kind = NormKind::frobenius) {
    const auto v = t.values();
    switch (kind) {
        case NormKind::frobenius: {
            double s = 0.0;
            for (double x : v) s += x * x;
            return std::sqrt(s);
        }
        case NormKind::infinity: {
            double m = 0.0;
            for (double x : v) m = std::max(m, std::abs(x));
            return m;
        }
        case NormKind::inf2: {
            const auto& d = t.dims();
            std::vector<double> rows(d.n1, 0.0), cols(d.n2, 0.0);
            for (std::size_t k = 0; k < d.n3; ++k) {
                for (std::size_t i = 0; i < d.n1; ++i) {
                    for (std::size_t j = 0; j < d.n2; ++j) {
                        const double x = t(i, j, k);
                        rows[i] += x * x;
                        cols[j] += x * x;
                    }
                }
            }
            double m = 0.0;
            for (double s : rows) m = std::max(m, s);
            for (double s : cols) m = std::max(m, s);
            return std::sqrt(m);
        }
    }
    return 0.0;
}

/// Frobenius inner product.
inline double inner_product(const DenseTensor3& a, const DenseTensor3& b) {
    if (a.dims() != b.dims()) {
        throw ShapeError("inner_product: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
    }
    const auto x = a.values();
    const auto y = b.values();
    double s = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * y[n];
    return s;
}

// ---------------------------------------------------------------------------
// Subtensors
// ---------------------------------------------------------------------------

namespace detail {

inline void check_bound(const IndexSet& s, std::size_t extent, const char* which) {
    if (s.bound() != extent) {
        throw ShapeError(std::string("subtensor: ") + which + " index set bound " + std::to_string(s.bound()) +
                         " does not match extent " + std::to_string(extent));
    }
}

}  // namespace detail

/// [T]_{I,J,:}. Index order (including duplicates) is preserved.
inline DenseTensor3 subtensor(const DenseTensor3& t, const IndexSet& rows, const IndexSet& cols) {
    const auto& d = t.dims();
    detail::check_bound(rows, d.n1, "row");
    detail::check_bound(cols, d.n2, "column");
    DenseTensor3 out(Dims{rows.size(), cols.size(), d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < cols.size(); ++b) out(a, b, k) = t(rows[a], cols[b], k);
        }
    }
    return out;
}

/// Horizontal subtensor [T]_{I,:,:}.
inline DenseTensor3 horizontal(const DenseTensor3& t, const IndexSet& rows) {
    const auto& d = t.dims();
    detail::check_bound(rows, d.n1, "row");
    DenseTensor3 out(Dims{rows.size(), d.n2, d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t a = 0; a < rows.size(); ++a) out.slice(k).row(static_cast<Eigen::Index>(a)) =
            t.slice(k).row(static_cast<Eigen::Index>(rows[a]));
    }
    return out;
}

/// Lateral subtensor [T]_{:,J,:}.
inline DenseTensor3 lateral(const DenseTensor3& t, const IndexSet& cols) {
    const auto& d = t.dims();
    detail::check_bound(cols, d.n2, "column");
    DenseTensor3 out(Dims{d.n1, cols.size(), d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t i = 0; i < d.n1; ++i) {
            for (std::size_t b = 0; b < cols.size(); ++b) out(i, b, k) = t(i, cols[b], k);
        }
    }
    return out;
}

/// Horizontal sampling tensor S_I = [I]_{I,:,:}, so that S_I * T == [T]_{I,:,:}.
inline DenseTensor3 horizontal_sampling_tensor(const IndexSet& rows, std::size_t n3) {
    DenseTensor3 s(Dims{rows.size(), rows.bound(), n3});
    for (std::size_t a = 0; a < rows.size(); ++a) s(a, rows[a], 0) = 1.0;
    return s;
}

/// Lateral sampling tensor S_J = [I]_{:,J,:}, so that T * S_J == [T]_{:,J,:}.
inline DenseTensor3 lateral_sampling_tensor(const IndexSet& cols, std::size_t n3) {
    DenseTensor3 s(Dims{cols.bound(), cols.size(), n3});
    for (std::size_t b = 0; b < cols.size(); ++b) s(cols[b], b, 0) = 1.0;
    return s;
}

}  // namespace tccs

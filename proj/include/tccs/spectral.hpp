#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/instrument.hpp"
#include "tccs/tensor.hpp"
#include "tccs/tproduct.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace tccs {

/// Relative numerical-rank cutoff shared by ranks, tpinv, condition_number and
/// the solvers: a singular value counts when it exceeds this fraction of the
/// largest singular value over all spectral slices.
inline constexpr double kDefaultRankTol = 1e-9;

/// Thin SVD of one spectral slice, singular values non-increasing.
struct SliceSvd {
    Eigen::MatrixXcd u;
    Eigen::VectorXd sigma;
    Eigen::MatrixXcd v;
};

/// Compact t-SVD T = W * S * V^T with W: n1 x r x n3, S: r x r x n3, V: n2 x r x n3.
struct TSvdFactors {
    DenseTensor3 W;
    DenseTensor3 S;
    DenseTensor3 V;
    std::size_t r = 0;
};

/// Per-slice ranks of the spectrum.
struct MultiRank {
    std::vector<std::size_t> per_slice;
    std::size_t tubal = 0;
    std::size_t sum = 0;
    double tol = kDefaultRankTol;

    friend bool operator==(const MultiRank& a, const MultiRank& b) { return a.per_slice == b.per_slice; }
};

namespace detail {

template <typename Matrix>
SliceSvd svd_of(const Matrix& a, std::size_t slice_index) {
    using Scalar = typename Matrix::Scalar;
    using Dyn = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    SliceSvd out;
    const Eigen::Index p = std::min(a.rows(), a.cols());
    if (p == 0) {
        out.u = Eigen::MatrixXcd::Zero(a.rows(), 0);
        out.v = Eigen::MatrixXcd::Zero(a.cols(), 0);
        out.sigma = Eigen::VectorXd::Zero(0);
        return out;
    }
    Eigen::BDCSVD<Dyn> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("SVD did not converge on spectral slice " + std::to_string(slice_index));
    }
    instrument::count_madds(static_cast<std::uint64_t>(a.rows()) * static_cast<std::uint64_t>(a.cols()) *
                            static_cast<std::uint64_t>(p));
    out.u = svd.matrixU().template cast<cplx>();
    out.v = svd.matrixV().template cast<cplx>();
    out.sigma = svd.singularValues();
    return out;
}

}  // namespace detail

/// SVD of every spectral slice.
///
/// Slices are computed for k <= n3/2 only; slice n3-k is filled with the
/// conjugate factors of slice k, and the self-conjugate slices (k = 0 and
/// k = n3/2 for even n3) use a real SVD. This keeps the singular vectors
/// conjugate-symmetric so that factors built from them are real after the
/// inverse DFT.
inline std::vector<SliceSvd> slice_svds(const SpectralSlices& s) {
    const std::size_t n3 = s.dims.n3;
    std::vector<SliceSvd> out(n3);
    for (std::size_t k = 0; k < n3; ++k) {
        const std::size_t m = s.mirror(k);
        if (k > m) {
            out[k].u = out[m].u.conjugate();
            out[k].v = out[m].v.conjugate();
            out[k].sigma = out[m].sigma;
        } else if (k == m) {
            const Eigen::MatrixXd re = s.slices[k].real();
            out[k] = detail::svd_of(re, k);
        } else {
            out[k] = detail::svd_of(s.slices[k], k);
        }
    }
    return out;
}

/// Largest singular value across all slices.
inline double max_singular_value(const std::vector<SliceSvd>& svds) {
    double m = 0.0;
    for (const auto& s : svds) {
        if (s.sigma.size() > 0) m = std::max(m, s.sigma(0));
    }
    return m;
}

inline std::size_t count_above(const Eigen::VectorXd& sigma, double cutoff) {
    std::size_t n = 0;
    for (Eigen::Index q = 0; q < sigma.size(); ++q) {
        if (sigma(q) > cutoff) ++n;
    }
    return n;
}

inline MultiRank multirank_from(const std::vector<SliceSvd>& svds, double tol) {
    MultiRank mr;
    mr.tol = tol;
    const double cutoff = tol * max_singular_value(svds);
    for (const auto& s : svds) {
        const std::size_t rk = max_singular_value(svds) > 0.0 ? count_above(s.sigma, cutoff) : 0;
        mr.per_slice.push_back(rk);
        mr.tubal = std::max(mr.tubal, rk);
        mr.sum += rk;
    }
    return mr;
}

/// Multi-rank and tubal rank with relative cutoff `tol`.
inline MultiRank ranks(const DenseTensor3& t, double tol = kDefaultRankTol) {
    return multirank_from(slice_svds(dft3(t)), tol);
}

/// Compact t-SVD keeping `r` singular triplets per spectral slice; without `r`
/// the tubal rank is used.
inline TSvdFactors tsvd(const DenseTensor3& t, std::optional<std::size_t> r = std::nullopt) {
    const auto& d = t.dims();
    const std::size_t p = std::min(d.n1, d.n2);
    const auto spec = dft3(t);
    const auto svds = slice_svds(spec);
    const std::size_t rank = r ? *r : multirank_from(svds, kDefaultRankTol).tubal;
    if (rank > p) {
        throw ParameterError("tsvd: rank " + std::to_string(rank) + " exceeds min(n1, n2) = " + std::to_string(p));
    }
    const auto ri = static_cast<Eigen::Index>(rank);
    SpectralSlices w(Dims{d.n1, rank, d.n3}), s(Dims{rank, rank, d.n3}), v(Dims{d.n2, rank, d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        w.slices[k] = svds[k].u.leftCols(ri);
        v.slices[k] = svds[k].v.leftCols(ri);
        s.slices[k] = svds[k].sigma.head(ri).cast<cplx>().asDiagonal();
    }
    return {idft3(w), idft3(s), idft3(v), rank};
}

/// Result of truncating a spectrum: the rank-limited slices plus the retained
/// left/right singular vectors of every slice.
struct TruncatedSpectrum {
    SpectralSlices approx;
    std::vector<Eigen::MatrixXcd> left;
    std::vector<Eigen::MatrixXcd> right;
};

/// Keeps the leading `r` triplets of each slice. Singular values at or below
/// `tol` times the global maximum are dropped as well, so a slice may retain
/// fewer than `r` directions.
inline TruncatedSpectrum spectral_truncate(const SpectralSlices& s, std::size_t r, double tol = kDefaultRankTol) {
    const auto svds = slice_svds(s);
    const double cutoff = tol * max_singular_value(svds);
    TruncatedSpectrum out{SpectralSlices(s.dims), std::vector<Eigen::MatrixXcd>(s.dims.n3),
                          std::vector<Eigen::MatrixXcd>(s.dims.n3)};
    for (std::size_t k = 0; k < s.dims.n3; ++k) {
        const auto& sv = svds[k];
        const auto keep = static_cast<Eigen::Index>(
            std::min<std::size_t>(r, count_above(sv.sigma, cutoff)));
        out.left[k] = sv.u.leftCols(keep);
        out.right[k] = sv.v.leftCols(keep);
        out.approx.slices[k].noalias() =
            out.left[k] * sv.sigma.head(keep).cast<cplx>().asDiagonal() * out.right[k].adjoint();
        instrument::count_madds(static_cast<std::uint64_t>(s.dims.n1 * s.dims.n2) *
                                static_cast<std::uint64_t>(keep));
    }
    return out;
}

/// Truncated t-SVD operator H_r: keeps the leading r singular triplets of
/// every spectral slice.
inline DenseTensor3 truncate_rank(const DenseTensor3& t, std::size_t r) {
    const std::size_t p = std::min(t.n1(), t.n2());
    if (r < 1 || r > p) {
        throw ParameterError("truncate_rank: r = " + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
    }
    return idft3(spectral_truncate(dft3(t), r, 0.0).approx);
}

/// Spectrum of the Moore-Penrose inverse: v_k * sigma_k^+ * u_k^H per slice.
inline SpectralSlices spectral_pinv(const SpectralSlices& s, double tol = kDefaultRankTol) {
    const auto svds = slice_svds(s);
    const double cutoff = tol * max_singular_value(svds);
    SpectralSlices out(Dims{s.dims.n2, s.dims.n1, s.dims.n3});
    for (std::size_t k = 0; k < s.dims.n3; ++k) {
        const auto& sv = svds[k];
        const auto keep = static_cast<Eigen::Index>(count_above(sv.sigma, cutoff));
        Eigen::VectorXd inv = sv.sigma.head(keep).cwiseInverse();
        out.slices[k].noalias() =
            sv.v.leftCols(keep) * inv.cast<cplx>().asDiagonal() * sv.u.leftCols(keep).adjoint();
    }
    return out;
}

/// Tensor Moore-Penrose inverse (n2 x n1 x n3).
inline DenseTensor3 tpinv(const DenseTensor3& t, double tol = kDefaultRankTol) {
    return idft3(spectral_pinv(dft3(t), tol));
}

/// Tensor spectral norm: largest singular value over all spectral slices,
/// equal to the 2-norm of bcirc(t).
inline double spectral_norm(const DenseTensor3& t) { return max_singular_value(slice_svds(dft3(t))); }

/// ||t^+|| * ||t||: largest over smallest retained singular value across slices.
inline double condition_number(const DenseTensor3& t, double tol = kDefaultRankTol) {
    const auto svds = slice_svds(dft3(t));
    const double smax = max_singular_value(svds);
    if (smax == 0.0) throw DomainError("condition_number of the zero tensor is undefined");
    double smin = smax;
    for (const auto& s : svds) {
        for (Eigen::Index q = 0; q < s.sigma.size(); ++q) {
            if (s.sigma(q) > tol * smax) smin = std::min(smin, s.sigma(q));
        }
    }
    return smax / smin;
}

/// Tensor nuclear norm, (1/n3) * sum of all spectral singular values.
inline double tnn(const DenseTensor3& t) {
    const auto svds = slice_svds(dft3(t));
    double s = 0.0;
    for (const auto& sv : svds) s += sv.sigma.sum();
    return t.n3() == 0 ? 0.0 : s / static_cast<double>(t.n3());
}

/// Smallest mu0 for which t satisfies the tensor mu0-incoherence condition,
/// taken over both the left and right spectral singular vectors:
/// max_k max_i (n1/r) ||row i of W_k||^2 and max_k max_j (n2/r) ||row j of V_k||^2.
inline double incoherence_mu0(const DenseTensor3& t, std::optional<std::size_t> r = std::nullopt) {
    const auto svds = slice_svds(dft3(t));
    if (max_singular_value(svds) == 0.0) throw DomainError("incoherence of the zero tensor is undefined");
    const std::size_t rank = r ? *r : multirank_from(svds, kDefaultRankTol).tubal;
    const std::size_t p = std::min(t.n1(), t.n2());
    if (rank < 1 || rank > p) {
        throw ParameterError("incoherence_mu0: rank " + std::to_string(rank) + " outside [1, " +
                             std::to_string(p) + "]");
    }
    const auto ri = static_cast<Eigen::Index>(rank);
    double mu = 0.0;
    for (const auto& sv : svds) {
        const double wrow = sv.u.leftCols(ri).rowwise().squaredNorm().maxCoeff();
        const double vrow = sv.v.leftCols(ri).rowwise().squaredNorm().maxCoeff();
        mu = std::max(mu, wrow * static_cast<double>(t.n1()) / static_cast<double>(rank));
        mu = std::max(mu, vrow * static_cast<double>(t.n2()) / static_cast<double>(rank));
    }
    return mu;
}

}  // namespace tccs

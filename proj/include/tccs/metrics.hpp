#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tcur.hpp"
#include "tccs/tensor.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tccs {

/// 10 log10(n1 n2 n3 ||T||_inf^2 / ||T - estimate||_F^2), in dB. Returns
/// +infinity when the tensors are identical.
inline double psnr(const DenseTensor3& truth, const DenseTensor3& estimate) {
    if (truth.dims() != estimate.dims()) {
        throw ShapeError("psnr: " + to_string(truth.dims()) + " vs " + to_string(estimate.dims()));
    }
    const double peak = norm(truth, NormKind::infinity);
    if (peak == 0.0) throw DomainError("psnr: truth is the zero tensor");
    double err = 0.0;
    const auto a = truth.values();
    const auto b = estimate.values();
    for (std::size_t n = 0; n < a.size(); ++n) err += (a[n] - b[n]) * (a[n] - b[n]);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(static_cast<double>(truth.size()) * peak * peak / err);
}

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

namespace detail {

/// Normalized 1-D Gaussian of the given length centred on the window.
inline std::vector<double> gaussian_window(std::size_t len, double sigma) {
    std::vector<double> w(len);
    const double c = (static_cast<double>(len) - 1.0) / 2.0;
    double s = 0.0;
    for (std::size_t q = 0; q < len; ++q) {
        const double x = static_cast<double>(q) - c;
        w[q] = std::exp(-x * x / (2.0 * sigma * sigma));
        s += w[q];
    }
    for (double& v : w) v /= s;
    return w;
}

/// 'valid' separable filtering of an n1 x n2 slice with wr (rows) x wc (cols).
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& x, const std::vector<double>& wr,
                                    const std::vector<double>& wc) {
    const Eigen::Index out_r = x.rows() - static_cast<Eigen::Index>(wr.size()) + 1;
    const Eigen::Index out_c = x.cols() - static_cast<Eigen::Index>(wc.size()) + 1;
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(out_r, x.cols());
    for (Eigen::Index i = 0; i < out_r; ++i) {
        for (std::size_t q = 0; q < wr.size(); ++q) tmp.row(i) += wr[q] * x.row(i + static_cast<Eigen::Index>(q));
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_r, out_c);
    for (Eigen::Index j = 0; j < out_c; ++j) {
        for (std::size_t q = 0; q < wc.size(); ++q) out.col(j) += wc[q] * tmp.col(j + static_cast<Eigen::Index>(q));
    }
    return out;
}

}  // namespace detail

/// Mean single-scale SSIM over frontal slices.
///
/// Gaussian window (11 x 11, sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range L
/// = max - min of the truth tensor (L = 1 if the truth is constant). Only
/// window positions fully inside the slice contribute. A slice narrower than
/// the window along a dimension uses a window of that full extent, so a tiny
/// slice is compared with a single (truncated, renormalized) Gaussian patch.
inline double ssim_avg(const DenseTensor3& truth, const DenseTensor3& estimate, SsimOptions opts = {}) {
    if (truth.dims() != estimate.dims()) {
        throw ShapeError("ssim_avg: " + to_string(truth.dims()) + " vs " + to_string(estimate.dims()));
    }
    const auto& d = truth.dims();
    if (d.size() == 0) throw DomainError("ssim_avg: empty tensor");
    const auto vals = truth.values();
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    const double range = (*hi - *lo) > 0.0 ? (*hi - *lo) : 1.0;
    const double c1 = (opts.k1 * range) * (opts.k1 * range);
    const double c2 = (opts.k2 * range) * (opts.k2 * range);
    const auto wr = detail::gaussian_window(std::min(opts.window, d.n1), opts.sigma);
    const auto wc = detail::gaussian_window(std::min(opts.window, d.n2), opts.sigma);

    double total = 0.0;
    for (std::size_t k = 0; k < d.n3; ++k) {
        const Eigen::MatrixXd x = truth.slice(k);
        const Eigen::MatrixXd y = estimate.slice(k);
        const Eigen::MatrixXd mx = detail::filter_valid(x, wr, wc);
        const Eigen::MatrixXd my = detail::filter_valid(y, wr, wc);
        const Eigen::MatrixXd sxx = detail::filter_valid(x.cwiseProduct(x), wr, wc) - mx.cwiseProduct(mx);
        const Eigen::MatrixXd syy = detail::filter_valid(y.cwiseProduct(y), wr, wc) - my.cwiseProduct(my);
        const Eigen::MatrixXd sxy = detail::filter_valid(x.cwiseProduct(y), wr, wc) - mx.cwiseProduct(my);
        const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
        const Eigen::ArrayXXd den =
            (mx.array().square() + my.array().square() + c1) * (sxx.array() + syy.array() + c2);
        total += (num / den).mean();
    }
    return total / static_cast<double>(d.n3);
}

/// ||truth - estimate||_F / ||truth||_F.
inline double rel_error(const DenseTensor3& truth, const DenseTensor3& estimate) {
    if (truth.dims() != estimate.dims()) {
        throw ShapeError("rel_error: " + to_string(truth.dims()) + " vs " + to_string(estimate.dims()));
    }
    const double nt = norm(truth);
    if (nt == 0.0) throw DomainError("rel_error: truth is the zero tensor");
    double err = 0.0;
    const auto a = truth.values();
    const auto b = estimate.values();
    for (std::size_t n = 0; n < a.size(); ++n) err += (a[n] - b[n]) * (a[n] - b[n]);
    return std::sqrt(err) / nt;
}

/// ||truth - C * U^+ * R||_F / ||truth||_F, streamed one horizontal slice at a
/// time so the n1 x n2 x n3 reconstruction is never held in memory.
inline double rel_error(const DenseTensor3& truth, const CurFactors& f, double tol = kDefaultRankTol) {
    const auto& d = truth.dims();
    if (f.C.n1() != d.n1 || f.R.n2() != d.n2 || f.C.n3() != d.n3 || f.R.n3() != d.n3 || f.U.n1() != f.R.n1() ||
        f.U.n2() != f.C.n2()) {
        throw ShapeError("rel_error: CUR factors do not match truth " + to_string(d));
    }
    const double nt = norm(truth);
    if (nt == 0.0) throw DomainError("rel_error: truth is the zero tensor");
    const auto c_hat = dft3(f.C);
    const auto g_hat = spectral_product(spectral_pinv(dft3(f.U), tol), dft3(f.R));  // |J| x n2 x n3

    double err = 0.0;
    std::vector<cplx> spec(d.n3), tube;
    Eigen::FFT<double> fft;
    std::vector<Eigen::RowVectorXcd> rows(d.n3);
    for (std::size_t i = 0; i < d.n1; ++i) {
        for (std::size_t k = 0; k < d.n3; ++k) {
            rows[k].noalias() = c_hat.slices[k].row(static_cast<Eigen::Index>(i)) * g_hat.slices[k];
        }
        for (std::size_t j = 0; j < d.n2; ++j) {
            for (std::size_t k = 0; k < d.n3; ++k) spec[k] = rows[k](static_cast<Eigen::Index>(j));
            if (d.n3 == 1) {
                tube.assign(1, spec[0]);
            } else {
                fft.inv(tube, spec);
            }
            for (std::size_t k = 0; k < d.n3; ++k) {
                const double diff = truth(i, j, k) - tube[k].real();
                err += diff * diff;
            }
        }
    }
    return std::sqrt(err) / nt;
}

}  // namespace tccs

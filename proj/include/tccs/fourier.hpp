#pragma once

#include "tccs/error.hpp"
#include "tccs/instrument.hpp"
#include "tccs/tensor.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace tccs {

using cplx = std::complex<double>;

/// Frontal slices of a tensor after an (unnormalized) DFT along mode 3.
struct SpectralSlices {
    Dims dims{};
    std::vector<Eigen::MatrixXcd> slices;
    instrument::EntryMeter meter;

    SpectralSlices() = default;
    explicit SpectralSlices(Dims d)
        : dims(d),
          slices(d.n3, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d.n1), static_cast<Eigen::Index>(d.n2))),
          meter(d.size()) {}

    /// Index of the slice that holds the complex conjugate of slice k for real input.
    [[nodiscard]] std::size_t mirror(std::size_t k) const noexcept { return (dims.n3 - k) % dims.n3; }
};

namespace detail {

inline std::uint64_t fft_cost(std::size_t n) noexcept {
    std::uint64_t lg = 0;
    while ((std::size_t{1} << lg) < n) ++lg;
    return static_cast<std::uint64_t>(n) * std::max<std::uint64_t>(lg, 1);
}

/// Imaginary mass left over by an inverse transform must be rounding noise.
inline void check_imaginary_residue(double imag_sq, double real_sq) {
    const double bound = 1e-8 * std::sqrt(real_sq) + 1e-12;
    if (std::sqrt(imag_sq) >= bound) {
        throw NumericalError("inverse DFT left an imaginary residue of " + std::to_string(std::sqrt(imag_sq)) +
                             " (bound " + std::to_string(bound) + "); spectrum is not conjugate-symmetric");
    }
}

}  // namespace detail

/// Forward DFT of every mode-3 tube. Works for any n3.
inline SpectralSlices dft3(const DenseTensor3& t) {
    const auto& d = t.dims();
    SpectralSlices s(d);
    if (d.n3 == 1) {
        if (d.size() != 0) s.slices[0] = t.slice(0).cast<cplx>();
        return s;
    }
    Eigen::FFT<double> fft;
    std::vector<double> tube(d.n3);
    std::vector<cplx> spec;
    for (std::size_t i = 0; i < d.n1; ++i) {
        for (std::size_t j = 0; j < d.n2; ++j) {
            for (std::size_t k = 0; k < d.n3; ++k) tube[k] = t(i, j, k);
            fft.fwd(spec, tube);
            for (std::size_t k = 0; k < d.n3; ++k) {
                s.slices[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec[k];
            }
        }
    }
    instrument::count_madds(d.slice_size() * detail::fft_cost(d.n3));
    return s;
}

/// Inverse of dft3 (divides by n3). The imaginary part of the result is checked
/// against 1e-8 * ||result||_F + 1e-12 and then dropped.
inline DenseTensor3 idft3(const SpectralSlices& s) {
    const auto& d = s.dims;
    DenseTensor3 t(d);
    if (d.size() == 0) return t;
    double imag_sq = 0.0;
    double real_sq = 0.0;
    if (d.n3 == 1) {
        t.slice(0) = s.slices[0].real();
        imag_sq = s.slices[0].imag().squaredNorm();
        real_sq = t.slice(0).squaredNorm();
    } else {
        Eigen::FFT<double> fft;
        std::vector<cplx> spec(d.n3), tube;
        for (std::size_t i = 0; i < d.n1; ++i) {
            for (std::size_t j = 0; j < d.n2; ++j) {
                for (std::size_t k = 0; k < d.n3; ++k) {
                    spec[k] = s.slices[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                }
                fft.inv(tube, spec);
                for (std::size_t k = 0; k < d.n3; ++k) {
                    t(i, j, k) = tube[k].real();
                    imag_sq += tube[k].imag() * tube[k].imag();
                    real_sq += tube[k].real() * tube[k].real();
                }
            }
        }
        instrument::count_madds(d.slice_size() * detail::fft_cost(d.n3));
    }
    detail::check_imaginary_residue(imag_sq, real_sq);
    return t;
}

}  // namespace tccs

#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/instrument.hpp"
#include "tccs/tensor.hpp"

#include <string>

namespace tccs {

struct ProductOptions {
    /// Compute only slices 0..n3/2 and fill the rest by conjugation. Valid
    /// because both operands are real.
    bool exploit_symmetry = false;
};

/// Slice-wise product of two spectra: out_k = a_k * b_k.
inline SpectralSlices spectral_product(const SpectralSlices& a, const SpectralSlices& b,
                                       ProductOptions opts = {}) {
    if (a.dims.n2 != b.dims.n1 || a.dims.n3 != b.dims.n3) {
        throw ShapeError("t-product: " + to_string(a.dims) + " * " + to_string(b.dims));
    }
    SpectralSlices out(Dims{a.dims.n1, b.dims.n2, a.dims.n3});
    const std::size_t n3 = a.dims.n3;
    for (std::size_t k = 0; k < n3; ++k) {
        const std::size_t m = out.mirror(k);
        if (opts.exploit_symmetry && k > m) {
            out.slices[k] = out.slices[m].conjugate();
            continue;
        }
        out.slices[k].noalias() = a.slices[k] * b.slices[k];
        instrument::count_madds(a.dims.n1 * a.dims.n2 * b.dims.n2);
    }
    return out;
}

/// t-product a * b, evaluated as per-slice complex matrix products in the
/// Fourier domain. a is n1 x n2 x n3, b is n2 x n4 x n3.
inline DenseTensor3 tprod(const DenseTensor3& a, const DenseTensor3& b, ProductOptions opts = {}) {
    if (a.n2() != b.n1() || a.n3() != b.n3()) {
        throw ShapeError("t-product: " + to_string(a.dims()) + " * " + to_string(b.dims()));
    }
    return idft3(spectral_product(dft3(a), dft3(b), opts));
}

}  // namespace tccs

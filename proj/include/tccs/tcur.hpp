#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tensor.hpp"
#include "tccs/tproduct.hpp"

#include <cmath>
#include <string>

namespace tccs {

/// t-CUR triple: C = [T]_{:,J,:}, U = [T]_{I,J,:}, R = [T]_{I,:,:}.
struct CurFactors {
    DenseTensor3 C;
    DenseTensor3 U;
    DenseTensor3 R;
    IndexSet I;
    IndexSet J;
};

inline CurFactors extract_cur(const DenseTensor3& t, const IndexSet& I, const IndexSet& J) {
    return {lateral(t, J), subtensor(t, I, J), horizontal(t, I), I, J};
}

/// C * U^+ * R.
inline DenseTensor3 cur_reconstruct(const CurFactors& f, double tol = kDefaultRankTol) {
    if (f.C.n2() != f.U.n2() || f.R.n1() != f.U.n1() || f.C.n3() != f.U.n3() || f.R.n3() != f.U.n3()) {
        throw ShapeError("cur_reconstruct: C " + to_string(f.C.dims()) + ", U " + to_string(f.U.dims()) + ", R " +
                         to_string(f.R.dims()) + " are inconsistent");
    }
    const auto c = dft3(f.C);
    const auto u_pinv = spectral_pinv(dft3(f.U), tol);
    const auto r = dft3(f.R);
    return idft3(spectral_product(c, spectral_product(u_pinv, r)));
}

struct ExactnessReport {
    bool exact = false;
    bool multirank_match = false;
    double relative_error = 0.0;
    MultiRank rank_t;
    MultiRank rank_C;
    MultiRank rank_R;
};

/// Compares the CUR reconstruction against `t` and checks the multi-rank
/// condition rank_m(C) == rank_m(R) == rank_m(T). A zero `t` counts as an
/// exact reconstruction when the reconstruction is zero too.
inline ExactnessReport check_exact(const CurFactors& f, const DenseTensor3& t, double tol = 1e-7) {
    if (f.C.n1() != t.n1() || f.R.n2() != t.n2() || f.C.n3() != t.n3()) {
        throw ShapeError("check_exact: factors do not match tensor " + to_string(t.dims()));
    }
    ExactnessReport rep;
    rep.rank_t = ranks(t);
    rep.rank_C = ranks(f.C);
    rep.rank_R = ranks(f.R);
    rep.multirank_match = rep.rank_C == rep.rank_t && rep.rank_R == rep.rank_t;
    const double nt = norm(t);
    const double diff = norm(cur_reconstruct(f) - t);
    rep.relative_error = nt > 0.0 ? diff / nt : diff;
    rep.exact = rep.relative_error <= tol;
    return rep;
}

}  // namespace tccs

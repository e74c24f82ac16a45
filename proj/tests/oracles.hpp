#pragma once

// Independent reference implementations used only by the tests: the
// block-circulant matrix route for every t-algebra quantity and a direct
// O(n3^2) DFT.

#include "tccs/sampling.hpp"
#include "tccs/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using tccs::DenseTensor3;
using tccs::Dims;

inline DenseTensor3 random_tensor(Dims d, std::uint64_t seed) {
    tccs::CounterRng rng(seed, 77);
    DenseTensor3 t(d);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

/// bcirc built entry by entry from its definition: block (a, b) is slice (a - b) mod n3.
inline Eigen::MatrixXd bcirc(const DenseTensor3& t) {
    const auto& d = t.dims();
    const auto n1 = static_cast<Eigen::Index>(d.n1), n2 = static_cast<Eigen::Index>(d.n2);
    Eigen::MatrixXd m(n1 * static_cast<Eigen::Index>(d.n3), n2 * static_cast<Eigen::Index>(d.n3));
    for (std::size_t a = 0; a < d.n3; ++a) {
        for (std::size_t b = 0; b < d.n3; ++b) {
            const std::size_t k = (a + d.n3 - b) % d.n3;
            for (std::size_t i = 0; i < d.n1; ++i) {
                for (std::size_t j = 0; j < d.n2; ++j) {
                    m(static_cast<Eigen::Index>(a) * n1 + static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(b) * n2 + static_cast<Eigen::Index>(j)) = t(i, j, k);
                }
            }
        }
    }
    return m;
}

inline Eigen::MatrixXd unfold(const DenseTensor3& t) {
    const auto& d = t.dims();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d.n1 * d.n3), static_cast<Eigen::Index>(d.n2));
    for (std::size_t k = 0; k < d.n3; ++k)
        for (std::size_t i = 0; i < d.n1; ++i)
            for (std::size_t j = 0; j < d.n2; ++j)
                m(static_cast<Eigen::Index>(k * d.n1 + i), static_cast<Eigen::Index>(j)) = t(i, j, k);
    return m;
}

inline DenseTensor3 fold(const Eigen::MatrixXd& m, Dims d) {
    DenseTensor3 t(d);
    for (std::size_t k = 0; k < d.n3; ++k)
        for (std::size_t i = 0; i < d.n1; ++i)
            for (std::size_t j = 0; j < d.n2; ++j)
                t(i, j, k) = m(static_cast<Eigen::Index>(k * d.n1 + i), static_cast<Eigen::Index>(j));
    return t;
}

/// fold(bcirc(a) * unfold(b)).
inline DenseTensor3 tprod(const DenseTensor3& a, const DenseTensor3& b) {
    return oracle::fold(oracle::bcirc(a) * oracle::unfold(b), Dims{a.n1(), b.n2(), a.n3()});
}

/// Direct DFT along mode 3: X_k = sum_l x_l exp(-2 pi i k l / n3).
inline std::vector<Eigen::MatrixXcd> dft(const DenseTensor3& t) {
    const auto& d = t.dims();
    std::vector<Eigen::MatrixXcd> out(d.n3, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d.n1),
                                                                   static_cast<Eigen::Index>(d.n2)));
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t l = 0; l < d.n3; ++l) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * l % d.n3) / static_cast<double>(d.n3);
            const std::complex<double> w(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < d.n1; ++i)
                for (std::size_t j = 0; j < d.n2; ++j)
                    out[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w * t(i, j, l);
        }
    }
    return out;
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

inline double rel_diff(const DenseTensor3& a, const DenseTensor3& b) {
    const auto x = a.values(), y = b.values();
    double num = 0, den = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        num += (x[n] - y[n]) * (x[n] - y[n]);
        den += x[n] * x[n];
    }
    return den == 0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double n = a.norm();
    return n == 0 ? (a - b).norm() : (a - b).norm() / n;
}

/// Rank-r tensor A * B via the bcirc route (independent of the library's FFT).
inline DenseTensor3 lowrank(std::size_t n1, std::size_t n2, std::size_t n3, std::size_t r, std::uint64_t seed) {
    return oracle::tprod(random_tensor(Dims{n1, r, n3}, seed), random_tensor(Dims{r, n2, n3}, seed + 1000003));
}

}  // namespace oracle

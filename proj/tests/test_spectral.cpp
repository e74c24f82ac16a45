#include "oracles.hpp"

#include "tccs/spectral.hpp"
#include "tccs/tproduct.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace tccs;

namespace {

DenseTensor3 reconstruct(const TSvdFactors& f) { return tprod(f.W, tprod(f.S, ttranspose(f.V))); }

std::vector<double> sorted_desc(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

}  // namespace

TEST(Tsvd, FDiagonalInputIsRecovered) {
    DenseTensor3 t(Dims{3, 3, 1});
    t(0, 0, 0) = 5;
    t(1, 1, 0) = 3;
    t(2, 2, 0) = 1;
    const auto f = tsvd(t);
    EXPECT_EQ(f.r, 3u);
    EXPECT_LE(oracle::rel_diff(t, f.S), 1e-14);
    const Eigen::MatrixXd w = f.W.slice(0).cwiseAbs();
    EXPECT_LE((w - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-14);
}

TEST(Tsvd, FullRankReconstruction) {
    const auto t = oracle::random_tensor(Dims{6, 5, 4}, 1);
    const auto f = tsvd(t, 5);
    EXPECT_LE(oracle::rel_diff(t, reconstruct(f)), 1e-10);
}

TEST(Tsvd, OrthogonalityAndOrdering) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t = oracle::lowrank(7, 6, 5, 3, s);
        const auto f = tsvd(t);
        ASSERT_EQ(f.r, 3u);
        EXPECT_LE(oracle::rel_diff(identity_tensor(3, 5), tprod(ttranspose(f.W), f.W)), 1e-10);
        EXPECT_LE(oracle::rel_diff(identity_tensor(3, 5), tprod(ttranspose(f.V), f.V)), 1e-10);
        EXPECT_LE(oracle::rel_diff(t, reconstruct(f)), 1e-9);
        const auto spec = dft3(f.S);
        for (const auto& sk : spec.slices) {
            const Eigen::MatrixXcd off = sk - Eigen::MatrixXcd(sk.diagonal().asDiagonal());
            EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-10);
            for (Eigen::Index q = 0; q < 3; ++q) {
                EXPECT_GE(sk(q, q).real(), -1e-12);
                EXPECT_LE(std::abs(sk(q, q).imag()), 1e-10);
                if (q > 0) EXPECT_LE(sk(q, q).real(), sk(q - 1, q - 1).real() + 1e-12);
            }
        }
    }
}

TEST(Tsvd, SingularValuesMatchBcirc) {
    const auto t = oracle::random_tensor(Dims{4, 4, 3}, 2);
    const auto svds = slice_svds(dft3(t));
    std::vector<double> ours;
    for (const auto& s : svds)
        for (Eigen::Index q = 0; q < s.sigma.size(); ++q) ours.push_back(s.sigma(q));
    const Eigen::VectorXd ref = oracle::singular_values(oracle::bcirc(t));
    std::vector<double> theirs(ref.data(), ref.data() + ref.size());
    ours = sorted_desc(ours);
    theirs = sorted_desc(theirs);
    ASSERT_EQ(ours.size(), theirs.size());
    for (std::size_t n = 0; n < ours.size(); ++n) EXPECT_NEAR(ours[n], theirs[n], 1e-10 * theirs[0]);
}

TEST(Tsvd, RankAboveMinDimRejected) {
    EXPECT_THROW(tsvd(oracle::random_tensor(Dims{3, 2, 2}, 3), 3), ParameterError);
}

TEST(Truncate, FixesLowRankAndFullRank) {
    const auto t = oracle::lowrank(6, 5, 4, 2, 4);
    EXPECT_LE(oracle::rel_diff(t, truncate_rank(t, 2)), 1e-10);
    EXPECT_LE(oracle::rel_diff(t, truncate_rank(t, 3)), 1e-10);
    const auto g = oracle::random_tensor(Dims{4, 6, 3}, 5);
    EXPECT_LE(oracle::rel_diff(g, truncate_rank(g, 4)), 1e-12);
    EXPECT_THROW(truncate_rank(g, 0), ParameterError);
    EXPECT_THROW(truncate_rank(g, 5), ParameterError);
}

TEST(Truncate, RankOneMatchesSliceBestApproximation) {
    const auto t = oracle::random_tensor(Dims{5, 5, 3}, 6);
    const auto h = truncate_rank(t, 1);
    const auto ref = oracle::dft(t);
    const auto got = oracle::dft(h);
    for (std::size_t k = 0; k < 3; ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ref[k], Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::MatrixXcd best =
            svd.singularValues()(0) * svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
        EXPECT_LE((best - got[k]).norm(), 1e-10 * ref[k].norm()) << k;
    }
}

TEST(Truncate, IdempotentAndEckartYoung) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t = oracle::random_tensor(Dims{6, 5, 4}, 10 + s);
        for (std::size_t r : {1u, 2u, 4u}) {
            const auto h = truncate_rank(t, r);
            EXPECT_LE(oracle::rel_diff(h, truncate_rank(h, r)), 1e-10);
            EXPECT_LE(ranks(h).tubal, r);
            const auto ref = oracle::dft(t);
            const auto got = oracle::dft(h);
            for (std::size_t k = 0; k < 4; ++k) {
                const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(ref[k]).singularValues();
                const double tail = sv.tail(sv.size() - static_cast<Eigen::Index>(r)).norm();
                EXPECT_NEAR((ref[k] - got[k]).norm(), tail, 1e-9 * sv(0));
            }
        }
    }
}

TEST(Ranks, Basics) {
    const auto z = ranks(DenseTensor3(Dims{3, 3, 4}));
    EXPECT_EQ(z.tubal, 0u);
    EXPECT_EQ(z.sum, 0u);
    const auto id = ranks(identity_tensor(3, 4));
    for (auto r : id.per_slice) EXPECT_EQ(r, 3u);
    EXPECT_EQ(id.sum, 12u);
    for (std::size_t r = 1; r <= 4; ++r) {
        const auto mr = ranks(oracle::lowrank(8, 7, 5, r, 20 + r));
        EXPECT_EQ(mr.tubal, r);
        EXPECT_EQ(mr.tubal, *std::max_element(mr.per_slice.begin(), mr.per_slice.end()));
        std::size_t sum = 0;
        for (auto x : mr.per_slice) sum += x;
        EXPECT_EQ(mr.sum, sum);
    }
}

TEST(Pinv, TrivialCases) {
    EXPECT_LE(oracle::rel_diff(identity_tensor(3, 4), tpinv(identity_tensor(3, 4))), 1e-12);
    DenseTensor3 tube(Dims{1, 1, 4}, {3.0, 1.0, 0.5, 0.25});
    const auto inv = tpinv(tube);
    const auto a = oracle::dft(tube), b = oracle::dft(inv);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(a[k](0, 0) * b[k](0, 0) - 1.0), 0.0, 1e-12);
}

TEST(Pinv, PenroseIdentities) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t = s == 0 ? oracle::lowrank(6, 4, 3, 2, 30) : oracle::random_tensor(Dims{5, 4, 3}, 30 + s);
        const auto p = tpinv(t);
        EXPECT_LE(oracle::rel_diff(t, tprod(tprod(t, p), t)), 1e-9);
        EXPECT_LE(oracle::rel_diff(p, tprod(tprod(p, t), p)), 1e-8);
        const auto tp = tprod(t, p), pt = tprod(p, t);
        EXPECT_LE(oracle::rel_diff(tp, ttranspose(tp)), 1e-8);
        EXPECT_LE(oracle::rel_diff(pt, ttranspose(pt)), 1e-8);
    }
}

TEST(Norms, SpectralAndCondition) {
    EXPECT_NEAR(spectral_norm(identity_tensor(4, 3)), 1.0, 1e-12);
    EXPECT_NEAR(condition_number(identity_tensor(4, 3)), 1.0, 1e-12);
    const auto t = oracle::random_tensor(Dims{4, 3, 3}, 40);
    const double ref = oracle::singular_values(oracle::bcirc(t))(0);
    EXPECT_NEAR(spectral_norm(t), ref, 1e-12 * ref);
    EXPECT_NEAR(spectral_norm(3.0 * t), 3.0 * spectral_norm(t), 1e-12 * ref);
    EXPECT_NEAR(condition_number(3.0 * t), condition_number(t), 1e-9 * condition_number(t));
    EXPECT_THROW(condition_number(DenseTensor3(Dims{2, 2, 2})), DomainError);
}

TEST(Norms, NuclearNorm) {
    EXPECT_EQ(tnn(DenseTensor3(Dims{3, 3, 2})), 0.0);
    DenseTensor3 s(Dims{3, 3, 1});
    s(0, 0, 0) = 4;
    s(1, 1, 0) = 2;
    s(2, 2, 0) = 0.5;
    EXPECT_NEAR(tnn(s), 6.5, 1e-13);
    const auto t = oracle::random_tensor(Dims{4, 4, 3}, 41);
    const double ref = oracle::singular_values(oracle::bcirc(t)).sum() / 3.0;
    EXPECT_NEAR(tnn(t), ref, 1e-11 * ref);
}

TEST(Incoherence, Extremes) {
    EXPECT_NEAR(incoherence_mu0(identity_tensor(5, 1)), 1.0, 1e-12);
    DenseTensor3 spike(Dims{3, 5, 1});
    spike(0, 2, 0) = 1.0;
    EXPECT_NEAR(incoherence_mu0(spike), 5.0, 1e-12);
    EXPECT_THROW(incoherence_mu0(DenseTensor3(Dims{3, 3, 3})), DomainError);
}

TEST(Incoherence, RangeOnGaussianLowRank) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t r = 1 + s % 3;
        const auto t = oracle::lowrank(12, 9, 4, r, 50 + s);
        const double mu = incoherence_mu0(t);
        EXPECT_GE(mu, 1.0 - 1e-12);
        EXPECT_LE(mu, 12.0 / static_cast<double>(r) + 1e-12);
    }
}

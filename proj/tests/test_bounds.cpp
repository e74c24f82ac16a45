#include "oracles.hpp"

#include "tccs/bounds.hpp"
#include "tccs/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tccs;

namespace {

BoundInputs example() {
    BoundInputs in;
    in.n1 = in.n2 = 1000;
    in.n3 = 4;
    in.r = 2;
    in.mu0 = 1.0;
    in.kappa = 1.0;
    in.beta = 1.0;
    in.rvec_inf = 2;
    in.rvec_1 = 8;
    return in;
}

std::vector<double> raw_outputs(const BoundResult& b) { return {b.size_I_raw, b.size_J_raw, b.p_R_raw, b.p_C_raw}; }

}  // namespace

TEST(Bounds, CurSliceCountExample) {
    const auto b = bounds(example(), BoundMode::tcur);
    EXPECT_NEAR(b.size_I_raw, 4.0 * std::log(8000.0), 1e-12);
    EXPECT_EQ(b.size_I, 36u);
    EXPECT_EQ(b.size_J, 36u);
    EXPECT_FALSE(b.clamped);
    EXPECT_NEAR(b.probability, 1.0 - 2.0 / 1000.0, 1e-15);
}

TEST(Bounds, BernoulliLinearInBeta) {
    auto in = example();
    in.beta = 1.5;
    const auto a = bounds(in, BoundMode::bernoulli);
    in.beta = 3.0;
    const auto b = bounds(in, BoundMode::bernoulli);
    EXPECT_NEAR(b.p_R_raw, 2.0 * a.p_R_raw, 1e-12 * a.p_R_raw);
    const double l = std::log(8000.0);
    EXPECT_NEAR(a.p_R_raw, 256.0 * 1.5 * 2000.0 * 2.0 * l * l / 1e6, 1e-9);
}

TEST(Bounds, CcsClampsOnTinyTensors) {
    BoundInputs in;
    in.n1 = in.n2 = 10;
    in.n3 = 2;
    in.r = 1;
    in.beta = 2.0;
    in.rvec_inf = 1;
    in.rvec_1 = 2;
    const auto b = bounds(in, BoundMode::ccs);
    EXPECT_GT(b.p_R_raw, 1.0);
    EXPECT_TRUE(b.clamped);
    EXPECT_EQ(b.p_R, 1.0);
    EXPECT_EQ(b.size_I, 10u);
    ASSERT_TRUE(b.probability_simplified.has_value());
    EXPECT_NEAR(*b.probability_simplified, 1.0 - 6.0 * std::log(40.0) / std::pow(20.0, 6.0), 1e-15);
}

TEST(Bounds, Rejections) {
    auto in = example();
    in.beta = 0.5;
    EXPECT_THROW(bounds(in, BoundMode::tcur), ParameterError);
    in.beta = 1.0;
    EXPECT_THROW(bounds(in, BoundMode::ccs), ParameterError);
    in.beta = 2.0;
    in.rvec_inf = 9;
    EXPECT_THROW(bounds(in, BoundMode::bernoulli), ParameterError);
    EXPECT_THROW(parse_bound_mode("cur"), ParameterError);
    EXPECT_EQ(parse_bound_mode("ccs"), BoundMode::ccs);
}

TEST(Bounds, MonotoneOverLattice) {
    for (auto mode : {BoundMode::ccs, BoundMode::tcur, BoundMode::bernoulli}) {
        for (std::size_t r : {1u, 2u, 4u}) {
            for (double mu : {1.0, 2.0, 5.0}) {
                for (double kappa : {1.0, 1.5, 3.0}) {
                    for (double beta : {1.5, 2.0, 4.0}) {
                        BoundInputs base;
                        base.n1 = 300;
                        base.n2 = 200;
                        base.n3 = 8;
                        base.r = r;
                        base.mu0 = mu;
                        base.kappa = kappa;
                        base.beta = beta;
                        base.rvec_inf = 2;
                        base.rvec_1 = 8;
                        const auto ref = raw_outputs(bounds(base, mode));
                        auto up = [&](auto mutate) {
                            BoundInputs in = base;
                            mutate(in);
                            const auto v = raw_outputs(bounds(in, mode));
                            for (std::size_t q = 0; q < v.size(); ++q) EXPECT_GE(v[q], ref[q]);
                        };
                        up([](BoundInputs& in) { in.r *= 2; });
                        up([](BoundInputs& in) { in.mu0 *= 1.5; });
                        up([](BoundInputs& in) { in.kappa *= 1.5; });
                        up([](BoundInputs& in) { in.beta += 0.5; });
                    }
                }
            }
        }
    }
}

TEST(Incoherence, FullSelection) {
    const auto t = gen_lowrank(12, 10, 3, 2, 1);
    const auto rep = subtensor_incoherence_check(t, IndexSet::full(12), IndexSet::full(10));
    ASSERT_TRUE(rep.applicable);
    EXPECT_EQ(rep.mu_C, rep.mu0);
    EXPECT_GE(rep.bound_C, rep.mu0);
    EXPECT_GE(rep.bound_R, rep.mu0);
    EXPECT_TRUE(rep.holds_C);
    EXPECT_TRUE(rep.holds_R);
}

TEST(Incoherence, TransferOnRandomDraws) {
    int applicable = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto t = gen_lowrank(40, 40, 4, 2, 10 + s);
        CounterRng rng(s, 2);
        const auto I = detail::draw_indices(40, 10, false, rng);
        const auto J = detail::draw_indices(40, 10, false, rng);
        const auto rep = subtensor_incoherence_check(t, I, J);
        if (!rep.applicable) continue;
        ++applicable;
        EXPECT_TRUE(rep.holds_C) << s;
        EXPECT_TRUE(rep.holds_R) << s;
    }
    EXPECT_EQ(applicable, 20);
}

TEST(Incoherence, RankDropIsInapplicable) {
    // Columns 0..4 of B vanish in the third direction, so C drops to rank 2.
    auto a = oracle::random_tensor(Dims{20, 3, 3}, 20);
    auto b = oracle::random_tensor(Dims{3, 20, 3}, 21);
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 3; ++k) b(2, j, k) = 0.0;
    const auto t = oracle::tprod(a, b);
    const auto rep = subtensor_incoherence_check(t, IndexSet::full(20), IndexSet({0, 1, 2, 3, 4}, 20));
    EXPECT_FALSE(rep.applicable);
    EXPECT_THROW(subtensor_incoherence_check(DenseTensor3(Dims{3, 3, 1}), IndexSet({0}, 3), IndexSet({0}, 3)),
                 DomainError);
}

#include "oracles.hpp"

#include "tccs/experiments.hpp"
#include "tccs/itcurtc.hpp"
#include "tccs/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace tccs;

namespace {

CcsPlan sampled(const DenseTensor3& t, std::size_t a, std::size_t b, double p, std::uint64_t seed) {
    CounterRng rng(seed, 1);
    return capture(t, make_ccs_plan(t.dims(), a, b, p, p, false, rng));
}

// H_r through the direct DFT and per-slice Jacobi SVD.
DenseTensor3 oracle_truncate(const DenseTensor3& t, std::size_t r) {
    const auto& d = t.dims();
    auto spec = oracle::dft(t);
    for (auto& s : spec) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto q = static_cast<Eigen::Index>(std::min<std::size_t>(r, svd.singularValues().size()));
        s = svd.matrixU().leftCols(q) * svd.singularValues().head(q).cast<std::complex<double>>().asDiagonal() *
            svd.matrixV().leftCols(q).adjoint();
    }
    DenseTensor3 out(d);
    for (std::size_t l = 0; l < d.n3; ++l) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d.n1), static_cast<Eigen::Index>(d.n2));
        for (std::size_t k = 0; k < d.n3; ++k) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * l % d.n3) / static_cast<double>(d.n3);
            acc += std::complex<double>(std::cos(ang), std::sin(ang)) * spec[k];
        }
        out.slice(l) = acc.real() / static_cast<double>(d.n3);
    }
    return out;
}

}  // namespace

TEST(StoppingE, HandCases) {
    CcsPlan plan;
    plan.dims = Dims{2, 2, 1};
    plan.I = IndexSet({0, 1}, 2);
    plan.J = IndexSet({0, 1}, 2);
    plan.omega_R = {plan.dims, {{0, 0, 0, 1.0}, {0, 1, 0, 2.0}, {1, 0, 0, 3.0}, {1, 1, 0, 4.0}}, true, true};
    plan.omega_C = {plan.dims, {}, true, true};
    DenseTensor3 t(Dims{2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
    EXPECT_EQ(stopping_e(plan, t), 0.0);
    EXPECT_EQ(stopping_e(plan, DenseTensor3(t.dims())), 1.0);
    // Matching the two large entries leaves (1 + 4) / 30 of the energy.
    DenseTensor3 half(Dims{2, 2, 1}, {0.0, 0.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(stopping_e(plan, half), 5.0 / 30.0);
    // Equal magnitudes: matching half the entries gives exactly one half.
    plan.omega_R.entries = {{0, 0, 0, 2.0}, {0, 1, 0, -2.0}, {1, 0, 0, 2.0}, {1, 1, 0, 2.0}};
    DenseTensor3 even(Dims{2, 2, 1}, {2.0, -2.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(stopping_e(plan, even), 0.5);
    plan.omega_R.entries = {{0, 0, 0, 0.0}};
    EXPECT_THROW(stopping_e(plan, even), DomainError);
}

TEST(StoppingE, UnionCountedOnce) {
    const auto t = oracle::random_tensor(Dims{8, 8, 2}, 1);
    const auto plan = sampled(t, 3, 3, 0.7, 2);
    const auto om = plan.omega();
    const DenseTensor3 est = 0.5 * t;
    double num = 0, den = 0;
    for (const auto& e : om.entries) {
        num += 0.25 * e.value * e.value;
        den += e.value * e.value;
    }
    EXPECT_NEAR(stopping_e(plan, est), num / den, 1e-14);
}

TEST(Itcurtc, FullObservationConvergesImmediately) {
    const auto t = gen_lowrank(12, 10, 4, 2, 3);
    const auto plan = sampled(t, 12, 10, 1.0, 4);
    SolverConfig cfg;
    cfg.r = 2;
    const auto res = itcurtc(plan, cfg, &t);
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE(res.report.iterations, 5u);
    EXPECT_LE(res.report.eps_history.back(), 1e-6);
    EXPECT_LE(rel_error(t, res.factors), 1e-6);
    EXPECT_DOUBLE_EQ(res.report.eps_history.front(), 1.0);
}

TEST(Itcurtc, DeskScaleRecovery) {
    const Dims d{60, 60, 16};
    const std::size_t a = slab_size(0.35, 60);
    const double p = probability_for_rate(d, a, a, 0.25);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto t = gen_lowrank(60, 60, 16, 2, s);
        const auto plan = sampled(t, a, a, p, s);
        SolverConfig cfg;
        cfg.r = 2;
        const auto res = itcurtc(plan, cfg);
        EXPECT_LE(rel_error(t, res.factors), 1e-3) << "seed " << s;
    }
}

TEST(Itcurtc, ZeroObservations) {
    const auto t = gen_lowrank(10, 10, 3, 1, 5);
    const auto plan = sampled(t, 3, 3, 0.0, 6);
    SolverConfig cfg;
    const auto res = itcurtc(plan, cfg);
    EXPECT_FALSE(res.report.converged);
    EXPECT_EQ(res.report.iterations, 0u);
    EXPECT_EQ(norm(res.factors.C) + norm(res.factors.U) + norm(res.factors.R), 0.0);
}

TEST(Itcurtc, RejectsBadConfig) {
    const auto t = gen_lowrank(10, 10, 3, 1, 7);
    const auto plan = sampled(t, 3, 4, 0.5, 8);
    SolverConfig cfg;
    cfg.r = 4;
    try {
        itcurtc(plan, cfg);
        FAIL();
    } catch (const ParameterError& e) {
        EXPECT_NE(std::string(e.what()).find("--rank"), std::string::npos);
    }
    cfg.r = 0;
    EXPECT_THROW(itcurtc(plan, cfg), ParameterError);
    cfg.r = 1;
    cfg.tol = 0;
    EXPECT_THROW(itcurtc(plan, cfg), ParameterError);
}

TEST(Itcurtc, DivergenceNamesSteps) {
    const auto t = gen_lowrank(20, 20, 3, 2, 9);
    const auto plan = sampled(t, 6, 6, 0.5, 10);
    SolverConfig cfg;
    cfg.r = 2;
    cfg.eta_R = cfg.eta_C = cfg.eta_U = 50.0;
    try {
        itcurtc(plan, cfg);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("eta_R=50"), std::string::npos);
    }
}

TEST(Itcurtc, TraceFormat) {
    const auto t = gen_lowrank(12, 12, 2, 1, 11);
    const auto plan = sampled(t, 4, 4, 0.8, 12);
    std::ostringstream out;
    SolverConfig cfg;
    cfg.max_iter = 3;
    cfg.trace = true;
    cfg.trace_sink = &out;
    const auto res = itcurtc(plan, cfg, &t);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "k,e_k,eps_k");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2) << line;
        ++rows;
    }
    EXPECT_EQ(rows, res.report.iterations);
    EXPECT_EQ(res.report.e_history.size(), res.report.iterations);
}

TEST(ItcurtcStep, TruthIsFixedPoint) {
    const auto t = gen_lowrank(20, 18, 4, 2, 13);
    const auto plan = sampled(t, 6, 5, 0.5, 14);
    const ItcurtcProblem prob(plan);
    auto s = ItcurtcState::from_factors(prob, horizontal(t, plan.I), lateral(t, plan.J),
                                        subtensor(t, plan.I, plan.J), 2);
    const auto before = s;
    SolverConfig cfg;
    cfg.r = 2;
    itcurtc_step(s, prob, cfg);
    EXPECT_LE(oracle::rel_diff(before.R, s.R), 1e-10);
    EXPECT_LE(oracle::rel_diff(before.C, s.C), 1e-10);
    EXPECT_LE(oracle::rel_diff(before.U, s.U), 1e-10);
    EXPECT_LE(detail::state_e(prob, s), 1e-20);
}

TEST(ItcurtcStep, FirstStepTruncatesObservedBlock) {
    const auto t = gen_lowrank(15, 14, 3, 2, 15);
    const auto plan = sampled(t, 5, 6, 0.6, 16);
    const ItcurtcProblem prob(plan);
    auto s = ItcurtcState::zero(prob);
    SolverConfig cfg;
    cfg.r = 2;
    cfg.eta_R = cfg.eta_C = cfg.eta_U = 1.0;
    itcurtc_step(s, prob, cfg);
    const auto block = subtensor(project(t, plan.omega()), plan.I, plan.J);
    const auto expect = oracle_truncate(block, 2);
    EXPECT_LE(oracle::rel_diff(expect, s.U), 1e-10);
    EXPECT_LE(ranks(s.U).tubal, 2u);
    EXPECT_EQ(horizontal(s.C, plan.I), s.U);
    EXPECT_EQ(lateral(s.R, plan.J), s.U);
}

TEST(ItcurtcStep, IteratesStayLowRank) {
    const auto t = gen_lowrank(24, 24, 4, 2, 17);
    const auto plan = sampled(t, 8, 8, 0.5, 18);
    const ItcurtcProblem prob(plan);
    auto s = ItcurtcState::zero(prob);
    SolverConfig cfg;
    cfg.r = 2;
    for (int k = 0; k < 10; ++k) {
        itcurtc_step(s, prob, cfg);
        EXPECT_LE(ranks(s.U).tubal, 2u);
    }
}

TEST(ItcurtcStep, WorkDoublesWithN2) {
    // n1 small so the r |I| n2 n3 term dominates.
    auto work = [](std::size_t n2) {
        const auto t = gen_lowrank(8, n2, 8, 2, 19);
        const auto plan = sampled(t, 4, 4, 0.5, 20);
        SolverConfig cfg;
        cfg.r = 2;
        cfg.max_iter = 3;
        return static_cast<double>(itcurtc(plan, cfg).report.madds_per_iteration.back());
    };
    const double w1 = work(400), w2 = work(800);
    EXPECT_NEAR(w2 / w1, 2.0, 0.2);
}

TEST(Itcurtc, MemoryCeiling) {
    const auto t = gen_lowrank(120, 120, 8, 2, 21);
    const auto plan = sampled(t, 12, 12, 0.5, 22);
    SolverConfig cfg;
    cfg.r = 2;
    cfg.max_iter = 5;
    const auto res = itcurtc(plan, cfg);
    const std::size_t ceiling = 4 * (12 * 120 * 8 + 12 * 120 * 8 + plan.omega().size());
    EXPECT_LE(res.report.peak_entries, ceiling);
    EXPECT_LT(res.report.peak_entries, t.size());
}

TEST(Itcurtc, MonotoneTrendWhenWellSampled) {
    const Dims d{60, 60, 16};
    const std::size_t a = slab_size(0.35, 60);
    const double p = probability_for_rate(d, a, a, 0.25);
    int monotone = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto t = gen_lowrank(60, 60, 16, 2, s);
        const auto plan = sampled(t, a, a, p, s);
        SolverConfig cfg;
        cfg.r = 2;
        cfg.tol = 1e-30;
        cfg.max_iter = 201;
        cfg.eps_tol = 1e-6;
        const auto res = itcurtc(plan, cfg, &t);
        const auto& e = res.report.e_history;
        bool ok = true;
        for (std::size_t k = 6; k < e.size(); ++k) ok = ok && e[k] <= e[k - 1];
        monotone += ok;
        EXPECT_LE(res.report.eps_history.back(), 1e-6) << "seed " << s;
    }
    EXPECT_GE(monotone, 9);
}

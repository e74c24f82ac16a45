#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/instrument.hpp"
#include "tccs/metrics.hpp"
#include "tccs/sampling.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tcur.hpp"
#include "tccs/tensor.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tccs {

struct SolverConfig {
    std::size_t r = 1;
    /// Step sizes; zero selects the defaults p_R^-0.9, p_C^-0.9 and 1/p_U,
    /// where p_U = 1 - (1 - p_R)(1 - p_C) is the chance that a coordinate of
    /// the I x J block is observed by either mask.
    double eta_R = 0.0;
    double eta_C = 0.0;
    double eta_U = 0.0;
    /// Stop once e_k <= tol.
    double tol = 1e-12;
    std::size_t max_iter = 500;
    /// Also stop once the ground-truth error eps_k drops to this value (only
    /// meaningful when a truth tensor is supplied).
    std::optional<double> eps_tol;
    /// Divergence: e_k > divergence_factor * e_0 for divergence_window straight iterations.
    std::size_t divergence_window = 10;
    double divergence_factor = 10.0;
    bool trace = false;
    std::ostream* trace_sink = nullptr;

    void validate() const {
        if (r < 1) throw ParameterError("solver: target rank r must be >= 1");
        if (!(tol > 0.0)) throw ParameterError("solver: tol must be positive");
        if (max_iter < 1) throw ParameterError("solver: max_iter must be >= 1");
        if (eta_R < 0.0 || eta_C < 0.0 || eta_U < 0.0) throw ParameterError("solver: step sizes must be positive");
    }
};

struct SolverReport {
    /// Number of e_k evaluations, k = 0 .. iterations-1.
    std::size_t iterations = 0;
    std::vector<double> e_history;
    std::vector<double> eps_history;
    std::vector<std::uint64_t> madds_per_iteration;
    bool converged = false;
    double wall_seconds = 0.0;
    double eta_R = 0.0;
    double eta_C = 0.0;
    double eta_U = 0.0;
    /// Live tensor entries above the starting level, peak over the run.
    std::size_t peak_entries = 0;
};

/// Observation layout of a plan in slab coordinates, built once per solve.
///
/// The observed set splits into three disjoint groups: Omega_R entries outside
/// the J columns, Omega_C entries outside the I rows, and the union of both on
/// the I x J block (each coordinate once).
class ItcurtcProblem {
public:
    struct Entry {
        std::uint32_t i;
        std::uint32_t j;
        std::uint32_t k;
        double value;
    };

    explicit ItcurtcProblem(const CcsPlan& plan) : plan_(&plan) {
        if (!plan.has_values()) throw ParameterError("itcurtc: plan has no observed values; capture it first");
        plan.validate();
        const auto& d = plan.dims;
        Ic_ = plan.I.complement();
        Jc_ = plan.J.complement();
        rows_of_.assign(d.n1, {});
        cols_of_.assign(d.n2, {});
        for (std::size_t a = 0; a < plan.I.size(); ++a) rows_of_[plan.I[a]].push_back(static_cast<std::uint32_t>(a));
        for (std::size_t b = 0; b < plan.J.size(); ++b) cols_of_[plan.J[b]].push_back(static_cast<std::uint32_t>(b));
        ic_pos_.assign(d.n1, 0);
        jc_pos_.assign(d.n2, 0);
        for (std::size_t q = 0; q < Ic_.size(); ++q) ic_pos_[Ic_[q]] = static_cast<std::uint32_t>(q);
        for (std::size_t q = 0; q < Jc_.size(); ++q) jc_pos_[Jc_[q]] = static_cast<std::uint32_t>(q);

        const auto in_j = plan.J.mask();
        const auto in_i = plan.I.mask();
        ObservationSet u_r{d, {}, true, true}, u_c{d, {}, true, true};
        for (const auto& e : plan.omega_R.entries) {
            if (in_j[e.j]) {
                u_r.entries.push_back(e);
            } else {
                r_block_.push_back({e.i, e.j, e.k, e.value});
            }
        }
        for (const auto& e : plan.omega_C.entries) {
            if (in_i[e.i]) {
                u_c.entries.push_back(e);
            } else {
                c_block_.push_back({e.i, e.j, e.k, e.value});
            }
        }
        for (const auto& e : merge_union(u_r, u_c).entries) u_block_.push_back({e.i, e.j, e.k, e.value});
        for (const auto* g : {&r_block_, &c_block_, &u_block_}) {
            for (const auto& e : *g) energy_ += e.value * e.value;
        }
    }

    [[nodiscard]] const CcsPlan& plan() const noexcept { return *plan_; }
    [[nodiscard]] const Dims& dims() const noexcept { return plan_->dims; }
    [[nodiscard]] const IndexSet& I() const noexcept { return plan_->I; }
    [[nodiscard]] const IndexSet& J() const noexcept { return plan_->J; }
    [[nodiscard]] const IndexSet& Ic() const noexcept { return Ic_; }
    [[nodiscard]] const IndexSet& Jc() const noexcept { return Jc_; }
    [[nodiscard]] const std::vector<std::uint32_t>& rows_of(std::size_t i) const { return rows_of_[i]; }
    [[nodiscard]] const std::vector<std::uint32_t>& cols_of(std::size_t j) const { return cols_of_[j]; }
    [[nodiscard]] std::uint32_t ic_pos(std::size_t i) const { return ic_pos_[i]; }
    [[nodiscard]] std::uint32_t jc_pos(std::size_t j) const { return jc_pos_[j]; }
    [[nodiscard]] const std::vector<Entry>& r_block() const noexcept { return r_block_; }
    [[nodiscard]] const std::vector<Entry>& c_block() const noexcept { return c_block_; }
    [[nodiscard]] const std::vector<Entry>& u_block() const noexcept { return u_block_; }
    [[nodiscard]] std::size_t observed() const noexcept { return r_block_.size() + c_block_.size() + u_block_.size(); }
    /// <P_Omega(T), T> over Omega_R union Omega_C.
    [[nodiscard]] double observed_energy() const noexcept { return energy_; }

private:
    const CcsPlan* plan_;
    IndexSet Ic_, Jc_;
    std::vector<std::vector<std::uint32_t>> rows_of_, cols_of_;
    std::vector<std::uint32_t> ic_pos_, jc_pos_;
    std::vector<Entry> r_block_, c_block_, u_block_;
    double energy_ = 0.0;
};

/// Iterate of the cross-concentrated solver.
///
/// R (|I| x n2 x n3), C (n1 x |J| x n3) and U (|I| x |J| x n3) are the current
/// factors. est_R = [T_k]_{I,:,:} and est_C = [T_k]_{:,J,:} are the estimate
/// restricted to the two slabs; everything the iteration reads lives there.
struct ItcurtcState {
    DenseTensor3 R;
    DenseTensor3 C;
    DenseTensor3 U;
    DenseTensor3 est_R;
    DenseTensor3 est_C;
    std::size_t k = 0;

    /// T_0 = 0.
    static ItcurtcState zero(const ItcurtcProblem& prob) {
        const auto& d = prob.dims();
        const Dims rd{prob.I().size(), d.n2, d.n3}, cd{d.n1, prob.J().size(), d.n3};
        return {DenseTensor3(rd), DenseTensor3(cd), DenseTensor3(Dims{prob.I().size(), prob.J().size(), d.n3}),
                DenseTensor3(rd), DenseTensor3(cd), 0};
    }

    /// State whose estimate is C * U^+ * R restricted to the slabs.
    static ItcurtcState from_factors(const ItcurtcProblem& prob, DenseTensor3 R, DenseTensor3 C, DenseTensor3 U,
                                     std::size_t r);

    [[nodiscard]] CurFactors factors(const IndexSet& I, const IndexSet& J) const { return {C, U, R, I, J}; }
};

namespace detail {

/// Writes W W^H [R]_{:,J^c,:} into est_R and V V^H applied to [C]_{I^c,:,:}
/// into est_C, with U on the shared block; W, V are the retained spectral
/// singular vectors of U.
inline void assemble_estimate(const ItcurtcProblem& prob, ItcurtcState& s, const TruncatedSpectrum& tu) {
    const auto& d = prob.dims();
    const auto& I = prob.I();
    const auto& J = prob.J();
    const auto& Ic = prob.Ic();
    const auto& Jc = prob.Jc();

    s.est_R = DenseTensor3(s.R.dims());
    s.est_C = DenseTensor3(s.C.dims());
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t a = 0; a < I.size(); ++a) {
            for (std::size_t b = 0; b < J.size(); ++b) {
                s.est_R(a, J[b], k) = s.U(a, b, k);
                s.est_C(I[a], b, k) = s.U(a, b, k);
            }
        }
    }
    if (!Jc.indices().empty() && !I.indices().empty()) {
        auto spec = dft3(lateral(s.R, Jc));
        for (std::size_t k = 0; k < d.n3; ++k) {
            const auto& w = tu.left[k];
            const Eigen::MatrixXcd coef = w.adjoint() * spec.slices[k];
            spec.slices[k].noalias() = w * coef;
            instrument::count_madds(2ull * static_cast<std::uint64_t>(w.rows() * w.cols() * spec.slices[k].cols()));
        }
        const auto block = idft3(spec);
        for (std::size_t k = 0; k < d.n3; ++k) {
            for (std::size_t a = 0; a < I.size(); ++a) {
                for (std::size_t q = 0; q < Jc.size(); ++q) s.est_R(a, Jc[q], k) = block(a, q, k);
            }
        }
    }
    if (!Ic.indices().empty() && !J.indices().empty()) {
        auto spec = dft3(horizontal(s.C, Ic));
        for (std::size_t k = 0; k < d.n3; ++k) {
            const auto& v = tu.right[k];
            const Eigen::MatrixXcd coef = spec.slices[k] * v;
            spec.slices[k].noalias() = coef * v.adjoint();
            instrument::count_madds(2ull * static_cast<std::uint64_t>(v.rows() * v.cols() * spec.slices[k].rows()));
        }
        const auto block = idft3(spec);
        for (std::size_t k = 0; k < d.n3; ++k) {
            for (std::size_t q = 0; q < Ic.size(); ++q) {
                for (std::size_t b = 0; b < J.size(); ++b) s.est_C(Ic[q], b, k) = block(q, b, k);
            }
        }
    }
}

/// [T_k] at an observed coordinate, read from the slab estimate.
inline double estimate_at(const ItcurtcProblem& prob, const ItcurtcState& s, std::size_t i, std::size_t j,
                          std::size_t k) {
    const auto& rows = prob.rows_of(i);
    if (!rows.empty()) return s.est_R(rows.front(), j, k);
    return s.est_C(i, prob.cols_of(j).front(), k);
}

}  // namespace detail

inline ItcurtcState ItcurtcState::from_factors(const ItcurtcProblem& prob, DenseTensor3 R, DenseTensor3 C,
                                               DenseTensor3 U, std::size_t r) {
    ItcurtcState s{std::move(R), std::move(C), std::move(U), {}, {}, 0};
    const auto tu = spectral_truncate(dft3(s.U), r);
    detail::assemble_estimate(prob, s, tu);
    return s;
}

/// Read-only view of the estimate on the two slabs, for stopping_e.
struct EstimateBlocks {
    const DenseTensor3& rows;  // [T_k]_{I,:,:}
    const DenseTensor3& cols;  // [T_k]_{:,J,:}
};

/// e_k = <P_Omega(T - T_k), T - T_k> / <P_Omega(T), T> over Omega_R union
/// Omega_C, evaluated on observed coordinates only.
inline double stopping_e(const CcsPlan& plan, const EstimateBlocks& est) {
    if (!plan.has_values()) throw ParameterError("stopping_e: plan has no observed values");
    const auto& d = plan.dims;
    if (est.rows.dims() != Dims{plan.I.size(), d.n2, d.n3} || est.cols.dims() != Dims{d.n1, plan.J.size(), d.n3}) {
        throw ShapeError("stopping_e: estimate blocks do not match the plan slabs");
    }
    std::vector<std::int64_t> row_pos(d.n1, -1), col_pos(d.n2, -1);
    for (std::size_t a = plan.I.size(); a-- > 0;) row_pos[plan.I[a]] = static_cast<std::int64_t>(a);
    for (std::size_t b = plan.J.size(); b-- > 0;) col_pos[plan.J[b]] = static_cast<std::int64_t>(b);
    double num = 0.0, den = 0.0;
    for (const auto& e : plan.omega().entries) {
        const double est_v = row_pos[e.i] >= 0 ? est.rows(static_cast<std::size_t>(row_pos[e.i]), e.j, e.k)
                                               : est.cols(e.i, static_cast<std::size_t>(col_pos[e.j]), e.k);
        num += (e.value - est_v) * (e.value - est_v);
        den += e.value * e.value;
    }
    if (den == 0.0) throw DomainError("stopping_e: observed data are all zero");
    return num / den;
}

/// Dense-estimate form of stopping_e.
inline double stopping_e(const CcsPlan& plan, const DenseTensor3& estimate) {
    if (estimate.dims() != plan.dims) throw ShapeError("stopping_e: estimate does not match the plan dims");
    const auto rows = horizontal(estimate, plan.I);
    const auto cols = lateral(estimate, plan.J);
    return stopping_e(plan, EstimateBlocks{rows, cols});
}

namespace detail {

inline double state_e(const ItcurtcProblem& prob, const ItcurtcState& s) {
    double num = 0.0;
    for (const auto* g : {&prob.r_block(), &prob.c_block(), &prob.u_block()}) {
        for (const auto& e : *g) {
            const double res = e.value - estimate_at(prob, s, e.i, e.j, e.k);
            num += res * res;
        }
    }
    instrument::count_madds(prob.observed());
    return num / prob.observed_energy();
}

inline constexpr double kSlabStepExponent = 0.9;

struct Steps {
    double eta_R, eta_C, eta_U;
};

inline Steps resolve_steps(const CcsPlan& plan, const SolverConfig& cfg) {
    auto inv = [](double p) { return p > 0.0 ? 1.0 / p : 1.0; };
    auto damped = [](double p) { return p > 0.0 ? std::pow(p, -kSlabStepExponent) : 1.0; };
    return {cfg.eta_R > 0.0 ? cfg.eta_R : damped(plan.p_R), cfg.eta_C > 0.0 ? cfg.eta_C : damped(plan.p_C),
            cfg.eta_U > 0.0 ? cfg.eta_U : inv(1.0 - (1.0 - plan.p_R) * (1.0 - plan.p_C))};
}

inline void require_rank(const CcsPlan& plan, std::size_t r) {
    const std::size_t cap = std::min(plan.I.size(), plan.J.size());
    if (r > cap) {
        throw ParameterError("target rank r = " + std::to_string(r) + " exceeds min(|I|, |J|) = " +
                             std::to_string(cap) + "; lower --rank or sample more slices (larger --delta)");
    }
}

}  // namespace detail

/// One iteration: residual updates of the R and C complement blocks, truncated
/// update of U on the I x J block, U copied into R and C, then the slab
/// estimate rebuilt from the new factors.
inline void itcurtc_step(ItcurtcState& s, const ItcurtcProblem& prob, const SolverConfig& cfg) {
    const auto steps = detail::resolve_steps(prob.plan(), cfg);
    const auto& d = prob.dims();
    const auto& I = prob.I();
    const auto& J = prob.J();

    DenseTensor3 R = s.est_R;
    DenseTensor3 C = s.est_C;
    DenseTensor3 U(Dims{I.size(), J.size(), d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t a = 0; a < I.size(); ++a) {
            for (std::size_t b = 0; b < J.size(); ++b) U(a, b, k) = s.est_R(a, J[b], k);
        }
    }
    for (const auto& e : prob.r_block()) {
        const auto& rows = prob.rows_of(e.i);
        const double res = e.value - s.est_R(rows.front(), e.j, e.k);
        for (auto a : rows) R(a, e.j, e.k) += steps.eta_R * res;
    }
    for (const auto& e : prob.c_block()) {
        const auto& cols = prob.cols_of(e.j);
        const double res = e.value - s.est_C(e.i, cols.front(), e.k);
        for (auto b : cols) C(e.i, b, e.k) += steps.eta_C * res;
    }
    for (const auto& e : prob.u_block()) {
        const auto& rows = prob.rows_of(e.i);
        const auto& cols = prob.cols_of(e.j);
        const double res = e.value - s.est_R(rows.front(), e.j, e.k);
        for (auto a : rows) {
            for (auto b : cols) U(a, b, e.k) += steps.eta_U * res;
        }
    }
    instrument::count_madds(prob.observed());

    const auto tu = spectral_truncate(dft3(U), cfg.r);
    U = idft3(tu.approx);
    for (std::size_t k = 0; k < d.n3; ++k) {
        for (std::size_t a = 0; a < I.size(); ++a) {
            for (std::size_t b = 0; b < J.size(); ++b) {
                R(a, J[b], k) = U(a, b, k);
                C(I[a], b, k) = U(a, b, k);
            }
        }
    }
    s.R = std::move(R);
    s.C = std::move(C);
    s.U = std::move(U);
    detail::assemble_estimate(prob, s, tu);
    ++s.k;
}

/// Convenience overload that rebuilds the observation layout from the plan.
inline void itcurtc_step(ItcurtcState& s, const CcsPlan& plan, const SolverConfig& cfg) {
    const ItcurtcProblem prob(plan);
    itcurtc_step(s, prob, cfg);
}

struct ItcurtcResult {
    CurFactors factors;
    SolverReport report;
};

/// Iterative t-CUR completion from cross-concentrated samples, starting at
/// T_0 = 0 and iterating until e_k <= cfg.tol (or eps_k <= cfg.eps_tol when a
/// truth tensor is given) or cfg.max_iter evaluations.
inline ItcurtcResult itcurtc(const CcsPlan& plan, const SolverConfig& cfg, const DenseTensor3* truth = nullptr) {
    cfg.validate();
    detail::require_rank(plan, cfg.r);
    if (truth && truth->dims() != plan.dims) throw ShapeError("itcurtc: truth does not match the plan dims");

    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t live0 = instrument::live_entries();
    instrument::reset_peak();

    const ItcurtcProblem prob(plan);
    auto s = ItcurtcState::zero(prob);
    SolverReport rep;
    const auto steps = detail::resolve_steps(plan, cfg);
    rep.eta_R = steps.eta_R;
    rep.eta_C = steps.eta_C;
    rep.eta_U = steps.eta_U;

    std::ostream* sink = cfg.trace ? cfg.trace_sink : nullptr;
    if (sink) *sink << (truth ? "k,e_k,eps_k\n" : "k,e_k\n");

    auto finish = [&]() {
        rep.iterations = rep.e_history.size();
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.peak_entries = instrument::peak_entries() - std::min(live0, instrument::peak_entries());
        return ItcurtcResult{s.factors(plan.I, plan.J), std::move(rep)};
    };

    if (prob.observed() == 0 || prob.observed_energy() == 0.0) return finish();

    std::size_t over = 0;
    while (true) {
        const std::uint64_t m0 = instrument::madds();
        const double e = detail::state_e(prob, s);
        rep.e_history.push_back(e);
        std::optional<double> eps;
        if (truth) {
            eps = s.k == 0 ? 1.0 : rel_error(*truth, s.factors(plan.I, plan.J));
            rep.eps_history.push_back(*eps);
        }
        if (sink) {
            *sink << s.k << ',' << e;
            if (eps) *sink << ',' << *eps;
            *sink << '\n';
        }
        if (e <= cfg.tol || (eps && cfg.eps_tol && *eps <= *cfg.eps_tol)) {
            rep.converged = true;
            break;
        }
        over = e > cfg.divergence_factor * rep.e_history.front() ? over + 1 : 0;
        if (over >= cfg.divergence_window) {
            std::ostringstream msg;
            msg << "itcurtc diverged: e_k exceeded " << cfg.divergence_factor << " * e_0 for " << over
                << " iterations with step sizes eta_R=" << steps.eta_R << " eta_C=" << steps.eta_C
                << " eta_U=" << steps.eta_U;
            throw DivergenceError(msg.str());
        }
        if (rep.e_history.size() >= cfg.max_iter) break;
        itcurtc_step(s, prob, cfg);
        rep.madds_per_iteration.push_back(instrument::madds() - m0);
    }
    return finish();
}

}  // namespace tccs

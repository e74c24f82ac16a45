#pragma once

#include "tccs/error.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace tccs {

/// Inputs of the sampling-complexity formulas. All logarithms are natural.
struct BoundInputs {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t n3 = 0;
    std::size_t r = 0;
    double mu0 = 1.0;
    double kappa = 1.0;
    double beta = 2.0;
    double rvec_inf = 0.0;
    double rvec_1 = 0.0;
    /// Slab sizes at which the t-CCS probability bounds are evaluated;
    /// default n1 and n2.
    std::optional<std::size_t> size_I;
    std::optional<std::size_t> size_J;

    void validate() const {
        if (n1 == 0 || n2 == 0 || n3 == 0) throw ParameterError("bounds: dims must be positive");
        if (!(mu0 > 0.0) || !(kappa > 0.0)) throw ParameterError("bounds: mu0 and kappa must be positive");
        if (!(beta >= 1.0)) throw ParameterError("bounds: beta must be >= 1");
        if (rvec_inf < 0.0 || rvec_1 < 0.0 || rvec_inf > rvec_1) {
            throw ParameterError("bounds: need 0 <= rvec_inf <= rvec_1");
        }
        if ((size_I && (*size_I == 0 || *size_I > n1)) || (size_J && (*size_J == 0 || *size_J > n2))) {
            throw ParameterError("bounds: slab sizes must lie in [1, n]");
        }
    }
};

enum class BoundMode { ccs, tcur, bernoulli };

inline BoundMode parse_bound_mode(const std::string& s) {
    if (s == "ccs") return BoundMode::ccs;
    if (s == "tcur") return BoundMode::tcur;
    if (s == "bernoulli") return BoundMode::bernoulli;
    throw ParameterError("unknown bound mode '" + s + "' (expected ccs, tcur or bernoulli)");
}

/// Raw formula values plus their clamp into the feasible range.
struct BoundResult {
    BoundMode mode = BoundMode::ccs;
    double size_I_raw = 0.0;
    double size_J_raw = 0.0;
    std::size_t size_I = 0;
    std::size_t size_J = 0;
    double p_R_raw = 0.0;
    double p_C_raw = 0.0;
    double p_R = 0.0;
    double p_C = 0.0;
    bool clamped = false;
    /// Success-probability lower bound, unclamped (may be negative).
    double probability = 0.0;
    /// Equal-size closed form, reported for ccs when n1 == n2.
    std::optional<double> probability_simplified;
};

namespace detail {

inline std::size_t clamp_count(double raw, std::size_t hi, bool& clamped) {
    const double c = std::ceil(raw);
    if (c > static_cast<double>(hi)) {
        clamped = true;
        return hi;
    }
    return static_cast<std::size_t>(std::max(c, 0.0));
}

inline double clamp_prob(double raw, bool& clamped) {
    if (raw > 1.0) {
        clamped = true;
        return 1.0;
    }
    return raw;
}

}  // namespace detail

inline BoundResult bounds(const BoundInputs& in, BoundMode mode) {
    in.validate();
    const double n1 = static_cast<double>(in.n1), n2 = static_cast<double>(in.n2), n3 = static_cast<double>(in.n3);
    const double r = static_cast<double>(in.r);
    const double b = in.beta;
    BoundResult out;
    out.mode = mode;
    switch (mode) {
    case BoundMode::tcur: {
        out.size_I_raw = 2.0 * b * in.mu0 * in.rvec_inf * std::log(n1 * in.rvec_1);
        out.size_J_raw = 2.0 * b * in.mu0 * in.rvec_inf * std::log(n2 * in.rvec_1);
        out.size_I = detail::clamp_count(out.size_I_raw, in.n1, out.clamped);
        out.size_J = detail::clamp_count(out.size_J_raw, in.n2, out.clamped);
        out.p_R_raw = out.p_C_raw = out.p_R = out.p_C = 1.0;
        out.probability = 1.0 - std::pow(n1, -b) - std::pow(n2, -b);
        break;
    }
    case BoundMode::bernoulli: {
        const double big = n1 * n3 + n2 * n3;
        const double l = std::log(big);
        out.p_R_raw = 256.0 * b * (n1 + n2) * in.mu0 * r * l * l / (n1 * n2);
        out.p_C_raw = out.p_R_raw;
        out.p_R = detail::clamp_prob(out.p_R_raw, out.clamped);
        out.p_C = out.p_R;
        out.size_I_raw = n1;
        out.size_J_raw = n2;
        out.size_I = in.n1;
        out.size_J = in.n2;
        out.probability = 1.0 - 3.0 * l / std::pow(big, 4.0 * b - 2.0);
        break;
    }
    case BoundMode::ccs: {
        if (!(b > 1.0)) throw ParameterError("bounds: the cross-concentrated bound needs beta > 1");
        const double k2 = in.kappa * in.kappa;
        const double big = n1 * n3 + n2 * n3;
        const double l = std::log(big);
        out.size_I_raw = 3200.0 * b * in.mu0 * r * k2 * l * l;
        out.size_J_raw = out.size_I_raw;
        out.size_I = detail::clamp_count(out.size_I_raw, in.n1, out.clamped);
        out.size_J = detail::clamp_count(out.size_J_raw, in.n2, out.clamped);
        const double si = static_cast<double>(in.size_I.value_or(in.n1));
        const double sj = static_cast<double>(in.size_J.value_or(in.n2));
        const double lp = std::log((n1 + n2) * n3);
        out.p_R_raw = 1600.0 * (si + n2) * in.mu0 * r * k2 * lp * lp / (si * n2);
        out.p_C_raw = 1600.0 * (sj + n1) * in.mu0 * r * k2 * lp * lp / (sj * n1);
        out.p_R = detail::clamp_prob(out.p_R_raw, out.clamped);
        out.p_C = detail::clamp_prob(out.p_C_raw, out.clamped);
        const double e = 4.0 * b - 2.0;
        const double a_c = n1 * n3 + sj * n3;
        const double a_r = n2 * n3 + si * n3;
        out.probability = 1.0 - std::pow(big, -800.0 * b * k2 * std::log(n2)) -
                          std::pow(big, -800.0 * b * k2 * std::log(n1)) - 3.0 * std::log(a_c) / std::pow(a_c, e) -
                          3.0 * std::log(a_r) / std::pow(a_r, e);
        if (in.n1 == in.n2) {
            const double nn = n1 * n3;
            out.probability_simplified = 1.0 - 6.0 * std::log(2.0 * nn) / std::pow(nn, e);
        }
        break;
    }
    }
    return out;
}

struct IncoherenceReport {
    /// False when C or R loses multi-rank; the bounds then do not apply.
    bool applicable = false;
    std::size_t r = 0;
    double mu0 = 0.0;
    double kappa = 0.0;
    double mu_C = 0.0;
    double mu_R = 0.0;
    /// kappa^2 ||[V]_{J,:,:}^+||^2 (|J| / n2) mu0 and the I analogue with W.
    double bound_C = 0.0;
    double bound_R = 0.0;
    bool holds_C = false;
    bool holds_R = false;
    /// (25/4) kappa^2 mu0, valid when the slab-count conditions hold.
    double uniform_bound = 0.0;
    bool uniform_conditions = false;
    bool uniform_holds_C = false;
    bool uniform_holds_R = false;
};

/// Empirical incoherence of C = [T]_{:,J,:} and R = [T]_{I,:,:} against the
/// transfer bounds. `beta` enters only the uniform-sampling slab-count test.
inline IncoherenceReport subtensor_incoherence_check(const DenseTensor3& t, const IndexSet& I, const IndexSet& J,
                                                     double beta = 1.0) {
    if (I.bound() != t.n1() || J.bound() != t.n2()) {
        throw ShapeError("subtensor_incoherence_check: index sets do not match " + to_string(t.dims()));
    }
    IncoherenceReport rep;
    const auto mr = ranks(t);
    if (mr.tubal == 0) throw DomainError("subtensor_incoherence_check: zero tensor");
    rep.r = mr.tubal;
    const auto c = lateral(t, J);
    const auto rr = horizontal(t, I);
    if (!(ranks(c) == mr) || !(ranks(rr) == mr)) return rep;
    rep.applicable = true;

    const auto f = tsvd(t, rep.r);
    rep.mu0 = incoherence_mu0(t, rep.r);
    rep.kappa = condition_number(t);
    rep.mu_C = incoherence_mu0(c, rep.r);
    rep.mu_R = incoherence_mu0(rr, rep.r);
    const double k2 = rep.kappa * rep.kappa;
    const double vj = spectral_norm(tpinv(horizontal(f.V, J)));
    const double wi = spectral_norm(tpinv(horizontal(f.W, I)));
    rep.bound_C = k2 * vj * vj * static_cast<double>(J.size()) / static_cast<double>(t.n2()) * rep.mu0;
    rep.bound_R = k2 * wi * wi * static_cast<double>(I.size()) / static_cast<double>(t.n1()) * rep.mu0;
    rep.holds_C = rep.mu_C <= rep.bound_C;
    rep.holds_R = rep.mu_R <= rep.bound_R;

    double r_inf = 0.0, r_1 = 0.0;
    for (auto v : mr.per_slice) {
        r_inf = std::max(r_inf, static_cast<double>(v));
        r_1 += static_cast<double>(v);
    }
    rep.uniform_bound = 25.0 / 4.0 * k2 * rep.mu0;
    const double need_I = 2.0 * beta * rep.mu0 * r_inf * std::log(static_cast<double>(t.n1()) * r_1);
    const double need_J = 2.0 * beta * rep.mu0 * r_inf * std::log(static_cast<double>(t.n2()) * r_1);
    rep.uniform_conditions = static_cast<double>(I.size()) >= need_I && static_cast<double>(J.size()) >= need_J;
    rep.uniform_holds_C = rep.mu_C <= rep.uniform_bound;
    rep.uniform_holds_R = rep.mu_R <= rep.uniform_bound;
    return rep;
}

}  // namespace tccs

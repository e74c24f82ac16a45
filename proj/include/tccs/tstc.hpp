#pragma once

#include "tccs/error.hpp"
#include "tccs/fourier.hpp"
#include "tccs/sampling.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tcur.hpp"
#include "tccs/tensor.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

namespace tccs {

struct IhtOptions {
    /// Step size; zero means (observed fraction)^-0.9.
    double eta = 0.0;
    /// Stop once ||P_Omega(T - X)||_F / ||P_Omega(T)||_F <= tol.
    double tol = 1e-8;
    std::size_t max_iter = 500;
    std::size_t divergence_window = 10;
    double divergence_factor = 10.0;
};

/// Iterative hard thresholding X <- H_r(X + eta P_Omega(T - X)) from X = 0.
inline DenseTensor3 iht_complete(const ObservationSet& obs, std::size_t r, IhtOptions opts = {}) {
    const auto& d = obs.dims;
    if (r < 1) throw ParameterError("iht_complete: rank must be >= 1");
    if (r > std::min(d.n1, d.n2)) {
        throw ParameterError("iht_complete: rank " + std::to_string(r) + " exceeds slab " + to_string(d));
    }
    if (obs.entries.empty()) throw ParameterError("iht_complete: no observations");
    if (!obs.has_values) throw ParameterError("iht_complete: observations carry no values");
    const double frac = static_cast<double>(obs.size()) / static_cast<double>(d.size());
    const double eta = opts.eta > 0.0 ? opts.eta : std::pow(frac, -0.9);

    double energy = 0.0;
    for (const auto& e : obs.entries) energy += e.value * e.value;
    if (energy == 0.0) return DenseTensor3(d);

    DenseTensor3 x(d);
    double first = -1.0;
    std::size_t over = 0;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        DenseTensor3 step = x;
        double res2 = 0.0;
        for (const auto& e : obs.entries) {
            const double res = e.value - x(e.i, e.j, e.k);
            res2 += res * res;
            step(e.i, e.j, e.k) += eta * res;
        }
        const double rel = std::sqrt(res2 / energy);
        if (rel <= opts.tol) break;
        if (first < 0.0) first = rel;
        over = rel > opts.divergence_factor * first ? over + 1 : 0;
        if (over >= opts.divergence_window) {
            std::ostringstream msg;
            msg << "iht_complete diverged with step size eta=" << eta;
            throw DivergenceError(msg.str());
        }
        x = idft3(spectral_truncate(dft3(step), r).approx);
    }
    return x;
}

/// Completes a slab from (local observations, rank).
using SubSolver = std::function<DenseTensor3(const ObservationSet&, std::size_t)>;

inline SubSolver default_subsolver(IhtOptions opts = {}) {
    return [opts](const ObservationSet& obs, std::size_t r) { return iht_complete(obs, r, opts); };
}

namespace detail {

/// Observations of one slab re-indexed to local coordinates; positions lists
/// every local row (column) that maps to each global index.
inline ObservationSet to_local_rows(const ObservationSet& omega, const IndexSet& I, std::size_t n2, std::size_t n3) {
    std::vector<std::vector<std::uint32_t>> pos(I.bound());
    for (std::size_t a = 0; a < I.size(); ++a) pos[I[a]].push_back(static_cast<std::uint32_t>(a));
    ObservationSet out{Dims{I.size(), n2, n3}, {}, true, omega.has_values};
    for (const auto& e : omega.entries) {
        for (auto a : pos[e.i]) out.entries.push_back({a, e.j, e.k, e.value});
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const auto& x, const auto& y) { return x.key() < y.key(); });
    return out;
}

inline ObservationSet to_local_cols(const ObservationSet& omega, const IndexSet& J, std::size_t n1, std::size_t n3) {
    std::vector<std::vector<std::uint32_t>> pos(J.bound());
    for (std::size_t b = 0; b < J.size(); ++b) pos[J[b]].push_back(static_cast<std::uint32_t>(b));
    ObservationSet out{Dims{n1, J.size(), n3}, {}, true, omega.has_values};
    for (const auto& e : omega.entries) {
        for (auto b : pos[e.j]) out.entries.push_back({e.i, b, e.k, e.value});
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const auto& x, const auto& y) { return x.key() < y.key(); });
    return out;
}

template <typename Fn>
DenseTensor3 run_slab(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string("slab ") + name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("slab ") + name + ": " + e.what());
    } catch (const ParameterError& e) {
        throw ParameterError(std::string("slab ") + name + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(std::string("slab ") + name + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(std::string("slab ") + name + ": " + e.what());
    }
}

}  // namespace detail

/// Two-step completion: each slab is completed on its own observations, then
/// the pair is glued with t-CUR using U = [C~]_{I,:,:}.
inline DenseTensor3 tstc(const CcsPlan& plan, std::size_t r, const SubSolver& subsolver) {
    if (!plan.has_values()) throw ParameterError("tstc: plan has no observed values; capture it first");
    plan.validate();
    const auto& d = plan.dims;
    const Dims rd{plan.I.size(), d.n2, d.n3}, cd{d.n1, plan.J.size(), d.n3};
    auto r_tilde = detail::run_slab("R", [&] {
        auto out = subsolver(detail::to_local_rows(plan.omega_R, plan.I, d.n2, d.n3), r);
        if (out.dims() != rd) throw ShapeError("sub-solver returned " + to_string(out.dims()));
        return out;
    });
    auto c_tilde = detail::run_slab("C", [&] {
        auto out = subsolver(detail::to_local_cols(plan.omega_C, plan.J, d.n1, d.n3), r);
        if (out.dims() != cd) throw ShapeError("sub-solver returned " + to_string(out.dims()));
        return out;
    });
    CurFactors f{std::move(c_tilde), DenseTensor3(Dims{plan.I.size(), plan.J.size(), d.n3}), std::move(r_tilde),
                 plan.I, plan.J};
    f.U = horizontal(f.C, plan.I);
    return cur_reconstruct(f);
}

}  // namespace tccs

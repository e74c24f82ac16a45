#pragma once

#include "tccs/error.hpp"
#include "tccs/io.hpp"
#include "tccs/itcurtc.hpp"
#include "tccs/metrics.hpp"
#include "tccs/sampling.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tensor.hpp"
#include "tccs/tproduct.hpp"
#include "tccs/tstc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace tccs {

/// A * B with A (n1 x r x n3) and B (r x n2 x n3) iid standard Gaussian,
/// drawn from stream 0 of `seed` (A first, then B, slice-major order).
inline DenseTensor3 gen_lowrank(std::size_t n1, std::size_t n2, std::size_t n3, std::size_t r, std::uint64_t seed) {
    if (r < 1 || r > std::min(n1, n2)) {
        throw ParameterError("gen_lowrank: rank " + std::to_string(r) + " outside [1, " +
                             std::to_string(std::min(n1, n2)) + "]");
    }
    CounterRng rng(seed, 0);
    DenseTensor3 a(Dims{n1, r, n3}), b(Dims{r, n2, n3});
    for (double& v : a.values()) v = rng.normal();
    for (double& v : b.values()) v = rng.normal();
    auto t = tprod(a, b);
    const auto tubal = ranks(t).tubal;
    if (tubal != r) {
        throw NumericalError("gen_lowrank: product has tubal rank " + std::to_string(tubal) + ", expected " +
                             std::to_string(r));
    }
    return t;
}

enum class ExperimentKind { phase, convergence };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::phase;
    Dims dims{60, 60, 16};
    std::vector<std::size_t> ranks{2};
    std::vector<double> deltas{0.35};
    /// Slab probability grid. When empty, `alphas` is used instead and p is
    /// solved from each target overall rate.
    std::vector<double> probs;
    std::vector<double> alphas;
    std::size_t trials = 25;
    std::uint64_t seed = 0;
    /// Success threshold on the final eps.
    double success_tol = 1e-3;
    /// Truth-error stopping level for convergence runs.
    double eps_tol = 1e-6;
    /// Solver stopping threshold on e_k.
    double solver_tol = 1e-12;
    std::size_t max_iter = 500;
    std::size_t threads = 1;

    void validate() const {
        if (ranks.empty() || deltas.empty() || (probs.empty() && alphas.empty())) {
            throw ParameterError("experiment: rank, delta and p (or alpha) grids must be non-empty");
        }
        if (trials < 1) throw ParameterError("experiment: trials must be >= 1");
        if (dims.size() == 0) throw ParameterError("experiment: dims must be positive");
        for (double d : deltas) {
            if (!(d > 0.0 && d <= 1.0)) throw ParameterError("experiment: delta " + format_double(d) + " not in (0, 1]");
        }
        for (double p : probs) {
            if (!(p > 0.0 && p <= 1.0)) throw ParameterError("experiment: p " + format_double(p) + " not in (0, 1]");
        }
        for (double a : alphas) {
            if (!(a > 0.0 && a <= 1.0)) throw ParameterError("experiment: alpha " + format_double(a) + " not in (0, 1]");
        }
        if (max_iter < 1) throw ParameterError("experiment: max_iter must be >= 1");
    }
};

/// Slab size for a fraction delta of n, at least one.
inline std::size_t slab_size(double delta, std::size_t n) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(delta * static_cast<double>(n))), 1, n);
}

struct Cell {
    std::size_t r = 0;
    double delta = 0.0;
    double p = 0.0;
};

struct TrialOutcome {
    double alpha = 0.0;
    double eps = std::numeric_limits<double>::infinity();
    bool success = false;
    std::size_t iterations = 0;
    std::vector<double> eps_history;
};

struct CellResult {
    Cell cell;
    double alpha_mean = 0.0;
    std::size_t successes = 0;
    std::size_t trials = 0;
    std::vector<TrialOutcome> outcomes;
};

namespace detail {

/// Runs fn(0..count-1) on `threads` workers. Each index is handled exactly
/// once; results must be written by index so the output does not depend on
/// scheduling.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t n = 0; n < count; ++n) fn(n);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t n; (n = next.fetch_add(1)) < count;) {
                if (failed.load()) return;
                try {
                    fn(n);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::vector<Cell> cells_of(const ExperimentConfig& cfg) {
    std::vector<Cell> out;
    for (auto r : cfg.ranks) {
        for (double d : cfg.deltas) {
            if (!cfg.probs.empty()) {
                for (double p : cfg.probs) out.push_back({r, d, p});
            } else {
                const auto si = slab_size(d, cfg.dims.n1), sj = slab_size(d, cfg.dims.n2);
                for (double a : cfg.alphas) out.push_back({r, d, probability_for_rate(cfg.dims, si, sj, a)});
            }
        }
    }
    return out;
}

/// One (tensor, plan, solve) triple. Without eps tracking (phase sweeps)
/// solver errors count as failures; convergence runs propagate them.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t seed, bool track_eps) {
    TrialOutcome out;
    const auto& d = cfg.dims;
    const auto truth = gen_lowrank(d.n1, d.n2, d.n3, cell.r, seed);
    CounterRng rng(seed, 1);
    const auto plan = capture(truth, make_ccs_plan(d, slab_size(cell.delta, d.n1), slab_size(cell.delta, d.n2),
                                                   cell.p, cell.p, false, rng));
    out.alpha = overall_rate(plan);
    SolverConfig sc;
    sc.r = cell.r;
    sc.max_iter = cfg.max_iter;
    if (track_eps) {
        sc.tol = std::numeric_limits<double>::min();
        sc.eps_tol = cfg.eps_tol;
    } else {
        sc.tol = cfg.solver_tol;
    }
    try {
        auto res = itcurtc(plan, sc, track_eps ? &truth : nullptr);
        out.iterations = res.report.iterations;
        out.eps = track_eps && !res.report.eps_history.empty() ? res.report.eps_history.back()
                                                               : rel_error(truth, res.factors);
        out.eps_history = std::move(res.report.eps_history);
    } catch (const Error&) {
        if (track_eps) throw;
        out.eps = std::numeric_limits<double>::infinity();
    }
    out.success = out.eps <= cfg.success_tol;
    return out;
}

}  // namespace detail

/// Phase-transition sweep; trial t of cell c uses derive_seed(cfg.seed, c, t).
inline std::vector<CellResult> run_phase_transition(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = detail::cells_of(cfg);
    std::vector<TrialOutcome> outcomes(cells.size() * cfg.trials);
    detail::parallel_for(outcomes.size(), cfg.threads, [&](std::size_t n) {
        const std::size_t c = n / cfg.trials, t = n % cfg.trials;
        outcomes[n] = detail::run_trial(cfg, cells[c], derive_seed(cfg.seed, c, t), false);
    });
    std::vector<CellResult> out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellResult cr;
        cr.cell = cells[c];
        cr.trials = cfg.trials;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            auto& o = outcomes[c * cfg.trials + t];
            cr.alpha_mean += o.alpha;
            cr.successes += o.success ? 1 : 0;
            cr.outcomes.push_back(std::move(o));
        }
        cr.alpha_mean /= static_cast<double>(cfg.trials);
        out.push_back(std::move(cr));
    }
    return out;
}

inline std::string phase_csv(const std::vector<CellResult>& rows) {
    std::string s = "r,delta,p,alpha_mean,successes,trials\n";
    for (const auto& c : rows) {
        s += format_int(c.cell.r) + "," + format_double(c.cell.delta) + "," + format_double(c.cell.p) + "," +
             format_double(c.alpha_mean) + "," + format_int(c.successes) + "," + format_int(c.trials) + "\n";
    }
    return s;
}

struct ConvergenceResult {
    Cell cell;
    /// Mean eps_k over trials; a trial that stopped early contributes its last
    /// value to later k.
    std::vector<double> eps_mean;
    std::vector<TrialOutcome> outcomes;
};

/// Mean eps_k curve for the first cell of the grid, one trial per seed.
inline ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cell = detail::cells_of(cfg).front();
    ConvergenceResult out;
    out.cell = cell;
    out.outcomes.resize(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        out.outcomes[t] = detail::run_trial(cfg, cell, derive_seed(cfg.seed, 0, t), true);
    });
    std::size_t len = 0;
    for (const auto& o : out.outcomes) len = std::max(len, o.eps_history.size());
    out.eps_mean.assign(len, 0.0);
    for (const auto& o : out.outcomes) {
        if (o.eps_history.empty()) throw ParameterError("run_convergence: a trial had no observations");
        for (std::size_t k = 0; k < len; ++k) out.eps_mean[k] += o.eps_history[std::min(k, o.eps_history.size() - 1)];
    }
    for (double& v : out.eps_mean) v /= static_cast<double>(cfg.trials);
    return out;
}

inline std::string convergence_csv(const ConvergenceResult& res) {
    std::string s = "k,eps_mean\n";
    for (std::size_t k = 0; k < res.eps_mean.size(); ++k) s += format_int(k) + "," + format_double(res.eps_mean[k]) + "\n";
    return s;
}

/// Least-squares line through (k, log eps_k); returns slope and R^2.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_log_linear(const std::vector<double>& eps, std::size_t first, std::size_t last) {
    if (last <= first + 1 || last > eps.size()) throw ParameterError("fit_log_linear: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(last - first);
    for (std::size_t k = first; k < last; ++k) {
        const double x = static_cast<double>(k), y = std::log(eps[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    LineFit f;
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    f.slope = cxy / vx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

enum class SolverKind { itcurtc, tstc };

struct CompletionJob {
    std::size_t r = 1;
    SolverKind solver = SolverKind::itcurtc;
    SolverConfig itcurtc_cfg{};
    IhtOptions iht{};
    /// Dense assembly is refused above this many entries.
    std::size_t dense_cap = 50'000'000;
    bool dense = false;
};

struct CompletionResult {
    std::optional<CurFactors> factors;
    std::optional<DenseTensor3> dense;
    std::optional<SolverReport> report;
    /// Relative error when a truth tensor is supplied.
    std::optional<double> eps;
};

/// End-to-end completion of an observed plan. tstc always returns a dense
/// estimate, so it is subject to the same size cap.
inline CompletionResult run_complete(const CcsPlan& plan, const CompletionJob& job, const DenseTensor3* truth = nullptr) {
    if (truth && truth->dims() != plan.dims) throw ShapeError("run_complete: truth does not match the plan");
    const bool needs_dense = job.dense || job.solver == SolverKind::tstc;
    if (needs_dense && plan.dims.size() > job.dense_cap) {
        throw ParameterError("dense output of " + to_string(plan.dims) + " exceeds the cap of " +
                             format_int(job.dense_cap) + " entries; raise --dense-cap or keep factor output");
    }
    CompletionResult out;
    if (job.solver == SolverKind::itcurtc) {
        auto cfg = job.itcurtc_cfg;
        cfg.r = job.r;
        auto res = itcurtc(plan, cfg, cfg.trace ? truth : nullptr);
        if (truth) out.eps = rel_error(*truth, res.factors);
        if (job.dense) out.dense = cur_reconstruct(res.factors);
        out.factors = std::move(res.factors);
        out.report = std::move(res.report);
    } else {
        detail::require_rank(plan, job.r);
        out.dense = tstc(plan, job.r, default_subsolver(job.iht));
        if (truth) out.eps = rel_error(*truth, *out.dense);
    }
    return out;
}

}  // namespace tccs

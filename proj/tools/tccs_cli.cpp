#include "tccs/bounds.hpp"
#include "tccs/error.hpp"
#include "tccs/experiments.hpp"
#include "tccs/io.hpp"
#include "tccs/itcurtc.hpp"
#include "tccs/metrics.hpp"
#include "tccs/sampling.hpp"
#include "tccs/spectral.hpp"
#include "tccs/tstc.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace tccs;

enum Exit { kOk = 0, kParam = 2, kIo = 3, kNumerical = 4 };

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    detail::write_all(path, text.data(), text.size());
}

Dims dims_from(const std::vector<std::size_t>& v) {
    if (v.size() != 3) throw ParameterError("--dims needs three values n1,n2,n3");
    return {v[0], v[1], v[2]};
}

struct GenArgs {
    std::vector<std::size_t> dims{60, 60, 16};
    std::size_t rank = 2;
    std::uint64_t seed = 0;
    std::string out;
};

struct SampleArgs {
    std::string tensor;
    double delta = 0.35;
    std::optional<std::size_t> size_i, size_j;
    double prob_r = 0.5, prob_c = 0.5;
    std::uint64_t seed = 0;
    bool replacement = false;
    std::string out;
};

struct SolveArgs {
    std::string plan;
    std::size_t rank = 2;
    std::string solver = "itcurtc";
    double tol = 1e-12;
    std::size_t max_iter = 500;
    double eta_r = 0, eta_c = 0, eta_u = 0;
    std::string truth;
    bool dense = false;
    std::size_t dense_cap = 50'000'000;
    std::string trace;
    std::string out;
    std::string report;
};

struct PhaseArgs {
    std::vector<std::size_t> dims{60, 60, 16};
    std::vector<std::size_t> ranks{2, 5, 7};
    std::vector<double> deltas{0.15, 0.25, 0.35, 0.5};
    std::vector<double> probs{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> alphas;
    std::size_t trials = 25;
    std::uint64_t seed = 0;
    double tol = 1e-12;
    std::size_t max_iter = 500;
    std::size_t threads = 1;
    std::string out;
};

struct ConvergeArgs {
    std::vector<std::size_t> dims{60, 60, 16};
    std::size_t rank = 2;
    double delta = 0.3;
    double alpha = 0.25;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    double eps_tol = 1e-6;
    std::size_t max_iter = 500;
    std::size_t threads = 1;
    std::string out;
};

struct BoundArgs {
    std::string mode = "ccs";
    std::vector<std::size_t> dims;
    std::string tensor;
    std::size_t rank = 0;
    double mu0 = 1, kappa = 1, beta = 2;
    double rvec_inf = 0, rvec_1 = 0;
    std::optional<std::size_t> size_i, size_j;
    std::string out;
};

struct MetricArgs {
    std::string truth;
    std::string estimate;
    std::string out;
};

int cmd_gen(const GenArgs& a) {
    const auto d = dims_from(a.dims);
    write_tensor(a.out, gen_lowrank(d.n1, d.n2, d.n3, a.rank, a.seed));
    return kOk;
}

int cmd_sample(const SampleArgs& a) {
    const auto t = read_tensor(a.tensor);
    const auto si = a.size_i.value_or(slab_size(a.delta, t.n1()));
    const auto sj = a.size_j.value_or(slab_size(a.delta, t.n2()));
    CounterRng rng(a.seed, 1);
    const auto plan = capture(t, make_ccs_plan(t.dims(), si, sj, a.prob_r, a.prob_c, a.replacement, rng));
    write_plan(a.out, plan);
    std::cerr << "observed " << plan.omega().size() << " of " << t.size()
              << " entries, alpha=" << format_double(overall_rate(plan)) << "\n";
    return kOk;
}

int cmd_solve(const SolveArgs& a) {
    const auto plan = read_plan(a.plan);
    std::optional<DenseTensor3> truth;
    if (!a.truth.empty()) truth = read_tensor(a.truth);
    CompletionJob job;
    job.r = a.rank;
    if (a.solver == "itcurtc") {
        job.solver = SolverKind::itcurtc;
    } else if (a.solver == "tstc") {
        job.solver = SolverKind::tstc;
    } else {
        throw ParameterError("unknown --solver '" + a.solver + "' (expected itcurtc or tstc)");
    }
    job.dense = a.dense;
    job.dense_cap = a.dense_cap;
    job.itcurtc_cfg.tol = a.tol;
    job.itcurtc_cfg.max_iter = a.max_iter;
    job.itcurtc_cfg.eta_R = a.eta_r;
    job.itcurtc_cfg.eta_C = a.eta_c;
    job.itcurtc_cfg.eta_U = a.eta_u;
    job.iht.max_iter = a.max_iter;
    std::ofstream trace_file;
    if (!a.trace.empty()) {
        job.itcurtc_cfg.trace = true;
        if (a.trace == "-") {
            job.itcurtc_cfg.trace_sink = &std::cerr;
        } else {
            trace_file.open(a.trace);
            if (!trace_file) throw IoError("cannot open trace file '" + a.trace + "'");
            job.itcurtc_cfg.trace_sink = &trace_file;
        }
    }
    const auto res = run_complete(plan, job, truth ? &*truth : nullptr);
    if (!a.out.empty()) {
        if (res.dense) {
            write_tensor(a.out, *res.dense);
        } else {
            write_tensor(a.out + ".C.t3d", res.factors->C);
            write_tensor(a.out + ".U.t3d", res.factors->U);
            write_tensor(a.out + ".R.t3d", res.factors->R);
        }
    }
    std::string rep = "solver,iterations,converged,e_final,eps,wall_seconds,multiply_adds\n";
    rep += a.solver + ",";
    if (res.report) {
        const auto& r = *res.report;
        std::uint64_t total = 0;
        for (auto m : r.madds_per_iteration) total += m;
        rep += format_int(r.iterations) + "," + (r.converged ? "1" : "0") + "," +
               (r.e_history.empty() ? std::string("nan") : format_double(r.e_history.back())) + ",";
        rep += (res.eps ? format_double(*res.eps) : "nan") + "," + format_double(r.wall_seconds) + "," +
               format_int(total) + "\n";
    } else {
        rep += ",,,";
        rep += (res.eps ? format_double(*res.eps) : "nan") + ",,\n";
    }
    emit(rep, a.report);
    return kOk;
}

int cmd_phase(const PhaseArgs& a) {
    ExperimentConfig cfg;
    cfg.dims = dims_from(a.dims);
    cfg.ranks = a.ranks;
    cfg.deltas = a.deltas;
    if (!a.alphas.empty()) {
        cfg.alphas = a.alphas;
        cfg.probs.clear();
    } else {
        cfg.probs = a.probs;
    }
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.solver_tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.threads = a.threads;
    emit(phase_csv(run_phase_transition(cfg)), a.out);
    return kOk;
}

int cmd_converge(const ConvergeArgs& a) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::convergence;
    cfg.dims = dims_from(a.dims);
    cfg.ranks = {a.rank};
    cfg.deltas = {a.delta};
    cfg.alphas = {a.alpha};
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.eps_tol = a.eps_tol;
    cfg.max_iter = a.max_iter;
    cfg.threads = a.threads;
    emit(convergence_csv(run_convergence(cfg)), a.out);
    return kOk;
}

int cmd_bounds(const BoundArgs& a) {
    BoundInputs in;
    in.mu0 = a.mu0;
    in.kappa = a.kappa;
    in.beta = a.beta;
    in.r = a.rank;
    in.rvec_inf = a.rvec_inf;
    in.rvec_1 = a.rvec_1;
    in.size_I = a.size_i;
    in.size_J = a.size_j;
    if (!a.tensor.empty()) {
        // Measure the tensor statistics instead of taking them from flags.
        const auto t = read_tensor(a.tensor);
        const auto mr = ranks(t);
        in.n1 = t.n1();
        in.n2 = t.n2();
        in.n3 = t.n3();
        in.r = mr.tubal;
        in.mu0 = incoherence_mu0(t);
        in.kappa = condition_number(t);
        in.rvec_inf = static_cast<double>(mr.tubal);
        in.rvec_1 = static_cast<double>(mr.sum);
    } else {
        const auto d = dims_from(a.dims);
        in.n1 = d.n1;
        in.n2 = d.n2;
        in.n3 = d.n3;
    }
    if (in.rvec_inf == 0 && in.rvec_1 == 0) {
        in.rvec_inf = static_cast<double>(in.r);
        in.rvec_1 = static_cast<double>(in.r * in.n3);
    }
    const auto b = bounds(in, parse_bound_mode(a.mode));
    std::string s = "quantity,raw,value\n";
    s += "size_I," + format_double(b.size_I_raw) + "," + format_int(b.size_I) + "\n";
    s += "size_J," + format_double(b.size_J_raw) + "," + format_int(b.size_J) + "\n";
    s += "p_R," + format_double(b.p_R_raw) + "," + format_double(b.p_R) + "\n";
    s += "p_C," + format_double(b.p_C_raw) + "," + format_double(b.p_C) + "\n";
    s += "probability," + format_double(b.probability) + "," + format_double(std::clamp(b.probability, 0.0, 1.0)) + "\n";
    if (b.probability_simplified) {
        s += "probability_simplified," + format_double(*b.probability_simplified) + "," +
             format_double(std::clamp(*b.probability_simplified, 0.0, 1.0)) + "\n";
    }
    s += std::string("clamped,,") + (b.clamped ? "1" : "0") + "\n";
    emit(s, a.out);
    return kOk;
}

int cmd_metrics(const MetricArgs& a) {
    const auto t = read_tensor(a.truth);
    const auto e = read_tensor(a.estimate);
    std::string s = "psnr,ssim,rel_error\n";
    s += format_double(psnr(t, e)) + "," + format_double(ssim_avg(t, e)) + "," + format_double(rel_error(t, e)) + "\n";
    emit(s, a.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-tubal-rank tensor completion from cross-concentrated samples"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Write a random low-tubal-rank tensor A * B");
    g->add_option("--dims", gen.dims, "n1,n2,n3")->delimiter(',')->expected(3);
    g->add_option("--rank", gen.rank, "Tubal rank");
    g->add_option("--seed", gen.seed, "RNG seed");
    g->add_option("--out", gen.out, "Output tensor file")->required();

    SampleArgs smp;
    auto* s = app.add_subcommand("sample", "Draw a cross-concentrated sampling plan from a tensor");
    s->add_option("--tensor", smp.tensor, "Input tensor file")->required();
    s->add_option("--delta", smp.delta, "Slab fraction |I|/n1 = |J|/n2");
    s->add_option("--size-i", smp.size_i, "|I| (overrides --delta)");
    s->add_option("--size-j", smp.size_j, "|J| (overrides --delta)");
    s->add_option("--prob-r", smp.prob_r, "Bernoulli probability on the horizontal slab");
    s->add_option("--prob-c", smp.prob_c, "Bernoulli probability on the lateral slab");
    s->add_option("--seed", smp.seed, "RNG seed");
    s->add_flag("--replacement", smp.replacement, "Draw slab indices with replacement");
    s->add_option("--out", smp.out, "Output plan file")->required();

    SolveArgs sol;
    auto* v = app.add_subcommand("solve", "Complete a tensor from a plan file");
    v->add_option("--plan", sol.plan, "Plan file with values")->required();
    v->add_option("--rank", sol.rank, "Target tubal rank");
    v->add_option("--solver", sol.solver, "itcurtc or tstc");
    v->add_option("--tol", sol.tol, "Stop when e_k <= tol");
    v->add_option("--max-iter", sol.max_iter, "Iteration cap");
    v->add_option("--eta-r", sol.eta_r, "Step size on R (0 = p_R^-0.9)");
    v->add_option("--eta-c", sol.eta_c, "Step size on C (0 = p_C^-0.9)");
    v->add_option("--eta-u", sol.eta_u, "Step size on U (0 = 1/p_U)");
    v->add_option("--truth", sol.truth, "Ground-truth tensor for the relative error");
    v->add_flag("--dense", sol.dense, "Write the assembled dense estimate");
    v->add_option("--dense-cap", sol.dense_cap, "Refuse dense output above this many entries");
    v->add_option("--trace", sol.trace, "Per-iteration CSV trace file ('-' for stderr)");
    v->add_option("--out", sol.out, "Output tensor file, or prefix for C/U/R factor files");
    v->add_option("--report", sol.report, "Report CSV path (default stdout)");

    PhaseArgs ph;
    auto* p = app.add_subcommand("phase", "Phase-transition sweep, CSV r,delta,p,alpha_mean,successes,trials");
    p->add_option("--dims", ph.dims, "n1,n2,n3")->delimiter(',')->expected(3);
    p->add_option("--rank", ph.ranks, "Rank grid")->delimiter(',');
    p->add_option("--delta", ph.deltas, "Delta grid")->delimiter(',');
    p->add_option("--prob", ph.probs, "Slab probability grid")->delimiter(',');
    p->add_option("--alpha", ph.alphas, "Overall-rate targets (replace --prob)")->delimiter(',');
    p->add_option("--trials", ph.trials, "Trials per cell");
    p->add_option("--seed", ph.seed, "Master seed");
    p->add_option("--tol", ph.tol, "Solver threshold on e_k");
    p->add_option("--max-iter", ph.max_iter, "Iteration cap");
    p->add_option("--threads", ph.threads, "Worker threads");
    p->add_option("--out", ph.out, "CSV path (default stdout)");

    ConvergeArgs cv;
    auto* c = app.add_subcommand("converge", "Mean relative-error curve, CSV k,eps_mean");
    c->add_option("--dims", cv.dims, "n1,n2,n3")->delimiter(',')->expected(3);
    c->add_option("--rank", cv.rank, "Tubal rank");
    c->add_option("--delta", cv.delta, "Slab fraction");
    c->add_option("--alpha", cv.alpha, "Target overall rate");
    c->add_option("--trials", cv.trials, "Seeds");
    c->add_option("--seed", cv.seed, "Master seed");
    c->add_option("--tol", cv.eps_tol, "Stop once eps_k <= tol");
    c->add_option("--max-iter", cv.max_iter, "Iteration cap");
    c->add_option("--threads", cv.threads, "Worker threads");
    c->add_option("--out", cv.out, "CSV path (default stdout)");

    BoundArgs bd;
    auto* b = app.add_subcommand("bounds", "Sampling-complexity calculator");
    b->add_option("--mode", bd.mode, "ccs, tcur or bernoulli");
    b->add_option("--dims", bd.dims, "n1,n2,n3")->delimiter(',')->expected(3);
    b->add_option("--tensor", bd.tensor, "Measure r, mu0, kappa and the multi-rank from a tensor file");
    b->add_option("--rank", bd.rank, "Tubal rank");
    b->add_option("--mu0", bd.mu0, "Incoherence");
    b->add_option("--kappa", bd.kappa, "Condition number");
    b->add_option("--beta", bd.beta, "Slack constant");
    b->add_option("--rvec-inf", bd.rvec_inf, "Largest slice rank");
    b->add_option("--rvec-1", bd.rvec_1, "Sum of slice ranks");
    b->add_option("--size-i", bd.size_i, "|I| for the probability bounds");
    b->add_option("--size-j", bd.size_j, "|J| for the probability bounds");
    b->add_option("--out", bd.out, "CSV path (default stdout)");

    MetricArgs mt;
    auto* m = app.add_subcommand("metrics", "PSNR, mean SSIM and relative error of an estimate");
    m->add_option("--truth", mt.truth, "Reference tensor")->required();
    m->add_option("--estimate", mt.estimate, "Estimated tensor")->required();
    m->add_option("--out", mt.out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kParam;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*s) return cmd_sample(smp);
        if (*v) return cmd_solve(sol);
        if (*p) return cmd_phase(ph);
        if (*c) return cmd_converge(cv);
        if (*b) return cmd_bounds(bd);
        if (*m) return cmd_metrics(mt);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParam;
    }
    return kParam;
}

#pragma once

#include "airs/solver_common.hpp"
#include "airs/wpt.hpp"

#include <chrono>
#include <optional>

namespace airs {

/// Options that deform the reflect-side subproblem for the benchmark
/// schemes: a pinned common amplitude and/or a removed amplification budget.
struct ReflectStepOptions {
    bool enforce_amp = true;
    std::optional<double> pinned_beta;  ///< pins every element diagonal to beta^2
};

struct SumPowerSolution {
    std::vector<CVec> w;      ///< information beams; no dedicated energy beams
    ReflectionState refl;
    double sdr_objective = 0; ///< relaxed objective at the end of the alternation
    double objective = 0;     ///< harvested-power objective of the recovered solution
    std::vector<CMat> W;      ///< final relaxed beam covariances
    CMat U;                   ///< final relaxed reflect Gram matrix
    SolveReport report;
};

/// Checks the hypotheses under which dedicated energy beams can be dropped
/// from the sum-power design. Callers with no information users should use
/// the energy-only solver instead.
inline void check_sum_power_hypotheses(const SystemConfig& cfg) {
    require(cfg.P_A > 0 && cfg.P_I > 0, "sum-power: positive budgets required");
    if (cfg.K_I >= 1)
        for (int i = 0; i < cfg.K_I; ++i)
            if (!(cfg.gamma(i) > 0))
                throw HypothesisViolated(
                    "sum-power simplification requires strictly positive targets; gamma[" +
                    std::to_string(i) + "] = " + std::to_string(cfg.gamma(i)));
}

namespace detail {

/// Relaxed objective of the joint design at the current block pair.
inline double sdr_objective_value(const LiftedOperators& L, const std::vector<CMat>& W,
                                  const CMat& U, const SystemConfig& cfg) {
    double v = 0;
    for (int j = 0; j < cfg.K_E; ++j) {
        double q = 0;
        for (int i = 0; i < cfg.K_I; ++i)
            q += (L.cascade_eu[j].adjoint() * U * L.cascade_eu[j] * W[i]).trace().real();
        q += cfg.sigma_z2 * (L.refl_gram_eu[j] * U).trace().real();
        v += cfg.alpha(j) * q;
    }
    return v;
}

inline double noise_floor_from_U(int i, const LiftedOperators& L, const CMat& U,
                                 const SystemConfig& cfg) {
    return cfg.sigma_z2 * (L.refl_gram_iu[i] * U).trace().real() + cfg.sigma_i2(i);
}

}  // namespace detail

/// Transmit block at a fixed reflect Gram matrix: one PSD block per IU, the
/// target constraints and both power budgets (all linear in the blocks).
inline std::vector<CMat> ao_step_W(const ChannelSet& ch, const LiftedOperators& L,
                                   const CMat& U, const SystemConfig& cfg,
                                   const conic::SolverSettings& cs = {},
                                   bool enforce_amp = true) {
    conic::Program prog;
    std::vector<int> blocks;
    for (int i = 0; i < cfg.K_I; ++i) blocks.push_back(prog.add_herm_block(cfg.M, cfg.P_A));

    const CMat Uh = hermitian_part(U);
    CMat S_u = CMat::Zero(cfg.M, cfg.M);
    for (int j = 0; j < cfg.K_E; ++j)
        S_u += cfg.alpha(j) * (L.cascade_eu[j].adjoint() * Uh * L.cascade_eu[j]);
    S_u = hermitian_part(S_u);

    auto obj = prog.form();
    for (int i = 0; i < cfg.K_I; ++i) obj.herm[blocks[i]] = S_u;
    prog.objective = obj;

    for (int i = 0; i < cfg.K_I; ++i) {
        const CMat D = hermitian_part(L.cascade_iu[i].adjoint() * Uh * L.cascade_iu[i]);
        auto f = prog.form();
        for (int k = 0; k < cfg.K_I; ++k)
            f.herm[blocks[k]] = (k == i) ? CMat(-D / cfg.gamma(i)) : D;
        f.constant = detail::noise_floor_from_U(i, L, Uh, cfg);
        prog.linear.push_back({f, conic::Rel::Le, "sinr_iu" + std::to_string(i)});
    }
    {
        auto f = prog.form();
        for (int i = 0; i < cfg.K_I; ++i) f.herm[blocks[i]] = CMat::Identity(cfg.M, cfg.M);
        f.constant = -cfg.P_A;
        prog.linear.push_back({f, conic::Rel::Le, "ap_power"});
    }
    if (enforce_amp) {
        // per-element incident power weighted by the Gram diagonal
        CMat E_u = CMat::Zero(cfg.M, cfg.M);
        for (int n = 0; n < cfg.N; ++n)
            E_u += Uh(n, n).real() * (ch.F.row(n).adjoint() * ch.F.row(n));
        E_u = hermitian_part(E_u);
        const double residual =
            cfg.P_I - cfg.sigma_z2 * (L.elem_proj * Uh).trace().real();
        auto f = prog.form();
        for (int i = 0; i < cfg.K_I; ++i) f.herm[blocks[i]] = E_u;
        f.constant = -residual;
        prog.linear.push_back({f, conic::Rel::Le, "amplification"});
    }

    const auto sol = conic::solve(prog, cs);
    if (sol.status == conic::SolveStatus::Infeasible)
        throw InfeasibleProblem("transmit block infeasible: " + sol.message);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("ao_step_W: " + std::string(conic::to_string(sol.status)) + " " +
                            sol.message);
    return sol.herm;
}

/// Reflect block at fixed beam covariances: a single (N+1) PSD block with
/// the trailing diagonal pinned to one.
inline CMat ao_step_U(const ChannelSet& ch, const LiftedOperators& L,
                      const std::vector<CMat>& W, const SystemConfig& cfg,
                      const conic::SolverSettings& cs = {},
                      const ReflectStepOptions& opts = {}) {
    const int N1 = cfg.N + 1;

    std::vector<CMat> amp_kernels;  // per-beam diagonal kernels
    CMat Qtot = CMat::Zero(N1, N1);
    for (int i = 0; i < cfg.K_I; ++i) {
        const CMat Q = detail::amp_kernel_of_cov(ch.F, W[i]);
        amp_kernels.push_back(Q);
        Qtot += Q;
    }
    Qtot += cfg.sigma_z2 * L.elem_proj;

    // scale hint: the budget over the mean per-element kernel weight
    double mean_diag = 0;
    for (int n = 0; n < cfg.N; ++n) mean_diag += Qtot(n, n).real();
    mean_diag /= cfg.N;
    double scale = opts.pinned_beta ? std::max(1.0, *opts.pinned_beta * *opts.pinned_beta)
                                    : std::clamp(cfg.P_I / std::max(mean_diag, 1e-300), 1e-8,
                                                 1e8);

    conic::Program prog;
    const int ub = prog.add_herm_block(N1, scale);

    CMat M_obj = CMat::Zero(N1, N1);
    for (int j = 0; j < cfg.K_E; ++j) {
        CMat t = cfg.sigma_z2 * L.refl_gram_eu[j];
        for (int i = 0; i < cfg.K_I; ++i)
            t += L.cascade_eu[j] * W[i] * L.cascade_eu[j].adjoint();
        M_obj += cfg.alpha(j) * t;
    }
    auto obj = prog.form();
    obj.herm[ub] = hermitian_part(M_obj);
    prog.objective = obj;

    for (int i = 0; i < cfg.K_I; ++i) {
        CMat f = CMat::Zero(N1, N1);
        for (int k = 0; k < cfg.K_I; ++k) {
            const CMat B = L.cascade_iu[i] * W[k] * L.cascade_iu[i].adjoint();
            f += (k == i) ? CMat(-B / cfg.gamma(i)) : B;
        }
        f += cfg.sigma_z2 * L.refl_gram_iu[i];
        auto form = prog.form();
        form.herm[ub] = hermitian_part(f);
        form.constant = cfg.sigma_i2(i);
        prog.linear.push_back({form, conic::Rel::Le, "sinr_iu" + std::to_string(i)});
    }
    if (opts.enforce_amp) {
        auto f = prog.form();
        f.herm[ub] = Qtot;
        f.constant = -cfg.P_I;
        prog.linear.push_back({f, conic::Rel::Le, "amplification"});
    }
    prog.pin_herm_entry(ub, cfg.N, cfg.N, 1.0, "pin_last");
    if (opts.pinned_beta) {
        const double b2 = *opts.pinned_beta * *opts.pinned_beta;
        for (int n = 0; n < cfg.N; ++n)
            prog.pin_herm_entry(ub, n, n, b2, "pin_elem" + std::to_string(n));
    }

    const auto sol = conic::solve(prog, cs);
    if (sol.status == conic::SolveStatus::Infeasible)
        throw InfeasibleProblem("reflect block infeasible: " + sol.message);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("ao_step_U: " + std::string(conic::to_string(sol.status)) + " " +
                            sol.message);
    return sol.herm[0];
}

namespace detail {

/// Amplitude back-off: scales the element part of a candidate onto the
/// amplification budget (largest admissible factor in (0, 1]).
inline CVec amp_backoff(const CVec& cand, const ChannelSet& ch, const std::vector<CVec>& w,
                        const SystemConfig& cfg) {
    const ReflectionState r = reflect_from_aug(cand);
    Precoder p;
    p.w = w;
    const double q = amplification_power(p, r, ch, cfg);
    CVec out = cand;
    if (q > cfg.P_I) out.head(cfg.N) *= std::sqrt(cfg.P_I / q);
    return out;
}

}  // namespace detail

/// Joint design for the harvested-power objective under target constraints:
/// alternating relaxed blocks, purification of the beam covariances, and
/// randomization of the reflect Gram matrix.
inline SumPowerSolution solve_sum_power(const ChannelSet& ch, const SystemConfig& cfg,
                                        const AlgoSettings& st = {}) {
    check_sum_power_hypotheses(cfg);
    require(cfg.K_I >= 1, "solve_sum_power: use solve_wpt when there are no information users");
    const auto t_start = std::chrono::steady_clock::now();

    const auto L = build_lifted(ch, Precoder::zero(cfg.M, cfg.K_I), cfg);

    SumPowerSolution sol;
    {
        const CVec ub0 = aug_reflect(initial_reflection(ch, cfg, st.seed));
        sol.U = ub0 * ub0.adjoint();
    }

    double prev = -std::numeric_limits<double>::infinity();
    sol.report.status = AlgoStatus::IterationLimit;
    for (int iter = 0; iter < st.max_ao_iters; ++iter) {
        sol.W = ao_step_W(ch, L, sol.U, cfg, st.conic);
        sol.report.objective_trace.push_back(detail::sdr_objective_value(L, sol.W, sol.U, cfg));

        sol.U = ao_step_U(ch, L, sol.W, cfg, st.conic);
        const double obj = detail::sdr_objective_value(L, sol.W, sol.U, cfg);
        sol.report.objective_trace.push_back(obj);
        sol.report.iterations = iter + 1;

        if (iter > 0 && obj - prev <= st.ao_tol * std::max(std::abs(prev), 1e-300)) {
            sol.report.status = AlgoStatus::Converged;
            prev = obj;
            break;
        }
        prev = obj;
    }
    sol.sdr_objective = prev;

    // Purify the beam covariances. Preserve every program row plus the
    // objective; if a block is still not rank-one, release the objective row
    // (its value is protected by optimality) and reduce again.
    {
        const CMat Uh = hermitian_part(sol.U);
        CMat S_u = CMat::Zero(cfg.M, cfg.M);
        for (int j = 0; j < cfg.K_E; ++j)
            S_u += cfg.alpha(j) * (L.cascade_eu[j].adjoint() * Uh * L.cascade_eu[j]);
        CMat E_u = CMat::Zero(cfg.M, cfg.M);
        for (int n = 0; n < cfg.N; ++n)
            E_u += Uh(n, n).real() * (ch.F.row(n).adjoint() * ch.F.row(n));

        std::vector<std::vector<CMat>> rows;
        for (int i = 0; i < cfg.K_I; ++i) {
            const CMat D = hermitian_part(L.cascade_iu[i].adjoint() * Uh * L.cascade_iu[i]);
            std::vector<CMat> row(cfg.K_I);
            for (int k = 0; k < cfg.K_I; ++k) row[k] = (k == i) ? CMat(-D / cfg.gamma(i)) : D;
            rows.push_back(std::move(row));
        }
        rows.push_back(std::vector<CMat>(cfg.K_I, CMat::Identity(cfg.M, cfg.M)));
        rows.push_back(std::vector<CMat>(cfg.K_I, hermitian_part(E_u)));

        auto rows_with_obj = rows;
        rows_with_obj.insert(rows_with_obj.begin(),
                             std::vector<CMat>(cfg.K_I, hermitian_part(S_u)));
        auto reduced = rank_reduce(sol.W, rows_with_obj);
        bool all_rank_one = true;
        for (const auto& Wb : reduced)
            if (rank_report(Wb).numerical_rank > 1) all_rank_one = false;
        if (!all_rank_one) reduced = rank_reduce(reduced, rows);
        sol.W = reduced;

        sol.w.clear();
        for (int i = 0; i < cfg.K_I; ++i) {
            try {
                sol.w.push_back(rank_one_extract(sol.W[i], 1e-6));
            } catch (const RankTooHigh&) {
                CVec v = detail::dominant_eigvec(sol.W[i]);
                sol.w.push_back(std::sqrt(std::max(sol.W[i].trace().real(), 0.0)) * v);
            }
        }
    }

    // Randomize the reflect Gram matrix; beams stay fixed and candidates are
    // scored by the true objective.
    {
        Philox rng(st.seed, stream::randomization(0));
        Precoder p;
        p.w = sol.w;
        const auto evaluate = [&](const CVec& cand) -> std::optional<double> {
            const ReflectionState r = reflect_from_aug(cand);
            const auto rep = feasibility_report(ProblemKind::SumPower, p, r, ch, cfg);
            if (!rep.feasible()) return std::nullopt;
            return weighted_sum_power(p, r, ch, cfg);
        };
        const auto project = [&](const CVec& cand) {
            return detail::amp_backoff(cand, ch, sol.w, cfg);
        };
        const auto gr = gaussian_randomize_u(hermitian_part(sol.U), evaluate, st.gr_draws,
                                             rng, project);
        sol.refl = reflect_from_aug(gr.best);
        sol.objective = gr.objective;
    }

    Precoder p;
    p.w = sol.w;
    sol.report.feasibility = feasibility_report(ProblemKind::SumPower, p, sol.refl, ch, cfg);
    sol.report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    return sol;
}

}  // namespace airs

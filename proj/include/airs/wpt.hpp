#pragma once

#include "airs/solver_common.hpp"

#include <chrono>

namespace airs {

/// Energy-only design: one dedicated beam plus the surface coefficients.
struct WptSolution {
    CVec v0;
    ReflectionState refl;
    double objective = 0;  ///< weighted sum of harvested powers [W]
    SolveReport report;
};

/// Relaxed dedicated-beam subproblem at a fixed reflection state:
/// maximize tr(S W) under the transmit and (residual) amplification budgets,
/// then purify to a rank-one beam.
struct EnergyBeamResult {
    CMat W;
    CVec v0;
    bool used_eigvec_fallback = false;
};

inline EnergyBeamResult energy_subproblem(const ChannelSet& ch, const ReflectionState& refl,
                                          const SystemConfig& cfg,
                                          const conic::SolverSettings& cs = {}) {
    const CMat S = detail::transmit_kernel(ch, refl, cfg);
    const CMat theta = refl.theta();
    const CMat C = hermitian_part((ch.F.adjoint() * theta.adjoint()) * (theta * ch.F));
    const double PI_bar = cfg.P_I - cfg.sigma_z2 * refl.u.squaredNorm();
    if (PI_bar <= 0)
        throw BudgetExhausted("energy_subproblem: amplification budget exhausted by noise, "
                              "residual " +
                              std::to_string(PI_bar));

    conic::Program prog;
    const int b = prog.add_herm_block(cfg.M, cfg.P_A);
    auto obj = prog.form();
    obj.herm[b] = S;
    prog.objective = obj;
    auto pa = prog.form();
    pa.herm[b] = CMat::Identity(cfg.M, cfg.M);
    pa.constant = -cfg.P_A;
    prog.linear.push_back({pa, conic::Rel::Le, "ap_power"});
    auto pi = prog.form();
    pi.herm[b] = C;
    pi.constant = -PI_bar;
    prog.linear.push_back({pi, conic::Rel::Le, "amplification"});

    const auto sol = conic::solve(prog, cs);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("energy_subproblem: " + std::string(conic::to_string(sol.status)) +
                            " " + sol.message);

    EnergyBeamResult out;
    out.W = rank_reduce({sol.herm[0]}, {{S}, {CMat::Identity(cfg.M, cfg.M)}, {C}})[0];
    try {
        out.v0 = rank_one_extract(out.W, 1e-6);
    } catch (const RankTooHigh&) {
        // keep the dominant direction at the same transmit power
        CVec v = detail::dominant_eigvec(out.W);
        out.v0 = std::sqrt(std::max(out.W.trace().real(), 0.0)) * v;
        out.used_eigvec_fallback = true;
    }
    return out;
}

/// Phases that maximize the linearized reflect objective in closed form:
/// theta_n = arg([A ub]_n), zero where that entry vanishes.
inline RVec closed_form_phases(const CMat& A, const CVec& ub_ref) {
    const CVec c = A * ub_ref;
    RVec theta(c.size());
    for (Eigen::Index n = 0; n < c.size(); ++n)
        theta(n) = (std::abs(c(n)) == 0.0) ? 0.0 : std::arg(c(n));
    return theta;
}

/// One convexified reflect update for the energy-only design. Maximizes the
/// tangent lower bound of ub^H A ub under the amplification budget; with
/// `closed_form` the per-element phases are set analytically and only the
/// magnitudes are optimized (the budget is phase-invariant).
inline CVec sca_reflect_step(const ChannelSet& ch, const CVec& v0, const SystemConfig& cfg,
                             const CVec& ub_current, const conic::SolverSettings& cs = {},
                             bool closed_form = true) {
    Precoder prec;
    prec.v.push_back(v0);
    const auto L = build_lifted(ch, prec, cfg);
    const CMat A = L.wpt_kernel;
    const CMat B = L.amp_kernel_beam + cfg.sigma_z2 * L.elem_proj;  // diagonal
    const int N1 = cfg.N + 1;

    const CVec c = A * ub_current;
    if (c.norm() == 0.0) return ub_current;  // any feasible point is optimal

    // magnitude scale: the budget bounds |u_n| through the diagonal kernel
    double bmin = std::numeric_limits<double>::infinity();
    for (int n = 0; n < cfg.N; ++n) bmin = std::min(bmin, B(n, n).real());
    const double umax = std::sqrt(cfg.P_I / std::max(bmin, 1e-300));

    // the trailing augmented coordinate is a constant; only the element part
    // is a variable
    conic::Program prog;
    const int vb = prog.add_vec_block(cfg.N, closed_form, std::clamp(umax, 1e-30, 1e30));
    auto obj = prog.form();

    conic::QuadCon qc;
    qc.Q.resize(1);
    qc.q.resize(1);
    qc.Q[0] = B.topLeftCorner(cfg.N, cfg.N);  // real diagonal, last entry zero anyway
    qc.lin = prog.form();
    qc.lin.constant = -cfg.P_I;
    qc.name = "amplification";

    RVec theta;
    if (closed_form) {
        // u_n = beta_n e^{j theta_n*}: fold the optimal phases into the data
        theta = closed_form_phases(A, ub_current);
        CVec cr(cfg.N);
        for (int n = 0; n < cfg.N; ++n) cr(n) = std::abs(c(n));
        obj.vec[vb] = 2.0 * cr;
    } else {
        obj.vec[vb] = 2.0 * c.head(cfg.N);
    }
    obj.constant = 2.0 * c(cfg.N).real();
    prog.objective = obj;
    prog.quadratic.push_back(qc);

    const auto sol = conic::solve(prog, cs);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("sca_reflect_step: " + std::string(conic::to_string(sol.status)) +
                            " " + sol.message);
    CVec ub(N1);
    if (closed_form) {
        for (int n = 0; n < cfg.N; ++n)
            ub(n) = std::polar(std::max(sol.vec[0](n).real(), 0.0), theta(n));
    } else {
        ub.head(cfg.N) = sol.vec[0];
    }
    ub(cfg.N) = cx(1, 0);
    return ub;
}

/// Alternating optimization for the energy-only problem: dedicated-beam
/// relaxation and convexified reflect updates until the harvested power
/// stops improving.
inline WptSolution solve_wpt(const ChannelSet& ch, const SystemConfig& cfg,
                             const AlgoSettings& st = {}) {
    require(cfg.K_I == 0, "solve_wpt: information users must be stripped first");
    const auto t_start = std::chrono::steady_clock::now();

    WptSolution sol;
    sol.refl = initial_reflection(ch, cfg, st.seed);

    auto objective = [&](const CVec& v0, const ReflectionState& r) {
        Precoder p;
        p.v.push_back(v0);
        return weighted_sum_power(p, r, ch, cfg);
    };

    double prev = -std::numeric_limits<double>::infinity();
    sol.report.status = AlgoStatus::IterationLimit;
    for (int iter = 0; iter < st.max_ao_iters; ++iter) {
        const auto beam = energy_subproblem(ch, sol.refl, cfg, st.conic);
        sol.v0 = beam.v0;
        sol.report.objective_trace.push_back(objective(sol.v0, sol.refl));

        CVec ub = aug_reflect(sol.refl);
        double inner_prev = objective(sol.v0, sol.refl);
        for (int s = 0; s < st.max_sca_iters; ++s) {
            ub = sca_reflect_step(ch, sol.v0, cfg, ub, st.conic, st.closed_form_phases);
            const double val = objective(sol.v0, reflect_from_aug(ub));
            const bool done = val - inner_prev <= st.sca_tol * std::max(std::abs(inner_prev), 1e-300);
            inner_prev = val;
            if (done) break;
        }
        sol.refl = reflect_from_aug(ub);
        const double obj = objective(sol.v0, sol.refl);
        sol.report.objective_trace.push_back(obj);
        sol.report.iterations = iter + 1;

        if (obj - prev <= st.ao_tol * std::max(std::abs(prev), 1e-300) && iter > 0) {
            sol.report.status = AlgoStatus::Converged;
            prev = obj;
            break;
        }
        prev = obj;
    }

    sol.objective = prev;
    Precoder p;
    p.v.push_back(sol.v0);
    p.w.assign(cfg.K_I, CVec::Zero(cfg.M));
    sol.report.feasibility = feasibility_report(ProblemKind::SumPower, p, sol.refl, ch, cfg);
    sol.report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    return sol;
}

}  // namespace airs

#pragma once

#include "airs/sum_power.hpp"
#include "airs/theory.hpp"

#include <chrono>

namespace airs {

inline constexpr double kLog2e = 1.4426950408889634;

struct SumRateSolution {
    std::vector<CVec> w;
    ReflectionState refl;
    RVec rho, tau;             ///< natural-log slacks, exact at the returned point
    double objective = 0;      ///< weighted sum rate of the recovered solution [bps/Hz]
    double sdr_objective = 0;  ///< relaxed objective at the end of the alternation
    std::vector<CMat> W;       ///< final relaxed beam covariances
    std::string recovery;      ///< "rank_one" or "rebalance_randomization"
    SolveReport report;
};

/// Alternation state: relaxed blocks, the reflect vector and the slack
/// expansion points.
struct SumRateState {
    std::vector<CMat> W;
    CVec ub;
    RVec rho, tau;
};

namespace detail {

inline double iu_total_power(int i, const std::vector<CMat>& W, const CVec& h,
                             double noise_floor) {
    double v = noise_floor;
    for (const auto& Wk : W) v += (h.adjoint() * Wk * h)(0).real();
    return v;
}

inline double iu_interference(int i, const std::vector<CMat>& W, const CVec& h,
                              double noise_floor) {
    double v = noise_floor;
    for (int k = 0; k < static_cast<int>(W.size()); ++k)
        if (k != i) v += (h.adjoint() * W[k] * h)(0).real();
    return v;
}

}  // namespace detail

/// Feasible starting point for the rate design: reuse the harvested-power
/// solver with unit energy weights and loose targets, then seed the slacks
/// with the exact logs of the achieved powers.
inline SumRateState init_feasible(const ChannelSet& ch, const SystemConfig& cfg,
                                  const AlgoSettings& st = {}) {
    SystemConfig boot = cfg;
    boot.alpha = RVec::Ones(cfg.K_E);
    boot.gamma = RVec::Constant(cfg.K_I, 1e-3);  // loose positive targets
    const auto sp = solve_sum_power(ch, boot, st);

    Precoder p;
    p.w = sp.w;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cfg.K_E; ++j) {
        const double q = harvested_power(j, p, sp.refl, ch, cfg);
        if (cfg.E(j) > 0) worst_ratio = std::min(worst_ratio, q / cfg.E(j));
        if (q < cfg.E(j) * (1.0 - 1e-9))
            throw InfeasibleProblem(
                "init_feasible: harvest targets unattainable, min achieved ratio " +
                std::to_string(std::min(worst_ratio, q / std::max(cfg.E(j), 1e-300))));
    }

    SumRateState s;
    s.ub = aug_reflect(sp.refl);
    s.W.clear();
    for (const auto& w : sp.w) s.W.push_back(w * w.adjoint());
    s.rho.resize(cfg.K_I);
    s.tau.resize(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i) {
        const CVec h = effective_channel(ch.h_d[i], ch.h_r[i], ch.F, sp.refl);
        const double floor = iu_noise_floor(i, sp.refl, ch, cfg);
        s.rho(i) = std::log(detail::iu_total_power(i, s.W, h, floor));
        s.tau(i) = std::log(detail::iu_interference(i, s.W, h, floor));
    }
    return s;
}

/// Transmit block at a fixed reflect state: exact received-power bounds for
/// the numerator slacks and tangent bounds for the interference slacks.
inline SumRateState transmit_subproblem(const ChannelSet& ch, const SumRateState& cur,
                                        const SystemConfig& cfg,
                                        const conic::SolverSettings& cs = {},
                                        bool enforce_amp = true) {
    const ReflectionState refl = reflect_from_aug(cur.ub);
    const auto eff = effective_channels(ch, refl);
    const CMat theta = refl.theta();
    const CMat C = hermitian_part((ch.F.adjoint() * theta.adjoint()) * (theta * ch.F));
    const double PI_bar = cfg.P_I - cfg.sigma_z2 * refl.u.squaredNorm();
    if (enforce_amp && PI_bar <= 0)
        throw BudgetExhausted("transmit_subproblem: amplification budget exhausted");

    conic::Program prog;
    std::vector<int> blocks;
    for (int i = 0; i < cfg.K_I; ++i) blocks.push_back(prog.add_herm_block(cfg.M, cfg.P_A));
    const int s0 = prog.add_scalars(2 * cfg.K_I);  // rho_i then tau_i

    auto obj = prog.form();
    for (int i = 0; i < cfg.K_I; ++i) {
        obj.scalar(s0 + i) = cfg.mu(i);
        obj.scalar(s0 + cfg.K_I + i) = -cfg.mu(i);
    }
    prog.objective = obj;

    for (int i = 0; i < cfg.K_I; ++i) {
        const CMat Hi = eff.h[i] * eff.h[i].adjoint();
        const double floor = iu_noise_floor(i, refl, ch, cfg);

        conic::ExpCon ec;
        ec.scalar_index = s0 + i;
        ec.w = prog.form();
        for (int k = 0; k < cfg.K_I; ++k) ec.w.herm[blocks[k]] = Hi;
        ec.w.constant = floor;
        ec.name = "received_power_iu" + std::to_string(i);
        prog.expcons.push_back(ec);

        // interference + floor <= tangent of e^tau at the expansion point
        auto f = prog.form();
        for (int k = 0; k < cfg.K_I; ++k)
            if (k != i) f.herm[blocks[k]] = Hi;
        const double et = std::exp(cur.tau(i));
        f.scalar(s0 + cfg.K_I + i) = -et;
        f.constant = floor + et * (cur.tau(i) - 1.0);
        prog.linear.push_back({f, conic::Rel::Le, "interference_iu" + std::to_string(i)});
    }
    for (int j = 0; j < cfg.K_E; ++j) {
        const CMat Gj = eff.g[j] * eff.g[j].adjoint();
        const CVec scaled = ch.g_r[j].conjugate().cwiseProduct(refl.u);
        const double Ebar = cfg.E(j) - cfg.sigma_z2 * scaled.squaredNorm();
        auto f = prog.form();
        for (int i = 0; i < cfg.K_I; ++i) f.herm[blocks[i]] = -Gj;
        f.constant = Ebar;
        prog.linear.push_back({f, conic::Rel::Le, "harvest_eu" + std::to_string(j)});
    }
    {
        auto f = prog.form();
        for (int i = 0; i < cfg.K_I; ++i) f.herm[blocks[i]] = CMat::Identity(cfg.M, cfg.M);
        f.constant = -cfg.P_A;
        prog.linear.push_back({f, conic::Rel::Le, "ap_power"});
    }
    if (enforce_amp) {
        auto f = prog.form();
        for (int i = 0; i < cfg.K_I; ++i) f.herm[blocks[i]] = C;
        f.constant = -PI_bar;
        prog.linear.push_back({f, conic::Rel::Le, "amplification"});
    }

    const auto sol = conic::solve(prog, cs);
    if (sol.status == conic::SolveStatus::Infeasible)
        throw InfeasibleProblem("transmit block infeasible: " + sol.message);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("transmit_subproblem: " +
                            std::string(conic::to_string(sol.status)) + " " + sol.message);

    SumRateState next = cur;
    next.W = sol.herm;
    next.rho = sol.scalars.segment(0, cfg.K_I);
    next.tau = sol.scalars.segment(cfg.K_I, cfg.K_I);
    return next;
}

/// Reflect block at fixed beam covariances: tangent lower bounds for every
/// received-power form, exact convex bounds on the interference side.
inline SumRateState reflect_subproblem(const ChannelSet& ch, const SumRateState& cur,
                                       const SystemConfig& cfg,
                                       const conic::SolverSettings& cs = {},
                                       bool enforce_amp = true) {
    const int N1 = cfg.N + 1;
    const auto L = build_lifted(ch, Precoder::zero(cfg.M, cfg.K_I), cfg);

    // per-pair lifted kernels H_i W_k H_i^H and the EU counterparts
    std::vector<std::vector<CMat>> HiWk(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i)
        for (int k = 0; k < cfg.K_I; ++k)
            HiWk[i].push_back(hermitian_part(
                L.cascade_iu[i] * cur.W[k] * L.cascade_iu[i].adjoint()));
    std::vector<CMat> GjW(cfg.K_E);
    for (int j = 0; j < cfg.K_E; ++j) {
        CMat t = CMat::Zero(N1, N1);
        for (int i = 0; i < cfg.K_I; ++i)
            t += L.cascade_eu[j] * cur.W[i] * L.cascade_eu[j].adjoint();
        GjW[j] = hermitian_part(t);
    }
    CMat Qtot = cfg.sigma_z2 * L.elem_proj;
    for (int i = 0; i < cfg.K_I; ++i) Qtot += detail::amp_kernel_of_cov(ch.F, cur.W[i]);

    const double uscale = std::max(1.0, std::sqrt(cur.ub.head(cfg.N).squaredNorm() / cfg.N));

    // The trailing augmented coordinate is a constant: every form below is
    // folded onto the element part u of ub = [u; 1].
    conic::Program prog;
    const int vb = prog.add_vec_block(cfg.N, false, uscale);
    const int s0 = prog.add_scalars(2 * cfg.K_I);

    auto obj = prog.form();
    for (int i = 0; i < cfg.K_I; ++i) {
        obj.scalar(s0 + i) = cfg.mu(i);
        obj.scalar(s0 + cfg.K_I + i) = -cfg.mu(i);
    }
    prog.objective = obj;

    // tangent of ub^H B ub at the expansion point: 2 Re(ub^H B ub_t) - const
    const auto chi = [&](const CMat& B, CVec& coef, double& constant) {
        const CVec b = B * cur.ub;
        coef += 2.0 * b.head(cfg.N);
        constant += 2.0 * b(cfg.N).real() - (cur.ub.adjoint() * B * cur.ub)(0).real();
    };
    // exact quadratic ub^H Q ub = u^H Q_hh u + 2 Re(q^H u) + const
    const auto fold_quad = [&](const CMat& Q, conic::QuadCon& qc) {
        qc.Q[0] += Q.topLeftCorner(cfg.N, cfg.N);
        qc.q[0] += Q.block(0, cfg.N, cfg.N, 1);
        qc.lin.constant += Q(cfg.N, cfg.N).real();
    };

    for (int i = 0; i < cfg.K_I; ++i) {
        conic::ExpCon ec;
        ec.scalar_index = s0 + i;
        ec.w = prog.form();
        CVec coef = CVec::Zero(cfg.N);
        double constant = cfg.sigma_i2(i);
        for (int k = 0; k < cfg.K_I; ++k) chi(HiWk[i][k], coef, constant);
        {
            CMat T = cfg.sigma_z2 * L.refl_gram_iu[i];
            chi(T, coef, constant);
        }
        ec.w.vec[vb] = coef;
        ec.w.constant = constant;
        ec.name = "received_power_iu" + std::to_string(i);
        prog.expcons.push_back(ec);

        conic::QuadCon qc;
        qc.Q.assign(1, CMat::Zero(cfg.N, cfg.N));
        qc.q.assign(1, CVec::Zero(cfg.N));
        qc.lin = prog.form();
        CMat Qi = cfg.sigma_z2 * L.refl_gram_iu[i];
        for (int k = 0; k < cfg.K_I; ++k)
            if (k != i) Qi += HiWk[i][k];
        fold_quad(Qi, qc);
        const double et = std::exp(cur.tau(i));
        qc.lin.scalar(s0 + cfg.K_I + i) = -et;
        qc.lin.constant += cfg.sigma_i2(i) + et * (cur.tau(i) - 1.0);
        qc.name = "interference_iu" + std::to_string(i);
        prog.quadratic.push_back(qc);
    }
    for (int j = 0; j < cfg.K_E; ++j) {
        auto f = prog.form();
        CVec coef = CVec::Zero(cfg.N);
        double constant = -cfg.E(j);
        chi(GjW[j], coef, constant);
        {
            CMat Z = cfg.sigma_z2 * L.refl_gram_eu[j];
            chi(Z, coef, constant);
        }
        f.vec[vb] = -coef;  // harvest >= E  ->  -(chi) + E <= 0
        f.constant = -constant;
        prog.linear.push_back({f, conic::Rel::Le, "harvest_eu" + std::to_string(j)});
    }
    if (enforce_amp) {
        conic::QuadCon qc;
        qc.Q.assign(1, CMat::Zero(cfg.N, cfg.N));
        qc.q.assign(1, CVec::Zero(cfg.N));
        qc.lin = prog.form();
        fold_quad(Qtot, qc);
        qc.lin.constant += -cfg.P_I;
        qc.name = "amplification";
        prog.quadratic.push_back(qc);
    }

    const auto sol = conic::solve(prog, cs);
    if (sol.status == conic::SolveStatus::Infeasible)
        throw InfeasibleProblem("reflect block infeasible: " + sol.message);
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverFailure("reflect_subproblem: " +
                            std::string(conic::to_string(sol.status)) + " " + sol.message);

    SumRateState next = cur;
    next.ub.resize(N1);
    next.ub.head(cfg.N) = sol.vec[0];
    next.ub(cfg.N) = cx(1, 0);
    next.rho = sol.scalars.segment(0, cfg.K_I);
    next.tau = sol.scalars.segment(cfg.K_I, cfg.K_I);
    return next;
}

/// Beam recovery from the relaxed blocks: direct factorization when every
/// block is rank one, otherwise the rank-one rebalance plus randomization
/// over the residual block.
inline std::pair<std::vector<CVec>, std::string> recover_precoder(
    const std::vector<CMat>& W, const ChannelSet& ch, const ReflectionState& refl,
    const SystemConfig& cfg, const AlgoSettings& st = {}) {
    bool all_rank_one = true;
    int m = 0;
    double worst_l2 = -1;
    for (int i = 0; i < cfg.K_I; ++i) {
        const auto rep = rank_report(W[i]);
        const double l2 = rep.eigenvalues.size() > 1 ? rep.eigenvalues(1) : 0.0;
        if (rep.numerical_rank > 1) all_rank_one = false;
        if (l2 > worst_l2) {
            worst_l2 = l2;
            m = i;
        }
    }
    if (all_rank_one) {
        std::vector<CVec> w;
        for (int i = 0; i < cfg.K_I; ++i) w.push_back(rank_one_extract(W[i], 1e-6));
        return {w, "rank_one"};
    }

    const auto eff = effective_channels(ch, refl);
    const auto balanced = detail::rank_one_rebalance(W, eff.h, m);
    std::vector<CVec> w(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i)
        if (i != m) w[i] = rank_one_extract(balanced[i], 1e-6);

    // randomize the residual block at its own transmit power
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(balanced[m]));
    CMat root = CMat::Zero(cfg.M, cfg.M);
    for (int k = 0; k < cfg.M; ++k) {
        const double ev = std::max(es.eigenvalues()(k), 0.0);
        root += std::sqrt(ev) * es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
    const double power = std::max(balanced[m].trace().real(), 0.0);

    Philox rng(st.seed, stream::randomization(1));
    double best = -std::numeric_limits<double>::infinity();
    CVec best_w;
    for (int draw = 0; draw < st.gr_draws; ++draw) {
        CVec cand = root * rng.cnormal_vec(cfg.M);
        const double n2 = cand.squaredNorm();
        if (n2 <= 0) continue;
        cand *= std::sqrt(power / n2);
        w[m] = cand;
        Precoder p;
        p.w = w;
        if (!feasibility_report(ProblemKind::SumRate, p, refl, ch, cfg).feasible()) continue;
        const double val = weighted_sum_rate(p, refl, ch, cfg);
        if (val > best) {
            best = val;
            best_w = cand;
        }
    }
    if (!best_w.size())
        throw NoFeasibleCandidate("recover_precoder: no feasible candidate in " +
                                  std::to_string(st.gr_draws) + " draws");
    w[m] = best_w;
    return {w, "rebalance_randomization"};
}

/// Alternating design for the weighted-rate objective under per-EU harvest
/// targets. The returned slacks are the exact logs of the achieved powers,
/// so the reported objective is the true weighted sum rate.
inline SumRateSolution solve_sum_rate(const ChannelSet& ch, const SystemConfig& cfg,
                                      const AlgoSettings& st = {}) {
    require(cfg.K_I >= 1, "solve_sum_rate: needs at least one information user");
    const auto t_start = std::chrono::steady_clock::now();

    SumRateSolution sol;
    SumRateState state = init_feasible(ch, cfg, st);

    auto surrogate = [&](const SumRateState& s) {
        double v = 0;
        for (int i = 0; i < cfg.K_I; ++i) v += cfg.mu(i) * (s.rho(i) - s.tau(i));
        return v * kLog2e;
    };

    double prev = surrogate(state);
    sol.report.objective_trace.push_back(prev);
    sol.report.status = AlgoStatus::IterationLimit;
    for (int iter = 0; iter < st.max_ao_iters; ++iter) {
        state = transmit_subproblem(ch, state, cfg, st.conic);
        sol.report.objective_trace.push_back(surrogate(state));

        state = reflect_subproblem(ch, state, cfg, st.conic);
        const double obj = surrogate(state);
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
    sol.W = state.W;
    sol.refl = reflect_from_aug(state.ub);

    auto [w, method] = recover_precoder(state.W, ch, sol.refl, cfg, st);
    sol.w = std::move(w);
    sol.recovery = method;

    // exact slacks at the recovered point; the true objective follows
    Precoder p;
    p.w = sol.w;
    sol.rho.resize(cfg.K_I);
    sol.tau.resize(cfg.K_I);
    std::vector<CMat> Wr;
    for (const auto& wi : sol.w) Wr.push_back(wi * wi.adjoint());
    for (int i = 0; i < cfg.K_I; ++i) {
        const CVec h = effective_channel(ch.h_d[i], ch.h_r[i], ch.F, sol.refl);
        const double floor = iu_noise_floor(i, sol.refl, ch, cfg);
        sol.rho(i) = std::log(detail::iu_total_power(i, Wr, h, floor));
        sol.tau(i) = std::log(detail::iu_interference(i, Wr, h, floor));
    }
    sol.objective = weighted_sum_rate(p, sol.refl, ch, cfg);

    sol.report.feasibility = feasibility_report(ProblemKind::SumRate, p, sol.refl, ch, cfg);
    sol.report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    return sol;
}

}  // namespace airs

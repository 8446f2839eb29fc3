#pragma once

#include "airs/sum_power.hpp"

#include <sstream>

namespace airs {

namespace detail {

/// Rebalances a set of PSD beam covariances so that every block except the
/// m-th becomes rank one, while every aggregate functional sum_i tr(D W_i)
/// keeps its exact value: blocks i != m collapse onto their matched-filter
/// direction and the m-th absorbs the residual (which stays PSD by the
/// Cauchy-Schwarz inequality).
inline std::vector<CMat> rank_one_rebalance(const std::vector<CMat>& W,
                                            const std::vector<CVec>& h, int m) {
    const int K = static_cast<int>(W.size());
    std::vector<CMat> out(K);
    CMat sum = CMat::Zero(W[0].rows(), W[0].cols());
    for (int i = 0; i < K; ++i) sum += W[i];

    CMat rank_one_sum = CMat::Zero(W[0].rows(), W[0].cols());
    for (int i = 0; i < K; ++i) {
        if (i == m) continue;
        const double s = (h[i].adjoint() * W[i] * h[i])(0).real();
        if (s <= 0) {
            out[i] = CMat::Zero(W[0].rows(), W[0].cols());
        } else {
            const CVec wi = W[i] * h[i] / std::sqrt(s);
            out[i] = wi * wi.adjoint();
        }
        rank_one_sum += out[i];
    }
    out[m] = hermitian_part(sum - rank_one_sum);
    return out;
}

}  // namespace detail

struct VerificationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric cross-check of the no-dedicated-energy-beam reduction for the
/// sum-power design: the relaxation with an explicit energy block and the
/// one without share their optimal value, and folding the energy block into
/// one beam covariance yields a feasible point of the reduced program.
struct Theorem1Report {
    double zeta1 = 0;      ///< optimum with the explicit energy block
    double zeta2 = 0;      ///< optimum without it
    double gap = 0;        ///< |zeta1 - zeta2| / max(zeta2, eps)
    double merged_worst_residual = 0;  ///< reduced-program feasibility of the merged point
    double merged_slack_m = 0;
    double original_slack_m = 0;
    bool passed = false;
    std::string detail;
};

inline Theorem1Report verify_theorem1(const ChannelSet& ch, const SystemConfig& cfg,
                                      const ReflectionState& refl, double tol = 1e-4,
                                      const conic::SolverSettings& cs = {}) {
    check_sum_power_hypotheses(cfg);
    require(cfg.K_I >= 1, "verify_theorem1: needs at least one information user");

    const auto eff = effective_channels(ch, refl);
    CMat S = CMat::Zero(cfg.M, cfg.M);
    for (int j = 0; j < cfg.K_E; ++j) S += cfg.alpha(j) * (eff.g[j] * eff.g[j].adjoint());
    S = hermitian_part(S);
    const CMat theta = refl.theta();
    const CMat C = hermitian_part((ch.F.adjoint() * theta.adjoint()) * (theta * ch.F));
    const double PI_bar = cfg.P_I - cfg.sigma_z2 * refl.u.squaredNorm();
    require(PI_bar > 0, "verify_theorem1: amplification budget exhausted by noise");

    double noise_harvest = 0;  // constant part of the objective at this state
    for (int j = 0; j < cfg.K_E; ++j) {
        const CVec scaled = ch.g_r[j].conjugate().cwiseProduct(refl.u);
        noise_harvest += cfg.alpha(j) * cfg.sigma_z2 * scaled.squaredNorm();
    }
    RVec noise_floor(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i) noise_floor(i) = iu_noise_floor(i, refl, ch, cfg);

    // One builder for both programs; with_energy toggles the extra block.
    const auto build_and_solve = [&](bool with_energy) {
        conic::Program prog;
        std::vector<int> blocks;
        const int nb = cfg.K_I + (with_energy ? 1 : 0);
        for (int b = 0; b < nb; ++b) blocks.push_back(prog.add_herm_block(cfg.M, cfg.P_A));
        auto obj = prog.form();
        for (int b = 0; b < nb; ++b) obj.herm[blocks[b]] = S;
        obj.constant = noise_harvest;
        prog.objective = obj;
        for (int i = 0; i < cfg.K_I; ++i) {
            const CMat Hi = eff.h[i] * eff.h[i].adjoint();
            auto f = prog.form();
            for (int k = 0; k < nb; ++k)
                f.herm[blocks[k]] = (k == i) ? CMat(-Hi / cfg.gamma(i)) : Hi;
            f.constant = noise_floor(i);
            prog.linear.push_back({f, conic::Rel::Le, "sinr_iu" + std::to_string(i)});
        }
        auto pa = prog.form();
        for (int b = 0; b < nb; ++b) pa.herm[blocks[b]] = CMat::Identity(cfg.M, cfg.M);
        pa.constant = -cfg.P_A;
        prog.linear.push_back({pa, conic::Rel::Le, "ap_power"});
        auto pi = prog.form();
        for (int b = 0; b < nb; ++b) pi.herm[blocks[b]] = C;
        pi.constant = -PI_bar;
        prog.linear.push_back({pi, conic::Rel::Le, "amplification"});
        return conic::solve(prog, cs);
    };

    const auto sol1 = build_and_solve(true);
    const auto sol2 = build_and_solve(false);
    if (sol1.status != conic::SolveStatus::Optimal || sol2.status != conic::SolveStatus::Optimal)
        throw VerificationFailed("cross-solve failed: " + sol1.message + " / " + sol2.message);

    Theorem1Report rep;
    rep.zeta1 = sol1.objective;
    rep.zeta2 = sol2.objective;
    rep.gap = std::abs(rep.zeta1 - rep.zeta2) / std::max(std::abs(rep.zeta2), 1e-30);

    // Merge the energy block into the first beam covariance and re-check the
    // reduced program's constraints.
    const int m = 0;
    std::vector<CMat> merged(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i) merged[i] = sol1.herm[i];
    merged[m] += sol1.herm[cfg.K_I];

    const auto sinr_slack = [&](const std::vector<CMat>& W, int i, double extra_interf) {
        const CMat Hi = eff.h[i] * eff.h[i].adjoint();
        double v = (Hi * W[i]).trace().real() / cfg.gamma(i);
        for (int k = 0; k < cfg.K_I; ++k)
            if (k != i) v -= (Hi * W[k]).trace().real();
        return v - extra_interf - noise_floor(i);
    };

    double worst = -std::numeric_limits<double>::infinity();
    std::ostringstream det;
    for (int i = 0; i < cfg.K_I; ++i) {
        const double s = sinr_slack(merged, i, 0.0);
        worst = std::max(worst, -s);  // residual <= 0 means satisfied
        det << "sinr_slack[" << i << "]=" << s << " ";
    }
    double tr_sum = 0, amp_sum = 0;
    for (const auto& Wb : merged) {
        tr_sum += Wb.trace().real();
        amp_sum += (C * Wb).trace().real();
    }
    worst = std::max({worst, tr_sum - cfg.P_A, amp_sum - PI_bar});
    rep.merged_worst_residual = worst;

    const CMat Hm = eff.h[m] * eff.h[m].adjoint();
    rep.original_slack_m = sinr_slack({sol1.herm.begin(), sol1.herm.begin() + cfg.K_I}, m,
                                      (Hm * sol1.herm[cfg.K_I]).trace().real());
    rep.merged_slack_m = sinr_slack(merged, m, 0.0);

    const double scale = std::max({cfg.P_A, PI_bar, 1e-30});
    rep.passed = rep.gap <= tol && worst <= 1e-7 * scale &&
                 rep.merged_slack_m >= rep.original_slack_m - 1e-9 * scale;
    rep.detail = det.str();
    return rep;
}

/// Checks the constructive argument behind the rank-one rebalancing for the
/// sum-rate relaxation on a concrete block set.
struct Theorem2Report {
    int rank_one_blocks = 0;
    double min_eigenvalue_ratio = 0;   ///< most negative eigenvalue over the largest
    double sum_preservation = 0;       ///< relative Frobenius drift of the block sum
    double worst_value_drift = 0;      ///< relative drift of preserved aggregates
    double worst_interference_increase = 0;  ///< must be <= tolerance
    bool passed = false;
    std::vector<CMat> constructed;
};

inline Theorem2Report verify_theorem2_construction(const std::vector<CMat>& W,
                                                   const ChannelSet& ch,
                                                   const SystemConfig& cfg,
                                                   const ReflectionState& refl,
                                                   double tol = 1e-8, int m = -1) {
    const int K = static_cast<int>(W.size());
    require(K == cfg.K_I && K >= 1, "verify_theorem2_construction: block count mismatch");
    const auto eff = effective_channels(ch, refl);

    if (m < 0) {
        // the most rank-deficient candidate absorbs the residual
        double best = -1;
        m = 0;
        for (int i = 0; i < K; ++i) {
            const auto rep = rank_report(W[i]);
            const double l2 = rep.eigenvalues.size() > 1 ? rep.eigenvalues(1) : 0.0;
            if (l2 > best) {
                best = l2;
                m = i;
            }
        }
    }

    Theorem2Report rep;
    rep.constructed = detail::rank_one_rebalance(W, eff.h, m);

    CMat sum_before = CMat::Zero(cfg.M, cfg.M), sum_after = sum_before;
    for (int i = 0; i < K; ++i) {
        sum_before += W[i];
        sum_after += rep.constructed[i];
    }
    rep.sum_preservation = (sum_before - sum_after).norm() / std::max(sum_before.norm(), 1e-30);

    double block_scale = 1e-300;
    for (int i = 0; i < K; ++i)
        block_scale = std::max(block_scale, rank_report(W[i]).eigenvalues(0));
    double min_ratio = 0;
    for (int i = 0; i < K; ++i) {
        const auto r = rank_report(rep.constructed[i]);
        if (r.numerical_rank <= 1) ++rep.rank_one_blocks;
        min_ratio = std::min(min_ratio, r.eigenvalues.minCoeff() / block_scale);
        if (i != m) {
            // the donor difference must stay PSD
            const auto d = rank_report(W[i] - rep.constructed[i]);
            min_ratio = std::min(min_ratio, d.eigenvalues.minCoeff() / block_scale);
        }
    }
    rep.min_eigenvalue_ratio = min_ratio;

    // aggregate functionals: total received power per IU, harvested power per
    // EU, transmit power, amplification load
    double drift = 0;
    const auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
    };
    const CMat theta = refl.theta();
    const CMat C = hermitian_part((ch.F.adjoint() * theta.adjoint()) * (theta * ch.F));
    auto aggregate = [&](const std::vector<CMat>& blocks, const CMat& D) {
        double v = 0;
        for (const auto& b : blocks) v += (D * b).trace().real();
        return v;
    };
    for (int i = 0; i < K; ++i) {
        const CMat Hi = eff.h[i] * eff.h[i].adjoint();
        drift = std::max(drift, rel(aggregate(W, Hi), aggregate(rep.constructed, Hi)));
        double before = 0, after = 0;
        for (int k = 0; k < K; ++k)
            if (k != i) {
                before += (Hi * W[k]).trace().real();
                after += (Hi * rep.constructed[k]).trace().real();
            }
        rep.worst_interference_increase =
            std::max(rep.worst_interference_increase,
                     (after - before) / std::max(std::abs(before), 1e-30));
    }
    for (int j = 0; j < cfg.K_E; ++j) {
        const CMat Gj = eff.g[j] * eff.g[j].adjoint();
        drift = std::max(drift, rel(aggregate(W, Gj), aggregate(rep.constructed, Gj)));
    }
    drift = std::max(drift, rel(aggregate(W, CMat::Identity(cfg.M, cfg.M)),
                                aggregate(rep.constructed, CMat::Identity(cfg.M, cfg.M))));
    drift = std::max(drift, rel(aggregate(W, C), aggregate(rep.constructed, C)));
    rep.worst_value_drift = drift;

    rep.passed = rep.rank_one_blocks >= K - 1 && rep.min_eigenvalue_ratio >= -1e-9 &&
                 rep.sum_preservation <= tol && drift <= tol &&
                 rep.worst_interference_increase <= 1e-9;
    return rep;
}

}  // namespace airs

#pragma once

#include "airs/conic/solver.hpp"
#include "airs/feasibility.hpp"
#include "airs/lifted.hpp"
#include "airs/sdr.hpp"

namespace airs {

struct BudgetExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HypothesisViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AlgoStatus { Converged, IterationLimit, Infeasible, NumericalFailure };

inline const char* to_string(AlgoStatus s) {
    switch (s) {
        case AlgoStatus::Converged: return "Converged";
        case AlgoStatus::IterationLimit: return "IterationLimit";
        case AlgoStatus::Infeasible: return "Infeasible";
        case AlgoStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

/// Knobs shared by the alternating-optimization solvers.
struct AlgoSettings {
    double ao_tol = 1e-4;      ///< relative objective gain that stops the outer loop
    int max_ao_iters = 30;
    double sca_tol = 1e-4;     ///< inner successive-approximation loop
    int max_sca_iters = 20;
    int gr_draws = 500;        ///< randomization candidates
    bool closed_form_phases = true;
    std::uint64_t seed = 1;    ///< initialization & randomization substreams
    conic::SolverSettings conic;
};

/// Common run record: objective trace across block updates, iteration count
/// and the final feasibility check.
struct SolveReport {
    AlgoStatus status = AlgoStatus::Converged;
    std::vector<double> objective_trace;
    int iterations = 0;
    FeasibilityReport feasibility;
    double wall_ms = 0;
};

namespace detail {

inline CVec dominant_eigvec(const CMat& S) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(S));
    return es.eigenvectors().col(S.rows() - 1);
}

/// EU-weighted transmit kernel sum_j alpha_j g_j g_j^H at the given state.
inline CMat transmit_kernel(const ChannelSet& ch, const ReflectionState& refl,
                            const SystemConfig& cfg) {
    CMat S = CMat::Zero(cfg.M, cfg.M);
    for (int j = 0; j < cfg.K_E; ++j) {
        const CVec g = effective_channel(ch.g_d[j], ch.g_r[j], ch.F, refl);
        S += cfg.alpha(j) * (g * g.adjoint());
    }
    return hermitian_part(S);
}

}  // namespace detail

/// Starting reflection state: uniformly random phases and a common amplitude
/// that spends 90% of the surface budget under a nominal full-power beam
/// aligned with the direct-link transmit kernel.
inline ReflectionState initial_reflection(const ChannelSet& ch, const SystemConfig& cfg,
                                          std::uint64_t seed) {
    const CMat S0 = detail::transmit_kernel(ch, ReflectionState::zero(cfg.N), cfg);
    const CVec beam = std::sqrt(cfg.P_A) * detail::dominant_eigvec(S0);
    const CVec Fb = ch.F * beam;
    const double denom = Fb.squaredNorm() + cfg.sigma_z2 * cfg.N;
    const double beta = std::sqrt(0.9 * cfg.P_I / denom);

    Philox rng(seed, stream::init_phases(0));
    RVec theta(cfg.N);
    for (int n = 0; n < cfg.N; ++n) theta(n) = rng.uniform(0.0, 2.0 * kPi);
    return ReflectionState::from_polar(RVec::Constant(cfg.N, beta), theta);
}

}  // namespace airs

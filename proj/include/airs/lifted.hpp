#pragma once

#include "airs/metrics.hpp"

namespace airs {

/// Augmented reflect vector: the element coefficients conjugated and padded
/// with a trailing 1, so every quadratic form below closes over an
/// (N+1)-dimensional vector whose last entry is pinned.
inline CVec aug_reflect(const ReflectionState& refl) {
    CVec ub(refl.size() + 1);
    ub.head(refl.size()) = refl.u.conjugate();
    ub(refl.size()) = cx(1.0, 0.0);
    return ub;
}

inline ReflectionState reflect_from_aug(const CVec& ub) {
    const Eigen::Index n = ub.size() - 1;
    return ReflectionState(CVec(ub.head(n).conjugate()));
}

/// Matrix operators that linearize the reflect dependence: with
/// ub = aug_reflect(u),
///   ub^H cascade       == effective end-to-end row channel,
///   ub^H refl_gram ub  == squared norm of the reflected-link row,
///   ub^H amp_kernel ub == amplified power of one beam,
///   ub^H elem_proj ub  == ||Theta||_F^2.
struct LiftedOperators {
    std::vector<CMat> cascade_iu;   ///< per-IU, (N+1) x M
    std::vector<CMat> cascade_eu;   ///< per-EU, (N+1) x M
    std::vector<CMat> refl_gram_iu; ///< per-IU, diagonal (N+1) x (N+1)
    std::vector<CMat> refl_gram_eu; ///< per-EU, diagonal (N+1) x (N+1)
    std::vector<CMat> amp_kernel;   ///< per information beam, diagonal
    CMat elem_proj;                 ///< diagonal projector onto element coords

    CMat wpt_kernel;       ///< objective kernel for the energy-only reflect step
    CMat amp_kernel_beam;  ///< amplification kernel of the dedicated energy beam
};

namespace detail {

inline CMat cascade_matrix(const CVec& reflected, const CVec& direct, const CMat& F) {
    const Eigen::Index N = F.rows(), M = F.cols();
    CMat G(N + 1, M);
    G.topRows(N) = reflected.conjugate().asDiagonal() * F;
    G.row(N) = direct.adjoint();
    return G;
}

inline CMat refl_gram(const CVec& reflected) {
    const Eigen::Index N = reflected.size();
    CMat Z = CMat::Zero(N + 1, N + 1);
    for (Eigen::Index n = 0; n < N; ++n) Z(n, n) = std::norm(reflected(n));
    return Z;
}

/// diag of F W F^H padded with a zero: the per-element incident power of a
/// beam covariance W, which is what the surface amplifies.
inline CMat amp_kernel_of_cov(const CMat& F, const CMat& W) {
    const Eigen::Index N = F.rows();
    CMat Q = CMat::Zero(N + 1, N + 1);
    const CMat FW = F * W;
    for (Eigen::Index n = 0; n < N; ++n) Q(n, n) = (FW.row(n) * F.row(n).adjoint())(0, 0).real();
    return Q;
}

inline CMat amp_kernel_of_beam(const CMat& F, const CVec& w) {
    const Eigen::Index N = F.rows();
    CMat Q = CMat::Zero(N + 1, N + 1);
    const CVec Fw = F * w;
    for (Eigen::Index n = 0; n < N; ++n) Q(n, n) = std::norm(Fw(n));
    return Q;
}

}  // namespace detail

/// Builds every lifted operator for the given channels; beam-dependent
/// kernels are built from `prec` (information beams) and, when nonempty,
/// the first energy beam.
inline LiftedOperators build_lifted(const ChannelSet& ch, const Precoder& prec,
                                    const SystemConfig& cfg) {
    ch.validate(cfg);
    LiftedOperators L;
    const Eigen::Index N = cfg.N;

    for (int i = 0; i < cfg.K_I; ++i) {
        L.cascade_iu.push_back(detail::cascade_matrix(ch.h_r[i], ch.h_d[i], ch.F));
        L.refl_gram_iu.push_back(detail::refl_gram(ch.h_r[i]));
    }
    for (int j = 0; j < cfg.K_E; ++j) {
        L.cascade_eu.push_back(detail::cascade_matrix(ch.g_r[j], ch.g_d[j], ch.F));
        L.refl_gram_eu.push_back(detail::refl_gram(ch.g_r[j]));
    }

    L.elem_proj = CMat::Zero(N + 1, N + 1);
    for (Eigen::Index n = 0; n < N; ++n) L.elem_proj(n, n) = 1.0;

    for (int i = 0; i < cfg.K_I && i < static_cast<int>(prec.w.size()); ++i)
        L.amp_kernel.push_back(detail::amp_kernel_of_beam(ch.F, prec.w[i]));

    if (!prec.v.empty()) {
        const CVec& v0 = prec.v.front();
        L.amp_kernel_beam = detail::amp_kernel_of_beam(ch.F, v0);
        L.wpt_kernel = CMat::Zero(N + 1, N + 1);
        for (int j = 0; j < cfg.K_E; ++j) {
            const CVec Gv = L.cascade_eu[j] * v0;
            L.wpt_kernel += cfg.alpha(j) * (Gv * Gv.adjoint() + cfg.sigma_z2 * L.refl_gram_eu[j]);
        }
        L.wpt_kernel = hermitian_part(L.wpt_kernel);
    }
    return L;
}

}  // namespace airs

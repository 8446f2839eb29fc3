#pragma once

#include "airs/types.hpp"

namespace airs {

/// End-to-end channels seen through the surface: the reflected path
/// composes with the direct one, h^H = h_r^H Theta F + h_d^H.
struct EffectiveChannels {
    std::vector<CVec> h;  ///< per-IU, length M
    std::vector<CVec> g;  ///< per-EU, length M
};

inline CVec effective_channel(const CVec& direct, const CVec& reflected, const CMat& F,
                              const ReflectionState& refl) {
    require(F.rows() == refl.size() && reflected.size() == refl.size() &&
                direct.size() == F.cols(),
            "effective_channel: dimension mismatch");
    // row = r^H Theta F + d^H, returned as a column vector (its adjoint).
    Eigen::RowVectorXcd row =
        reflected.adjoint() * refl.u.asDiagonal() * F + direct.adjoint();
    return row.adjoint();
}

inline EffectiveChannels effective_channels(const ChannelSet& ch, const ReflectionState& refl) {
    EffectiveChannels out;
    out.h.reserve(ch.h_d.size());
    out.g.reserve(ch.g_d.size());
    for (std::size_t i = 0; i < ch.h_d.size(); ++i)
        out.h.push_back(effective_channel(ch.h_d[i], ch.h_r[i], ch.F, refl));
    for (std::size_t j = 0; j < ch.g_d.size(); ++j)
        out.g.push_back(effective_channel(ch.g_d[j], ch.g_r[j], ch.F, refl));
    return out;
}

/// Noise floor at IU i including the amplified surface noise:
/// sigma_z^2 ||h_r^H Theta||^2 + sigma_i^2.
inline double iu_noise_floor(int i, const ReflectionState& refl, const ChannelSet& ch,
                             const SystemConfig& cfg) {
    const CVec scaled = ch.h_r[i].conjugate().cwiseProduct(refl.u);
    return cfg.sigma_z2 * scaled.squaredNorm() + cfg.sigma_i2(i);
}

inline double sinr(int i, const Precoder& prec, const ReflectionState& refl,
                   const ChannelSet& ch, const SystemConfig& cfg) {
    require(cfg.K_I >= 1 && i >= 0 && i < cfg.K_I, "sinr: IU index out of range");
    const CVec h = effective_channel(ch.h_d[i], ch.h_r[i], ch.F, refl);
    double interference = 0;
    for (int k = 0; k < cfg.K_I; ++k)
        if (k != i) interference += std::norm(h.dot(prec.w[k]));
    for (const auto& vb : prec.v) interference += std::norm(h.dot(vb));
    const double signal = std::norm(h.dot(prec.w[i]));
    return signal / (interference + iu_noise_floor(i, refl, ch, cfg));
}

/// Achievable rate in bps/Hz.
inline double rate(int i, const Precoder& prec, const ReflectionState& refl,
                   const ChannelSet& ch, const SystemConfig& cfg) {
    return std::log2(1.0 + sinr(i, prec, refl, ch, cfg));
}

inline double weighted_sum_rate(const Precoder& prec, const ReflectionState& refl,
                                const ChannelSet& ch, const SystemConfig& cfg) {
    double s = 0;
    for (int i = 0; i < cfg.K_I; ++i) s += cfg.mu(i) * rate(i, prec, refl, ch, cfg);
    return s;
}

/// RF power collected at EU j: every beam contributes, and so does the
/// surface noise reradiated over the IRS->EU link.
inline double harvested_power(int j, const Precoder& prec, const ReflectionState& refl,
                              const ChannelSet& ch, const SystemConfig& cfg) {
    require(j >= 0 && j < cfg.K_E, "harvested_power: EU index out of range");
    const CVec g = effective_channel(ch.g_d[j], ch.g_r[j], ch.F, refl);
    double q = 0;
    for (const auto& wb : prec.w) q += std::norm(g.dot(wb));
    for (const auto& vb : prec.v) q += std::norm(g.dot(vb));
    const CVec scaled = ch.g_r[j].conjugate().cwiseProduct(refl.u);
    q += cfg.sigma_z2 * scaled.squaredNorm();
    return q;
}

inline double weighted_sum_power(const Precoder& prec, const ReflectionState& refl,
                                 const ChannelSet& ch, const SystemConfig& cfg) {
    double s = 0;
    for (int j = 0; j < cfg.K_E; ++j) s += cfg.alpha(j) * harvested_power(j, prec, refl, ch, cfg);
    return s;
}

/// Power consumed by the active surface: amplified signal plus amplified
/// thermal noise, sum_b ||Theta F b||^2 + sigma_z^2 ||Theta||_F^2.
inline double amplification_power(const Precoder& prec, const ReflectionState& refl,
                                  const ChannelSet& ch, const SystemConfig& cfg) {
    const auto theta = refl.u.asDiagonal();
    double p = 0;
    for (const auto& wb : prec.w) p += (theta * (ch.F * wb)).squaredNorm();
    for (const auto& vb : prec.v) p += (theta * (ch.F * vb)).squaredNorm();
    p += cfg.sigma_z2 * refl.u.squaredNorm();
    return p;
}

}  // namespace airs

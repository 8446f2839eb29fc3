#pragma once

#include "airs/rng.hpp"
#include "airs/types.hpp"

#include <array>

namespace airs {

/// Planar deployment: the AP sits at (d_A, 0, 0), the IRS at (0, d_IRS, 0),
/// and the user clusters are disks in the z = 0 plane centered at
/// (d_A, d_I, 0) and (d_A, d_E, 0).
struct Geometry {
    double d_A = 3.0;
    double d_IRS = 8.0;
    double d_I = 100.0;
    double d_E = 8.0;
    double r_I = 2.0;
    double r_E = 2.0;

    void validate() const {
        require(d_A > 0 && d_IRS > 0 && d_I > 0 && d_E > 0, "Geometry: distances must be positive");
        require(r_I >= 0 && r_E >= 0, "Geometry: radii must be nonnegative");
    }

    std::array<double, 3> ap_pos() const { return {d_A, 0.0, 0.0}; }
    std::array<double, 3> irs_pos() const { return {0.0, d_IRS, 0.0}; }
    std::array<double, 3> iu_center() const { return {d_A, d_I, 0.0}; }
    std::array<double, 3> eu_center() const { return {d_A, d_E, 0.0}; }
};

/// Distance-power law and small-scale fading parameters. The reference gain
/// C0 is tied to the carrier wavelength, C0 = (lambda_c / 4 pi)^2 at D0 = 1 m.
struct FadingConfig {
    double lambda_c = 0.4;  ///< carrier wavelength [m]
    double D0 = 1.0;        ///< reference distance [m]
    double alpha_AI = 2.2;  ///< AP-IRS exponent
    double alpha_Iu = 2.2;  ///< IRS-user exponent
    double alpha_Au = 3.2;  ///< AP-user exponent
    double rician_K = 1.9952623149688795;  ///< 3 dB, linear

    double C0() const {
        const double x = lambda_c / (4.0 * kPi);
        return x * x;
    }

    void validate() const {
        require(lambda_c > 0 && D0 > 0, "FadingConfig: lambda_c, D0 must be positive");
        require(alpha_AI >= 2 && alpha_Iu >= 2 && alpha_Au >= 2,
                "FadingConfig: path loss exponents must be >= 2");
        require(rician_K >= 0, "FadingConfig: Rician factor must be nonnegative");
    }
};

/// Linear power gain C0 (d / D0)^(-alpha).
inline double path_loss(double d, double alpha, const FadingConfig& fading) {
    require(d > 0, "path_loss: distance must be positive");
    return fading.C0() * std::pow(d / fading.D0, -alpha);
}

inline double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Positions drawn uniformly over the disk area (not uniform in radius).
inline std::vector<std::array<double, 3>> place_users(const std::array<double, 3>& center,
                                                      double radius, int count, Philox& rng) {
    std::vector<std::array<double, 3>> pos(count);
    for (int k = 0; k < count; ++k) {
        const double r = radius * std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        pos[k] = {center[0] + r * std::cos(phi), center[1] + r * std::sin(phi), center[2]};
    }
    return pos;
}

/// Half-wavelength ULA steering vector for a linear array along the x axis.
/// `from` -> `to` fixes the departure/arrival direction.
inline CVec steering(int n_elem, const std::array<double, 3>& from,
                     const std::array<double, 3>& to) {
    const double d = dist3(from, to);
    const double cos_x = (to[0] - from[0]) / d;
    CVec a(n_elem);
    for (int k = 0; k < n_elem; ++k) a(k) = std::polar(1.0, kPi * k * cos_x);
    return a;
}

/// sqrt(pathloss) * ( sqrt(K/(K+1)) LoS + sqrt(1/(K+1)) NLoS ) with i.i.d.
/// CN(0,1) NLoS entries. K = 0 degenerates to Rayleigh.
inline CMat rician_channel(Eigen::Index rows, Eigen::Index cols, double pathloss, double K,
                           const CMat& los, Philox& rng) {
    require(los.rows() == rows && los.cols() == cols, "rician_channel: LoS dimensions");
    const double a = std::sqrt(pathloss * K / (K + 1.0));
    const double b = std::sqrt(pathloss / (K + 1.0));
    return a * los + b * rng.cnormal_mat(rows, cols);
}

inline CVec rayleigh_channel(Eigen::Index n, double pathloss, Philox& rng) {
    return std::sqrt(pathloss) * rng.cnormal_vec(n);
}

struct Scenario {
    ChannelSet channels;
    std::vector<std::array<double, 3>> iu_pos;
    std::vector<std::array<double, 3>> eu_pos;
};

/// One seeded realization of user placements and all channel matrices.
/// AP-IRS and IRS-user links are Rician with geometry-derived LoS rays;
/// AP-user links are Rayleigh. Every link draws from its own substream so
/// realizations are reproducible link by link.
inline Scenario generate_scenario(const SystemConfig& cfg, const Geometry& geom,
                                  const FadingConfig& fading, std::uint64_t seed,
                                  bool irs_iu_link = true) {
    cfg.validate();
    geom.validate();
    fading.validate();

    Scenario sc;
    {
        Philox rng(seed, stream::kPlaceIu);
        sc.iu_pos = place_users(geom.iu_center(), geom.r_I, cfg.K_I, rng);
    }
    {
        Philox rng(seed, stream::kPlaceEu);
        sc.eu_pos = place_users(geom.eu_center(), geom.r_E, cfg.K_E, rng);
    }

    const auto ap = geom.ap_pos();
    const auto irs = geom.irs_pos();

    {
        Philox rng(seed, stream::kApIrs);
        const double pl = path_loss(dist3(ap, irs), fading.alpha_AI, fading);
        const CMat los = steering(cfg.N, irs, ap) * steering(cfg.M, ap, irs).adjoint();
        sc.channels.F = rician_channel(cfg.N, cfg.M, pl, fading.rician_K, los, rng);
    }

    sc.channels.h_d.resize(cfg.K_I);
    sc.channels.h_r.resize(cfg.K_I);
    for (int i = 0; i < cfg.K_I; ++i) {
        {
            Philox rng(seed, stream::ap_iu(i));
            const double pl = path_loss(dist3(ap, sc.iu_pos[i]), fading.alpha_Au, fading);
            sc.channels.h_d[i] = rayleigh_channel(cfg.M, pl, rng);
        }
        {
            Philox rng(seed, stream::irs_iu(i));
            const double pl = path_loss(dist3(irs, sc.iu_pos[i]), fading.alpha_Iu, fading);
            const CMat los = steering(cfg.N, irs, sc.iu_pos[i]);
            CMat link = rician_channel(cfg.N, 1, pl, fading.rician_K, los, rng);
            sc.channels.h_r[i] = irs_iu_link ? CVec(link.col(0)) : CVec(CVec::Zero(cfg.N));
        }
    }

    sc.channels.g_d.resize(cfg.K_E);
    sc.channels.g_r.resize(cfg.K_E);
    for (int j = 0; j < cfg.K_E; ++j) {
        {
            Philox rng(seed, stream::ap_eu(j));
            const double pl = path_loss(dist3(ap, sc.eu_pos[j]), fading.alpha_Au, fading);
            sc.channels.g_d[j] = rayleigh_channel(cfg.M, pl, rng);
        }
        {
            Philox rng(seed, stream::irs_eu(j));
            const double pl = path_loss(dist3(irs, sc.eu_pos[j]), fading.alpha_Iu, fading);
            const CMat los = steering(cfg.N, irs, sc.eu_pos[j]);
            sc.channels.g_r[j] = rician_channel(cfg.N, 1, pl, fading.rician_K, los, rng).col(0);
        }
    }

    sc.channels.validate(cfg);
    return sc;
}

}  // namespace airs

#pragma once

#include "airs/common.hpp"

namespace airs {

/// Static system description: array sizes, power budgets, noise levels and
/// per-user targets/weights. Powers and variances are in watts (linear).
struct SystemConfig {
    int M = 1;    ///< AP antennas
    int N = 1;    ///< IRS elements
    int K_I = 0;  ///< information users
    int K_E = 1;  ///< energy users

    double P_A = 1.0;        ///< AP transmit power budget [W]
    double P_I = 1.0;        ///< IRS amplification power budget [W]
    double sigma_z2 = 1e-11; ///< IRS-injected noise variance [W]

    RVec sigma_i2;  ///< per-IU receiver noise variance [W], size K_I
    RVec gamma;     ///< per-IU SINR targets (linear), size K_I
    RVec E;         ///< per-EU harvested-power targets [W], size K_E
    RVec alpha;     ///< per-EU energy weights, size K_E
    RVec mu;        ///< per-IU rate weights, size K_I

    void validate() const {
        require(M >= 1 && N >= 1 && K_I >= 0 && K_E >= 1, "SystemConfig: bad dimensions");
        require(P_A > 0 && P_I > 0 && sigma_z2 > 0, "SystemConfig: powers must be positive");
        require(sigma_i2.size() == K_I && gamma.size() == K_I && mu.size() == K_I,
                "SystemConfig: IU list lengths must match K_I");
        require(E.size() == K_E && alpha.size() == K_E,
                "SystemConfig: EU list lengths must match K_E");
        for (int i = 0; i < K_I; ++i)
            require(sigma_i2(i) > 0, "SystemConfig: sigma_i2 must be positive");
        for (int i = 0; i < K_I; ++i)
            require(mu(i) >= 0, "SystemConfig: mu must be nonnegative");
        for (int j = 0; j < K_E; ++j)
            require(E(j) >= 0 && alpha(j) >= 0, "SystemConfig: E, alpha must be nonnegative");
    }

    /// Convenience builder with equal per-user settings.
    static SystemConfig make(int M, int N, int K_I, int K_E, double P_A, double P_I,
                             double sigma_z2, double sigma_i2_each, double gamma_each = 1.0,
                             double E_each = 0.0) {
        SystemConfig c;
        c.M = M;
        c.N = N;
        c.K_I = K_I;
        c.K_E = K_E;
        c.P_A = P_A;
        c.P_I = P_I;
        c.sigma_z2 = sigma_z2;
        c.sigma_i2 = RVec::Constant(K_I, sigma_i2_each);
        c.gamma = RVec::Constant(K_I, gamma_each);
        c.mu = RVec::Ones(K_I);
        c.E = RVec::Constant(K_E, E_each);
        c.alpha = RVec::Ones(K_E);
        c.validate();
        return c;
    }
};

/// One channel realization: AP->IRS matrix plus direct and reflected links
/// for every user.
struct ChannelSet {
    CMat F;                   ///< N x M, AP -> IRS
    std::vector<CVec> h_d;    ///< K_I direct links, each M
    std::vector<CVec> h_r;    ///< K_I IRS->IU links, each N
    std::vector<CVec> g_d;    ///< K_E direct links, each M
    std::vector<CVec> g_r;    ///< K_E IRS->EU links, each N

    void validate(const SystemConfig& cfg) const {
        require(F.rows() == cfg.N && F.cols() == cfg.M, "ChannelSet: F dimensions");
        require(static_cast<int>(h_d.size()) == cfg.K_I &&
                    static_cast<int>(h_r.size()) == cfg.K_I,
                "ChannelSet: IU link counts");
        require(static_cast<int>(g_d.size()) == cfg.K_E &&
                    static_cast<int>(g_r.size()) == cfg.K_E,
                "ChannelSet: EU link counts");
        for (const auto& v : h_d) require(v.size() == cfg.M, "ChannelSet: h_d length");
        for (const auto& v : h_r) require(v.size() == cfg.N, "ChannelSet: h_r length");
        for (const auto& v : g_d) require(v.size() == cfg.M, "ChannelSet: g_d length");
        for (const auto& v : g_r) require(v.size() == cfg.N, "ChannelSet: g_r length");
        require(F.allFinite(), "ChannelSet: non-finite entries in F");
        for (const auto& v : h_d) require(v.allFinite(), "ChannelSet: non-finite h_d");
        for (const auto& v : h_r) require(v.allFinite(), "ChannelSet: non-finite h_r");
        for (const auto& v : g_d) require(v.allFinite(), "ChannelSet: non-finite g_d");
        for (const auto& v : g_r) require(v.allFinite(), "ChannelSet: non-finite g_r");
    }
};

/// The N active-element coefficients. Element n applies u_n = beta_n e^{j theta_n}
/// to the incident signal; beta_n may exceed one.
struct ReflectionState {
    CVec u;  ///< per-element complex coefficients, size N

    ReflectionState() = default;
    explicit ReflectionState(CVec coeffs) : u(std::move(coeffs)) {}

    static ReflectionState zero(int N) { return ReflectionState(CVec::Zero(N)); }

    static ReflectionState from_polar(const RVec& beta, const RVec& theta) {
        require(beta.size() == theta.size(), "ReflectionState: beta/theta lengths differ");
        CVec u(beta.size());
        for (Eigen::Index n = 0; n < beta.size(); ++n) {
            require(beta(n) >= 0, "ReflectionState: negative amplitude");
            u(n) = std::polar(beta(n), theta(n));
        }
        return ReflectionState(std::move(u));
    }

    Eigen::Index size() const { return u.size(); }

    RVec amplitudes() const { return u.cwiseAbs(); }

    /// Phases reduced into [0, 2*pi).
    RVec phases() const {
        RVec t(u.size());
        for (Eigen::Index n = 0; n < u.size(); ++n) {
            double a = std::arg(u(n));
            if (a < 0) a += 2.0 * kPi;
            t(n) = a;
        }
        return t;
    }

    /// The diagonal reflection matrix.
    CMat theta() const { return CMat(u.asDiagonal()); }
};

/// AP precoder: one information beam per IU and optional dedicated energy
/// beams (all-zero when the design does without them).
struct Precoder {
    std::vector<CVec> w;  ///< information beams, K_I entries of length M
    std::vector<CVec> v;  ///< energy beams, any count, each length M

    static Precoder zero(int M, int K_I, int num_energy = 0) {
        Precoder p;
        p.w.assign(K_I, CVec::Zero(M));
        p.v.assign(num_energy, CVec::Zero(M));
        return p;
    }

    double total_power() const {
        double s = 0;
        for (const auto& b : w) s += b.squaredNorm();
        for (const auto& b : v) s += b.squaredNorm();
        return s;
    }
};

}  // namespace airs

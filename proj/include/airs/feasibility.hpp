#pragma once

#include "airs/metrics.hpp"

#include <algorithm>

namespace airs {

enum class ProblemKind { SumPower, SumRate };

/// One constraint check: residual <= 0 means satisfied; `scale` is the
/// magnitude against which a relative tolerance should be read.
struct ConstraintResidual {
    std::string name;
    double residual = 0;
    double scale = 1;

    bool satisfied(double tol) const { return residual <= tol * scale; }
};

struct FeasibilityReport {
    std::vector<ConstraintResidual> rows;
    double tol = 1e-6;

    bool feasible() const {
        return std::all_of(rows.begin(), rows.end(),
                           [&](const ConstraintResidual& r) { return r.satisfied(tol); });
    }

    double worst_relative() const {
        double w = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) w = std::max(w, r.residual / r.scale);
        return w;
    }
};

/// Signed residuals for every constraint of the selected problem at a
/// candidate (precoder, reflection) pair.
inline FeasibilityReport feasibility_report(ProblemKind kind, const Precoder& prec,
                                            const ReflectionState& refl, const ChannelSet& ch,
                                            const SystemConfig& cfg, double tol = 1e-6) {
    FeasibilityReport rep;
    rep.tol = tol;

    const double ap = prec.total_power();
    rep.rows.push_back({"ap_power", ap - cfg.P_A, cfg.P_A});

    const double amp = amplification_power(prec, refl, ch, cfg);
    rep.rows.push_back({"irs_power", amp - cfg.P_I, cfg.P_I});

    if (kind == ProblemKind::SumPower) {
        for (int i = 0; i < cfg.K_I; ++i) {
            // In watts: gamma * (interference + noise) - signal <= 0.
            const CVec h = effective_channel(ch.h_d[i], ch.h_r[i], ch.F, refl);
            double interference = 0;
            for (int k = 0; k < cfg.K_I; ++k)
                if (k != i) interference += std::norm(h.dot(prec.w[k]));
            for (const auto& vb : prec.v) interference += std::norm(h.dot(vb));
            const double denom = interference + iu_noise_floor(i, refl, ch, cfg);
            const double signal = std::norm(h.dot(prec.w[i]));
            const double scale = std::max(signal, cfg.gamma(i) * denom);
            rep.rows.push_back({"sinr_iu" + std::to_string(i),
                                cfg.gamma(i) * denom - signal,
                                scale > 0 ? scale : 1.0});
        }
    } else {
        for (int j = 0; j < cfg.K_E; ++j) {
            const double q = harvested_power(j, prec, refl, ch, cfg);
            const double scale = std::max(cfg.E(j), q);
            rep.rows.push_back({"eh_eu" + std::to_string(j), cfg.E(j) - q,
                                scale > 0 ? scale : 1.0});
        }
    }
    return rep;
}

}  // namespace airs

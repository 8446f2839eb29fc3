#pragma once

#include "airs/conic/program.hpp"

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>

namespace airs::conic {

/// Feasible-start path-following barrier method over the composite
/// self-concordant barrier of the program's constraint set:
///   -log det X          per Hermitian PSD block,
///   -log(-f)            per linear or convex-quadratic inequality,
///   -log(log w - s) - log w   per exponential constraint e^s <= w.
/// Equalities are kept exact through a KKT Newton system. A phase-I
/// minimization of the worst constraint margin supplies the strictly
/// feasible start (and the infeasibility diagnosis when there is none).
/// Problem data is variable-scaled by the program's scale hints and
/// row-normalized so the largest coefficient per row has magnitude one.
namespace detail {

struct ParamDesc {
    std::uint8_t kind;  // 0 diag, 1 re, 2 im
    int a, b;
};

struct HermBlk {
    int off = 0, dim = 0;
    double scale = 1;
    std::vector<ParamDesc> desc;
};

struct VecBlk {
    int off = 0, dim = 0, params = 0;
    bool real_only = false;
    double scale = 1;
};

struct Row {
    RVec g;
    double c = 0;
    std::string name;
    double value(const RVec& x) const { return g.dot(x) + c; }
};

struct QuadRow {
    Row lin;
    struct Blk {
        int off;
        RMat Qr;  // symmetric PSD, real lift of the complex form
    };
    std::vector<Blk> blocks;
    double value(const RVec& x) const {
        double v = lin.value(x);
        for (const auto& b : blocks) {
            const auto z = x.segment(b.off, b.Qr.rows());
            v += z.dot(b.Qr * z);
        }
        return v;
    }
    void add_grad(const RVec& x, RVec& g) const {
        g += lin.g;
        for (const auto& b : blocks)
            g.segment(b.off, b.Qr.rows()) += 2.0 * (b.Qr * x.segment(b.off, b.Qr.rows()));
    }
};

struct ExpRow {
    int sparam = -1;  // param index of the bounded scalar
    Row w;
    std::string name;
};

struct Model {
    int n = 0;
    std::vector<HermBlk> herm;
    std::vector<VecBlk> vecs;
    int scalar_off = 0, nscal = 0;
    Row obj;  // maximized
    std::vector<Row> ineq;
    std::vector<Row> eq;
    std::vector<QuadRow> quad;
    std::vector<ExpRow> exps;
    double nu = 0;
};

inline std::vector<ParamDesc> herm_param_descs(int d) {
    std::vector<ParamDesc> desc;
    desc.reserve(d * d);
    for (int a = 0; a < d; ++a) desc.push_back({0, a, a});
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            desc.push_back({1, a, b});
            desc.push_back({2, a, b});
        }
    return desc;
}

inline CMat unpack_herm(const RVec& x, const HermBlk& hb) {
    CMat X(hb.dim, hb.dim);
    int p = hb.off;
    for (int a = 0; a < hb.dim; ++a) X(a, a) = x(p++);
    for (int a = 0; a < hb.dim; ++a)
        for (int b = a + 1; b < hb.dim; ++b) {
            const double re = x(p++), im = x(p++);
            X(a, b) = cx(re, im);
            X(b, a) = cx(re, -im);
        }
    return X;
}

inline void pack_herm(const CMat& X, const HermBlk& hb, RVec& x) {
    int p = hb.off;
    for (int a = 0; a < hb.dim; ++a) x(p++) = X(a, a).real();
    for (int a = 0; a < hb.dim; ++a)
        for (int b = a + 1; b < hb.dim; ++b) {
            x(p++) = X(a, b).real();
            x(p++) = X(a, b).imag();
        }
}

/// Gradient (in packed parameters) of Re tr(A X) for Hermitian A.
inline void herm_form_grad(const CMat& A, const HermBlk& hb, RVec& g) {
    int p = hb.off;
    for (int a = 0; a < hb.dim; ++a) g(p++) += A(a, a).real();
    for (int a = 0; a < hb.dim; ++a)
        for (int b = a + 1; b < hb.dim; ++b) {
            g(p++) += 2.0 * A(a, b).real();
            g(p++) += 2.0 * A(a, b).imag();
        }
}

/// Adds scale * Hessian of -log det X, using S = X^{-1}. Entries are
/// H(p,q) = Re tr(S E_p S E_q) over the packed Hermitian basis.
inline void logdet_hessian(const CMat& S, const HermBlk& hb, double scale, RMat& H) {
    const auto& D = hb.desc;
    const int np = static_cast<int>(D.size());
    for (int p = 0; p < np; ++p) {
        const auto dp = D[p];
        for (int q = p; q < np; ++q) {
            const auto dq = D[q];
            double h = 0;
            const int a = dp.a, b = dp.b, c = dq.a, d = dq.b;
            if (dp.kind == 0 && dq.kind == 0) {
                h = std::norm(S(a, c));
            } else if (dp.kind == 0) {
                const cx T = S(d, a) * S(a, c);
                h = (dq.kind == 1) ? 2.0 * T.real() : -2.0 * T.imag();
            } else if (dq.kind == 0) {
                const cx T = S(b, c) * S(c, a);
                h = (dp.kind == 1) ? 2.0 * T.real() : -2.0 * T.imag();
            } else {
                const cx T1 = S(d, a) * S(b, c);
                const cx T2 = S(c, a) * S(b, d);
                if (dp.kind == 1 && dq.kind == 1)
                    h = 2.0 * (T1.real() + T2.real());
                else if (dp.kind == 1 && dq.kind == 2)
                    h = -2.0 * T1.imag() + 2.0 * T2.imag();
                else if (dp.kind == 2 && dq.kind == 1)
                    h = -2.0 * T1.imag() - 2.0 * T2.imag();
                else
                    h = -2.0 * T1.real() + 2.0 * T2.real();
            }
            H(hb.off + p, hb.off + q) += scale * h;
            if (q != p) H(hb.off + q, hb.off + p) += scale * h;
        }
    }
}

inline RMat realify_quad(const CMat& Q, bool real_only) {
    const int d = static_cast<int>(Q.rows());
    if (real_only) {
        RMat A = Q.real();
        return 0.5 * (A + A.transpose());
    }
    RMat Qr(2 * d, 2 * d);
    const RMat A = 0.5 * (Q.real() + Q.real().transpose());
    const RMat B = 0.5 * (Q.imag() - Q.imag().transpose());
    Qr.topLeftCorner(d, d) = A;
    Qr.bottomRightCorner(d, d) = A;
    Qr.topRightCorner(d, d) = -B;
    Qr.bottomLeftCorner(d, d) = B;
    return Qr;
}

}  // namespace detail

class Solver {
public:
    explicit Solver(const Program& prog, SolverSettings settings = {})
        : prog_(prog), st_(settings) {
        build_model();
    }

    Solution solve() {
        Solution sol;
        int budget = st_.max_newton;
        RVec x = initial_point();
        std::string msg;

        if (!equalities_ok(x, msg)) {
            sol.status = SolveStatus::NumericalFailure;
            sol.message = "cannot satisfy equality rows from the default start: " + msg;
            return sol;
        }

        // Phase I: drive the worst constraint margin negative.
        const auto p1 = phase_one(x, budget, msg);
        sol.newton_iters = st_.max_newton - budget;
        if (p1 != SolveStatus::Optimal) {
            sol.status = p1;
            sol.message = msg;
            if (p1 == SolveStatus::Infeasible) extract(x, sol);
            sol.status = p1;
            return sol;
        }

        // Phase II: follow the central path on the true objective.
        double t = st_.t0;
        const double t_final = 2.0 * m_.nu / st_.eps_gap;
        while (true) {
            const int rc = center(m_, x, t, budget, nullptr, msg);
            sol.newton_iters = st_.max_newton - budget;
            if (rc == 1) {
                sol.status = SolveStatus::IterationLimit;
                sol.message = "newton budget exhausted at t=" + std::to_string(t);
                extract(x, sol);
                return sol;
            }
            if (rc == 2) {
                sol.status = SolveStatus::NumericalFailure;
                sol.message = msg;
                extract(x, sol);
                return sol;
            }
            if (rc == 3) continue;  // not yet centered at this t
            if (t >= t_final) break;
            t = std::min(t * st_.mu, t_final);
        }

        extract(x, sol);
        sol.status = SolveStatus::Optimal;
        sol.gap_bound = obj_scale_ * m_.nu / t_final;
        return sol;
    }

private:
    const Program& prog_;
    SolverSettings st_;
    detail::Model m_;
    double obj_scale_ = 1;

    // ---- model construction ------------------------------------------------

    detail::Row build_row(const LinearForm& f, bool normalize, const std::string& name) const {
        detail::Row r;
        r.g = RVec::Zero(m_.n);
        r.c = f.constant;
        r.name = name;
        for (std::size_t b = 0; b < m_.herm.size(); ++b) {
            if (b < f.herm.size() && f.herm[b].size() > 0) {
                const CMat A = m_.herm[b].scale * f.herm[b];
                detail::herm_form_grad(A, m_.herm[b], r.g);
            }
        }
        for (std::size_t v = 0; v < m_.vecs.size(); ++v) {
            if (v < f.vec.size() && f.vec[v].size() > 0) {
                const CVec c = m_.vecs[v].scale * f.vec[v];
                const auto& vb = m_.vecs[v];
                for (int k = 0; k < vb.dim; ++k) {
                    r.g(vb.off + k) += c(k).real();
                    if (!vb.real_only) r.g(vb.off + vb.dim + k) += c(k).imag();
                }
            }
        }
        for (int s = 0; s < f.scalar.size() && s < m_.nscal; ++s)
            r.g(m_.scalar_off + s) += f.scalar(s);
        if (normalize) {
            const double w = std::max(r.g.lpNorm<Eigen::Infinity>(), std::abs(r.c));
            if (w > 0) {
                r.g /= w;
                r.c /= w;
            }
        }
        return r;
    }

    void build_model() {
        int off = 0;
        for (std::size_t b = 0; b < prog_.herm_dims.size(); ++b) {
            detail::HermBlk hb;
            hb.dim = prog_.herm_dims[b];
            hb.off = off;
            hb.scale = b < prog_.herm_scale.size() ? prog_.herm_scale[b] : 1.0;
            hb.desc = detail::herm_param_descs(hb.dim);
            off += hb.dim * hb.dim;
            m_.herm.push_back(std::move(hb));
        }
        for (std::size_t v = 0; v < prog_.vec_blocks.size(); ++v) {
            detail::VecBlk vb;
            vb.dim = prog_.vec_blocks[v].dim;
            vb.real_only = prog_.vec_blocks[v].real_only;
            vb.params = vb.real_only ? vb.dim : 2 * vb.dim;
            vb.off = off;
            vb.scale = v < prog_.vec_scale.size() ? prog_.vec_scale[v] : 1.0;
            off += vb.params;
            m_.vecs.push_back(vb);
        }
        m_.scalar_off = off;
        m_.nscal = prog_.num_scalars;
        off += m_.nscal;
        m_.n = off;

        m_.obj = build_row(prog_.objective, false, "objective");
        obj_scale_ = std::max(m_.obj.g.lpNorm<Eigen::Infinity>(), 1e-300);
        m_.obj.g /= obj_scale_;
        m_.obj.c /= obj_scale_;

        m_.nu = 0;
        for (const auto& hb : m_.herm) m_.nu += hb.dim;
        for (const auto& c : prog_.linear) {
            detail::Row r = build_row(c.form, true, c.name);
            if (r.g.lpNorm<Eigen::Infinity>() == 0 && r.c == 0) continue;
            if (c.rel == Rel::Eq)
                m_.eq.push_back(std::move(r));
            else {
                m_.ineq.push_back(std::move(r));
                m_.nu += 1;
            }
        }
        for (const auto& qc : prog_.quadratic) {
            detail::QuadRow qr;
            qr.lin = build_row(qc.lin, false, qc.name);
            for (std::size_t v = 0; v < m_.vecs.size(); ++v) {
                const auto& vb = m_.vecs[v];
                const bool hasQ = v < qc.Q.size() && qc.Q[v].size() > 0;
                const bool hasq = v < qc.q.size() && qc.q[v].size() > 0;
                if (hasQ) {
                    CMat Q = (vb.scale * vb.scale) * qc.Q[v];
                    qr.blocks.push_back({vb.off, detail::realify_quad(Q, vb.real_only)});
                }
                if (hasq) {
                    const CVec q = vb.scale * qc.q[v];
                    for (int k = 0; k < vb.dim; ++k) {
                        qr.lin.g(vb.off + k) += 2.0 * q(k).real();
                        if (!vb.real_only) qr.lin.g(vb.off + vb.dim + k) += 2.0 * q(k).imag();
                    }
                }
            }
            double w = std::max(qr.lin.g.lpNorm<Eigen::Infinity>(), std::abs(qr.lin.c));
            for (const auto& b : qr.blocks)
                w = std::max(w, b.Qr.lpNorm<Eigen::Infinity>());
            if (w > 0) {
                qr.lin.g /= w;
                qr.lin.c /= w;
                for (auto& b : qr.blocks) b.Qr /= w;
            }
            qr.lin.name = qc.name;
            m_.quad.push_back(std::move(qr));
            m_.nu += 1;
        }
        for (const auto& ec : prog_.expcons) {
            detail::ExpRow er;
            er.sparam = m_.scalar_off + ec.scalar_index;
            er.w = build_row(ec.w, false, ec.name);  // exp rows self-normalize via 1/w
            er.name = ec.name;
            m_.exps.push_back(std::move(er));
            m_.nu += 2;
        }
    }

    // ---- starting point ----------------------------------------------------

    RVec initial_point() const {
        RVec x = RVec::Zero(m_.n);
        for (const auto& hb : m_.herm)
            for (int a = 0; a < hb.dim; ++a) x(hb.off + a) = 1.0;  // identity
        // Apply single-parameter equality pins.
        for (const auto& r : m_.eq) {
            int nz = 0, idx = -1;
            for (int k = 0; k < m_.n; ++k)
                if (r.g(k) != 0) {
                    ++nz;
                    idx = k;
                }
            if (nz == 1) x(idx) = -r.c / r.g(idx);
        }
        // Seed exp-bounded scalars below their bound's current value, on the
        // bound's own magnitude scale.
        for (const auto& er : m_.exps) {
            const double w = er.w.value(x);
            const double wscale =
                std::max({er.w.g.lpNorm<Eigen::Infinity>(), std::abs(er.w.c), 1e-300});
            x(er.sparam) = w > 0 ? std::log(w) - 1.0 : std::log(wscale) - 14.0;
        }
        return x;
    }

    bool equalities_ok(RVec& x, std::string& msg) const {
        double worst = 0;
        for (const auto& r : m_.eq) worst = std::max(worst, std::abs(r.value(x)));
        if (worst <= 1e-9) return true;
        // Least-squares correction for general equality rows.
        const int p = static_cast<int>(m_.eq.size());
        RMat E(p, m_.n);
        RVec rhs(p);
        for (int k = 0; k < p; ++k) {
            E.row(k) = m_.eq[k].g;
            rhs(k) = -m_.eq[k].c;
        }
        x += E.transpose() * (E * E.transpose()).ldlt().solve(rhs - E * x);
        worst = 0;
        for (const auto& r : m_.eq) worst = std::max(worst, std::abs(r.value(x)));
        if (worst <= 1e-9) return true;
        msg = "equality residual " + std::to_string(worst);
        return false;
    }

    // ---- barrier evaluation ------------------------------------------------

    static double barrier_value(const detail::Model& m, const RVec& x) {
        double phi = 0;
        for (const auto& hb : m.herm) {
            const CMat X = detail::unpack_herm(x, hb);
            Eigen::LLT<CMat> llt(X);
            if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
            double ld = 0;
            for (int i = 0; i < hb.dim; ++i) {
                const double lii = llt.matrixL()(i, i).real();
                if (!(lii > 0)) return std::numeric_limits<double>::infinity();
                ld += std::log(lii);
            }
            phi -= 2.0 * ld;
        }
        for (const auto& r : m.ineq) {
            const double s = -r.value(x);
            if (!(s > 0)) return std::numeric_limits<double>::infinity();
            phi -= std::log(s);
        }
        for (const auto& qr : m.quad) {
            const double s = -qr.value(x);
            if (!(s > 0)) return std::numeric_limits<double>::infinity();
            phi -= std::log(s);
        }
        for (const auto& er : m.exps) {
            const double y = er.w.value(x);
            if (!(y > 0)) return std::numeric_limits<double>::infinity();
            const double z = std::log(y) - x(er.sparam);
            if (!(z > 0)) return std::numeric_limits<double>::infinity();
            phi -= std::log(z) + std::log(y);
        }
        return phi;
    }

    static bool grad_hess(const detail::Model& m, const RVec& x, double t, RVec& g, RMat& H) {
        g = -t * m.obj.g;
        H.setZero();
        for (const auto& hb : m.herm) {
            const CMat X = detail::unpack_herm(x, hb);
            Eigen::LLT<CMat> llt(X);
            if (llt.info() != Eigen::Success) return false;
            const CMat S = llt.solve(CMat::Identity(hb.dim, hb.dim));
            RVec gb = RVec::Zero(m.n);
            detail::herm_form_grad(S, hb, gb);
            g -= gb;  // grad of -log det X is -<S, E_p>
            detail::logdet_hessian(S, hb, 1.0, H);
        }
        for (const auto& r : m.ineq) {
            const double s = -r.value(x);
            if (!(s > 0)) return false;
            g += r.g / s;
            H.selfadjointView<Eigen::Lower>().rankUpdate(r.g, 1.0 / (s * s));
        }
        for (const auto& qr : m.quad) {
            const double s = -qr.value(x);
            if (!(s > 0)) return false;
            RVec gf = RVec::Zero(m.n);
            qr.add_grad(x, gf);
            g += gf / s;
            H.selfadjointView<Eigen::Lower>().rankUpdate(gf, 1.0 / (s * s));
            for (const auto& b : qr.blocks)
                H.block(b.off, b.off, b.Qr.rows(), b.Qr.rows()) += (2.0 / s) * b.Qr;
        }
        for (const auto& er : m.exps) {
            const double y = er.w.value(x);
            if (!(y > 0)) return false;
            const double z = std::log(y) - x(er.sparam);
            if (!(z > 0)) return false;
            RVec dz = er.w.g / y;
            dz(er.sparam) -= 1.0;
            g += -dz / z - er.w.g / y;
            H.selfadjointView<Eigen::Lower>().rankUpdate(dz, 1.0 / (z * z));
            H.selfadjointView<Eigen::Lower>().rankUpdate(er.w.g, (1.0 / z + 1.0) / (y * y));
        }
        H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
        return true;
    }

    /// One centering run at fixed t. Returns 0 on convergence, 1 on budget
    /// exhaustion, 2 on numerical failure. `watch` may stop the run early.
    static int center(const detail::Model& m, RVec& x, double t, int& budget,
                      const std::function<bool(const RVec&)>& watch, std::string& msg) {
        static const bool trace = std::getenv("AIRS_CONIC_TRACE") != nullptr;
        const int p = static_cast<int>(m.eq.size());
        // Inside this decrement the iterate is in the Newton region; leaving
        // a t-round there costs at most lambda2/t of extra gap, which the
        // t_final safety factor absorbs.
        constexpr double kCentered = 0.25;
        RVec g(m.n);
        RMat H(m.n, m.n);
        RMat K;
        RVec rhs;
        int tiny_steps = 0;
        double lambda2 = std::numeric_limits<double>::infinity();
        for (int inner = 0; inner < 80; ++inner) {
            if (budget <= 0) return 1;
            if (!grad_hess(m, x, t, g, H)) {
                msg = "barrier domain violated during centering";
                return 2;
            }
            RVec dx;
            bool solved = false;
            // multiplicative damping keeps the relative curvature of rows with
            // very different scales
            double eps_rel = 0.0;
            for (int attempt = 0; attempt < 7 && !solved; ++attempt) {
                RMat Hr = H;
                if (eps_rel > 0) {
                    const double floor = 1e-300 + eps_rel * H.diagonal().maxCoeff() * 1e-16;
                    for (int k = 0; k < m.n; ++k)
                        Hr(k, k) += eps_rel * std::max(std::abs(H(k, k)), floor);
                }
                if (p == 0) {
                    Eigen::LLT<RMat> llt(Hr);
                    if (llt.info() == Eigen::Success) dx = llt.solve(-g);
                } else {
                    K.setZero(m.n + p, m.n + p);
                    K.topLeftCorner(m.n, m.n) = Hr;
                    for (int k = 0; k < p; ++k) {
                        K.block(m.n + k, 0, 1, m.n) = m.eq[k].g.transpose();
                        K.block(0, m.n + k, m.n, 1) = m.eq[k].g;
                    }
                    rhs.setZero(m.n + p);
                    rhs.head(m.n) = -g;
                    Eigen::PartialPivLU<RMat> lu(K);
                    dx = lu.solve(rhs).head(m.n);
                }
                if (dx.size() == m.n && dx.allFinite()) {
                    // decrements at rounding scale mean the point is centered
                    solved = -g.dot(dx) >= -2e-11;
                }
                eps_rel = (eps_rel == 0.0) ? 1e-14 : eps_rel * 100.0;
            }
            if (!solved) {
                msg = "newton system factorization failed";
                if (trace)
                    std::cerr << "[conic] t=" << t << " inner=" << inner
                              << " |g|=" << g.norm() << " Hdiag=" << H.diagonal().maxCoeff()
                              << " gd=" << (dx.size() ? -g.dot(dx) : 0.0) << "\n";
                return 2;
            }
            lambda2 = std::max(-g.dot(dx), 0.0);
            if (trace) {
                int imax = 0;
                x.cwiseAbs().maxCoeff(&imax);
                std::cerr << "[conic] t=" << t << " inner=" << inner << " l2=" << lambda2
                          << " obj=" << m.obj.g.dot(x) << " |x|inf=" << x.cwiseAbs().maxCoeff()
                          << "@" << imax << " |dx|=" << dx.norm() << "\n";
            }
            if (!std::isfinite(lambda2)) {
                msg = "non-finite newton decrement";
                return 2;
            }
            if (lambda2 / 2.0 <= 1e-11) return 0;

            const double phi0 = t * (-m.obj.g.dot(x)) + barrier_value(m, x);
            double step = 1.0;
            bool accepted = false;
            for (int trial = 0; trial < 60; ++trial) {
                const RVec xn = x + step * dx;
                const double phin = t * (-m.obj.g.dot(xn)) + barrier_value(m, xn);
                if (phin <= phi0 - 0.05 * step * lambda2) {
                    x = xn;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            --budget;
            // stalling at floating-point resolution: accept the point when
            // the decrement says it is inside the Newton region
            if (!accepted || step * dx.norm() <= 1e-12 * (1.0 + x.norm())) {
                if (++tiny_steps >= 3) {
                    if (lambda2 <= kCentered) return 0;
                    msg = "stalled line search (decrement " + std::to_string(lambda2) + ")";
                    return 2;
                }
            } else {
                tiny_steps = 0;
            }
            if (!accepted) {
                if (lambda2 <= kCentered) return 0;
                msg = "line search failed (decrement " + std::to_string(lambda2) + ")";
                return 2;
            }
            if (x.lpNorm<Eigen::Infinity>() > 1e12) {
                msg = "iterates diverging; problem unbounded or badly scaled";
                return 2;
            }
            if (watch && watch(x)) return 0;
        }
        return lambda2 <= kCentered ? 0 : 3;  // inner cap
    }

    // ---- phase I -----------------------------------------------------------

    SolveStatus phase_one(RVec& x, int& budget, std::string& msg) const {
        // Margin of the worst original inequality at x (<0 means interior).
        const auto margin_ok = [this](const RVec& y) {
            for (const auto& r : m_.ineq)
                if (!(r.value(y) < -1e-9)) return false;
            for (const auto& qr : m_.quad)
                if (!(qr.value(y) < -1e-9)) return false;
            for (const auto& er : m_.exps) {
                const double w = er.w.value(y);
                if (!(w > 0) || !(std::log(w) - y(er.sparam) > 1e-9)) return false;
            }
            return true;
        };
        if (m_.ineq.empty() && m_.quad.empty() && m_.exps.empty()) return SolveStatus::Optimal;
        if (margin_ok(x)) return SolveStatus::Optimal;

        // Extended model with the margin variable appended.
        detail::Model p1;
        p1.n = m_.n + 1;
        p1.herm = m_.herm;
        p1.vecs = m_.vecs;
        p1.scalar_off = m_.scalar_off;
        p1.nscal = m_.nscal;
        p1.nu = m_.nu;
        const int sbar = m_.n;
        auto extend = [&](const detail::Row& r, double sbar_coef) {
            detail::Row e;
            e.g = RVec::Zero(p1.n);
            e.g.head(m_.n) = r.g;
            e.g(sbar) = sbar_coef;
            e.c = r.c;
            e.name = r.name;
            return e;
        };
        for (const auto& r : m_.ineq) p1.ineq.push_back(extend(r, -1.0));
        for (const auto& r : m_.eq) p1.eq.push_back(extend(r, 0.0));
        for (const auto& qr : m_.quad) {
            detail::QuadRow e;
            e.lin = extend(qr.lin, -1.0);
            e.blocks = qr.blocks;
            p1.quad.push_back(std::move(e));
        }
        // Exponential rows are kept on their natural scale, so the shared
        // margin enters them weighted by the row's own magnitude.
        std::vector<double> exp_scale;
        for (const auto& er : m_.exps) {
            const double s = std::max({er.w.g.lpNorm<Eigen::Infinity>(), std::abs(er.w.c),
                                       1e-300});
            exp_scale.push_back(s);
            detail::ExpRow e;
            e.sparam = er.sparam;
            e.w = extend(er.w, s);
            e.name = er.name;
            p1.exps.push_back(std::move(e));
        }
        // Free log-scale scalars are recession directions of the margin
        // program (their rows only gain slack), so box them for this phase.
        for (int k = 0; k < m_.nscal; ++k) {
            const int idx = m_.scalar_off + k;
            const double cap = 700.0 + 10.0 * std::abs(x(idx));
            detail::Row lo, hi;
            lo.g = RVec::Zero(p1.n);
            lo.g(idx) = -1.0;
            lo.c = -cap;
            lo.name = "phase1_box_lo" + std::to_string(k);
            hi.g = RVec::Zero(p1.n);
            hi.g(idx) = 1.0;
            hi.c = -cap;
            hi.name = "phase1_box_hi" + std::to_string(k);
            p1.ineq.push_back(std::move(lo));
            p1.ineq.push_back(std::move(hi));
            p1.nu += 2;
        }
        p1.obj.g = RVec::Zero(p1.n);
        p1.obj.g(sbar) = -1.0;  // maximize -sbar
        p1.obj.c = 0;

        // Initial margin that puts the extended start inside every barrier.
        double s0 = 0;
        RVec xe(p1.n);
        xe.head(m_.n) = x;
        xe(sbar) = 0;
        for (const auto& r : p1.ineq) s0 = std::max(s0, r.value(xe));
        for (const auto& qr : p1.quad) s0 = std::max(s0, qr.value(xe));
        for (std::size_t k = 0; k < m_.exps.size(); ++k) {
            const double w = m_.exps[k].w.value(x);
            s0 = std::max(s0, (std::exp(x(m_.exps[k].sparam)) - w) / exp_scale[k]);
        }
        xe(sbar) = s0 + 1.0;

        if (std::getenv("AIRS_CONIC_TRACE")) {
            std::cerr << "[conic] phase1 s0=" << s0 << "\n";
            for (const auto& r : p1.ineq)
                if (r.value(xe) + xe(sbar) > 0.5 * s0)
                    std::cerr << "  lin " << r.name << " v=" << r.value(xe) + xe(sbar) << "\n";
            for (const auto& qr : p1.quad)
                if (qr.value(xe) + xe(sbar) > 0.5 * s0)
                    std::cerr << "  quad " << qr.lin.name << " v=" << qr.value(xe) + xe(sbar)
                              << "\n";
        }

        const auto watch = [&](const RVec& y) { return y(sbar) < -1e-3; };
        double t = 1.0;
        const double t_final = 2.0 * p1.nu / 1e-10;
        while (true) {
            const int rc = center(p1, xe, t, budget, watch, msg);
            if (rc == 1) return SolveStatus::IterationLimit;
            if (rc == 2) return SolveStatus::NumericalFailure;
            const double sbar_val = xe(sbar);
            if (sbar_val < -1e-9) break;  // strictly feasible point found
            if (rc == 3) continue;        // not yet centered at this t
            if (sbar_val - 2.0 * p1.nu / t > 0) {
                msg = "infeasible: worst constraint margin bounded below by " +
                      std::to_string(sbar_val - p1.nu / t) + " (row scale); worst row: " +
                      worst_row_name(xe.head(m_.n));
                return SolveStatus::Infeasible;
            }
            if (t >= t_final) {
                msg = "infeasible or empty interior (margin " + std::to_string(sbar_val) + ")";
                return SolveStatus::Infeasible;
            }
            t = std::min(t * 20.0, t_final);
        }
        x = xe.head(m_.n);
        return SolveStatus::Optimal;
    }

    std::string worst_row_name(const RVec& x) const {
        double worst = -std::numeric_limits<double>::infinity();
        std::string name = "(none)";
        for (const auto& r : m_.ineq)
            if (r.value(x) > worst) {
                worst = r.value(x);
                name = r.name;
            }
        for (const auto& qr : m_.quad)
            if (qr.value(x) > worst) {
                worst = qr.value(x);
                name = qr.lin.name;
            }
        for (const auto& er : m_.exps) {
            const double v = std::exp(x(er.sparam)) - er.w.value(x);
            if (v > worst) {
                worst = v;
                name = er.name;
            }
        }
        return name;
    }

    // ---- extraction ----------------------------------------------------------

    void extract(const RVec& x, Solution& sol) const {
        sol.herm.clear();
        sol.vec.clear();
        for (std::size_t b = 0; b < m_.herm.size(); ++b)
            sol.herm.push_back(m_.herm[b].scale * detail::unpack_herm(x, m_.herm[b]));
        for (std::size_t v = 0; v < m_.vecs.size(); ++v) {
            const auto& vb = m_.vecs[v];
            CVec u(vb.dim);
            for (int k = 0; k < vb.dim; ++k)
                u(k) = cx(x(vb.off + k), vb.real_only ? 0.0 : x(vb.off + vb.dim + k));
            sol.vec.push_back(vb.scale * u);
        }
        sol.scalars = x.segment(m_.scalar_off, m_.nscal);

        // True objective on the recovered iterate.
        double obj = prog_.objective.constant;
        for (std::size_t b = 0; b < sol.herm.size() && b < prog_.objective.herm.size(); ++b)
            if (prog_.objective.herm[b].size() > 0)
                obj += (prog_.objective.herm[b] * sol.herm[b]).trace().real();
        for (std::size_t v = 0; v < sol.vec.size() && v < prog_.objective.vec.size(); ++v)
            if (prog_.objective.vec[v].size() > 0)
                obj += prog_.objective.vec[v].dot(sol.vec[v]).real();
        for (int s = 0; s < prog_.objective.scalar.size() && s < m_.nscal; ++s)
            obj += prog_.objective.scalar(s) * sol.scalars(s);
        sol.objective = obj;

        double viol = 0;
        for (const auto& r : m_.ineq) viol = std::max(viol, r.value(x));
        for (const auto& qr : m_.quad) viol = std::max(viol, qr.value(x));
        for (const auto& er : m_.exps)
            viol = std::max(viol, std::exp(x(er.sparam)) - er.w.value(x));
        for (const auto& r : m_.eq) viol = std::max(viol, std::abs(r.value(x)));
        sol.max_violation = std::max(0.0, viol);
    }
};

inline Solution solve(const Program& prog, const SolverSettings& settings = {}) {
    Solver s(prog, settings);
    return s.solve();
}

}  // namespace airs::conic

#pragma once

#include "airs/rng.hpp"

#include <functional>
#include <optional>

namespace airs {

struct RankTooHigh : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RankReductionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoFeasibleCandidate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Eigenvalue summary of a PSD block.
struct RankReport {
    RVec eigenvalues;  ///< descending
    int numerical_rank = 0;
    double trace = 0;
};

inline RankReport rank_report(const CMat& X, double tol = 1e-6) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(X));
    RankReport rep;
    rep.eigenvalues = es.eigenvalues().reverse();
    rep.trace = X.trace().real();
    const double lmax = std::max(rep.eigenvalues(0), 0.0);
    for (int k = 0; k < rep.eigenvalues.size(); ++k)
        if (rep.eigenvalues(k) > tol * lmax) ++rep.numerical_rank;
    return rep;
}

/// Recovers w with w w^H ~= W from a numerically rank-one PSD matrix. The
/// global phase is fixed by making the largest-magnitude entry real positive.
inline CVec rank_one_extract(const CMat& W, double tol = 1e-6) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(W));
    const auto& ev = es.eigenvalues();
    const int d = static_cast<int>(W.rows());
    const double l1 = ev(d - 1);
    const double l2 = d >= 2 ? ev(d - 2) : 0.0;
    if (l1 <= 0) throw RankTooHigh("rank_one_extract: matrix has no positive eigenvalue");
    if (l2 > tol * l1)
        throw RankTooHigh("rank_one_extract: second eigenvalue " + std::to_string(l2 / l1) +
                          " of the largest");
    CVec w = std::sqrt(l1) * es.eigenvectors().col(d - 1);
    Eigen::Index imax;
    w.cwiseAbs().maxCoeff(&imax);
    if (std::abs(w(imax)) > 0) w *= std::conj(w(imax)) / std::abs(w(imax));
    return w;
}

namespace detail {

inline CMat herm_from_params(const RVec& p, int d) {
    CMat D(d, d);
    int idx = 0;
    for (int a = 0; a < d; ++a) D(a, a) = p(idx++);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            const double re = p(idx++), im = p(idx++);
            D(a, b) = cx(re, im);
            D(b, a) = cx(re, -im);
        }
    return D;
}

}  // namespace detail

/// Purification of an optimal face: repeatedly steps along a feasible-value
/// preserving direction until the combined rank-squared budget drops to the
/// number of preserved functionals. Every Re tr(A_k X_b) sum (feasibility
/// and objective rows alike) is preserved exactly; ranks never increase.
///
/// `constraints[k][b]` is the coefficient of block b in preserved row k
/// (empty matrix = zero).
inline std::vector<CMat> rank_reduce(std::vector<CMat> X,
                                     const std::vector<std::vector<CMat>>& constraints,
                                     double tol = 1e-9) {
    const int nb = static_cast<int>(X.size());
    const int m = static_cast<int>(constraints.size());
    if (m == 0) return X;

    for (int step = 0; step < 64; ++step) {
        // Low-rank factors V_b with X_b = V_b V_b^H.
        std::vector<CMat> V(nb);
        int dof = 0;
        for (int b = 0; b < nb; ++b) {
            Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(X[b]));
            const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
            std::vector<int> keep;
            for (int k = 0; k < es.eigenvalues().size(); ++k)
                if (es.eigenvalues()(k) > std::max(tol * lmax, 0.0) && es.eigenvalues()(k) > 0)
                    keep.push_back(k);
            CMat Vb(X[b].rows(), keep.size());
            for (std::size_t c = 0; c < keep.size(); ++c)
                Vb.col(c) = std::sqrt(es.eigenvalues()(keep[c])) * es.eigenvectors().col(keep[c]);
            V[b] = Vb;
            dof += static_cast<int>(keep.size() * keep.size());
        }
        if (dof <= m) break;

        // Null direction of the reduced preserved rows, over Hermitian
        // Delta_b in the packed real basis.
        RMat A = RMat::Zero(m, dof);
        int off = 0;
        std::vector<int> offs(nb);
        for (int b = 0; b < nb; ++b) {
            offs[b] = off;
            const int r = static_cast<int>(V[b].cols());
            if (r == 0) continue;
            for (int k = 0; k < m; ++k) {
                if (b >= static_cast<int>(constraints[k].size()) ||
                    constraints[k][b].size() == 0)
                    continue;
                const CMat R = V[b].adjoint() * constraints[k][b] * V[b];  // r x r Hermitian
                int idx = 0;
                for (int a = 0; a < r; ++a) A(k, off + idx++) = R(a, a).real();
                for (int a = 0; a < r; ++a)
                    for (int c = a + 1; c < r; ++c) {
                        A(k, off + idx++) = 2.0 * R(a, c).real();
                        A(k, off + idx++) = 2.0 * R(a, c).imag();
                    }
            }
            off += r * r;
        }

        Eigen::JacobiSVD<RMat> svd(A, Eigen::ComputeFullV);
        // Any right-singular vector beyond the row space is a null direction.
        if (dof <= m || svd.rank() >= dof) break;
        const RVec delta = svd.matrixV().col(dof - 1);
        if (m > 0) {
            const double residual = (A * delta).norm();
            if (residual > 1e-7 * std::max(1.0, A.norm()))
                throw RankReductionFailure("rank_reduce: null-space step degenerated");
        }

        // Largest eigenvalue across blocks scales the step.
        double delta_max = 0;
        std::vector<CMat> D(nb);
        for (int b = 0; b < nb; ++b) {
            const int r = static_cast<int>(V[b].cols());
            if (r == 0) continue;
            D[b] = detail::herm_from_params(delta.segment(offs[b], r * r), r);
            Eigen::SelfAdjointEigenSolver<CMat> es(D[b]);
            delta_max = std::max({delta_max, es.eigenvalues().maxCoeff()});
        }
        if (delta_max <= 1e-12) {
            // flip: the null space is symmetric
            for (int b = 0; b < nb; ++b)
                if (D[b].size() > 0) D[b] = -D[b];
            delta_max = 0;
            for (int b = 0; b < nb; ++b) {
                if (D[b].size() == 0) continue;
                Eigen::SelfAdjointEigenSolver<CMat> es(D[b]);
                delta_max = std::max(delta_max, es.eigenvalues().maxCoeff());
            }
            if (delta_max <= 1e-12)
                throw RankReductionFailure("rank_reduce: vanishing step direction");
        }
        for (int b = 0; b < nb; ++b) {
            if (V[b].cols() == 0) {
                X[b].setZero();
                continue;
            }
            const int r = static_cast<int>(V[b].cols());
            X[b] = V[b] * (CMat::Identity(r, r) - D[b] / delta_max) * V[b].adjoint();
            X[b] = hermitian_part(X[b]);
        }
    }
    return X;
}

struct Randomization {
    CVec best;            ///< augmented reflect vector, last entry exactly 1
    double objective = 0;
    int feasible_draws = 0;
};

/// Draws rank-one candidates from a relaxed reflect Gram matrix and keeps
/// the best one the evaluator accepts. Each draw r = U^{1/2} g is normalized
/// so its last coordinate is one and then passed through `project`
/// (amplitude back-off, unit-modulus clipping, ...) before evaluation.
inline Randomization gaussian_randomize_u(
    const CMat& U, const std::function<std::optional<double>(const CVec&)>& evaluator,
    int draws, Philox& rng,
    const std::function<CVec(const CVec&)>& project = {}) {
    const int d = static_cast<int>(U.rows());
    require(std::abs(U(d - 1, d - 1).real() - 1.0) <= 1e-8 && std::abs(U(d - 1, d - 1).imag()) <= 1e-8,
            "gaussian_randomize_u: trailing diagonal entry must be 1");

    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(U));
    CMat root = CMat::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        const double ev = std::max(es.eigenvalues()(k), 0.0);
        root += std::sqrt(ev) * es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }

    Randomization out;
    out.objective = -std::numeric_limits<double>::infinity();
    for (int rdraw = 0; rdraw < draws; ++rdraw) {
        CVec cand = root * rng.cnormal_vec(d);
        const cx last = cand(d - 1);
        if (std::abs(last) < 1e-14) continue;
        cand /= last;
        if (project) cand = project(cand);
        cand(d - 1) = cx(1, 0);
        const auto score = evaluator(cand);
        if (!score) continue;
        ++out.feasible_draws;
        if (*score > out.objective) {
            out.objective = *score;
            out.best = cand;
        }
    }
    if (out.feasible_draws == 0)
        throw NoFeasibleCandidate("gaussian_randomize_u: no feasible candidate in " +
                                  std::to_string(draws) + " draws");
    return out;
}

}  // namespace airs

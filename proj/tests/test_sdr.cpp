#include <catch2/catch_amalgamated.hpp>

#include "airs/conic/solver.hpp"
#include "airs/sdr.hpp"

using namespace airs;

namespace {

CMat random_psd(Philox& rng, int d, double scale = 1.0) {
    CMat A = rng.cnormal_mat(d, d);
    return scale * (A * A.adjoint()) / d;
}

conic::Solution solve_energy_sdp(const CMat& S, const CMat& C, double P_A, double PI_bar) {
    conic::Program prog;
    const int b = prog.add_herm_block(static_cast<int>(S.rows()), P_A);
    auto obj = prog.form();
    obj.herm[b] = S;
    prog.objective = obj;
    auto pa = prog.form();
    pa.herm[b] = CMat::Identity(S.rows(), S.cols());
    pa.constant = -P_A;
    prog.linear.push_back({pa, conic::Rel::Le, "ap_power"});
    auto pi = prog.form();
    pi.herm[b] = C;
    pi.constant = -PI_bar;
    prog.linear.push_back({pi, conic::Rel::Le, "amplification"});
    return conic::solve(prog);
}

}  // namespace

TEST_CASE("rank-one extraction recovers the factor up to phase") {
    Philox rng(3, 0);
    const CVec w = rng.cnormal_vec(4);
    const CMat W = w * w.adjoint();
    const CVec r = rank_one_extract(W);
    REQUIRE((r * r.adjoint() - W).norm() <= 1e-10 * W.norm());

    REQUIRE_THROWS_AS(rank_one_extract(CMat::Identity(2, 2)), RankTooHigh);
}

TEST_CASE("rank report orders eigenvalues and counts the numerical rank") {
    Philox rng(5, 0);
    const CVec w = rng.cnormal_vec(3);
    const CMat W = w * w.adjoint() + 1e-12 * CMat::Identity(3, 3);
    const auto rep = rank_report(W);
    REQUIRE(rep.numerical_rank == 1);
    REQUIRE(rep.eigenvalues(0) >= rep.eigenvalues(1));
    REQUIRE(rep.trace == Catch::Approx(W.trace().real()));
    REQUIRE(rep.eigenvalues.minCoeff() >= -1e-9 * rep.eigenvalues(0));
}

TEST_CASE("rank reduction is the identity on rank-one blocks") {
    Philox rng(7, 0);
    const CVec w = rng.cnormal_vec(3);
    std::vector<CMat> X = {w * w.adjoint()};
    std::vector<std::vector<CMat>> cons = {{CMat::Identity(3, 3)}, {random_psd(rng, 3)}};
    const auto Y = rank_reduce(X, cons);
    REQUIRE((Y[0] - X[0]).norm() <= 1e-12 * X[0].norm());
}

TEST_CASE("rank reduction collapses a tied optimal face to rank one") {
    // With a scaled-identity objective every trace-one PSD matrix is optimal;
    // start from the maximally mixed point and reduce.
    const CMat S = CMat::Identity(2, 2);
    std::vector<CMat> X = {0.5 * CMat::Identity(2, 2)};
    std::vector<std::vector<CMat>> cons = {{S}, {CMat::Identity(2, 2)}};
    const auto Y = rank_reduce(X, cons);
    REQUIRE(rank_report(Y[0]).numerical_rank == 1);
    REQUIRE(Y[0].trace().real() == Catch::Approx(1.0).margin(1e-10));
    REQUIRE((S * Y[0]).trace().real() == Catch::Approx(1.0).margin(1e-10));
    const auto ev = rank_report(Y[0]).eigenvalues;
    REQUIRE(ev.minCoeff() >= -1e-9 * ev.maxCoeff());
}

TEST_CASE("energy sdp output purifies to rank one with preserved values") {
    Philox rng(11, 0);
    for (int trial = 0; trial < 6; ++trial) {
        const int M = 3;
        const CMat S = random_psd(rng, M);
        const CMat C = random_psd(rng, M, 0.7);
        const double P_A = 1.0, PI_bar = 0.4;
        const auto sol = solve_energy_sdp(S, C, P_A, PI_bar);
        REQUIRE(sol.status == conic::SolveStatus::Optimal);

        const double obj0 = (S * sol.herm[0]).trace().real();
        const double tr0 = sol.herm[0].trace().real();
        const double amp0 = (C * sol.herm[0]).trace().real();

        const auto Y = rank_reduce({sol.herm[0]}, {{S}, {CMat::Identity(M, M)}, {C}});
        // two linear constraints: the reduced rank squares to at most 2
        const int r = rank_report(Y[0]).numerical_rank;
        REQUIRE(r * r <= 2);
        REQUIRE((S * Y[0]).trace().real() == Catch::Approx(obj0).epsilon(1e-8));
        REQUIRE(Y[0].trace().real() == Catch::Approx(tr0).epsilon(1e-8));
        REQUIRE((C * Y[0]).trace().real() == Catch::Approx(amp0).epsilon(1e-8));

        const CVec v = rank_one_extract(Y[0], 1e-6);
        REQUIRE((v * v.adjoint() - Y[0]).norm() <= 1e-6 * Y[0].norm());
    }
}

TEST_CASE("gaussian randomization on a rank-one gram returns its direction") {
    Philox rng(13, 0);
    const int N = 5;
    CVec ub = rng.cnormal_vec(N + 1);
    ub /= ub(N);
    const CMat U = ub * ub.adjoint();

    Philox draw_rng(99, 0);
    const auto ev = [&](const CVec& cand) -> std::optional<double> {
        return -(cand - ub).norm();  // closest to the true direction wins
    };
    const auto res = gaussian_randomize_u(U, ev, 32, draw_rng);
    REQUIRE(res.feasible_draws == 32);
    REQUIRE((res.best - ub).norm() <= 1e-6 * ub.norm());
    REQUIRE(res.best(N) == cx(1, 0));
}

TEST_CASE("gaussian randomization is deterministic and reports infeasibility") {
    Philox rng(17, 0);
    const int N = 4;
    CMat U = random_psd(rng, N + 1);
    U /= U(N, N).real();

    const auto ev = [&](const CVec& cand) -> std::optional<double> {
        const double a = cand.head(N).squaredNorm();
        if (a > 2.5 * N) return std::nullopt;
        return a;
    };
    Philox r1(5, 1), r2(5, 1);
    const auto a = gaussian_randomize_u(U, ev, 64, r1);
    const auto b = gaussian_randomize_u(U, ev, 64, r2);
    REQUIRE(a.objective == b.objective);
    REQUIRE((a.best - b.best).norm() == 0.0);

    Philox r3(5, 2);
    const auto never = [](const CVec&) -> std::optional<double> { return std::nullopt; };
    REQUIRE_THROWS_AS(gaussian_randomize_u(U, never, 8, r3), NoFeasibleCandidate);
}

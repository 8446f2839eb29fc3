#include <catch2/catch_amalgamated.hpp>

#include "airs/conic/solver.hpp"
#include "airs/rng.hpp"

#include "oracles.hpp"

using namespace airs;
using namespace airs::conic;

namespace {

CMat random_psd(Philox& rng, int d, double scale = 1.0) {
    CMat A = rng.cnormal_mat(d, d);
    return scale * (A * A.adjoint()) / d;
}

double lambda_max(const CMat& S) {
    Eigen::SelfAdjointEigenSolver<CMat> es(S);
    return es.eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("log-det Hessian matches finite differences") {
    Philox rng(3, 0);
    const int d = 3;
    const auto desc = conic::detail::herm_param_descs(d);
    conic::detail::HermBlk hb;
    hb.off = 0;
    hb.dim = d;
    hb.desc = desc;

    CMat X = random_psd(rng, d) + CMat::Identity(d, d);
    RVec x = RVec::Zero(d * d);
    conic::detail::pack_herm(X, hb, x);

    auto neg_logdet = [&](const RVec& p) {
        const CMat M = conic::detail::unpack_herm(p, hb);
        return -std::log(M.determinant().real());
    };

    const CMat S = X.inverse();
    RMat H = RMat::Zero(d * d, d * d);
    conic::detail::logdet_hessian(S, hb, 1.0, H);

    RVec g = RVec::Zero(d * d);
    conic::detail::herm_form_grad(S, hb, g);  // gradient of -logdet is -g

    const double eps = 1e-5;
    for (int p = 0; p < d * d; ++p) {
        RVec xp = x, xm = x;
        xp(p) += eps;
        xm(p) -= eps;
        const double fd = (neg_logdet(xp) - neg_logdet(xm)) / (2 * eps);
        REQUIRE(fd == Catch::Approx(-g(p)).margin(1e-6));
        for (int q = 0; q < d * d; ++q) {
            RVec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp(p) += eps; xpp(q) += eps;
            xpm(p) += eps; xpm(q) -= eps;
            xmp(p) -= eps; xmp(q) += eps;
            xmm(p) -= eps; xmm(q) -= eps;
            const double fd2 = (neg_logdet(xpp) - neg_logdet(xpm) - neg_logdet(xmp) +
                                neg_logdet(xmm)) /
                               (4 * eps * eps);
            REQUIRE(fd2 == Catch::Approx(H(p, q)).margin(2e-4));
        }
    }
}

TEST_CASE("trace-budget sdp attains the dominant eigenvector solution") {
    Philox rng(5, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const int M = 3;
        const CMat S = random_psd(rng, M);
        const double P = 2.0;
        Program prog;
        const int b = prog.add_herm_block(M, P);
        auto obj = prog.form();
        obj.herm[b] = S;
        prog.objective = obj;
        auto pa = prog.form();
        pa.herm[b] = CMat::Identity(M, M);
        pa.constant = -P;
        prog.linear.push_back({pa, Rel::Le, "trace_budget"});

        const auto sol = solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const double expect = P * lambda_max(S);
        REQUIRE(sol.objective == Catch::Approx(expect).epsilon(1e-6));
        REQUIRE((sol.herm[0] - sol.herm[0].adjoint()).norm() <= 1e-10);
        // weak duality: never above the analytic bound by more than the gap
        REQUIRE(sol.objective <= expect + sol.gap_bound + 1e-9);
        REQUIRE(sol.max_violation <= 1e-8);
    }
}

TEST_CASE("energy subproblem sdp matches the rank-one grid oracle at M=2") {
    Philox rng(7, 0);
    for (int trial = 0; trial < 4; ++trial) {
        const CMat S = random_psd(rng, 2);
        const CMat C = random_psd(rng, 2, 0.5);
        const double P_A = 1.0, PI_bar = 0.3;

        Program prog;
        const int b = prog.add_herm_block(2, P_A);
        auto obj = prog.form();
        obj.herm[b] = S;
        prog.objective = obj;
        auto pa = prog.form();
        pa.herm[b] = CMat::Identity(2, 2);
        pa.constant = -P_A;
        prog.linear.push_back({pa, Rel::Le, "ap_power"});
        auto pi = prog.form();
        pi.herm[b] = C;
        pi.constant = -PI_bar;
        prog.linear.push_back({pi, Rel::Le, "amplification"});

        const auto sol = solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const double grid = oracle::energy_beam_grid_m2(S, C, P_A, PI_bar);
        REQUIRE(sol.objective >= grid - 1e-9);          // relaxation upper-bounds rank-one
        REQUIRE(sol.objective == Catch::Approx(grid).epsilon(0.01));
    }
}

TEST_CASE("contradictory trace bounds are reported infeasible") {
    Program prog;
    const int b = prog.add_herm_block(2);
    auto obj = prog.form();
    obj.herm[b] = CMat::Identity(2, 2);
    prog.objective = obj;
    auto le = prog.form();
    le.herm[b] = CMat::Identity(2, 2);
    le.constant = -1.0;
    prog.linear.push_back({le, Rel::Le, "upper"});
    auto ge = prog.form();
    ge.herm[b] = -CMat::Identity(2, 2);
    ge.constant = 2.0;
    prog.linear.push_back({ge, Rel::Le, "lower"});

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    REQUIRE(!sol.message.empty());
}

TEST_CASE("complex qcqp with a pinned coordinate matches the closed form") {
    // maximize 2 Re(c^H u) s.t. sum d_n |u_n|^2 <= P, last coordinate = 1.
    // Optimal u_n = (|c_n| / d_n) t e^{j arg c_n} with t saturating the budget.
    Philox rng(11, 0);
    const int N = 6;
    CVec c = rng.cnormal_vec(N + 1);
    c(N) = 0;
    RVec d(N + 1);
    for (int n = 0; n < N; ++n) d(n) = 0.5 + rng.uniform();
    d(N) = 0;
    const double P = 2.0;

    Program prog;
    const int vb = prog.add_vec_block(N + 1);
    auto obj = prog.form();
    obj.vec[vb] = 2.0 * c;
    prog.objective = obj;
    QuadCon qc;
    qc.Q.resize(1);
    qc.q.resize(1);
    qc.Q[0] = CMat(d.cast<cx>().asDiagonal());
    qc.lin = prog.form();
    qc.lin.constant = -P;
    qc.name = "budget";
    prog.quadratic.push_back(qc);
    prog.pin_vec_entry(vb, N, cx(1, 0), "pin_last");

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);

    double s = 0;
    for (int n = 0; n < N; ++n) s += std::norm(c(n)) / d(n);
    const double t = std::sqrt(P / s);
    double expect = 0;
    for (int n = 0; n < N; ++n) expect += 2.0 * t * std::norm(c(n)) / d(n);
    REQUIRE(sol.objective == Catch::Approx(expect).epsilon(1e-6));
    REQUIRE(std::abs(sol.vec[0](N) - cx(1, 0)) <= 1e-9);

    // real-only variant: phases folded out beforehand
    Program prog2;
    const int vb2 = prog2.add_vec_block(N + 1, true);
    auto obj2 = prog2.form();
    CVec cr(N + 1);
    for (int n = 0; n <= N; ++n) cr(n) = std::abs(c(n));
    obj2.vec[vb2] = 2.0 * cr;
    prog2.objective = obj2;
    QuadCon qc2;
    qc2.Q.resize(1);
    qc2.q.resize(1);
    qc2.Q[0] = CMat(d.cast<cx>().asDiagonal());
    qc2.lin = prog2.form();
    qc2.lin.constant = -P;
    qc2.name = "budget";
    prog2.quadratic.push_back(qc2);
    prog2.pin_vec_entry(vb2, N, cx(1, 0), "pin_last");
    const auto sol2 = solve(prog2);
    REQUIRE(sol2.status == SolveStatus::Optimal);
    REQUIRE(sol2.objective == Catch::Approx(expect).epsilon(1e-6));
}

TEST_CASE("exponential bound saturates at the optimum") {
    // maximize s subject to e^s <= w0: optimum s = log w0, for w0 on wildly
    // different scales.
    for (const double w0 : {3.0, 1e-9}) {
        Program prog;
        prog.add_scalars(1);
        auto obj = prog.form();
        obj.scalar(0) = 1.0;
        prog.objective = obj;
        ExpCon ec;
        ec.scalar_index = 0;
        ec.w = prog.form();
        ec.w.constant = w0;
        ec.name = "cap";
        prog.expcons.push_back(ec);

        const auto sol = solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        REQUIRE(sol.scalars(0) == Catch::Approx(std::log(w0)).margin(1e-7));
    }
}

TEST_CASE("mixed sdp with exponential rows solves a separable toy") {
    // maximize rho - tau  s.t. e^rho <= tr(W), tau >= 0.3, tr(W) <= P.
    // Optimum: tr(W) = P, rho = log P, tau = 0.3.
    Philox rng(13, 0);
    const int M = 2;
    const double P = 0.5;
    Program prog;
    const int b = prog.add_herm_block(M, P);
    const int s0 = prog.add_scalars(2);
    auto obj = prog.form();
    obj.scalar(s0) = 1.0;
    obj.scalar(s0 + 1) = -1.0;
    prog.objective = obj;

    ExpCon ec;
    ec.scalar_index = s0;
    ec.w = prog.form();
    ec.w.herm[b] = CMat::Identity(M, M);
    ec.name = "signal";
    prog.expcons.push_back(ec);

    auto tg = prog.form();
    tg.scalar(s0 + 1) = -1.0;
    tg.constant = 0.3;
    prog.linear.push_back({tg, Rel::Le, "tau_floor"});

    auto pa = prog.form();
    pa.herm[b] = CMat::Identity(M, M);
    pa.constant = -P;
    prog.linear.push_back({pa, Rel::Le, "budget"});

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.objective == Catch::Approx(std::log(P) - 0.3).margin(1e-6));
    REQUIRE(sol.scalars(0) == Catch::Approx(std::log(P)).margin(1e-6));
    REQUIRE(sol.scalars(1) == Catch::Approx(0.3).margin(1e-7));
}

TEST_CASE("pinned diagonal entries are honored exactly") {
    Philox rng(17, 0);
    const int d = 4;
    const CMat S = random_psd(rng, d);
    Program prog;
    const int b = prog.add_herm_block(d);
    auto obj = prog.form();
    obj.herm[b] = S;
    prog.objective = obj;
    for (int n = 0; n < d; ++n) prog.pin_herm_entry(b, n, n, 1.0, "diag" + std::to_string(n));

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    for (int n = 0; n < d; ++n)
        REQUIRE(sol.herm[0](n, n).real() == Catch::Approx(1.0).margin(1e-9));
    // bounded: |X_ab| <= 1 on the psd cone with unit diagonal
    REQUIRE(sol.objective <= S.trace().real() + d * d * 1.0 + 1e-9);

    std::ostringstream os;
    prog.dump(os);
    REQUIRE(os.str().find("herm block 0") != std::string::npos);
}

#include <catch2/catch_amalgamated.hpp>

#include "airs/sum_rate.hpp"

#include "oracles.hpp"

using namespace airs;

namespace {

oracle::DeskInstance rate_instance(std::uint64_t seed, int N = 8, double E_uw = 1.0,
                                   double d_i = 100.0) {
    auto inst = oracle::desk_instance(seed, 4, N, 2, 2, 5.0, 30.0, 10.0, 8.0, 8.0,
                                      E_uw * 1e-6);
    (void)d_i;
    return inst;
}

}  // namespace

TEST_CASE("taylor bound on the exponential is exact at the expansion point") {
    Philox rng(3, 0);
    for (int k = 0; k < 100; ++k) {
        const double t0 = rng.uniform(-30.0, 5.0);
        const double t = t0 + rng.uniform(-2.0, 2.0);
        const double bound = std::exp(t0) * (t - t0 + 1.0);
        REQUIRE(std::exp(t) >= bound - 1e-12 * std::abs(bound));
        REQUIRE(std::abs(std::exp(t0) - std::exp(t0) * 1.0) <= 1e-12 * std::exp(t0));
    }
}

TEST_CASE("tangent quadratic bound is exact at the expansion point") {
    Philox rng(5, 0);
    for (int k = 0; k < 100; ++k) {
        const int n = 5;
        CMat A = rng.cnormal_mat(n, n);
        const CMat B = (A * A.adjoint()) / n;  // psd
        const CVec u0 = rng.cnormal_vec(n);
        const CVec u = rng.cnormal_vec(n);
        const double chi = 2.0 * (u.adjoint() * B * u0)(0).real() -
                           (u0.adjoint() * B * u0)(0).real();
        const double quad = (u.adjoint() * B * u)(0).real();
        REQUIRE(chi <= quad + 1e-12 * std::abs(quad));
        const double chi0 = 2.0 * (u0.adjoint() * B * u0)(0).real() -
                            (u0.adjoint() * B * u0)(0).real();
        REQUIRE(std::abs(chi0 - (u0.adjoint() * B * u0)(0).real()) <=
                1e-12 * std::abs(chi0));
    }
}

TEST_CASE("feasible start: zero targets accepted, absurd targets rejected") {
    auto inst = rate_instance(11, 8, 0.0);
    REQUIRE_NOTHROW(init_feasible(inst.ch, inst.cfg));

    auto hard = inst;
    hard.cfg.E.setConstant(1.0);  // one watt harvested is far beyond the optimum
    REQUIRE_THROWS_AS(init_feasible(hard.ch, hard.cfg), InfeasibleProblem);

    auto desk = rate_instance(11, 8, 1.0);
    const auto s = init_feasible(desk.ch, desk.cfg);
    Precoder p;
    for (const auto& Wb : s.W) p.w.push_back(rank_one_extract(Wb, 1e-6));
    const auto rep = feasibility_report(ProblemKind::SumRate, p, reflect_from_aug(s.ub),
                                        desk.ch, desk.cfg);
    REQUIRE(rep.feasible());
}

TEST_CASE("single-user transmit block drives the interference slack to the floor") {
    auto inst = oracle::desk_instance(13, 4, 8, 1, 2, 5.0, 30.0, 10.0, 8.0, 8.0, 1e-6);
    auto state = init_feasible(inst.ch, inst.cfg);
    for (int it = 0; it < 25; ++it) state = transmit_subproblem(inst.ch, state, inst.cfg);
    const ReflectionState refl = reflect_from_aug(state.ub);
    const double floor = iu_noise_floor(0, refl, inst.ch, inst.cfg);
    REQUIRE(state.tau(0) == Catch::Approx(std::log(floor)).margin(1e-5));

    // the interference bound holds at the returned point
    const CVec h = effective_channel(inst.ch.h_d[0], inst.ch.h_r[0], inst.ch.F, refl);
    const double interf = detail::iu_interference(0, state.W, h, floor);
    REQUIRE(std::exp(state.tau(0)) >= interf * (1.0 - 1e-8));
}

TEST_CASE("transmit block never decreases the surrogate and keeps slack bounds") {
    auto inst = rate_instance(17);
    auto state = init_feasible(inst.ch, inst.cfg);
    double prev = -1e9;
    for (int it = 0; it < 6; ++it) {
        state = transmit_subproblem(inst.ch, state, inst.cfg);
        double v = 0;
        for (int i = 0; i < inst.cfg.K_I; ++i) v += state.rho(i) - state.tau(i);
        REQUIRE(v >= prev - 1e-7 * std::abs(prev));
        prev = v;

        const ReflectionState refl = reflect_from_aug(state.ub);
        for (int i = 0; i < inst.cfg.K_I; ++i) {
            const CVec h = effective_channel(inst.ch.h_d[i], inst.ch.h_r[i], inst.ch.F, refl);
            const double floor = iu_noise_floor(i, refl, inst.ch, inst.cfg);
            REQUIRE(std::exp(state.rho(i)) <=
                    detail::iu_total_power(i, state.W, h, floor) * (1 + 1e-8));
            REQUIRE(std::exp(state.tau(i)) >=
                    detail::iu_interference(i, state.W, h, floor) * (1 - 1e-8));
        }
    }
}

TEST_CASE("reflect block never decreases the surrogate") {
    auto inst = rate_instance(19);
    auto state = init_feasible(inst.ch, inst.cfg);
    state = transmit_subproblem(inst.ch, state, inst.cfg);
    double prev = -1e9;
    for (int it = 0; it < 4; ++it) {
        state = reflect_subproblem(inst.ch, state, inst.cfg);
        double v = 0;
        for (int i = 0; i < inst.cfg.K_I; ++i) v += state.rho(i) - state.tau(i);
        REQUIRE(v >= prev - 1e-7 * std::abs(prev));
        prev = v;
        REQUIRE(std::abs(state.ub(inst.cfg.N) - cx(1, 0)) == 0.0);
    }
}

TEST_CASE("recovery is exact on rank-one blocks") {
    auto inst = rate_instance(23);
    Philox rng(23, 5);
    std::vector<CMat> W;
    std::vector<CVec> w0;
    for (int i = 0; i < 2; ++i) {
        const CVec w = 0.1 * rng.cnormal_vec(4);
        w0.push_back(w);
        W.push_back(w * w.adjoint());
    }
    const ReflectionState refl = initial_reflection(inst.ch, inst.cfg, 3);
    const auto [w, method] = recover_precoder(W, inst.ch, refl, inst.cfg);
    REQUIRE(method == "rank_one");
    for (int i = 0; i < 2; ++i)
        REQUIRE((w[i] * w[i].adjoint() - W[i]).norm() <= 1e-9 * W[i].norm());
}

TEST_CASE("full solve: monotone trace, activity, feasibility, target sweep") {
    std::vector<double> rates;
    for (double E_uw : {0.5, 1.0, 2.0}) {
        auto inst = rate_instance(29, 8, E_uw);
        AlgoSettings st;
        st.seed = 7;
        const auto sol = solve_sum_rate(inst.ch, inst.cfg, st);
        const auto& tr = sol.report.objective_trace;
        for (std::size_t k = 1; k < tr.size(); ++k)
            REQUIRE(tr[k] >= tr[k - 1] - 1e-7 * std::abs(tr[k - 1]));
        REQUIRE(sol.report.feasibility.feasible());
        REQUIRE(sol.objective > 0);

        // slack activity at the returned point
        Precoder p;
        p.w = sol.w;
        for (int i = 0; i < inst.cfg.K_I; ++i) {
            const CVec h = effective_channel(inst.ch.h_d[i], inst.ch.h_r[i], inst.ch.F,
                                             sol.refl);
            const double floor = iu_noise_floor(i, sol.refl, inst.ch, inst.cfg);
            std::vector<CMat> Wr;
            for (const auto& wi : sol.w) Wr.push_back(wi * wi.adjoint());
            const double total = detail::iu_total_power(i, Wr, h, floor);
            const double interf = detail::iu_interference(i, Wr, h, floor);
            REQUIRE(std::abs(std::exp(sol.rho(i)) - total) <= 1e-6 * total);
            REQUIRE(std::abs(std::exp(sol.tau(i)) - interf) <= 1e-6 * interf);
        }
        rates.push_back(sol.objective);
    }
    REQUIRE(rates[1] <= rates[0] * (1 + 1e-6));
    REQUIRE(rates[2] <= rates[1] * (1 + 1e-6));
}

TEST_CASE("tiny transmit design matches the rank-one beam grid") {
    auto inst = oracle::desk_instance(31, 2, 4, 2, 1, 5.0, 30.0, 10.0, 8.0, 8.0, 1e-6);
    auto state = init_feasible(inst.ch, inst.cfg);
    for (int it = 0; it < 30; ++it) {
        const auto next = transmit_subproblem(inst.ch, state, inst.cfg);
        double dv = 0;
        for (int i = 0; i < 2; ++i)
            dv += std::abs(next.rho(i) - state.rho(i)) + std::abs(next.tau(i) - state.tau(i));
        state = next;
        if (dv < 1e-8) break;
    }
    const ReflectionState refl = reflect_from_aug(state.ub);
    const auto [w, method] = recover_precoder(state.W, inst.ch, refl, inst.cfg);
    Precoder p;
    p.w = w;
    const double mine = weighted_sum_rate(p, refl, inst.ch, inst.cfg);
    const double grid = oracle::p2_beam_grid_m2(inst.ch, inst.cfg, refl);
    REQUIRE(mine == Catch::Approx(grid).epsilon(0.02));
}

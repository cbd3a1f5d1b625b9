#include <catch2/catch_amalgamated.hpp>

#include "ddcro/lp.hpp"
#include "support.hpp"

using namespace ddcro;
using testsup::Rng;

TEST_CASE("single lower bound") {
    LinearProgram lp(1);
    lp.c = {1.0};
    lp.lb = {1.0};
    lp.ub = {kInf};
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == Catch::Approx(1.0));
    CHECK(s.objective == Catch::Approx(1.0));
}

TEST_CASE("contradictory bounds give a certificate") {
    LinearProgram lp(1);
    lp.c = {0.0};
    lp.lb = {0.0};
    lp.ub = {kInf};
    Vec row = {1.0};
    lp.add_in_row(row, -1.0);  // x <= -1 against x >= 0
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::infeasible);
    REQUIRE(s.farkas_in.size() == 1);
    CHECK(s.farkas_in[0] <= 1e-12);
    // sup over the box of the combined row must stay negative
    double coef = s.farkas_in[0] * 1.0;
    double sup = (coef > 0 ? kInf : 0.0) - s.farkas_in[0] * (-1.0);
    CHECK(sup < -1e-9);
}

TEST_CASE("unit simplex with duals") {
    // min -x - y s.t. x + y <= 1, x,y >= 0: objective -1, row dual -1
    LinearProgram lp(2);
    lp.c = {-1.0, -1.0};
    lp.lb = {0.0, 0.0};
    lp.ub = {kInf, kInf};
    lp.add_in_row({1.0, 1.0}, 1.0);
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == Catch::Approx(-1.0));
    CHECK(s.dual_in[0] == Catch::Approx(-1.0));
    CHECK(s.x[0] + s.x[1] == Catch::Approx(1.0));
}

TEST_CASE("free variables and equalities") {
    // min x + 2y s.t. x + y = 3, y free, x in [0, 10]
    LinearProgram lp(2);
    lp.c = {1.0, 2.0};
    lp.lb = {0.0, -kInf};
    lp.ub = {10.0, kInf};
    lp.add_eq_row({1.0, 1.0}, 3.0);
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    // push x up to 10, y = -7: 10 - 14 = -4
    CHECK(s.objective == Catch::Approx(-4.0));
    CHECK(s.x[0] == Catch::Approx(10.0));
    CHECK(s.x[1] == Catch::Approx(-7.0));
}

TEST_CASE("unbounded ray") {
    LinearProgram lp(2);
    lp.c = {-1.0, 0.0};
    lp.lb = {0.0, 0.0};
    lp.ub = {kInf, kInf};
    lp.add_in_row({-1.0, 1.0}, 0.0);  // x >= y but x can run away
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::unbounded);
    REQUIRE(s.ray.size() == 2);
    CHECK(dot(lp.c, s.ray) < -1e-9);
    Vec av = matvec(lp.A_in, s.ray);
    CHECK(av[0] <= 1e-9);
}

TEST_CASE("upper-bound-only variable") {
    LinearProgram lp(1);
    lp.c = {-1.0};
    lp.lb = {-kInf};
    lp.ub = {4.0};
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == Catch::Approx(4.0));
    CHECK(s.objective == Catch::Approx(-4.0));
}

TEST_CASE("degenerate instance terminates") {
    // Klee-Minty-ish degeneracy: many redundant rows through the origin.
    LinearProgram lp(3);
    lp.c = {-1.0, -1.0, -1.0};
    lp.lb = {0.0, 0.0, 0.0};
    lp.ub = {kInf, kInf, kInf};
    lp.add_in_row({1.0, 1.0, 0.0}, 0.0);
    lp.add_in_row({1.0, 0.0, 1.0}, 0.0);
    lp.add_in_row({0.0, 1.0, 1.0}, 0.0);
    lp.add_in_row({1.0, 1.0, 1.0}, 0.0);
    lp.add_in_row({1.0, 2.0, 1.0}, 0.0);
    auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("matches vertex enumeration on 200 random LPs") {
    Rng rng(20240601);
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        LinearProgram lp = testsup::random_boxed_lp(rng);
        auto s = solve_lp(lp);
        REQUIRE(s.status == LpStatus::optimal);  // feasible and boxed by construction
        auto brute = testsup::vertex_enumeration_min(lp);
        REQUIRE(brute.has_value());
        INFO("trial " << trial);
        CHECK(s.objective == Catch::Approx(*brute).margin(1e-7));

        // primal feasibility residuals
        Vec r_eq = matvec(lp.A_eq, s.x);
        for (int i = 0; i < lp.A_eq.rows; ++i)
            CHECK(std::abs(r_eq[i] - lp.b_eq[i]) <= 1e-8);
        Vec r_in = matvec(lp.A_in, s.x);
        for (int i = 0; i < lp.A_in.rows; ++i)
            CHECK(r_in[i] <= lp.b_in[i] + 1e-8);
        for (int j = 0; j < lp.num_vars(); ++j) {
            CHECK(s.x[j] >= lp.lb[j] - 1e-8);
            CHECK(s.x[j] <= lp.ub[j] + 1e-8);
        }

        // strong duality and complementary slackness
        const double dobj = testsup::dual_objective(lp, s);
        CHECK(std::abs(s.objective - dobj) <= 1e-6 * (1.0 + std::abs(s.objective)));
        for (int i = 0; i < lp.A_in.rows; ++i) {
            CHECK(s.dual_in[i] <= 1e-9);
            CHECK(std::abs(s.dual_in[i] * (lp.b_in[i] - r_in[i])) <= 1e-6);
        }
        for (int j = 0; j < lp.num_vars(); ++j) {
            const double z = s.reduced_costs[j];
            if (z > 1e-9) CHECK(std::abs((s.x[j] - lp.lb[j]) * z) <= 1e-6);
            if (z < -1e-9) CHECK(std::abs((lp.ub[j] - s.x[j]) * z) <= 1e-6);
        }
        ++solved;
    }
    CHECK(solved == 200);
}

TEST_CASE("dual identity holds by construction and duals are meaningful") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        LinearProgram lp = testsup::random_boxed_lp(rng, 6, 6);
        auto s = solve_lp(lp);
        REQUIRE(s.status == LpStatus::optimal);
        for (int j = 0; j < lp.num_vars(); ++j) {
            double lhs = s.reduced_costs[j];
            for (int i = 0; i < lp.A_eq.rows; ++i) lhs += s.dual_eq[i] * lp.A_eq(i, j);
            for (int i = 0; i < lp.A_in.rows; ++i) lhs += s.dual_in[i] * lp.A_in(i, j);
            CHECK(std::abs(lhs - lp.c[j]) <= 1e-7);
        }
    }
}

TEST_CASE("deterministic output") {
    Rng rng(5150);
    LinearProgram lp = testsup::random_boxed_lp(rng);
    auto a = solve_lp(lp);
    auto b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    REQUIRE(a.x.size() == b.x.size());
    for (size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("farkas certificate on random infeasible systems") {
    Rng rng(99331);
    int produced = 0;
    for (int trial = 0; trial < 60; ++trial) {
        LinearProgram lp = testsup::random_boxed_lp(rng, 5, 5);
        // Append a contradictory pair around a random row to force infeasibility.
        Vec a(lp.num_vars());
        for (auto& v : a) v = rng.uniform_int(-3, 3);
        if (norm_inf(a) == 0.0) a[0] = 1.0;
        lp.add_in_row(a, 1.0);
        Vec na = a;
        for (auto& v : na) v = -v;
        lp.add_in_row(na, -3.0);  // a.x >= 3 vs a.x <= 1
        auto s = solve_lp(lp);
        REQUIRE(s.status == LpStatus::infeasible);
        ++produced;
        // box-sup of the certified row combination must be negative; clamp
        // solver noise before it meets an infinite bound
        Vec coef = mat_tvec(lp.A_eq, s.farkas_eq);
        Vec coef_in = mat_tvec(lp.A_in, s.farkas_in);
        double sup = -dot(s.farkas_eq, lp.b_eq) - dot(s.farkas_in, lp.b_in);
        INFO("trial " << trial);
        for (int j = 0; j < lp.num_vars(); ++j) {
            double cj = coef[j] + coef_in[j];
            if (!std::isfinite(lp.ub[j])) CHECK(cj <= 1e-7);
            if (!std::isfinite(lp.lb[j])) CHECK(cj >= -1e-7);
            if (std::abs(cj) <= 1e-7) cj = 0.0;
            if (cj != 0.0) sup += cj > 0 ? cj * lp.ub[j] : cj * lp.lb[j];
        }
        CHECK(sup < 1e-7);
        for (double v : s.farkas_in) CHECK(v <= 1e-9);
    }
    CHECK(produced == 60);
}

#include <catch2/catch_amalgamated.hpp>

#include "ddcro/energy.hpp"
#include "support.hpp"

using namespace ddcro;
using testsup::Rng;

namespace {

json three_bus_json() {
    json j;
    j["buses"] = 3;
    j["lines"] = json::array({
        json{{"from", 0}, {"to", 1}, {"susceptance", 10.0}, {"capacity", 500.0}},
        json{{"from", 1}, {"to", 2}, {"susceptance", 10.0}, {"capacity", 500.0}},
        json{{"from", 0}, {"to", 2}, {"susceptance", 10.0}, {"capacity", 500.0}},
    });
    j["generators"] = json::array({
        json{{"bus", 0}, {"pmin", 0.0}, {"pmax", 120.0}, {"ramp_up", 120.0}, {"ramp_dn", 120.0},
             {"cost", 20.0}, {"cost_up", 4.0}, {"cost_dn", 4.0}},
        json{{"bus", 1}, {"pmin", 0.0}, {"pmax", 80.0}, {"ramp_up", 80.0}, {"ramp_dn", 80.0},
             {"cost", 35.0}, {"cost_up", 6.0}, {"cost_dn", 6.0}},
    });
    j["renewables"] = json::array({json{{"bus", 2}}});
    json demand = json::array(), ybar = json::array();
    for (int t = 0; t < 24; ++t) {
        const double sway = 10.0 * std::sin(2.0 * 3.14159265358979 * t / 24.0);
        demand.push_back(json::array({60.0, 70.0, 80.0 + sway}));
        ybar.push_back(json::array({35.0}));
    }
    j["demand"] = demand;
    j["ybar"] = ybar;
    return j;
}

// AR(1) with a daily shape; the covariate (previous output) genuinely
// drives the next observation.
std::vector<Vec> synthetic_history(Rng& rng, int length, int start_hour = 0) {
    std::vector<Vec> h;
    double y = 30.0;
    for (int t = 0; t < length; ++t) {
        const int hour = (start_hour + t) % 24;
        const double shape = 30.0 + 20.0 * std::sin(2.0 * 3.14159265358979 * hour / 24.0);
        y = 0.55 * y + 0.45 * shape + rng.uniform(-4.0, 4.0);
        y = std::min(60.0, std::max(0.0, y));
        h.push_back({y});
    }
    return h;
}

NetworkInstance single_bus_net(double pmin, double pmax, double demand, double ybar_val,
                               double cost = 20.0) {
    json j;
    j["buses"] = 1;
    j["lines"] = json::array();
    j["generators"] = json::array({json{{"bus", 0},
                                        {"pmin", pmin},
                                        {"pmax", pmax},
                                        {"ramp_up", pmax},
                                        {"ramp_dn", pmax},
                                        {"cost", cost},
                                        {"cost_up", 2.0},
                                        {"cost_dn", 2.0}}});
    j["renewables"] = json::array({json{{"bus", 0}}});
    j["demand"] = json::array({json::array({demand})});
    j["ybar"] = json::array({json::array({ybar_val})});
    return network_from_json(j);
}

PeriodSchedule hand_schedule(const NetworkInstance& net, double p, double r_up, double r_dn) {
    PeriodSchedule ps;
    ps.period = 0;
    ps.hour = 0;
    const int ng = net.n_g(), nl = net.n_l(), nb = net.buses;
    ps.z.assign(3 * ng + nl + nb, 0.0);
    ps.z[0] = p;
    ps.z[ng] = r_up;
    ps.z[2 * ng] = r_dn;
    ps.p = {p};
    ps.r_up = {r_up};
    ps.r_dn = {r_dn};
    return ps;
}

}  // namespace

TEST_CASE("network loads and validates") {
    NetworkInstance net = network_from_json(three_bus_json());
    CHECK(net.buses == 3);
    CHECK(net.n_g() == 2);
    CHECK(net.n_r() == 1);
    CHECK(net.penalty_shed == Catch::Approx(350.0));  // 10x max cost default
}

TEST_CASE("negative line capacity is rejected naming the line") {
    json j = three_bus_json();
    j["lines"][1]["capacity"] = -5.0;
    try {
        network_from_json(j);
        FAIL("expected schema error");
    } catch (const Error& e) {
        CHECK(e.code() == "schema");
        CHECK(std::string(e.what()).find("lines[1]") != std::string::npos);
    }
}

TEST_CASE("disconnected network is rejected listing components") {
    json j = three_bus_json();
    j["buses"] = 4;
    for (auto& row : j["demand"]) row.push_back(0.0);
    try {
        network_from_json(j);
        FAIL("expected disconnected error");
    } catch (const Error& e) {
        CHECK(e.code() == "disconnected");
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("single-bus stage reduces to a newsvendor shape") {
    NetworkInstance net = single_bus_net(0.0, 100.0, 80.0, 30.0);
    ScenarioSet window;
    window.x = Mat(2, 1);
    window.x(0, 0) = 20.0;
    window.x(1, 0) = 40.0;
    window.h = {{20.0}, {40.0}};
    window.categorical_mask = {0};
    EnergyStage stage = build_stage_problem(net, 0, {0.0}, window);
    CHECK(validate_problem(stage.problem).empty());
    // rows: balance (1) + physics (0) + ref angle (1) + band (2) + flow (0)
    //       + shed cap (1) + spill cap (1)
    CHECK(stage.problem.dim_h() == 6);
    // the balance row carries demand minus the scenario output
    CHECK(stage.problem.scenarios.h[0][0] == Catch::Approx(60.0));
    CHECK(stage.problem.scenarios.h[1][0] == Catch::Approx(40.0));
    // spill cap rows carry the scenario output
    CHECK(stage.problem.scenarios.h[0][5] == Catch::Approx(20.0));
}

TEST_CASE("null system dispatches nothing") {
    NetworkInstance net = single_bus_net(0.0, 100.0, 0.0, 0.0);
    ScenarioSet window;
    window.x = Mat(2, 1);
    window.h = {{0.0}, {0.0}};
    window.categorical_mask = {0};
    EnergyStage stage = build_stage_problem(net, 0, {0.0}, window);
    auto out = solve_ccg(stage.problem, ContextQuery::with_delta({0.0}, 0.1), CcgOptions{});
    REQUIRE(out.solution.status == SolveStatus::optimal);
    CHECK(out.solution.objective == Catch::Approx(0.0).margin(1e-7));
    CHECK(out.solution.alpha == Catch::Approx(0.0).margin(1e-7));
    CHECK(norm_inf(out.solution.z) <= 1e-7);
}

TEST_CASE("a tight line binds at the committed flow") {
    json j;
    j["buses"] = 2;
    j["lines"] = json::array(
        {json{{"from", 0}, {"to", 1}, {"susceptance", 10.0}, {"capacity", 100.0}}});
    j["generators"] = json::array({json{{"bus", 0}, {"pmin", 0.0}, {"pmax", 200.0},
                                        {"ramp_up", 200.0}, {"ramp_dn", 200.0}, {"cost", 10.0},
                                        {"cost_up", 1.0}, {"cost_dn", 1.0}}});
    j["renewables"] = json::array({json{{"bus", 0}}});
    j["demand"] = json::array({json::array({0.0, 100.0})});
    j["ybar"] = json::array({json::array({0.0})});
    NetworkInstance net = network_from_json(j);
    ScenarioSet window;
    window.x = Mat(2, 1);
    window.h = {{0.0}, {0.0}};
    window.categorical_mask = {0};
    EnergyStage stage = build_stage_problem(net, 0, {0.0}, window);
    auto out = solve_ccg(stage.problem, ContextQuery::with_delta({0.0}, 0.1), CcgOptions{});
    REQUIRE(out.solution.status == SolveStatus::optimal);
    const double flow = out.solution.z[3];  // single line, after p/r_up/r_dn
    CHECK(std::abs(flow) == Catch::Approx(100.0).margin(1e-6));
}

TEST_CASE("committed schedules satisfy the first-stage rows") {
    Rng rng(321321);
    NetworkInstance net = network_from_json(three_bus_json());
    auto history = synthetic_history(rng, 30);
    auto run = rolling_run(net, history, 26, RollingOptions{});
    REQUIRE(run.schedules.size() == 4);
    for (const auto& ps : run.schedules) {
        EnergyStage stage = build_stage_problem(
            net, ps.period, ps.period == 0 ? Vec{0.0, 0.0} : run.schedules[ps.period - 1].p,
            detail::make_window(history, 1, 25, 0, 1));
        const Polyhedron& Z = stage.problem.Z;
        Vec eq = matvec(Z.A_eq, ps.z);
        for (int r = 0; r < Z.A_eq.rows; ++r)
            CHECK(std::abs(eq[r] - Z.b_eq[r]) <= 1e-6);
        Vec in = matvec(Z.A_in, ps.z);
        for (int r = 0; r < Z.A_in.rows; ++r)
            CHECK(in[r] <= Z.b_in[r] + 1e-6);
        for (size_t jv = 0; jv < ps.z.size(); ++jv) {
            CHECK(ps.z[jv] >= Z.lb[jv] - 1e-6);
            CHECK(ps.z[jv] <= Z.ub[jv] + 1e-6);
        }
    }
}

TEST_CASE("rolling run structure and warm equivalence") {
    Rng rng(454545);
    NetworkInstance net = network_from_json(three_bus_json());
    auto history = synthetic_history(rng, 32);
    RollingOptions warm_opts;
    RollingOptions cold_opts;
    cold_opts.warm_start = false;
    auto warm = rolling_run(net, history, 26, warm_opts);
    auto cold = rolling_run(net, history, 26, cold_opts);
    REQUIRE(warm.schedules.size() == cold.schedules.size());
    for (size_t t = 0; t < warm.schedules.size(); ++t) {
        CHECK(std::abs(warm.schedules[t].objective - cold.schedules[t].objective) <=
              1e-6 * (1.0 + std::abs(cold.schedules[t].objective)));
    }
    CHECK(warm.total_oracle_calls <= cold.total_oracle_calls);
    for (size_t t = 1; t < warm.pool_sizes.size(); ++t)
        CHECK(warm.pool_sizes[t] >= warm.pool_sizes[t - 1]);
}

TEST_CASE("zero hull distance makes the margin irrelevant") {
    NetworkInstance net = network_from_json(three_bus_json());
    std::vector<Vec> history(30, Vec{35.0});  // constant output
    RollingOptions a, b;
    a.delta = 0.0;
    b.delta = 0.1;
    auto ra = rolling_run(net, history, 26, a);
    auto rb = rolling_run(net, history, 26, b);
    REQUIRE(ra.schedules.size() == rb.schedules.size());
    for (size_t t = 0; t < ra.schedules.size(); ++t)
        CHECK(ra.schedules[t].objective == Catch::Approx(rb.schedules[t].objective).margin(1e-7));
}

TEST_CASE("conditioning never costs more than the unconditional hull") {
    Rng rng(777111);
    NetworkInstance net = network_from_json(three_bus_json());
    auto history = synthetic_history(rng, 30);
    RollingOptions cond, uncond;
    cond.delta = 0.1;
    uncond.unconditional = true;
    auto rc = rolling_run(net, history, 26, cond);
    auto ru = rolling_run(net, history, 26, uncond);
    REQUIRE(rc.schedules.size() == ru.schedules.size());
    for (size_t t = 0; t < rc.schedules.size(); ++t)
        CHECK(rc.schedules[t].objective <= ru.schedules[t].objective + 1e-7);
}

TEST_CASE("recourse is complete on capacity-dominated fixtures") {
    Rng rng(99221);
    for (int trial = 0; trial < 10; ++trial) {
        NetworkInstance net = network_from_json(three_bus_json());
        ScenarioSet window;
        window.x = Mat(3, 1);
        window.h = {{rng.uniform(0.0, 60.0)}, {rng.uniform(0.0, 60.0)}, {rng.uniform(0.0, 60.0)}};
        for (int i = 0; i < 3; ++i) window.x(i, 0) = window.h[i][0];
        window.categorical_mask = {0};
        EnergyStage stage = build_stage_problem(net, rng.uniform_int(0, 23), {0.0, 0.0}, window);
        // random z within bounds plus random hull point: the recourse LP
        // must stay feasible
        for (int rep = 0; rep < 5; ++rep) {
            Vec theta(3, 0.0);
            double sum = 0.0;
            for (auto& v : theta) {
                v = rng.uniform(0.0, 1.0);
                sum += v;
            }
            for (auto& v : theta) v /= sum;
            Vec h(stage.problem.dim_h(), 0.0);
            for (int s = 0; s < 3; ++s)
                for (int i = 0; i < stage.problem.dim_h(); ++i)
                    h[i] += theta[s] * stage.problem.scenarios.h[s][i];
            Vec z(stage.problem.dim_z());
            for (size_t jv = 0; jv < z.size(); ++jv) {
                const double lo = std::max(stage.problem.Z.lb[jv], -500.0);
                const double hi = std::min(stage.problem.Z.ub[jv], 500.0);
                z[jv] = rng.uniform(lo, hi);
            }
            Vec rhs = h;
            const Mat& T = *stage.problem.fixed_T;
            for (int i = 0; i < T.rows; ++i)
                for (int jj = 0; jj < T.cols; ++jj) rhs[i] -= T(i, jj) * z[jj];
            CHECK(lp_feasible(recourse_lp(stage.problem.W, stage.problem.q, rhs)));
        }
    }
}

TEST_CASE("out-of-sample evaluation thresholds") {
    SECTION("expected realization with covering reserves is clean") {
        NetworkInstance net = single_bus_net(0.0, 1000.0, 500.0, 100.0);
        auto ps = hand_schedule(net, 400.0, 50.0, 50.0);
        auto rep = evaluate_oos(net, {ps}, {{100.0}});
        CHECK(rep.lolp == 0.0);
        CHECK(rep.pws == 0.0);
        CHECK(rep.shed[0] == Catch::Approx(0.0).margin(1e-7));
        CHECK(rep.spill[0] == Catch::Approx(0.0).margin(1e-7));
        CHECK(rep.penalty_cost == Catch::Approx(0.0).margin(1e-6));
    }
    SECTION("ten megawatts short on a thousand megawatt hour") {
        NetworkInstance net = single_bus_net(0.0, 1000.0, 1000.0, 110.0);
        auto ps = hand_schedule(net, 890.0, 100.0, 0.0);
        auto rep = evaluate_oos(net, {ps}, {{0.0}});
        CHECK(rep.shed[0] == Catch::Approx(10.0).margin(1e-6));
        CHECK(rep.lolp == 1.0);  // 10 > 0.1% of 1000
    }
    SECTION("doubled output at minimum dispatch spills") {
        NetworkInstance net = single_bus_net(50.0, 200.0, 100.0, 50.0);
        auto ps = hand_schedule(net, 50.0, 0.0, 0.0);
        auto rep = evaluate_oos(net, {ps}, {{100.0}});
        CHECK(rep.spill[0] == Catch::Approx(50.0).margin(1e-6));
        CHECK(rep.pws == 1.0);
        CHECK(rep.lolp == 0.0);
    }
}

TEST_CASE("history csv round trip") {
    const std::string path = "test_history.csv";
    {
        std::ofstream f(path);
        f << "unit0,unit1\n1.5,2.5\n3.0,4.0\n";
    }
    auto rows = load_history_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == Vec{1.5, 2.5});
    CHECK(rows[1] == Vec{3.0, 4.0});
    {
        std::ofstream f(path);
        f << "unit0\nnan\n";
    }
    CHECK_THROWS_AS(load_history_csv(path), Error);
}

// Hour-ahead energy and reserve scheduling on a DC network, mapped onto the
// two-stage contextual robust machinery.
//
// First stage z = (p, r_up, r_dn, f, beta): dispatch, reserves, flows and
// angles under nodal balance at expected renewables, flow physics, limits
// and inter-period ramps. Recourse u = (delta, s_minus, s_plus, f_wc,
// beta_wc): re-dispatch within the reserve band plus shedding and spillage
// slacks, priced at the penalty rates. Renewable output enters the
// right-hand side through the balance rows and the spillage caps, so the
// uncertainty kind is rhs-only with a fixed technology matrix.
//
// The re-dispatch band is implemented as -r_dn <= delta <= r_up. The sign
// on the lower side is forced by the nonnegativity of the committed reserve
// and the down/up reserve semantics of the first stage.
#pragma once

#include <functional>
#include <sstream>

#include "ddcro/ccg.hpp"

namespace ddcro {

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // p.u.
    double capacity = 0.0;     // MW
};

struct Generator {
    int bus = 0;
    double pmin = 0.0, pmax = 0.0;      // MW
    double ramp_up = 0.0, ramp_dn = 0.0;  // MW per period
    double cost = 0.0;                  // $/MWh
    double cost_up = 0.0, cost_dn = 0.0;  // $/MW reserve
};

struct NetworkInstance {
    int buses = 0;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<int> renewable_bus;
    Mat demand;  // periods x buses, MW
    Mat ybar;    // periods x renewables, MW (expected output)
    double penalty_shed = 0.0;   // $/MWh of unserved load
    double penalty_spill = 0.0;  // $/MWh of spilled renewable output

    int n_g() const { return static_cast<int>(generators.size()); }
    int n_l() const { return static_cast<int>(lines.size()); }
    int n_r() const { return static_cast<int>(renewable_bus.size()); }
};

inline NetworkInstance network_from_json(const json& j) {
    NetworkInstance net;
    net.buses = j.at("buses").get<int>();
    for (const auto& l : j.at("lines")) {
        Line line;
        line.from = l.at("from").get<int>();
        line.to = l.at("to").get<int>();
        line.susceptance = jsd::number(l.at("susceptance"), "lines.susceptance");
        line.capacity = jsd::number(l.at("capacity"), "lines.capacity");
        net.lines.push_back(line);
    }
    for (const auto& g : j.at("generators")) {
        Generator gen;
        gen.bus = g.at("bus").get<int>();
        gen.pmin = jsd::number(g.at("pmin"), "generators.pmin");
        gen.pmax = jsd::number(g.at("pmax"), "generators.pmax");
        gen.ramp_up = jsd::number(g.at("ramp_up"), "generators.ramp_up");
        gen.ramp_dn = jsd::number(g.at("ramp_dn"), "generators.ramp_dn");
        gen.cost = jsd::number(g.at("cost"), "generators.cost");
        gen.cost_up = jsd::number(g.at("cost_up"), "generators.cost_up");
        gen.cost_dn = jsd::number(g.at("cost_dn"), "generators.cost_dn");
        net.generators.push_back(gen);
    }
    for (const auto& r : j.at("renewables")) net.renewable_bus.push_back(r.at("bus").get<int>());
    net.demand = jsd::mat(j.at("demand"), "demand");
    net.ybar = jsd::mat(j.at("ybar"), "ybar");
    if (j.contains("penalty_shed")) net.penalty_shed = jsd::number(j.at("penalty_shed"), "penalty_shed");
    if (j.contains("penalty_spill")) net.penalty_spill = jsd::number(j.at("penalty_spill"), "penalty_spill");
    double max_cost = 0.0;
    for (const auto& g : net.generators) max_cost = std::max(max_cost, g.cost);
    double min_cost = max_cost;
    for (const auto& g : net.generators) min_cost = std::min(min_cost, g.cost);
    if (net.penalty_shed == 0.0) net.penalty_shed = 10.0 * std::max(1.0, max_cost);
    if (net.penalty_spill == 0.0) net.penalty_spill = 0.5 * std::max(1.0, min_cost);

    // invariant checks with field paths
    auto fail = [](const std::string& path, const std::string& msg) {
        throw Error("schema", path + ": " + msg);
    };
    if (net.buses < 1) fail("buses", "must be positive");
    for (size_t i = 0; i < net.lines.size(); ++i) {
        const Line& l = net.lines[i];
        const std::string path = "lines[" + std::to_string(i) + "]";
        if (l.from < 0 || l.from >= net.buses || l.to < 0 || l.to >= net.buses)
            fail(path, "endpoint bus out of range");
        if (l.capacity < 0.0) fail(path, "negative capacity");
        if (l.susceptance <= 0.0) fail(path, "susceptance must be positive");
    }
    for (size_t i = 0; i < net.generators.size(); ++i) {
        const Generator& g = net.generators[i];
        const std::string path = "generators[" + std::to_string(i) + "]";
        if (g.bus < 0 || g.bus >= net.buses) fail(path, "bus out of range");
        if (g.pmin < 0.0 || g.pmax < g.pmin) fail(path, "generation limits out of order");
        if (g.ramp_up < 0.0 || g.ramp_dn < 0.0) fail(path, "negative ramp limit");
        if (g.cost_up < 0.0 || g.cost_dn < 0.0) fail(path, "negative reserve cost");
    }
    for (size_t i = 0; i < net.renewable_bus.size(); ++i)
        if (net.renewable_bus[i] < 0 || net.renewable_bus[i] >= net.buses)
            fail("renewables[" + std::to_string(i) + "]", "bus out of range");
    if (net.demand.cols != net.buses) fail("demand", "column count must equal bus count");
    if (net.ybar.cols != net.n_r()) fail("ybar", "column count must equal renewable count");
    if (net.demand.rows < 1) fail("demand", "at least one period required");
    if (net.ybar.rows != net.demand.rows) fail("ybar", "row count must match demand");
    if (net.penalty_shed <= max_cost)
        fail("penalty_shed", "must exceed the highest generator cost");
    if (net.penalty_spill < 0.0) fail("penalty_spill", "must be nonnegative");

    // connectivity via union-find over the line list
    if (net.buses > 1) {
        std::vector<int> parent(net.buses);
        for (int i = 0; i < net.buses; ++i) parent[i] = i;
        std::function<int(int)> find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        for (const Line& l : net.lines) parent[find(l.from)] = find(l.to);
        std::vector<std::vector<int>> comps(net.buses);
        for (int i = 0; i < net.buses; ++i) comps[find(i)].push_back(i);
        int n_comp = 0;
        std::string desc;
        for (const auto& comp : comps) {
            if (comp.empty()) continue;
            ++n_comp;
            if (n_comp > 1 || desc.empty()) {
                desc += "{";
                for (size_t i = 0; i < comp.size(); ++i)
                    desc += (i ? "," : "") + std::to_string(comp[i]);
                desc += "}";
            }
        }
        if (n_comp > 1) throw Error("disconnected", "disconnected graph: components " + desc);
    }
    return net;
}

inline NetworkInstance load_network(const std::string& path) {
    return network_from_json(jsd::load_file(path));
}

// ---------------------------------------------------------------------------
// Stage model

// A period's two-stage instance plus the bookkeeping needed to read recourse
// solutions back in network terms.
struct EnergyStage {
    TwoStageProblem problem;
    StandardRecourse recourse;
    int ng = 0, nb = 0, nl = 0, nr = 0;
    // raw recourse variable offsets
    int delta0 = 0, sminus0 = 0, splus0 = 0, fwc0 = 0, betawc0 = 0;

    // first-stage layout offsets
    int ip() const { return 0; }
    int irup() const { return ng; }
    int irdn() const { return 2 * ng; }
    int iflow() const { return 3 * ng; }
    int ibeta() const { return 3 * ng + nl; }
    int dim_z() const { return 3 * ng + nl + nb; }

    Vec shed_and_spill(const Vec& u_std) const {
        Vec raw = recourse.to_raw(u_std);
        double shed = 0.0, spill = 0.0;
        for (int b = 0; b < nb; ++b) {
            shed += raw[sminus0 + b];
            spill += raw[splus0 + b];
        }
        return {shed, spill};
    }
};

namespace detail {

// Raw recourse for one period: rows in the order balance, flow physics,
// reference angle, re-dispatch band, flow limits, shed caps, spill caps.
// The h assembler turns a renewable realization into the right-hand side.
struct RecourseLayout {
    RawRecourse raw;
    Mat T_raw;  // d_h x d_z mapping of first-stage variables into the rhs
    std::function<Vec(const Vec&)> h_of_y;
};

inline RecourseLayout build_recourse(const NetworkInstance& net, const Vec& demand_row) {
    const int ng = net.n_g(), nb = net.buses, nl = net.n_l(), nr = net.n_r();
    const int n_raw = ng + nb + nb + nl + nb;  // delta, s-, s+, f_wc, beta_wc
    const int delta0 = 0, sminus0 = ng, splus0 = ng + nb, fwc0 = ng + 2 * nb,
              betawc0 = ng + 2 * nb + nl;
    const int dz = 3 * ng + nl + nb;
    const int m = nb + nl + 1 + 2 * ng + 2 * nl + nb + nb;

    RecourseLayout lay;
    lay.raw.cost.assign(n_raw, 0.0);
    for (int b = 0; b < nb; ++b) {
        lay.raw.cost[sminus0 + b] = net.penalty_shed;
        lay.raw.cost[splus0 + b] = net.penalty_spill;
    }
    lay.raw.A = Mat(m, n_raw);
    lay.raw.sense.assign(m, RowSense::eq);
    lay.raw.free_var.assign(n_raw, 0);
    for (int g = 0; g < ng; ++g) lay.raw.free_var[delta0 + g] = 1;
    for (int l = 0; l < nl; ++l) lay.raw.free_var[fwc0 + l] = 1;
    for (int b = 0; b < nb; ++b) lay.raw.free_var[betawc0 + b] = 1;
    lay.T_raw = Mat(m, dz);

    int row = 0;
    // nodal balance: G delta + A f_wc - s+ + s- = D - E y - G p
    for (int b = 0; b < nb; ++b, ++row) {
        for (int g = 0; g < ng; ++g)
            if (net.generators[g].bus == b) {
                lay.raw.A(row, delta0 + g) = 1.0;
                lay.T_raw(row, g) = 1.0;  // +G p moves to the rhs as -G p
            }
        for (int l = 0; l < nl; ++l) {
            if (net.lines[l].from == b) lay.raw.A(row, fwc0 + l) -= 1.0;
            if (net.lines[l].to == b) lay.raw.A(row, fwc0 + l) += 1.0;
        }
        lay.raw.A(row, splus0 + b) = -1.0;
        lay.raw.A(row, sminus0 + b) = 1.0;
    }
    // flow physics: f_wc - B beta_wc = 0
    for (int l = 0; l < nl; ++l, ++row) {
        lay.raw.A(row, fwc0 + l) = 1.0;
        lay.raw.A(row, betawc0 + net.lines[l].from) -= net.lines[l].susceptance;
        lay.raw.A(row, betawc0 + net.lines[l].to) += net.lines[l].susceptance;
    }
    // reference angle
    lay.raw.A(row, betawc0 + 0) = 1.0;
    ++row;
    // re-dispatch band: delta <= r_up ; -delta <= r_dn
    for (int g = 0; g < ng; ++g, ++row) {
        lay.raw.A(row, delta0 + g) = 1.0;
        lay.raw.sense[row] = RowSense::le;
        lay.T_raw(row, ng + g) = -1.0;  // rhs 0 - (-r_up) = r_up
    }
    for (int g = 0; g < ng; ++g, ++row) {
        lay.raw.A(row, delta0 + g) = -1.0;
        lay.raw.sense[row] = RowSense::le;
        lay.T_raw(row, 2 * ng + g) = -1.0;
    }
    // flow limits
    for (int l = 0; l < nl; ++l, ++row) {
        lay.raw.A(row, fwc0 + l) = 1.0;
        lay.raw.sense[row] = RowSense::le;
    }
    for (int l = 0; l < nl; ++l, ++row) {
        lay.raw.A(row, fwc0 + l) = -1.0;
        lay.raw.sense[row] = RowSense::le;
    }
    // shed caps s- <= D
    for (int b = 0; b < nb; ++b, ++row) {
        lay.raw.A(row, sminus0 + b) = 1.0;
        lay.raw.sense[row] = RowSense::le;
    }
    // spill caps s+ <= E y
    for (int b = 0; b < nb; ++b, ++row) {
        lay.raw.A(row, splus0 + b) = 1.0;
        lay.raw.sense[row] = RowSense::le;
    }

    const Vec demand = demand_row;
    const auto lines = net.lines;
    const auto rbus = net.renewable_bus;
    lay.h_of_y = [ng, nb, nl, nr, demand, lines, rbus](const Vec& y) {
        const int m2 = nb + nl + 1 + 2 * ng + 2 * nl + nb + nb;
        Vec h(m2, 0.0);
        Vec ey(nb, 0.0);
        for (int r = 0; r < nr; ++r) ey[rbus[r]] += y[r];
        int row = 0;
        for (int b = 0; b < nb; ++b, ++row) h[row] = demand[b] - ey[b];
        row += nl + 1 + 2 * ng;  // zero rows
        for (int l = 0; l < nl; ++l, ++row) h[row] = lines[l].capacity;
        for (int l = 0; l < nl; ++l, ++row) h[row] = lines[l].capacity;
        for (int b = 0; b < nb; ++b, ++row) h[row] = demand[b];
        for (int b = 0; b < nb; ++b, ++row) h[row] = ey[b];
        return h;
    };
    return lay;
}

inline void add_first_stage(const NetworkInstance& net, const Vec& demand_row,
                            const Vec& ybar_row, const Vec& prev_p, TwoStageProblem& p) {
    const int ng = net.n_g(), nb = net.buses, nl = net.n_l(), nr = net.n_r();
    const int dz = 3 * ng + nl + nb;
    p.c.assign(dz, 0.0);
    p.Z = Polyhedron(dz);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[g];
        p.c[g] = gen.cost;
        p.c[ng + g] = gen.cost_up;
        p.c[2 * ng + g] = gen.cost_dn;
        p.Z.lb[g] = gen.pmin;
        p.Z.ub[g] = gen.pmax;
        p.Z.lb[ng + g] = 0.0;
        p.Z.ub[ng + g] = gen.ramp_up;
        p.Z.lb[2 * ng + g] = 0.0;
        p.Z.ub[2 * ng + g] = gen.ramp_dn;
    }
    for (int l = 0; l < nl; ++l) {
        p.Z.lb[3 * ng + l] = -net.lines[l].capacity;
        p.Z.ub[3 * ng + l] = net.lines[l].capacity;
    }
    // reference angle pinned, other angles free
    p.Z.lb[3 * ng + nl] = 0.0;
    p.Z.ub[3 * ng + nl] = 0.0;

    Vec ey(nb, 0.0);
    for (int r = 0; r < nr; ++r) ey[net.renewable_bus[r]] += ybar_row[r];
    for (int b = 0; b < nb; ++b) {
        Vec row(dz, 0.0);
        for (int g = 0; g < ng; ++g)
            if (net.generators[g].bus == b) row[g] = 1.0;
        for (int l = 0; l < nl; ++l) {
            if (net.lines[l].from == b) row[3 * ng + l] -= 1.0;
            if (net.lines[l].to == b) row[3 * ng + l] += 1.0;
        }
        p.Z.A_eq.data.insert(p.Z.A_eq.data.end(), row.begin(), row.end());
        p.Z.A_eq.rows += 1;
        p.Z.b_eq.push_back(demand_row[b] - ey[b]);
    }
    for (int l = 0; l < nl; ++l) {
        Vec row(dz, 0.0);
        row[3 * ng + l] = 1.0;
        row[3 * ng + nl + net.lines[l].from] -= net.lines[l].susceptance;
        row[3 * ng + nl + net.lines[l].to] += net.lines[l].susceptance;
        p.Z.A_eq.data.insert(p.Z.A_eq.data.end(), row.begin(), row.end());
        p.Z.A_eq.rows += 1;
        p.Z.b_eq.push_back(0.0);
    }
    auto add_in = [&](const Vec& row, double rhs) {
        p.Z.A_in.data.insert(p.Z.A_in.data.end(), row.begin(), row.end());
        p.Z.A_in.rows += 1;
        p.Z.b_in.push_back(rhs);
    };
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[g];
        Vec up(dz, 0.0), dn(dz, 0.0), rup(dz, 0.0), rdn(dz, 0.0);
        up[g] = 1.0;
        up[ng + g] = 1.0;
        add_in(up, gen.pmax);  // p + r_up <= pmax
        dn[g] = -1.0;
        dn[2 * ng + g] = 1.0;
        add_in(dn, -gen.pmin);  // -p + r_dn <= -pmin
        rup[g] = 1.0;
        rup[ng + g] = 1.0;
        add_in(rup, prev_p[g] + gen.ramp_up);  // inter-period ramp up
        rdn[g] = -1.0;
        rdn[2 * ng + g] = 1.0;
        add_in(rdn, gen.ramp_dn - prev_p[g]);  // inter-period ramp down
    }
}

}  // namespace detail

// Builds the two-stage instance for one period. The window set carries the
// raw renewable observations: h[s] holds the output vector y_s (one entry
// per renewable) and x the covariates; the assembled problem replaces h by
// the full recourse right-hand side.
inline EnergyStage build_stage_problem(const NetworkInstance& net, int period_index,
                                       const Vec& prev_p, const ScenarioSet& window) {
    EnergyStage stage;
    stage.ng = net.n_g();
    stage.nb = net.buses;
    stage.nl = net.n_l();
    stage.nr = net.n_r();
    stage.delta0 = 0;
    stage.sminus0 = stage.ng;
    stage.splus0 = stage.ng + stage.nb;
    stage.fwc0 = stage.ng + 2 * stage.nb;
    stage.betawc0 = stage.ng + 2 * stage.nb + stage.nl;

    const int t = period_index % net.demand.rows;
    Vec demand_row(net.buses), ybar_row(net.n_r());
    for (int b = 0; b < net.buses; ++b) demand_row[b] = net.demand(t, b);
    for (int r = 0; r < net.n_r(); ++r) ybar_row[r] = net.ybar(t, r);

    for (int g = 0; g < net.n_g(); ++g)
        if (prev_p[g] < net.generators[g].pmin - 1e-9 ||
            prev_p[g] > net.generators[g].pmax + 1e-9)
            throw Error("prev_p", "previous dispatch outside generator limits at unit " +
                                      std::to_string(g));

    TwoStageProblem& p = stage.problem;
    detail::add_first_stage(net, demand_row, ybar_row, prev_p, p);

    detail::RecourseLayout lay = detail::build_recourse(net, demand_row);
    stage.recourse = to_standard_recourse(lay.raw);
    p.W = stage.recourse.W;
    p.q = stage.recourse.q;
    p.fixed_T = lay.T_raw;  // rows unchanged by standardization
    p.uncertainty_kind = UncertaintyKind::rhs_h_only;

    p.scenarios.x = window.x;
    p.scenarios.categorical_mask = window.categorical_mask;
    for (int s = 0; s < window.size(); ++s) {
        if (static_cast<int>(window.h[s].size()) != net.n_r())
            throw Error("dim_window", "window observation " + std::to_string(s) +
                                          " does not match the renewable count");
        p.scenarios.h.push_back(lay.h_of_y(window.h[s]));
    }
    return stage;
}

struct PeriodSchedule {
    int period = 0;
    int hour = 0;
    Vec z;
    Vec p, r_up, r_dn, f, beta;
    double alpha = 0.0;
    double objective = 0.0;
    int oracle_calls = 0;
    int pool_size = 0;
};

struct RollingOptions {
    double delta = 0.1;
    BallNorm norm = BallNorm::inf;
    bool warm_start = true;
    bool unconditional = false;  // budget large enough to free the whole hull
    int start_hour = 0;
    std::optional<Vec> initial_p;
    CcgOptions ccg;
};

struct RollingResult {
    std::vector<PeriodSchedule> schedules;
    CutPool pool;
    std::vector<int> pool_sizes;  // after each period
    int total_oracle_calls = 0;
};

namespace detail {

// Window covariates: previous-hour outputs plus an hour-of-day indicator
// block with zero budget.
inline ScenarioSet make_window(const std::vector<Vec>& history, int first, int window_len,
                               int start_hour, int nr) {
    ScenarioSet w;
    const int dx = nr + 24;
    w.x = Mat(window_len, dx);
    w.categorical_mask.assign(dx, 0);
    for (int j = nr; j < dx; ++j) w.categorical_mask[j] = 1;
    for (int i = 0; i < window_len; ++i) {
        const int row = first + i;
        for (int r = 0; r < nr; ++r) w.x(i, r) = history[row - 1][r];
        w.x(i, nr + (start_hour + row) % 24) = 1.0;
        w.h.push_back(history[row]);
    }
    return w;
}

inline Vec make_context(const std::vector<Vec>& history, int row, int start_hour, int nr) {
    Vec x(nr + 24, 0.0);
    for (int r = 0; r < nr; ++r) x[r] = history[row - 1][r];
    x[nr + (start_hour + row) % 24] = 1.0;
    return x;
}

inline double unconditional_gamma(const ScenarioSet& sc, const Vec& x, BallNorm norm) {
    const Conditioned c = condition_scenarios(sc, x);
    double d = 0.0;
    for (int k = 0; k < c.support_size(); ++k) {
        double inf = 0.0, one = 0.0;
        for (int j = 0; j < c.d_cont; ++j) {
            const double dev = std::abs(c.xs(k, j) - c.x[j]);
            inf = std::max(inf, dev);
            one += dev;
        }
        d = std::max(d, norm == BallNorm::inf ? inf : one);
    }
    return d + 1.0;
}

}  // namespace detail

// Sequential hour-ahead schedule over the tail of the history: the leading
// window_len observations form the scenario window, every later row is a
// scheduled period (its realized output stays unseen by the solve). The
// window is fixed across the horizon so the cut pool keeps its validity
// from period to period; the pool is carried forward when warm starts are
// enabled.
inline RollingResult rolling_run(const NetworkInstance& net, const std::vector<Vec>& history,
                                 int window_len, const RollingOptions& opts = RollingOptions{},
                                 const Settings& st = Settings{}) {
    const int nr = net.n_r();
    if (window_len < 2) throw Error("window", "window must hold at least two observations");
    const int horizon = static_cast<int>(history.size()) - window_len;
    if (horizon < 1)
        throw Error("window", "history must exceed the window by at least one period");
    for (const Vec& y : history)
        if (static_cast<int>(y.size()) != nr)
            throw Error("dim_history", "history rows must match the renewable count");

    const ScenarioSet window =
        detail::make_window(history, 1, window_len - 1, opts.start_hour, nr);

    RollingResult out;
    Vec prev_p(net.n_g(), 0.0);
    if (opts.initial_p) prev_p = *opts.initial_p;
    else
        for (int g = 0; g < net.n_g(); ++g) prev_p[g] = net.generators[g].pmin;

    for (int t = 0; t < horizon; ++t) {
        const int row = window_len + t;
        EnergyStage stage = build_stage_problem(net, t, prev_p, window);
        if (out.pool.problem_fingerprint.empty())
            out.pool.problem_fingerprint = problem_fingerprint(stage.problem);

        Vec x = detail::make_context(history, row, opts.start_hour, nr);
        ContextQuery q;
        if (opts.unconditional) {
            q = ContextQuery::with_gamma(
                x, detail::unconditional_gamma(stage.problem.scenarios, x, opts.norm), opts.norm);
        } else {
            q = ContextQuery::with_delta(x, opts.delta, opts.norm);
        }

        CcgOptions copts = opts.ccg;
        copts.master_kind = MasterKind::contextual;
        CcgOutput sol;
        try {
            if (opts.warm_start) {
                sol = warm_start_solve(stage.problem, q, out.pool, copts, st);
            } else {
                sol = solve_ccg(stage.problem, q, copts, st);
            }
        } catch (const Error& e) {
            throw Error(e.code(), "period " + std::to_string(t) + ": " + e.what());
        }
        if (sol.solution.status != SolveStatus::optimal)
            throw Error("period_unsolved", "period " + std::to_string(t) + " ended " +
                                               std::string(to_string(sol.solution.status)));
        if (opts.warm_start) out.pool = sol.pool;
        out.total_oracle_calls += sol.oracle_calls;
        out.pool_sizes.push_back(opts.warm_start ? out.pool.size() : sol.pool.size());

        PeriodSchedule ps;
        ps.period = t;
        ps.hour = (opts.start_hour + row) % 24;
        ps.z = sol.solution.z;
        const int ng = net.n_g(), nl = net.n_l(), nb = net.buses;
        ps.p.assign(ps.z.begin(), ps.z.begin() + ng);
        ps.r_up.assign(ps.z.begin() + ng, ps.z.begin() + 2 * ng);
        ps.r_dn.assign(ps.z.begin() + 2 * ng, ps.z.begin() + 3 * ng);
        ps.f.assign(ps.z.begin() + 3 * ng, ps.z.begin() + 3 * ng + nl);
        ps.beta.assign(ps.z.begin() + 3 * ng + nl, ps.z.begin() + 3 * ng + nl + nb);
        ps.alpha = sol.solution.alpha;
        ps.objective = sol.solution.objective;
        ps.oracle_calls = sol.oracle_calls;
        ps.pool_size = out.pool_sizes.back();
        out.schedules.push_back(std::move(ps));
        prev_p = out.schedules.back().p;
    }
    return out;
}

struct OutOfSampleReport {
    double total_cost = 0.0;
    double first_stage_cost = 0.0;
    double penalty_cost = 0.0;
    double lolp = 0.0;
    double pws = 0.0;
    Vec shed;   // MW per hour
    Vec spill;  // MW per hour
    Vec cost;   // $ per hour, first stage plus penalties
};

// Prices every committed schedule against the realized outputs by solving
// the single-period recourse LP. Shedding and spillage slacks keep the LP
// feasible for any realization.
inline OutOfSampleReport evaluate_oos(const NetworkInstance& net,
                                      const std::vector<PeriodSchedule>& schedules,
                                      const std::vector<Vec>& realized,
                                      const Settings& st = Settings{}) {
    if (realized.size() != schedules.size())
        throw Error("dim_realized", "realized series must match the schedule count");
    OutOfSampleReport rep;
    int lolp_hours = 0, pws_hours = 0;
    for (size_t t = 0; t < schedules.size(); ++t) {
        const PeriodSchedule& ps = schedules[t];
        const int ti = ps.period % net.demand.rows;
        Vec demand_row(net.buses);
        double load = 0.0;
        for (int b = 0; b < net.buses; ++b) {
            demand_row[b] = net.demand(ti, b);
            load += demand_row[b];
        }
        detail::RecourseLayout lay = detail::build_recourse(net, demand_row);
        StandardRecourse std_rec = to_standard_recourse(lay.raw);
        Vec h = lay.h_of_y(realized[t]);
        Vec rhs = h;
        for (int i = 0; i < lay.T_raw.rows; ++i)
            for (int j = 0; j < lay.T_raw.cols; ++j) rhs[i] -= lay.T_raw(i, j) * ps.z[j];
        auto sol = solve_lp(recourse_lp(std_rec.W, std_rec.q, rhs), st);
        if (sol.status != LpStatus::optimal)
            throw Error("eval", "recourse evaluation failed at hour " + std::to_string(t));
        Vec raw = std_rec.to_raw(sol.x);
        double shed = 0.0, spill = 0.0;
        for (int b = 0; b < net.buses; ++b) {
            shed += raw[net.n_g() + b];
            spill += raw[net.n_g() + net.buses + b];
        }
        double avail = 0.0;
        for (double y : realized[t]) avail += y;
        const double fs_cost = dot(ps.z, [&] {
            Vec c(ps.z.size(), 0.0);
            for (int g = 0; g < net.n_g(); ++g) {
                c[g] = net.generators[g].cost;
                c[net.n_g() + g] = net.generators[g].cost_up;
                c[2 * net.n_g() + g] = net.generators[g].cost_dn;
            }
            return c;
        }());
        const double pen = net.penalty_shed * shed + net.penalty_spill * spill;
        rep.shed.push_back(shed);
        rep.spill.push_back(spill);
        rep.cost.push_back(fs_cost + pen);
        rep.first_stage_cost += fs_cost;
        rep.penalty_cost += pen;
        if (shed > 0.001 * load) ++lolp_hours;
        if (avail > 0.0 && spill > 0.001 * avail) ++pws_hours;
    }
    rep.total_cost = rep.first_stage_cost + rep.penalty_cost;
    const double n = static_cast<double>(schedules.size());
    rep.lolp = n > 0 ? lolp_hours / n : 0.0;
    rep.pws = n > 0 ? pws_hours / n : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// File formats

// History CSV: mandatory header, one row per hour, one column per renewable.
inline std::vector<Vec> load_history_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("not_found", "cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw Error("parse", path + ": empty file");
    std::vector<Vec> rows;
    int cols = -1;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        Vec row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                throw Error("parse", path + ":" + std::to_string(lineno) + ": bad number");
            }
            if (!std::isfinite(row.back()))
                throw Error("parse", path + ":" + std::to_string(lineno) + ": NaN/Inf rejected");
        }
        if (cols < 0) cols = static_cast<int>(row.size());
        else if (cols != static_cast<int>(row.size()))
            throw Error("parse", path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("parse", path + ": no data rows");
    return rows;
}

inline json schedules_to_json(const RollingResult& run, int window_len, double delta,
                              int start_hour) {
    json j;
    j["window_len"] = window_len;
    j["delta"] = delta;
    j["start_hour"] = start_hour;
    j["total_oracle_calls"] = run.total_oracle_calls;
    json periods = json::array();
    for (const auto& ps : run.schedules) {
        json p;
        p["period"] = ps.period;
        p["hour"] = ps.hour;
        p["z"] = jsd::vec_to_json(ps.z);
        p["p"] = jsd::vec_to_json(ps.p);
        p["r_up"] = jsd::vec_to_json(ps.r_up);
        p["r_dn"] = jsd::vec_to_json(ps.r_dn);
        p["f"] = jsd::vec_to_json(ps.f);
        p["beta"] = jsd::vec_to_json(ps.beta);
        p["alpha"] = ps.alpha;
        p["objective"] = ps.objective;
        p["oracle_calls"] = ps.oracle_calls;
        p["pool_size"] = ps.pool_size;
        periods.push_back(p);
    }
    j["periods"] = periods;
    return j;
}

inline std::vector<PeriodSchedule> schedules_from_json(const json& j) {
    std::vector<PeriodSchedule> out;
    for (const auto& p : j.at("periods")) {
        PeriodSchedule ps;
        ps.period = p.at("period").get<int>();
        ps.hour = p.at("hour").get<int>();
        ps.z = jsd::vec(p.at("z"), "periods.z");
        ps.p = jsd::vec(p.at("p"), "periods.p");
        ps.r_up = jsd::vec(p.at("r_up"), "periods.r_up");
        ps.r_dn = jsd::vec(p.at("r_dn"), "periods.r_dn");
        ps.f = jsd::vec(p.at("f"), "periods.f");
        ps.beta = jsd::vec(p.at("beta"), "periods.beta");
        ps.alpha = jsd::number(p.at("alpha"), "periods.alpha");
        ps.objective = jsd::number(p.at("objective"), "periods.objective");
        ps.oracle_calls = p.at("oracle_calls").get<int>();
        ps.pool_size = p.at("pool_size").get<int>();
        out.push_back(std::move(ps));
    }
    return out;
}

inline json report_to_json(const OutOfSampleReport& rep) {
    json j;
    j["total_cost"] = rep.total_cost;
    j["first_stage_cost"] = rep.first_stage_cost;
    j["penalty_cost"] = rep.penalty_cost;
    j["lolp"] = rep.lolp;
    j["pws"] = rep.pws;
    json hours = json::array();
    for (size_t t = 0; t < rep.shed.size(); ++t) {
        json h;
        h["hour"] = t;
        h["shed"] = rep.shed[t];
        h["spill"] = rep.spill[t];
        h["cost"] = rep.cost[t];
        hours.push_back(h);
    }
    j["hours"] = hours;
    return j;
}

inline void report_to_csv(const OutOfSampleReport& rep, std::ostream& os) {
    os << "hour,shed,spill,cost\n";
    for (size_t t = 0; t < rep.shed.size(); ++t)
        os << t << "," << rep.shed[t] << "," << rep.spill[t] << "," << rep.cost[t] << "\n";
}

}  // namespace ddcro

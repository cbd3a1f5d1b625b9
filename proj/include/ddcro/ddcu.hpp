// The conditioned uncertainty set: convex combinations of historical
// uncertainty observations whose combined covariates stay within a norm
// ball of radius gamma around the revealed context. Categorical covariate
// components carry a zero budget; they are handled by restricting the
// combination support to scenarios whose categorical block matches the
// context exactly, after which only continuous components enter the
// distance. All geometry questions are answered through LPs.
#pragma once

#include "ddcro/model.hpp"

namespace ddcro {

// Context-conditioned view of a scenario set: support restricted to
// categorical matches, continuous columns extracted.
struct Conditioned {
    std::vector<int> scenario_index;  // indices into the full scenario set
    Mat xs;                           // |support| x d_cont
    Vec x;                            // continuous part of the query context
    int d_cont = 0;

    int support_size() const { return static_cast<int>(scenario_index.size()); }
};

inline Conditioned condition_scenarios(const ScenarioSet& sc, const Vec& x) {
    if (static_cast<int>(x.size()) != sc.dim_x())
        throw Error("dim_context", "context dimension does not match covariates");
    Conditioned c;
    std::vector<int> cont_cols;
    for (int j = 0; j < sc.dim_x(); ++j)
        if (!sc.categorical(j)) cont_cols.push_back(j);
    c.d_cont = static_cast<int>(cont_cols.size());
    for (int j : cont_cols) c.x.push_back(x[j]);

    for (int s = 0; s < sc.size(); ++s) {
        bool match = true;
        for (int j = 0; j < sc.dim_x(); ++j) {
            if (!sc.categorical(j)) continue;
            if (std::abs(sc.x(s, j) - x[j]) > 1e-9) {
                match = false;
                break;
            }
        }
        if (match) c.scenario_index.push_back(s);
    }
    c.xs = Mat(c.support_size(), c.d_cont);
    for (int k = 0; k < c.support_size(); ++k)
        for (int jj = 0; jj < c.d_cont; ++jj) c.xs(k, jj) = sc.x(c.scenario_index[k], cont_cols[jj]);
    return c;
}

// Distance from the context to the convex hull of the (conditioned)
// covariate observations, one LP. Infinite when no scenario matches the
// categorical block.
inline double gamma0(const ScenarioSet& sc, const Vec& x, BallNorm norm,
                     const Settings& st = Settings{}) {
    if (sc.size() < 1) throw Error("no_scenarios", "scenario set is empty");
    const Conditioned c = condition_scenarios(sc, x);
    const int s = c.support_size();
    if (s == 0) return kInf;
    const int d = c.d_cont;
    if (d == 0) return 0.0;

    // variables: theta (s), then t (1 for inf norm, d for one norm)
    const int nt = norm == BallNorm::inf ? 1 : d;
    LinearProgram lp(s + nt);
    for (int k = 0; k < s; ++k) lp.lb[k] = 0.0;
    for (int k = 0; k < nt; ++k) {
        lp.lb[s + k] = 0.0;
        lp.c[s + k] = 1.0;
    }
    Vec ones(s + nt, 0.0);
    for (int k = 0; k < s; ++k) ones[k] = 1.0;
    lp.add_eq_row(ones, 1.0);
    for (int j = 0; j < d; ++j) {
        Vec up(s + nt, 0.0), dn(s + nt, 0.0);
        for (int k = 0; k < s; ++k) {
            up[k] = c.xs(k, j);
            dn[k] = -c.xs(k, j);
        }
        const int tcol = s + (norm == BallNorm::inf ? 0 : j);
        up[tcol] = -1.0;
        dn[tcol] = -1.0;
        lp.add_in_row(up, c.x[j]);
        lp.add_in_row(dn, -c.x[j]);
    }
    auto sol = solve_lp(lp, st);
    if (sol.status != LpStatus::optimal) throw Error("gamma0", "distance LP did not solve");
    return std::max(0.0, sol.objective);
}

// Budget record: hull distance, resolved budget, per-component budgets
// (zero on categorical components).
struct BudgetSpec {
    double gamma0 = 0.0;
    double gamma = 0.0;
    Vec per_component;
};

// Resolves the query budget: explicit gamma must cover gamma0; a relative
// delta gives gamma = (1+delta)*gamma0. The set is never silently inflated.
inline BudgetSpec resolve_budget(const ScenarioSet& sc, const ContextQuery& q,
                                 const Settings& st = Settings{}) {
    BudgetSpec b;
    b.gamma0 = gamma0(sc, q.x, q.norm, st);
    if (!std::isfinite(b.gamma0))
        throw Error("empty_set",
                    "no scenario matches the categorical components; gamma0 is infinite");
    if (q.gamma) {
        b.gamma = *q.gamma;
        if (b.gamma < b.gamma0 - 1e-8)
            throw Error("empty_set", "gamma " + std::to_string(b.gamma) +
                                         " is below gamma0 " + std::to_string(b.gamma0));
    } else {
        b.gamma = (1.0 + q.delta) * b.gamma0;
    }
    b.per_component.assign(sc.dim_x(), b.gamma);
    for (int j = 0; j < sc.dim_x(); ++j)
        if (sc.categorical(j)) b.per_component[j] = 0.0;
    return b;
}

namespace detail {

// Feasibility rows shared by membership and range LPs: theta on the
// conditioned support, simplex row, and the norm-ball rows. For the one
// norm, d extra epigraph variables are appended after theta.
struct ThetaSystem {
    LinearProgram lp;
    int s = 0;       // support size
    int extra = 0;   // epigraph variable count

    ThetaSystem(const Conditioned& c, double gamma, BallNorm norm) {
        s = c.support_size();
        const int d = c.d_cont;
        extra = (norm == BallNorm::one && d > 0) ? d : 0;
        lp = LinearProgram(s + extra);
        for (int k = 0; k < s + extra; ++k) lp.lb[k] = 0.0;
        Vec ones(s + extra, 0.0);
        for (int k = 0; k < s; ++k) ones[k] = 1.0;
        lp.add_eq_row(ones, 1.0);
        if (norm == BallNorm::inf) {
            for (int j = 0; j < d; ++j) {
                Vec up(s + extra, 0.0), dn(s + extra, 0.0);
                for (int k = 0; k < s; ++k) {
                    up[k] = c.xs(k, j);
                    dn[k] = -c.xs(k, j);
                }
                lp.add_in_row(up, c.x[j] + gamma);
                lp.add_in_row(dn, -c.x[j] + gamma);
            }
        } else {
            // |sum theta xs - x|_j <= w_j, sum w <= gamma
            for (int j = 0; j < d; ++j) {
                Vec up(s + extra, 0.0), dn(s + extra, 0.0);
                for (int k = 0; k < s; ++k) {
                    up[k] = c.xs(k, j);
                    dn[k] = -c.xs(k, j);
                }
                up[s + j] = -1.0;
                dn[s + j] = -1.0;
                lp.add_in_row(up, c.x[j]);
                lp.add_in_row(dn, -c.x[j]);
            }
            Vec wsum(s + extra, 0.0);
            for (int j = 0; j < d; ++j) wsum[s + j] = 1.0;
            lp.add_in_row(wsum, gamma);
        }
    }
};

}  // namespace detail

// Membership test for a candidate uncertainty vector.
inline bool contains(const ScenarioSet& sc, const Vec& x, double gamma, BallNorm norm,
                     const Vec& y_candidate, const Settings& st = Settings{}) {
    if (gamma < 0.0) throw Error("bad_gamma", "gamma must be nonnegative");
    const Conditioned c = condition_scenarios(sc, x);
    if (c.support_size() == 0) return false;
    detail::ThetaSystem sys(c, gamma, norm);
    const auto& ys = sc.y();
    const int dy = static_cast<int>(y_candidate.size());
    for (int j = 0; j < dy; ++j) {
        Vec row(sys.lp.num_vars(), 0.0);
        for (int k = 0; k < sys.s; ++k) row[k] = ys[c.scenario_index[k]][j];
        sys.lp.add_eq_row(row, y_candidate[j]);
    }
    return lp_feasible(sys.lp, st);
}

struct CoordinateRanges {
    Vec lo, hi;
    bool singleton = false;
    double max_width = 0.0;
};

// Per-coordinate [min, max] of the uncertainty vector over the conditioned
// set: two LPs per coordinate. Throws an empty-set error naming gamma0 when
// the budget cannot reach the hull.
inline CoordinateRanges coordinate_ranges(const ScenarioSet& sc, const Vec& x, double gamma,
                                          BallNorm norm, const Settings& st = Settings{}) {
    const Conditioned c = condition_scenarios(sc, x);
    if (c.support_size() == 0)
        throw Error("empty_set",
                    "no scenario matches the categorical components; gamma0 is infinite");
    const auto& ys = sc.y();
    const int dy = static_cast<int>(ys[0].size());
    CoordinateRanges out;
    out.lo.assign(dy, 0.0);
    out.hi.assign(dy, 0.0);
    for (int j = 0; j < dy; ++j) {
        detail::ThetaSystem sys(c, gamma, norm);
        for (int k = 0; k < sys.s; ++k) sys.lp.c[k] = ys[c.scenario_index[k]][j];
        auto lo = solve_lp(sys.lp, st);
        if (lo.status == LpStatus::infeasible) {
            const double g0 = gamma0(sc, x, norm, st);
            throw Error("empty_set", "conditioned set is empty: gamma " + std::to_string(gamma) +
                                         " < gamma0 " + std::to_string(g0));
        }
        if (lo.status != LpStatus::optimal) throw Error("ranges", "range LP did not solve");
        for (int k = 0; k < sys.s; ++k) sys.lp.c[k] = -sys.lp.c[k];
        auto hi = solve_lp(sys.lp, st);
        if (hi.status != LpStatus::optimal) throw Error("ranges", "range LP did not solve");
        out.lo[j] = lo.objective;
        out.hi[j] = -hi.objective;
        out.max_width = std::max(out.max_width, out.hi[j] - out.lo[j]);
    }
    out.singleton = out.max_width <= 1e-7;
    return out;
}

}  // namespace ddcro

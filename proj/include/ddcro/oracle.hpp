// Worst-case recourse evaluation Q(z, x) over the conditioned uncertainty
// set, three ways:
//
//   oracle_p_bilevel  — single-level KKT of the inner recourse LP: binaries
//                       pair each recourse variable with its reduced cost.
//   oracle_d_bilevel  — dualized inner problem; the scenario weights become
//                       the duals of the cut rows and the context enters the
//                       objective. Binaries pair the scenario rows with the
//                       weights and the budget rows with the dual-norm
//                       multipliers. This is the complete KKT system of the
//                       norm-linearized lower level; the budget-row
//                       complementarities are required for exactness
//                       whenever the budget is positive.
//   oracle_bruteforce — enumerates the weight-polytope vertices and prices
//                       the recourse LP at each one (the recourse value is
//                       convex in the realization, so the maximum sits at a
//                       vertex).
//
// All three restrict the scenario support to categorical matches first and
// then work in the continuous covariate block. Completeness of the recourse
// is checked per support scenario up front: the feasible right-hand-side set
// of {W u = r, u >= 0} is a convex cone, so scenario feasibility covers the
// whole conditioned hull.
//
// Big-M discipline: every free quantity in a KKT MILP carries an explicit
// box, row constants are derived from those boxes so a disjunction can never
// cut a boxed point, and a returned point is accepted only after an
// independent value check. Boxes double on failure, at most five times.
#pragma once

#include "ddcro/ddcu.hpp"
#include "ddcro/milp.hpp"

namespace ddcro {

struct OracleResult {
    double value = 0.0;
    Vec pi;         // point of {pi : W^T pi <= q} supporting the worst case
    Vec theta;      // simplex weights over the full scenario set
    Vec h_star;     // worst-case right-hand side
    Mat T_star;     // worst-case technology matrix
    double rho = 0.0;
    Vec gamma_vec;  // lower-level multipliers in full covariate space
    long nodes = 0;
};

// Per-(problem, query) preparation shared across oracle calls: conditioned
// support, resolved budget, and the coordinate box of the dual polyhedron
// (the box depends only on W and q, so callers running many oracle calls
// against one problem pay for the probes once).
struct OracleInputs {
    Conditioned cond;
    BudgetSpec budget;
    Vec pi_lo, pi_hi;  // exact per-coordinate bounds, may be +-inf
    double cap_scale = 0.0;
};

namespace detail {

inline void probe_pi_box(const TwoStageProblem& p, OracleInputs& in, const Settings& st) {
    const int dh = p.dim_h();
    LinearProgram lp(dh);
    for (int j = 0; j < p.dim_u(); ++j) {
        Vec row(dh);
        for (int i = 0; i < dh; ++i) row[i] = p.W(i, j);
        lp.add_in_row(row, p.q[j]);
    }
    in.pi_lo.assign(dh, -kInf);
    in.pi_hi.assign(dh, kInf);
    double max_finite = 0.0;
    for (int i = 0; i < dh; ++i) {
        lp.c.assign(dh, 0.0);
        lp.c[i] = 1.0;
        auto lo = solve_lp(lp, st);
        if (lo.status == LpStatus::infeasible)
            throw Error("dual_empty", "dual polyhedron is empty: recourse unbounded below");
        if (lo.status == LpStatus::optimal) in.pi_lo[i] = lo.objective;
        lp.c[i] = -1.0;
        auto hi = solve_lp(lp, st);
        if (hi.status == LpStatus::optimal) in.pi_hi[i] = -hi.objective;
        if (std::isfinite(in.pi_lo[i])) max_finite = std::max(max_finite, std::abs(in.pi_lo[i]));
        if (std::isfinite(in.pi_hi[i])) max_finite = std::max(max_finite, std::abs(in.pi_hi[i]));
    }
    // dual magnitudes live on the cost scale; seed the box for unbounded
    // coordinates from both the probes and the recourse costs
    in.cap_scale = 10.0 * (1.0 + max_finite + norm_inf(p.q));
}

// v_k = h_s - T_s z over the conditioned support.
inline std::vector<Vec> support_rhs(const TwoStageProblem& p, const Conditioned& c, const Vec& z) {
    std::vector<Vec> v;
    v.reserve(c.support_size());
    for (int k = 0; k < c.support_size(); ++k) v.push_back(p.rhs_at(c.scenario_index[k], z));
    return v;
}

// Completeness check; also records the recourse value and duals at every
// support scenario for lower-bound auditing and big-M seeding.
struct VertexProbe {
    Vec value;
    std::vector<Vec> pi;
};

inline VertexProbe require_complete_recourse(const TwoStageProblem& p, const Conditioned& c,
                                             const std::vector<Vec>& v, const Settings& st) {
    VertexProbe probe;
    probe.value.assign(c.support_size(), 0.0);
    for (int k = 0; k < c.support_size(); ++k) {
        auto sol = solve_lp(recourse_lp(p.W, p.q, v[k]), st);
        if (sol.status == LpStatus::infeasible)
            throw Error("incomplete_recourse",
                        "recourse infeasible at scenario " + std::to_string(c.scenario_index[k]) +
                            " (offending theta is the unit weight on it)");
        if (sol.status == LpStatus::unbounded)
            throw Error("dual_empty", "recourse unbounded below at scenario " +
                                          std::to_string(c.scenario_index[k]));
        probe.value[k] = sol.objective;
        probe.pi.push_back(sol.dual_eq);
    }
    return probe;
}


// Norm distance of a support covariate row from the context.
inline double support_distance(const Conditioned& c, int k, BallNorm norm) {
    double inf = 0.0, one_n = 0.0;
    for (int j = 0; j < c.d_cont; ++j) {
        const double dj = std::abs(c.xs(k, j) - c.x[j]);
        inf = std::max(inf, dj);
        one_n += dj;
    }
    return norm == BallNorm::inf ? inf : one_n;
}

// Scenario-row coefficient of pi in constraint k: h_k under the h-only
// split (z moves to the outer objective), h_k - T_k z otherwise.
struct RTerms {
    std::vector<Vec> r_coeff;
    Vec obj_pi;  // extra outer-objective coefficients on pi
};

inline RTerms r_terms(const TwoStageProblem& p, const Conditioned& c, const Vec& z,
                      const std::vector<Vec>& v) {
    RTerms rt;
    if (p.uncertainty_kind == UncertaintyKind::rhs_h_only) {
        for (int k = 0; k < c.support_size(); ++k)
            rt.r_coeff.push_back(p.scenarios.h[c.scenario_index[k]]);
        rt.obj_pi = matvec(*p.fixed_T, z);
        for (double& x : rt.obj_pi) x = -x;
    } else {
        rt.r_coeff = v;
        rt.obj_pi.assign(p.dim_h(), 0.0);
    }
    return rt;
}

struct CutLp {
    double value = 0.0;  // lower-level objective (split term excluded)
    double rho = 0.0;
    Vec gamma;  // continuous block
};

// Lower-level multiplier recovery at a fixed dual point:
//   min rho + x^T g + Gamma ||g||_*  s.t.  rho + x_k^T g >= r_k.
inline CutLp lower_level_at_pi(const Conditioned& c, double gamma_budget, BallNorm norm,
                               const Vec& r, const Settings& st) {
    const int s = c.support_size();
    const int d = c.d_cont;
    const bool one = norm == BallNorm::one;
    const int nv = 1 + 2 * d + (one ? 1 : 0);
    LinearProgram lp(nv);
    lp.c[0] = 1.0;
    for (int j = 0; j < d; ++j) {
        lp.lb[1 + j] = 0.0;
        lp.lb[1 + d + j] = 0.0;
        lp.c[1 + j] = c.x[j] + (one ? 0.0 : gamma_budget);
        lp.c[1 + d + j] = -c.x[j] + (one ? 0.0 : gamma_budget);
    }
    if (one) {
        lp.lb[nv - 1] = 0.0;
        lp.c[nv - 1] = gamma_budget;
        for (int j = 0; j < d; ++j) {
            Vec up(nv, 0.0), dn(nv, 0.0);
            up[1 + j] = 1.0;
            up[1 + d + j] = -1.0;
            up[nv - 1] = -1.0;
            dn[1 + j] = -1.0;
            dn[1 + d + j] = 1.0;
            dn[nv - 1] = -1.0;
            lp.add_in_row(up, 0.0);
            lp.add_in_row(dn, 0.0);
        }
    }
    for (int k = 0; k < s; ++k) {
        Vec row(nv, 0.0);
        row[0] = -1.0;
        for (int j = 0; j < d; ++j) {
            row[1 + j] = -c.xs(k, j);
            row[1 + d + j] = c.xs(k, j);
        }
        lp.add_in_row(row, -r[k]);
    }
    auto sol = solve_lp(lp, st);
    if (sol.status != LpStatus::optimal)
        throw Error("cut_lp", "lower-level multiplier LP did not solve");
    CutLp out;
    out.value = sol.objective;
    out.rho = sol.x[0];
    out.gamma.assign(d, 0.0);
    for (int j = 0; j < d; ++j) out.gamma[j] = sol.x[1 + j] - sol.x[1 + d + j];
    return out;
}

inline Vec full_theta(const Conditioned& c, int s_total, const Vec& theta_support) {
    Vec t(s_total, 0.0);
    for (int k = 0; k < c.support_size(); ++k) t[c.scenario_index[k]] = theta_support[k];
    return t;
}

inline Vec full_gamma(const ScenarioSet& sc, const Vec& gamma_cont) {
    Vec g(sc.dim_x(), 0.0);
    int jj = 0;
    for (int j = 0; j < sc.dim_x(); ++j)
        if (!sc.categorical(j)) g[j] = gamma_cont[jj++];
    return g;
}

inline void fill_worst_case(const TwoStageProblem& p, OracleResult& r) {
    const int dh = p.dim_h();
    r.h_star.assign(dh, 0.0);
    r.T_star = Mat(dh, p.dim_z());
    for (int s = 0; s < p.scenarios.size(); ++s) {
        const double t = r.theta[s];
        if (std::abs(t) < 1e-15) continue;
        for (int i = 0; i < dh; ++i) r.h_star[i] += t * p.scenarios.h[s][i];
        const Mat& ts = p.technology(s);
        for (size_t e = 0; e < ts.data.size(); ++e) r.T_star.data[e] += t * ts.data[e];
    }
}

// Replaces the reported multipliers with the clean recovery-LP solution at
// the returned dual point (the MILP ones can sit on degenerate rays).
inline void fill_multipliers(const TwoStageProblem& p, const Conditioned& c, const Vec& z,
                             BallNorm norm, double gamma, OracleResult& r, const Settings& st) {
    const RTerms rt = r_terms(p, c, z, support_rhs(p, c, z));
    Vec rvals(c.support_size(), 0.0);
    for (int k = 0; k < c.support_size(); ++k) rvals[k] = dot(rt.r_coeff[k], r.pi);
    const CutLp cut = lower_level_at_pi(c, gamma, norm, rvals, st);
    r.rho = cut.rho;
    r.gamma_vec = full_gamma(p.scenarios, cut.gamma);
}

// Exact shortcut for a one-point conditioned set: the weights are forced,
// the worst case is the recourse at that point.
inline OracleResult singleton_oracle(const TwoStageProblem& p, const Conditioned& c, const Vec& z,
                                     BallNorm norm, double gamma, const VertexProbe& probe,
                                     const Settings& st) {
    OracleResult out;
    out.value = probe.value[0];
    out.pi = probe.pi[0];
    out.theta = full_theta(c, p.scenarios.size(), {1.0});
    fill_worst_case(p, out);
    fill_multipliers(p, c, z, norm, gamma, out, st);
    return out;
}

// Value of the dual point pi against the current data, split term included.
inline double value_at_pi(const TwoStageProblem& p, const Conditioned& c, const Vec& z,
                          BallNorm norm, double gamma, const Vec& pi, const Settings& st) {
    const RTerms rt = r_terms(p, c, z, support_rhs(p, c, z));
    Vec rvals(c.support_size(), 0.0);
    for (int k = 0; k < c.support_size(); ++k) rvals[k] = dot(rt.r_coeff[k], pi);
    return lower_level_at_pi(c, gamma, norm, rvals, st).value + dot(rt.obj_pi, pi);
}

}  // namespace detail

inline OracleInputs prepare_oracle(const TwoStageProblem& p, const ContextQuery& q,
                                   const Settings& st = Settings{}) {
    OracleInputs in;
    in.cond = condition_scenarios(p.scenarios, q.x);
    if (in.cond.support_size() == 0)
        throw Error("empty_set", "no scenario matches the categorical components");
    in.budget = resolve_budget(p.scenarios, q, st);
    detail::probe_pi_box(p, in, st);
    return in;
}

// ---------------------------------------------------------------------------
// P route

inline OracleResult oracle_p_bilevel_prepared(const TwoStageProblem& p, const Vec& z,
                                              const ContextQuery& q, const OracleInputs& in,
                                              const Settings& st = Settings{}) {
    const Conditioned& c = in.cond;
    const int sp = c.support_size();
    const int d = c.d_cont;
    const int du = p.dim_u();
    const int dh = p.dim_h();
    const double gamma = in.budget.gamma;
    const bool one = q.norm == BallNorm::one;

    const std::vector<Vec> v = detail::support_rhs(p, c, z);
    const detail::VertexProbe probe = detail::require_complete_recourse(p, c, v, st);
    if (sp == 1) return detail::singleton_oracle(p, c, z, q.norm, gamma, probe, st);
    double vertex_lb = -kInf;
    for (int k = 0; k < sp; ++k)
        if (detail::support_distance(c, k, q.norm) <= gamma + 1e-9)
            vertex_lb = std::max(vertex_lb, probe.value[k]);

    Vec cap_lo = in.pi_lo, cap_hi = in.pi_hi;
    double cap = in.cap_scale;
    double vmax = 0.0;
    for (const Vec& vk : v) vmax = std::max(vmax, norm_one(vk));
    double Mu = 10.0 * (1.0 + vmax) * (1.0 + du);
    double parked_value = kInf;  // last value seen while parked at a cap

    for (int attempt = 0; attempt < 6; ++attempt) {
        for (int i = 0; i < dh; ++i) {
            if (!std::isfinite(in.pi_lo[i])) cap_lo[i] = -cap;
            if (!std::isfinite(in.pi_hi[i])) cap_hi[i] = cap;
        }
        // dual-slack row constant, structural given the pi box
        double dmax = 0.0;
        for (int j = 0; j < du; ++j) {
            double acc = std::abs(p.q[j]);
            for (int i = 0; i < dh; ++i)
                acc += std::abs(p.W(i, j)) * std::max(std::abs(cap_lo[i]), std::abs(cap_hi[i]));
            dmax = std::max(dmax, acc);
        }
        const double Mdual = dmax + 1.0;

        const int n_eps = one ? 2 * d : d;
        const int i_theta = 0;
        const int i_eps = sp;
        const int i_u = i_eps + n_eps;
        const int i_pi = i_u + du;
        const int i_bin = i_pi + dh;
        const int nv = i_bin + du;

        MixedBinaryProgram mb;
        mb.lp = LinearProgram(nv);
        for (int k = 0; k < sp; ++k) {
            mb.lp.lb[i_theta + k] = 0.0;
            mb.lp.ub[i_theta + k] = 1.0;
        }
        for (int j = 0; j < n_eps; ++j) {
            mb.lp.lb[i_eps + j] = one ? 0.0 : -gamma;
            mb.lp.ub[i_eps + j] = gamma;
        }
        for (int j = 0; j < du; ++j) {
            mb.lp.lb[i_u + j] = 0.0;
            mb.lp.ub[i_u + j] = Mu;
            mb.lp.c[i_u + j] = -p.q[j];  // maximize q^T u
        }
        for (int i = 0; i < dh; ++i) {
            mb.lp.lb[i_pi + i] = cap_lo[i];
            mb.lp.ub[i_pi + i] = cap_hi[i];
        }
        for (int j = 0; j < du; ++j) {
            mb.lp.lb[i_bin + j] = 0.0;
            mb.lp.ub[i_bin + j] = 1.0;
            mb.binaries.push_back(i_bin + j);
        }

        Vec row(nv, 0.0);
        auto reset = [&]() { std::fill(row.begin(), row.end(), 0.0); };
        reset();
        for (int k = 0; k < sp; ++k) row[i_theta + k] = 1.0;
        mb.lp.add_eq_row(row, 1.0);
        for (int j = 0; j < d; ++j) {
            reset();
            for (int k = 0; k < sp; ++k) row[i_theta + k] = c.xs(k, j);
            row[i_eps + j] = -1.0;
            if (one) row[i_eps + d + j] = 1.0;
            mb.lp.add_eq_row(row, c.x[j]);
        }
        if (one && d > 0) {
            reset();
            for (int j = 0; j < 2 * d; ++j) row[i_eps + j] = 1.0;
            mb.lp.add_in_row(row, gamma);
        }
        for (int i = 0; i < dh; ++i) {
            reset();
            for (int j = 0; j < du; ++j) row[i_u + j] = p.W(i, j);
            for (int k = 0; k < sp; ++k) row[i_theta + k] = -v[k][i];
            mb.lp.add_eq_row(row, 0.0);
        }
        for (int j = 0; j < du; ++j) {
            reset();
            for (int i = 0; i < dh; ++i) row[i_pi + i] = p.W(i, j);
            mb.lp.add_in_row(row, p.q[j]);
        }
        for (int j = 0; j < du; ++j) {
            reset();
            row[i_u + j] = 1.0;
            row[i_bin + j] = -Mu;
            mb.lp.add_in_row(row, 0.0);
            reset();
            for (int i = 0; i < dh; ++i) row[i_pi + i] = -p.W(i, j);
            row[i_bin + j] = Mdual;
            mb.lp.add_in_row(row, Mdual - p.q[j]);
        }

        MilpOptions mo;
        mo.gap_tol = 1e-9;
        auto res = solve_milp(mb, mo, st);
        bool escalate = false;
        if (res.status == MilpStatus::infeasible) {
            escalate = true;
        } else if (res.status == MilpStatus::gap_not_closed) {
            throw Error("oracle_gap", "oracle branch and bound hit the node limit");
        } else {
            // cap-parked recourse components are benign: any pumping
            // direction among complementarity-active variables is
            // objective neutral, and a genuinely clipped point fails the
            // value checks below
            const double value = -res.objective;
            const double tol = 1e-6 * (1.0 + std::abs(value));
            // the value must reproduce the inner optimum at the returned
            // weights and dominate every in-ball scenario vertex
            Vec rhs(dh, 0.0);
            for (int k = 0; k < sp; ++k)
                for (int i = 0; i < dh; ++i) rhs[i] += res.primal[i_theta + k] * v[k][i];
            auto check = solve_lp(recourse_lp(p.W, p.q, rhs), st);
            if (check.status != LpStatus::optimal || std::abs(check.objective - value) > tol)
                escalate = true;
            if (vertex_lb > value + tol) escalate = true;
            // a point parked at an artificial cap is accepted only once a
            // cap doubling stops moving the value (flat dual direction)
            if (!escalate) {
                bool parked = false;
                for (int i = 0; i < dh; ++i) {
                    if (!std::isfinite(in.pi_lo[i]) &&
                        res.primal[i_pi + i] < cap_lo[i] + 0.01 * cap)
                        parked = true;
                    if (!std::isfinite(in.pi_hi[i]) &&
                        res.primal[i_pi + i] > cap_hi[i] - 0.01 * cap)
                        parked = true;
                }
                if (parked && !(std::abs(value - parked_value) <= tol)) {
                    parked_value = value;
                    escalate = true;
                }
            }
        }
        if (escalate) {
            if (attempt == 5)
                throw Error("bigm", "big-M escalation exhausted in the primal oracle");
            Mu *= 4.0;
            cap *= 4.0;
            continue;
        }

        // mandatory complementarity verification
        for (int j = 0; j < du; ++j) {
            double slack = p.q[j];
            for (int i = 0; i < dh; ++i) slack -= p.W(i, j) * res.primal[i_pi + i];
            if (std::abs(res.primal[i_u + j] * slack) > 1e-6 * (1.0 + std::abs(res.objective)))
                throw Error("bigm", "complementarity residual above tolerance");
        }

        OracleResult out;
        out.value = -res.objective;
        out.nodes = res.nodes;
        Vec theta_s(sp);
        for (int k = 0; k < sp; ++k) theta_s[k] = res.primal[i_theta + k];
        out.theta = detail::full_theta(c, p.scenarios.size(), theta_s);
        out.pi.assign(dh, 0.0);
        for (int i = 0; i < dh; ++i) out.pi[i] = res.primal[i_pi + i];
        detail::fill_worst_case(p, out);
        detail::fill_multipliers(p, c, z, q.norm, gamma, out, st);
        return out;
    }
    throw Error("bigm", "unreachable");
}

// ---------------------------------------------------------------------------
// D route

inline OracleResult oracle_d_bilevel_prepared(const TwoStageProblem& p, const Vec& z,
                                              const ContextQuery& q, const OracleInputs& in,
                                              const Settings& st = Settings{}) {
    const Conditioned& c = in.cond;
    const int sp = c.support_size();
    const int d = c.d_cont;
    const int du = p.dim_u();
    const int dh = p.dim_h();
    const double gamma = in.budget.gamma;
    const bool one = q.norm == BallNorm::one;

    const std::vector<Vec> v = detail::support_rhs(p, c, z);
    const detail::VertexProbe probe = detail::require_complete_recourse(p, c, v, st);
    if (sp == 1) return detail::singleton_oracle(p, c, z, q.norm, gamma, probe, st);
    const detail::RTerms rt = detail::r_terms(p, c, z, v);
    double vertex_lb = -kInf;
    for (int k = 0; k < sp; ++k)
        if (detail::support_distance(c, k, q.norm) <= gamma + 1e-9)
            vertex_lb = std::max(vertex_lb, probe.value[k]);

    Vec cap_lo = in.pi_lo, cap_hi = in.pi_hi;
    double cap = in.cap_scale;
    double xnorm = 0.0;
    for (int k = 0; k < sp; ++k) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += std::abs(c.xs(k, j));
        xnorm = std::max(xnorm, acc);
    }
    // multiplier magnitudes live on the scale of the dual values the
    // vertices already exhibit, not of the full coordinate box
    double dual_scale = 0.0;
    for (int k = 0; k < sp; ++k) {
        dual_scale = std::max(dual_scale, std::abs(probe.value[k]));
        for (const Vec& rc : rt.r_coeff)
            dual_scale = std::max(dual_scale, std::abs(dot(rc, probe.pi[k])));
    }
    double Mfree = 10.0 * (1.0 + dual_scale);
    double parked_value = kInf;  // last value seen while parked at a cap

    for (int attempt = 0; attempt < 6; ++attempt) {
        for (int i = 0; i < dh; ++i) {
            if (!std::isfinite(in.pi_lo[i])) cap_lo[i] = -cap;
            if (!std::isfinite(in.pi_hi[i])) cap_hi[i] = cap;
        }
        // the slack cap shares the multiplier scale; an undershoot only
        // hides value, which the post checks catch and escalate
        const double Mr = Mfree * (1.0 + xnorm);
        const double Mlam = 2.0 * Mfree + 1.0;

        const int i_pi = 0;
        const int i_rho = dh;
        const int i_gp = i_rho + 1;
        const int i_gm = i_gp + d;
        const int i_lam = i_gm + d;
        const int i_theta = i_lam + (one ? 1 : 0);
        const int i_wp = i_theta + sp;
        const int i_wm = i_wp + (one ? d : 0);
        const int i_B = i_wm + (one ? d : 0);
        const int i_Cp = i_B + sp;
        const int i_Cm = i_Cp + d;
        const int i_D = i_Cm + d;
        const int nv = i_D + (one ? 1 : 0);

        MixedBinaryProgram mb;
        mb.lp = LinearProgram(nv);
        for (int i = 0; i < dh; ++i) {
            mb.lp.lb[i_pi + i] = cap_lo[i];
            mb.lp.ub[i_pi + i] = cap_hi[i];
        }
        mb.lp.lb[i_rho] = -Mfree;
        mb.lp.ub[i_rho] = Mfree;
        for (int j = 0; j < d; ++j) {
            mb.lp.lb[i_gp + j] = 0.0;
            mb.lp.ub[i_gp + j] = Mfree;
            mb.lp.lb[i_gm + j] = 0.0;
            mb.lp.ub[i_gm + j] = Mfree;
        }
        if (one) {
            mb.lp.lb[i_lam] = 0.0;
            mb.lp.ub[i_lam] = Mfree;
        }
        for (int k = 0; k < sp; ++k) {
            mb.lp.lb[i_theta + k] = 0.0;
            mb.lp.ub[i_theta + k] = 1.0;
        }
        if (one)
            for (int j = 0; j < d; ++j) {
                mb.lp.lb[i_wp + j] = 0.0;
                mb.lp.ub[i_wp + j] = gamma;
                mb.lp.lb[i_wm + j] = 0.0;
                mb.lp.ub[i_wm + j] = gamma;
            }
        auto add_binary = [&](int idx) {
            mb.lp.lb[idx] = 0.0;
            mb.lp.ub[idx] = 1.0;
            mb.binaries.push_back(idx);
        };
        for (int k = 0; k < sp; ++k) add_binary(i_B + k);
        for (int j = 0; j < d; ++j) add_binary(i_Cp + j);
        for (int j = 0; j < d; ++j) add_binary(i_Cm + j);
        if (one) add_binary(i_D);

        // maximize rho + x^T gamma + budget term (+ split term on pi)
        mb.lp.c[i_rho] = -1.0;
        for (int j = 0; j < d; ++j) {
            mb.lp.c[i_gp + j] = -(c.x[j] + (one ? 0.0 : gamma));
            mb.lp.c[i_gm + j] = -(-c.x[j] + (one ? 0.0 : gamma));
        }
        if (one) mb.lp.c[i_lam] = -gamma;
        for (int i = 0; i < dh; ++i) mb.lp.c[i_pi + i] = -rt.obj_pi[i];

        Vec row(nv, 0.0);
        auto reset = [&]() { std::fill(row.begin(), row.end(), 0.0); };

        for (int j = 0; j < du; ++j) {
            reset();
            for (int i = 0; i < dh; ++i) row[i_pi + i] = p.W(i, j);
            mb.lp.add_in_row(row, p.q[j]);
        }
        for (int k = 0; k < sp; ++k) {
            // r_k(pi) - rho - x_k^T gamma <= 0
            reset();
            for (int i = 0; i < dh; ++i) row[i_pi + i] = rt.r_coeff[k][i];
            row[i_rho] = -1.0;
            for (int j = 0; j < d; ++j) {
                row[i_gp + j] = -c.xs(k, j);
                row[i_gm + j] = c.xs(k, j);
            }
            mb.lp.add_in_row(row, 0.0);
            // slack_k <= Mr B_k
            for (double& x : row) x = -x;
            row[i_B + k] = -Mr;
            mb.lp.add_in_row(row, 0.0);
            // theta_k + B_k <= 1
            reset();
            row[i_theta + k] = 1.0;
            row[i_B + k] = 1.0;
            mb.lp.add_in_row(row, 1.0);
        }
        reset();
        for (int k = 0; k < sp; ++k) row[i_theta + k] = 1.0;
        mb.lp.add_eq_row(row, 1.0);

        if (!one) {
            for (int j = 0; j < d; ++j) {
                // budget rows (dual feasibility of gamma+-)
                reset();
                for (int k = 0; k < sp; ++k) row[i_theta + k] = c.xs(k, j);
                mb.lp.add_in_row(row, c.x[j] + gamma);
                reset();
                for (int k = 0; k < sp; ++k) row[i_theta + k] = -c.xs(k, j);
                mb.lp.add_in_row(row, -c.x[j] + gamma);
                // gamma+_j <= Mfree C+_j ; budget slack g+_j <= 2 gamma (1 - C+_j)
                reset();
                row[i_gp + j] = 1.0;
                row[i_Cp + j] = -Mfree;
                mb.lp.add_in_row(row, 0.0);
                reset();
                for (int k = 0; k < sp; ++k) row[i_theta + k] = -c.xs(k, j);
                row[i_Cp + j] = 2.0 * gamma;
                mb.lp.add_in_row(row, gamma - c.x[j]);
                // gamma-_j <= Mfree C-_j ; budget slack g-_j <= 2 gamma (1 - C-_j)
                reset();
                row[i_gm + j] = 1.0;
                row[i_Cm + j] = -Mfree;
                mb.lp.add_in_row(row, 0.0);
                reset();
                for (int k = 0; k < sp; ++k) row[i_theta + k] = c.xs(k, j);
                row[i_Cm + j] = 2.0 * gamma;
                mb.lp.add_in_row(row, gamma + c.x[j]);
            }
        } else {
            // deviation decomposition and total budget
            for (int j = 0; j < d; ++j) {
                reset();
                for (int k = 0; k < sp; ++k) row[i_theta + k] = c.xs(k, j);
                row[i_wp + j] = -1.0;
                row[i_wm + j] = 1.0;
                mb.lp.add_eq_row(row, c.x[j]);
            }
            reset();
            for (int j = 0; j < d; ++j) {
                row[i_wp + j] = 1.0;
                row[i_wm + j] = 1.0;
            }
            mb.lp.add_in_row(row, gamma);
            // lambda complementarity: lambda <= Mfree D ; gamma D <= sum w
            reset();
            row[i_lam] = 1.0;
            row[i_D] = -Mfree;
            mb.lp.add_in_row(row, 0.0);
            reset();
            for (int j = 0; j < d; ++j) {
                row[i_wp + j] = -1.0;
                row[i_wm + j] = -1.0;
            }
            row[i_D] = gamma;
            mb.lp.add_in_row(row, 0.0);
            for (int j = 0; j < d; ++j) {
                // epigraph rows +-gamma_j <= lambda
                reset();
                row[i_gp + j] = 1.0;
                row[i_gm + j] = -1.0;
                row[i_lam] = -1.0;
                mb.lp.add_in_row(row, 0.0);
                reset();
                row[i_gp + j] = -1.0;
                row[i_gm + j] = 1.0;
                row[i_lam] = -1.0;
                mb.lp.add_in_row(row, 0.0);
                // w+_j <= gamma C+_j ; (lambda - gamma_j) <= Mlam (1 - C+_j)
                reset();
                row[i_wp + j] = 1.0;
                row[i_Cp + j] = -gamma;
                mb.lp.add_in_row(row, 0.0);
                reset();
                row[i_lam] = 1.0;
                row[i_gp + j] = -1.0;
                row[i_gm + j] = 1.0;
                row[i_Cp + j] = Mlam;
                mb.lp.add_in_row(row, Mlam);
                // w-_j <= gamma C-_j ; (lambda + gamma_j) <= Mlam (1 - C-_j)
                reset();
                row[i_wm + j] = 1.0;
                row[i_Cm + j] = -gamma;
                mb.lp.add_in_row(row, 0.0);
                reset();
                row[i_lam] = 1.0;
                row[i_gp + j] = 1.0;
                row[i_gm + j] = -1.0;
                row[i_Cm + j] = Mlam;
                mb.lp.add_in_row(row, Mlam);
            }
        }

        MilpOptions mo;
        mo.gap_tol = 1e-9;
        auto res = solve_milp(mb, mo, st);
        bool escalate = false;
        std::string reason;
        if (res.status == MilpStatus::infeasible) {
            escalate = true;
            reason = "kkt infeasible under caps";
        } else if (res.status == MilpStatus::gap_not_closed) {
            throw Error("oracle_gap", "oracle branch and bound hit the node limit");
        } else {
            // the value must match the exact lower level at the returned
            // dual point and dominate every in-ball scenario vertex
            const double value = -res.objective;
            const double tol = 1e-6 * (1.0 + std::abs(value));
            Vec pi(res.primal.begin() + i_pi, res.primal.begin() + i_pi + dh);
            const double v_at = detail::value_at_pi(p, c, z, q.norm, gamma, pi, st);
            if (std::abs(v_at - value) > tol) {
                escalate = true;
                reason = "value check failed: milp " + std::to_string(value) + " vs exact " +
                         std::to_string(v_at);
            }
            if (vertex_lb > value + tol) {
                escalate = true;
                reason = "vertex lower bound " + std::to_string(vertex_lb) + " above value " +
                         std::to_string(value);
            }
            // a point parked at an artificial cap is accepted only once a
            // cap doubling stops moving the value (flat dual direction)
            if (!escalate) {
                bool parked = false;
                for (int i = 0; i < dh; ++i) {
                    if (!std::isfinite(in.pi_lo[i]) &&
                        res.primal[i_pi + i] < cap_lo[i] + 0.01 * cap)
                        parked = true;
                    if (!std::isfinite(in.pi_hi[i]) &&
                        res.primal[i_pi + i] > cap_hi[i] - 0.01 * cap)
                        parked = true;
                }
                if (parked && !(std::abs(value - parked_value) <= tol)) {
                    parked_value = value;
                    escalate = true;
                    reason = "pi cap probe";
                }
            }
        }
        if (escalate) {
            if (attempt == 5)
                throw Error("bigm",
                            "big-M escalation exhausted in the dual oracle: " + reason);
            Mfree *= 4.0;
            cap *= 4.0;
            continue;
        }

        const double obj_scale = 1.0 + std::abs(res.objective);
        for (int k = 0; k < sp; ++k) {
            double slack = res.primal[i_rho] -
                           dot(rt.r_coeff[k],
                               Vec(res.primal.begin() + i_pi, res.primal.begin() + i_pi + dh));
            for (int j = 0; j < d; ++j)
                slack += c.xs(k, j) * (res.primal[i_gp + j] - res.primal[i_gm + j]);
            if (std::abs(res.primal[i_theta + k] * slack) > 1e-6 * obj_scale)
                throw Error("bigm", "complementarity residual above tolerance");
        }

        OracleResult out;
        out.value = -res.objective;
        out.nodes = res.nodes;
        out.pi.assign(dh, 0.0);
        for (int i = 0; i < dh; ++i) out.pi[i] = res.primal[i_pi + i];
        Vec theta_s(sp);
        for (int k = 0; k < sp; ++k) theta_s[k] = res.primal[i_theta + k];
        out.theta = detail::full_theta(c, p.scenarios.size(), theta_s);
        detail::fill_worst_case(p, out);
        detail::fill_multipliers(p, c, z, q.norm, gamma, out, st);
        return out;
    }
    throw Error("bigm", "unreachable");
}

// ---------------------------------------------------------------------------
// Brute-force route

inline OracleResult oracle_bruteforce_prepared(const TwoStageProblem& p, const Vec& z,
                                               const ContextQuery& q, const OracleInputs& in,
                                               const Settings& st = Settings{}) {
    if (p.scenarios.size() > 8 || p.scenarios.dim_x() > 3)
        throw Error("bruteforce_guard", "brute-force oracle limited to S <= 8, d_x <= 3");
    const Conditioned& c = in.cond;
    const int sp = c.support_size();
    const int d = c.d_cont;
    const double gamma = in.budget.gamma;
    const bool one = q.norm == BallNorm::one;
    const std::vector<Vec> v = detail::support_rhs(p, c, z);

    // standard-form weight system over (theta, auxiliaries), all >= 0
    const int nv = one ? sp + 2 * d + 1 : sp + 2 * d;
    const int m = one ? 1 + d + 1 : 1 + 2 * d;
    Mat A(m, nv);
    Vec b(m, 0.0);
    for (int k = 0; k < sp; ++k) A(0, k) = 1.0;
    b[0] = 1.0;
    if (!one) {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < sp; ++k) {
                A(1 + 2 * j, k) = c.xs(k, j);
                A(2 + 2 * j, k) = -c.xs(k, j);
            }
            A(1 + 2 * j, sp + 2 * j) = 1.0;
            A(2 + 2 * j, sp + 2 * j + 1) = 1.0;
            b[1 + 2 * j] = c.x[j] + gamma;
            b[2 + 2 * j] = -c.x[j] + gamma;
        }
    } else {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < sp; ++k) A(1 + j, k) = c.xs(k, j);
            A(1 + j, sp + j) = -1.0;
            A(1 + j, sp + d + j) = 1.0;
            b[1 + j] = c.x[j];
        }
        for (int j = 0; j < 2 * d; ++j) A(m - 1, sp + j) = 1.0;
        A(m - 1, nv - 1) = 1.0;
        b[m - 1] = gamma;
    }

    std::vector<Vec> vertices;
    std::vector<int> pick(m);
    for (int i = 0; i < m; ++i) pick[i] = i;
    if (m > nv) throw Error("bruteforce_guard", "degenerate weight system");
    while (true) {
        Mat B(m, m);
        for (int k = 0; k < m; ++k)
            for (int r = 0; r < m; ++r) B(r, k) = A(r, pick[k]);
        Vec xb;
        if (lu_solve(B, b, xb)) {
            bool feas = true;
            for (double x : xb)
                if (x < -1e-9) {
                    feas = false;
                    break;
                }
            if (feas) {
                Vec theta(sp, 0.0);
                for (int k = 0; k < m; ++k)
                    if (pick[k] < sp) theta[pick[k]] = std::max(0.0, xb[k]);
                bool dup = false;
                for (const Vec& t : vertices) {
                    double diff = 0.0;
                    for (int k = 0; k < sp; ++k) diff = std::max(diff, std::abs(t[k] - theta[k]));
                    if (diff <= 1e-9) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) vertices.push_back(theta);
            }
        }
        int i = m - 1;
        while (i >= 0 && pick[i] == nv - m + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int k = i + 1; k < m; ++k) pick[k] = pick[k - 1] + 1;
    }
    if (vertices.empty()) throw Error("empty_set", "weight polytope has no vertices");

    OracleResult out;
    out.value = -kInf;
    Vec best_theta;
    for (const Vec& theta : vertices) {
        Vec rhs(p.dim_h(), 0.0);
        for (int k = 0; k < sp; ++k)
            for (int i = 0; i < p.dim_h(); ++i) rhs[i] += theta[k] * v[k][i];
        auto sol = solve_lp(recourse_lp(p.W, p.q, rhs), st);
        if (sol.status == LpStatus::infeasible)
            throw Error("incomplete_recourse", "recourse infeasible at an enumerated vertex");
        if (sol.status == LpStatus::unbounded)
            throw Error("dual_empty", "recourse unbounded below at an enumerated vertex");
        if (sol.objective > out.value) {
            out.value = sol.objective;
            out.pi = sol.dual_eq;
            best_theta = theta;
        }
    }
    out.theta = detail::full_theta(c, p.scenarios.size(), best_theta);
    detail::fill_worst_case(p, out);
    detail::fill_multipliers(p, c, z, q.norm, gamma, out, st);
    return out;
}

inline OracleResult oracle_p_bilevel(const TwoStageProblem& p, const Vec& z, const ContextQuery& q,
                                     const Settings& st = Settings{}) {
    return oracle_p_bilevel_prepared(p, z, q, prepare_oracle(p, q, st), st);
}
inline OracleResult oracle_d_bilevel(const TwoStageProblem& p, const Vec& z, const ContextQuery& q,
                                     const Settings& st = Settings{}) {
    return oracle_d_bilevel_prepared(p, z, q, prepare_oracle(p, q, st), st);
}
inline OracleResult oracle_bruteforce(const TwoStageProblem& p, const Vec& z, const ContextQuery& q,
                                      const Settings& st = Settings{}) {
    return oracle_bruteforce_prepared(p, z, q, prepare_oracle(p, q, st), st);
}

}  // namespace ddcro

// Master-oracle solves for the two-stage contextual robust problem.
//
// Two interchangeable masters: the classical one grows recourse copies
// (variables u_k and rows W u_k = h_k - T_k z per oracle realization), the
// contextual one grows dual cuts (variables rho_k, gamma_k and rows built
// from a stored dual vertex pi_k, with the context appearing only in the
// epigraph row). Dual vertices stay valid for any context as long as the
// dual polyhedron {pi : W^T pi <= q} is unchanged, which is what the pool
// fingerprint pins down; the cut rows themselves are rebuilt from the
// current data on every use.
#pragma once

#include <ctime>
#include <fstream>

#include "ddcro/json_io.hpp"
#include "ddcro/oracle.hpp"

namespace ddcro {

struct CutPoolEntry {
    Vec pi;
    Vec source_context;
    int source_iteration = 0;
    int64_t created_at = 0;  // not serialized
};

struct CutPool {
    std::string problem_fingerprint;
    std::vector<CutPoolEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
};

// Fingerprint of what Prop-5-style cut reuse actually requires: the dual
// polyhedron (W, q) and the dimensions the rebuilt rows must match.
inline std::string problem_fingerprint(const TwoStageProblem& p) {
    Fnv1a h;
    h.add(p.dim_h());
    h.add(p.dim_u());
    h.add(p.W);
    h.add(p.q);
    h.add(p.scenarios.dim_x());
    h.add(p.dim_z());
    return h.hex();
}

inline bool pi_equal(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-9) return false;
    return true;
}

inline void pool_validate_entry(const TwoStageProblem& p, const Vec& pi, int index) {
    if (static_cast<int>(pi.size()) != p.dim_h())
        throw Error("pool_dim", "pool entry " + std::to_string(index) + " has wrong pi length");
    Vec wtpi = mat_tvec(p.W, pi);
    for (int j = 0; j < p.dim_u(); ++j)
        if (wtpi[j] > p.q[j] + 1e-7)
            throw Error("pool_invalid", "pool entry " + std::to_string(index) +
                                            " violates the dual cone at row " + std::to_string(j));
}

// Validated union, deduplicated by pi.
inline CutPool merge_pools(const CutPool& a, const CutPool& b) {
    if (a.problem_fingerprint != b.problem_fingerprint)
        throw Error("fingerprint_mismatch", "cannot merge pools from different problems");
    CutPool out = a;
    for (const auto& e : b.entries) {
        bool dup = false;
        for (const auto& have : out.entries)
            if (pi_equal(have.pi, e.pi)) {
                dup = true;
                break;
            }
        if (!dup) out.entries.push_back(e);
    }
    return out;
}

inline void pool_save(const CutPool& pool, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["fingerprint"] = pool.problem_fingerprint;
    json entries = json::array();
    for (const auto& e : pool.entries) {
        json je;
        je["pi"] = jsd::vec_to_json(e.pi);
        je["source_context"] = jsd::vec_to_json(e.source_context);
        je["source_iteration"] = e.source_iteration;
        entries.push_back(je);
    }
    j["entries"] = entries;
    std::ofstream f(path);
    if (!f) throw Error("io", "cannot write " + path);
    f << j.dump(2) << "\n";
}

inline CutPool pool_load(const std::string& path, const TwoStageProblem& p) {
    json j = jsd::load_file(path);
    if (!j.is_object() || !j.contains("format_version") || j["format_version"] != 1)
        throw Error("pool_corrupt", path + ": not a version-1 cut pool");
    CutPool pool;
    pool.problem_fingerprint = j.at("fingerprint").get<std::string>();
    const std::string expect = problem_fingerprint(p);
    if (pool.problem_fingerprint != expect)
        throw Error("fingerprint_mismatch", "pool fingerprint " + pool.problem_fingerprint +
                                                " does not match problem " + expect);
    int idx = 0;
    for (const auto& je : j.at("entries")) {
        CutPoolEntry e;
        e.pi = jsd::vec(je.at("pi"), "entries.pi");
        e.source_context = jsd::vec(je.at("source_context"), "entries.source_context");
        e.source_iteration = je.at("source_iteration").get<int>();
        e.created_at = std::time(nullptr);
        pool_validate_entry(p, e.pi, idx);
        pool.entries.push_back(std::move(e));
        ++idx;
    }
    return pool;
}

enum class MasterKind { classical, contextual };

inline const char* to_string(MasterKind k) {
    return k == MasterKind::classical ? "classical" : "contextual";
}

struct CcgOptions {
    double gap_tol = 1e-6;
    int max_iterations = 200;
    MasterKind master_kind = MasterKind::contextual;
    std::optional<CutPool> warm_pool;
};

struct CcgOutput {
    Solution solution;
    CutPool pool;
    int oracle_calls = 0;
};

namespace detail {

// Contextual master over the conditioned support: one epigraph row and one
// block of scenario rows per stored dual vertex. Row data is rebuilt from
// the current problem and context on every call.
struct ContextualMaster {
    const TwoStageProblem& p;
    const Conditioned& c;
    double gamma;
    bool one_norm;
    std::vector<Vec> pis;

    bool with_alpha() const { return !pis.empty(); }
    int dz() const { return p.dim_z(); }
    int cut_block() const { return 1 + 2 * c.d_cont + (one_norm ? 1 : 0); }

    LinearProgram build() const {
        const int d = c.d_cont;
        const int k_cuts = static_cast<int>(pis.size());
        const int n = dz() + (with_alpha() ? 1 : 0) + k_cuts * cut_block();
        LinearProgram lp(n);
        for (int j = 0; j < dz(); ++j) {
            lp.c[j] = p.c[j];
            lp.lb[j] = p.Z.lb[j];
            lp.ub[j] = p.Z.ub[j];
        }
        const int i_alpha = dz();
        if (with_alpha()) lp.c[i_alpha] = 1.0;
        auto cut_base = [&](int k) { return dz() + (with_alpha() ? 1 : 0) + k * cut_block(); };
        // first-stage rows
        for (int r = 0; r < p.Z.A_eq.rows; ++r) {
            Vec row(n, 0.0);
            for (int j = 0; j < dz(); ++j) row[j] = p.Z.A_eq(r, j);
            lp.add_eq_row(row, p.Z.b_eq[r]);
        }
        for (int r = 0; r < p.Z.A_in.rows; ++r) {
            Vec row(n, 0.0);
            for (int j = 0; j < dz(); ++j) row[j] = p.Z.A_in(r, j);
            lp.add_in_row(row, p.Z.b_in[r]);
        }
        for (int k = 0; k < k_cuts; ++k) {
            const int base = cut_base(k);
            const int i_rho = base;
            const int i_gp = base + 1;
            const int i_gm = base + 1 + d;
            const int i_lam = base + 1 + 2 * d;
            for (int j = 0; j < d; ++j) {
                lp.lb[i_gp + j] = 0.0;
                lp.lb[i_gm + j] = 0.0;
            }
            if (one_norm) lp.lb[i_lam] = 0.0;
            // epigraph: rho_k + x^T gamma_k + budget term <= alpha
            Vec row(n, 0.0);
            row[i_rho] = 1.0;
            for (int j = 0; j < d; ++j) {
                row[i_gp + j] = c.x[j] + (one_norm ? 0.0 : gamma);
                row[i_gm + j] = -c.x[j] + (one_norm ? 0.0 : gamma);
            }
            if (one_norm) row[i_lam] = gamma;
            row[i_alpha] = -1.0;
            lp.add_in_row(row, 0.0);
            if (one_norm) {
                for (int j = 0; j < d; ++j) {
                    Vec up(n, 0.0), dn(n, 0.0);
                    up[i_gp + j] = 1.0;
                    up[i_gm + j] = -1.0;
                    up[i_lam] = -1.0;
                    dn[i_gp + j] = -1.0;
                    dn[i_gm + j] = 1.0;
                    dn[i_lam] = -1.0;
                    lp.add_in_row(up, 0.0);
                    lp.add_in_row(dn, 0.0);
                }
            }
            // scenario rows: pi_k^T (h_s - T_s z) - rho_k - x_s^T gamma_k <= 0
            for (int s = 0; s < c.support_size(); ++s) {
                const int si = c.scenario_index[s];
                Vec r2(n, 0.0);
                const Mat& ts = p.technology(si);
                for (int j = 0; j < dz(); ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < p.dim_h(); ++i) acc += ts(i, j) * pis[k][i];
                    r2[j] = -acc;
                }
                r2[i_rho] = -1.0;
                for (int j = 0; j < d; ++j) {
                    r2[i_gp + j] = -c.xs(s, j);
                    r2[i_gm + j] = c.xs(s, j);
                }
                lp.add_in_row(r2, -dot(pis[k], p.scenarios.h[si]));
            }
        }
        return lp;
    }
};

// Classical master: recourse copies pinned to oracle realizations.
struct ClassicalMaster {
    const TwoStageProblem& p;
    std::vector<Vec> h_cuts;
    std::vector<Mat> t_cuts;

    bool with_alpha() const { return !h_cuts.empty(); }

    LinearProgram build() const {
        const int dz = p.dim_z();
        const int du = p.dim_u();
        const int k_cuts = static_cast<int>(h_cuts.size());
        const int n = dz + (with_alpha() ? 1 : 0) + k_cuts * du;
        LinearProgram lp(n);
        for (int j = 0; j < dz; ++j) {
            lp.c[j] = p.c[j];
            lp.lb[j] = p.Z.lb[j];
            lp.ub[j] = p.Z.ub[j];
        }
        const int i_alpha = dz;
        if (with_alpha()) lp.c[i_alpha] = 1.0;
        for (int r = 0; r < p.Z.A_eq.rows; ++r) {
            Vec row(n, 0.0);
            for (int j = 0; j < dz; ++j) row[j] = p.Z.A_eq(r, j);
            lp.add_eq_row(row, p.Z.b_eq[r]);
        }
        for (int r = 0; r < p.Z.A_in.rows; ++r) {
            Vec row(n, 0.0);
            for (int j = 0; j < dz; ++j) row[j] = p.Z.A_in(r, j);
            lp.add_in_row(row, p.Z.b_in[r]);
        }
        for (int k = 0; k < k_cuts; ++k) {
            const int i_u = dz + (with_alpha() ? 1 : 0) + k * du;
            for (int j = 0; j < du; ++j) lp.lb[i_u + j] = 0.0;
            Vec row(n, 0.0);
            for (int j = 0; j < du; ++j) row[i_u + j] = p.q[j];
            row[i_alpha] = -1.0;
            lp.add_in_row(row, 0.0);  // q^T u_k <= alpha
            for (int i = 0; i < p.dim_h(); ++i) {
                Vec r2(n, 0.0);
                for (int j = 0; j < du; ++j) r2[i_u + j] = p.W(i, j);
                for (int j = 0; j < dz; ++j) r2[j] = t_cuts[k](i, j);
                lp.add_eq_row(r2, h_cuts[k][i]);
            }
        }
        return lp;
    }
};

}  // namespace detail

inline CcgOutput solve_ccg(const TwoStageProblem& p, const ContextQuery& q,
                           const CcgOptions& opts = CcgOptions{},
                           const Settings& st = Settings{}) {
    if (p.uncertainty_kind == UncertaintyKind::objective_q)
        throw Error("bad_kind", "master-oracle solve requires right-hand-side uncertainty");
    const std::string fp = problem_fingerprint(p);
    OracleInputs in = prepare_oracle(p, q, st);

    detail::ContextualMaster ctx{p, in.cond, in.budget.gamma, q.norm == BallNorm::one, {}};
    detail::ClassicalMaster cls{p, {}, {}};
    const bool contextual = opts.master_kind == MasterKind::contextual;

    CcgOutput out;
    out.pool.problem_fingerprint = fp;
    if (opts.warm_pool) {
        if (!contextual)
            throw Error("warm_classical", "warm pools apply to the contextual master only");
        if (opts.warm_pool->problem_fingerprint != fp)
            throw Error("fingerprint_mismatch", "warm pool fingerprint does not match problem");
        for (const auto& e : opts.warm_pool->entries) {
            pool_validate_entry(p, e.pi, static_cast<int>(out.pool.entries.size()));
            bool dup = false;
            for (const Vec& have : ctx.pis)
                if (pi_equal(have, e.pi)) {
                    dup = true;
                    break;
                }
            if (!dup) {
                ctx.pis.push_back(e.pi);
                out.pool.entries.push_back(e);
            }
        }
    }

    Solution& sol = out.solution;
    double lb = -kInf, ub = kInf;
    Vec best_z;
    double best_alpha = 0.0;
    sol.status = SolveStatus::iteration_limit;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        LinearProgram master = contextual ? ctx.build() : cls.build();
        auto msol = solve_lp(master, st);
        if (msol.status == LpStatus::infeasible) {
            sol.status = SolveStatus::infeasible;
            sol.iterations = out.oracle_calls;
            return out;
        }
        if (msol.status == LpStatus::unbounded)
            throw Error("master_unbounded", "first-stage problem is unbounded");
        Vec z(msol.x.begin(), msol.x.begin() + p.dim_z());
        const bool has_alpha = contextual ? ctx.with_alpha() : cls.with_alpha();
        const double alpha = has_alpha ? msol.x[p.dim_z()] : -kInf;
        // without alpha the master value does not bound the full objective
        lb = has_alpha ? msol.objective : -kInf;

        OracleResult ora = contextual ? oracle_d_bilevel_prepared(p, z, q, in, st)
                                      : oracle_p_bilevel_prepared(p, z, q, in, st);
        ++out.oracle_calls;
        const double candidate = dot(p.c, z) + ora.value;
        if (candidate < ub) {
            ub = candidate;
            best_z = z;
            best_alpha = ora.value;
        }
        sol.lb_trace.push_back(lb);
        sol.ub_trace.push_back(ub);

        if (ub - lb <= opts.gap_tol * (1.0 + std::abs(ub))) {
            sol.status = SolveStatus::optimal;
            break;
        }
        // the fresh cut must cut off the incumbent, otherwise no progress
        // is possible and something upstream is numerically off
        const double violation = ora.value - alpha;
        if (!(violation > opts.gap_tol * (1.0 + std::abs(ub)) * 0.5))
            throw Error("ccg_stall", "oracle cut does not separate the master incumbent");

        if (contextual) {
            bool dup = false;
            for (const Vec& have : ctx.pis)
                if (pi_equal(have, ora.pi)) {
                    dup = true;
                    break;
                }
            if (dup) throw Error("ccg_stall", "duplicate dual vertex before convergence");
            ctx.pis.push_back(ora.pi);
            CutPoolEntry e;
            e.pi = ora.pi;
            e.source_context = q.x;
            e.source_iteration = iter;
            e.created_at = std::time(nullptr);
            out.pool.entries.push_back(std::move(e));
        } else {
            cls.h_cuts.push_back(ora.h_star);
            cls.t_cuts.push_back(ora.T_star);
            // classical realizations are still backed by a dual vertex;
            // keep it so the returned pool stays reusable
            bool dup = false;
            for (const auto& e : out.pool.entries)
                if (pi_equal(e.pi, ora.pi)) {
                    dup = true;
                    break;
                }
            if (!dup) {
                CutPoolEntry e;
                e.pi = ora.pi;
                e.source_context = q.x;
                e.source_iteration = iter;
                e.created_at = std::time(nullptr);
                out.pool.entries.push_back(std::move(e));
            }
        }
    }

    sol.z = best_z;
    sol.objective = ub;
    sol.alpha = best_alpha;
    sol.iterations = out.oracle_calls;
    return out;
}

inline CcgOutput warm_start_solve(const TwoStageProblem& p, const ContextQuery& q_new,
                                  const CutPool& pool, CcgOptions opts = CcgOptions{},
                                  const Settings& st = Settings{}) {
    if (opts.master_kind != MasterKind::contextual)
        throw Error("warm_classical", "warm starts require the contextual master");
    opts.warm_pool = pool;
    return solve_ccg(p, q_new, opts, st);
}

// Single-level reformulation for objective uncertainty: one LP, no
// iteration. The worst-case recourse cost appears through the epigraph
// variables (rho, gamma) tied to the scenario rows.
inline Solution solve_objective_uncertainty(const TwoStageProblem& p, const ContextQuery& q,
                                            const Settings& st = Settings{}) {
    if (p.uncertainty_kind != UncertaintyKind::objective_q)
        throw Error("bad_kind", "direct solve applies to objective uncertainty only");
    const Conditioned c = condition_scenarios(p.scenarios, q.x);
    if (c.support_size() == 0)
        throw Error("empty_set", "no scenario matches the categorical components");
    const BudgetSpec budget = resolve_budget(p.scenarios, q, st);
    const double gamma = budget.gamma;
    const bool one = q.norm == BallNorm::one;
    const int dz = p.dim_z();
    const int du = p.dim_u();
    const int d = c.d_cont;
    const Vec& h = p.scenarios.h[0];
    const Mat& T = *p.fixed_T;

    const int i_u = dz;
    const int i_rho = dz + du;
    const int i_gp = i_rho + 1;
    const int i_gm = i_gp + d;
    const int i_lam = i_gm + d;
    const int n = i_lam + (one ? 1 : 0);
    LinearProgram lp(n);
    for (int j = 0; j < dz; ++j) {
        lp.c[j] = p.c[j];
        lp.lb[j] = p.Z.lb[j];
        lp.ub[j] = p.Z.ub[j];
    }
    for (int j = 0; j < du; ++j) lp.lb[i_u + j] = 0.0;
    lp.c[i_rho] = 1.0;
    for (int j = 0; j < d; ++j) {
        lp.lb[i_gp + j] = 0.0;
        lp.lb[i_gm + j] = 0.0;
        lp.c[i_gp + j] = c.x[j] + (one ? 0.0 : gamma);
        lp.c[i_gm + j] = -c.x[j] + (one ? 0.0 : gamma);
    }
    if (one) {
        lp.lb[i_lam] = 0.0;
        lp.c[i_lam] = gamma;
    }
    for (int r = 0; r < p.Z.A_eq.rows; ++r) {
        Vec row(n, 0.0);
        for (int j = 0; j < dz; ++j) row[j] = p.Z.A_eq(r, j);
        lp.add_eq_row(row, p.Z.b_eq[r]);
    }
    for (int r = 0; r < p.Z.A_in.rows; ++r) {
        Vec row(n, 0.0);
        for (int j = 0; j < dz; ++j) row[j] = p.Z.A_in(r, j);
        lp.add_in_row(row, p.Z.b_in[r]);
    }
    for (int i = 0; i < p.dim_h(); ++i) {
        Vec row(n, 0.0);
        for (int j = 0; j < du; ++j) row[i_u + j] = p.W(i, j);
        for (int j = 0; j < dz; ++j) row[j] = T(i, j);
        lp.add_eq_row(row, h[i]);
    }
    for (int s = 0; s < c.support_size(); ++s) {
        const Vec& qs = p.scenarios.q[c.scenario_index[s]];
        Vec row(n, 0.0);
        for (int j = 0; j < du; ++j) row[i_u + j] = qs[j];
        row[i_rho] = -1.0;
        for (int j = 0; j < d; ++j) {
            row[i_gp + j] = -c.xs(s, j);
            row[i_gm + j] = c.xs(s, j);
        }
        lp.add_in_row(row, 0.0);
    }
    if (one)
        for (int j = 0; j < d; ++j) {
            Vec up(n, 0.0), dn(n, 0.0);
            up[i_gp + j] = 1.0;
            up[i_gm + j] = -1.0;
            up[i_lam] = -1.0;
            dn[i_gp + j] = -1.0;
            dn[i_gm + j] = 1.0;
            dn[i_lam] = -1.0;
            lp.add_in_row(up, 0.0);
            lp.add_in_row(dn, 0.0);
        }

    auto s = solve_lp(lp, st);
    Solution sol;
    sol.iterations = 1;
    if (s.status == LpStatus::infeasible) {
        sol.status = SolveStatus::infeasible;
        return sol;
    }
    if (s.status == LpStatus::unbounded)
        throw Error("master_unbounded", "objective-uncertainty reformulation is unbounded");
    sol.status = SolveStatus::optimal;
    sol.z.assign(s.x.begin(), s.x.begin() + dz);
    sol.objective = s.objective;
    sol.alpha = s.objective - dot(p.c, sol.z);
    sol.lb_trace = {s.objective};
    sol.ub_trace = {s.objective};
    return sol;
}

}  // namespace ddcro

// Problem data types for the two-stage contextual robust model, instance
// validation, and conversion of the recourse stage to the equality form
// W u = h - T z with u >= 0 that every reformulation assumes.
#pragma once

#include <optional>
#include <string>

#include "ddcro/lp.hpp"

namespace ddcro {

enum class UncertaintyKind { rhs_h_only, rhs_h_and_T, objective_q };

inline const char* to_string(UncertaintyKind k) {
    switch (k) {
        case UncertaintyKind::rhs_h_only: return "rhs_h_only";
        case UncertaintyKind::rhs_h_and_T: return "rhs_h_and_T";
        case UncertaintyKind::objective_q: return "objective_q";
    }
    return "?";
}

inline UncertaintyKind uncertainty_kind_from(const std::string& s) {
    if (s == "rhs_h_only") return UncertaintyKind::rhs_h_only;
    if (s == "rhs_h_and_T") return UncertaintyKind::rhs_h_and_T;
    if (s == "objective_q") return UncertaintyKind::objective_q;
    throw Error("bad_kind", "unknown uncertainty_kind: " + s);
}

// Paired covariate/uncertainty history. h is always present (identical
// across scenarios for objective uncertainty); T is per-scenario only when
// the technology matrix itself is uncertain; q is present only for objective
// uncertainty.
struct ScenarioSet {
    Mat x;                      // S x d_x covariate observations
    std::vector<Vec> h;         // S vectors of length d_h
    std::vector<Mat> T;         // empty, or S matrices d_h x d_z
    std::vector<Vec> q;         // empty, or S vectors of length d_u
    std::vector<char> categorical_mask;  // length d_x

    int size() const { return x.rows; }
    int dim_x() const { return x.cols; }
    bool categorical(int j) const {
        return j < static_cast<int>(categorical_mask.size()) && categorical_mask[j];
    }
    // Uncertainty vectors y_s of the conditioned set: q for objective
    // uncertainty, h otherwise.
    const std::vector<Vec>& y() const { return q.empty() ? h : q; }
};

// First-stage polyhedron over z.
struct Polyhedron {
    Mat A_eq;
    Vec b_eq;
    Mat A_in;
    Vec b_in;
    Vec lb, ub;

    explicit Polyhedron(int n = 0) : A_eq(0, n), A_in(0, n), lb(n, -kInf), ub(n, kInf) {}
    int dim() const { return static_cast<int>(lb.size()); }
};

struct TwoStageProblem {
    Vec c;                 // first-stage cost, length d_z
    Polyhedron Z;
    Vec q;                 // recourse cost, length d_u (fixed unless objective_q)
    Mat W;                 // d_h x d_u
    std::optional<Mat> fixed_T;  // used when scenarios.T is absent
    ScenarioSet scenarios;
    UncertaintyKind uncertainty_kind = UncertaintyKind::rhs_h_only;

    int dim_z() const { return static_cast<int>(c.size()); }
    int dim_u() const { return W.cols; }
    int dim_h() const { return W.rows; }

    const Mat& technology(int s) const {
        if (!scenarios.T.empty()) return scenarios.T[s];
        return *fixed_T;
    }
    // h_s - T_s z for scenario s.
    Vec rhs_at(int s, const Vec& z) const {
        Vec v = scenarios.h[s];
        const Mat& t = technology(s);
        for (int i = 0; i < t.rows; ++i)
            for (int j = 0; j < t.cols; ++j) v[i] -= t(i, j) * z[j];
        return v;
    }
};

// One conditioning request: context vector, ball norm, and robustness budget
// given either explicitly or as a relative margin over the hull distance.
enum class BallNorm { inf, one };

inline const char* to_string(BallNorm n) { return n == BallNorm::inf ? "inf" : "one"; }

inline BallNorm norm_from(const std::string& s) {
    if (s == "inf") return BallNorm::inf;
    if (s == "one") return BallNorm::one;
    throw Error("bad_norm", "unknown norm: " + s);
}

struct ContextQuery {
    Vec x;
    BallNorm norm = BallNorm::inf;
    std::optional<double> gamma;  // explicit budget
    double delta = 0.0;           // used when gamma is not set: gamma = (1+delta)*gamma0

    static ContextQuery with_gamma(Vec x, double g, BallNorm n = BallNorm::inf) {
        ContextQuery q;
        q.x = std::move(x);
        q.gamma = g;
        q.norm = n;
        return q;
    }
    static ContextQuery with_delta(Vec x, double d, BallNorm n = BallNorm::inf) {
        ContextQuery q;
        q.x = std::move(x);
        q.delta = d;
        q.norm = n;
        return q;
    }
};

enum class SolveStatus { optimal, iteration_limit, infeasible };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::infeasible: return "infeasible";
    }
    return "?";
}

struct Solution {
    SolveStatus status = SolveStatus::optimal;
    Vec z;
    double objective = 0.0;
    double alpha = 0.0;  // worst-case recourse value at z
    Vec lb_trace;
    Vec ub_trace;
    int iterations = 0;
};

struct Diagnostic {
    std::string code;
    std::string message;
    int index = -1;
};

inline std::vector<Diagnostic> validate_problem(const TwoStageProblem& p,
                                                const Settings& st = Settings{}) {
    std::vector<Diagnostic> out;
    auto flag = [&](const std::string& code, const std::string& msg, int idx = -1) {
        out.push_back({code, msg, idx});
    };

    const int dz = p.dim_z();
    const int du = p.dim_u();
    const int dh = p.dim_h();
    const int s_count = p.scenarios.size();

    if (s_count < 1) flag("no_scenarios", "scenario set is empty");
    if (static_cast<int>(p.q.size()) != du)
        flag("dim_q", "recourse cost length does not match W columns");
    if (p.Z.dim() != dz) flag("dim_z", "first-stage bounds do not match cost length");
    if (p.Z.A_eq.cols != dz || p.Z.A_in.cols != dz)
        flag("dim_z_rows", "first-stage constraint matrices do not match cost length");
    if (p.Z.A_eq.rows != static_cast<int>(p.Z.b_eq.size()) ||
        p.Z.A_in.rows != static_cast<int>(p.Z.b_in.size()))
        flag("dim_z_rhs", "first-stage right-hand sides do not match row counts");

    if (!all_finite(p.c) || !all_finite(p.q) || !all_finite(p.W.data))
        flag("nonfinite", "problem data contains NaN or Inf");

    if (static_cast<int>(p.scenarios.categorical_mask.size()) != p.scenarios.dim_x())
        flag("dim_mask", "categorical mask length does not match covariate dimension");

    for (int s = 0; s < s_count; ++s) {
        if (static_cast<int>(p.scenarios.h[s].size()) != dh)
            flag("dim_h", "scenario h length does not match W rows", s);
        else if (!all_finite(p.scenarios.h[s]))
            flag("nonfinite", "scenario h contains NaN or Inf", s);
    }
    if (static_cast<int>(p.scenarios.h.size()) != s_count)
        flag("dim_h_count", "scenario h count does not match covariate rows");

    if (!p.scenarios.T.empty()) {
        if (static_cast<int>(p.scenarios.T.size()) != s_count)
            flag("dim_T_count", "scenario T count does not match covariate rows");
        for (int s = 0; s < static_cast<int>(p.scenarios.T.size()); ++s)
            if (p.scenarios.T[s].rows != dh || p.scenarios.T[s].cols != dz)
                flag("dim_T", "scenario T shape does not match (d_h, d_z)", s);
    } else if (!p.fixed_T || p.fixed_T->rows != dh || p.fixed_T->cols != dz) {
        flag("dim_T", "fixed technology matrix missing or mis-shaped");
    }

    switch (p.uncertainty_kind) {
        case UncertaintyKind::rhs_h_only:
            if (!p.scenarios.q.empty())
                flag("kind_mix", "rhs uncertainty problem carries per-scenario q");
            if (!p.scenarios.T.empty())
                flag("kind_T", "rhs_h_only problem must use a fixed technology matrix");
            break;
        case UncertaintyKind::rhs_h_and_T:
            if (!p.scenarios.q.empty())
                flag("kind_mix", "rhs uncertainty problem carries per-scenario q");
            if (p.scenarios.T.empty())
                flag("kind_T", "rhs_h_and_T problem requires per-scenario T");
            break;
        case UncertaintyKind::objective_q: {
            if (p.scenarios.q.empty()) {
                flag("kind_q", "objective uncertainty requires per-scenario q");
            } else {
                if (static_cast<int>(p.scenarios.q.size()) != s_count)
                    flag("dim_q_count", "scenario q count does not match covariate rows");
                for (int s = 0; s < static_cast<int>(p.scenarios.q.size()); ++s)
                    if (static_cast<int>(p.scenarios.q[s].size()) != du)
                        flag("dim_qs", "scenario q length does not match W columns", s);
            }
            if (!p.scenarios.T.empty())
                flag("kind_T", "objective uncertainty requires scenario-independent T");
            for (int s = 1; s < s_count; ++s)
                if (p.scenarios.h[s] != p.scenarios.h[0]) {
                    flag("kind_h", "objective uncertainty requires scenario-independent h", s);
                    break;
                }
            break;
        }
    }

    // Nonemptiness of Z, one feasibility solve.
    if (out.empty()) {
        LinearProgram lp(dz);
        lp.A_eq = p.Z.A_eq;
        lp.b_eq = p.Z.b_eq;
        lp.A_in = p.Z.A_in;
        lp.b_in = p.Z.b_in;
        lp.lb = p.Z.lb;
        lp.ub = p.Z.ub;
        if (!lp_feasible(lp, st)) flag("z_infeasible", "first stage infeasible");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recourse standardization

enum class RowSense { le, eq, ge };

// Recourse stage as modelers write it: mixed-sense rows over variables that
// are either nonnegative or free. Right-hand sides (the h / T data) are kept
// outside; rows pass through unchanged so per-scenario h and T apply to the
// standardized system as-is.
struct RawRecourse {
    Vec cost;
    Mat A;  // m x n_raw
    std::vector<RowSense> sense;
    std::vector<char> free_var;  // length n_raw; false means u >= 0

    int num_rows() const { return A.rows; }
    int num_vars() const { return A.cols; }
};

struct StandardRecourse {
    Mat W;
    Vec q;
    int n_raw = 0;
    std::vector<int> pos_col;  // standardized column holding +u_j
    std::vector<int> neg_col;  // standardized column holding -u_j (split vars), or -1

    // Maps a standardized recourse point back to the raw variables.
    Vec to_raw(const Vec& u_std) const {
        Vec u(n_raw, 0.0);
        for (int j = 0; j < n_raw; ++j) {
            u[j] = u_std[pos_col[j]];
            if (neg_col[j] >= 0) u[j] -= u_std[neg_col[j]];
        }
        return u;
    }
};

// Equality form with u >= 0: free variables split into differences, every
// inequality row gains one zero-cost slack (surplus) column. Row order and
// row scaling are preserved, so h and T vectors carry over unchanged.
inline StandardRecourse to_standard_recourse(const RawRecourse& raw) {
    const int m = raw.num_rows();
    const int n = raw.num_vars();
    StandardRecourse out;
    out.n_raw = n;
    out.pos_col.assign(n, -1);
    out.neg_col.assign(n, -1);

    int cols = 0;
    for (int j = 0; j < n; ++j) {
        out.pos_col[j] = cols++;
        if (raw.free_var[j]) out.neg_col[j] = cols++;
    }
    int slack_cols = 0;
    for (RowSense s : raw.sense)
        if (s != RowSense::eq) ++slack_cols;

    out.W = Mat(m, cols + slack_cols);
    out.q.assign(cols + slack_cols, 0.0);
    for (int j = 0; j < n; ++j) {
        out.q[out.pos_col[j]] = raw.cost[j];
        if (out.neg_col[j] >= 0) out.q[out.neg_col[j]] = -raw.cost[j];
        for (int i = 0; i < m; ++i) {
            const double a = raw.A(i, j);
            if (a == 0.0) continue;
            out.W(i, out.pos_col[j]) = a;
            if (out.neg_col[j] >= 0) out.W(i, out.neg_col[j]) = -a;
        }
    }
    int sc = cols;
    for (int i = 0; i < m; ++i) {
        if (raw.sense[i] == RowSense::le) out.W(i, sc++) = 1.0;
        else if (raw.sense[i] == RowSense::ge) out.W(i, sc++) = -1.0;
    }
    return out;
}

// Recourse LP  min q^T u  s.t. W u = rhs, u >= 0  as a LinearProgram.
inline LinearProgram recourse_lp(const Mat& w, const Vec& q, const Vec& rhs) {
    LinearProgram lp(w.cols);
    lp.c = q;
    lp.A_eq = w;
    lp.b_eq = rhs;
    for (int j = 0; j < w.cols; ++j) {
        lp.lb[j] = 0.0;
        lp.ub[j] = kInf;
    }
    return lp;
}

}  // namespace ddcro

// Dense two-phase primal simplex with dual values, Farkas certificates and
// improving rays.
//
// The solver converts the input to computational standard form
//   min c~^T t   s.t.  A~ t = b~,  t >= 0
// as follows: variables with a finite lower bound are shifted, variables with
// only an upper bound are reflected, free variables are split, two-sided
// bounds become explicit rows with a slack, and every inequality row gets a
// slack column. Rows are sign-normalized so b~ >= 0 and one artificial column
// per row provides the Phase-I basis. Artificial columns are kept in the
// tableau through Phase II (barred from entering); since they form B^{-1}
// columnwise, duals fall out of them directly. After termination the basis is
// refactorized (dense LU) so the reported point does not carry tableau drift.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "ddcro/core.hpp"

namespace ddcro {

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

// min c^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lb <= x <= ub.
struct LinearProgram {
    Vec c;
    Mat A_eq;
    Vec b_eq;
    Mat A_in;
    Vec b_in;
    Vec lb;
    Vec ub;

    explicit LinearProgram(int n = 0)
        : c(n, 0.0), A_eq(0, n), A_in(0, n), lb(n, -kInf), ub(n, kInf) {}

    int num_vars() const { return static_cast<int>(c.size()); }

    void add_eq_row(const Vec& coeffs, double rhs) { append_row(A_eq, b_eq, coeffs, rhs); }
    void add_in_row(const Vec& coeffs, double rhs) { append_row(A_in, b_in, coeffs, rhs); }

private:
    static void append_row(Mat& a, Vec& b, const Vec& coeffs, double rhs) {
        a.data.insert(a.data.end(), coeffs.begin(), coeffs.end());
        a.rows += 1;
        b.push_back(rhs);
    }
};

struct LpSolution {
    LpStatus status = LpStatus::optimal;
    Vec x;
    double objective = 0.0;
    // Duals with the convention  A_eq^T dual_eq + A_in^T dual_in + reduced_costs = c,
    // dual_in <= 0 for <= rows of a minimization.
    Vec dual_eq;
    Vec dual_in;
    Vec reduced_costs;
    // Infeasible: row combination with  sup_{lb<=x<=ub} [farkas_eq^T(A_eq x - b_eq)
    // + farkas_in^T(A_in x - b_in)] < 0 and farkas_in <= 0.
    Vec farkas_eq;
    Vec farkas_in;
    // Unbounded: improving ray (c^T ray < 0, A_eq ray = 0, A_in ray <= 0).
    Vec ray;
    int iterations = 0;
};

namespace detail {

struct Simplex {
    // Standard-form column bookkeeping.
    enum class ColKind { shifted, reflected, free_pos, free_neg, slack_in, slack_bound, artificial };
    struct Col {
        ColKind kind;
        int ref;  // original variable index, or original row index for slacks/artificials
    };

    const LinearProgram& lp;
    const Settings& st;

    int n = 0, me = 0, mi = 0;
    int m = 0;              // standard-form rows: me + mi + #bound rows
    int ncols = 0;          // standard-form columns excluding artificials
    int total = 0;          // ncols + m artificials
    std::vector<Col> cols;
    std::vector<int> var_col;      // first standard column of each original variable
    std::vector<int> bound_row;    // bound row index per variable, -1 if none
    Vec shift;                     // x_j = shift_j + sgn_j * t_j
    Vec sgn;
    std::vector<double> row_sign;  // +-1 applied to each std row so b >= 0
    std::vector<double> row_scale; // equilibration divisor per std row
    Mat T;                         // m x (total + 1), last column is rhs
    Vec cost;                      // phase cost per column (size total)
    Vec costrow;                   // reduced costs, maintained (size total + 1)
    std::vector<int> basis;        // size m
    std::vector<char> barred;      // columns barred from entering
    std::vector<char> row_active;
    int iterations = 0;
    long degenerate = 0;
    bool bland = false;

    Simplex(const LinearProgram& p, const Settings& s) : lp(p), st(s) {
        n = lp.num_vars();
        me = lp.A_eq.rows;
        mi = lp.A_in.rows;
        build();
    }

    void build() {
        var_col.assign(n, -1);
        bound_row.assign(n, -1);
        shift.assign(n, 0.0);
        sgn.assign(n, 1.0);

        int nb = 0;
        for (int j = 0; j < n; ++j) {
            const double l = lp.lb[j], u = lp.ub[j];
            if (std::isfinite(l)) {
                shift[j] = l;
                sgn[j] = 1.0;
                var_col[j] = static_cast<int>(cols.size());
                cols.push_back({ColKind::shifted, j});
                if (std::isfinite(u)) bound_row[j] = nb++;
            } else if (std::isfinite(u)) {
                shift[j] = u;
                sgn[j] = -1.0;
                var_col[j] = static_cast<int>(cols.size());
                cols.push_back({ColKind::reflected, j});
            } else {
                var_col[j] = static_cast<int>(cols.size());
                cols.push_back({ColKind::free_pos, j});
                cols.push_back({ColKind::free_neg, j});
            }
        }
        for (int i = 0; i < mi; ++i) cols.push_back({ColKind::slack_in, i});
        for (int j = 0; j < n; ++j)
            if (bound_row[j] >= 0) cols.push_back({ColKind::slack_bound, j});

        m = me + mi + nb;
        ncols = static_cast<int>(cols.size());
        total = ncols + m;
        for (int i = 0; i < m; ++i) cols.push_back({ColKind::artificial, i});

        T = Mat(m, total + 1);
        row_sign.assign(m, 1.0);
        row_scale.assign(m, 1.0);
        row_active.assign(m, 1);

        // Structural rows in t-space: row value = sum_j a_ij x_j with
        // x_j = shift_j + sgn_j t_j, so rhs -= A * shift.
        auto fill_struct_row = [&](int row, const Mat& a, int i, double rhs) {
            double adj = rhs;
            for (int j = 0; j < n; ++j) {
                const double aij = a(i, j);
                if (aij == 0.0) continue;
                adj -= aij * shift[j];
                const int c0 = var_col[j];
                if (cols[c0].kind == ColKind::free_pos) {
                    T(row, c0) += aij;
                    T(row, c0 + 1) -= aij;
                } else {
                    T(row, c0) += aij * sgn[j];
                }
            }
            T(row, total) = adj;
        };
        for (int i = 0; i < me; ++i) fill_struct_row(i, lp.A_eq, i, lp.b_eq[i]);
        for (int i = 0; i < mi; ++i) fill_struct_row(me + i, lp.A_in, i, lp.b_in[i]);
        // Slack columns for inequality rows.
        for (int c = 0; c < ncols; ++c)
            if (cols[c].kind == ColKind::slack_in) T(me + cols[c].ref, c) = 1.0;
        // Bound rows t_j + s = ub - lb.
        for (int j = 0; j < n; ++j) {
            if (bound_row[j] < 0) continue;
            const int row = me + mi + bound_row[j];
            T(row, var_col[j]) = 1.0;
            T(row, total) = lp.ub[j] - lp.lb[j];
        }
        for (int c = 0; c < ncols; ++c)
            if (cols[c].kind == ColKind::slack_bound) T(me + mi + bound_row[cols[c].ref], c) = 1.0;

        // Equilibrate rows so mixed-magnitude constraints (penalty costs,
        // disjunction constants) do not starve the pivot tolerances.
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int c = 0; c < ncols; ++c) s = std::max(s, std::abs(T(i, c)));
            if (s > 1e-12 && (s > 16.0 || s < 1.0 / 16.0)) {
                row_scale[i] = s;
                for (int c = 0; c <= total; ++c) T(i, c) /= s;
            }
        }
        // Normalize rhs >= 0 and install artificial basis.
        basis.assign(m, -1);
        for (int i = 0; i < m; ++i) {
            if (T(i, total) < 0.0) {
                row_sign[i] = -1.0;
                for (int c = 0; c <= total; ++c) T(i, c) = -T(i, c);
            }
            T(i, ncols + i) = 1.0;
            basis[i] = ncols + i;
        }
        barred.assign(total, 0);
    }

    void set_phase_costs(bool phase1) {
        cost.assign(total, 0.0);
        if (phase1) {
            for (int i = 0; i < m; ++i) cost[ncols + i] = 1.0;
        } else {
            for (int c = 0; c < ncols; ++c) {
                const Col& col = cols[c];
                switch (col.kind) {
                    case ColKind::shifted: cost[c] = lp.c[col.ref]; break;
                    case ColKind::reflected: cost[c] = -lp.c[col.ref]; break;
                    case ColKind::free_pos: cost[c] = lp.c[col.ref]; break;
                    case ColKind::free_neg: cost[c] = -lp.c[col.ref]; break;
                    default: break;
                }
            }
        }
        // Reduced-cost row from scratch: cost - cost_B^T * T.
        costrow.assign(total + 1, 0.0);
        for (int c = 0; c <= total; ++c) costrow[c] = (c < total) ? cost[c] : 0.0;
        for (int i = 0; i < m; ++i) {
            const double cb = cost[basis[i]];
            if (cb == 0.0) continue;
            for (int c = 0; c <= total; ++c) costrow[c] -= cb * T(i, c);
        }
    }

    void pivot(int row, int col) {
        const double p = T(row, col);
        for (int c = 0; c <= total; ++c) T(row, c) /= p;
        T(row, col) = 1.0;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = T(i, col);
            if (f == 0.0) continue;
            for (int c = 0; c <= total; ++c) T(i, c) -= f * T(row, c);
            T(i, col) = 0.0;
        }
        const double f = costrow[col];
        if (f != 0.0) {
            for (int c = 0; c <= total; ++c) costrow[c] -= f * T(row, c);
            costrow[col] = 0.0;
        }
        basis[row] = col;
    }

    // Returns entering column or -1 at optimality. Dantzig rule by default,
    // Bland (lowest eligible index) once the degeneracy counter trips.
    int choose_entering() const {
        const double tol = 1e-9;
        int best = -1;
        double best_val = -tol;
        for (int c = 0; c < total; ++c) {
            if (barred[c]) continue;
            const double z = costrow[c];
            if (z >= -tol) continue;
            if (bland) return c;
            if (z < best_val) {
                best_val = z;
                best = c;
            }
        }
        return best;
    }

    // Returns leaving row or -1 (unbounded column).
    int choose_leaving(int col) const {
        int row = -1;
        double best = kInf;
        for (int i = 0; i < m; ++i) {
            if (!row_active[i]) continue;
            const double a = T(i, col);
            if (a > 1e-9) {
                const double ratio = T(i, total) / a;
                if (ratio < best - 1e-12) {
                    best = ratio;
                    row = i;
                }
            }
        }
        return row;
    }

    // Runs simplex with the current phase costs. Returns the unbounded
    // entering column, or -1 on optimality.
    int run() {
        const long cap = 200000L + 2000L * (m + total);
        const long bland_after = 5L * (m + total);
        while (true) {
            if (iterations++ > cap) throw Error("lp_stalled", "simplex iteration cap exceeded");
            const int col = choose_entering();
            if (col < 0) return -1;
            const int row = choose_leaving(col);
            if (row < 0) return col;
            if (T(row, total) < 1e-10) {
                if (++degenerate > bland_after) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
            pivot(row, col);
        }
    }

    bool is_artificial(int c) const { return c >= ncols; }

    // Drives basic artificials out after Phase I; rows that cannot be cleared
    // are redundant and get deactivated.
    void purge_artificials() {
        for (int i = 0; i < m; ++i) {
            if (!is_artificial(basis[i])) continue;
            int col = -1;
            for (int c = 0; c < ncols; ++c) {
                if (std::abs(T(i, c)) > 1e-9) {
                    col = c;
                    break;
                }
            }
            if (col >= 0) {
                pivot(i, col);
            } else {
                row_active[i] = 0;
                barred[basis[i]] = 1;
            }
        }
    }

    Vec extract_x() const {
        Vec t(total, 0.0);
        for (int i = 0; i < m; ++i) t[basis[i]] = T(i, total);
        return map_to_x(t);
    }

    Vec map_to_x(const Vec& t) const {
        Vec x(n, 0.0);
        for (int j = 0; j < n; ++j) x[j] = shift[j];
        for (int c = 0; c < ncols; ++c) {
            const Col& col = cols[c];
            switch (col.kind) {
                case ColKind::shifted: x[col.ref] += t[c]; break;
                case ColKind::reflected: x[col.ref] -= t[c]; break;
                case ColKind::free_pos: x[col.ref] += t[c]; break;
                case ColKind::free_neg: x[col.ref] -= t[c]; break;
                default: break;
            }
        }
        return x;
    }

    // Direction in x-space of a standard-form ray (no shift applied).
    Vec map_to_dir(const Vec& t) const {
        Vec d(n, 0.0);
        for (int c = 0; c < ncols; ++c) {
            const Col& col = cols[c];
            switch (col.kind) {
                case ColKind::shifted: d[col.ref] += t[c]; break;
                case ColKind::reflected: d[col.ref] -= t[c]; break;
                case ColKind::free_pos: d[col.ref] += t[c]; break;
                case ColKind::free_neg: d[col.ref] -= t[c]; break;
                default: break;
            }
        }
        return d;
    }

    // Recomputes the basic point and duals from a fresh LU of the basis.
    // Falls back to tableau values when the basis matrix is singular or so
    // ill conditioned that the refit disagrees with the tableau.
    void refine(const Vec& phase_cost, Vec& t_out, Vec& y_out) const {
        Mat B(m, m);
        Vec rhs0(m, 0.0);
        for (int i = 0; i < m; ++i) rhs0[i] = original_rhs(i);
        for (int k = 0; k < m; ++k) {
            const int c = basis[k];
            for (int i = 0; i < m; ++i) B(i, k) = original_col(i, c);
        }
        Vec xb;
        t_out.assign(total, 0.0);
        bool ok = lu_solve(B, rhs0, xb);
        if (ok) {
            double scale = 1.0;
            for (int k = 0; k < m; ++k) scale = std::max(scale, std::abs(T(k, total)));
            for (int k = 0; k < m; ++k) {
                if (xb[k] < -1e-7 * scale || std::abs(xb[k] - T(k, total)) > 1e-4 * scale) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) {
            for (int k = 0; k < m; ++k) t_out[basis[k]] = xb[k];
        } else {
            for (int k = 0; k < m; ++k) t_out[basis[k]] = T(k, total);
        }
        // B^T y = c_B
        Mat Bt(m, m);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) Bt(k, i) = original_col(i, basis[k]);
        Vec cb(m, 0.0);
        for (int k = 0; k < m; ++k) cb[k] = phase_cost[basis[k]];
        if (!lu_solve(Bt, cb, y_out)) {
            y_out.assign(m, 0.0);
            for (int i = 0; i < m; ++i) {
                // artificial column of row i carries B^{-1} e_i
                double yi = 0.0;
                for (int k = 0; k < m; ++k) yi += phase_cost[basis[k]] * T(k, ncols + i);
                y_out[i] = yi;
            }
        }
    }

    // Entry of the original (pre-pivot, sign-normalized) standard matrix.
    double original_col(int row, int c) const {
        const Col& col = cols[c];
        double v = 0.0;
        switch (col.kind) {
            case ColKind::artificial: v = (col.ref == row) ? 1.0 : 0.0; return v;  // post-normalization
            case ColKind::slack_in: v = (me + col.ref == row) ? 1.0 : 0.0; break;
            case ColKind::slack_bound: v = (me + mi + bound_row[col.ref] == row) ? 1.0 : 0.0; break;
            case ColKind::shifted:
            case ColKind::free_pos: v = struct_coeff(row, col.ref); break;
            case ColKind::reflected:
            case ColKind::free_neg: v = -struct_coeff(row, col.ref); break;
        }
        return v * row_sign[row] / row_scale[row];
    }

    double struct_coeff(int row, int j) const {
        if (row < me) return lp.A_eq(row, j);
        if (row < me + mi) return lp.A_in(row - me, j);
        return (bound_row[j] == row - me - mi) ? 1.0 : 0.0;
    }

    double original_rhs(int row) const {
        double b;
        if (row < me) {
            b = lp.b_eq[row];
            for (int j = 0; j < n; ++j) b -= lp.A_eq(row, j) * shift[j];
        } else if (row < me + mi) {
            b = lp.b_in[row - me];
            for (int j = 0; j < n; ++j) b -= lp.A_in(row - me, j) * shift[j];
        } else {
            int j = -1;
            for (int k = 0; k < n; ++k)
                if (bound_row[k] == row - me - mi) {
                    j = k;
                    break;
                }
            b = lp.ub[j] - lp.lb[j];
        }
        return b * row_sign[row] / row_scale[row];
    }

    void dump_trace() const {
        if (!std::getenv("DDCRO_LP_TRACE")) return;
        std::cerr << "lp_tableau," << m << "," << (total + 1) << "\n";
        for (int i = 0; i < m; ++i) {
            for (int c = 0; c <= total; ++c) std::cerr << T(i, c) << (c == total ? '\n' : ',');
        }
    }
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, const Settings& st = Settings{}) {
    const int n = lp.num_vars();
    if (static_cast<int>(lp.lb.size()) != n || static_cast<int>(lp.ub.size()) != n ||
        lp.A_eq.cols != n || lp.A_in.cols != n ||
        lp.A_eq.rows != static_cast<int>(lp.b_eq.size()) ||
        lp.A_in.rows != static_cast<int>(lp.b_in.size()))
        throw Error("lp_dims", "inconsistent LP dimensions");
    for (int j = 0; j < n; ++j)
        if (lp.lb[j] > lp.ub[j] + 1e-12) {
            LpSolution s;
            s.status = LpStatus::infeasible;
            s.farkas_eq.assign(lp.A_eq.rows, 0.0);
            s.farkas_in.assign(lp.A_in.rows, 0.0);
            return s;
        }

    detail::Simplex sx(lp, st);
    LpSolution out;

    // Phase I.
    sx.set_phase_costs(true);
    sx.run();  // cannot be unbounded: objective >= 0
    double phase1 = 0.0;
    for (int i = 0; i < sx.m; ++i)
        if (sx.is_artificial(sx.basis[i])) phase1 += sx.T(i, sx.total);
    if (phase1 > 1e-7) {
        out.status = LpStatus::infeasible;
        // y_i = 1 - reduced cost of the artificial of row i, then undo row signs.
        out.farkas_eq.assign(sx.me, 0.0);
        out.farkas_in.assign(sx.mi, 0.0);
        for (int i = 0; i < sx.m; ++i) {
            const double y = (1.0 - sx.costrow[sx.ncols + i]) * sx.row_sign[i] / sx.row_scale[i];
            if (i < sx.me) out.farkas_eq[i] = y;
            else if (i < sx.me + sx.mi) out.farkas_in[i - sx.me] = y;
        }
        out.iterations = sx.iterations;
        return out;
    }
    sx.purge_artificials();
    for (int c = sx.ncols; c < sx.total; ++c) sx.barred[c] = 1;

    // Phase II.
    sx.set_phase_costs(false);
    const int unb_col = sx.run();
    out.iterations = sx.iterations;
    sx.dump_trace();

    if (unb_col >= 0) {
        out.status = LpStatus::unbounded;
        Vec t(sx.total, 0.0);
        t[unb_col] = 1.0;
        for (int i = 0; i < sx.m; ++i)
            if (sx.row_active[i]) t[sx.basis[i]] = -sx.T(i, unb_col);
        out.ray = sx.map_to_dir(t);
        out.x = sx.extract_x();
        return out;
    }

    Vec t, y;
    sx.refine(sx.cost, t, y);
    for (double& v : t)
        if (v < 0.0 && v > -1e-11) v = 0.0;
    out.status = LpStatus::optimal;
    out.x = sx.map_to_x(t);
    out.objective = dot(lp.c, out.x);
    out.dual_eq.assign(sx.me, 0.0);
    out.dual_in.assign(sx.mi, 0.0);
    for (int i = 0; i < sx.m; ++i) {
        const double yi = y[i] * sx.row_sign[i] / sx.row_scale[i];
        if (i < sx.me) out.dual_eq[i] = yi;
        else if (i < sx.me + sx.mi) out.dual_in[i - sx.me] = yi;
    }
    out.reduced_costs.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double z = lp.c[j];
        for (int i = 0; i < sx.me; ++i) z -= out.dual_eq[i] * lp.A_eq(i, j);
        for (int i = 0; i < sx.mi; ++i) z -= out.dual_in[i] * lp.A_in(i, j);
        out.reduced_costs[j] = z;
    }
    return out;
}

// Feasibility probe: true iff the program admits a feasible point.
inline bool lp_feasible(LinearProgram lp, const Settings& st = Settings{}) {
    std::fill(lp.c.begin(), lp.c.end(), 0.0);
    return solve_lp(lp, st).status == LpStatus::optimal;
}

}  // namespace ddcro

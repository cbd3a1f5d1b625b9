// Shared test utilities: deterministic random streams, independent
// brute-force oracles (vertex enumeration for LPs, exhaustive binary
// enumeration for MILPs) and random instance generators.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "ddcro/core.hpp"
#include "ddcro/lp.hpp"

namespace testsup {

using ddcro::LinearProgram;
using ddcro::LpStatus;
using ddcro::Mat;
using ddcro::Vec;

// Deterministic 64-bit stream (splitmix64) so frozen expectations do not
// depend on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : s_(seed) {}
    uint64_t next() {
        uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // integer in [lo, hi]
    int uniform_int(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1)); }
    // real in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
    }

private:
    uint64_t s_;
};

// Enumerates all basis submatrices of [A | I_slacks] for an LP whose
// variables satisfy x >= 0 and whose every other restriction is an explicit
// row. Returns the minimum objective over feasible vertices, or nullopt when
// no feasible vertex exists. Requires the feasible region to be pointed and
// bounded (generators below arrange that via box rows).
inline std::optional<double> vertex_enumeration_min(const LinearProgram& lp) {
    const int n = lp.num_vars();
    const int me = lp.A_eq.rows;
    const int mi = lp.A_in.rows;
    const int m = me + mi;
    const int ncols = n + mi;  // slack per inequality row

    auto col = [&](int r, int c) -> double {
        if (c < n) return r < me ? lp.A_eq(r, c) : lp.A_in(r - me, c);
        return (r == me + (c - n)) ? 1.0 : 0.0;
    };
    Vec rhs(m);
    for (int r = 0; r < me; ++r) rhs[r] = lp.b_eq[r];
    for (int r = 0; r < mi; ++r) rhs[me + r] = lp.b_in[r];

    std::optional<double> best;
    std::vector<int> pick(m);
    // iterate over m-subsets of [0, ncols)
    for (int i = 0; i < m; ++i) pick[i] = i;
    if (m > ncols) return std::nullopt;
    while (true) {
        Mat B(m, m);
        for (int k = 0; k < m; ++k)
            for (int r = 0; r < m; ++r) B(r, k) = col(r, pick[k]);
        Vec xb;
        if (ddcro::lu_solve(B, rhs, xb)) {
            bool feas = true;
            for (double v : xb)
                if (v < -1e-9) {
                    feas = false;
                    break;
                }
            if (feas) {
                double obj = 0.0;
                for (int k = 0; k < m; ++k)
                    if (pick[k] < n) obj += lp.c[pick[k]] * xb[k];
                if (!best || obj < *best) best = obj;
            }
        }
        // next combination
        int i = m - 1;
        while (i >= 0 && pick[i] == ncols - m + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int k = i + 1; k < m; ++k) pick[k] = pick[k - 1] + 1;
    }
    return best;
}

// Random LP in the shape vertex_enumeration_min understands: x >= 0,
// integer coefficients in [-5, 5], feasibility forced through a known point,
// boundedness through box rows x_j <= 10.
inline LinearProgram random_boxed_lp(Rng& rng, int max_vars = 8, int max_rows = 8) {
    const int n = rng.uniform_int(1, max_vars);
    const int rows = rng.uniform_int(1, max_rows - 1);
    const int n_eq = rng.uniform_int(0, std::min(rows, n - 1));
    const int n_in = rows - n_eq;

    LinearProgram lp(n);
    for (int j = 0; j < n; ++j) {
        lp.c[j] = rng.uniform_int(-5, 5);
        lp.lb[j] = 0.0;
        lp.ub[j] = ddcro::kInf;
    }
    Vec x0(n);
    for (int j = 0; j < n; ++j) x0[j] = rng.uniform_int(0, 3);

    // Equality rows must stay full row rank or basis enumeration sees only
    // singular matrices; reject dependent draws.
    std::vector<Vec> eq_rows;
    while (static_cast<int>(eq_rows.size()) < n_eq) {
        Vec a(n);
        for (int j = 0; j < n; ++j) a[j] = rng.uniform_int(-5, 5);
        std::vector<Vec> trial = eq_rows;
        trial.push_back(a);
        // Gaussian rank check
        int rank = 0;
        std::vector<Vec> work = trial;
        for (int c = 0; c < n && rank < static_cast<int>(work.size()); ++c) {
            int piv = -1;
            for (int r = rank; r < static_cast<int>(work.size()); ++r)
                if (std::abs(work[r][c]) > 1e-9) {
                    piv = r;
                    break;
                }
            if (piv < 0) continue;
            std::swap(work[rank], work[piv]);
            for (int r = 0; r < static_cast<int>(work.size()); ++r) {
                if (r == rank) continue;
                const double f = work[r][c] / work[rank][c];
                if (f == 0.0) continue;
                for (int j = c; j < n; ++j) work[r][j] -= f * work[rank][j];
            }
            ++rank;
        }
        if (rank == static_cast<int>(trial.size())) eq_rows.push_back(a);
    }
    for (const Vec& a : eq_rows) lp.add_eq_row(a, ddcro::dot(a, x0));
    for (int r = 0; r < n_in; ++r) {
        Vec a(n);
        for (int j = 0; j < n; ++j) a[j] = rng.uniform_int(-5, 5);
        lp.add_in_row(a, ddcro::dot(a, x0) + rng.uniform_int(0, 4));
    }
    for (int j = 0; j < n; ++j) {
        Vec a(n, 0.0);
        a[j] = 1.0;
        lp.add_in_row(a, 10.0);
    }
    return lp;
}

// Maximum of a linear functional sum_k theta_k value_k over the weight
// polytope {theta >= 0, sum theta = 1, ||sum theta xs_k - x|| <= gamma} by
// exhaustive basis enumeration of the slack-augmented system. xs is
// row-per-scenario over the continuous covariates.
inline std::optional<double> weight_vertex_max(const Mat& xs, const Vec& x, double gamma,
                                               bool one_norm, const Vec& value) {
    const int s = xs.rows;
    const int d = xs.cols;
    const int nv = one_norm ? s + 2 * d + 1 : s + 2 * d;
    const int m = one_norm ? 1 + d + 1 : 1 + 2 * d;
    Mat A(m, nv);
    Vec b(m, 0.0);
    for (int k = 0; k < s; ++k) A(0, k) = 1.0;
    b[0] = 1.0;
    if (!one_norm) {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < s; ++k) {
                A(1 + 2 * j, k) = xs(k, j);
                A(2 + 2 * j, k) = -xs(k, j);
            }
            A(1 + 2 * j, s + 2 * j) = 1.0;
            A(2 + 2 * j, s + 2 * j + 1) = 1.0;
            b[1 + 2 * j] = x[j] + gamma;
            b[2 + 2 * j] = -x[j] + gamma;
        }
    } else {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < s; ++k) A(1 + j, k) = xs(k, j);
            A(1 + j, s + j) = -1.0;
            A(1 + j, s + d + j) = 1.0;
            b[1 + j] = x[j];
        }
        for (int j = 0; j < 2 * d; ++j) A(m - 1, s + j) = 1.0;
        A(m - 1, nv - 1) = 1.0;
        b[m - 1] = gamma;
    }
    std::optional<double> best;
    if (m > nv) return best;
    std::vector<int> pick(m);
    for (int i = 0; i < m; ++i) pick[i] = i;
    while (true) {
        Mat B(m, m);
        for (int k = 0; k < m; ++k)
            for (int r = 0; r < m; ++r) B(r, k) = A(r, pick[k]);
        Vec xb;
        if (ddcro::lu_solve(B, b, xb)) {
            bool feas = true;
            for (double v : xb)
                if (v < -1e-9) {
                    feas = false;
                    break;
                }
            if (feas) {
                double obj = 0.0;
                for (int k = 0; k < m; ++k)
                    if (pick[k] < s) obj += value[pick[k]] * xb[k];
                if (!best || obj > *best) best = obj;
            }
        }
        int i = m - 1;
        while (i >= 0 && pick[i] == nv - m + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int k = i + 1; k < m; ++k) pick[k] = pick[k - 1] + 1;
    }
    return best;
}

// Dual objective under the sign convention of LpSolution, used for strong
// duality checks.
inline double dual_objective(const LinearProgram& lp, const ddcro::LpSolution& s) {
    double v = ddcro::dot(s.dual_eq, lp.b_eq) + ddcro::dot(s.dual_in, lp.b_in);
    for (int j = 0; j < lp.num_vars(); ++j) {
        const double z = s.reduced_costs[j];
        if (z > 0.0 && std::isfinite(lp.lb[j])) v += z * lp.lb[j];
        if (z < 0.0 && std::isfinite(lp.ub[j])) v += z * lp.ub[j];
    }
    return v;
}

}  // namespace testsup

// Branch-and-bound over a designated set of binary variables on top of the
// LP solver. Minimization is the canonical sense; callers that maximize
// negate at the boundary. Best-first search, branching on the most
// fractional binary, all ties broken toward the lower index.
#pragma once

#include <cstdlib>
#include <iostream>
#include <queue>

#include "ddcro/lp.hpp"

namespace ddcro {

struct MixedBinaryProgram {
    LinearProgram lp;
    std::vector<int> binaries;
};

enum class MilpStatus { optimal, infeasible, gap_not_closed };

inline const char* to_string(MilpStatus s) {
    switch (s) {
        case MilpStatus::optimal: return "optimal";
        case MilpStatus::infeasible: return "infeasible";
        case MilpStatus::gap_not_closed: return "gap_not_closed";
    }
    return "?";
}

struct MilpOptions {
    double gap_tol = 1e-6;
    long node_limit = 200000;
};

struct MilpResult {
    MilpStatus status = MilpStatus::infeasible;
    Vec primal;
    double objective = kInf;
    double bound = -kInf;  // proven relaxation bound (<= objective for minimization)
    long nodes = 0;
};

namespace detail {

struct BnbNode {
    double bound;
    long id;
    Vec lb, ub;  // overrides for binary variables only (stored dense for simplicity)
};

struct BnbOrder {
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // smaller bound first
        return a.id > b.id;
    }
};

}  // namespace detail

inline MilpResult solve_milp(const MixedBinaryProgram& p, const MilpOptions& opts = MilpOptions{},
                             const Settings& st = Settings{}) {
    const int n = p.lp.num_vars();
    for (int j : p.binaries) {
        if (j < 0 || j >= n) throw Error("milp_index", "binary index out of range");
        if (p.lp.lb[j] < -1e-9 || p.lp.ub[j] > 1.0 + 1e-9)
            throw Error("milp_bounds", "binary variable bounds must lie in [0,1]");
    }
    const bool trace = std::getenv("DDCRO_ORACLE_TRACE") != nullptr;

    MilpResult best;
    best.status = MilpStatus::infeasible;
    double incumbent = kInf;

    std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>, detail::BnbOrder> open;
    long next_id = 0;
    open.push({-kInf, next_id++, p.lp.lb, p.lp.ub});

    LinearProgram node_lp = p.lp;
    double global_bound = -kInf;
    bool hit_node_limit = false;

    while (!open.empty()) {
        detail::BnbNode node = open.top();
        open.pop();
        if (node.bound >= incumbent - opts.gap_tol * (1.0 + std::abs(incumbent))) {
            // best-first: every remaining node is at least as bad
            global_bound = std::max(global_bound, node.bound);
            break;
        }
        if (best.nodes >= opts.node_limit) {
            hit_node_limit = true;
            global_bound = std::min(incumbent, node.bound);
            break;
        }
        ++best.nodes;

        node_lp.lb = node.lb;
        node_lp.ub = node.ub;
        LpSolution rel = solve_lp(node_lp, st);
        if (rel.status == LpStatus::unbounded)
            throw Error("milp_unbounded", "LP relaxation is unbounded");
        if (rel.status == LpStatus::infeasible) {
            if (trace) std::cerr << "node " << best.nodes << " infeasible\n";
            continue;
        }
        const double bound = rel.objective;
        if (trace)
            std::cerr << "node " << best.nodes << " bound " << bound << " incumbent " << incumbent
                      << "\n";
        if (bound >= incumbent - opts.gap_tol * (1.0 + std::abs(incumbent))) continue;

        // most fractional binary (closest to 1/2), ties toward lower index
        int branch = -1;
        double best_score = -1.0;
        for (int j : p.binaries) {
            const double v = rel.x[j];
            if (node.ub[j] - node.lb[j] < 0.5) {
                // fixed by an ancestor; a violated fix is a solver defect,
                // not something to branch around
                if (std::abs(v - node.lb[j]) > 1e-6)
                    throw Error("lp_accuracy", "relaxation violates a fixed binary bound");
                continue;
            }
            if (std::abs(v - std::round(v)) <= 1e-6) continue;
            const double score = 0.5 - std::abs(v - 0.5);
            if (score > best_score + 1e-12) {
                best_score = score;
                branch = j;
            }
        }
        if (branch < 0) {
            // integral point
            if (bound < incumbent) {
                incumbent = bound;
                best.primal = rel.x;
                for (int j : p.binaries) best.primal[j] = std::round(best.primal[j]);
                best.objective = bound;
                best.status = MilpStatus::optimal;
            }
            continue;
        }
        detail::BnbNode down{bound, next_id++, node.lb, node.ub};
        down.ub[branch] = 0.0;
        detail::BnbNode up{bound, next_id++, node.lb, node.ub};
        up.lb[branch] = 1.0;
        open.push(std::move(down));
        open.push(std::move(up));
    }

    if (best.status == MilpStatus::infeasible) {
        if (hit_node_limit) {
            best.status = MilpStatus::gap_not_closed;
            best.bound = global_bound;
        }
        return best;
    }
    // Proven bound: min over closed/open frontier; with best-first either the
    // break condition or emptiness certifies incumbent - bound <= gap.
    if (hit_node_limit) {
        best.status = MilpStatus::gap_not_closed;
        best.bound = global_bound;
    } else {
        best.bound = std::max(global_bound, incumbent - opts.gap_tol * (1.0 + std::abs(incumbent)));
        best.bound = std::min(best.bound, incumbent);
        best.status = MilpStatus::optimal;
    }
    return best;
}

// Maximization convenience: negate at the boundary.
inline MilpResult solve_milp_max(const MixedBinaryProgram& p, const MilpOptions& opts = MilpOptions{},
                                 const Settings& st = Settings{}) {
    MixedBinaryProgram neg = p;
    for (double& v : neg.lp.c) v = -v;
    MilpResult r = solve_milp(neg, opts, st);
    r.objective = -r.objective;
    r.bound = -r.bound;
    return r;
}

}  // namespace ddcro

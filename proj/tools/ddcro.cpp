// Command-line front end: set geometry queries, single oracle evaluations,
// full master-oracle solves with pool persistence, and the rolling-horizon
// energy experiment. Data goes to stdout as JSON (or CSV files on disk),
// logs and errors go to stderr; errors are single-line JSON objects.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ddcro/ccg.hpp"
#include "ddcro/energy.hpp"

namespace fs = std::filesystem;
using namespace ddcro;

namespace {

int exit_code_for(const std::string& code) {
    if (code == "infeasible" || code == "incomplete_recourse" || code == "empty_set" ||
        code == "dual_empty")
        return 2;
    if (code == "iteration_limit" || code == "oracle_gap" || code == "lp_stalled" ||
        code == "ccg_stall" || code == "bigm" || code == "period_unsolved")
        return 3;
    return 1;
}

[[noreturn]] void fail(const std::string& code, const std::string& message) {
    json e;
    e["error"] = code;
    e["message"] = message;
    std::cerr << e.dump() << "\n";
    std::exit(exit_code_for(code));
}

json solution_to_json(const Solution& s) {
    json j;
    j["status"] = to_string(s.status);
    j["z"] = jsd::vec_to_json(s.z);
    j["objective"] = s.objective;
    j["alpha"] = s.alpha;
    j["lb_trace"] = jsd::vec_to_json(s.lb_trace);
    j["ub_trace"] = jsd::vec_to_json(s.ub_trace);
    j["iterations"] = s.iterations;
    return j;
}

json oracle_result_to_json(const OracleResult& r) {
    json j;
    j["value"] = r.value;
    j["pi"] = jsd::vec_to_json(r.pi);
    j["theta"] = jsd::vec_to_json(r.theta);
    j["h_star"] = jsd::vec_to_json(r.h_star);
    j["T_star"] = jsd::mat_to_json(r.T_star);
    j["rho"] = r.rho;
    j["gamma"] = jsd::vec_to_json(r.gamma_vec);
    j["nodes"] = r.nodes;
    return j;
}

ContextQuery load_query(const std::string& path, const std::string& norm_flag,
                        std::optional<double> gamma_flag, std::optional<double> delta_flag) {
    ContextQuery q = load_context(path);
    if (!norm_flag.empty()) q.norm = norm_from(norm_flag);
    if (gamma_flag) {
        q.gamma = *gamma_flag;
    }
    if (delta_flag) {
        q.delta = *delta_flag;
        if (!gamma_flag) q.gamma.reset();
    }
    return q;
}

int status_exit(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return 0;
        case SolveStatus::infeasible: return 2;
        case SolveStatus::iteration_limit: return 3;
    }
    return 1;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("io", "cannot write " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven contextual robust optimization toolkit"};
    app.set_config("--config", "", "read options from a JSON/INI config file");
    app.require_subcommand(1);

    // ---- gamma0
    auto* cmd_g0 = app.add_subcommand("gamma0", "distance from a context to the covariate hull");
    std::string g0_problem, g0_context, g0_norm;
    cmd_g0->add_option("--problem", g0_problem, "problem JSON")->required();
    cmd_g0->add_option("--context", g0_context, "context JSON")->required();
    cmd_g0->add_option("--norm", g0_norm, "inf or one (overrides the context file)");

    // ---- oracle
    auto* cmd_or = app.add_subcommand("oracle", "evaluate the worst-case recourse at a point");
    std::string or_problem, or_context, or_z, or_method = "d", or_norm;
    std::optional<double> or_gamma, or_delta;
    cmd_or->add_option("--problem", or_problem, "problem JSON")->required();
    cmd_or->add_option("--context", or_context, "context JSON")->required();
    cmd_or->add_option("--z", or_z, "first-stage point JSON ({\"z\": [...]})")->required();
    cmd_or->add_option("--method", or_method, "p, d or brute")->check(CLI::IsMember({"p", "d", "brute"}));
    cmd_or->add_option("--norm", or_norm, "inf or one");
    cmd_or->add_option("--gamma", or_gamma, "explicit budget");
    cmd_or->add_option("--delta", or_delta, "relative budget margin");

    // ---- solve
    auto* cmd_sv = app.add_subcommand("solve", "full master-oracle solve");
    std::string sv_problem, sv_context, sv_master = "contextual", sv_warm, sv_save_pool, sv_norm;
    std::optional<double> sv_gamma, sv_delta;
    double sv_gap = 1e-6;
    int sv_iters = 200;
    cmd_sv->add_option("--problem", sv_problem, "problem JSON")->required();
    cmd_sv->add_option("--context", sv_context, "context JSON")->required();
    cmd_sv->add_option("--master", sv_master, "classical or contextual")
        ->check(CLI::IsMember({"classical", "contextual"}));
    cmd_sv->add_option("--warm", sv_warm, "cut pool to warm start from");
    cmd_sv->add_option("--save-pool", sv_save_pool, "write the grown cut pool here");
    cmd_sv->add_option("--norm", sv_norm, "inf or one");
    cmd_sv->add_option("--gamma", sv_gamma, "explicit budget");
    cmd_sv->add_option("--delta", sv_delta, "relative budget margin");
    cmd_sv->add_option("--gap-tol", sv_gap, "relative convergence gap");
    cmd_sv->add_option("--max-iterations", sv_iters, "oracle call cap");

    // ---- energy
    auto* cmd_en = app.add_subcommand("energy", "hour-ahead scheduling experiment");
    cmd_en->require_subcommand(1);
    auto* cmd_run = cmd_en->add_subcommand("run", "rolling-horizon schedule");
    std::string en_network, en_history, en_out;
    int en_window = 48;
    double en_delta = 0.1;
    int en_start_hour = 0;
    long en_seed = 0;
    bool en_cold = false, en_uncond = false;
    cmd_run->add_option("--network", en_network, "network JSON")->required();
    cmd_run->add_option("--history", en_history, "history CSV (header, MW per renewable)")
        ->required();
    cmd_run->add_option("--window", en_window, "scenario window length");
    cmd_run->add_option("--delta", en_delta, "relative budget margin");
    cmd_run->add_option("--start-hour", en_start_hour, "hour of day of the first history row");
    cmd_run->add_option("--out", en_out, "output directory")->required();
    cmd_run->add_option("--seed", en_seed, "recorded in the run report");
    cmd_run->add_flag("--cold", en_cold, "disable warm starts");
    cmd_run->add_flag("--unconditional", en_uncond, "budget covering the whole hull");

    auto* cmd_eval = cmd_en->add_subcommand("eval", "out-of-sample evaluation");
    std::string ev_dir, ev_realized;
    cmd_eval->add_option("--schedules", ev_dir, "directory written by energy run")->required();
    cmd_eval->add_option("--realized", ev_realized, "realized output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_g0->parsed()) {
            TwoStageProblem p = load_problem(g0_problem);
            ContextQuery q = load_query(g0_context, g0_norm, std::nullopt, std::nullopt);
            const double g0 = gamma0(p.scenarios, q.x, q.norm);
            if (!std::isfinite(g0))
                fail("empty_set", "no scenario matches the categorical components");
            std::cout << json(g0).dump() << "\n";
            return 0;
        }
        if (cmd_or->parsed()) {
            TwoStageProblem p = load_problem(or_problem);
            ContextQuery q = load_query(or_context, or_norm, or_gamma, or_delta);
            json zdoc = jsd::load_file(or_z);
            Vec z = jsd::vec(zdoc.at("z"), "z");
            OracleResult r;
            if (or_method == "p") r = oracle_p_bilevel(p, z, q);
            else if (or_method == "brute") r = oracle_bruteforce(p, z, q);
            else r = oracle_d_bilevel(p, z, q);
            std::cout << oracle_result_to_json(r).dump() << "\n";
            return 0;
        }
        if (cmd_sv->parsed()) {
            TwoStageProblem p = load_problem(sv_problem);
            auto diags = validate_problem(p);
            if (!diags.empty()) fail("invalid_problem", diags[0].code + ": " + diags[0].message);
            ContextQuery q = load_query(sv_context, sv_norm, sv_gamma, sv_delta);
            CcgOptions opts;
            opts.gap_tol = sv_gap;
            opts.max_iterations = sv_iters;
            opts.master_kind =
                sv_master == "classical" ? MasterKind::classical : MasterKind::contextual;
            CcgOutput out;
            if (p.uncertainty_kind == UncertaintyKind::objective_q) {
                out.solution = solve_objective_uncertainty(p, q);
            } else if (!sv_warm.empty()) {
                CutPool pool = pool_load(sv_warm, p);
                out = warm_start_solve(p, q, pool, opts);
            } else {
                out = solve_ccg(p, q, opts);
            }
            if (!sv_save_pool.empty()) pool_save(out.pool, sv_save_pool);
            std::cout << solution_to_json(out.solution).dump() << "\n";
            return status_exit(out.solution.status);
        }
        if (cmd_run->parsed()) {
            NetworkInstance net = load_network(en_network);
            auto history = load_history_csv(en_history);
            RollingOptions opts;
            opts.delta = en_delta;
            opts.start_hour = en_start_hour;
            opts.warm_start = !en_cold;
            opts.unconditional = en_uncond;
            RollingResult run = rolling_run(net, history, en_window, opts);

            fs::create_directories(en_out);
            json sched = schedules_to_json(run, en_window, en_delta, en_start_hour);
            sched["seed"] = en_seed;
            write_text(en_out + "/schedules.json", sched.dump(2) + "\n");
            pool_save(run.pool, en_out + "/pool.json");
            std::ifstream netf(en_network);
            std::string netdoc((std::istreambuf_iterator<char>(netf)),
                               std::istreambuf_iterator<char>());
            write_text(en_out + "/network.json", netdoc);
            json summary;
            summary["periods"] = static_cast<int>(run.schedules.size());
            summary["total_oracle_calls"] = run.total_oracle_calls;
            summary["pool_size"] = run.pool.size();
            summary["out"] = en_out;
            summary["seed"] = en_seed;
            write_text(en_out + "/run_report.json", summary.dump(2) + "\n");
            std::cout << summary.dump() << "\n";
            return 0;
        }
        if (cmd_eval->parsed()) {
            NetworkInstance net = load_network(ev_dir + "/network.json");
            json sched = jsd::load_file(ev_dir + "/schedules.json");
            auto schedules = schedules_from_json(sched);
            auto realized = load_history_csv(ev_realized);
            if (realized.size() < schedules.size())
                fail("dim_realized", "realized series shorter than the schedule");
            realized.resize(schedules.size());
            OutOfSampleReport rep = evaluate_oos(net, schedules, realized);
            write_text(ev_dir + "/report.json", report_to_json(rep).dump(2) + "\n");
            std::ostringstream csv;
            report_to_csv(rep, csv);
            write_text(ev_dir + "/report.csv", csv.str());
            std::cout << report_to_json(rep).dump() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        fail(e.code(), e.what());
    } catch (const std::exception& e) {
        fail("internal", e.what());
    }
    return 1;
}

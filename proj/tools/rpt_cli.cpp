// rpt: generate instances, solve timetables, robustify and evaluate them.
// Exit codes: 0 success, 1 infeasible model, 2 I/O or configuration error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rpt/csv.hpp"
#include "rpt/eval.hpp"

namespace fs = std::filesystem;
using namespace rpt;

namespace {

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedInstance {
    csv::Config cfg;
    PeriodicEan ean;
    UncertaintySet unc;
};

LoadedInstance load_instance(const fs::path& dir) {
    LoadedInstance li;
    li.cfg = csv::read_config(dir / "config.csv");
    li.ean = csv::read_ean(dir, li.cfg.period);
    auto errs = validate_ean(li.ean);
    if (!errs.empty())
        throw std::runtime_error("invalid instance: " + errs.front().message);
    li.unc = {li.cfg.sigma, li.cfg.rho, BudgetMode::at_most, 1.0};
    return li;
}

// changes below the cutoff are ignored while optimizing; the timetable still
// covers every event, so downstream steps keep the full network
PeriodicEan pruned(const LoadedInstance& li) {
    return apply_passenger_cutoff(li.ean, li.cfg.passenger_cutoff);
}

int cmd_generate(const std::string& kind, std::uint64_t seed, const fs::path& out) {
    auto inst = generate_instance(kind, seed);
    fs::create_directories(out);
    csv::write_ean(out, inst.ean);
    csv::Config cfg;
    cfg.period = inst.ean.period;
    cfg.sigma = inst.unc.sigma;
    cfg.rho = inst.unc.rho;
    cfg.horizon_lo = inst.horizon_lo;
    cfg.horizon_hi = inst.horizon_hi;
    cfg.passenger_cutoff = inst.passenger_cutoff;
    cfg.seed = seed;
    csv::write_config(out / "config.csv", cfg);
    std::cout << "wrote " << inst.ean.events.size() << " events, "
              << inst.ean.activities.size() << " activities to " << out.string()
              << "\n";
    return 0;
}

int cmd_solve_pesp(const fs::path& dir, const fs::path& out, double time_limit) {
    auto li = load_instance(dir);
    auto ean = pruned(li);
    auto pm = build_pesp(ean);
    pm.model.time_limit = time_limit;
    auto res = milp::solve(pm.model);
    if (res.status == milp::SolveStatus::infeasible)
        throw InfeasibleError("periodic timetabling model is infeasible");
    if (!res.has_incumbent())
        throw std::runtime_error("solver returned no timetable within the limit");
    auto tt = extract_timetable(ean, pm.vars, res.values);
    auto full = timetable_durations(li.ean, tt.time);
    if (!full.feasible())
        throw InfeasibleError("timetable violates a pruned activity window");
    csv::write_timetable(out, li.ean, full.tt);
    std::cout << "objective " << res.objective << "\n";
    return 0;
}

int cmd_solve_match(const fs::path& dir, const fs::path& out) {
    auto li = load_instance(dir);
    auto tt = match_heuristic(pruned(li));
    auto full = timetable_durations(li.ean, tt.time);
    if (!full.feasible())
        throw InfeasibleError("match timetable violates a pruned activity window");
    csv::write_timetable(out, li.ean, full.tt);
    std::cout << "objective " << nominal_travel_time(li.ean, full.tt) << "\n";
    return 0;
}

int cmd_robustify(const fs::path& dir, const fs::path& out_tt, const fs::path& out_trace,
                  bool frpt, const RobustOptions& opt) {
    auto li = load_instance(dir);
    auto ean = pruned(li);
    Scenario zero = Scenario::zeros(ean.events.size(), ean.activities.size());
    RobustResult res;
    try {
        res = frpt ? cutting_plane(ean, li.unc, zero, opt)
                   : iterative_heuristic(ean, li.unc, zero, opt);
    } catch (const std::runtime_error& e) {
        if (std::string(e.what()).find("infeasible") != std::string::npos)
            throw InfeasibleError(e.what());
        throw;
    }
    auto full = timetable_durations(li.ean, res.timetable.time);
    if (!full.feasible())
        throw InfeasibleError("robust timetable violates a pruned activity window");
    csv::write_timetable(out_tt, li.ean, full.tt);
    csv::write_trace(out_trace, res.state);
    std::cout << (frpt ? "ub " : "lb ") << res.bound << " after "
              << res.state.trace.size() << " iterations\n";
    return 0;
}

int cmd_rollout(const fs::path& dir, const fs::path& tt_path, const fs::path& out) {
    auto li = load_instance(dir);
    auto times = csv::read_timetable(tt_path, li.ean);
    auto res = timetable_durations(li.ean, times);
    if (!res.feasible()) throw InfeasibleError("timetable violates an activity window");
    if (li.cfg.horizon_hi - li.cfg.horizon_lo < li.cfg.period)
        std::cerr << "warning: horizon shorter than one period\n";
    auto aper = rollout(li.ean, res.tt, li.cfg.horizon_lo, li.cfg.horizon_hi);
    fs::create_directories(out);
    std::ofstream ev(out / "rolled_events.csv");
    ev << "id;time\n";
    for (const auto& e : aper.events)
        ev << li.ean.events[e.base].id << "#" << e.rep << ";" << e.time << "\n";
    std::ofstream ac(out / "rolled_activities.csv");
    ac << "id;source;target;duration\n";
    for (const auto& a : aper.activities)
        ac << li.ean.activities[a.base].id << ";"
           << li.ean.events[aper.events[a.source].base].id << "#"
           << aper.events[a.source].rep << ";"
           << li.ean.events[aper.events[a.target].base].id << "#"
           << aper.events[a.target].rep << ";" << a.duration << "\n";
    std::cout << "rolled out " << aper.events.size() << " events, "
              << aper.activities.size() << " activities\n";
    return 0;
}

EvalReport eval_timetable(const LoadedInstance& li, const std::vector<int>& times,
                          const std::string& name, int n_scenarios, double horizon_hi) {
    auto res = timetable_durations(li.ean, times);
    if (!res.feasible()) throw InfeasibleError("timetable violates an activity window");
    auto rep = evaluate(li.ean, res.tt, li.unc, li.cfg.horizon_lo, horizon_hi,
                        n_scenarios, li.cfg.seed);
    rep.algorithm = name;
    return rep;
}

int cmd_evaluate(const fs::path& dir, const fs::path& tt_path, double horizon,
                 int n_scenarios, const fs::path& out) {
    auto li = load_instance(dir);
    auto times = csv::read_timetable(tt_path, li.ean);
    auto rep = eval_timetable(li, times, "timetable", n_scenarios,
                              li.cfg.horizon_lo + horizon);
    std::ofstream o(out);
    if (!o) throw std::runtime_error("cannot open " + out.string());
    o << "scenario;delayed_travel_time\n";
    for (std::size_t i = 0; i < rep.delayed_travel_time.size(); ++i)
        o << i << ";" << rep.delayed_travel_time[i] << "\n";
    std::cout << "nominal " << rep.nominal_travel_time << " avg-delayed "
              << rep.avg_delayed << "\n";
    return 0;
}

int cmd_compare(const fs::path& dir, const std::vector<std::string>& algorithms,
                int n_scenarios, const RobustOptions& opt, const fs::path& out) {
    auto li = load_instance(dir);
    auto ean = pruned(li);
    Scenario zero = Scenario::zeros(ean.events.size(), ean.activities.size());
    std::vector<EvalReport> reports;
    for (const auto& alg : algorithms) {
        Timetable tt;
        if (alg == "match") {
            tt = match_heuristic(ean);
        } else if (alg == "pesp") {
            auto pm = build_pesp(ean);
            pm.model.time_limit = opt.step_time_limit;
            auto res = milp::solve(pm.model);
            if (!res.has_incumbent()) throw InfeasibleError("pesp infeasible");
            tt = extract_timetable(ean, pm.vars, res.values);
        } else if (alg == "frpt") {
            tt = cutting_plane(ean, li.unc, zero, opt).timetable;
        } else if (alg == "rpts") {
            tt = iterative_heuristic(ean, li.unc, zero, opt).timetable;
        } else {
            throw std::runtime_error("unknown algorithm '" + alg + "'");
        }
        reports.push_back(
            eval_timetable(li, tt.time, alg, n_scenarios, li.cfg.horizon_hi));
    }
    fs::create_directories(out);
    std::ofstream nom(out / "nominal.csv"), del(out / "delayed.csv"),
        pas(out / "passenger_delay.csv"), text(out / "comparison.txt");
    write_comparison(nom, del, pas, text, reports);
    std::ifstream back(out / "comparison.txt");
    std::cout << back.rdbuf();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-robust periodic timetabling toolkit"};
    app.require_subcommand(1);
    int jobs = 1;  // solves run through one backend; kept as a cap
    app.add_option("--jobs", jobs, "max concurrent solves")->check(CLI::PositiveNumber);

    std::string kind = "toy", instance = ".", timetable, algorithms = "match,frpt,rpts";
    std::uint64_t seed = 1;
    std::string out;
    double horizon = 480;
    int n_scenarios = 10;
    RobustOptions opt;

    auto* gen = app.add_subcommand("generate", "write a synthetic instance directory");
    gen->add_option("--kind", kind, "toy | grid | bahn");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", out, "output directory")->required();

    auto add_instance = [&](CLI::App* c) {
        c->add_option("--instance", instance, "instance directory")->required();
    };
    auto add_robust = [&](CLI::App* c) {
        c->add_option("--eps", opt.eps, "convergence gap");
        c->add_option("--max-iter", opt.iter_cap, "iteration cap");
        c->add_option("--step-time-limit", opt.step_time_limit, "seconds per solve");
        c->add_option("--iterations", opt.n_iterations, "sampling rounds");
        c->add_option("--samples", opt.n_samples, "scenarios per round");
        c->add_option("--mip-gap", opt.mip_gap, "relative MIP gap");
    };

    auto* pesp = app.add_subcommand("solve-pesp", "optimal periodic timetable");
    add_instance(pesp);
    pesp->add_option("--out", out, "timetable path");
    pesp->add_option("--time-limit", opt.step_time_limit, "solver seconds");

    auto* match = app.add_subcommand("solve-match", "zero-buffer matching heuristic");
    add_instance(match);
    match->add_option("--out", out, "timetable path");

    auto* frpt = app.add_subcommand("robustify-frpt", "cutting planes, no-wait strategy");
    add_instance(frpt);
    add_robust(frpt);
    frpt->add_option("--out", out, "timetable path");

    auto* rpts = app.add_subcommand("robustify-rpts", "sampled scenario pool");
    add_instance(rpts);
    add_robust(rpts);
    rpts->add_option("--out", out, "timetable path");

    auto* roll = app.add_subcommand("rollout", "expand over the config horizon");
    add_instance(roll);
    roll->add_option("--timetable", timetable, "timetable path");
    roll->add_option("--out", out, "output directory");

    auto* ev = app.add_subcommand("evaluate", "sample scenarios and solve DM");
    add_instance(ev);
    ev->add_option("--timetable", timetable, "timetable path");
    ev->add_option("--horizon", horizon, "rollout horizon length");
    ev->add_option("--scenarios", n_scenarios, "number of scenarios");
    ev->add_option("--out", out, "report path");

    auto* cmp = app.add_subcommand("compare", "run and evaluate several algorithms");
    add_instance(cmp);
    add_robust(cmp);
    cmp->add_option("--algorithms", algorithms, "comma list: match,pesp,frpt,rpts");
    cmp->add_option("--scenarios", n_scenarios, "number of scenarios");
    cmp->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const fs::path dir = instance;
    const fs::path tt_path = timetable.empty() ? dir / "timetable.csv" : fs::path(timetable);
    try {
        if (gen->parsed()) return cmd_generate(kind, seed, out);
        if (pesp->parsed())
            return cmd_solve_pesp(dir, out.empty() ? dir / "timetable.csv" : fs::path(out),
                                  opt.step_time_limit);
        if (match->parsed())
            return cmd_solve_match(dir, out.empty() ? dir / "timetable.csv" : fs::path(out));
        if (frpt->parsed() || rpts->parsed()) {
            fs::path tt_out = out.empty() ? dir / "timetable.csv" : fs::path(out);
            fs::path trace = tt_out.parent_path() / "trace.csv";
            return cmd_robustify(dir, tt_out, trace, frpt->parsed(), opt);
        }
        if (roll->parsed())
            return cmd_rollout(dir, tt_path, out.empty() ? dir / "rollout" : fs::path(out));
        if (ev->parsed())
            return cmd_evaluate(dir, tt_path, horizon, n_scenarios,
                                out.empty() ? dir / "report.csv" : fs::path(out));
        if (cmp->parsed()) {
            std::vector<std::string> algs;
            std::stringstream ss(algorithms);
            for (std::string part; std::getline(ss, part, ',');)
                if (!part.empty()) algs.push_back(part);
            return cmd_compare(dir, algs, n_scenarios, opt,
                               out.empty() ? dir / "comparison" : fs::path(out));
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "fixtures.hpp"
#include "rpt/robust.hpp"

using namespace rpt;

namespace {

// tau of the no-wait response; NaN when the change window cannot hold
double nw_tau(const PeriodicEan& ean, const Timetable& tt, const Scenario& s) {
    auto d = no_wait_propagate(ean, tt, s);
    if (!d.change_window_ok) return std::numeric_limits<double>::quiet_NaN();
    return tau(ean, tt, d);
}

// worst case over the half-step scenario grid (events + drive/wait acts)
double grid_worst(const PeriodicEan& ean, const Timetable& tt, double sigma,
                  double rho) {
    std::vector<std::size_t> domain;
    for (std::size_t i = 0; i < ean.events.size(); ++i) domain.push_back(i);
    for (std::size_t a = 0; a < ean.activities.size(); ++a)
        if (ean.activities[a].drive_wait()) domain.push_back(ean.events.size() + a);
    Scenario s = Scenario::zeros(ean.events.size(), ean.activities.size());
    double best = -std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, double)> rec = [&](std::size_t k, double left) {
        if (k == domain.size()) {
            double v = nw_tau(ean, tt, s);
            if (!std::isnan(v)) best = std::max(best, v);
            return;
        }
        double cap = std::min(sigma, left);
        for (double v = 0; v <= cap + 1e-9; v += 0.5) {
            double* slot = domain[k] < ean.events.size()
                               ? &s.event_delay[domain[k]]
                               : &s.activity_delay[domain[k] - ean.events.size()];
            *slot = v;
            rec(k + 1, left - v);
            *slot = 0;
        }
    };
    rec(0, rho);
    return best;
}

// exhaustive best timetable for a pooled-scenario master under no-wait
// responses (event 0 anchored; instances here are connected)
double brute_force_frpt(const PeriodicEan& ean, const std::vector<Scenario>& pool) {
    const int T = ean.period;
    const int n = (int)ean.events.size();
    std::vector<int> times(n, 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int)> rec = [&](int e) {
        if (e == n) {
            auto res = timetable_durations(ean, times);
            if (!res.feasible()) return;
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto& s : pool) {
                auto d = no_wait_propagate(ean, res.tt, s);
                worst = std::max(worst, tau(ean, res.tt, d));
            }
            best = std::min(best, worst);
            return;
        }
        for (int t = 0; t < T; ++t) {
            times[e] = t;
            rec(e + 1);
        }
    };
    rec(1);
    return best;
}

PeriodicEan two_line_toy(int period = 10) {
    PeriodicEan ean;
    ean.period = period;
    ean.events.push_back({"a_dep", EventKind::departure, "s0", "a", 1});
    ean.events.push_back({"a_arr", EventKind::arrival, "s1", "a", 1});
    ean.events.push_back({"b_dep", EventKind::departure, "s1", "b", 1});
    ean.events.push_back({"b_arr", EventKind::arrival, "s2", "b", 1});
    ean.activities.push_back({"dr_a", 0, 1, ActivityKind::drive, 3, 5, 1});
    ean.activities.push_back({"dr_b", 2, 3, ActivityKind::drive, 3, 5, 1});
    ean.activities.push_back({"ch", 1, 2, ActivityKind::change, 1, kUnboundedUpper, 2});
    ean.finish();
    return ean;
}

}  // namespace

TEST_CASE("fwc with zero budget returns the nominal travel time") {
    auto ean = two_line_toy();
    auto tt = match_heuristic(ean);
    UncertaintySet unc{0, 0, BudgetMode::at_most, 1.0};
    auto fm = build_fwc(ean, tt, unc);
    auto out = milp::solve(fm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    CHECK(out.objective == doctest::Approx(nominal_travel_time(ean, tt)));
}

TEST_CASE("fwc equals the grid worst case on the two-line toy") {
    auto ean = two_line_toy();
    auto tt = match_heuristic(ean);
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    auto fm = build_fwc(ean, tt, unc);
    auto out = milp::solve(fm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    CHECK(fm.model.check(out.values).empty());
    CHECK(out.objective == doctest::Approx(grid_worst(ean, tt, 3, 3)).epsilon(1e-4));

    // the extracted scenario is valid and its no-wait response attains the
    // reported objective
    Scenario s = extract_fwc_scenario(ean, fm, out.values);
    CHECK(check_scenario(ean, unc, s).empty());
    CHECK(nw_tau(ean, tt, s) == doctest::Approx(out.objective));
}

TEST_CASE("fwc equals the grid worst case on random instances") {
    int done = 0;
    for (std::uint64_t seed = 1; done < 5; ++seed) {
        auto ean = fixtures::small_random_ean(seed, 2, 10, 1);
        auto tt = match_heuristic(ean);
        if (ean.events.size() + ean.activities.size() > 12) continue;  // grid cost
        ++done;
        UncertaintySet unc{2, 2, BudgetMode::at_most, 1.0};
        auto fm = build_fwc(ean, tt, unc);
        auto out = milp::solve(fm.model);
        REQUIRE(out.status == milp::SolveStatus::optimal);
        CHECK(fm.model.check(out.values).empty());
        CHECK(out.objective == doctest::Approx(grid_worst(ean, tt, 2, 2)).epsilon(1e-4));
        Scenario s = extract_fwc_scenario(ean, fm, out.values);
        CHECK(nw_tau(ean, tt, s) == doctest::Approx(out.objective));
    }
}

TEST_CASE("concentrating the budget on an unprotected drive") {
    // single line, zero slack: delaying the first drive by rho delays every
    // downstream event by rho
    PeriodicEan ean;
    ean.period = 60;
    ean.events.push_back({"d0", EventKind::departure, "s0", "l", 1});
    ean.events.push_back({"a1", EventKind::arrival, "s1", "l", 2});
    ean.events.push_back({"d1", EventKind::departure, "s1", "l", 3});
    ean.events.push_back({"a2", EventKind::arrival, "s2", "l", 4});
    ean.activities.push_back({"dr0", 0, 1, ActivityKind::drive, 10, 10, 5});
    ean.activities.push_back({"wt", 1, 2, ActivityKind::wait, 2, 2, 1});
    ean.activities.push_back({"dr1", 2, 3, ActivityKind::drive, 8, 8, 1});
    ean.finish();
    auto res = timetable_durations(ean, {0, 10, 12, 20});
    REQUIRE(res.feasible());
    UncertaintySet unc{5, 5, BudgetMode::at_most, 1.0};
    auto fm = build_fwc(ean, res.tt, unc);
    auto out = milp::solve(fm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    // worst case: 5 minutes on dr0 -> d_a(dr0) = 5, departure s1 delayed 5
    // tau grows by rho * (w_dr0 + w_dep_s1) = 5 * (5 + 3)
    CHECK(out.objective ==
          doctest::Approx(nominal_travel_time(ean, res.tt) + 5 * (5 + 3)));
}

TEST_CASE("frpt master over the nominal pool reduces to pesp") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    Scenario zero = Scenario::zeros(4, 3);
    auto mm = build_frpt_master(ean, {zero}, unc);
    auto out = milp::solve(mm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    auto pm = build_pesp(ean);
    auto po = milp::solve(pm.model);
    REQUIRE(po.status == milp::SolveStatus::optimal);
    CHECK(out.objective == doctest::Approx(po.objective).epsilon(1e-6));
}

TEST_CASE("frpt master matches brute force on a two-scenario pool") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    Scenario s1 = Scenario::zeros(4, 3);
    s1.activity_delay[0] = 3;
    Scenario s2 = Scenario::zeros(4, 3);
    s2.event_delay[2] = 2;
    s2.activity_delay[1] = 1;

    auto mm = build_frpt_master(ean, {s1, s2}, unc);
    auto out = milp::solve(mm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    CHECK(mm.model.check(out.values).empty());
    CHECK(out.objective == doctest::Approx(brute_force_frpt(ean, {s1, s2})).epsilon(1e-6));

    // growing the pool never helps the master
    Scenario s3 = Scenario::zeros(4, 3);
    s3.activity_delay[1] = 3;
    auto mm3 = build_frpt_master(ean, {s1, s2, s3}, unc);
    auto out3 = milp::solve(mm3.model);
    REQUIRE(out3.status == milp::SolveStatus::optimal);
    CHECK(out3.objective >= out.objective - 1e-6);
}

TEST_CASE("rpt master over the nominal pool reduces to pesp") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    auto mm = build_rpt_master(ean, {Scenario::zeros(4, 3)}, unc);
    auto out = milp::solve(mm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    auto pm = build_pesp(ean);
    auto po = milp::solve(pm.model);
    REQUIRE(po.status == milp::SolveStatus::optimal);
    CHECK(out.objective == doctest::Approx(po.objective).epsilon(1e-6));
}

TEST_CASE("rpt master matches the pi-by-pi optimum on a singleton pool") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    Scenario s = Scenario::zeros(4, 3);
    s.activity_delay[0] = 3;

    auto mm = build_rpt_master(ean, {s}, unc);
    auto out = milp::solve(mm.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    CHECK(mm.model.check(out.values).empty());

    // oracle: enumerate timetables, solve the periodic DM per timetable
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> times(4, 0);
    for (int t1 = 0; t1 < 10; ++t1)
        for (int t2 = 0; t2 < 10; ++t2)
            for (int t3 = 0; t3 < 10; ++t3) {
                times[1] = t1;
                times[2] = t2;
                times[3] = t3;
                auto res = timetable_durations(ean, times);
                if (!res.feasible()) continue;
                auto pm = build_pdm(ean, res.tt, s);
                auto po = milp::solve(pm.model);
                REQUIRE(po.status == milp::SolveStatus::optimal);
                best = std::min(best,
                                nominal_travel_time(ean, res.tt) + po.objective);
            }
    CHECK(out.objective == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("rpt master is at most the frpt master on the same pool") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto ean = fixtures::small_random_ean(seed, 2, 10, 1);
        UncertaintySet unc{2, 2, BudgetMode::at_most, 1.0};
        std::vector<Scenario> pool{Scenario::zeros(ean.events.size(),
                                                   ean.activities.size()),
                                   sample_scenario(ean, unc, seed * 31)};
        auto rm = build_rpt_master(ean, pool, unc);
        auto fm = build_frpt_master(ean, pool, unc);
        auto ro = milp::solve(rm.model);
        auto fo = milp::solve(fm.model);
        REQUIRE(ro.status == milp::SolveStatus::optimal);
        REQUIRE(fo.status == milp::SolveStatus::optimal);
        CHECK(ro.objective <= fo.objective + 1e-6);
    }
}

TEST_CASE("cutting plane with infinite eps stops after one iteration") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    RobustOptions opt;
    opt.eps = std::numeric_limits<double>::infinity();
    auto res = cutting_plane(ean, unc, Scenario::zeros(4, 3), opt);
    CHECK(res.state.trace.size() == 1);
    CHECK(res.state.converged);
    // master over the nominal pool only: pesp optimum
    auto pm = build_pesp(ean);
    auto po = milp::solve(pm.model);
    CHECK(res.state.trace[0].lb == doctest::Approx(po.objective).epsilon(1e-6));
}

TEST_CASE("cutting plane converges to the min-max value on the toy") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    RobustOptions opt;
    opt.eps = 1e-3;
    auto res = cutting_plane(ean, unc, Scenario::zeros(4, 3), opt);
    REQUIRE(res.state.converged);

    // oracle: min over timetables of the grid worst case
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> times(4, 0);
    for (int t1 = 0; t1 < 10; ++t1)
        for (int t2 = 0; t2 < 10; ++t2)
            for (int t3 = 0; t3 < 10; ++t3) {
                times[1] = t1;
                times[2] = t2;
                times[3] = t3;
                auto r = timetable_durations(ean, times);
                if (!r.feasible()) continue;
                best = std::min(best, grid_worst(ean, r.tt, 3, 3));
            }
    CHECK(res.bound == doctest::Approx(best).epsilon(1e-3));

    // the returned timetable's own worst case equals the reported bound
    CHECK(grid_worst(ean, res.timetable, 3, 3) ==
          doctest::Approx(res.bound).epsilon(1e-4));
}

TEST_CASE("cutting plane traces are monotone") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto ean = fixtures::small_random_ean(seed, 2, 10, 1);
        UncertaintySet unc{2, 2, BudgetMode::at_most, 1.0};
        RobustOptions opt;
        opt.eps = 1e-3;
        opt.iter_cap = 6;
        auto res = cutting_plane(
            ean, unc, Scenario::zeros(ean.events.size(), ean.activities.size()), opt);
        for (std::size_t k = 1; k < res.state.trace.size(); ++k) {
            CHECK(res.state.trace[k].lb >= res.state.trace[k - 1].lb - 1e-9);
            CHECK(res.state.trace[k].ub <= res.state.trace[k - 1].ub + 1e-9);
        }
        CHECK(res.state.pool.size() >= res.state.trace.size());
        if (res.state.converged) {
            const auto& last = res.state.trace.back();
            CHECK(last.ub - last.lb <= opt.eps + 1e-9);
        }
    }
}

TEST_CASE("heuristic with a single iteration returns the nominal master") {
    auto ean = two_line_toy();
    UncertaintySet unc{3, 3, BudgetMode::at_most, 1.0};
    RobustOptions opt;
    opt.n_iterations = 1;
    opt.n_samples = 10;
    opt.seed = 5;
    auto res = iterative_heuristic(ean, unc, Scenario::zeros(4, 3), opt);
    CHECK(res.state.trace.size() == 1);
    auto pm = build_pesp(ean);
    auto po = milp::solve(pm.model);
    CHECK(res.bound == doctest::Approx(po.objective).epsilon(1e-6));
}

TEST_CASE("heuristic lower bound stays below the cutting-plane upper bound") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto ean = fixtures::small_random_ean(seed, 2, 10, 1);
        UncertaintySet unc{2, 2, BudgetMode::at_most, 1.0};
        Scenario zero = Scenario::zeros(ean.events.size(), ean.activities.size());
        RobustOptions opt;
        opt.eps = 1e-3;
        opt.iter_cap = 8;
        auto cp = cutting_plane(ean, unc, zero, opt);
        RobustOptions hopt;
        hopt.n_iterations = 3;
        hopt.n_samples = 20;
        hopt.seed = seed;
        auto ih = iterative_heuristic(ean, unc, zero, hopt);
        CHECK(ih.bound <= cp.bound + 1e-6);
        CHECK(ih.state.pool.size() >= 1);
    }
}

TEST_CASE("zero budget reduces both algorithms to pesp") {
    auto ean = two_line_toy();
    UncertaintySet unc{0, 0, BudgetMode::at_most, 1.0};
    Scenario zero = Scenario::zeros(4, 3);
    auto pm = build_pesp(ean);
    auto po = milp::solve(pm.model);
    REQUIRE(po.status == milp::SolveStatus::optimal);

    RobustOptions opt;
    opt.eps = 1e-3;
    auto cp = cutting_plane(ean, unc, zero, opt);
    CHECK(nw_tau(ean, cp.timetable, zero) == doctest::Approx(po.objective).epsilon(1e-4));

    RobustOptions hopt;
    hopt.n_iterations = 2;
    hopt.n_samples = 5;
    auto ih = iterative_heuristic(ean, unc, zero, hopt);
    CHECK(nw_tau(ean, ih.timetable, zero) == doctest::Approx(po.objective).epsilon(1e-4));
}

#pragma once

// Robust timetabling: the fixed-strategy worst-case MIP, the scenario-pool
// masters, the cutting-plane loop and the sampling improvement heuristic.

#include <chrono>
#include <map>
#include <cstdint>
#include <functional>
#include <vector>

#include "rpt/dm.hpp"
#include "rpt/ean.hpp"
#include "rpt/milp.hpp"
#include "rpt/pesp.hpp"

namespace rpt {

struct FwcModel {
    milp::MilpModel model;
    std::vector<int> s_event;  // per event
    std::vector<int> s_act;    // per activity, -1 on changes
    std::vector<int> d_event;
    std::vector<int> d_act;
};

// Worst-case scenario for the no-wait strategy on a fixed timetable,
// maximizing tau over s in the budgeted uncertainty set. Binary z linearize
// the propagation max; change durations are pinned to [L_a, L_a + T - 1].
inline FwcModel build_fwc(const PeriodicEan& ean, const Timetable& tt,
                          const UncertaintySet& unc) {
    FwcModel fm;
    auto& m = fm.model;
    m.sense = milp::ObjSense::maximize;
    const int T = ean.period;

    std::vector<std::pair<int, double>> budget;
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        fm.s_event.push_back(m.add_var("s_" + ean.events[e].id,
                                       milp::VarDomain::continuous, 0, unc.sigma));
        budget.push_back({fm.s_event[e], 1.0});
    }
    fm.s_act.assign(ean.activities.size(), -1);
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        if (!ean.activities[a].drive_wait()) continue;  // no source delays on changes
        fm.s_act[a] = m.add_var("sa_" + ean.activities[a].id,
                                milp::VarDomain::continuous, 0, unc.sigma);
        budget.push_back({fm.s_act[a], 1.0});
    }
    m.add_con("budget", budget, milp::Sense::le, unc.rho);

    // per-event response cap: propagation is monotone in the source delays,
    // so saturating every element at sigma bounds the response for any
    // scenario in the set (independent of the budget)
    Scenario sat = Scenario::zeros(ean.events.size(), ean.activities.size());
    for (auto& v : sat.event_delay) v = unc.sigma;
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        if (ean.activities[a].drive_wait()) sat.activity_delay[a] = unc.sigma;
    std::vector<double> dub = no_wait_propagate(ean, tt, sat).event_delay;
    for (auto& v : dub) v = std::min(v, unc.rho);

    for (int e = 0; e < (int)ean.events.size(); ++e) {
        double w = ean.events[e].kind == EventKind::departure ? ean.events[e].weight : 0.0;
        fm.d_event.push_back(m.add_var("d_" + ean.events[e].id,
                                       milp::VarDomain::continuous, 0, dub[e], w));
        // d_i >= s_i  (P-DM-1)
        m.add_con("dom_" + ean.events[e].id,
                  {{fm.d_event[e], 1.0}, {fm.s_event[e], -1.0}}, milp::Sense::ge, 0);
    }
    for (int e : ean.start_events())
        m.add_con("start_" + ean.events[e].id,
                  {{fm.d_event[e], 1.0}, {fm.s_event[e], -1.0}}, milp::Sense::eq, 0);

    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        int da = m.add_var("da_" + act.id, milp::VarDomain::continuous,
                           -milp::kInf, milp::kInf, act.weight);
        fm.d_act.push_back(da);
        int di = fm.d_event[act.source], dj = fm.d_event[act.target];
        if (act.drive_wait()) {
            m.add_con("def_" + act.id, {{da, 1.0}, {dj, -1.0}, {di, 1.0}},
                      milp::Sense::eq, 0);
            double slack = tt.slack(ean, a);
            int sa = fm.s_act[a];
            // d_j >= d_i + s_a - slack
            m.add_con("prop_" + act.id, {{dj, 1.0}, {di, -1.0}, {sa, -1.0}},
                      milp::Sense::ge, -slack);
            int z = m.add_var("zb_" + act.id, milp::VarDomain::binary, 0, 1);
            // -M z + d_j <= d_i + s_a - slack; d_j <= dub_j bounds the left side
            double Mt = dub[act.target] + slack;
            m.add_con("tight_" + act.id,
                      {{z, -Mt}, {dj, 1.0}, {di, -1.0}, {sa, -1.0}},
                      milp::Sense::le, -slack);
            // d_j <= M (1 - z) + s_j
            double Ms = dub[act.target];
            m.add_con("snap_" + act.id,
                      {{dj, 1.0}, {z, Ms}, {fm.s_event[act.target], -1.0}},
                      milp::Sense::le, Ms);
        } else {
            double dloc = std::max(dub[act.source], dub[act.target]);
            double zr = std::ceil((dloc + 2.0 * T) / T) + 1;
            int z = m.add_var("zc_" + act.id, milp::VarDomain::integer, -zr, zr);
            m.add_con("def_" + act.id,
                      {{da, 1.0}, {dj, -1.0}, {di, 1.0}, {z, -(double)T}},
                      milp::Sense::eq, 0);
            // L_a <= pi_a + d_a <= L_a + T - 1
            m.add_con("wlo_" + act.id, {{da, 1.0}}, milp::Sense::ge,
                      act.lower - tt.duration[a]);
            m.add_con("whi_" + act.id, {{da, 1.0}}, milp::Sense::le,
                      act.lower + T - 1 - tt.duration[a]);
        }
    }
    // objective offset: sum w_a pi_a
    m.objective_offset = nominal_travel_time(ean, tt);
    return fm;
}

inline Scenario extract_fwc_scenario(const PeriodicEan& ean, const FwcModel& fm,
                                     const std::vector<double>& x) {
    Scenario s = Scenario::zeros(ean.events.size(), ean.activities.size());
    for (int e = 0; e < (int)ean.events.size(); ++e)
        s.event_delay[e] = std::max(0.0, x[fm.s_event[e]]);
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        if (fm.s_act[a] >= 0) s.activity_delay[a] = std::max(0.0, x[fm.s_act[a]]);
    return s;
}

struct MasterModel {
    milp::MilpModel model;
    TimetableVars vars;
    int t = -1;
};

namespace detail {

// Pins every activity's period offset z_a to the one realized by a base
// timetable. Durations (and hence buffers and window positions) stay free;
// only the mod-T line alignment is inherited. Restricting the master this
// way trades optimality for tractability: the base timetable remains
// feasible, so the master's value is an upper bound on the exact one.
inline void fix_offsets(milp::MilpModel& m, const PeriodicEan& ean,
                        const TimetableVars& tv, const Timetable& base) {
    const int T = ean.period;
    // normalize to the master's anchoring (lowest event index per component
    // at 0) so the base timetable itself stays feasible under the fixed z
    auto comp = ean.components();
    std::map<int, int> shift;  // component -> anchor time
    for (int e = 0; e < (int)ean.events.size(); ++e)
        shift.try_emplace(comp[e], base.time[e]);
    std::vector<int> t(ean.events.size());
    for (int e = 0; e < (int)ean.events.size(); ++e)
        t[e] = ((base.time[e] - shift[comp[e]]) % T + T) % T;
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        double z0 = std::llround((base.duration[a] - (t[act.target] - t[act.source])) /
                                 (double)T);
        m.set_bounds(tv.z[a], z0, z0);
    }
}

// Boxes every event time to within `box` minutes of the base timetable
// (normalized like fix_offsets). Complements fix_offsets: with offsets
// pinned, feasible timetables only drift from the base by accumulated
// buffer placement, so a modest box keeps the optimum while shrinking the
// search space considerably.
inline void box_times(milp::MilpModel& m, const PeriodicEan& ean,
                      const TimetableVars& tv, const Timetable& base, double box) {
    const int T = ean.period;
    auto comp = ean.components();
    std::map<int, int> shift;
    for (int e = 0; e < (int)ean.events.size(); ++e)
        shift.try_emplace(comp[e], base.time[e]);
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        double t = ((base.time[e] - shift[comp[e]]) % T + T) % T;
        double lo = std::max(m.vars()[tv.pi[e]].lb, t - box);
        double hi = std::min(m.vars()[tv.pi[e]].ub, t + box);
        m.set_bounds(tv.pi[e], lo, hi);
    }
}

// Floors every drive/wait duration at the base timetable's: the master may
// only add buffer, never tighten below the anchor. Keeps the anchor (and all
// of its paddings) feasible while guaranteeing the result's nominal travel
// time is at least the anchor's.
inline void floor_durations(milp::MilpModel& m, const PeriodicEan& ean,
                            const TimetableVars& tv, const Timetable& base) {
    const int T = ean.period;
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        if (!act.drive_wait()) continue;
        m.add_con("mono_" + act.id,
                  {{tv.pi[act.target], 1.0}, {tv.pi[act.source], -1.0},
                   {tv.z[a], (double)T}},
                  milp::Sense::ge, base.duration[a]);
    }
}

// milp::solve throws when the time limit expires before any incumbent; the
// robust loops prefer to retry once with a doubled budget.
inline milp::SolveOutcome solve_with_retry(milp::MilpModel& m) {
    try {
        return milp::solve(m);
    } catch (const std::runtime_error&) {
        if (!std::isfinite(m.time_limit)) throw;
        m.time_limit *= 2;
        return milp::solve(m);
    }
}

// tau row: t - sum_a w_a (pi_a + d_a) - sum_dep w_i d_i >= 0 plus the
// constant-free pi_a expansion.
inline void add_tau_cut(milp::MilpModel& m, const PeriodicEan& ean,
                        const TimetableVars& tv, int t,
                        const std::vector<int>& d_event, const std::vector<int>& d_act,
                        const std::string& tag) {
    const int T = ean.period;
    std::vector<double> coef(m.vars().size(), 0.0);
    coef[t] += 1.0;
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        coef[tv.pi[act.target]] -= act.weight;
        coef[tv.pi[act.source]] += act.weight;
        coef[tv.z[a]] -= act.weight * T;
        coef[d_act[a]] -= act.weight;
    }
    for (int e = 0; e < (int)ean.events.size(); ++e)
        if (ean.events[e].kind == EventKind::departure)
            coef[d_event[e]] -= ean.events[e].weight;
    std::vector<std::pair<int, double>> terms;
    for (int v = 0; v < (int)coef.size(); ++v)
        if (coef[v] != 0) terms.push_back({v, coef[v]});
    m.add_con("tau_" + tag, std::move(terms), milp::Sense::ge, 0);
}

}  // namespace detail

// Master with the no-wait recursion per pooled scenario (D'):
// min t s.t. t >= tau(pi, d_s), d_s the no-wait response to s under pi.
inline MasterModel build_frpt_master(const PeriodicEan& ean,
                                     const std::vector<Scenario>& pool,
                                     const UncertaintySet& unc) {
    MasterModel mm;
    auto& m = mm.model;
    const int T = ean.period;
    mm.vars = add_timetable_vars(m, ean);
    mm.t = m.add_var("t", milp::VarDomain::continuous, 0, milp::kInf, 1.0);

    for (std::size_t si = 0; si < pool.size(); ++si) {
        const Scenario& s = pool[si];
        const std::string tag = std::to_string(si);
        std::vector<int> d_event, d_act;
        // per-event bound: no-wait propagation with zero slack dominates the
        // response under any timetable (slack only absorbs delay)
        std::vector<double> ub0(s.event_delay);
        for (bool ch = true; ch;) {
            ch = false;
            for (const auto& act : ean.activities) {
                if (!act.drive_wait()) continue;
                double v = ub0[act.source] + s.activity_delay[&act - ean.activities.data()];
                if (v > ub0[act.target] + 1e-12) { ub0[act.target] = v; ch = true; }
            }
        }
        for (int e = 0; e < (int)ean.events.size(); ++e)
            d_event.push_back(m.add_var("d" + tag + "_" + ean.events[e].id,
                                        milp::VarDomain::continuous,
                                        s.event_delay[e], ub0[e]));
        for (int e : ean.start_events()) {
            auto v = d_event[e];
            m.add_con("start" + tag + "_" + ean.events[e].id, {{v, 1.0}},
                      milp::Sense::eq, s.event_delay[e]);
        }
        for (int a = 0; a < (int)ean.activities.size(); ++a) {
            const auto& act = ean.activities[a];
            int da = m.add_var("da" + tag + "_" + act.id, milp::VarDomain::continuous,
                               -milp::kInf, milp::kInf);
            d_act.push_back(da);
            int di = d_event[act.source], dj = d_event[act.target];
            std::vector<std::pair<int, double>> pi_a{{mm.vars.pi[act.target], 1.0},
                                                     {mm.vars.pi[act.source], -1.0},
                                                     {mm.vars.z[a], (double)T}};
            if (act.drive_wait()) {
                m.add_con("def" + tag + "_" + act.id, {{da, 1.0}, {dj, -1.0}, {di, 1.0}},
                          milp::Sense::eq, 0);
                // d_j - d_i + pi_a >= L_a + s_a  (propagation with variable slack)
                auto row = pi_a;
                row.push_back({dj, 1.0});
                row.push_back({di, -1.0});
                m.add_con("prop" + tag + "_" + act.id, row, milp::Sense::ge,
                          act.lower + s.activity_delay[a]);
                int z = m.add_var("zb" + tag + "_" + act.id, milp::VarDomain::binary, 0, 1);
                // d_j - d_i + pi_a - M z <= L_a + s_a
                // with d_j <= ub0_j, d_i >= 0, pi_a <= U_a the left side is at
                // most ub0_j + U_a, so this M suffices
                double Mt = ub0[act.target] + act.upper - act.lower;
                auto tight = pi_a;
                tight.push_back({dj, 1.0});
                tight.push_back({di, -1.0});
                tight.push_back({z, -Mt});
                m.add_con("tight" + tag + "_" + act.id, tight, milp::Sense::le,
                          act.lower + s.activity_delay[a]);
                // d_j <= M (1 - z) + s_j, and d_j - s_j <= ub0_j
                double Ms = ub0[act.target];
                m.add_con("snap" + tag + "_" + act.id, {{dj, 1.0}, {z, Ms}},
                          milp::Sense::le, Ms + s.event_delay[act.target]);
            } else {
                double dloc = std::max(ub0[act.source], ub0[act.target]);
                double zr = std::ceil((dloc + 2.0 * T) / T) + 1;
                int z = m.add_var("zc" + tag + "_" + act.id, milp::VarDomain::integer,
                                  -zr, zr);
                m.add_con("def" + tag + "_" + act.id,
                          {{da, 1.0}, {dj, -1.0}, {di, 1.0}, {z, -(double)T}},
                          milp::Sense::eq, 0);
                // pi_a + d_a >= L_a; minimization picks the minimal
                // representative, so the window's upper side is left out
                // (it can only cut fractional pooled scenarios infeasible)
                auto lo = pi_a;
                lo.push_back({da, 1.0});
                m.add_con("wlo" + tag + "_" + act.id, lo, milp::Sense::ge, act.lower);
            }
        }
        detail::add_tau_cut(m, ean, mm.vars, mm.t, d_event, d_act, tag);
    }
    return mm;
}

// Master with full P-DM response per pooled scenario (D): optimal delay
// management instead of the fixed strategy.
inline MasterModel build_rpt_master(const PeriodicEan& ean,
                                    const std::vector<Scenario>& pool,
                                    const UncertaintySet& unc) {
    MasterModel mm;
    auto& m = mm.model;
    const int T = ean.period;
    mm.vars = add_timetable_vars(m, ean);
    mm.t = m.add_var("t", milp::VarDomain::continuous, 0, milp::kInf, 1.0);

    for (std::size_t si = 0; si < pool.size(); ++si) {
        const Scenario& s = pool[si];
        const std::string tag = std::to_string(si);
        // mirrors the P-DM response bound; a zero scenario has the all-zero
        // response outright (weights are nonnegative), so presolve can drop it
        double dmax = s.sum() > 0 ? s.sum() + 4.0 * T : 0.0;
        std::vector<int> d_event, d_act;
        for (int e = 0; e < (int)ean.events.size(); ++e)
            d_event.push_back(m.add_var("d" + tag + "_" + ean.events[e].id,
                                        milp::VarDomain::continuous,
                                        s.event_delay[e], dmax));
        for (int a = 0; a < (int)ean.activities.size(); ++a) {
            const auto& act = ean.activities[a];
            int da = m.add_var("da" + tag + "_" + act.id, milp::VarDomain::continuous,
                               -milp::kInf, milp::kInf);
            d_act.push_back(da);
            int di = d_event[act.source], dj = d_event[act.target];
            std::vector<std::pair<int, double>> def{{da, 1.0}, {dj, -1.0}, {di, 1.0}};
            if (!act.drive_wait()) {
                double zr = std::ceil((dmax + 2.0 * T) / T) + 1;
                int z = m.add_var("zc" + tag + "_" + act.id, milp::VarDomain::integer,
                                  -zr, zr);
                def.push_back({z, -(double)T});
            }
            m.add_con("def" + tag + "_" + act.id, std::move(def), milp::Sense::eq, 0);
            // pi_a + d_a >= L_a + s_a
            std::vector<std::pair<int, double>> row{{mm.vars.pi[act.target], 1.0},
                                                    {mm.vars.pi[act.source], -1.0},
                                                    {mm.vars.z[a], (double)T},
                                                    {da, 1.0}};
            m.add_con("lb" + tag + "_" + act.id, std::move(row), milp::Sense::ge,
                      act.lower + s.activity_delay[a]);
        }
        detail::add_tau_cut(m, ean, mm.vars, mm.t, d_event, d_act, tag);
    }
    return mm;
}

struct RobustRunState {
    struct Iteration {
        int k = 0;
        double lb = 0, ub = 0;
        double wall_seconds = 0;
        std::size_t pool_size = 0;
        milp::SolveStatus master_status = milp::SolveStatus::optimal;
        milp::SolveStatus pessimize_status = milp::SolveStatus::optimal;
    };
    std::vector<Iteration> trace;
    std::vector<Scenario> pool;
    bool converged = false;
};

struct RobustResult {
    Timetable timetable;
    double bound = 0;  // ub for the cutting plane, lb for the heuristic
    RobustRunState state;
};

struct RobustOptions {
    double eps = 1e-3;
    int iter_cap = 20;
    double step_time_limit = 60.0;  // per robustification / pessimization
    int n_iterations = 20;          // heuristic N
    int n_samples = 100;            // heuristic M
    double pdm_time_limit = 10.0;
    std::uint64_t seed = 1;
    double mip_gap = 1e-4;
    double pessimize_gap = 0.05;  // the pessimizer only needs a bad scenario
    double dedup_tol = 1e-9;
    // optional alignment anchor: masters keep this timetable's period
    // offsets and only re-allocate buffers and window slack (see
    // detail::fix_offsets); nullptr solves the exact masters
    const Timetable* align = nullptr;
    // with align set, additionally box every event time to within trust_box
    // minutes of the anchor (smaller search space, tighter gaps affordable)
    double trust_box = milp::kInf;
    // heuristic: scenarios sampled into the pool before the first master, so
    // the first robustification already hedges against a sampled set
    int initial_samples = 0;
    // with align set, only allow adding buffer: every drive/wait duration is
    // floored at the anchor's, so nominal travel time never drops below it
    bool monotone = false;
};

// Algorithm: alternate master over the pool (robustification) and the
// no-wait worst case (pessimization), growing the pool with each worst-case
// scenario until the bound gap closes.
inline RobustResult cutting_plane(const PeriodicEan& ean, const UncertaintySet& unc,
                                  const Scenario& s_nom, const RobustOptions& opt = {}) {
    RobustResult res;
    res.state.pool = {s_nom};
    double lb = -milp::kInf, ub = milp::kInf;
    bool have_best = false;
    int k = 0;
    while (true) {
        auto t0 = std::chrono::steady_clock::now();
        auto mm = build_frpt_master(ean, res.state.pool, unc);
        if (opt.align) {
            detail::fix_offsets(mm.model, ean, mm.vars, *opt.align);
            if (std::isfinite(opt.trust_box))
                detail::box_times(mm.model, ean, mm.vars, *opt.align, opt.trust_box);
            if (opt.monotone)
                detail::floor_durations(mm.model, ean, mm.vars, *opt.align);
        }
        mm.model.time_limit = opt.step_time_limit;
        mm.model.mip_gap = opt.mip_gap;
        milp::SolveOutcome mout;
        try {
            mout = detail::solve_with_retry(mm.model);
        } catch (const std::runtime_error&) {
            if (have_best) break;  // keep the incumbent found so far
            throw;
        }
        if (!mout.has_incumbent()) {
            if (have_best) break;
            throw std::runtime_error("robust master infeasible or no incumbent");
        }
        Timetable tt = extract_timetable(ean, mm.vars, mout.values);
        if (mout.status == milp::SolveStatus::optimal) lb = std::max(lb, mout.objective);

        auto fwc = build_fwc(ean, tt, unc);
        fwc.model.time_limit = opt.step_time_limit;
        fwc.model.mip_gap = opt.pessimize_gap;
        if (std::isfinite(ub)) fwc.model.cutoff = ub;
        auto pout = detail::solve_with_retry(fwc.model);
        if (!pout.has_incumbent())
            throw std::runtime_error("worst-case pessimization returned no incumbent");
        double wc = pout.objective;
        if (wc < ub) {
            ub = wc;
            res.timetable = tt;
            have_best = true;
        }
        Scenario s_k = extract_fwc_scenario(ean, fwc, pout.values);

        ++k;
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
        res.state.trace.push_back({k, lb, ub, dt.count(), res.state.pool.size(),
                                   mout.status, pout.status});
        bool duplicate = false;
        for (const auto& s : res.state.pool)
            if (s.near(s_k, opt.dedup_tol)) duplicate = true;
        if (!duplicate) res.state.pool.push_back(s_k);

        if (ub - lb <= opt.eps) {
            res.state.converged = true;
            break;
        }
        if (k >= opt.iter_cap || duplicate) break;
    }
    if (!have_best)
        throw std::runtime_error("cutting plane produced no timetable");
    res.bound = ub;
    return res;
}

// Sampling improvement heuristic: master over the pool with optimal delay
// management, then hunt for a bad-case scenario among sampled ones.
inline RobustResult iterative_heuristic(const PeriodicEan& ean,
                                        const UncertaintySet& unc,
                                        const Scenario& s_nom,
                                        const RobustOptions& opt = {}) {
    RobustResult res;
    res.state.pool = {s_nom};
    double lb = -milp::kInf;
    UncertaintySet sample_set = unc;
    sample_set.mode = BudgetMode::at_most;
    sample_set.periods = 1.0;
    for (int i = 0; i < opt.initial_samples; ++i) {
        Scenario s = sample_scenario(ean, sample_set, opt.seed + 104729 + i);
        bool duplicate = false;
        for (const auto& p : res.state.pool)
            if (p.near(s, opt.dedup_tol)) duplicate = true;
        if (!duplicate) res.state.pool.push_back(s);
    }
    for (int k = 1; k <= opt.n_iterations; ++k) {
        auto t0 = std::chrono::steady_clock::now();
        auto mm = build_rpt_master(ean, res.state.pool, unc);
        if (opt.align) {
            detail::fix_offsets(mm.model, ean, mm.vars, *opt.align);
            if (std::isfinite(opt.trust_box))
                detail::box_times(mm.model, ean, mm.vars, *opt.align, opt.trust_box);
            if (opt.monotone)
                detail::floor_durations(mm.model, ean, mm.vars, *opt.align);
        }
        mm.model.time_limit = opt.step_time_limit;
        mm.model.mip_gap = opt.mip_gap;
        milp::SolveOutcome mout;
        try {
            mout = detail::solve_with_retry(mm.model);
        } catch (const std::runtime_error&) {
            if (k > 1) break;  // keep the previous iterate
            throw;
        }
        if (!mout.has_incumbent()) {
            if (k > 1) break;
            throw std::runtime_error("robust master infeasible or no incumbent");
        }
        Timetable cand = extract_timetable(ean, mm.vars, mout.values);
        if (k > 1 && mout.status != milp::SolveStatus::optimal) {
            // time-limited master: keep the previous iterate unless the new
            // incumbent provably improves on it over the pool (the no-wait
            // response upper-bounds the optimal one)
            double prev = 0;
            for (const auto& s : res.state.pool)
                prev = std::max(prev, tau(ean, res.timetable,
                                          no_wait_propagate(ean, res.timetable, s)));
            if (prev <= mout.objective + 1e-9) cand = res.timetable;
        }
        res.timetable = cand;
        if (mout.status == milp::SolveStatus::optimal) lb = mout.objective;

        double nominal = nominal_travel_time(ean, res.timetable);
        double ub = 0;
        bool found = false;
        Scenario s_best;
        milp::SolveStatus last_status = milp::SolveStatus::optimal;
        for (int i = 0; i < opt.n_samples; ++i) {
            Scenario s = sample_scenario(ean, sample_set,
                                         opt.seed + (std::uint64_t)k * 7919 + i);
            auto pdm = build_pdm(ean, res.timetable, s);
            pdm.model.time_limit = opt.pdm_time_limit;
            pdm.model.mip_gap = opt.mip_gap;
            if (found) pdm.model.cutoff = ub - nominal;  // discard good cases
            auto pout = milp::solve(pdm.model);
            last_status = pout.status;
            if (!pout.has_incumbent() ||
                pout.status == milp::SolveStatus::cutoff_triggered)
                continue;
            double tau_s = pout.objective + nominal;
            if (tau_s <= ub) continue;
            bool duplicate = false;
            for (const auto& p : res.state.pool)
                if (p.near(s, opt.dedup_tol)) duplicate = true;
            if (duplicate) continue;
            ub = tau_s;
            s_best = s;
            found = true;
        }
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
        res.state.trace.push_back({k, lb, ub, dt.count(), res.state.pool.size(),
                                   mout.status, last_status});
        if (!found) break;  // every sample duplicated or dominated
        res.state.pool.push_back(s_best);
    }
    res.bound = lb;
    return res;
}

}  // namespace rpt

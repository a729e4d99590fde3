#pragma once

// Nominal periodic timetabling: the PESP MIP and the zero-buffer merge
// heuristic used as a robustness-naive baseline.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

#include "rpt/ean.hpp"
#include "rpt/milp.hpp"

namespace rpt {

// pi/z variables plus the L <= pi_j - pi_i + z_a T <= U rows shared by PESP
// and the robust masters. One event per connected component is anchored at 0
// (timetables are shift-invariant per component). Changes without a finite
// upper bound get the canonical window [L_a, L_a + T - 1].
struct TimetableVars {
    std::vector<int> pi;  // per event
    std::vector<int> z;   // per activity
};

inline double change_window_upper(const Activity& a, int T) {
    return std::isfinite(a.upper) ? a.upper : a.lower + T - 1;
}

inline TimetableVars add_timetable_vars(milp::MilpModel& m, const PeriodicEan& ean,
                                        bool anchor = true) {
    TimetableVars v;
    const int T = ean.period;
    auto comp = ean.components();
    std::vector<char> anchored(ean.events.size(), 0);
    if (anchor) {
        std::map<int, int> first;  // component -> lowest event index
        for (int e = 0; e < (int)ean.events.size(); ++e)
            first.try_emplace(comp[e], e);
        for (auto [c, e] : first) anchored[e] = 1;
    }
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        double hi = anchored[e] ? 0 : T - 1;
        v.pi.push_back(m.add_var("pi_" + ean.events[e].id, milp::VarDomain::integer, 0, hi));
    }
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        double up = act.drive_wait() ? act.upper : change_window_upper(act, T);
        if (!std::isfinite(up))
            throw std::runtime_error("drive/wait activity with unbounded upper: " + act.id);
        // z range wide enough for any pi difference in [-(T-1), T-1]
        double zlo = std::floor((act.lower - (T - 1)) / (double)T);
        double zhi = std::ceil((up + (T - 1)) / (double)T);
        v.z.push_back(m.add_var("z_" + act.id, milp::VarDomain::integer, zlo, zhi));
        std::vector<std::pair<int, double>> dur{
            {v.pi[act.target], 1.0}, {v.pi[act.source], -1.0}, {v.z[a], (double)T}};
        m.add_con("lb_" + act.id, dur, milp::Sense::ge, act.lower);
        m.add_con("ub_" + act.id, dur, milp::Sense::le, up);
    }
    return v;
}

struct PespModel {
    milp::MilpModel model;
    TimetableVars vars;
};

inline PespModel build_pesp(const PeriodicEan& ean) {
    PespModel pm;
    pm.vars = add_timetable_vars(pm.model, ean);
    const int T = ean.period;
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        pm.model.add_obj(pm.vars.pi[act.target], act.weight);
        pm.model.add_obj(pm.vars.pi[act.source], -act.weight);
        pm.model.add_obj(pm.vars.z[a], act.weight * T);
    }
    return pm;
}

inline Timetable extract_timetable(const PeriodicEan& ean, const TimetableVars& vars,
                                   const std::vector<double>& x) {
    std::vector<int> times(ean.events.size());
    for (int e = 0; e < (int)ean.events.size(); ++e)
        times[e] = (int)std::llround(x[vars.pi[e]]);
    auto res = timetable_durations(ean, times);
    if (!res.feasible())
        throw std::runtime_error("solver incumbent fails timetable recheck");
    return res.tt;
}

// Drops change activities with weight <= cutoff; the original EAN stays
// around for evaluation.
inline PeriodicEan apply_passenger_cutoff(const PeriodicEan& ean, double cutoff) {
    PeriodicEan out;
    out.period = ean.period;
    out.events = ean.events;
    for (const auto& a : ean.activities)
        if (a.drive_wait() || a.weight > cutoff) out.activities.push_back(a);
    out.finish();
    return out;
}

// Zero-buffer heuristic: every drive/wait activity at its lower bound, line
// offsets merged greedily by change-activity weight. Lowest line id breaks
// ties; the seed is accepted for interface parity but the merge itself is
// deterministic.
inline Timetable match_heuristic(const PeriodicEan& ean, std::uint64_t /*seed*/ = 0) {
    const int T = ean.period;
    auto paths = ean.line_paths();
    const int n_lines = (int)paths.size();

    // event -> (line index, time within line with zero buffers)
    std::vector<int> line_of(ean.events.size(), -1);
    std::vector<double> local(ean.events.size(), 0);
    for (int l = 0; l < n_lines; ++l) {
        double t = 0;
        for (std::size_t k = 0; k < paths[l].size(); ++k) {
            int e = paths[l][k];
            line_of[e] = l;
            local[e] = t;
            if (ean.outgoing_dw(e) >= 0)
                t += ean.activities[ean.outgoing_dw(e)].lower;
        }
    }

    // change weight between line pairs
    std::vector<std::vector<double>> link(n_lines, std::vector<double>(n_lines, 0));
    for (const auto& a : ean.activities) {
        if (a.drive_wait()) continue;
        int li = line_of[a.source], lj = line_of[a.target];
        link[li][lj] += a.weight;
        link[lj][li] += a.weight;
    }

    // order lines by line id so "lowest id" is well defined
    std::vector<int> by_id(n_lines);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](int a, int b) {
        return ean.events[paths[a][0]].line < ean.events[paths[b][0]].line;
    });

    std::vector<double> offset(n_lines, 0);
    std::vector<char> merged(n_lines, 0);

    // seed cluster: line with the heaviest total change weight
    int seed_line = by_id[0];
    double best_w = -1;
    for (int l : by_id) {
        double w = std::accumulate(link[l].begin(), link[l].end(), 0.0);
        if (w > best_w + 1e-12) {
            best_w = w;
            seed_line = l;
        }
    }
    merged[seed_line] = 1;
    offset[seed_line] = 0;

    auto change_cost = [&](int cand, double off) {
        double cost = 0;
        for (const auto& a : ean.activities) {
            if (a.drive_wait()) continue;
            int li = line_of[a.source], lj = line_of[a.target];
            bool touches_cand = li == cand || lj == cand;
            if (!touches_cand) continue;
            int other = li == cand ? lj : li;
            if (!merged[other]) continue;
            double ti = (li == cand ? off : offset[li]) + local[a.source];
            double tj = (lj == cand ? off : offset[lj]) + local[a.target];
            double diff = tj - ti;
            double z = std::ceil((a.lower - diff) / (double)T - 1e-12);
            cost += a.weight * (diff + z * T);
        }
        return cost;
    };

    for (int step = 1; step < n_lines; ++step) {
        int cand = -1;
        double cand_w = -1;
        for (int l : by_id) {
            if (merged[l]) continue;
            double w = 0;
            for (int o = 0; o < n_lines; ++o)
                if (merged[o]) w += link[l][o];
            if (w > cand_w + 1e-12) {
                cand_w = w;
                cand = l;
            }
        }
        double best_cost = std::numeric_limits<double>::infinity();
        int best_off = 0;
        for (int off = 0; off < T; ++off) {
            double c = change_cost(cand, off);
            if (c < best_cost - 1e-9) {
                best_cost = c;
                best_off = off;
            }
        }
        offset[cand] = best_off;
        merged[cand] = 1;
    }

    std::vector<int> times(ean.events.size());
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        long long t = (long long)std::llround(offset[line_of[e]] + local[e]);
        times[e] = (int)(((t % T) + T) % T);
    }
    auto res = timetable_durations(ean, times);
    if (!res.feasible())
        throw std::runtime_error(
            "zero-buffer heuristic infeasible: an upper bound binds at zero buffers");

    // polish: with drive/wait pinned to their lower bounds only the line
    // offsets remain, a small MIP that fixes the greedy merge's pairwise
    // blind spots; the greedy timetable stays as fallback
    PeriodicEan zb = ean;
    for (auto& a : zb.activities)
        if (a.drive_wait()) a.upper = a.lower;
    zb.finish();
    auto pm = build_pesp(zb);
    pm.model.time_limit = 45;
    auto out = milp::solve(pm.model);
    if (out.has_incumbent()) {
        Timetable cand;
        try {
            cand = extract_timetable(ean, pm.vars, out.values);
        } catch (const std::runtime_error&) {
            return res.tt;
        }
        double greedy_w = 0, cand_w = 0;
        for (int a = 0; a < (int)ean.activities.size(); ++a) {
            greedy_w += ean.activities[a].weight * res.tt.duration[a];
            cand_w += ean.activities[a].weight * cand.duration[a];
        }
        if (cand_w < greedy_w - 1e-9) return cand;
    }
    return res.tt;
}

}  // namespace rpt

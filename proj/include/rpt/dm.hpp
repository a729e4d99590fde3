#pragma once

// Delay management: aperiodic (DM) and periodic (P-DM) MIPs plus closed-form
// no-wait propagation.

#include <cmath>
#include <vector>

#include "rpt/ean.hpp"
#include "rpt/milp.hpp"
#include "rpt/pesp.hpp"

namespace rpt {

struct DelaySolution {
    std::vector<double> event_delay;     // d_i
    std::vector<double> activity_delay;  // d_a
    std::vector<int> change_offset;      // z_a (P-DM / no-wait), 0 elsewhere
    double objective = 0.0;              // P-DM objective value
    bool change_window_ok = true;        // all changes fit [L_a, L_a + T - 1]
};

// tau(pi, d) = sum_a w_a (pi_a + d_a) + sum_{dep} w_i d_i
inline double tau(const PeriodicEan& ean, const Timetable& tt, const DelaySolution& d) {
    double v = 0;
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        v += ean.activities[a].weight * (tt.duration[a] + d.activity_delay[a]);
    for (int e = 0; e < (int)ean.events.size(); ++e)
        if (ean.events[e].kind == EventKind::departure)
            v += ean.events[e].weight * d.event_delay[e];
    return v;
}

inline double nominal_travel_time(const PeriodicEan& ean, const Timetable& tt) {
    double v = 0;
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        v += ean.activities[a].weight * tt.duration[a];
    return v;
}

// P-DM objective of a solution (tau minus the nominal duration term).
inline double pdm_objective(const PeriodicEan& ean, const DelaySolution& d) {
    double v = 0;
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        v += ean.activities[a].weight * d.activity_delay[a];
    for (int e = 0; e < (int)ean.events.size(); ++e)
        if (ean.events[e].kind == EventKind::departure)
            v += ean.events[e].weight * d.event_delay[e];
    return v;
}

// No-wait propagation: d_j = max(d_i + s_a - slack_a, s_j) along lines,
// change delays at the minimal representative with pi_a + d_a >= L_a. If a
// fractional delay pushes a change past L_a + T - 1 the solution leaves the
// window the worst-case MIP uses; change_window_ok reports that.
inline DelaySolution no_wait_propagate(const PeriodicEan& ean, const Timetable& tt,
                                       const Scenario& s) {
    const int T = ean.period;
    DelaySolution out;
    out.event_delay.assign(ean.events.size(), 0);
    out.activity_delay.assign(ean.activities.size(), 0);
    out.change_offset.assign(ean.activities.size(), 0);
    for (const auto& path : ean.line_paths()) {
        out.event_delay[path[0]] = s.event_delay[path[0]];
        for (std::size_t k = 1; k < path.size(); ++k) {
            int a = ean.incoming_dw(path[k]);
            double prop = out.event_delay[path[k - 1]] + s.activity_delay[a] -
                          tt.slack(ean, a);
            out.event_delay[path[k]] = std::max(prop, s.event_delay[path[k]]);
        }
    }
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        double diff = out.event_delay[act.target] - out.event_delay[act.source];
        if (act.drive_wait()) {
            out.activity_delay[a] = diff;
            continue;
        }
        // minimal k with pi_a + diff + k*T >= L_a
        double k = std::ceil((act.lower - tt.duration[a] - diff) / (double)T - 1e-12);
        out.change_offset[a] = (int)k;
        out.activity_delay[a] = diff + k * T;
        if (tt.duration[a] + out.activity_delay[a] > act.lower + T - 1 + kFeasTol)
            out.change_window_ok = false;
    }
    out.objective = pdm_objective(ean, out);
    return out;
}

struct PdmModel {
    milp::MilpModel model;
    std::vector<int> d_event;
    std::vector<int> d_act;
    std::vector<int> z_change;  // -1 on drive/wait
};

// (P-DM): min sum w_a d_a + sum_dep w_i d_i over propagated delays.
// d caps at budget + 4T, generous room for trains delaying themselves to
// keep connections.
inline PdmModel build_pdm(const PeriodicEan& ean, const Timetable& tt,
                          const Scenario& s) {
    PdmModel pm;
    auto& m = pm.model;
    const int T = ean.period;
    double budget = s.sum();
    double dmax = budget + 4.0 * T;
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        double w = ean.events[e].kind == EventKind::departure ? ean.events[e].weight : 0.0;
        pm.d_event.push_back(m.add_var("d_" + ean.events[e].id,
                                       milp::VarDomain::continuous,
                                       s.event_delay[e], dmax, w));
    }
    pm.z_change.assign(ean.activities.size(), -1);
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        int da = m.add_var("da_" + act.id, milp::VarDomain::continuous, -milp::kInf,
                           milp::kInf, act.weight);
        pm.d_act.push_back(da);
        std::vector<std::pair<int, double>> link{
            {da, 1.0}, {pm.d_event[act.target], -1.0}, {pm.d_event[act.source], 1.0}};
        if (act.drive_wait()) {
            m.add_con("def_" + act.id, link, milp::Sense::eq, 0.0);
        } else {
            double zr = std::ceil((dmax + T) / T) + 1;
            int z = m.add_var("zc_" + act.id, milp::VarDomain::integer, -zr, zr);
            pm.z_change[a] = z;
            link.push_back({z, -(double)T});
            m.add_con("def_" + act.id, link, milp::Sense::eq, 0.0);
        }
        // pi_a + d_a >= L_a + s_a
        m.add_con("lb_" + act.id, {{da, 1.0}}, milp::Sense::ge,
                  act.lower + s.activity_delay[a] - tt.duration[a]);
    }
    return pm;
}

inline DelaySolution extract_pdm_solution(const PeriodicEan& ean, const PdmModel& pm,
                                          const std::vector<double>& x) {
    DelaySolution out;
    for (int v : pm.d_event) out.event_delay.push_back(x[v]);
    for (int v : pm.d_act) out.activity_delay.push_back(x[v]);
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        out.change_offset.push_back(pm.z_change[a] >= 0
                                        ? (int)std::llround(x[pm.z_change[a]])
                                        : 0);
    out.objective = pdm_objective(ean, out);
    return out;
}

struct DmModel {
    milp::MilpModel model;
    std::vector<int> d_event;   // per aperiodic event
    std::vector<int> y_change;  // per aperiodic activity, -1 on drive/wait
};

// Aperiodic (DM): min sum_arr w_i d_i + sum_ch y_a w_a T.
inline DmModel build_dm(const AperiodicEan& aper, const Scenario& s, double rho_total) {
    DmModel dm;
    auto& m = dm.model;
    const PeriodicEan& base = *aper.base;
    const int T = base.period;
    const double big_m = rho_total + T;
    for (std::size_t i = 0; i < aper.events.size(); ++i) {
        const Event& ev = base.events[aper.events[i].base];
        double w = ev.kind == EventKind::arrival ? ev.weight : 0.0;
        dm.d_event.push_back(m.add_var("d_" + std::to_string(i),
                                       milp::VarDomain::continuous,
                                       s.event_delay[i], rho_total, w));
    }
    dm.y_change.assign(aper.activities.size(), -1);
    for (std::size_t a = 0; a < aper.activities.size(); ++a) {
        const auto& act = aper.activities[a];
        const Activity& pa = base.activities[act.base];
        std::vector<std::pair<int, double>> row{{dm.d_event[act.target], 1.0},
                                                {dm.d_event[act.source], -1.0}};
        if (pa.drive_wait()) {
            // pi_j - pi_i + d_j - d_i >= L_a + s_a
            m.add_con("dw_" + std::to_string(a), row, milp::Sense::ge,
                      pa.lower + s.activity_delay[a] - act.duration);
        } else {
            int y = m.add_var("y_" + std::to_string(a), milp::VarDomain::binary, 0, 1,
                              pa.weight * T);
            dm.y_change[a] = y;
            row.push_back({y, big_m});
            m.add_con("ch_" + std::to_string(a), row, milp::Sense::ge,
                      pa.lower - act.duration);
        }
    }
    return dm;
}

}  // namespace rpt

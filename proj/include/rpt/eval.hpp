#pragma once

// Experiment pipeline: synthetic instance generation, the rollout/sample/DM
// evaluation loop and the comparison tables.

#include <array>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rpt/dm.hpp"
#include "rpt/ean.hpp"
#include "rpt/pesp.hpp"
#include "rpt/robust.hpp"

namespace rpt {

struct Instance {
    PeriodicEan ean;
    UncertaintySet unc;
    double passenger_cutoff = 0;
    double horizon_lo = 0, horizon_hi = 480;
    std::string label;
};

enum class InstanceKind { toy, grid, bahn };

namespace detail {

struct StationGraph {
    int n_stations = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> lines;  // station sequences (undirected)
};

inline StationGraph toy_graph(std::mt19937_64& rng) {
    // 8 stops on a ring (8 edges), 4 undirected lines along the ring
    StationGraph g;
    g.n_stations = 8;
    for (int i = 0; i < 8; ++i) g.edges.push_back({i, (i + 1) % 8});
    std::uniform_int_distribution<int> start(0, 7), len(4, 6);
    for (int l = 0; l < 4; ++l) {
        int s = start(rng), k = len(rng);
        std::vector<int> line;
        for (int i = 0; i <= k; ++i) line.push_back((s + i) % 8);
        g.lines.push_back(line);
    }
    return g;
}

inline StationGraph grid_graph(std::mt19937_64&) {
    // 5x5 lattice, 40 edges, row and column lines
    StationGraph g;
    g.n_stations = 25;
    auto id = [](int r, int c) { return r * 5 + c; };
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 4; ++c) g.edges.push_back({id(r, c), id(r, c + 1)});
    for (int c = 0; c < 5; ++c)
        for (int r = 0; r < 4; ++r) g.edges.push_back({id(r, c), id(r + 1, c)});
    for (int r = 0; r < 5; ++r)
        g.lines.push_back({id(r, 0), id(r, 1), id(r, 2), id(r, 3), id(r, 4)});
    for (int c = 0; c < 5; ++c)
        g.lines.push_back({id(0, c), id(1, c), id(2, c), id(3, c), id(4, c)});
    return g;
}

inline StationGraph bahn_graph(std::mt19937_64& rng) {
    // 250 stations: random tree plus extra edges to reach 326, long lines
    StationGraph g;
    g.n_stations = 250;
    std::vector<std::vector<int>> adj(250);
    for (int v = 1; v < 250; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        int u = pick(rng);
        g.edges.push_back({u, v});
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::uniform_int_distribution<int> any(0, 249);
    while ((int)g.edges.size() < 326) {
        int u = any(rng), v = any(rng);
        if (u == v) continue;
        g.edges.push_back({u, v});
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (int l = 0; l < 20; ++l) {
        std::vector<int> line{any(rng)};
        std::vector<char> used(250, 0);
        used[line[0]] = 1;
        while ((int)line.size() < 15) {
            const auto& nb = adj[line.back()];
            std::vector<int> cand;
            for (int v : nb)
                if (!used[v]) cand.push_back(v);
            if (cand.empty()) break;
            std::uniform_int_distribution<int> pick(0, (int)cand.size() - 1);
            int v = cand[pick(rng)];
            used[v] = 1;
            line.push_back(v);
        }
        if (line.size() >= 3) g.lines.push_back(line);
    }
    return g;
}

}  // namespace detail

// Passenger-weight ranges and timetabling windows for generated instances.
// The weight defaults make the cutoff parameter meaningfully prune; heavier
// drive/wait floors relative to change weights give networks where the
// zero-buffer heuristic is close to nominal-optimal (transfer realignment
// cannot pay for stretched drives). The window widths cap how much buffer a
// single drive or wait may carry.
struct WeightProfile {
    int dw_lo = 10, dw_hi = 100;  // drive/wait passengers
    int ch_lo = 1, ch_hi = 30;    // change passengers
    int ev_lo = 1, ev_hi = 20;    // boardings / alightings
    double drive_win = 8, wait_win = 5;  // upper minus lower bound
};

// Line-based EAN over the requested topology; each undirected line yields
// two directed line paths. Weights: drive/wait passengers uniform [10,100],
// changes [1,30], event boardings/alightings [1,20] unless overridden.
inline Instance generate_instance(InstanceKind kind, std::uint64_t seed,
                                  const WeightProfile& wp = {}) {
    std::mt19937_64 rng(seed);
    Instance inst;
    detail::StationGraph g;
    double change_keep = 1.0;
    switch (kind) {
        case InstanceKind::toy:
            g = detail::toy_graph(rng);
            inst.unc = {50, 5, BudgetMode::at_most, 1.0};
            inst.passenger_cutoff = 0;
            inst.label = "toy";
            change_keep = 0.4;
            break;
        case InstanceKind::grid:
            g = detail::grid_graph(rng);
            inst.unc = {100, 5, BudgetMode::at_most, 1.0};
            inst.passenger_cutoff = 10;
            inst.label = "grid";
            change_keep = 0.6;
            break;
        case InstanceKind::bahn:
            g = detail::bahn_graph(rng);
            inst.unc = {5000, 10, BudgetMode::at_most, 1.0};
            inst.passenger_cutoff = 300;
            inst.label = "bahn";
            change_keep = 0.2;
            break;
    }
    PeriodicEan& ean = inst.ean;
    ean.period = 60;
    std::uniform_int_distribution<int> drive_lb(3, 15), wait_lb(1, 3);
    std::uniform_int_distribution<int> dw_weight(wp.dw_lo, wp.dw_hi),
        ch_weight(wp.ch_lo, wp.ch_hi);
    std::uniform_int_distribution<int> ev_weight(wp.ev_lo, wp.ev_hi);
    std::uniform_real_distribution<double> coin(0, 1);

    auto add_event = [&](EventKind k, int station, const std::string& line) {
        Event e;
        e.kind = k;
        e.station = "s" + std::to_string(station);
        e.line = line;
        e.weight = ev_weight(rng);
        e.id = line + (k == EventKind::departure ? "_dep_" : "_arr_") + e.station;
        ean.events.push_back(std::move(e));
        return (int)ean.events.size() - 1;
    };
    auto add_activity = [&](ActivityKind k, int src, int tgt, double lo, double up,
                            double w) {
        Activity a;
        a.kind = k;
        a.source = src;
        a.target = tgt;
        a.lower = lo;
        a.upper = up;
        a.weight = w;
        a.id = to_string(k) + std::to_string(ean.activities.size());
        ean.activities.push_back(std::move(a));
    };

    // directed line paths with dep/arr events and drive/wait activities
    std::vector<std::vector<int>> arr_at(g.n_stations), dep_at(g.n_stations);
    int line_no = 0;
    for (const auto& stations : g.lines) {
        for (int dir = 0; dir < 2; ++dir) {
            std::string lid = "l" + std::to_string(line_no) + (dir ? "b" : "f");
            std::vector<int> seq = stations;
            if (dir) std::reverse(seq.begin(), seq.end());
            int prev_dep = -1;
            for (std::size_t k = 0; k < seq.size(); ++k) {
                int st = seq[k];
                if (k > 0) {
                    int arr = add_event(EventKind::arrival, st, lid);
                    arr_at[st].push_back(arr);
                    double lo = drive_lb(rng);
                    add_activity(ActivityKind::drive, prev_dep, arr, lo,
                                 lo + wp.drive_win, dw_weight(rng));
                    if (k + 1 < seq.size()) {
                        int dep = add_event(EventKind::departure, st, lid);
                        dep_at[st].push_back(dep);
                        double wlo = wait_lb(rng);
                        add_activity(ActivityKind::wait, arr, dep, wlo,
                                     wlo + wp.wait_win, dw_weight(rng));
                        prev_dep = dep;
                    }
                } else {
                    prev_dep = add_event(EventKind::departure, st, lid);
                    dep_at[st].push_back(prev_dep);
                }
            }
        }
        ++line_no;
    }
    // transfers: arrival -> departure of another line at the same station
    for (int st = 0; st < g.n_stations; ++st) {
        for (int arr : arr_at[st]) {
            for (int dep : dep_at[st]) {
                if (ean.events[arr].line == ean.events[dep].line) continue;
                if (coin(rng) > change_keep) continue;
                add_activity(ActivityKind::change, arr, dep, 2, kUnboundedUpper,
                             ch_weight(rng));
            }
        }
    }
    ean.finish();
    return inst;
}

inline Instance generate_instance(const std::string& kind, std::uint64_t seed) {
    if (kind == "toy") return generate_instance(InstanceKind::toy, seed);
    if (kind == "grid") return generate_instance(InstanceKind::grid, seed);
    if (kind == "bahn") return generate_instance(InstanceKind::bahn, seed);
    throw std::runtime_error("unknown instance kind '" + kind + "'");
}

struct EvalReport {
    std::string algorithm;
    std::string instance;
    double nominal_travel_time = 0;
    std::vector<double> delayed_travel_time;  // one per scenario
    double min_delayed = 0, max_delayed = 0, avg_delayed = 0;
    double avg_passenger_delay = 0;  // avg delayed minus nominal
};

// boardings per period, the normalization constant of the metrics
inline double passenger_count(const PeriodicEan& ean) {
    double p = 0;
    for (const auto& e : ean.events)
        if (e.kind == EventKind::departure) p += e.weight;
    return p;
}

// Least feasible event delays given the DM drop decisions: the canonical
// disposition timetable. The constraint system is monotone, so the least
// fixpoint exists, is unique, and keeps the DM objective optimal.
inline std::vector<double> minimal_disposition(const AperiodicEan& aper,
                                               const Scenario& s,
                                               const std::vector<char>& dropped) {
    const PeriodicEan& base = *aper.base;
    std::vector<double> d(aper.events.size());
    for (std::size_t i = 0; i < aper.events.size(); ++i) d[i] = s.event_delay[i];
    bool changed = true;
    int guard = 0;
    while (changed && ++guard <= (int)aper.events.size() + 2) {
        changed = false;
        for (std::size_t a = 0; a < aper.activities.size(); ++a) {
            if (dropped[a]) continue;
            const auto& act = aper.activities[a];
            const Activity& pa = base.activities[act.base];
            double extra = pa.drive_wait() ? s.activity_delay[a] : 0.0;
            double need = d[act.source] + pa.lower + extra - act.duration;
            if (need > d[act.target] + 1e-9) {
                d[act.target] = need;
                changed = true;
            }
        }
    }
    if (changed) throw std::runtime_error("disposition propagation did not converge");
    return d;
}

// Workflow: roll out, sample equality-budget scenarios on the aperiodic
// network, solve (DM) per scenario. Delayed travel time is the realized
// travel time tau of the disposition: activity weights on realized durations
// (consumed buffers shorten them), a full period penalty per dropped change,
// and departure-event delays.
inline EvalReport evaluate(const PeriodicEan& ean, const Timetable& tt,
                           const UncertaintySet& unc, double horizon_lo,
                           double horizon_hi, int n_scenarios, std::uint64_t seed,
                           double dm_time_limit = 60.0) {
    EvalReport rep;
    const int T = ean.period;
    AperiodicEan aper = rollout(ean, tt, horizon_lo, horizon_hi);
    const double periods = aper.periods(T);
    const double denom = passenger_count(ean) * periods;

    double nominal_aper = 0;
    for (const auto& a : aper.activities)
        nominal_aper += ean.activities[a.base].weight * a.duration;
    rep.nominal_travel_time = nominal_aper / denom;

    UncertaintySet exact = unc;
    exact.mode = BudgetMode::exact;
    exact.periods = periods;
    const double rho_total = exact.total_budget();

    for (int i = 0; i < n_scenarios; ++i) {
        Scenario s = sample_scenario(aper, exact, seed + (std::uint64_t)i);
        auto dm = build_dm(aper, s, rho_total);
        dm.model.time_limit = dm_time_limit;
        auto out = milp::solve(dm.model);
        if (!out.has_incumbent())
            throw std::runtime_error("aperiodic DM returned no incumbent");
        std::vector<char> dropped(aper.activities.size(), 0);
        for (std::size_t a = 0; a < aper.activities.size(); ++a)
            if (dm.y_change[a] >= 0 && out.values[dm.y_change[a]] > 0.5) dropped[a] = 1;
        auto d = minimal_disposition(aper, s, dropped);
        double delayed = nominal_aper;
        for (std::size_t a = 0; a < aper.activities.size(); ++a) {
            const Activity& pa = ean.activities[aper.activities[a].base];
            delayed += pa.weight * (dropped[a] ? (double)T
                                               : d[aper.activities[a].target] -
                                                     d[aper.activities[a].source]);
        }
        for (std::size_t i = 0; i < aper.events.size(); ++i)
            if (ean.events[aper.events[i].base].kind == EventKind::departure)
                delayed += ean.events[aper.events[i].base].weight * d[i];
        rep.delayed_travel_time.push_back(delayed / denom);
    }
    rep.min_delayed = *std::min_element(rep.delayed_travel_time.begin(),
                                        rep.delayed_travel_time.end());
    rep.max_delayed = *std::max_element(rep.delayed_travel_time.begin(),
                                        rep.delayed_travel_time.end());
    rep.avg_delayed = 0;
    for (double v : rep.delayed_travel_time) rep.avg_delayed += v;
    rep.avg_delayed /= rep.delayed_travel_time.size();
    rep.avg_passenger_delay = rep.avg_delayed - rep.nominal_travel_time;
    return rep;
}

// Three tables (nominal, min/max/avg delayed, average passenger delay) as
// CSV plus a readable text block.
inline void write_comparison(std::ostream& csv_nominal, std::ostream& csv_delayed,
                             std::ostream& csv_delay, std::ostream& text,
                             const std::vector<EvalReport>& reports) {
    csv_nominal << "algorithm;nominal_travel_time\n";
    csv_delayed << "algorithm;min;max;avg\n";
    csv_delay << "algorithm;avg_passenger_delay\n";
    for (const auto& r : reports) {
        csv_nominal << r.algorithm << ";" << r.nominal_travel_time << "\n";
        csv_delayed << r.algorithm << ";" << r.min_delayed << ";" << r.max_delayed
                    << ";" << r.avg_delayed << "\n";
        csv_delay << r.algorithm << ";" << r.avg_passenger_delay << "\n";
    }
    text << std::fixed << std::setprecision(2);
    text << "algorithm      nominal   min-del   max-del   avg-del   avg-pass-delay\n";
    for (const auto& r : reports)
        text << std::left << std::setw(14) << r.algorithm << std::right
             << std::setw(10) << r.nominal_travel_time << std::setw(10) << r.min_delayed
             << std::setw(10) << r.max_delayed << std::setw(10) << r.avg_delayed
             << std::setw(17) << r.avg_passenger_delay << "\n";
}

}  // namespace rpt

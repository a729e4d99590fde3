#pragma once

// Periodic event-activity networks, timetables, uncertainty sets and the
// rollout to aperiodic networks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rpt {

constexpr double kUnboundedUpper = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-6;

enum class EventKind { departure, arrival };
enum class ActivityKind { drive, wait, change };

inline bool is_drive_wait(ActivityKind k) { return k != ActivityKind::change; }

inline std::string to_string(EventKind k) {
    return k == EventKind::departure ? "departure" : "arrival";
}
inline std::string to_string(ActivityKind k) {
    switch (k) {
        case ActivityKind::drive: return "drive";
        case ActivityKind::wait: return "wait";
        default: return "change";
    }
}

struct Event {
    std::string id;
    EventKind kind = EventKind::departure;
    std::string station;
    std::string line;
    double weight = 0.0;  // passengers boarding (dep) or unboarding (arr)
};

struct Activity {
    std::string id;
    int source = -1;  // event index
    int target = -1;
    ActivityKind kind = ActivityKind::drive;
    double lower = 0.0;
    double upper = kUnboundedUpper;  // changes may be unbounded
    double weight = 0.0;

    bool drive_wait() const { return is_drive_wait(kind); }
};

class PeriodicEan {
public:
    std::vector<Event> events;
    std::vector<Activity> activities;
    int period = 60;

    int event_index(const std::string& id) const {
        auto it = event_by_id_.find(id);
        if (it == event_by_id_.end())
            throw std::runtime_error("unknown event id: " + id);
        return it->second;
    }

    // Call after filling events/activities.
    void finish() {
        event_by_id_.clear();
        for (int i = 0; i < (int)events.size(); ++i)
            event_by_id_[events[i].id] = i;
        incoming_dw_.assign(events.size(), -1);
        outgoing_dw_.assign(events.size(), -1);
        for (int a = 0; a < (int)activities.size(); ++a) {
            if (!activities[a].drive_wait()) continue;
            outgoing_dw_[activities[a].source] = a;
            incoming_dw_[activities[a].target] = a;
        }
        start_events_.clear();
        for (int e = 0; e < (int)events.size(); ++e)
            if (incoming_dw_[e] < 0) start_events_.push_back(e);
    }

    // events with no incoming drive/wait activity (first event of each line)
    const std::vector<int>& start_events() const { return start_events_; }
    int incoming_dw(int e) const { return incoming_dw_[e]; }
    int outgoing_dw(int e) const { return outgoing_dw_[e]; }

    // Events of each line in drive/wait order, one vector per line path.
    std::vector<std::vector<int>> line_paths() const {
        std::vector<std::vector<int>> paths;
        for (int s : start_events_) {
            std::vector<int> path{s};
            int cur = s;
            while (outgoing_dw_[cur] >= 0) {
                cur = activities[outgoing_dw_[cur]].target;
                path.push_back(cur);
                if (path.size() > events.size())
                    throw std::runtime_error("drive/wait cycle detected");
            }
            paths.push_back(std::move(path));
        }
        return paths;
    }

    // connected components over all activities (used to anchor PESP)
    std::vector<int> components() const {
        std::vector<int> comp(events.size(), -1);
        std::vector<std::vector<int>> adj(events.size());
        for (const auto& a : activities) {
            adj[a.source].push_back(a.target);
            adj[a.target].push_back(a.source);
        }
        int c = 0;
        for (int e = 0; e < (int)events.size(); ++e) {
            if (comp[e] >= 0) continue;
            std::vector<int> stack{e};
            comp[e] = c;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int u : adj[v])
                    if (comp[u] < 0) { comp[u] = c; stack.push_back(u); }
            }
            ++c;
        }
        return comp;
    }

private:
    std::unordered_map<std::string, int> event_by_id_;
    std::vector<int> incoming_dw_;
    std::vector<int> outgoing_dw_;
    std::vector<int> start_events_;
};

struct Timetable {
    std::vector<int> time;       // pi_e in [0, T-1]
    std::vector<int> offset;     // z_a per activity
    std::vector<double> duration;  // pi_a = pi_j - pi_i + z_a T

    double slack(const PeriodicEan& ean, int a) const {
        return duration[a] - ean.activities[a].lower;
    }
};

struct Violation {
    std::string element;  // offending event/activity id ("" for global)
    std::string message;
};

inline std::vector<Violation> validate_ean(const PeriodicEan& ean) {
    std::vector<Violation> out;
    if (ean.period < 2)
        out.push_back({"", "period T must be at least 2"});
    for (const auto& ev : ean.events)
        if (ev.weight < 0)
            out.push_back({ev.id, "event weight negative"});
    std::vector<int> in_dw(ean.events.size(), 0), out_dw(ean.events.size(), 0);
    for (const auto& a : ean.activities) {
        if (a.source < 0 || a.source >= (int)ean.events.size() ||
            a.target < 0 || a.target >= (int)ean.events.size()) {
            out.push_back({a.id, "activity endpoint out of range"});
            continue;
        }
        if (a.lower < 0) out.push_back({a.id, "L_a negative"});
        if (a.lower > a.upper) out.push_back({a.id, "L_a > U_a"});
        if (a.weight < 0) out.push_back({a.id, "activity weight negative"});
        if (a.drive_wait()) {
            ++out_dw[a.source];
            ++in_dw[a.target];
        } else {
            const auto& src = ean.events[a.source];
            const auto& tgt = ean.events[a.target];
            if (src.kind != EventKind::arrival || tgt.kind != EventKind::departure)
                out.push_back({a.id, "change must connect arrival to departure"});
            if (src.line == tgt.line)
                out.push_back({a.id, "change connects events of the same line"});
        }
    }
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        if (in_dw[e] > 1 || out_dw[e] > 1) {
            out.push_back({ean.events[e].id, "line paths not node-disjoint"});
            return out;  // path structure broken, skip cycle check
        }
    }
    // acyclic check on drive/wait subgraph: walk from starts, all events reachable
    std::vector<char> seen(ean.events.size(), 0);
    std::size_t reached = 0;
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        if (in_dw[e] > 0) continue;
        int cur = e;
        while (cur >= 0 && !seen[cur]) {
            seen[cur] = 1;
            ++reached;
            cur = ean.outgoing_dw(cur) >= 0 ? ean.activities[ean.outgoing_dw(cur)].target : -1;
        }
    }
    if (reached != ean.events.size())
        out.push_back({"", "drive/wait subgraph contains a cycle"});
    if (ean.start_events().empty() && !ean.events.empty())
        out.push_back({"", "no start events (every event has an incoming drive/wait)"});
    return out;
}

// Derives z_a and pi_a from event times: smallest duration >= L_a congruent
// to pi_j - pi_i mod T. Activities where that duration exceeds U_a are
// reported as infeasible.
struct DurationResult {
    Timetable tt;
    std::vector<int> infeasible;  // activity indices with pi_a > U_a
    bool feasible() const { return infeasible.empty(); }
};

inline DurationResult timetable_durations(const PeriodicEan& ean,
                                          const std::vector<int>& times) {
    if (times.size() != ean.events.size())
        throw std::runtime_error("timetable size mismatch");
    DurationResult res;
    res.tt.time = times;
    res.tt.offset.resize(ean.activities.size());
    res.tt.duration.resize(ean.activities.size());
    const int T = ean.period;
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        int diff = times[act.target] - times[act.source];
        // minimal z with diff + z*T >= L_a
        int z = (int)std::ceil((act.lower - diff) / (double)T - 1e-12);
        double dur = diff + (double)z * T;
        res.tt.offset[a] = z;
        res.tt.duration[a] = dur;
        if (dur > act.upper + kFeasTol) res.infeasible.push_back(a);
    }
    return res;
}

enum class BudgetMode { at_most, exact };

struct UncertaintySet {
    double sigma = 0.0;  // max single delay
    double rho = 0.0;    // max delay budget per period
    BudgetMode mode = BudgetMode::at_most;
    double periods = 1.0;  // (U-L)/T multiplier for exact mode

    double total_budget() const {
        return mode == BudgetMode::exact ? rho * periods : rho;
    }
};

// Source delays. Entries are zero by default; change activities always carry
// zero activity delay.
struct Scenario {
    std::vector<double> event_delay;
    std::vector<double> activity_delay;

    static Scenario zeros(std::size_t n_events, std::size_t n_activities) {
        Scenario s;
        s.event_delay.assign(n_events, 0.0);
        s.activity_delay.assign(n_activities, 0.0);
        return s;
    }

    double sum() const {
        double t = 0;
        for (double v : event_delay) t += v;
        for (double v : activity_delay) t += v;
        return t;
    }

    bool near(const Scenario& o, double tol) const {
        if (event_delay.size() != o.event_delay.size() ||
            activity_delay.size() != o.activity_delay.size())
            return false;
        for (std::size_t i = 0; i < event_delay.size(); ++i)
            if (std::fabs(event_delay[i] - o.event_delay[i]) > tol) return false;
        for (std::size_t i = 0; i < activity_delay.size(); ++i)
            if (std::fabs(activity_delay[i] - o.activity_delay[i]) > tol) return false;
        return true;
    }
};

// Checks a scenario against its uncertainty set; returns empty on success.
inline std::vector<Violation> check_scenario(const PeriodicEan& ean,
                                             const UncertaintySet& unc,
                                             const Scenario& s) {
    std::vector<Violation> out;
    double total = 0;
    auto check = [&](double v, const std::string& id) {
        if (v < -kFeasTol) out.push_back({id, "negative delay"});
        if (v > unc.sigma + kFeasTol) out.push_back({id, "delay exceeds sigma"});
        total += v;
    };
    for (std::size_t i = 0; i < s.event_delay.size(); ++i)
        check(s.event_delay[i], ean.events[i].id);
    for (std::size_t a = 0; a < s.activity_delay.size(); ++a) {
        if (!ean.activities[a].drive_wait()) {
            if (std::fabs(s.activity_delay[a]) > kFeasTol)
                out.push_back({ean.activities[a].id, "source delay on change activity"});
            continue;
        }
        check(s.activity_delay[a], ean.activities[a].id);
    }
    if (unc.mode == BudgetMode::at_most) {
        if (total > unc.total_budget() + kFeasTol)
            out.push_back({"", "delay sum exceeds budget"});
    } else if (std::fabs(total - unc.total_budget()) > 1e-4) {
        out.push_back({"", "delay sum misses exact budget"});
    }
    return out;
}

namespace detail {

// Distributes `total` over `values` (already holding nonnegative raw mass):
// normalize to the target sum, clip at sigma and push clipped mass onto the
// unclipped entries, up to 50 rounds / 1e-6 tolerance.
inline void normalize_clip(std::vector<double>& values, double total, double sigma) {
    if (values.empty() || total <= 0) {
        std::fill(values.begin(), values.end(), 0.0);
        return;
    }
    double raw = 0;
    for (double v : values) raw += v;
    if (raw <= 0) {
        std::fill(values.begin(), values.end(), total / values.size());
    } else {
        for (double& v : values) v *= total / raw;
    }
    for (int round = 0; round < 50; ++round) {
        double excess = 0;
        std::size_t free_count = 0;
        for (double& v : values) {
            if (v > sigma) {
                excess += v - sigma;
                v = sigma;
            } else if (v < sigma - 1e-12) {
                ++free_count;
            }
        }
        if (excess <= 1e-6 || free_count == 0) break;
        double share = excess / free_count;
        for (double& v : values)
            if (v < sigma - 1e-12) v += share;
    }
    // final clamp; any residual is below tolerance
    for (double& v : values) v = std::min(v, sigma);
}

}  // namespace detail

// Samples delays over an explicit domain (event i -> i, activity a ->
// n_events + a). Both modes concentrate the budget on a small random
// support (delays around min(sigma, rho) each) rather than dusting the
// whole domain; the mass on the support follows the
// normalize/clip/redistribute scheme. Spread-out micro-delays vanish in
// delay management and make every timetable look equally good.
inline Scenario sample_scenario_on(const std::vector<std::size_t>& domain,
                                   std::size_t n_events, std::size_t n_activities,
                                   const UncertaintySet& unc, std::uint64_t seed) {
    const double total = unc.total_budget();
    Scenario s = Scenario::zeros(n_events, n_activities);
    if (total <= 0 || domain.empty()) return s;
    if (total > unc.sigma * (double)domain.size() + kFeasTol)
        throw std::runtime_error("infeasible budget: rho*(U-L)/T exceeds sigma*|domain|");

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);

    std::size_t min_support =
        unc.sigma > 0 ? (std::size_t)std::ceil(total / unc.sigma - 1e-12) : domain.size();
    min_support = std::max<std::size_t>(min_support, 1);
    double typical = std::min(unc.sigma, std::max(1.0, unc.rho));
    std::size_t target = (std::size_t)std::ceil(total / typical - 1e-12);
    std::uniform_int_distribution<std::size_t> extra(0, unc.mode == BudgetMode::exact ? 2 : 3);
    std::size_t k = std::min(domain.size(), std::max(min_support, target) + extra(rng));

    std::vector<std::size_t> idx(domain.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < k; ++i) support.push_back(domain[idx[i]]);
    std::vector<double> mass(k);
    for (double& m : mass) m = expo(rng);
    detail::normalize_clip(mass, total, unc.sigma);
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] < n_events)
            s.event_delay[support[i]] = mass[i];
        else
            s.activity_delay[support[i] - n_events] = mass[i];
    }
    return s;
}

inline Scenario sample_scenario(const PeriodicEan& ean, const UncertaintySet& unc,
                                std::uint64_t seed) {
    std::vector<std::size_t> domain;
    for (std::size_t i = 0; i < ean.events.size(); ++i) domain.push_back(i);
    for (std::size_t a = 0; a < ean.activities.size(); ++a)
        if (ean.activities[a].drive_wait())
            domain.push_back(ean.events.size() + a);
    return sample_scenario_on(domain, ean.events.size(), ean.activities.size(), unc, seed);
}

// Aperiodic network obtained by rolling out a periodic EAN over [L, U].
struct AperiodicEan {
    struct AperEvent {
        int base = -1;  // periodic event index
        int rep = 0;    // n with time pi_e + n*T
        double time = 0;
    };
    struct AperActivity {
        int base = -1;  // periodic activity index
        int source = -1;  // aperiodic event index
        int target = -1;
        double duration = 0;  // pi*_j - pi*_i
    };
    std::vector<AperEvent> events;
    std::vector<AperActivity> activities;
    double horizon_lo = 0, horizon_hi = 0;
    const PeriodicEan* base = nullptr;

    double periods(int T) const { return (horizon_hi - horizon_lo) / T; }
};

// Def.-faithful rollout: closed-interval membership on both events and
// activities. Changes without a finite upper bound are capped at
// L_a + T - 1 so each rolled-out transfer targets the next usable departure.
inline AperiodicEan rollout(const PeriodicEan& ean, const Timetable& tt,
                            double lo, double hi) {
    AperiodicEan out;
    out.base = &ean;
    out.horizon_lo = lo;
    out.horizon_hi = hi;
    const int T = ean.period;
    std::vector<std::vector<std::pair<int, int>>> copies(ean.events.size());
    for (int e = 0; e < (int)ean.events.size(); ++e) {
        int n_lo = (int)std::ceil((lo - tt.time[e]) / (double)T - 1e-12);
        int n_hi = (int)std::floor((hi - tt.time[e]) / (double)T + 1e-12);
        for (int n = n_lo; n <= n_hi; ++n) {
            copies[e].push_back({n, (int)out.events.size()});
            out.events.push_back({e, n, (double)tt.time[e] + (double)n * T});
        }
    }
    for (int a = 0; a < (int)ean.activities.size(); ++a) {
        const auto& act = ean.activities[a];
        double upper = act.upper;
        if (!act.drive_wait() && !std::isfinite(upper))
            upper = act.lower + T - 1;
        int diff = tt.time[act.target] - tt.time[act.source];
        for (const auto& [n, src_idx] : copies[act.source]) {
            for (const auto& [m, tgt_idx] : copies[act.target]) {
                double dur = diff + (double)(m - n) * T;
                if (dur >= act.lower - kFeasTol && dur <= upper + kFeasTol)
                    out.activities.push_back({a, src_idx, tgt_idx, dur});
            }
        }
    }
    return out;
}

inline Scenario sample_scenario(const AperiodicEan& aper, const UncertaintySet& unc,
                                std::uint64_t seed) {
    std::vector<std::size_t> domain;
    for (std::size_t i = 0; i < aper.events.size(); ++i) domain.push_back(i);
    for (std::size_t a = 0; a < aper.activities.size(); ++a)
        if (aper.base->activities[aper.activities[a].base].drive_wait())
            domain.push_back(aper.events.size() + a);
    return sample_scenario_on(domain, aper.events.size(), aper.activities.size(), unc, seed);
}

// Copies periodic source delays onto every rolled-out repetition.
inline Scenario scenario_rollout(const Scenario& s, const AperiodicEan& aper) {
    Scenario out = Scenario::zeros(aper.events.size(), aper.activities.size());
    for (std::size_t i = 0; i < aper.events.size(); ++i)
        out.event_delay[i] = s.event_delay[aper.events[i].base];
    for (std::size_t a = 0; a < aper.activities.size(); ++a)
        out.activity_delay[a] = s.activity_delay[aper.activities[a].base];
    return out;
}

}  // namespace rpt

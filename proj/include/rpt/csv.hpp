#pragma once

// Semicolon-separated instance files: events.csv, activities.csv,
// timetable.csv, scenario.csv, config.csv, plus trace/report emission.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpt/ean.hpp"
#include "rpt/robust.hpp"

namespace rpt::csv {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ';') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(split(line));
    }
    return rows;
}

struct Config {
    int period = 60;
    double sigma = 0, rho = 0;
    double horizon_lo = 0, horizon_hi = 480;
    double passenger_cutoff = 0;
    std::uint64_t seed = 1;
};

inline Config read_config(const std::filesystem::path& p) {
    Config c;
    for (const auto& row : read_rows(p)) {
        if (row.size() != 2)
            throw std::runtime_error("config.csv: malformed row");
        const std::string& key = row[0];
        double v = std::stod(row[1]);
        if (key == "period") c.period = (int)v;
        else if (key == "sigma") c.sigma = v;
        else if (key == "rho") c.rho = v;
        else if (key == "horizon_lo") c.horizon_lo = v;
        else if (key == "horizon_hi") c.horizon_hi = v;
        else if (key == "passenger_cutoff") c.passenger_cutoff = v;
        else if (key == "seed") c.seed = (std::uint64_t)v;
        else throw std::runtime_error("config.csv: unknown key '" + key + "'");
    }
    return c;
}

inline void write_config(const std::filesystem::path& p, const Config& c) {
    std::ofstream out(p);
    out << "key;value\n";
    out << "period;" << c.period << "\n";
    out << "sigma;" << c.sigma << "\n";
    out << "rho;" << c.rho << "\n";
    out << "horizon_lo;" << c.horizon_lo << "\n";
    out << "horizon_hi;" << c.horizon_hi << "\n";
    out << "passenger_cutoff;" << c.passenger_cutoff << "\n";
    out << "seed;" << c.seed << "\n";
}

inline PeriodicEan read_ean(const std::filesystem::path& dir, int period) {
    PeriodicEan ean;
    ean.period = period;
    for (const auto& row : read_rows(dir / "events.csv")) {
        if (row.size() != 5) throw std::runtime_error("events.csv: malformed row");
        Event e;
        e.id = row[0];
        e.kind = row[1] == "departure" ? EventKind::departure : EventKind::arrival;
        e.station = row[2];
        e.line = row[3];
        e.weight = std::stod(row[4]);
        ean.events.push_back(std::move(e));
    }
    std::map<std::string, int> idx;
    for (int i = 0; i < (int)ean.events.size(); ++i) idx[ean.events[i].id] = i;
    for (const auto& row : read_rows(dir / "activities.csv")) {
        if (row.size() != 7) throw std::runtime_error("activities.csv: malformed row");
        Activity a;
        a.id = row[0];
        a.kind = row[1] == "drive"  ? ActivityKind::drive
                 : row[1] == "wait" ? ActivityKind::wait
                                    : ActivityKind::change;
        a.source = idx.at(row[2]);
        a.target = idx.at(row[3]);
        a.lower = std::stod(row[4]);
        a.upper = (row[5].empty() || row[5] == "inf") ? kUnboundedUpper : std::stod(row[5]);
        a.weight = std::stod(row[6]);
        ean.activities.push_back(std::move(a));
    }
    ean.finish();
    return ean;
}

inline void write_ean(const std::filesystem::path& dir, const PeriodicEan& ean) {
    std::ofstream ev(dir / "events.csv");
    ev << "id;kind;station;line;weight\n";
    for (const auto& e : ean.events)
        ev << e.id << ";" << to_string(e.kind) << ";" << e.station << ";" << e.line
           << ";" << e.weight << "\n";
    std::ofstream ac(dir / "activities.csv");
    ac << "id;kind;source;target;lower;upper;weight\n";
    for (const auto& a : ean.activities) {
        ac << a.id << ";" << to_string(a.kind) << ";" << ean.events[a.source].id << ";"
           << ean.events[a.target].id << ";" << a.lower << ";";
        if (std::isfinite(a.upper)) ac << a.upper;
        else ac << "inf";
        ac << ";" << a.weight << "\n";
    }
}

inline std::vector<int> read_timetable(const std::filesystem::path& p,
                                       const PeriodicEan& ean) {
    std::vector<int> times(ean.events.size(), 0);
    std::vector<char> seen(ean.events.size(), 0);
    for (const auto& row : read_rows(p)) {
        if (row.size() != 2) throw std::runtime_error("timetable.csv: malformed row");
        int e = ean.event_index(row[0]);
        times[e] = std::stoi(row[1]);
        seen[e] = 1;
    }
    for (std::size_t e = 0; e < seen.size(); ++e)
        if (!seen[e])
            throw std::runtime_error("timetable.csv: missing event " + ean.events[e].id);
    return times;
}

inline void write_timetable(const std::filesystem::path& p, const PeriodicEan& ean,
                            const Timetable& tt) {
    std::ofstream out(p);
    out << "event_id;time\n";
    for (std::size_t e = 0; e < ean.events.size(); ++e)
        out << ean.events[e].id << ";" << tt.time[e] << "\n";
}

inline Scenario read_scenario(const std::filesystem::path& p, const PeriodicEan& ean) {
    Scenario s = Scenario::zeros(ean.events.size(), ean.activities.size());
    std::map<std::string, int> act_idx;
    for (int a = 0; a < (int)ean.activities.size(); ++a)
        act_idx[ean.activities[a].id] = a;
    for (const auto& row : read_rows(p)) {
        if (row.size() != 3) throw std::runtime_error("scenario.csv: malformed row");
        double v = std::stod(row[2]);
        if (row[0] == "event")
            s.event_delay[ean.event_index(row[1])] = v;
        else if (row[0] == "activity")
            s.activity_delay[act_idx.at(row[1])] = v;
        else
            throw std::runtime_error("scenario.csv: unknown element_kind '" + row[0] + "'");
    }
    return s;
}

inline void write_scenario(const std::filesystem::path& p, const PeriodicEan& ean,
                           const Scenario& s) {
    std::ofstream out(p);
    out << "element_kind;element_id;delay\n";
    for (std::size_t e = 0; e < s.event_delay.size(); ++e)
        if (s.event_delay[e] != 0)
            out << "event;" << ean.events[e].id << ";" << s.event_delay[e] << "\n";
    for (std::size_t a = 0; a < s.activity_delay.size(); ++a)
        if (s.activity_delay[a] != 0)
            out << "activity;" << ean.activities[a].id << ";" << s.activity_delay[a] << "\n";
}

inline void write_delays(const std::filesystem::path& p, const PeriodicEan& ean,
                         const DelaySolution& d) {
    std::ofstream out(p);
    out << "element_kind;element_id;delay\n";
    for (std::size_t e = 0; e < d.event_delay.size(); ++e)
        out << "event;" << ean.events[e].id << ";" << d.event_delay[e] << "\n";
    for (std::size_t a = 0; a < d.activity_delay.size(); ++a)
        out << "activity;" << ean.activities[a].id << ";" << d.activity_delay[a] << "\n";
}

inline void write_trace(const std::filesystem::path& p, const RobustRunState& state) {
    std::ofstream out(p);
    out << "k;lb;ub;wall_seconds;pool_size\n";
    for (const auto& it : state.trace)
        out << it.k << ";" << it.lb << ";" << it.ub << ";" << it.wall_seconds << ";"
            << it.pool_size << "\n";
}

}  // namespace rpt::csv

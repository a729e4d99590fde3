#pragma once

// Shared test fixtures: the two-line worked example with three transfers
// (GOe-H-HH-HB / OL-HB-H-BS), plus small random instances.

#include <random>

#include "rpt/ean.hpp"

namespace fixtures {

using namespace rpt;

struct TwoLineExample {
    PeriodicEan ean;
    std::vector<int> times;
    Scenario scenario;
    // activity indices
    int drive_goe_h = 0, wait_h_l1 = 1, drive_h_hh = 2, wait_hh = 3, drive_hh_hb = 4;
    int drive_ol_hb = 5, wait_hb = 6, drive_hb_h = 7, wait_h_l2 = 8, drive_h_bs = 9;
    int ch_h_l1_l2 = 10, ch_hb_l1_l2 = 11, ch_h_l2_l1 = 12;
};

// Two lines over a 60-minute period, all drive/wait buffers zero (L_a equals
// the timetabled duration), transfers with small lower bounds and no upper
// bound. Drives are weighted heavier than waits/changes so the disposition
// timetable under the published source delays is the unique P-DM optimum
// (with uniform weights several zero-cost event shifts tie with it).
inline TwoLineExample two_line_example() {
    TwoLineExample fx;
    auto& ean = fx.ean;
    ean.period = 60;
    auto ev = [&](const std::string& id, EventKind k, const std::string& st,
                  const std::string& line) {
        ean.events.push_back({id, k, st, line, 1.0});
        return (int)ean.events.size() - 1;
    };
    int goe_dep = ev("l1_dep_GOe", EventKind::departure, "GOe", "l1");
    int h_arr1 = ev("l1_arr_H", EventKind::arrival, "H", "l1");
    int h_dep1 = ev("l1_dep_H", EventKind::departure, "H", "l1");
    int hh_arr = ev("l1_arr_HH", EventKind::arrival, "HH", "l1");
    int hh_dep = ev("l1_dep_HH", EventKind::departure, "HH", "l1");
    int hb_arr1 = ev("l1_arr_HB", EventKind::arrival, "HB", "l1");
    int ol_dep = ev("l2_dep_OL", EventKind::departure, "OL", "l2");
    int hb_arr2 = ev("l2_arr_HB", EventKind::arrival, "HB", "l2");
    int hb_dep2 = ev("l2_dep_HB", EventKind::departure, "HB", "l2");
    int h_arr2 = ev("l2_arr_H", EventKind::arrival, "H", "l2");
    int h_dep2 = ev("l2_dep_H", EventKind::departure, "H", "l2");
    int bs_arr = ev("l2_arr_BS", EventKind::arrival, "BS", "l2");

    fx.times = {0, 15, 18, 30, 33, 50, 35, 57, 0, 22, 25, 40};

    auto act = [&](const std::string& id, ActivityKind k, int s, int t, double lo,
                   double up, double w) {
        ean.activities.push_back({id, s, t, k, lo, up, w});
    };
    act("dr_goe_h", ActivityKind::drive, goe_dep, h_arr1, 15, 15, 2);
    act("wt_h_l1", ActivityKind::wait, h_arr1, h_dep1, 3, 3, 1);
    act("dr_h_hh", ActivityKind::drive, h_dep1, hh_arr, 12, 12, 2);
    act("wt_hh", ActivityKind::wait, hh_arr, hh_dep, 3, 3, 1);
    act("dr_hh_hb", ActivityKind::drive, hh_dep, hb_arr1, 17, 17, 2);
    act("dr_ol_hb", ActivityKind::drive, ol_dep, hb_arr2, 22, 22, 2);
    act("wt_hb", ActivityKind::wait, hb_arr2, hb_dep2, 3, 3, 1);
    act("dr_hb_h", ActivityKind::drive, hb_dep2, h_arr2, 22, 22, 2);
    act("wt_h_l2", ActivityKind::wait, h_arr2, h_dep2, 3, 3, 1);
    act("dr_h_bs", ActivityKind::drive, h_dep2, bs_arr, 15, 15, 2);
    act("ch_h_12", ActivityKind::change, h_arr1, h_dep2, 2, kUnboundedUpper, 1);
    act("ch_hb_12", ActivityKind::change, hb_arr1, hb_dep2, 2, kUnboundedUpper, 1);
    act("ch_h_21", ActivityKind::change, h_arr2, h_dep1, 4, kUnboundedUpper, 1);
    ean.finish();

    fx.scenario = Scenario::zeros(ean.events.size(), ean.activities.size());
    fx.scenario.activity_delay[fx.drive_goe_h] = 8;
    fx.scenario.activity_delay[fx.drive_h_hh] = 2;
    fx.scenario.activity_delay[fx.drive_hh_hb] = 5;
    fx.scenario.activity_delay[fx.wait_h_l2] = 7;
    fx.scenario.event_delay[h_dep2] = 10;
    return fx;
}

// Random multi-line instance with small period, for brute-force cross checks.
// Every line is a chain of 2-3 stations; transfers connect consecutive lines.
inline PeriodicEan small_random_ean(std::uint64_t seed, int n_lines = 2, int period = 10,
                                    double max_slack = 2) {
    std::mt19937_64 rng(seed);
    PeriodicEan ean;
    ean.period = period;
    std::uniform_int_distribution<int> len(2, 3), lo(1, 3), wgt(1, 5);
    std::uniform_int_distribution<int> slack(0, (int)max_slack);
    std::vector<int> last_arr_of_line;
    std::vector<int> first_dep_of_line;
    for (int l = 0; l < n_lines; ++l) {
        std::string lid = "l" + std::to_string(l);
        int k = len(rng);
        int prev = -1;
        for (int st = 0; st < k; ++st) {
            std::string sid = "s" + std::to_string(st);
            if (st > 0) {
                ean.events.push_back({lid + "_arr_" + sid, EventKind::arrival, sid, lid,
                                      (double)wgt(rng)});
                int arr = (int)ean.events.size() - 1;
                double L = lo(rng);
                ean.activities.push_back({"dr_" + lid + "_" + sid, prev, arr,
                                          ActivityKind::drive, L, L + slack(rng),
                                          (double)wgt(rng)});
                if (st + 1 < k) {
                    ean.events.push_back({lid + "_dep_" + sid, EventKind::departure, sid,
                                          lid, (double)wgt(rng)});
                    int dep = (int)ean.events.size() - 1;
                    ean.activities.push_back({"wt_" + lid + "_" + sid, arr, dep,
                                              ActivityKind::wait, 1,
                                              1 + (double)slack(rng), (double)wgt(rng)});
                    prev = dep;
                } else {
                    last_arr_of_line.push_back(arr);
                }
            } else {
                ean.events.push_back({lid + "_dep_" + sid, EventKind::departure, sid, lid,
                                      (double)wgt(rng)});
                prev = (int)ean.events.size() - 1;
                first_dep_of_line.push_back(prev);
            }
        }
    }
    for (int l = 0; l + 1 < n_lines; ++l) {
        ean.activities.push_back({"ch_" + std::to_string(l), last_arr_of_line[l],
                                  first_dep_of_line[l + 1], ActivityKind::change, 1,
                                  kUnboundedUpper, (double)wgt(rng)});
    }
    ean.finish();
    return ean;
}

}  // namespace fixtures

#pragma once

#include <string>
#include <vector>

#include "tyfo/features.hpp"
#include "tyfo/hurdat2.hpp"
#include "tyfo/rng.hpp"

namespace tyfo_test {

inline std::string fixture_path(const std::string& name) { return std::string(TYFO_FIXTURE_DIR) + "/" + name; }

// The reference merged record (landfall point of AL142024 MILTON).
inline const char* kMiltonMergedLine =
    "AL142024_MILTON,20241010,0030,L,HU,27.4N,82.6W,100,"
    "958,180,170,110,220,60,60,70,90,30,30,30,30,20";

inline tyfo::StormRecord milton_golden_record() {
    auto [id, rec] = tyfo::parse_merged_line(kMiltonMergedLine);
    (void)id;
    return rec;
}

inline tyfo::StormId milton_id() {
    auto [id, rec] = tyfo::parse_merged_line(kMiltonMergedLine);
    (void)rec;
    return id;
}

// Clean synthetic track: n records at exact 6 h cadence froms the given start,
// linear motion in degrees per step.
inline tyfo::StormTrack synthetic_track(int n, double lat0 = 15.0, double lon0 = -45.0, double dlat = 0.2,
                                        double dlon = -0.4, int year = 2010) {
    tyfo::StormTrack t;
    t.id = {"AL", 9, year, "SYNTH"};
    tyfo::DateTime dt{year, 8, 1, 0, 0};
    for (int i = 0; i < n; ++i) {
        tyfo::StormRecord r;
        r.timestamp = dt;
        r.status = "TS";
        r.lat_deg = lat0 + i * dlat;
        r.lon_deg = lon0 + i * dlon;
        r.max_wind_kt = 50;
        r.min_pressure_mb = 990;
        r.r34 = {100, 90, 80, 110};
        t.records.push_back(r);
        dt.minute = 0;
        int h = dt.hour + 6;
        if (h >= 24) {
            h -= 24;
            ++dt.day;
            if (dt.day > 28) {
                dt.day = 1;
                ++dt.month;
            }
        }
        dt.hour = h;
    }
    return t;
}

// Constant-turning-rate track: heading rotates by `turn` radians per step.
inline tyfo::StormTrack curved_track(int n, tyfo::SplitMix64& rng, int year, int number) {
    tyfo::StormTrack t;
    t.id = {"AL", number, year, "CURVE"};
    double lat = rng.uniform(14.0, 28.0);
    double lon = rng.uniform(-80.0, -40.0);
    double speed = rng.uniform(0.25, 0.7);
    double heading = rng.uniform(0.0, 6.283185307179586);
    double turn = (rng.next_unit() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.06, 0.22);
    int wind = static_cast<int>(rng.uniform(35.0, 95.0));
    tyfo::DateTime dt{year, 9, 1, 0, 0};
    for (int i = 0; i < n; ++i) {
        tyfo::StormRecord r;
        r.timestamp = dt;
        r.status = wind >= 64 ? "HU" : "TS";
        r.lat_deg = lat;
        r.lon_deg = lon;
        r.max_wind_kt = wind;
        r.min_pressure_mb = 1008 - static_cast<int>(wind * 0.7);
        r.r34 = {90, 80, 70, 100};
        t.records.push_back(r);
        lat += speed * std::cos(heading);
        lon += speed * std::sin(heading);
        heading += turn;
        int h = dt.hour + 6;
        if (h >= 24) {
            h -= 24;
            ++dt.day;
            if (dt.day > 28) {
                dt.day = 1;
                ++dt.month;
            }
        }
        dt.hour = h;
    }
    return t;
}

}  // namespace tyfo_test

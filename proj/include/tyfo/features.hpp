#pragma once

// Storm records -> normalized 22-feature sequences with (lat, lon) forecast
// targets at 6-hourly horizons. Windowing only ever spans records sitting on
// the synoptic cadence (00/06/12/18 UTC, minute 0) with exact 6 h gaps, so a
// horizon of k steps is always k*6 hours of real time.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "tyfo/errors.hpp"
#include "tyfo/hurdat2.hpp"

namespace tyfo {

inline constexpr int kFeatureDim = 22;

struct FeatureVector {
    std::array<double, kFeatureDim> values{};
};

// Indices into FeatureVector::values.
enum Feature : int {
    kLat = 0,
    kLon = 1,
    kMaxWind = 2,
    kMinPressure = 3,
    kR34 = 4,   // ..7, NE SE SW NW
    kR50 = 8,   // ..11
    kR64 = 12,  // ..15
    kRmw = 16,
    kSinHour = 17,
    kCosHour = 18,
    kSinDoy = 19,
    kCosDoy = 20,
    kLandfallFlag = 21,
};

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const LatLon&) const = default;
};

struct Window {
    StormId storm;
    std::vector<FeatureVector> inputs;       // length T
    std::vector<StormRecord> input_records;  // length T
    std::vector<LatLon> targets;             // length K, degrees, horizons 1..K
};

inline FeatureVector extract_features(const StormRecord& r) {
    FeatureVector f;
    auto& v = f.values;
    v[kLat] = r.lat_deg;
    v[kLon] = r.lon_deg;
    v[kMaxWind] = r.max_wind_kt;
    v[kMinPressure] = r.min_pressure_mb;
    for (int q = 0; q < 4; ++q) {
        v[kR34 + q] = r.r34[q];
        v[kR50 + q] = r.r50[q];
        v[kR64 + q] = r.r64[q];
    }
    v[kRmw] = r.radius_max_wind;
    double day_frac = (r.timestamp.hour + r.timestamp.minute / 60.0) / 24.0;
    double hour_phase = 2.0 * std::numbers::pi * day_frac;
    v[kSinHour] = std::sin(hour_phase);
    v[kCosHour] = std::cos(hour_phase);
    double doy_phase = 2.0 * std::numbers::pi * (r.timestamp.day_of_year() - 1 + day_frac) / 365.25;
    v[kSinDoy] = std::sin(doy_phase);
    v[kCosDoy] = std::cos(doy_phase);
    v[kLandfallFlag] = (r.record_id == 'L') ? 1.0 : 0.0;
    return f;
}

struct NormalizationStats {
    std::array<double, kFeatureDim> mean{};
    std::array<double, kFeatureDim> stddev{};

    FeatureVector normalize(const FeatureVector& f) const {
        FeatureVector out;
        for (int i = 0; i < kFeatureDim; ++i) out.values[i] = (f.values[i] - mean[i]) / stddev[i];
        return out;
    }

    FeatureVector denormalize(const FeatureVector& f) const {
        FeatureVector out;
        for (int i = 0; i < kFeatureDim; ++i) out.values[i] = f.values[i] * stddev[i] + mean[i];
        return out;
    }

    // Position helpers for the lat/lon coordinate pair (features 0 and 1).
    LatLon normalize_pos(const LatLon& p) const {
        return {(p.lat - mean[kLat]) / stddev[kLat], (p.lon - mean[kLon]) / stddev[kLon]};
    }
};

// Per-feature z-score statistics over every record of the training tracks.
// Population convention; features with (near-)zero variance get std = 1.
inline NormalizationStats fit_normalization(const std::vector<StormTrack>& tracks) {
    size_t n = 0;
    std::array<double, kFeatureDim> sum{};
    std::vector<FeatureVector> feats;
    for (const auto& t : tracks)
        for (const auto& r : t.records) {
            feats.push_back(extract_features(r));
            for (int i = 0; i < kFeatureDim; ++i) sum[i] += feats.back().values[i];
            ++n;
        }
    if (n == 0) throw EmptyTrainingSet();

    NormalizationStats s;
    for (int i = 0; i < kFeatureDim; ++i) s.mean[i] = sum[i] / static_cast<double>(n);
    std::array<double, kFeatureDim> sq{};
    for (const auto& f : feats)
        for (int i = 0; i < kFeatureDim; ++i) {
            double d = f.values[i] - s.mean[i];
            sq[i] += d * d;
        }
    for (int i = 0; i < kFeatureDim; ++i) {
        double sd = std::sqrt(sq[i] / static_cast<double>(n));
        s.stddev[i] = (sd < 1e-12) ? 1.0 : sd;
    }
    return s;
}

namespace detail {

inline bool on_synoptic_cadence(const DateTime& t) {
    return t.minute == 0 && (t.hour % 6) == 0;
}

}  // namespace detail

// One window per start index over the synoptic subsequence of each storm,
// requiring exact 6 h spacing across the whole T+K span. Storms shorter than
// T+K (after cadence filtering) contribute nothing.
inline std::vector<Window> make_windows(const std::vector<StormTrack>& tracks, int history_len, int horizons) {
    std::vector<Window> out;
    if (history_len < 1 || horizons < 1) throw Error("make_windows: T and K must be >= 1");
    const int64_t step_min = 6 * 60;
    for (const auto& t : tracks) {
        std::vector<const StormRecord*> syn;
        for (const auto& r : t.records)
            if (detail::on_synoptic_cadence(r.timestamp)) syn.push_back(&r);
        int span = history_len + horizons;
        if (static_cast<int>(syn.size()) < span) continue;
        for (size_t start = 0; start + span <= syn.size(); ++start) {
            bool cadence_ok = true;
            for (int j = 1; j < span; ++j) {
                int64_t dt = syn[start + j]->timestamp.total_minutes() - syn[start + j - 1]->timestamp.total_minutes();
                if (dt != step_min) {
                    cadence_ok = false;
                    break;
                }
            }
            if (!cadence_ok) continue;
            Window w;
            w.storm = t.id;
            for (int j = 0; j < history_len; ++j) {
                const StormRecord& r = *syn[start + j];
                w.input_records.push_back(r);
                w.inputs.push_back(extract_features(r));
            }
            for (int k = 0; k < horizons; ++k) {
                const StormRecord& r = *syn[start + history_len + k];
                w.targets.push_back({r.lat_deg, r.lon_deg});
            }
            out.push_back(std::move(w));
        }
    }
    return out;
}

struct YearSplit {
    std::vector<StormTrack> train;
    std::vector<StormTrack> test;
    int dropped = 0;
};

inline YearSplit split_by_year(const std::vector<StormTrack>& tracks, int train_from = 2004, int train_to = 2021,
                               int test_from = 2022, int test_to = 2024) {
    YearSplit s;
    for (const auto& t : tracks) {
        int y = t.id.year;
        if (y >= train_from && y <= train_to)
            s.train.push_back(t);
        else if (y >= test_from && y <= test_to)
            s.test.push_back(t);
        else
            ++s.dropped;
    }
    return s;
}

}  // namespace tyfo

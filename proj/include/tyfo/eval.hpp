#pragma once

// Forecast quality metrics and the classical baselines: per-horizon MAE in
// degrees, spherical distance error in km (Earth radius 6371 km), persistence
// and a constant-motion extrapolation ("cliper_lite", a motion-persistence
// stand-in for the classical climatology-and-persistence model).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "tyfo/checkpoint.hpp"
#include "tyfo/errors.hpp"
#include "tyfo/features.hpp"

namespace tyfo {

inline constexpr double kEarthRadiusKm = 6371.0;

// Great-circle distance via the spherical law of cosines, with the dot
// product clamped into [-1, 1]: for near-identical points rounding pushes it
// past 1 and arccos would return NaN. Value-identical points short-circuit to
// exactly 0 km, which the clamped formula alone cannot guarantee.
inline double delta_r(const LatLon& pred, const LatLon& truth) {
    if (pred.lat == truth.lat && pred.lon == truth.lon) return 0.0;
    constexpr double rad = std::numbers::pi / 180.0;
    double phi_p = pred.lat * rad, phi_r = truth.lat * rad;
    double dot = std::sin(phi_p) * std::sin(phi_r) +
                 std::cos(phi_p) * std::cos(phi_r) * std::cos((pred.lon - truth.lon) * rad);
    if (dot > 1.0) dot = 1.0;
    if (dot < -1.0) dot = -1.0;
    return kEarthRadiusKm * std::acos(dot);
}

struct ForecastResult {
    StormId storm;
    DateTime last_input_time;
    std::vector<LatLon> predicted;  // horizons 1..K, degrees
    std::vector<LatLon> truth;      // same length
};

// Per-horizon mean of mean(|dlat|, |dlon|), in degrees.
inline std::vector<double> mae(const std::vector<ForecastResult>& results) {
    if (results.empty()) throw NoData("mae");
    size_t horizons = results[0].predicted.size();
    std::vector<double> out(horizons, 0.0);
    for (const auto& r : results)
        for (size_t k = 0; k < horizons; ++k)
            out[k] += 0.5 * (std::abs(r.predicted[k].lat - r.truth[k].lat) +
                             std::abs(r.predicted[k].lon - r.truth[k].lon));
    for (double& v : out) v /= static_cast<double>(results.size());
    return out;
}

inline std::vector<double> mean_delta_r(const std::vector<ForecastResult>& results) {
    if (results.empty()) throw NoData("delta_r");
    size_t horizons = results[0].predicted.size();
    std::vector<double> out(horizons, 0.0);
    for (const auto& r : results)
        for (size_t k = 0; k < horizons; ++k) out[k] += delta_r(r.predicted[k], r.truth[k]);
    for (double& v : out) v /= static_cast<double>(results.size());
    return out;
}

// Every horizon repeats the last observed position.
inline std::vector<LatLon> persistence(const Window& w) {
    const StormRecord& last = w.input_records.back();
    return std::vector<LatLon>(w.targets.size(), LatLon{last.lat_deg, last.lon_deg});
}

// Constant motion: mean displacement per step over the last min(4, T-1)
// steps, extrapolated linearly in degrees.
inline std::vector<LatLon> cliper_lite(const Window& w) {
    size_t t_steps = w.input_records.size();
    if (t_steps < 2) throw InsufficientHistory();
    size_t use = std::min<size_t>(4, t_steps - 1);
    double vlat = 0.0, vlon = 0.0;
    for (size_t i = t_steps - use; i < t_steps; ++i) {
        vlat += w.input_records[i].lat_deg - w.input_records[i - 1].lat_deg;
        vlon += w.input_records[i].lon_deg - w.input_records[i - 1].lon_deg;
    }
    vlat /= static_cast<double>(use);
    vlon /= static_cast<double>(use);
    const StormRecord& last = w.input_records.back();
    std::vector<LatLon> out;
    out.reserve(w.targets.size());
    for (size_t k = 1; k <= w.targets.size(); ++k)
        out.push_back({last.lat_deg + static_cast<double>(k) * vlat, last.lon_deg + static_cast<double>(k) * vlon});
    return out;
}

struct MetricCell {
    double mae_deg = 0.0;
    double delta_r_km = 0.0;
    int n = 0;
};

struct MetricTable {
    std::vector<std::string> models;
    std::vector<int> horizons_h;                               // lead times in hours
    std::map<std::string, std::vector<MetricCell>> cells;      // model -> per-horizon

    std::string to_csv() const {
        std::string out = "model,horizon_h,metric,value,n\n";
        for (const auto& m : models) {
            const auto& row = cells.at(m);
            for (size_t k = 0; k < row.size(); ++k)
                out += m + "," + std::to_string(horizons_h[k]) + ",mae_deg," + detail::double_str(row[k].mae_deg) +
                       "," + std::to_string(row[k].n) + "\n";
            for (size_t k = 0; k < row.size(); ++k)
                out += m + "," + std::to_string(horizons_h[k]) + ",delta_r_km," +
                       detail::double_str(row[k].delta_r_km) + "," + std::to_string(row[k].n) + "\n";
        }
        return out;
    }

    // Human-readable layout: one row per model, MAE columns then delta-R columns.
    std::string to_pretty() const {
        auto fmt = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%10.3f", v);
            return std::string(buf);
        };
        std::string out = "model            ";
        for (int h : horizons_h) out += "  MAE(deg) " + std::to_string(h) + "h";
        for (int h : horizons_h) out += "   dR(km) " + std::to_string(h) + "h";
        out += "\n";
        for (const auto& m : models) {
            char name[32];
            std::snprintf(name, sizeof name, "%-16s", m.c_str());
            out += name;
            const auto& row = cells.at(m);
            for (const auto& c : row) out += fmt(c.mae_deg) + "  ";
            for (const auto& c : row) out += fmt(c.delta_r_km) + " ";
            out += "\n";
        }
        return out;
    }
};

inline MetricTable build_metric_table(const std::map<std::string, std::vector<ForecastResult>>& per_model,
                                      int cadence_hours = 6) {
    MetricTable table;
    for (const auto& [name, results] : per_model) {
        if (results.empty()) throw NoData("metric table for model " + name);
        if (table.horizons_h.empty())
            for (size_t k = 1; k <= results[0].predicted.size(); ++k)
                table.horizons_h.push_back(static_cast<int>(k) * cadence_hours);
        auto m = mae(results);
        auto d = mean_delta_r(results);
        std::vector<MetricCell> row(m.size());
        for (size_t k = 0; k < m.size(); ++k) row[k] = {m[k], d[k], static_cast<int>(results.size())};
        table.cells[name] = std::move(row);
    }
    // Row order mirrors the comparison layout: the trained model first, then baselines.
    for (const char* preferred : {"typhoformer", "persistence", "cliper_lite"})
        if (table.cells.count(preferred)) table.models.push_back(preferred);
    for (const auto& [name, _] : table.cells)
        if (std::find(table.models.begin(), table.models.end(), name) == table.models.end())
            table.models.push_back(name);
    return table;
}

}  // namespace tyfo

#pragma once

// GeoJSON FeatureCollection export for qualitative track comparison: one
// LineString per model plus ground truth, and full best-track dumps.
// Coordinates follow the GeoJSON convention [lon, lat].

#include <string>
#include <vector>

#include <json.hpp>

#include "tyfo/hurdat2.hpp"
#include "tyfo/pipeline.hpp"

namespace tyfo {

inline nlohmann::ordered_json forecast_to_geojson(const ForecastRun& run) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::ordered_json::array();
    for (const char* model : {"typhoformer", "persistence", "cliper_lite", "truth"}) {
        auto it = run.paths.find(model);
        if (it == run.paths.end()) continue;
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        nlohmann::ordered_json props;
        props["model"] = model;
        props["storm"] = run.storm.code();
        props["name"] = run.storm.name;
        props["start"] = run.start.compact();
        std::vector<int> horizons;
        nlohmann::ordered_json coords = nlohmann::ordered_json::array();
        coords.push_back({run.origin[0].lon, run.origin[0].lat});
        horizons.push_back(0);
        for (size_t k = 0; k < it->second.size(); ++k) {
            coords.push_back({it->second[k].lon, it->second[k].lat});
            horizons.push_back(static_cast<int>(k + 1) * 6);
        }
        props["horizons_h"] = horizons;
        f["properties"] = std::move(props);
        f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
        fc["features"].push_back(std::move(f));
    }
    return fc;
}

inline nlohmann::ordered_json track_to_geojson(const StormTrack& track) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    std::vector<std::string> times;
    for (const auto& r : track.records) {
        coords.push_back({r.lon_deg, r.lat_deg});
        times.push_back(r.timestamp.compact());
    }
    f["properties"] = {{"model", "best_track"},
                       {"storm", track.id.code()},
                       {"name", track.id.name},
                       {"times", times}};
    f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
    fc["features"] = nlohmann::ordered_json::array({std::move(f)});
    return fc;
}

}  // namespace tyfo

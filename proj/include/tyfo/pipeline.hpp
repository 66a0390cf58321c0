#pragma once

// Glue between the data modules and the commands: load tracks, build splits
// and windows, run the model plus baselines over a test set, and assemble a
// single-start forecast.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tyfo/config.hpp"
#include "tyfo/eval.hpp"
#include "tyfo/errors.hpp"
#include "tyfo/features.hpp"
#include "tyfo/hurdat2.hpp"
#include "tyfo/model.hpp"
#include "tyfo/train.hpp"

namespace tyfo {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

inline std::vector<StormTrack> load_tracks(const std::string& path) { return parse_hurdat2(read_file(path)); }

// Model + baseline forecasts over the given windows; optional filter keeps
// only storms from one season (the per-year sub-table layout).
inline std::map<std::string, std::vector<ForecastResult>> run_models(const std::vector<Window>& windows,
                                                                     const PromptProvider& provider,
                                                                     const ModelParams& params, const ModelConfig& cfg,
                                                                     const NormalizationStats& stats,
                                                                     std::optional<int> year_filter = std::nullopt) {
    std::map<std::string, std::vector<ForecastResult>> per_model;
    for (const auto& w : windows) {
        if (year_filter && w.storm.year != *year_filter) continue;
        ForecastResult base;
        base.storm = w.storm;
        base.last_input_time = w.input_records.back().timestamp;
        base.truth = w.targets;

        ForecastResult model = base;
        model.predicted = forward_degrees(w, provider.for_window(w, cfg.prompt_mode), params, cfg, stats);
        per_model["typhoformer"].push_back(std::move(model));

        ForecastResult pers = base;
        pers.predicted = persistence(w);
        per_model["persistence"].push_back(std::move(pers));

        ForecastResult cliper = base;
        cliper.predicted = cliper_lite(w);
        per_model["cliper_lite"].push_back(std::move(cliper));
    }
    if (per_model.empty()) throw NoData("no windows to evaluate");
    return per_model;
}

inline MetricTable evaluate_models(const std::vector<Window>& windows, const PromptProvider& provider,
                                   const ModelParams& params, const ModelConfig& cfg, const NormalizationStats& stats,
                                   std::optional<int> year_filter = std::nullopt) {
    return build_metric_table(run_models(windows, provider, params, cfg, stats, year_filter));
}

// One row per window, model and horizon, predictions next to ground truth.
inline std::string forecasts_to_csv(const std::map<std::string, std::vector<ForecastResult>>& per_model) {
    std::string out = "model,storm,start,horizon_h,pred_lat,pred_lon,truth_lat,truth_lon\n";
    for (const auto& [name, results] : per_model)
        for (const auto& r : results)
            for (size_t k = 0; k < r.predicted.size(); ++k)
                out += name + "," + r.storm.key() + "," + r.last_input_time.compact() + "," +
                       std::to_string((k + 1) * 6) + "," + detail::double_str(r.predicted[k].lat) + "," +
                       detail::double_str(r.predicted[k].lon) + "," + detail::double_str(r.truth[k].lat) + "," +
                       detail::double_str(r.truth[k].lon) + "\n";
    return out;
}

// Window export: raw (unnormalized) feature rows for each input step, then
// one target row per horizon. Target rows populate only the coordinate
// columns.
inline std::string windows_to_csv(const std::vector<Window>& windows) {
    std::string out =
        "storm,window,kind,index,timestamp,lat,lon,max_wind,min_pressure,"
        "r34_ne,r34_se,r34_sw,r34_nw,r50_ne,r50_se,r50_sw,r50_nw,r64_ne,r64_se,r64_sw,r64_nw,"
        "rmw,sin_hour,cos_hour,sin_doy,cos_doy,landfall\n";
    for (size_t wi = 0; wi < windows.size(); ++wi) {
        const Window& w = windows[wi];
        for (size_t t = 0; t < w.inputs.size(); ++t) {
            out += w.storm.key() + "," + std::to_string(wi) + ",input," + std::to_string(t) + "," +
                   w.input_records[t].timestamp.compact();
            for (double v : w.inputs[t].values) out += "," + detail::double_str(v);
            out += "\n";
        }
        int64_t last_min = w.input_records.back().timestamp.total_minutes();
        for (size_t k = 0; k < w.targets.size(); ++k) {
            // targets sit on the 6-hourly cadence after the last input
            DateTime ts = DateTime::from_total_minutes(last_min + static_cast<int64_t>(k + 1) * 360);
            out += w.storm.key() + "," + std::to_string(wi) + ",target," + std::to_string(k + 1) + "," +
                   ts.compact() + "," + detail::double_str(w.targets[k].lat) + "," +
                   detail::double_str(w.targets[k].lon) + ",,,,,,,,,,,,,,,,,,,,\n";
        }
    }
    return out;
}

// One forecast start: the model plus baselines from the T records ending at
// `start`, with ground truth rows when the track extends far enough.
struct ForecastRun {
    StormId storm;
    DateTime start;
    std::vector<LatLon> origin;                       // single entry: position at start
    std::map<std::string, std::vector<LatLon>> paths;  // model -> horizons 1..K (or truth, possibly shorter)
};

inline ForecastRun forecast_from(const std::vector<StormTrack>& tracks, const StormId& storm, const DateTime& start,
                                 const PromptProvider& provider, const ModelParams& params, const ModelConfig& cfg,
                                 const NormalizationStats& stats) {
    const StormTrack* track = nullptr;
    for (const auto& t : tracks)
        if (t.id.code() == storm.code()) track = &t;
    if (!track) throw NoData("storm " + storm.code() + " not found");

    std::vector<const StormRecord*> syn;
    for (const auto& r : track->records)
        if (detail::on_synoptic_cadence(r.timestamp)) syn.push_back(&r);
    int at = -1;
    for (size_t i = 0; i < syn.size(); ++i)
        if (syn[i]->timestamp == start) at = static_cast<int>(i);
    if (at < 0) throw NoData("no synoptic record at " + start.compact() + " for " + storm.code());
    if (at + 1 < cfg.history_len)
        throw NoData("needs " + std::to_string(cfg.history_len) + " records of history before " + start.compact());

    Window w;
    w.storm = track->id;
    for (int j = at - cfg.history_len + 1; j <= at; ++j) {
        w.input_records.push_back(*syn[j]);
        w.inputs.push_back(extract_features(*syn[j]));
    }
    const int64_t step_min = 6 * 60;
    for (int j = 1; j < cfg.history_len; ++j)
        if (w.input_records[j].timestamp.total_minutes() - w.input_records[j - 1].timestamp.total_minutes() != step_min)
            throw NoData("history before " + start.compact() + " is not on a continuous 6-hourly cadence");

    // Horizon targets are optional at forecast time; reuse them when present.
    std::vector<LatLon> truth;
    for (int k = 1; k <= cfg.horizons && at + k < static_cast<int>(syn.size()); ++k) {
        if (syn[at + k]->timestamp.total_minutes() - syn[at + k - 1]->timestamp.total_minutes() != step_min) break;
        truth.push_back({syn[at + k]->lat_deg, syn[at + k]->lon_deg});
    }
    w.targets.assign(cfg.horizons, LatLon{});  // placeholders; model input does not read targets

    ForecastRun run;
    run.storm = track->id;
    run.start = start;
    run.origin.push_back({syn[at]->lat_deg, syn[at]->lon_deg});
    run.paths["typhoformer"] = forward_degrees(w, provider.for_window(w, cfg.prompt_mode), params, cfg, stats);
    run.paths["persistence"] = persistence(w);
    run.paths["cliper_lite"] = cliper_lite(w);
    if (!truth.empty()) run.paths["truth"] = std::move(truth);
    return run;
}

inline std::string forecast_to_csv(const ForecastRun& run) {
    std::string out = "storm,start,model,horizon_h,lat_deg,lon_deg\n";
    std::string prefix = run.storm.key() + "," + run.start.compact() + ",";
    auto add_row = [&](const std::string& model, int h, const LatLon& p) {
        out += prefix + model + "," + std::to_string(h) + "," + detail::double_str(p.lat) + "," +
               detail::double_str(p.lon) + "\n";
    };
    for (const char* model : {"typhoformer", "persistence", "cliper_lite", "truth"}) {
        auto it = run.paths.find(model);
        if (it == run.paths.end()) continue;
        add_row(model, 0, run.origin[0]);
        for (size_t k = 0; k < it->second.size(); ++k) add_row(model, static_cast<int>(k + 1) * 6, it->second[k]);
    }
    return out;
}

inline ForecastRun parse_forecast_csv(const std::string& text) {
    ForecastRun run;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != "storm,start,model,horizon_h,lat_deg,lon_deg")
        throw Error("forecast csv: unexpected header");
    int line_no = 1;
    bool have_origin = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::strip(line).empty()) continue;
        auto f = detail::split_fields(line);
        if (f.size() != 6) throw Error("forecast csv line " + std::to_string(line_no) + ": expected 6 fields");
        size_t us = f[0].find('_');
        if (us == std::string::npos) throw Error("forecast csv line " + std::to_string(line_no) + ": bad storm key");
        run.storm = detail::parse_storm_code(f[0].substr(0, us), f[0].substr(us + 1), line_no);
        std::string ts(f[1]);
        if (ts.size() != 12) throw Error("forecast csv line " + std::to_string(line_no) + ": bad start timestamp");
        run.start = detail::parse_date_time(ts.substr(0, 8), ts.substr(8, 4), line_no);
        int h = detail::parse_int(f[3], line_no, "horizon");
        LatLon p{detail::parse_double(f[4], line_no, "lat"), detail::parse_double(f[5], line_no, "lon")};
        if (h == 0) {
            if (!have_origin) {
                run.origin.push_back(p);
                have_origin = true;
            }
        } else {
            run.paths[std::string(f[2])].push_back(p);
        }
    }
    if (!have_origin) throw Error("forecast csv: no origin (horizon 0) row");
    return run;
}

}  // namespace tyfo

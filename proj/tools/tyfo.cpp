// Command-line pipeline driver: parse / prompt / train / evaluate / forecast /
// export-geojson over a flat key=value run configuration.
//
// Exit codes: 0 success, 2 usage, 3 data or config error, 4 numeric divergence.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tyfo/config.hpp"
#include "tyfo/geojson.hpp"
#include "tyfo/pipeline.hpp"

namespace {

using namespace tyfo;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct LoadedCaches {
    PromptCache prompts;
    EmbeddingCache embeddings;
    bool have_prompts = false;
    bool have_embeddings = false;
};

LoadedCaches load_caches(const RunConfig& cfg) {
    LoadedCaches c;
    if (!cfg.prompt_cache_path.empty()) {
        c.prompts = load_prompts(cfg.prompt_cache_path);
        c.have_prompts = true;
    }
    if (!cfg.embedding_cache_path.empty()) {
        c.embeddings = load_embeddings(cfg.embedding_cache_path, cfg.model.d_txt);
        c.have_embeddings = true;
    }
    return c;
}

int cmd_parse(const std::string& input, const std::string& output) {
    auto tracks = load_tracks(input);
    if (!output.empty()) write_file(output, render_hurdat2(tracks));
    size_t records = 0;
    for (const auto& t : tracks) {
        std::printf("%s %-12s %4zu records\n", t.id.code().c_str(), t.id.name.c_str(), t.records.size());
        records += t.records.size();
    }
    std::printf("%zu storms, %zu records\n", tracks.size(), records);
    return kExitOk;
}

int cmd_prompt(const std::string& input, const std::string& output, const std::string& import_path) {
    auto tracks = load_tracks(input);
    PromptCache imported;
    if (!import_path.empty()) imported = load_prompts(import_path);
    std::vector<PromptText> prompts;
    for (const auto& t : tracks)
        for (const auto& r : t.records) {
            PromptKey key{t.id.key(), r.timestamp.compact()};
            auto it = imported.find(key);
            prompts.push_back(it != imported.end() ? it->second : generate_prompt(t.id, r));
        }
    save_prompts(output, prompts);
    std::printf("%zu prompts -> %s\n", prompts.size(), output.c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path) {
    RunConfig cfg = parse_run_config(config_path);
    apply_seed_override(cfg);
    if (cfg.data_path.empty()) throw ConfigError("train needs 'data'");

    auto tracks = load_tracks(cfg.data_path);
    YearSplit split = split_by_year(tracks, cfg.train_year_from, cfg.train_year_to, cfg.test_year_from,
                                    cfg.test_year_to);
    if (split.dropped > 0) std::fprintf(stderr, "note: %d storms outside both year ranges dropped\n", split.dropped);
    NormalizationStats stats = fit_normalization(split.train);
    auto windows = make_windows(split.train, cfg.model.history_len, cfg.model.horizons);
    std::printf("training on %zu windows from %zu storms\n", windows.size(), split.train.size());

    LoadedCaches caches = load_caches(cfg);
    PromptProvider provider(cfg.model.d_txt, caches.have_prompts ? &caches.prompts : nullptr,
                            caches.have_embeddings ? &caches.embeddings : nullptr);

    TrainResult result = train(windows, provider, cfg.model, cfg.train, stats,
                               [](int epoch, double loss) { std::printf("epoch %d loss %.8f\n", epoch, loss); });
    write_file(cfg.report_path, result.report.to_csv());
    std::printf("checkpoint -> %s\nreport -> %s\n", cfg.checkpoint_path.c_str(), cfg.report_path.c_str());
    return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint, std::optional<int> years,
                 const std::string& output, const std::string& dump_forecasts) {
    RunConfig cfg = parse_run_config(config_path);
    if (cfg.data_path.empty()) throw ConfigError("evaluate needs 'data'");
    auto tracks = load_tracks(cfg.data_path);
    YearSplit split = split_by_year(tracks, cfg.train_year_from, cfg.train_year_to, cfg.test_year_from,
                                    cfg.test_year_to);
    auto windows = make_windows(split.test, cfg.model.history_len, cfg.model.horizons);

    LoadedModel model = load_model_checkpoint(checkpoint, cfg.model);
    LoadedCaches caches = load_caches(cfg);
    PromptProvider provider(cfg.model.d_txt, caches.have_prompts ? &caches.prompts : nullptr,
                            caches.have_embeddings ? &caches.embeddings : nullptr);

    auto per_model = run_models(windows, provider, model.params, cfg.model, model.stats, years);
    MetricTable table = build_metric_table(per_model);
    std::string path = output.empty() ? cfg.metrics_path : output;
    write_file(path, table.to_csv());
    if (!dump_forecasts.empty()) {
        write_file(dump_forecasts, forecasts_to_csv(per_model));
        std::printf("forecast dump -> %s\n", dump_forecasts.c_str());
    }
    std::printf("%s", table.to_pretty().c_str());
    std::printf("metrics -> %s\n", path.c_str());
    return kExitOk;
}

int cmd_windows(const std::string& config_path, const std::string& split_name, const std::string& output) {
    RunConfig cfg = parse_run_config(config_path);
    if (cfg.data_path.empty()) throw ConfigError("windows needs 'data'");
    auto tracks = load_tracks(cfg.data_path);
    YearSplit split = split_by_year(tracks, cfg.train_year_from, cfg.train_year_to, cfg.test_year_from,
                                    cfg.test_year_to);
    std::vector<Window> windows;
    if (split_name == "train")
        windows = make_windows(split.train, cfg.model.history_len, cfg.model.horizons);
    else if (split_name == "test")
        windows = make_windows(split.test, cfg.model.history_len, cfg.model.horizons);
    else if (split_name == "all")
        windows = make_windows(tracks, cfg.model.history_len, cfg.model.horizons);
    else
        throw Error("split must be train, test or all");
    write_file(output, windows_to_csv(windows));
    std::printf("%zu windows -> %s\n", windows.size(), output.c_str());
    return kExitOk;
}

int cmd_forecast(const std::string& config_path, const std::string& checkpoint, const std::string& storm_code,
                 const std::string& start_str, const std::string& output) {
    RunConfig cfg = parse_run_config(config_path);
    if (cfg.data_path.empty()) throw ConfigError("forecast needs 'data'");
    if (storm_code.size() != 8) throw Error("storm must be an 8-char code like AL142024");
    if (start_str.size() != 12) throw Error("start must be YYYYMMDDHHMM");

    StormId id = detail::parse_storm_code(storm_code, "X", 0);
    DateTime start = detail::parse_date_time(start_str.substr(0, 8), start_str.substr(8, 4), 0);

    auto tracks = load_tracks(cfg.data_path);
    LoadedModel model = load_model_checkpoint(checkpoint, cfg.model);
    LoadedCaches caches = load_caches(cfg);
    PromptProvider provider(cfg.model.d_txt, caches.have_prompts ? &caches.prompts : nullptr,
                            caches.have_embeddings ? &caches.embeddings : nullptr);

    ForecastRun run = forecast_from(tracks, id, start, provider, model.params, cfg.model, model.stats);
    std::string csv = forecast_to_csv(run);
    if (output.empty())
        std::printf("%s", csv.c_str());
    else {
        write_file(output, csv);
        std::printf("forecast -> %s\n", output.c_str());
    }
    return kExitOk;
}

int cmd_export_geojson(const std::string& forecast_csv, const std::string& config_path, const std::string& storm_code,
                       const std::string& output) {
    nlohmann::ordered_json geo;
    if (!forecast_csv.empty()) {
        geo = forecast_to_geojson(parse_forecast_csv(read_file(forecast_csv)));
    } else {
        if (config_path.empty() || storm_code.empty())
            throw Error("export-geojson needs either --forecast or --config plus --storm");
        RunConfig cfg = parse_run_config(config_path);
        if (cfg.data_path.empty()) throw ConfigError("export-geojson needs 'data'");
        auto tracks = load_tracks(cfg.data_path);
        const StormTrack* track = nullptr;
        for (const auto& t : tracks)
            if (t.id.code() == storm_code) track = &t;
        if (!track) throw NoData("storm " + storm_code + " not found");
        geo = track_to_geojson(*track);
    }
    write_file(output, geo.dump(2) + "\n");
    std::printf("geojson -> %s\n", output.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"typhoon track forecasting pipeline"};
    app.require_subcommand(1);

    std::string input, output, import_path, config_path, checkpoint, storm_code, start_str, forecast_csv;
    std::string dump_forecasts, split_name = "all";
    std::optional<int> years;

    auto* parse = app.add_subcommand("parse", "parse HURDAT2 and write the canonical rendering");
    parse->add_option("-i,--input", input, "HURDAT2 text file")->required();
    parse->add_option("-o,--output", output, "canonical rendering destination");

    auto* prompt = app.add_subcommand("prompt", "generate (or merge imported) prompt cache");
    prompt->add_option("-i,--input", input, "HURDAT2 text file")->required();
    prompt->add_option("-o,--output", output, "prompt cache destination")->required();
    prompt->add_option("--import", import_path, "existing prompt cache overriding the template");

    auto* train_cmd = app.add_subcommand("train", "train from a run config");
    train_cmd->add_option("-c,--config", config_path, "run config file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "metric table on the test split");
    evaluate->add_option("-c,--config", config_path, "run config file")->required();
    evaluate->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    evaluate->add_option("--years", years, "restrict to storms of one season");
    evaluate->add_option("-o,--output", output, "metrics CSV destination (defaults to config 'metrics')");
    evaluate->add_option("--dump-forecasts", dump_forecasts, "per-window forecast CSV destination");

    auto* windows_cmd = app.add_subcommand("windows", "export feature windows as CSV");
    windows_cmd->add_option("-c,--config", config_path, "run config file")->required();
    windows_cmd->add_option("--split", split_name, "train, test or all (default all)");
    windows_cmd->add_option("-o,--output", output, "windows CSV destination")->required();

    auto* forecast = app.add_subcommand("forecast", "per-horizon coordinates from one start time");
    forecast->add_option("-c,--config", config_path, "run config file")->required();
    forecast->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    forecast->add_option("--storm", storm_code, "storm code, e.g. AL142024")->required();
    forecast->add_option("--start", start_str, "last observed time, YYYYMMDDHHMM")->required();
    forecast->add_option("-o,--output", output, "forecast CSV destination (default stdout)");

    auto* geojson = app.add_subcommand("export-geojson", "LineString per model, or a best track");
    geojson->add_option("--forecast", forecast_csv, "forecast CSV from the forecast command");
    geojson->add_option("-c,--config", config_path, "run config (for --storm exports)");
    geojson->add_option("--storm", storm_code, "storm code for a best-track export");
    geojson->add_option("-o,--output", output, "geojson destination")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (parse->parsed()) return cmd_parse(input, output);
        if (prompt->parsed()) return cmd_prompt(input, output, import_path);
        if (train_cmd->parsed()) return cmd_train(config_path);
        if (evaluate->parsed()) return cmd_evaluate(config_path, checkpoint, years, output, dump_forecasts);
        if (windows_cmd->parsed()) return cmd_windows(config_path, split_name, output);
        if (forecast->parsed()) return cmd_forecast(config_path, checkpoint, storm_code, start_str, output);
        if (geojson->parsed()) return cmd_export_geojson(forecast_csv, config_path, storm_code, output);
    } catch (const DivergedLoss& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDiverged;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}

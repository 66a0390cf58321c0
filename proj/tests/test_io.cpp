#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "test_util.hpp"
#include "tyfo/checkpoint.hpp"
#include "tyfo/config.hpp"
#include "tyfo/geojson.hpp"
#include "tyfo/pipeline.hpp"

using namespace tyfo;

namespace {

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("run config parses and validates", "[io]") {
    write("cfg_test.cfg",
          "# comment\n"
          "data = tracks.txt\n"
          "d_model = 32\n"
          "n_heads = 4\n"
          "history_length = 6\n"
          "lr = 0.002\n"
          "seed = 9\n"
          "epochs = 12\n"
          "prompt_mode = per_step\n"
          "train_years = 2004-2021\n"
          "test_years = 2022-2024\n");
    RunConfig c = parse_run_config("cfg_test.cfg");
    CHECK(c.data_path == "tracks.txt");
    CHECK(c.model.d_model == 32);
    CHECK(c.model.n_heads == 4);
    CHECK(c.model.history_len == 6);
    CHECK(c.model.prompt_mode == PromptMode::kPerStep);
    CHECK(c.train.lr == 0.002);
    CHECK(c.train.seed == 9);
    CHECK(c.train.epochs == 12);
    CHECK(c.train_year_from == 2004);
    CHECK(c.test_year_to == 2024);

    SECTION("unknown keys are a hard error") {
        write("cfg_test.cfg", "data = x\nlearning_rate = 0.1\n");
        CHECK_THROWS_AS(parse_run_config("cfg_test.cfg"), ConfigError);
    }
    SECTION("duplicate keys are a hard error") {
        write("cfg_test.cfg", "seed = 1\nseed = 2\n");
        CHECK_THROWS_AS(parse_run_config("cfg_test.cfg"), ConfigError);
    }
    SECTION("bad values are a hard error") {
        write("cfg_test.cfg", "epochs = soon\n");
        CHECK_THROWS_AS(parse_run_config("cfg_test.cfg"), ConfigError);
        write("cfg_test.cfg", "train_years = 2021-2004\n");
        CHECK_THROWS_AS(parse_run_config("cfg_test.cfg"), ConfigError);
        write("cfg_test.cfg", "prompt_mode = always\n");
        CHECK_THROWS_AS(parse_run_config("cfg_test.cfg"), ConfigError);
    }
    std::remove("cfg_test.cfg");
}

TEST_CASE("seed override comes from the environment", "[io]") {
    write("cfg_seed.cfg", "seed = 7\n");
    RunConfig c = parse_run_config("cfg_seed.cfg");
    setenv("TYFO_SEED", "123", 1);
    apply_seed_override(c);
    CHECK(c.train.seed == 123);
    unsetenv("TYFO_SEED");
    apply_seed_override(c);
    CHECK(c.train.seed == 123);
    std::remove("cfg_seed.cfg");
}

TEST_CASE("checkpoint container round-trips bit-exactly", "[io]") {
    SplitMix64 rng(70);
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::vector<double> v(12);
    for (auto& x : v) x = rng.uniform(-1e6, 1e6) * std::pow(10.0, -static_cast<double>(rng.below(12)));
    tensors.emplace_back("a.w", Tensor({3, 4}, v));
    tensors.emplace_back("b", Tensor::scalar(-0.0));
    save_checkpoint("ckpt_io.tyfo", tensors);
    auto loaded = load_checkpoint("ckpt_io.tyfo");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at("a.w").shape() == Shape{3, 4});
    CHECK(loaded.at("a.w").data() == v);  // exact doubles through text

    save_checkpoint("ckpt_io2.tyfo", tensors);
    CHECK(read_file("ckpt_io.tyfo") == read_file("ckpt_io2.tyfo"));

    SECTION("header and malformed lines are typed errors") {
        write("ckpt_io.tyfo", "WRONG\n");
        CHECK_THROWS_AS(load_checkpoint("ckpt_io.tyfo"), CheckpointError);
        write("ckpt_io.tyfo", "TYFO1\nname_no_pipes\n");
        CHECK_THROWS_AS(load_checkpoint("ckpt_io.tyfo"), CheckpointError);
        write("ckpt_io.tyfo", "TYFO1\nw|2x2|1,2,3\n");
        CHECK_THROWS_AS(load_checkpoint("ckpt_io.tyfo"), CheckpointError);
    }
    std::remove("ckpt_io.tyfo");
    std::remove("ckpt_io2.tyfo");
}

TEST_CASE("forecast run and exports", "[io]") {
    auto tracks = parse_hurdat2(read_file(tyfo_test::fixture_path("overfit5.txt")));
    ModelConfig cfg;
    cfg.d_txt = 16;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    NormalizationStats stats = fit_normalization(tracks);
    PromptProvider provider(cfg.d_txt);
    ModelParams params = init_params(cfg, 3);

    // 15-record storms: index 7 (eighth record) is the earliest valid start
    const StormTrack& storm = tracks[0];
    DateTime start = storm.records[7].timestamp;
    ForecastRun run = forecast_from(tracks, storm.id, start, provider, params, cfg, stats);
    CHECK(run.paths.count("typhoformer") == 1);
    CHECK(run.paths.count("persistence") == 1);
    CHECK(run.paths.count("cliper_lite") == 1);
    CHECK(run.paths.count("truth") == 1);
    CHECK(run.paths.at("truth").size() == 4);  // records 8..11 exist
    // zero-initialized decoder: the model path sits on the origin
    for (const auto& p : run.paths.at("typhoformer")) {
        CHECK(p.lat == run.origin[0].lat);
        CHECK(p.lon == run.origin[0].lon);
    }

    std::string csv = forecast_to_csv(run);
    CHECK(csv.rfind("storm,start,model,horizon_h,lat_deg,lon_deg\n", 0) == 0);
    // 4 models x (origin + 4 horizons) + header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 5);

    // CSV -> run -> CSV reproduces the paths
    ForecastRun back = parse_forecast_csv(csv);
    CHECK(back.storm.code() == run.storm.code());
    CHECK(back.start == run.start);
    CHECK(back.origin[0] == run.origin[0]);
    CHECK(back.paths.at("truth") == run.paths.at("truth"));
    CHECK(back.paths.at("typhoformer") == run.paths.at("typhoformer"));

    auto geo = forecast_to_geojson(run);
    CHECK(geo["type"] == "FeatureCollection");
    REQUIRE(geo["features"].size() == 4);
    for (const auto& f : geo["features"]) {
        CHECK(f["type"] == "Feature");
        CHECK(f["geometry"]["type"] == "LineString");
        CHECK(f["geometry"]["coordinates"].size() == 5);
        // GeoJSON order: [lon, lat]
        double lon = f["geometry"]["coordinates"][0][0].get<double>();
        CHECK(lon == run.origin[0].lon);
    }

    auto track_geo = track_to_geojson(storm);
    CHECK(track_geo["features"][0]["geometry"]["coordinates"].size() == storm.records.size());

    SECTION("missing storm or start is a typed error") {
        StormId unknown{"AL", 99, 1999, "GHOST"};
        CHECK_THROWS_AS(forecast_from(tracks, unknown, start, provider, params, cfg, stats), NoData);
        DateTime bad = start;
        bad.minute = 30;
        CHECK_THROWS_AS(forecast_from(tracks, storm.id, bad, provider, params, cfg, stats), NoData);
        // too little history before the second record
        CHECK_THROWS_AS(forecast_from(tracks, storm.id, storm.records[1].timestamp, provider, params, cfg, stats),
                        NoData);
    }
}

TEST_CASE("window export carries raw features and cadence targets", "[io]") {
    auto tracks = parse_hurdat2(read_file(tyfo_test::fixture_path("overfit5.txt")));
    auto windows = make_windows(tracks, 8, 4);
    REQUIRE_FALSE(windows.empty());
    std::string csv = windows_to_csv(windows);
    // one header + (8 inputs + 4 targets) per window
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(windows.size()) * 12);
    CHECK(csv.rfind("storm,window,kind,index,timestamp,lat,lon,", 0) == 0);
    // first input row of the first window carries its record values
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.find(windows[0].storm.key() + ",0,input,0," + windows[0].input_records[0].timestamp.compact()) == 0);
}

TEST_CASE("per-window forecast dump pairs predictions with truth", "[io]") {
    auto tracks = parse_hurdat2(read_file(tyfo_test::fixture_path("overfit5.txt")));
    ModelConfig cfg;
    cfg.d_txt = 16;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    auto windows = make_windows(tracks, cfg.history_len, cfg.horizons);
    NormalizationStats stats = fit_normalization(tracks);
    PromptProvider provider(cfg.d_txt);
    ModelParams params = init_params(cfg, 8);
    auto per_model = run_models(windows, provider, params, cfg, stats);
    std::string csv = forecasts_to_csv(per_model);
    CHECK(csv.rfind("model,storm,start,horizon_h,pred_lat,pred_lon,truth_lat,truth_lon\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * static_cast<long>(windows.size()) * 4);
}

TEST_CASE("truncated truth when the track ends early", "[io]") {
    auto tracks = parse_hurdat2(read_file(tyfo_test::fixture_path("overfit5.txt")));
    ModelConfig cfg;
    cfg.d_txt = 16;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    NormalizationStats stats = fit_normalization(tracks);
    PromptProvider provider(cfg.d_txt);
    ModelParams params = init_params(cfg, 3);
    const StormTrack& storm = tracks[0];
    // start at the third-to-last record: only 2 future records exist
    DateTime start = storm.records[storm.records.size() - 3].timestamp;
    ForecastRun run = forecast_from(tracks, storm.id, start, provider, params, cfg, stats);
    CHECK(run.paths.at("truth").size() == 2);
    CHECK(run.paths.at("typhoformer").size() == 4);  // forecasts go the full K regardless
}

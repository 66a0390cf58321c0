#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "test_util.hpp"
#include "tyfo/pipeline.hpp"
#include "tyfo/train.hpp"

using namespace tyfo;

namespace {

struct Setup {
    std::vector<Window> windows;
    NormalizationStats stats;
    ModelConfig mcfg;
};

Setup overfit_setup(int n_tracks = 2) {
    Setup s;
    s.mcfg.d_txt = 16;
    s.mcfg.d_model = 16;
    s.mcfg.d_ff = 32;
    s.mcfg.history_len = 4;
    s.mcfg.horizons = 2;
    std::vector<StormTrack> tracks;
    for (int i = 0; i < n_tracks; ++i)
        tracks.push_back(tyfo_test::synthetic_track(8, 14.0 + i, -50.0 - 2 * i, 0.15 + 0.05 * i, -0.3, 2010 + i));
    s.stats = fit_normalization(tracks);
    s.windows = make_windows(tracks, s.mcfg.history_len, s.mcfg.horizons);
    return s;
}

}  // namespace

TEST_CASE("loss matches a brute-force two-loop sum", "[train]") {
    CHECK(loss(Tensor::row({1, 2, 3, 4}), Tensor::row({1, 2, 3, 4})).item() == 0.0);
    CHECK(loss(Tensor::row({2, 3, 4, 5}), Tensor::row({1, 2, 3, 4})).item() == 1.0);

    SplitMix64 rng(50);
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = rng.uniform(-3, 3);
    for (auto& v : b) v = rng.uniform(-3, 3);
    double expect = 0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 1; ++j) expect += (a[i] - b[i]) * (a[i] - b[i]);
    expect /= 8;
    CHECK(loss(Tensor({4, 2}, a), Tensor({4, 2}, b)).item() == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("training reduces the loss on a single window", "[train]") {
    Setup s = overfit_setup(1);
    REQUIRE(s.windows.size() >= 1);
    s.windows.resize(1);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    t.epochs = 200;
    t.batch_size = 1;
    t.seed = 1;
    TrainResult r = train(s.windows, provider, s.mcfg, t, s.stats);
    REQUIRE(r.report.epoch_loss.size() == 200);
    CHECK(r.report.epoch_loss.back() < r.report.epoch_loss.front());
    CHECK(r.report.epoch_loss.back() < 1e-4);
}

TEST_CASE("single-sample loss is monotone non-increasing after warmup", "[train]") {
    Setup s = overfit_setup(1);
    s.windows.resize(1);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    t.epochs = 500;
    t.batch_size = 1;
    t.seed = 3;
    t.lr = 2e-5;  // below the step size where momentum ringing sets in
    TrainResult r = train(s.windows, provider, s.mcfg, t, s.stats);
    for (size_t e = 5; e + 1 < r.report.epoch_loss.size(); ++e)
        CHECK(r.report.epoch_loss[e + 1] <= r.report.epoch_loss[e] + 1e-12);
    CHECK(r.report.epoch_loss.back() < 0.5 * r.report.epoch_loss.front());
}

TEST_CASE("identical seeds give identical loss curves and checkpoints", "[train]") {
    Setup s = overfit_setup(2);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    t.epochs = 5;
    t.batch_size = 4;
    t.seed = 42;
    t.checkpoint_path = "ckpt_a.tyfo";
    TrainResult a = train(s.windows, provider, s.mcfg, t, s.stats);
    t.checkpoint_path = "ckpt_b.tyfo";
    TrainResult b = train(s.windows, provider, s.mcfg, t, s.stats);
    CHECK(a.report.epoch_loss == b.report.epoch_loss);

    std::string ca = read_file("ckpt_a.tyfo");
    std::string cb = read_file("ckpt_b.tyfo");
    CHECK(ca == cb);

    t.seed = 43;
    t.checkpoint_path = "ckpt_c.tyfo";
    TrainResult c = train(s.windows, provider, s.mcfg, t, s.stats);
    CHECK(a.report.epoch_loss != c.report.epoch_loss);
    std::remove("ckpt_a.tyfo");
    std::remove("ckpt_b.tyfo");
    std::remove("ckpt_c.tyfo");
}

TEST_CASE("gradient clipping bounds the global norm", "[train]") {
    std::vector<double> g1{3.0, 4.0};           // norm 5
    std::vector<double> g2{0.0, 12.0, 5.0};     // norm 13 -> total sqrt(25+169+... )
    std::vector<std::vector<double>*> grads{&g1, &g2};
    double pre = detail::clip_gradients(grads, 1.0);
    CHECK(pre == Catch::Approx(std::sqrt(25.0 + 169.0)).margin(1e-12));
    double post_sq = 0;
    for (auto* g : grads)
        for (double v : *g) post_sq += v * v;
    CHECK(std::sqrt(post_sq) <= 1.0 + 1e-9);

    std::vector<double> small{0.1, 0.1};
    std::vector<std::vector<double>*> sg{&small};
    detail::clip_gradients(sg, 1.0);
    CHECK(small[0] == 0.1);  // under the cap: untouched
}

TEST_CASE("empty training set and divergence are typed errors", "[train]") {
    Setup s = overfit_setup(1);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    CHECK_THROWS_AS(train({}, provider, s.mcfg, t, s.stats), NoTrainingData);

    // a non-finite-producing input (overflowing coordinate) must surface as
    // DivergedLoss, not NaN checkpoints
    t.epochs = 2;
    t.batch_size = 1;
    std::vector<Window> one{s.windows[0]};
    one[0].input_records[0].lat_deg = 1e308;
    one[0].inputs[0].values[kLat] = 1e308;
    CHECK_THROWS_AS(train(one, provider, s.mcfg, t, s.stats), DivergedLoss);
}

TEST_CASE("checkpoint restores the exact model", "[train]") {
    Setup s = overfit_setup(2);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    t.epochs = 3;
    t.batch_size = 8;
    t.checkpoint_path = "ckpt_round.tyfo";
    TrainResult r = train(s.windows, provider, s.mcfg, t, s.stats);

    LoadedModel loaded = load_model_checkpoint("ckpt_round.tyfo", s.mcfg);
    double before = evaluate_loss(s.windows, provider, r.params, s.mcfg, s.stats);
    double after = evaluate_loss(s.windows, provider, loaded.params, s.mcfg, loaded.stats);
    CHECK(before == after);  // bit-exact round trip

    ModelConfig wrong = s.mcfg;
    wrong.d_model = 24;
    CHECK_THROWS_AS(load_model_checkpoint("ckpt_round.tyfo", wrong), CheckpointError);
    std::remove("ckpt_round.tyfo");
}

TEST_CASE("train report CSV has one line per epoch", "[train]") {
    Setup s = overfit_setup(1);
    PromptProvider provider(s.mcfg.d_txt);
    TrainConfig t;
    t.epochs = 4;
    t.batch_size = 2;
    TrainResult r = train(s.windows, provider, s.mcfg, t, s.stats);
    std::string csv = r.report.to_csv();
    CHECK(csv.rfind("epoch,loss,seconds\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("provider falls back from cache to template", "[train]") {
    StormId id = tyfo_test::milton_id();
    StormRecord rec = tyfo_test::milton_golden_record();

    PromptCache cache;
    PromptText custom{id, rec.timestamp, "a custom cached description"};
    cache[{id.key(), rec.timestamp.compact()}] = custom;

    PromptProvider with_cache(16, &cache);
    PromptProvider without_cache(16);
    HashedTextEmbedder emb(16);
    CHECK(with_cache.get(id, rec).mean == emb.embed(custom.text).mean);
    CHECK(without_cache.get(id, rec).mean == emb.embed(generate_prompt(id, rec).text).mean);

    // a record absent from the cache falls back to the template
    StormRecord other = rec;
    other.timestamp.day = 11;
    CHECK(with_cache.get(id, other).mean == emb.embed(generate_prompt(id, other).text).mean);

    // imported embeddings beat cached prompt text
    EmbeddingCache ecache;
    std::vector<double> unit(16, 0.0);
    unit[0] = 1.0;
    ecache[{id.key(), rec.timestamp.compact()}] = unit;
    PromptProvider with_emb(16, &cache, &ecache);
    CHECK(with_emb.get(id, rec).mean == unit);
}

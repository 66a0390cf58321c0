#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tyfo/embed.hpp"
#include "tyfo/prompt.hpp"

using namespace tyfo;

TEST_CASE("tokenizer splits on whitespace and punctuation, keeps numbers whole", "[embed]") {
    CHECK(tokenize("100 knots.") == std::vector<std::string>{"100", "knots"});
    CHECK(tokenize("27.4\xC2\xB0N") == std::vector<std::string>{"27.4", "n"});  // degree sign separates
    CHECK(tokenize("At 00:30 UTC") == std::vector<std::string>{"at", "00", "30", "utc"});
    CHECK(tokenize("34-knot") == std::vector<std::string>{"34", "knot"});
    CHECK_THROWS_AS(tokenize(""), EmptyText);
    CHECK_THROWS_AS(tokenize(" ,;- "), EmptyText);
}

TEST_CASE("golden prompt token count is frozen", "[embed]") {
    PromptText p = generate_prompt(tyfo_test::milton_id(), tyfo_test::milton_golden_record());
    auto toks = tokenize(p.text);
    CHECK(toks.size() == 118);
    HashedTextEmbedder emb(64);
    CHECK(emb.embed(p.text).tokens.size() == 118);
}

TEST_CASE("identical tokens share one vector; mean matches", "[embed]") {
    HashedTextEmbedder emb(64);
    PromptEmbedding e = emb.embed("storm storm");
    REQUIRE(e.tokens.size() == 2);
    CHECK(e.tokens[0] == e.tokens[1]);
    for (int i = 0; i < 64; ++i) CHECK(e.mean[i] == Catch::Approx(e.tokens[0][i]).margin(1e-12));
}

TEST_CASE("embedding is bit-deterministic", "[embed]") {
    HashedTextEmbedder emb(64);
    PromptText p = generate_prompt(tyfo_test::milton_id(), tyfo_test::milton_golden_record());
    PromptEmbedding a = emb.embed(p.text);
    PromptEmbedding b = emb.embed(p.text);
    CHECK(a.tokens == b.tokens);
    CHECK(a.mean == b.mean);
}

TEST_CASE("frozen reference values pin the hash and expansion", "[embed]") {
    // FNV-1a 64 of well-known strings (independent published constants).
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 12638187200555641996ULL);
    CHECK(fnv1a64("foobar") == 9625390261332436968ULL);
}

TEST_CASE("token vectors are unit norm; mean norm at most 1", "[embed]") {
    HashedTextEmbedder emb(32);
    PromptText p = generate_prompt(tyfo_test::milton_id(), tyfo_test::milton_golden_record());
    PromptEmbedding e = emb.embed(p.text);
    for (const auto& t : e.tokens) {
        double n = 0;
        for (double v : t) n += v * v;
        CHECK(std::sqrt(n) == Catch::Approx(1.0).margin(1e-9));
    }
    double mn = 0;
    for (double v : e.mean) mn += v * v;
    CHECK(std::sqrt(mn) <= 1.0 + 1e-9);
    CHECK(std::sqrt(mn) < 1.0);  // distinct tokens present, so strictly inside
}

TEST_CASE("stored mean equals an independently recomputed average", "[embed]") {
    HashedTextEmbedder emb(64);
    PromptText p = generate_prompt(tyfo_test::milton_id(), tyfo_test::milton_golden_record());
    PromptEmbedding e = emb.embed(p.text);
    for (int i = 0; i < 64; ++i) {
        double s = 0.0;
        for (const auto& t : e.tokens) s += t[i];
        s /= static_cast<double>(e.tokens.size());
        CHECK(e.mean[i] == Catch::Approx(s).margin(1e-9));
    }
}

TEST_CASE("dimension below 8 is rejected", "[embed]") {
    CHECK_THROWS_AS(HashedTextEmbedder(7), Error);
}

TEST_CASE("embedding import file round trip and errors", "[embed]") {
    std::string path = "embed_cache_test.txt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "AL142024_MILTON|202410100030|8|1,0,0,0,0,0,0,0\n";
        out << "AL012010_X|201007010600|8|0,2,0,0,0,0,0,0\n";
    }
    EmbeddingCache cache = load_embeddings(path, 8);
    REQUIRE(cache.size() == 2);
    CHECK(cache.at({"AL142024_MILTON", "202410100030"})[0] == 1.0);
    CHECK(cache.at({"AL012010_X", "201007010600"})[1] == 1.0);  // normalized from 2.0

    {
        std::ofstream out(path, std::ios::binary);
        out << "AL142024_MILTON|202410100030|4|1,0,0,0\n";
    }
    CHECK_THROWS_AS(load_embeddings(path, 8), MalformedEmbeddingFile);

    {
        std::ofstream out(path, std::ios::binary);
        out << "AL142024_MILTON|202410100030|8|1,0,0,0,0,0,0,0\n";
        out << "AL142024_MILTON|202410100030|8|1,0,0,0,0,0,0,0\n";
    }
    CHECK_THROWS_AS(load_embeddings(path, 8), DuplicateKey);
    std::remove(path.c_str());
}

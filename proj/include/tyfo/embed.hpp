#pragma once

// Deterministic hashed-token embedder. Each token is lowercased, hashed with
// FNV-1a, and expanded by splitmix64 into a unit vector, so identical tokens
// map to identical vectors on every platform with zero stored weights. A
// pluggable interface lets externally computed sentence vectors (e.g. from a
// pretrained encoder) be imported behind the same contract.

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tyfo/errors.hpp"
#include "tyfo/rng.hpp"

namespace tyfo {

struct PromptEmbedding {
    std::vector<std::vector<double>> tokens;  // M x d_txt, each unit L2 norm
    std::vector<double> mean;                 // d_txt
};

// Lowercase word/number tokens. Digits absorb one interior decimal point, so
// "27.4" stays a single token; every other non-alphanumeric byte separates.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    while (i < text.size()) {
        char c = text[i];
        if (is_digit(c)) {
            size_t j = i + 1;
            while (j < text.size() && is_digit(text[j])) ++j;
            if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
                ++j;
                while (j < text.size() && is_digit(text[j])) ++j;
            }
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else if (is_alpha(c)) {
            size_t j = i + 1;
            while (j < text.size() && is_alpha(text[j])) ++j;
            std::string tok(text.substr(i, j - i));
            for (char& t : tok)
                if (t >= 'A' && t <= 'Z') t = static_cast<char>(t - 'A' + 'a');
            out.push_back(std::move(tok));
            i = j;
        } else {
            ++i;
        }
    }
    if (out.empty()) throw EmptyText();
    return out;
}

inline std::vector<double> hashed_token_vector(std::string_view token, int d_txt) {
    SplitMix64 rng(fnv1a64(token));
    std::vector<double> v(d_txt);
    double norm_sq = 0.0;
    for (int i = 0; i < d_txt; ++i) {
        v[i] = 2.0 * rng.next_unit() - 1.0;  // in (-1, 1), never exactly 0
        norm_sq += v[i] * v[i];
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

class TextEmbedder {
  public:
    virtual ~TextEmbedder() = default;
    virtual PromptEmbedding embed(std::string_view text) const = 0;
    virtual int dim() const = 0;
};

class HashedTextEmbedder final : public TextEmbedder {
  public:
    explicit HashedTextEmbedder(int d_txt) : d_txt_(d_txt) {
        if (d_txt < 8) throw Error("embedding dimension must be >= 8");
    }

    PromptEmbedding embed(std::string_view text) const override {
        auto toks = tokenize(text);
        PromptEmbedding e;
        e.tokens.reserve(toks.size());
        e.mean.assign(d_txt_, 0.0);
        for (const auto& t : toks) {
            e.tokens.push_back(hashed_token_vector(t, d_txt_));
            for (int i = 0; i < d_txt_; ++i) e.mean[i] += e.tokens.back()[i];
        }
        double inv = 1.0 / static_cast<double>(e.tokens.size());
        for (double& x : e.mean) x *= inv;
        return e;
    }

    int dim() const override { return d_txt_; }

  private:
    int d_txt_;
};

using EmbeddingKey = std::pair<std::string, std::string>;  // (storm key, compact timestamp)
using EmbeddingCache = std::map<EmbeddingKey, std::vector<double>>;

// Import file: `BBNNYYYY_NAME|YYYYMMDDHHMM|d_txt|v1,v2,...` per line. Vectors
// are L2-normalized on load and stand in as a single-token embedding, which
// keeps the PromptEmbedding invariants (unit tokens, mean = token average).
inline EmbeddingCache load_embeddings(const std::string& path, int expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open embedding cache: " + path);
    EmbeddingCache cache;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t p1 = line.find('|');
        size_t p2 = (p1 == std::string::npos) ? std::string::npos : line.find('|', p1 + 1);
        size_t p3 = (p2 == std::string::npos) ? std::string::npos : line.find('|', p2 + 1);
        if (p3 == std::string::npos) throw MalformedEmbeddingFile(line_no, "expected key|timestamp|dim|values");
        std::string key = line.substr(0, p1);
        std::string ts = line.substr(p1 + 1, p2 - p1 - 1);
        int dim = 0;
        try {
            dim = std::stoi(line.substr(p2 + 1, p3 - p2 - 1));
        } catch (...) {
            throw MalformedEmbeddingFile(line_no, "bad dimension field");
        }
        if (dim != expected_dim)
            throw MalformedEmbeddingFile(line_no, "dimension " + std::to_string(dim) + " does not match configured " +
                                                      std::to_string(expected_dim));
        std::vector<double> v;
        v.reserve(dim);
        std::string vals = line.substr(p3 + 1);
        size_t pos = 0;
        while (pos <= vals.size()) {
            size_t comma = vals.find(',', pos);
            std::string cell = vals.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                v.push_back(std::stod(cell));
            } catch (...) {
                throw MalformedEmbeddingFile(line_no, "bad float '" + cell + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (static_cast<int>(v.size()) != dim)
            throw MalformedEmbeddingFile(line_no, "expected " + std::to_string(dim) + " values, got " +
                                                      std::to_string(v.size()));
        double norm_sq = 0.0;
        for (double x : v) norm_sq += x * x;
        if (!(norm_sq > 0.0)) throw MalformedEmbeddingFile(line_no, "zero vector");
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
        EmbeddingKey k{key, ts};
        if (cache.count(k)) throw DuplicateKey(key + "|" + ts);
        cache.emplace(std::move(k), std::move(v));
    }
    return cache;
}

}  // namespace tyfo

#pragma once

// Named-tensor container: `TYFO1` header, then one `name|shape|csv-floats`
// line per tensor. Floats use shortest round-trip formatting, so identical
// tensors always serialize to identical bytes.

#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <system_error>
#include <vector>

#include "tyfo/errors.hpp"
#include "tyfo/tensor.hpp"

namespace tyfo {

namespace detail {

inline std::string double_str(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline double parse_double_exact(std::string_view s, int line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw CheckpointError("line " + std::to_string(line_no) + ": bad float '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path);
    out << "TYFO1\n";
    for (const auto& [name, t] : tensors) {
        out << name << "|";
        const auto& s = t.shape();
        for (size_t i = 0; i < s.size(); ++i) out << (i ? "x" : "") << s[i];
        out << "|";
        const auto& d = t.data();
        for (size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << detail::double_str(d[i]);
        out << "\n";
    }
    if (!out) throw CheckpointError("write failed: " + path);
}

inline std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || (line != "TYFO1" && line != "TYFO1\r"))
        throw CheckpointError(path + ": missing TYFO1 header");
    std::map<std::string, Tensor> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t p1 = line.find('|');
        size_t p2 = (p1 == std::string::npos) ? std::string::npos : line.find('|', p1 + 1);
        if (p2 == std::string::npos)
            throw CheckpointError("line " + std::to_string(line_no) + ": expected name|shape|values");
        std::string name = line.substr(0, p1);
        Shape shape;
        {
            std::string dims = line.substr(p1 + 1, p2 - p1 - 1);
            size_t pos = 0;
            while (pos <= dims.size()) {
                size_t x = dims.find('x', pos);
                std::string cell = dims.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
                int d = 0;
                auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
                if (ec != std::errc() || p != cell.data() + cell.size() || d <= 0)
                    throw CheckpointError("line " + std::to_string(line_no) + ": bad shape '" + dims + "'");
                shape.push_back(d);
                if (x == std::string::npos) break;
                pos = x + 1;
            }
        }
        std::vector<double> vals;
        {
            std::string csv = line.substr(p2 + 1);
            size_t pos = 0;
            while (pos <= csv.size()) {
                size_t c = csv.find(',', pos);
                std::string_view cell(csv.data() + pos, (c == std::string::npos ? csv.size() : c) - pos);
                vals.push_back(detail::parse_double_exact(cell, line_no));
                if (c == std::string::npos) break;
                pos = c + 1;
            }
        }
        if (out.count(name)) throw CheckpointError("duplicate tensor '" + name + "'");
        try {
            out.emplace(name, Tensor(shape, std::move(vals)));
        } catch (const ShapeMismatch&) {
            throw CheckpointError("line " + std::to_string(line_no) + ": shape/value count mismatch for '" + name + "'");
        }
    }
    return out;
}

}  // namespace tyfo

#pragma once

// Deterministic natural-language description of a storm record, used as the
// textual context that gets embedded and fused with the numeric features.
// Wind radii are echoed with the same values and "km" label the upstream
// description generator used, even though HURDAT2 stores nautical miles; the
// text is an embedding input, and fidelity to the reference phrasing wins
// over unit pedantry (see README).

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tyfo/errors.hpp"
#include "tyfo/hurdat2.hpp"

namespace tyfo {

struct PromptText {
    StormId storm;
    DateTime timestamp;
    std::string text;
};

namespace detail {

inline const char* month_name(int m) {
    static constexpr std::array<const char*, 12> names = {"January",   "February", "March",    "April",
                                                          "May",       "June",     "July",     "August",
                                                          "September", "October",  "November", "December"};
    return names[m - 1];
}

inline std::string status_word(std::string_view status) {
    if (status == "HU") return "Hurricane";
    if (status == "TS") return "Tropical Storm";
    if (status == "TD") return "Tropical Depression";
    if (status == "SS") return "Subtropical Storm";
    if (status == "SD") return "Subtropical Depression";
    if (status == "EX") return "Extratropical Cyclone";
    if (status == "LO") return "Low";
    if (status == "WV") return "Tropical Wave";
    if (status == "DB") return "Disturbance";
    return "System";
}

inline std::string coord_str(double v, char pos_hemi, char neg_hemi) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f\xC2\xB0%c", v < 0 ? -v : v, v < 0 ? neg_hemi : pos_hemi);
    return buf;
}

// One sentence per wind-radius tier. Three shapes, picked from the value
// pattern: all four quadrants equal / NE==SE pair / all listed individually.
inline std::string radii_sentence(const char* lead, const char* verb, const std::array<int, 4>& r) {
    std::ostringstream s;
    s << lead << verb << " ";
    bool all_equal = r[0] == r[1] && r[1] == r[2] && r[2] == r[3];
    if (all_equal) {
        s << r[0] << " km in all four quadrants.";
    } else if (r[0] == r[1]) {
        s << r[0] << " km in both the northeast and southeast, and " << r[2] << " km and " << r[3]
          << " km in the southwest and northwest quadrants, respectively.";
    } else {
        s << r[0] << " km in the northeast quadrant, " << r[1] << " km in the southeast, " << r[2]
          << " km in the southwest, and " << r[3] << " km in the northwest.";
    }
    return s.str();
}

inline bool tier_all_missing(const std::array<bool, 4>& m) { return m[0] && m[1] && m[2] && m[3]; }

}  // namespace detail

inline PromptText generate_prompt(const StormId& id, const StormRecord& r) {
    std::ostringstream s;
    char head[64];
    std::snprintf(head, sizeof head, "At %02d:%02d UTC on %s %d, %d, ", r.timestamp.hour, r.timestamp.minute,
                  detail::month_name(r.timestamp.month), r.timestamp.day, r.timestamp.year);
    s << head << detail::status_word(r.status) << " " << id.name << " (" << id.code() << ") was located at "
      << detail::coord_str(r.lat_deg, 'N', 'S') << ", " << detail::coord_str(r.lon_deg, 'E', 'W') << ".";

    if (!r.missing.max_wind && !r.missing.min_pressure) {
        s << " The storm had maximum sustained winds of " << r.max_wind_kt << " knots and a central pressure of "
          << r.min_pressure_mb << " hPa.";
    } else if (!r.missing.max_wind) {
        s << " The storm had maximum sustained winds of " << r.max_wind_kt << " knots.";
    } else if (!r.missing.min_pressure) {
        s << " The storm had a central pressure of " << r.min_pressure_mb << " hPa.";
    }

    if (!detail::tier_all_missing(r.missing.r34))
        s << " " << detail::radii_sentence("The radius of 34-knot winds", " extended", r.r34);
    if (!detail::tier_all_missing(r.missing.r50))
        s << " " << detail::radii_sentence("Meanwhile, the radius of 50-knot winds", " reached", r.r50);
    if (!detail::tier_all_missing(r.missing.r64))
        s << " " << detail::radii_sentence("For 64-knot hurricane-force winds, the extent was", "", r.r64);
    if (!r.missing.radius_max_wind)
        s << " The radius of the eye was estimated at " << r.radius_max_wind << " km.";

    return {id, r.timestamp, s.str()};
}

using PromptKey = std::pair<std::string, std::string>;  // (storm key, compact timestamp)
using PromptCache = std::map<PromptKey, PromptText>;

// Cache file: one UTF-8 line per entry, `BBNNYYYY_NAME|YYYYMMDDHHMM|<text>`.
inline PromptCache load_prompts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open prompt cache: " + path);
    PromptCache cache;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t p1 = line.find('|');
        size_t p2 = (p1 == std::string::npos) ? std::string::npos : line.find('|', p1 + 1);
        if (p2 == std::string::npos) throw MalformedPromptFile(line_no, "expected key|timestamp|text");
        std::string key = line.substr(0, p1);
        std::string ts = line.substr(p1 + 1, p2 - p1 - 1);
        std::string text = line.substr(p2 + 1);
        if (key.empty() || ts.size() != 12 || text.empty())
            throw MalformedPromptFile(line_no, "bad key, timestamp or empty text");
        size_t us = key.find('_');
        if (us == std::string::npos || us + 1 >= key.size())
            throw MalformedPromptFile(line_no, "key must be BBNNYYYY_NAME");
        PromptText pt;
        try {
            pt.storm = detail::parse_storm_code(key.substr(0, us), key.substr(us + 1), line_no);
            auto dt = detail::parse_date_time(ts.substr(0, 8), ts.substr(8, 4), line_no);
            pt.timestamp = dt;
        } catch (const MalformedLine& e) {
            throw MalformedPromptFile(line_no, e.reason);
        }
        pt.text = std::move(text);
        PromptKey k{key, ts};
        if (cache.count(k)) throw DuplicateKey(key + "|" + ts);
        cache.emplace(std::move(k), std::move(pt));
    }
    return cache;
}

inline void save_prompts(const std::string& path, const std::vector<PromptText>& prompts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write prompt cache: " + path);
    for (const auto& p : prompts) {
        std::string text = p.text;
        for (char& c : text)
            if (c == '\n' || c == '\r') c = ' ';
        out << p.storm.key() << "|" << p.timestamp.compact() << "|" << text << "\n";
    }
}

}  // namespace tyfo

#pragma once

// HURDAT2 best-track format: header lines `BBNNYYYY, NAME, COUNT,` followed by
// COUNT data lines of 6-hourly (plus special-entry) storm state. Data lines
// carry 20 fields through the 2021 season and 21 from 2022 on, when the radius
// of maximum wind column was appended. A merged single-line variant prefixes
// the data fields with the storm key (`AL142024_MILTON,20241010,...`, 22 fields).

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tyfo/errors.hpp"

namespace tyfo {

struct DateTime {
    int year = 0;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;

    auto operator<=>(const DateTime&) const = default;

    // Days since 1970-01-01, proleptic Gregorian (Howard Hinnant's civil_from_days inverse).
    int64_t days_since_epoch() const {
        int y = year - (month <= 2);
        int era = (y >= 0 ? y : y - 399) / 400;
        unsigned yoe = static_cast<unsigned>(y - era * 400);
        unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
        unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return static_cast<int64_t>(era) * 146097 + doe - 719468;
    }

    int64_t total_minutes() const {
        return days_since_epoch() * 1440 + hour * 60 + minute;
    }

    static DateTime from_total_minutes(int64_t mins) {
        int64_t z = mins / 1440 + 719468;
        int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        unsigned doe = static_cast<unsigned>(z - era * 146097);
        unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        int64_t y = static_cast<int64_t>(yoe) + era * 400;
        unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        unsigned mp = (5 * doy + 2) / 153;
        unsigned d = doy - (153 * mp + 2) / 5 + 1;
        unsigned m = mp + (mp < 10 ? 3 : -9);
        DateTime out;
        out.year = static_cast<int>(y + (m <= 2));
        out.month = static_cast<int>(m);
        out.day = static_cast<int>(d);
        out.hour = static_cast<int>((mins % 1440) / 60);
        out.minute = static_cast<int>(mins % 60);
        return out;
    }

    static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    int day_of_year() const {
        static constexpr std::array<int, 12> cum = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
        int d = cum[month - 1] + day;
        if (month > 2 && is_leap(year)) ++d;
        return d;
    }

    std::string compact() const {  // YYYYMMDDHHMM
        char buf[13];
        std::snprintf(buf, sizeof buf, "%04d%02d%02d%02d%02d", year, month, day, hour, minute);
        return buf;
    }
};

struct StormId {
    std::string basin;  // AL, EP or CP
    int number = 0;     // 1..99
    int year = 0;
    std::string name;   // uppercase, or UNNAMED

    bool operator==(const StormId&) const = default;
    auto operator<=>(const StormId&) const = default;

    std::string code() const {  // "AL142024"
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s%02d%04d", basin.c_str(), number, year);
        return buf;
    }

    std::string key() const { return code() + "_" + name; }  // "AL142024_MILTON"
};

// Quadrant order everywhere: NE, SE, SW, NW.
struct MissingMask {
    bool max_wind = false;
    bool min_pressure = false;
    std::array<bool, 4> r34{};
    std::array<bool, 4> r50{};
    std::array<bool, 4> r64{};
    bool radius_max_wind = false;

    bool operator==(const MissingMask&) const = default;
};

struct StormRecord {
    DateTime timestamp;
    char record_id = ' ';   // 'L' landfall etc.; ' ' when blank
    std::string status;     // HU, TS, TD, EX, ...
    double lat_deg = 0.0;   // north positive
    double lon_deg = 0.0;   // east positive, in (-180, 180]
    int max_wind_kt = 0;
    int min_pressure_mb = 0;
    std::array<int, 4> r34{};
    std::array<int, 4> r50{};
    std::array<int, 4> r64{};
    int radius_max_wind = 0;
    MissingMask missing;

    bool operator==(const StormRecord&) const = default;
};

struct StormTrack {
    StormId id;
    std::vector<StormRecord> records;

    bool operator==(const StormTrack&) const = default;
};

namespace detail {

inline std::string_view strip(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    while (true) {
        size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(strip(line.substr(pos)));
            break;
        }
        out.push_back(strip(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    // NHC lines end with a trailing comma; drop the empty field it produces.
    if (out.size() > 1 && out.back().empty()) out.pop_back();
    return out;
}

inline int parse_int(std::string_view s, int line_no, const char* what) {
    int v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last || s.empty())
        throw MalformedLine(line_no, std::string("unparseable ") + what + " '" + std::string(s) + "'");
    return v;
}

inline double parse_double(std::string_view s, int line_no, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw MalformedLine(line_no, std::string("unparseable ") + what + " '" + std::string(s) + "'");
    return v;
}

// "27.4N" -> +27.4, "27.4S" -> -27.4
inline double parse_latitude(std::string_view s, int line_no) {
    if (s.size() < 2) throw MalformedLine(line_no, "latitude too short '" + std::string(s) + "'");
    char hemi = s.back();
    double v = parse_double(s.substr(0, s.size() - 1), line_no, "latitude");
    if (hemi == 'N') {
    } else if (hemi == 'S') {
        v = -v;
    } else {
        throw MalformedLine(line_no, std::string("bad latitude hemisphere '") + hemi + "'");
    }
    if (v < -90.0 || v > 90.0) throw MalformedLine(line_no, "latitude out of range");
    return v + 0.0;  // avoid -0.0
}

// "82.6W" -> -82.6, east positive, normalized into (-180, 180].
inline double parse_longitude(std::string_view s, int line_no) {
    if (s.size() < 2) throw MalformedLine(line_no, "longitude too short '" + std::string(s) + "'");
    char hemi = s.back();
    double v = parse_double(s.substr(0, s.size() - 1), line_no, "longitude");
    if (hemi == 'E') {
    } else if (hemi == 'W') {
        v = -v;
    } else {
        throw MalformedLine(line_no, std::string("bad longitude hemisphere '") + hemi + "'");
    }
    while (v > 180.0) v -= 360.0;
    while (v <= -180.0) v += 360.0;
    return v + 0.0;
}

// -999 (or empty) is the HURDAT2 missing sentinel; store 0 and set the mask bit.
inline int parse_masked(std::string_view s, int line_no, const char* what, bool& missing) {
    if (s.empty()) {
        missing = true;
        return 0;
    }
    int v = parse_int(s, line_no, what);
    if (v == -999) {
        missing = true;
        return 0;
    }
    if (v < 0) throw MalformedLine(line_no, std::string(what) + " negative and not -999");
    return v;
}

inline StormId parse_storm_code(std::string_view code, std::string_view name, int line_no) {
    if (code.size() != 8) throw MalformedLine(line_no, "storm code must be 8 chars: '" + std::string(code) + "'");
    StormId id;
    id.basin = std::string(code.substr(0, 2));
    if (id.basin != "AL" && id.basin != "EP" && id.basin != "CP")
        throw MalformedLine(line_no, "unknown basin '" + id.basin + "'");
    id.number = parse_int(code.substr(2, 2), line_no, "storm number");
    id.year = parse_int(code.substr(4, 4), line_no, "storm year");
    if (id.number < 1 || id.number > 99) throw MalformedLine(line_no, "storm number out of range");
    id.name = std::string(name);
    if (id.name.empty()) throw MalformedLine(line_no, "empty storm name");
    return id;
}

inline DateTime parse_date_time(std::string_view date, std::string_view time, int line_no) {
    if (date.size() != 8) throw MalformedLine(line_no, "date must be YYYYMMDD");
    if (time.size() != 4) throw MalformedLine(line_no, "time must be HHMM");
    DateTime dt;
    dt.year = parse_int(date.substr(0, 4), line_no, "year");
    dt.month = parse_int(date.substr(4, 2), line_no, "month");
    dt.day = parse_int(date.substr(6, 2), line_no, "day");
    dt.hour = parse_int(time.substr(0, 2), line_no, "hour");
    dt.minute = parse_int(time.substr(2, 2), line_no, "minute");
    if (dt.month < 1 || dt.month > 12 || dt.day < 1 || dt.day > 31 || dt.hour > 23 || dt.minute > 59)
        throw MalformedLine(line_no, "date-time out of range");
    return dt;
}

// Shared tail of standard and merged data lines: fields[start..] =
// date, time, record_id, status, lat, lon, wind, pressure, r34 x4, r50 x4, r64 x4 [, rmw]
inline StormRecord parse_record_fields(const std::vector<std::string_view>& f, size_t start, int line_no) {
    size_t n = f.size() - start;
    if (n != 20 && n != 21)
        throw MalformedLine(line_no, "expected 20 or 21 data fields, got " + std::to_string(n));
    StormRecord r;
    r.timestamp = parse_date_time(f[start], f[start + 1], line_no);
    std::string_view rid = f[start + 2];
    if (rid.size() > 1) throw MalformedLine(line_no, "record identifier must be one char");
    r.record_id = rid.empty() ? ' ' : rid[0];
    if (f[start + 3].size() != 2) throw MalformedLine(line_no, "status must be 2 chars");
    r.status = std::string(f[start + 3]);
    r.lat_deg = parse_latitude(f[start + 4], line_no);
    r.lon_deg = parse_longitude(f[start + 5], line_no);
    r.max_wind_kt = parse_masked(f[start + 6], line_no, "max wind", r.missing.max_wind);
    r.min_pressure_mb = parse_masked(f[start + 7], line_no, "min pressure", r.missing.min_pressure);
    for (int q = 0; q < 4; ++q) r.r34[q] = parse_masked(f[start + 8 + q], line_no, "34kt radius", r.missing.r34[q]);
    for (int q = 0; q < 4; ++q) r.r50[q] = parse_masked(f[start + 12 + q], line_no, "50kt radius", r.missing.r50[q]);
    for (int q = 0; q < 4; ++q) r.r64[q] = parse_masked(f[start + 16 + q], line_no, "64kt radius", r.missing.r64[q]);
    if (n == 21) {
        r.radius_max_wind = parse_masked(f[start + 20], line_no, "radius of max wind", r.missing.radius_max_wind);
    } else {
        r.missing.radius_max_wind = true;  // pre-2022 lines have no RMW column
    }
    return r;
}

inline bool looks_like_header(const std::vector<std::string_view>& f) {
    if (f.empty() || f[0].size() != 8) return false;
    std::string_view c = f[0];
    bool alpha2 = std::isupper(static_cast<unsigned char>(c[0])) && std::isupper(static_cast<unsigned char>(c[1]));
    if (!alpha2) return false;
    for (size_t i = 2; i < 8; ++i)
        if (!std::isdigit(static_cast<unsigned char>(c[i]))) return false;
    return true;
}

}  // namespace detail

// Paper-style merged line: `BBNNYYYY_NAME,YYYYMMDD,HHMM,...` with exactly 22 fields.
inline std::pair<StormId, StormRecord> parse_merged_line(std::string_view line, int line_no = 1) {
    auto fields = detail::split_fields(line);
    if (fields.size() != 22)
        throw MalformedLine(line_no, "merged line needs 22 fields, got " + std::to_string(fields.size()));
    std::string_view keyf = fields[0];
    size_t us = keyf.find('_');
    if (us == std::string_view::npos || us + 1 >= keyf.size())
        throw MalformedLine(line_no, "merged key must be BBNNYYYY_NAME");
    StormId id = detail::parse_storm_code(keyf.substr(0, us), keyf.substr(us + 1), line_no);
    StormRecord rec = detail::parse_record_fields(fields, 1, line_no);
    return {id, rec};
}

inline std::vector<StormTrack> parse_hurdat2(std::string_view text) {
    std::vector<StormTrack> tracks;
    size_t pos = 0;
    int line_no = 0;

    auto next_line = [&](std::string_view& out) -> bool {
        while (pos < text.size()) {
            size_t nl = text.find('\n', pos);
            std::string_view raw = (nl == std::string_view::npos) ? text.substr(pos) : text.substr(pos, nl - pos);
            pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
            ++line_no;
            if (!detail::strip(raw).empty()) {
                out = raw;
                return true;
            }
        }
        return false;
    };

    std::string_view line;
    bool have = next_line(line);
    while (have) {
        auto fields = detail::split_fields(line);
        if (!detail::looks_like_header(fields))
            throw MalformedLine(line_no, "expected storm header, got '" + std::string(detail::strip(line)) + "'");
        if (fields.size() != 3)
            throw MalformedLine(line_no, "header needs 3 fields, got " + std::to_string(fields.size()));
        int header_line = line_no;
        StormId id = detail::parse_storm_code(fields[0], fields[1], line_no);
        int declared = detail::parse_int(fields[2], line_no, "record count");
        if (declared < 0) throw MalformedLine(line_no, "negative record count");

        StormTrack track;
        track.id = id;
        while ((have = next_line(line))) {
            auto data_fields = detail::split_fields(line);
            if (detail::looks_like_header(data_fields)) break;
            StormRecord rec = detail::parse_record_fields(data_fields, 0, line_no);
            if (!track.records.empty() && !(track.records.back().timestamp < rec.timestamp))
                throw NonChronological(id.code(), line_no);
            track.records.push_back(std::move(rec));
        }
        if (static_cast<int>(track.records.size()) != declared)
            throw CountMismatch(id.code(), declared, static_cast<int>(track.records.size()));
        if (track.records.empty())
            throw MalformedLine(header_line, "storm " + id.code() + " has no records");
        tracks.push_back(std::move(track));
    }
    return tracks;
}

namespace detail {

inline std::string render_signed(double v, char pos_hemi, char neg_hemi) {
    char buf[32];
    double a = v < 0 ? -v : v;
    std::snprintf(buf, sizeof buf, "%.1f%c", a, v < 0 ? neg_hemi : pos_hemi);
    return buf;
}

inline std::string render_masked(int v, bool missing) {
    return missing ? "-999" : std::to_string(v);
}

}  // namespace detail

// Canonical comma+space rendering. Every data line carries the RMW column;
// missing values are re-emitted as -999, so parse(render(t)) == t field-for-field.
inline std::string render_hurdat2(const std::vector<StormTrack>& tracks) {
    std::string out;
    for (const auto& t : tracks) {
        out += t.id.code() + ", " + t.id.name + ", " + std::to_string(t.records.size()) + ",\n";
        for (const auto& r : t.records) {
            char head[32];
            std::snprintf(head, sizeof head, "%04d%02d%02d, %02d%02d, ", r.timestamp.year, r.timestamp.month,
                          r.timestamp.day, r.timestamp.hour, r.timestamp.minute);
            out += head;
            out += (r.record_id == ' ') ? "" : std::string(1, r.record_id);
            out += ", " + r.status + ", ";
            out += detail::render_signed(r.lat_deg, 'N', 'S') + ", ";
            out += detail::render_signed(r.lon_deg, 'E', 'W') + ", ";
            out += detail::render_masked(r.max_wind_kt, r.missing.max_wind) + ", ";
            out += detail::render_masked(r.min_pressure_mb, r.missing.min_pressure) + ", ";
            for (int q = 0; q < 4; ++q) out += detail::render_masked(r.r34[q], r.missing.r34[q]) + ", ";
            for (int q = 0; q < 4; ++q) out += detail::render_masked(r.r50[q], r.missing.r50[q]) + ", ";
            for (int q = 0; q < 4; ++q) out += detail::render_masked(r.r64[q], r.missing.r64[q]) + ", ";
            out += detail::render_masked(r.radius_max_wind, r.missing.radius_max_wind) + ",\n";
        }
    }
    return out;
}

}  // namespace tyfo

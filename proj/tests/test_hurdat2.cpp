#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tyfo/hurdat2.hpp"
#include "tyfo/rng.hpp"

using namespace tyfo;
using tyfo_test::fixture_path;

namespace {

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Independent of the parser: count header lines (8-char storm code first
// field) and data lines by plain text scanning.
std::pair<int, int> scan_counts(const std::string& text) {
    int headers = 0, data = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t comma = line.find(',', b);
        std::string first = line.substr(b, comma - b);
        bool header = first.size() == 8 && std::isalpha((unsigned char)first[0]) && std::isalpha((unsigned char)first[1]);
        if (header)
            ++headers;
        else
            ++data;
    }
    return {headers, data};
}

}  // namespace

TEST_CASE("merged line parses to the golden record", "[hurdat2]") {
    auto [id, r] = parse_merged_line(tyfo_test::kMiltonMergedLine);
    CHECK(id.basin == "AL");
    CHECK(id.number == 14);
    CHECK(id.year == 2024);
    CHECK(id.name == "MILTON");
    CHECK(id.code() == "AL142024");
    CHECK(id.key() == "AL142024_MILTON");
    CHECK(r.timestamp == DateTime{2024, 10, 10, 0, 30});
    CHECK(r.record_id == 'L');
    CHECK(r.status == "HU");
    CHECK(r.lat_deg == 27.4);
    CHECK(r.lon_deg == -82.6);
    CHECK(r.max_wind_kt == 100);
    CHECK(r.min_pressure_mb == 958);
    CHECK(r.r34 == std::array<int, 4>{180, 170, 110, 220});
    CHECK(r.r50 == std::array<int, 4>{60, 60, 70, 90});
    CHECK(r.r64 == std::array<int, 4>{30, 30, 30, 30});
    CHECK(r.radius_max_wind == 20);
    CHECK(r.missing == MissingMask{});
}

TEST_CASE("merged line arity and equivalence", "[hurdat2]") {
    std::string line21 = tyfo_test::kMiltonMergedLine;
    line21 = line21.substr(0, line21.rfind(','));  // drop RMW -> 21 fields
    CHECK_THROWS_AS(parse_merged_line(line21), MalformedLine);

    // Same values in standard format give an identical record.
    std::string standard =
        "AL142024, MILTON, 1,\n"
        "20241010, 0030, L, HU, 27.4N, 82.6W, 100, 958, 180, 170, 110, 220, 60, 60, 70, 90, 30, 30, 30, 30, 20,\n";
    auto tracks = parse_hurdat2(standard);
    REQUIRE(tracks.size() == 1);
    auto [id, merged_rec] = parse_merged_line(tyfo_test::kMiltonMergedLine);
    CHECK(tracks[0].id == id);
    CHECK(tracks[0].records[0] == merged_rec);
}

TEST_CASE("empty input gives an empty track list", "[hurdat2]") {
    CHECK(parse_hurdat2("").empty());
    CHECK(parse_hurdat2("\n\n  \n").empty());
}

TEST_CASE("fixture parses with counts matching an independent scan", "[hurdat2]") {
    std::string text = read_all(fixture_path("hurdat2_sample.txt"));
    auto [headers, data_lines] = scan_counts(text);
    auto tracks = parse_hurdat2(text);
    CHECK(static_cast<int>(tracks.size()) == headers);
    int total_records = 0;
    for (const auto& t : tracks) total_records += static_cast<int>(t.records.size());
    CHECK(total_records == data_lines);
    REQUIRE(static_cast<int>(tracks.size()) >= 50);

    // MILTON is present with its declared 67 records and the golden landfall entry.
    const StormTrack* milton = nullptr;
    for (const auto& t : tracks)
        if (t.id.name == "MILTON") milton = &t;
    REQUIRE(milton != nullptr);
    CHECK(milton->records.size() == 67);
    bool found_golden = false;
    for (const auto& r : milton->records)
        if (r.timestamp == DateTime{2024, 10, 10, 0, 30}) {
            CHECK(r == tyfo_test::milton_golden_record());
            found_golden = true;
        }
    CHECK(found_golden);
}

TEST_CASE("parse-render-parse is a fixed point on the fixture", "[hurdat2]") {
    std::string text = read_all(fixture_path("hurdat2_sample.txt"));
    auto tracks = parse_hurdat2(text);
    std::string rendered = render_hurdat2(tracks);
    auto reparsed = parse_hurdat2(rendered);
    REQUIRE(reparsed.size() == tracks.size());
    CHECK(reparsed == tracks);
    // Rendering is canonical: a second round trip reproduces the same bytes.
    CHECK(render_hurdat2(reparsed) == rendered);
}

TEST_CASE("hemisphere signs round-trip for generated coordinates", "[hurdat2]") {
    SplitMix64 rng(11);
    for (int i = 0; i < 500; ++i) {
        double lat = rng.uniform(-89.9, 89.9);
        double lon = rng.uniform(-179.9, 180.0);
        lat = std::round(lat * 10) / 10;
        lon = std::round(lon * 10) / 10;
        StormTrack t;
        t.id = {"AL", 1, 2010, "X"};
        StormRecord r;
        r.timestamp = {2010, 7, 1, 0, 0};
        r.status = "TS";
        r.lat_deg = lat;
        r.lon_deg = lon;
        t.records.push_back(r);
        auto back = parse_hurdat2(render_hurdat2({t}));
        REQUIRE(back.size() == 1);
        CHECK(back[0].records[0].lat_deg == Catch::Approx(lat).margin(1e-9));
        CHECK(back[0].records[0].lon_deg == Catch::Approx(lon).margin(1e-9));
        // sign structure, not just magnitude
        CHECK(std::signbit(back[0].records[0].lat_deg) == (lat < 0));
    }
}

TEST_CASE("S latitudes negative, E longitudes positive", "[hurdat2]") {
    std::string text =
        "AL012010, X, 1,\n"
        "20100701, 0600, , TS, 12.5S, 45.0E, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n";
    auto tracks = parse_hurdat2(text);
    CHECK(tracks[0].records[0].lat_deg == -12.5);
    CHECK(tracks[0].records[0].lon_deg == 45.0);
}

TEST_CASE("missing mask tracks -999 exactly", "[hurdat2]") {
    std::string text =
        "AL012010, X, 2,\n"
        "20100701, 0600, , TS, 12.5N, 45.0W, -999, 1000, -999,0,0,0, 0,0,0,0, 0,0,0,0, -999,\n"
        "20100701, 1200, , TS, 12.6N, 45.2W, 40, -999, 10,20,30,40, 1,2,3,4, 0,0,0,0, 15,\n";
    auto tracks = parse_hurdat2(text);
    const auto& a = tracks[0].records[0];
    CHECK(a.missing.max_wind);
    CHECK(a.max_wind_kt == 0);
    CHECK_FALSE(a.missing.min_pressure);
    CHECK(a.missing.r34[0]);
    CHECK_FALSE(a.missing.r34[1]);
    CHECK(a.missing.radius_max_wind);
    const auto& b = tracks[0].records[1];
    CHECK(b.missing.min_pressure);
    CHECK(b.min_pressure_mb == 0);
    CHECK_FALSE(b.missing.radius_max_wind);
    CHECK(b.radius_max_wind == 15);
}

TEST_CASE("pre-2022 lines without the RMW column mark it missing", "[hurdat2]") {
    std::string text =
        "AL012010, X, 1,\n"
        "20100701, 0600, , TS, 12.5N, 45.0W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n";
    auto tracks = parse_hurdat2(text);
    CHECK(tracks[0].records[0].missing.radius_max_wind);
    CHECK(tracks[0].records[0].radius_max_wind == 0);
}

TEST_CASE("typed errors carry line numbers", "[hurdat2]") {
    SECTION("wrong field count") {
        try {
            parse_hurdat2("AL012010, X, 1,\n20100701, 0600, , TS, 12.5N\n");
            FAIL("expected MalformedLine");
        } catch (const MalformedLine& e) {
            CHECK(e.line_no == 2);
        }
    }
    SECTION("unparseable number") {
        CHECK_THROWS_AS(parse_hurdat2("AL012010, X, 1,\n20100701, 0600, , TS, 12.5N, 45.0W, abc, 1000, "
                                      "0,0,0,0, 0,0,0,0, 0,0,0,0,\n"),
                        MalformedLine);
    }
    SECTION("count mismatch") {
        try {
            parse_hurdat2(
                "AL012010, X, 3,\n"
                "20100701, 0600, , TS, 12.5N, 45.0W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n"
                "20100701, 1200, , TS, 12.6N, 45.2W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n");
            FAIL("expected CountMismatch");
        } catch (const CountMismatch& e) {
            CHECK(e.declared == 3);
            CHECK(e.actual == 2);
            CHECK(e.storm_id == "AL012010");
        }
    }
    SECTION("non-chronological") {
        CHECK_THROWS_AS(parse_hurdat2("AL012010, X, 2,\n"
                                      "20100701, 1200, , TS, 12.5N, 45.0W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n"
                                      "20100701, 0600, , TS, 12.6N, 45.2W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n"),
                        NonChronological);
    }
    SECTION("duplicate timestamps rejected") {
        CHECK_THROWS_AS(parse_hurdat2("AL012010, X, 2,\n"
                                      "20100701, 0600, , TS, 12.5N, 45.0W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n"
                                      "20100701, 0600, , TS, 12.6N, 45.2W, 40, 1000, 0,0,0,0, 0,0,0,0, 0,0,0,0,\n"),
                        NonChronological);
    }
    SECTION("bad basin") {
        CHECK_THROWS_AS(parse_hurdat2("XX012010, X, 0,\n"), MalformedLine);
    }
}

TEST_CASE("calendar minutes round-trip", "[hurdat2]") {
    SplitMix64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        DateTime dt{1980 + static_cast<int>(rng.below(60)), 1 + static_cast<int>(rng.below(12)),
                    1 + static_cast<int>(rng.below(28)), static_cast<int>(rng.below(24)),
                    static_cast<int>(rng.below(60))};
        CHECK(DateTime::from_total_minutes(dt.total_minutes()) == dt);
    }
    // leap-day handling
    DateTime leap{2024, 2, 29, 18, 0};
    CHECK(DateTime::from_total_minutes(leap.total_minutes()) == leap);
    CHECK(leap.day_of_year() == 60);
    CHECK(DateTime{2023, 3, 1, 0, 0}.day_of_year() == 60);
}

TEST_CASE("parser never crashes on arbitrary bytes", "[hurdat2]") {
    SplitMix64 rng(99);
    std::string valid = read_all(fixture_path("hurdat2_sample.txt"));
    for (int iter = 0; iter < 200; ++iter) {
        std::string input;
        if (iter % 2 == 0) {
            size_t len = rng.below(400);
            for (size_t i = 0; i < len; ++i) input.push_back(static_cast<char>(rng.below(256)));
        } else {
            size_t start = rng.below(valid.size());
            input = valid.substr(start, rng.below(2000));
            for (int m = 0; m < 5 && !input.empty(); ++m)
                input[rng.below(input.size())] = static_cast<char>(rng.below(256));
        }
        try {
            auto tracks = parse_hurdat2(input);
            (void)tracks;
        } catch (const Error&) {
            // typed failure is the contract
        }
    }
    SUCCEED("no crash, no untyped exception");
}

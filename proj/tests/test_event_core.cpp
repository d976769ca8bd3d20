#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "evdiff/errors.hpp"
#include "evdiff/events.hpp"
#include "evdiff/rng.hpp"
#include "test_util.hpp"

using namespace evdiff;
using evdiff::testutil::TempDir;

namespace {

EventStream random_stream(Rng& rng, int width, int height, int count) {
    EventStream s;
    s.width = width;
    s.height = height;
    std::uint64_t t = 0;
    for (int i = 0; i < count; ++i) {
        t += rng.below(200);  // non-decreasing, duplicates allowed
        s.events.push_back(Event{t, static_cast<std::uint16_t>(rng.below(width)),
                                 static_cast<std::uint16_t>(rng.below(height)),
                                 rng.below(2) ? 1 : -1});
    }
    return s;
}

}  // namespace

TEST_CASE("csv parsing transcribes records and validates them") {
    TempDir dir("evcsv");
    const std::string p = dir.path("e.csv");
    std::ofstream(p) << "100,3,4,1\n200,3,4,-1\n";
    EventStream s = read_events(p, EventFormat::csv, 8, 8);
    REQUIRE(s.events.size() == 2);
    CHECK(s.width == 8);
    CHECK(s.events[0] == Event{100, 3, 4, 1});
    CHECK(s.events[1] == Event{200, 3, 4, -1});
}

TEST_CASE("csv out-of-order timestamps name the offending record") {
    TempDir dir("evord");
    const std::string p = dir.path("e.csv");
    std::ofstream(p) << "200,3,4,1\n100,3,4,1\n";
    try {
        read_events(p, EventFormat::csv, 8, 8);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("record 2") != std::string::npos);
    }
}

TEST_CASE("csv bounds violation names the offending record") {
    TempDir dir("evbnd");
    const std::string p = dir.path("e.csv");
    std::ofstream(p) << "100,9,0,1\n";
    try {
        read_events(p, EventFormat::csv, 8, 8);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("record 1") != std::string::npos);
        CHECK(msg.find("x=9") != std::string::npos);
    }
}

TEST_CASE("binary round trip preserves every field") {
    TempDir dir("evbin");
    EventStream s;
    s.width = 8;
    s.height = 8;
    s.events = {Event{100, 3, 4, 1}, Event{200, 3, 4, -1}};
    const std::string p = dir.path("e.bin");
    write_events(s, p, EventFormat::bin);
    CHECK(read_events(p, EventFormat::bin) == s);
}

TEST_CASE("empty stream round trip keeps geometry") {
    TempDir dir("evempty");
    EventStream s;
    s.width = 17;
    s.height = 5;
    for (EventFormat fmt : {EventFormat::bin, EventFormat::csv}) {
        const std::string p = dir.path(fmt == EventFormat::bin ? "e.bin" : "e.csv");
        write_events(s, p, fmt);
        EventStream back = read_events(p, fmt, 17, 5);
        CHECK(back.events.empty());
        CHECK(back.width == 17);
        CHECK(back.height == 5);
    }
}

TEST_CASE("read/write identity on randomized streams in both formats") {
    TempDir dir("evrand");
    Rng rng(7);
    for (int i = 0; i < 40; ++i) {
        EventStream s = random_stream(rng, 16, 12, static_cast<int>(rng.below(50)));
        const std::string pb = dir.path("r.bin");
        write_events(s, pb, EventFormat::bin);
        CHECK(read_events(pb, EventFormat::bin) == s);
        const std::string pc = dir.path("r.csv");
        write_events(s, pc, EventFormat::csv);
        CHECK(read_events(pc, EventFormat::csv, 16, 12) == s);
    }
}

TEST_CASE("binary format errors carry offsets") {
    TempDir dir("evbad");
    const std::string p = dir.path("bad.bin");
    std::ofstream(p, std::ios::binary) << "NOPE";
    try {
        read_events(p, EventFormat::bin);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 0);
    }
}

TEST_CASE("slice_window uses half-open semantics") {
    EventStream s;
    s.width = 4;
    s.height = 4;
    s.events = {Event{100, 0, 0, 1}, Event{200, 1, 1, 1}, Event{300, 2, 2, -1}};
    EventStream w = slice_window(s, 100, 300);
    REQUIRE(w.events.size() == 2);
    CHECK(w.events[0].t == 100);
    CHECK(w.events[1].t == 200);

    CHECK(slice_window(s, 400, 500).events.empty());
    CHECK(slice_window(s, 100, 100).events.empty());
    CHECK(slice_window(s, 400, 500).width == 4);
    CHECK_THROWS_AS(slice_window(s, 300, 100), ValidationError);
}

TEST_CASE("windows partitioning the time range reassemble the stream") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        EventStream s = random_stream(rng, 10, 10, 60);
        const std::uint64_t t_min = s.events.empty() ? 0 : s.events.front().t;
        const std::uint64_t t_max = s.events.empty() ? 1 : s.events.back().t + 1;
        // random cut points
        std::vector<std::uint64_t> cuts{t_min};
        for (int c = 0; c < 3; ++c) cuts.push_back(t_min + rng.below(t_max - t_min + 1));
        cuts.push_back(t_max);
        std::sort(cuts.begin(), cuts.end());
        std::vector<Event> glued;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            EventStream w = slice_window(s, cuts[i], cuts[i + 1]);
            glued.insert(glued.end(), w.events.begin(), w.events.end());
        }
        CHECK(glued == s.events);
    }
}

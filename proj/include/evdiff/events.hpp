#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evdiff {

// One sensor event. Polarity is +1/-1 in memory, encoded as 1/0 on disk.
struct Event {
    std::uint64_t t = 0;  // microseconds
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    int p = 1;

    bool operator==(const Event&) const = default;
};

// Validated, time-ordered (non-decreasing) event sequence with its sensor
// geometry. Immutable after construction; safe for concurrent readers.
struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    bool operator==(const EventStream&) const = default;
};

enum class EventFormat { csv, bin };

// Rejects out-of-order timestamps, out-of-bounds coordinates, polarities
// outside {-1,+1}. Record indices in errors are 1-based.
void validate_stream(const EventStream& s);

// CSV lines are "t_us,x,y,p" with p in {-1,1}; geometry comes out-of-band
// (csv_width/csv_height) since the text format does not carry it.
// Binary "EVT0": magic, u16 width, u16 height, u64 count, then count records
// of {u64 t, u16 x, u16 y, u8 p01}, all little-endian.
EventStream read_events(const std::string& path, EventFormat format, int csv_width = 0, int csv_height = 0);
void write_events(const EventStream& stream, const std::string& path, EventFormat format);

// Events with t0 <= t < t1, order preserved, geometry copied.
EventStream slice_window(const EventStream& stream, std::uint64_t t0, std::uint64_t t1);

// Infers EventFormat from a .csv/.bin extension.
EventFormat event_format_from_path(const std::string& path);

}  // namespace evdiff

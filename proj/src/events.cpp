#include "evdiff/events.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evdiff/errors.hpp"

namespace evdiff {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '0'};

template <typename T>
void put_le(std::vector<unsigned char>& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void validate_stream(const EventStream& s) {
    if (s.width <= 0 || s.height <= 0) throw ValidationError("event stream geometry must be positive");
    std::uint64_t prev_t = 0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const Event& e = s.events[i];
        const std::string rec = "record " + std::to_string(i + 1);
        if (e.p != 1 && e.p != -1)
            throw ValidationError("polarity " + std::to_string(e.p) + " outside {-1,+1} at " + rec);
        if (e.x >= s.width)
            throw ValidationError("x=" + std::to_string(e.x) + " out of bounds for width " +
                                  std::to_string(s.width) + " at " + rec);
        if (e.y >= s.height)
            throw ValidationError("y=" + std::to_string(e.y) + " out of bounds for height " +
                                  std::to_string(s.height) + " at " + rec);
        if (i > 0 && e.t < prev_t)
            throw ValidationError("timestamps out of order at " + rec + ": " + std::to_string(e.t) +
                                  " after " + std::to_string(prev_t));
        prev_t = e.t;
    }
}

namespace {

EventStream read_csv(const std::string& path, int width, int height) {
    if (width <= 0 || height <= 0)
        throw ValidationError("csv event input requires sensor geometry (width/height flags)");
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);

    EventStream s;
    s.width = width;
    s.height = height;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long t = 0, x = 0, y = 0, p = 0;
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream ss(line);
        if (!(ss >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',')
            throw FormatError(path, lineno, "unparsable csv event at line " + std::to_string(lineno) + ": \"" + line + "\"");
        if (t < 0 || x < 0 || y < 0)
            throw FormatError(path, lineno, "negative field at line " + std::to_string(lineno));
        if (x > 0xffff || y > 0xffff)
            throw FormatError(path, lineno, "coordinate exceeds u16 at line " + std::to_string(lineno));
        s.events.push_back(Event{static_cast<std::uint64_t>(t), static_cast<std::uint16_t>(x),
                                 static_cast<std::uint16_t>(y), static_cast<int>(p)});
    }
    validate_stream(s);
    return s;
}

EventStream read_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 4) throw FormatError(path, buf.size(), "truncated: missing magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError(path, 0, "bad magic, expected EVT0");
    if (buf.size() < 16) throw FormatError(path, buf.size(), "truncated header");

    EventStream s;
    s.width = get_le<std::uint16_t>(buf.data() + 4);
    s.height = get_le<std::uint16_t>(buf.data() + 6);
    const std::uint64_t count = get_le<std::uint64_t>(buf.data() + 8);
    constexpr std::size_t kRecord = 13;  // u64 + u16 + u16 + u8
    const std::size_t need = 16 + kRecord * count;
    if (buf.size() < need)
        throw FormatError(path, buf.size(), "truncated: expected " + std::to_string(need) + " bytes for " +
                                                std::to_string(count) + " records");
    if (buf.size() > need) throw FormatError(path, need, "trailing bytes after records");

    s.events.reserve(count);
    std::size_t off = 16;
    for (std::uint64_t i = 0; i < count; ++i, off += kRecord) {
        Event e;
        e.t = get_le<std::uint64_t>(buf.data() + off);
        e.x = get_le<std::uint16_t>(buf.data() + off + 8);
        e.y = get_le<std::uint16_t>(buf.data() + off + 10);
        const unsigned char p01 = buf[off + 12];
        if (p01 > 1) throw FormatError(path, off + 12, "polarity byte must be 0 or 1, got " + std::to_string(p01));
        e.p = p01 ? 1 : -1;
        s.events.push_back(e);
    }
    validate_stream(s);
    return s;
}

}  // namespace

EventStream read_events(const std::string& path, EventFormat format, int csv_width, int csv_height) {
    return format == EventFormat::csv ? read_csv(path, csv_width, csv_height) : read_bin(path);
}

void write_events(const EventStream& stream, const std::string& path, EventFormat format) {
    validate_stream(stream);
    if (format == EventFormat::csv) {
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + path);
        for (const Event& e : stream.events)
            f << e.t << "," << e.x << "," << e.y << "," << e.p << "\n";
        if (!f) throw IoError("write failed: " + path);
        return;
    }
    std::vector<unsigned char> buf;
    buf.reserve(16 + 13 * stream.events.size());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.width));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.height));
    put_le<std::uint64_t>(buf, stream.events.size());
    for (const Event& e : stream.events) {
        put_le<std::uint64_t>(buf, e.t);
        put_le<std::uint16_t>(buf, e.x);
        put_le<std::uint16_t>(buf, e.y);
        buf.push_back(e.p > 0 ? 1 : 0);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path);
}

EventStream slice_window(const EventStream& stream, std::uint64_t t0, std::uint64_t t1) {
    if (t0 > t1) throw ValidationError("invalid window: t0 " + std::to_string(t0) + " > t1 " + std::to_string(t1));
    EventStream out;
    out.width = stream.width;
    out.height = stream.height;
    // events are time-ordered, so the window is a contiguous run
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), t0,
                               [](const Event& e, std::uint64_t v) { return e.t < v; });
    auto hi = std::lower_bound(lo, stream.events.end(), t1,
                               [](const Event& e, std::uint64_t v) { return e.t < v; });
    out.events.assign(lo, hi);
    return out;
}

EventFormat event_format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return EventFormat::csv;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return EventFormat::bin;
    throw ValidationError("cannot infer event format from extension: " + path);
}

}  // namespace evdiff

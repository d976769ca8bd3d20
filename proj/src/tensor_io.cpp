#include "evdiff/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "evdiff/errors.hpp"

namespace evdiff {

namespace {

constexpr char kMagic[4] = {'T', 'E', 'N', '0'};
constexpr int kMaxNdim = 8;

void put_u32le(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_tensor(const Tensor& t, const std::string& path) {
    if (t.dims().empty()) throw DimensionError("cannot save tensor with empty dims");
    if (t.dims().size() > kMaxNdim)
        throw DimensionError("tensor ndim " + std::to_string(t.dims().size()) + " exceeds format limit " +
                             std::to_string(kMaxNdim));

    std::vector<unsigned char> buf;
    buf.reserve(5 + 4 * t.dims().size() + 4 * t.size());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    buf.push_back(static_cast<unsigned char>(t.dims().size()));
    for (int d : t.dims()) put_u32le(buf, static_cast<std::uint32_t>(d));
    for (float v : t.values()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32le(buf, bits);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 4) throw FormatError(path, buf.size(), "truncated: missing magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError(path, 0, "bad magic, expected TEN0");
    if (buf.size() < 5) throw FormatError(path, 4, "truncated: missing ndim");

    const int ndim = buf[4];
    if (ndim < 1 || ndim > kMaxNdim)
        throw FormatError(path, 4, "ndim " + std::to_string(ndim) + " outside [1," + std::to_string(kMaxNdim) + "]");

    std::size_t off = 5;
    if (buf.size() < off + 4u * ndim)
        throw FormatError(path, buf.size(), "truncated: missing extents");

    std::vector<int> dims(ndim);
    std::uint64_t count = 1;
    for (int i = 0; i < ndim; ++i, off += 4) {
        std::uint32_t e = get_u32le(buf.data() + off);
        if (e == 0) throw FormatError(path, off, "zero extent");
        if (e > 0x7fffffffu) throw FormatError(path, off, "extent overflow");
        dims[i] = static_cast<int>(e);
        count *= e;
        if (count > (std::uint64_t(1) << 31)) throw FormatError(path, off, "dim product overflow");
    }

    const std::size_t need = off + 4 * static_cast<std::size_t>(count);
    if (buf.size() < need)
        throw FormatError(path, buf.size(), "truncated payload, expected " + std::to_string(need) + " bytes");
    if (buf.size() > need)
        throw FormatError(path, need, "trailing bytes after payload");

    std::vector<float> data(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < data.size(); ++i, off += 4) {
        std::uint32_t bits = get_u32le(buf.data() + off);
        std::memcpy(&data[i], &bits, 4);
    }
    return Tensor::from(std::move(dims), std::move(data));
}

}  // namespace evdiff

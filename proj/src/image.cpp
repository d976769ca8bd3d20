#include "evdiff/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "evdiff/errors.hpp"

namespace evdiff {

Image Image::zeros(int h, int w, int c) {
    if (h <= 0 || w <= 0) throw DimensionError("image extents must be positive");
    if (c != 1 && c != 3) throw DimensionError("image channels must be 1 or 3");
    Image img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.values.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    return img;
}

unsigned char quantize_byte(float v) {
    float clamped = std::clamp(v, 0.0f, 1.0f);
    int q = static_cast<int>(std::floor(clamped * 255.0f + 0.5f));
    return static_cast<unsigned char>(std::clamp(q, 0, 255));
}

float dequantize_byte(unsigned char b) { return static_cast<float>(b) / 255.0f; }

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Reads one whitespace/comment-delimited token of a netpbm header.
int read_header_int(std::istream& in, const std::string& path, const char* what) {
    int c;
    for (;;) {
        c = in.get();
        if (c == EOF) throw FormatError(path, static_cast<std::uint64_t>(in.tellg()), std::string("truncated header: ") + what);
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        if (!std::isspace(c)) break;
    }
    long v = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        any = true;
        if (v > 1 << 24) throw FormatError(path, 0, std::string("header value overflow: ") + what);
        c = in.get();
    }
    if (!any) throw FormatError(path, 0, std::string("expected integer for ") + what);
    return static_cast<int>(v);
}

}  // namespace

void save_image(const Image& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) throw DimensionError("image channels must be 1 or 3");
    const bool pgm = ends_with(path, ".pgm");
    const bool ppm = ends_with(path, ".ppm");
    if (!pgm && !ppm) throw ValidationError("image path must end in .pgm or .ppm: " + path);
    if (pgm && img.channels != 1)
        throw ValidationError("channel mismatch: " + std::to_string(img.channels) + "-channel image saved as .pgm");
    if (ppm && img.channels != 3)
        throw ValidationError("channel mismatch: " + std::to_string(img.channels) + "-channel image saved as .ppm");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << (pgm ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";

    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = quantize_byte(img.at(c, y, x));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw IoError("write failed: " + path);
}

Image load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);

    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (!f || m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw FormatError(path, 0, "bad magic, expected P5 or P6");
    const int channels = (m1 == '5') ? 1 : 3;

    const int width = read_header_int(f, path, "width");
    const int height = read_header_int(f, path, "height");
    const int maxval = read_header_int(f, path, "maxval");
    if (maxval != 255) throw FormatError(path, 0, "unsupported maxval " + std::to_string(maxval) + ", expected 255");
    // the digit scan above already consumed the single separator byte

    Image img = Image::zeros(height, width, channels);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    for (int y = 0; y < height; ++y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!f) throw FormatError(path, static_cast<std::uint64_t>(f.gcount()), "truncated pixel payload at row " + std::to_string(y));
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) = dequantize_byte(row[static_cast<std::size_t>(x) * channels + c]);
    }
    return img;
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out = Image::zeros(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(0, y, x) = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
    return out;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t = Tensor::zeros({img.channels, img.height, img.width});
    std::copy(img.values.begin(), img.values.end(), t.values().begin());
    return t;
}

Image tensor_to_image(const Tensor& t) {
    if (t.dims().size() != 3) throw DimensionError("image tensor must be [C,H,W], got " + dims_to_string(t.dims()));
    Image img = Image::zeros(t.dims()[1], t.dims()[2], t.dims()[0]);
    for (std::size_t i = 0; i < t.size(); ++i) img.values[i] = std::clamp(t[i], 0.0f, 1.0f);
    return img;
}

}  // namespace evdiff

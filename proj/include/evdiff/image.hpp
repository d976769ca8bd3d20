#pragma once

#include <string>
#include <vector>

#include "evdiff/tensor.hpp"

namespace evdiff {

// Planar (channel-first) float image, values in [0,1]. 1 channel saves as
// binary PGM (P5), 3 channels as binary PPM (P6), maxval 255.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> values;  // [c][y][x]

    static Image zeros(int h, int w, int c);

    float& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t size() const { return values.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// Round-half-up 8-bit quantization; the inverse maps byte b to b/255.
unsigned char quantize_byte(float v);
float dequantize_byte(unsigned char b);

void save_image(const Image& img, const std::string& path);
Image load_image(const std::string& path);

// 0.299 R + 0.587 G + 0.114 B; identity on single-channel input.
Image to_grayscale(const Image& img);

Tensor image_to_tensor(const Image& img);           // [C,H,W]
Image tensor_to_image(const Tensor& t);             // clamps to [0,1]

}  // namespace evdiff

#include "garm/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace garm::harness {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> head;
    put_u32_be(head, static_cast<std::uint32_t>(data.size()));
    out.write(reinterpret_cast<const char*>(head.data()), 4);
    out.write(type, 4);
    if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()),
                                 static_cast<std::streamsize>(data.size()));
    std::uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<std::uint8_t> tail;
    put_u32_be(tail, crc);
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void write_gray_png(const std::string& path, const Grid<std::uint8_t>& image) {
    const int w = image.width(), h = image.height();
    if (w <= 0 || h <= 0) throw std::invalid_argument("png: empty image");

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<size_t>(h) * (w + 1));
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < w; ++x) raw.push_back(image.at(x, y));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    compressed.resize(bound);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("png: cannot write " + path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(w));
    put_u32_be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", compressed);
    write_chunk(out, "IEND", {});
    if (!out) throw std::runtime_error("png: write failed " + path);
}

Grid<std::uint8_t> mask_image(const MaskGrid& mask) {
    Grid<std::uint8_t> img(mask.width(), mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) img.at(x, y) = mask.at(x, y) ? 255 : 0;
    return img;
}

Grid<std::uint8_t> height_image(const ValueGrid& height, double max_height_m) {
    Grid<std::uint8_t> img(height.width(), height.height(), 0);
    for (int y = 0; y < height.height(); ++y) {
        for (int x = 0; x < height.width(); ++x) {
            double v = std::clamp(height.at(x, y) / max_height_m, 0.0, 1.0);
            img.at(x, y) = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return img;
}

Grid<std::uint8_t> value_image(const ValueGrid& values) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values.data()) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Grid<std::uint8_t> img(values.width(), values.height(), 0);
    if (!(hi > lo)) return img;
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            double v = values.at(x, y);
            if (!std::isfinite(v)) continue;
            img.at(x, y) = static_cast<std::uint8_t>(std::lround((v - lo) / (hi - lo) * 255.0));
        }
    }
    return img;
}

Grid<std::uint8_t> overlay_image(const MaskGrid& mask, const Pixel& pixel) {
    Grid<std::uint8_t> img = mask_image(mask);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) img.at(x, y) = img.at(x, y) / 2;
    const int arm = 3;
    for (int d = -arm; d <= arm; ++d) {
        if (img.in_bounds(pixel.x + d, pixel.y)) img.at(pixel.x + d, pixel.y) = 255;
        if (img.in_bounds(pixel.x, pixel.y + d)) img.at(pixel.x, pixel.y + d) = 255;
    }
    return img;
}

}  // namespace garm::harness

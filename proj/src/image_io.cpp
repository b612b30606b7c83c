#include "dtuap/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dtuap/errors.hpp"

namespace dtuap {

void write_pnm(const std::string& path, const std::vector<std::uint8_t>& planar, int channels,
               int height, int width) {
    if (channels != 1 && channels != 3)
        throw UsageError("write_pnm: only 1- or 3-channel rasters supported, got " +
                         std::to_string(channels));
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    if (planar.size() != plane * static_cast<std::size_t>(channels))
        throw UsageError("write_pnm: pixel count does not match dimensions");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << (channels == 1 ? "P5" : "P6") << '\n' << width << ' ' << height << "\n255\n";
    if (channels == 1) {
        out.write(reinterpret_cast<const char*>(planar.data()),
                  static_cast<std::streamsize>(planar.size()));
    } else {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c)
                    row[static_cast<std::size_t>(x) * 3 + c] =
                        planar[static_cast<std::size_t>(c) * plane +
                               static_cast<std::size_t>(y) * width + x];
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size()));
        }
    }
    if (!out) throw DataError("failed writing " + path);
}

std::vector<std::uint8_t> minmax_to_u8(const float* data, std::size_t n) {
    std::vector<std::uint8_t> out(n, 0);
    if (n == 0) return out;
    float lo = data[0], hi = data[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, data[i]);
        hi = std::max(hi, data[i]);
    }
    if (hi <= lo) return out;
    const float scale = 255.0f / (hi - lo);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<std::uint8_t>(std::lround((data[i] - lo) * scale));
    return out;
}

std::vector<std::uint8_t> unit_to_u8(const float* data, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float v = std::clamp(data[i], 0.0f, 1.0f);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

} // namespace dtuap

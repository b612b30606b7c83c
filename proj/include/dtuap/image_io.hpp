#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dtuap {

// Binary PGM (P5, 1 channel) / PPM (P6, 3 channels) writer. `planar` holds
// channel-major pixels, as stored in tensors; the writer interleaves.
void write_pnm(const std::string& path, const std::vector<std::uint8_t>& planar, int channels,
               int height, int width);

// Min-max normalization onto the full 0..255 range (constant input -> 0).
std::vector<std::uint8_t> minmax_to_u8(const float* data, std::size_t n);

// [0,1] values to 0..255 with rounding; out-of-range inputs are clamped.
std::vector<std::uint8_t> unit_to_u8(const float* data, std::size_t n);

} // namespace dtuap

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "adapedit/matrix.hpp"

namespace adapedit {

/// 8-bit interleaved image (1 = gray, 3 = RGB).
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const Image&, const Image&) = default;
};

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

bool is_png(std::span<const std::uint8_t> bytes) noexcept;

/// Quantizes values in [0, 1] to a grayscale heatmap with round-to-nearest,
/// so any value >= a is stored at >= round(a * 255). Values are clamped.
Image heatmap(std::span<const float> values, Grid grid);

// Root-mean-square difference of two same-sized images, in [0, 1] units.
double image_l2(const Image& a, const Image& b);

}  // namespace adapedit

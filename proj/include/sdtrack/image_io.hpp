#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sdtrack/grid.hpp"

namespace sdt {

/// Writes a single-channel grid as an 8-bit grayscale PNG. Values are
/// rounded and clamped to [0, 255].
void write_png_gray8(const std::filesystem::path& path, const Grid2D& image);

/// Reads an 8-bit or 16-bit grayscale PNG without any gamma conversion.
/// Colour images are converted to gray by libpng.
Grid2D read_png_gray(const std::filesystem::path& path);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // RGBRGB..., row-major

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
    static RgbImage from_gray(const Grid2D& gray);

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

}  // namespace sdt

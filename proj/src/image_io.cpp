#include "sdtrack/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

void write_png(const std::filesystem::path& path, int width, int height, png_uint_32 format, const void* data) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot write " + path.string() + ": " + msg);
    }
}

}  // namespace

void write_png_gray8(const std::filesystem::path& path, const Grid2D& image) {
    if (image.channels() != 1) throw ValidationError("write_png_gray8 expects a single-channel grid");
    if (image.empty()) throw ValidationError("cannot write an empty image");
    std::vector<std::uint8_t> bytes(image.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<std::uint8_t>(std::clamp(std::round(image.values()[i]), 0.0, 255.0));
    }
    write_png(path, image.width(), image.height(), PNG_FORMAT_GRAY, bytes.data());
}

Grid2D read_png_gray(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read " + path.string() + ": " + image.message);
    }
    const bool sixteen = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    image.format = sixteen ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    Grid2D out(w, h, 1);
    if (sixteen) {
        std::vector<std::uint16_t> buf(static_cast<std::size_t>(w) * h);
        if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
            throw IoError("cannot decode " + path.string() + ": " + image.message);
        }
        std::copy(buf.begin(), buf.end(), out.values().begin());
    } else {
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
        if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
            throw IoError("cannot decode " + path.string() + ": " + image.message);
        }
        std::copy(buf.begin(), buf.end(), out.values().begin());
    }
    return out;
}

RgbImage RgbImage::from_gray(const Grid2D& gray) {
    RgbImage img(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            const auto v = static_cast<std::uint8_t>(std::clamp(std::round(gray.at(x, y)), 0.0, 255.0));
            img.set(x, y, v, v, v);
        }
    }
    return img;
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
    if (image.width < 1 || image.height < 1) throw ValidationError("cannot write an empty image");
    write_png(path, image.width, image.height, PNG_FORMAT_RGB, image.pixels.data());
}

}  // namespace sdt

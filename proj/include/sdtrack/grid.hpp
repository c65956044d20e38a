#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sdt {

/// Dense W x H x C grid of real values.
///
/// Storage is row-major with the channel index varying fastest:
/// index(x, y, c) = (y * width + x) * channels + c. The same layout is
/// used by the tensor map file format.
class Grid2D {
public:
    Grid2D() = default;
    Grid2D(int width, int height, int channels = 1, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool same_shape(const Grid2D& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool same_extent(const Grid2D& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    double& at(int x, int y, int c = 0) { return values_[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return values_[index(x, y, c)]; }

    /// All channels of one pixel.
    std::span<const double> pixel(int x, int y) const {
        return {values_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    /// Single channel copy.
    Grid2D channel(int c) const;

    /// True when every value is finite.
    bool all_finite() const;

    bool operator==(const Grid2D&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> values_;
};

}  // namespace sdt

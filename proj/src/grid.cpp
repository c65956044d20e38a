#include "sdtrack/grid.hpp"

#include <algorithm>
#include <cmath>

#include "sdtrack/errors.hpp"

namespace sdt {

Grid2D::Grid2D(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) {
        throw ValidationError("grid dimensions must be non-negative with at least one channel");
    }
    values_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Grid2D Grid2D::channel(int c) const {
    if (c < 0 || c >= channels_) throw ValidationError("channel index out of range");
    Grid2D out(width_, height_, 1);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) out.at(x, y) = at(x, y, c);
    return out;
}

bool Grid2D::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace sdt

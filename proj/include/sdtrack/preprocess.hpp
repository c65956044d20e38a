#pragma once

#include "sdtrack/grid.hpp"

namespace sdt {

struct ZScaleParams {
    double k = 2.5;
};

struct ZScaleBounds {
    double z1 = 0.0;
    double z2 = 0.0;
};

/// Median +/- k times the population standard deviation over every pixel
/// of a single-channel image. The median of an even count is the mean of
/// the two middle values. Throws ValidationError("empty input") on an
/// empty image and for k <= 0 or non-finite pixels.
ZScaleBounds zscale_bounds(const Grid2D& image, const ZScaleParams& params = {});

/// Linear stretch of [z1, z2] onto [0, 255] followed by clamping. A
/// zero-width range maps every pixel to 127.
Grid2D zscale_apply(const Grid2D& image, const ZScaleBounds& bounds);

/// Single pixel version of zscale_apply.
double zscale_value(double intensity, const ZScaleBounds& bounds);

inline Grid2D zscale(const Grid2D& image, const ZScaleParams& params = {}) {
    return zscale_apply(image, zscale_bounds(image, params));
}

}  // namespace sdt

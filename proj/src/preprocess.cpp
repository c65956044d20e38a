#include "sdtrack/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "sdtrack/errors.hpp"

namespace sdt {

ZScaleBounds zscale_bounds(const Grid2D& image, const ZScaleParams& params) {
    if (image.empty()) throw ValidationError("empty input");
    if (image.channels() != 1) throw ValidationError("zscale expects a single-channel image");
    if (!(params.k > 0.0)) throw ValidationError("zscale k must be positive");
    if (!image.all_finite()) throw ValidationError("zscale input contains non-finite pixels");

    std::vector<double> v = image.values();
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double median = v[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (lower + median);
    }

    double mean = 0.0;
    for (double x : image.values()) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : image.values()) var += (x - mean) * (x - mean);
    const double stddev = std::sqrt(var / static_cast<double>(n));

    return {median - params.k * stddev, median + params.k * stddev};
}

double zscale_value(double intensity, const ZScaleBounds& bounds) {
    if (bounds.z2 == bounds.z1) return 127.0;
    const double scaled = 255.0 * (intensity - bounds.z1) / (bounds.z2 - bounds.z1);
    return std::clamp(scaled, 0.0, 255.0);
}

Grid2D zscale_apply(const Grid2D& image, const ZScaleBounds& bounds) {
    if (bounds.z1 > bounds.z2) throw ValidationError("zscale bounds require z1 <= z2");
    Grid2D out = image;
    for (double& v : out.values()) v = zscale_value(v, bounds);
    return out;
}

}  // namespace sdt

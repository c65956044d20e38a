#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sdt {

/// Central finite differences of f at x with step h.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h);

/// ||a - b|| / max(||a||, ||b||), or 0 when both vectors vanish.
double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric);

struct GradCheckOptions {
    int trials = 100;
    std::uint64_t seed = 0;
    double step = 1e-5;
    double tolerance = 1e-4;
    double kink_margin = 1e-3;  // hinge and |x| kinks closer than this are resampled
    bool flip_sign = false;     // self-test hook: negate analytic gradients
};

struct GradCheckOutcome {
    std::string loss;
    int trials = 0;
    int failures = 0;
    double max_error = 0.0;
};

/// Random instances for seg, focal, pull, push and offset losses (8x8 maps,
/// small embedding sets) compared against central differences.
std::vector<GradCheckOutcome> run_gradient_checks(const GradCheckOptions& options);

}  // namespace sdt

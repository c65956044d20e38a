#pragma once

#include <cstdint>
#include <vector>

#include "sdtrack/domain.hpp"
#include "sdtrack/grid.hpp"
#include "sdtrack/rng.hpp"

namespace sdt {

struct Range {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const Range&) const = default;
};

struct IntRange {
    int min = 0;
    int max = 0;
    bool operator==(const IntRange&) const = default;
};

/// Gaussian point spread function: scale S and standard deviation in
/// pixels. The truncated kernel is renormalised to sum to S.
struct PsfParams {
    double scale = 1.0;
    double sigma = 1.0;
    bool enabled = true;
    bool operator==(const PsfParams&) const = default;
};

struct SimConfig {
    IntRange frames{2, 5};
    IntRange debris_count{1, 2};
    Range length{10.0, 40.0};
    Range width{1.0, 3.0};
    Range speed{2.0, 12.0};
    Range angle{0.0, 6.283185307179586};  // radians
    double brightness_mean = 700.0;
    double brightness_jitter = 60.0;  // uniform per-pixel noise in +/- jitter
    PsfParams psf;
    double fracture_prob = 0.3;
    Range fracture_gap{2.0, 6.0};
    int image_width = 256;
    int image_height = 256;
    /// Place initial centers so every endpoint stays inside the image for
    /// the whole sequence (falls back to uniform placement when impossible).
    bool keep_in_view = true;
    /// Required excess over the background median for debris pixels.
    double realism_margin = 20.0;
    std::uint64_t rng_seed = 0;

    /// Throws ValidationError naming the offending field.
    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

/// Debris set: at most two objects per frame.
SimConfig debris_preset();
/// Dense set: three to five objects per frame.
SimConfig dense_preset();
/// Training mix: one to five objects per frame.
SimConfig mixed_preset();

/// Raw synthetic sky: constant level, Gaussian read noise and PSF-shaped
/// stars. Stands in for survey images, which must go through zscale next.
struct BackgroundConfig {
    double sky_level = 1000.0;
    double noise_std = 25.0;
    double stars_per_10k_pixels = 3.0;
    Range star_flux{500.0, 20000.0};
    double star_sigma = 1.2;
    bool operator==(const BackgroundConfig&) const = default;
};

Grid2D synth_background(const BackgroundConfig& cfg, int width, int height, Rng& rng);

/// Samples length, width (capped at length), angle, speed and then the
/// center, in that order. `frames` is used only by keep_in_view placement.
DebrisState sample_initial_state(const SimConfig& cfg, int frames, Rng& rng);

/// Constant-velocity motion over `dt` frames.
DebrisState propagate(const DebrisState& s, double dt);

/// Element t is propagate(s1, t); computed from s1 directly, not by
/// repeated stepping.
std::vector<DebrisState> generate_trajectory(const DebrisState& s1, int frames);

/// Point-in-rotated-rectangle test used by the rasteriser.
bool inside_rectangle(const DebrisState& s, double x, double y);

/// True when the rotated rectangle overlaps the pixel-center hull
/// [0, W-1] x [0, H-1] of the image (separating axis test).
bool intersects_image(const DebrisState& s, int width, int height);

/// Adds brightness + U(-jitter, jitter) to every pixel whose center lies in
/// the rotated rectangle. Rectangles fully outside the image are skipped.
void rasterize_debris(Grid2D& canvas, const DebrisState& s, double brightness, double jitter, Rng& rng);

/// (2R+1)^2 kernel with R = ceil(3 sigma). Unnormalised values follow the
/// Gaussian density times S; the normalised kernel sums to S.
Grid2D psf_kernel(const PsfParams& psf, bool normalized = true);

/// Convolution with the normalised, truncated kernel (zero outside the
/// image). Only the region around non-zero pixels is processed.
Grid2D apply_psf(const Grid2D& canvas, const PsfParams& psf);

/// A gap along the line axis. A pixel at axial offset du from the center
/// is inside the gap when center - gap/2 < du <= center + gap/2.
struct FractureResult {
    bool applied = false;
    double center = 0.0;
    double gap = 0.0;

    bool in_gap(double axial_offset) const {
        return applied && axial_offset > center - gap / 2.0 && axial_offset <= center + gap / 2.0;
    }
};

/// With probability cfg.fracture_prob restores the pixels of one interior
/// gap of the rectangle in `canvas` to their values in `before`. The gap
/// length is drawn from cfg.fracture_gap and capped at length/2.
FractureResult apply_fracture(Grid2D& canvas, const Grid2D& before, const DebrisState& s,
                              const SimConfig& cfg, Rng& rng);

/// Offset of (x, y) from the center along the line direction.
double axial_offset(const DebrisState& s, double x, double y);

struct SimulatedSequence {
    std::vector<Grid2D> frames;  // 8-bit values stored as doubles
    SequenceAnnotation annotation;  // includes one mask per frame
};

/// Renders one sequence on a zscale-normalised background. The background
/// is cropped at a random offset to cfg.image_width x cfg.image_height;
/// throws ValidationError when it is smaller.
SimulatedSequence simulate_sequence(const Grid2D& background, const SimConfig& cfg, Rng& rng);

/// Fraction of mask pixels whose frame value exceeds the background median
/// by at least `margin`. Returns 1 for an empty mask.
double debris_excess_fraction(const Grid2D& frame, const Grid2D& mask, double background_median,
                              double margin);

}  // namespace sdt

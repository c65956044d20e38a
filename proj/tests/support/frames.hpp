#pragma once

// Random single-frame annotations for decode tests.

#include <cmath>
#include <numbers>
#include <vector>

#include "sdtrack/domain.hpp"
#include "sdtrack/rng.hpp"

namespace testing_frames {

// `count` objects whose endpoints lie at least `margin` pixels inside the
// image and are pairwise (over all endpoints) farther apart than
// `min_separation`.
inline std::vector<sdt::AnnotatedObject> separated_objects(sdt::Rng& rng, int count, int width, int height,
                                                           double min_separation, double margin = 2.0) {
    std::vector<sdt::AnnotatedObject> out;
    std::vector<sdt::Point2> used;
    int guard = 0;
    while (static_cast<int>(out.size()) < count && guard++ < 100000) {
        sdt::DebrisState s;
        s.center = {rng.uniform(0, width - 1), rng.uniform(0, height - 1)};
        s.length = rng.uniform(8, 40);
        s.width = rng.uniform(1, 3);
        s.angle = rng.uniform(0, 2 * std::numbers::pi);
        s.speed = rng.uniform(0, 10);
        const sdt::AnnotatedObject o = sdt::make_annotated(static_cast<int>(out.size()) + 1, s);
        bool ok = true;
        for (const sdt::Point2& p : {o.endpoints.left, o.endpoints.right}) {
            ok = ok && p.x >= margin && p.y >= margin && p.x <= width - 1 - margin && p.y <= height - 1 - margin;
            for (const sdt::Point2& q : used) ok = ok && sdt::l2_distance(p, q) > min_separation;
        }
        if (!ok) continue;
        used.push_back(o.endpoints.left);
        used.push_back(o.endpoints.right);
        out.push_back(o);
    }
    return out;
}

}  // namespace testing_frames

#pragma once

#include <array>

#include "tessella/grid.hpp"

namespace tess {

struct Hsl {
    double h;  // degrees, [0, 360)
    double s;  // [0, 1]
    double l;  // [0, 1]
};

struct Xyz {
    double x, y, z;
};

// r,g,b in [0, 1]. Achromatic pixels get h = 0, s = 0.
Hsl rgb_to_hsl(double r, double g, double b);

// Embeds the hue/saturation cylinder into a cartesian triple:
//   x = l
//   y = s * cos(2*pi*h/360) * min(2l, 2-2l)
//   z = s * sin(2*pi*h/360) * min(2l, 2-2l)
// h is reduced mod 360 first, so h and h+360 map to identical values.
Xyz hsl_to_xyz(double h, double s, double l);

Xyz rgb_to_xyz(double r, double g, double b);

struct PlaneStats {
    double mean = 0.0;
    double sd = 0.0;       // population standard deviation
    bool constant = false;  // sd == 0; plane was zero-filled instead of divided
};

// In-place per-plane z-score: subtract mean, divide by population sd.
// A constant plane becomes all zeros and is flagged.
PlaneStats normalize_plane(Grid& plane);

// Converts interleaved RGB planes into three normalized coordinate planes.
struct CoordPlanes {
    Grid x, y, z;
    std::array<PlaneStats, 3> stats;
};
CoordPlanes rgb_planes_to_coords(const Grid& r, const Grid& g, const Grid& b,
                                 bool normalize = true);

}  // namespace tess

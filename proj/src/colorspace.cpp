#include "tessella/colorspace.hpp"

#include <algorithm>
#include <cmath>

namespace tess {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }
}  // namespace

Hsl rgb_to_hsl(double r, double g, double b) {
    if (!in_unit(r) || !in_unit(g) || !in_unit(b))
        throw NumericError("rgb components must lie in [0, 1]");
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double l = 0.5 * (mx + mn);
    const double c = mx - mn;
    if (c == 0.0) return {0.0, 0.0, l};

    double h;
    if (mx == r)
        h = 60.0 * ((g - b) / c);
    else if (mx == g)
        h = 60.0 * ((b - r) / c + 2.0);
    else
        h = 60.0 * ((r - g) / c + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;

    // divisor 1-|2l-1| = 2l or 2-2l, nonzero here since c > 0 forces 0 < l < 1
    const double s = c / (1.0 - std::abs(2.0 * l - 1.0));
    return {h, std::min(s, 1.0), l};
}

Xyz hsl_to_xyz(double h, double s, double l) {
    if (!in_unit(s) || !in_unit(l)) throw NumericError("s and l must lie in [0, 1]");
    if (!std::isfinite(h)) throw NumericError("h must be finite");
    double hm = std::fmod(h, 360.0);
    if (hm < 0.0) hm += 360.0;
    const double radius = s * std::min(2.0 * l, 2.0 - 2.0 * l);
    const double ang = kTwoPi * hm / 360.0;
    return {l, radius * std::cos(ang), radius * std::sin(ang)};
}

Xyz rgb_to_xyz(double r, double g, double b) {
    const Hsl hsl = rgb_to_hsl(r, g, b);
    return hsl_to_xyz(hsl.h, hsl.s, hsl.l);
}

PlaneStats normalize_plane(Grid& plane) {
    PlaneStats st;
    const std::size_t n = plane.size();
    if (n == 0) throw ShapeError("cannot normalize an empty plane");
    double sum = 0.0;
    for (double v : plane.raw()) sum += v;
    st.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : plane.raw()) {
        const double d = v - st.mean;
        ss += d * d;
    }
    st.sd = std::sqrt(ss / static_cast<double>(n));
    if (st.sd == 0.0) {
        st.constant = true;
        for (double& v : plane.raw()) v = 0.0;
        return st;
    }
    const double inv = 1.0 / st.sd;
    for (double& v : plane.raw()) v = (v - st.mean) * inv;
    return st;
}

CoordPlanes rgb_planes_to_coords(const Grid& r, const Grid& g, const Grid& b, bool normalize) {
    if (!r.same_shape(g) || !r.same_shape(b))
        throw ShapeError("rgb planes must share one shape");
    CoordPlanes out;
    out.x = Grid(r.rows(), r.cols());
    out.y = Grid(r.rows(), r.cols());
    out.z = Grid(r.rows(), r.cols());
    for (int i = 0; i < r.rows(); ++i) {
        for (int j = 0; j < r.cols(); ++j) {
            const Xyz v = rgb_to_xyz(r(i, j), g(i, j), b(i, j));
            out.x(i, j) = v.x;
            out.y(i, j) = v.y;
            out.z(i, j) = v.z;
        }
    }
    if (normalize) {
        out.stats[0] = normalize_plane(out.x);
        out.stats[1] = normalize_plane(out.y);
        out.stats[2] = normalize_plane(out.z);
    }
    return out;
}

}  // namespace tess

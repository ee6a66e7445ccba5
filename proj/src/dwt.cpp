#include "tessella/dwt.hpp"

#include "tessella/dtcwt.hpp"

namespace tess {

namespace {

int reflect_idx(int i, int n) {
    const int p = 2 * n;
    int m = i % p;
    if (m < 0) m += p;
    return (m < n) ? m : p - 1 - m;
}

// even phase of the centered symmetric-extension convolution
void conv_down_row(const double* x, int len, const double* h, int hlen, double* y) {
    const int c = (hlen - 1) / 2;
    for (int t = 0; t < len / 2; ++t) {
        double acc = 0.0;
        for (int n = 0; n < hlen; ++n) acc += h[n] * x[reflect_idx(2 * t + n - c, len)];
        y[t] = acc;
    }
}

Grid transpose(const Grid& g) {
    Grid t(g.cols(), g.rows());
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) t(j, i) = g(i, j);
    return t;
}

Grid down_h(const Grid& g, const double* h, int hlen) {
    Grid out(g.rows(), g.cols() / 2);
    for (int i = 0; i < g.rows(); ++i) conv_down_row(g.row(i), g.cols(), h, hlen, out.row(i));
    return out;
}

Grid down_v(const Grid& g, const double* h, int hlen) {
    return transpose(down_h(transpose(g), h, hlen));
}

}  // namespace

DwtPyramid dwt_forward(const Grid& plane, int levels) {
    if (levels < 1) throw ShapeError("levels must be >= 1");
    const int side = plane.rows();
    if (plane.cols() != side) throw ShapeError("plane must be square");
    if (side <= 0 || levels > 30 || side % (1 << levels) != 0)
        throw ShapeError("plane side must be a positive multiple of 2^levels");

    std::array<double, 9> h0 = filters::kBiortAnalysisLow;
    std::array<double, 7> h1;
    for (int n = 0; n < 7; ++n)
        h1[n] = ((n - 3) & 1) ? -filters::kBiortSynthesisLow[n] : filters::kBiortSynthesisLow[n];

    DwtPyramid pyr;
    pyr.levels = levels;
    Grid a = plane;
    for (int l = 0; l < levels; ++l) {
        Grid vlo = down_v(a, h0.data(), 9);
        Grid vhi = down_v(a, h1.data(), 7);
        std::array<Grid, 3> d;
        d[0] = down_h(vlo, h1.data(), 7);  // LH
        d[1] = down_h(vhi, h0.data(), 9);  // HL
        d[2] = down_h(vhi, h1.data(), 7);  // HH
        a = down_h(vlo, h0.data(), 9);
        pyr.details.push_back(std::move(d));
    }
    pyr.approx = std::move(a);
    return pyr;
}

}  // namespace tess

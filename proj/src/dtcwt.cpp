#include "tessella/dtcwt.hpp"

#include <cmath>
#include <utility>

namespace tess {

namespace filters {

// Orthonormal quarter-shift prototype for the first tree at levels >= 2.
// Designed by common-factor construction: a maximally flat half-sample
// allpass factor (Thiran, L = 5) times (1+z)^2, completed to a halfband
// autocorrelation and spectrally factored for the best Hilbert pairing
// (see Selesnick, "The design of approximate Hilbert transform pairs of
// wavelet bases" and Kingsbury's q-shift construction). Sum = sqrt(2),
// sum of squares = 1, even-shift orthogonality < 1e-15.
const std::array<double, 14> kQshiftLowA = {
    -3.1843639649854282e-6, 1.1908265434332547e-5,  0.0075019262236182262,
    -0.027957723617876235,  -0.11810762218425481,   0.21431194108441300,
    0.78573625854433128,    0.56455124817767588,    0.0091620480755015124,
    -0.050284302707502338,  0.022989062275669696,   0.0065196258913224956,
    -0.00017170738435339028, -4.5915906919611374e-5};

// CDF 9/7 biorthogonal pair for the undecimated first level, derived by
// spectral factorization of the order-4 Daubechies halfband polynomial
// (four analysis zeros at z = -1 plus the complex quadruple; four synthesis
// zeros at z = -1 plus the real pair). Both normalized to DC gain sqrt(2).
const std::array<double, 9> kBiortAnalysisLow = {
    0.037828455506995461, -0.023849465019380002, -0.11062440441842341,
    0.37740285561265376,  0.85269867900940342,   0.37740285561265376,
    -0.11062440441842341, -0.023849465019380002, 0.037828455506995461};

const std::array<double, 7> kBiortSynthesisLow = {
    -0.064538882628938439, -0.040689417609558437, 0.41809227322221220,
    0.78848561640566440,   0.41809227322221220,   -0.040689417609558437,
    -0.064538882628938439};

}  // namespace filters

namespace {

constexpr int kQT = 14;  // quarter-shift tap count

struct Bank {
    std::array<double, kQT> h0a, h0b, h1a, h1b;
    std::array<double, 9> h0o, g1o;
    std::array<double, 7> g0o, h1o;
    Bank() {
        h0a = filters::kQshiftLowA;
        for (int n = 0; n < kQT; ++n) h0b[n] = h0a[kQT - 1 - n];
        for (int n = 0; n < kQT; ++n) h1a[n] = (n & 1) ? -h0b[n] : h0b[n];
        for (int n = 0; n < kQT; ++n) h1b[n] = (n & 1) ? -h0a[n] : h0a[n];
        h0o = filters::kBiortAnalysisLow;
        g0o = filters::kBiortSynthesisLow;
        for (int n = 0; n < 7; ++n) h1o[n] = ((n - 3) & 1) ? -g0o[n] : g0o[n];
        for (int n = 0; n < 9; ++n) g1o[n] = ((n - 4) & 1) ? -h0o[n] : h0o[n];
    }
};

const Bank& bank() {
    static const Bank b;
    return b;
}

// half-sample symmetric extension: ...x1 x0 | x0 x1 ... x_{n-1} | x_{n-1}...
int reflect_idx(int i, int n) {
    const int p = 2 * n;
    int m = i % p;
    if (m < 0) m += p;
    return (m < n) ? m : p - 1 - m;
}

// anti-symmetric variant used for highpass subbands in synthesis
double reflect_anti(const double* x, int i, int n) {
    const int p = 2 * n;
    int m = i % p;
    if (m < 0) m += p;
    return (m < n) ? x[m] : -x[p - 1 - m];
}

// centered undecimated convolution with symmetric extension, odd-length h
void conv_sym_row(const double* x, int len, const double* h, int hlen, double* y) {
    const int c = (hlen - 1) / 2;
    const int lo = c;
    const int hi = len - (hlen - 1 - c);
    for (int i = 0; i < std::min(lo, len); ++i) {
        double acc = 0.0;
        for (int n = 0; n < hlen; ++n) acc += h[n] * x[reflect_idx(i + n - c, len)];
        y[i] = acc;
    }
    for (int i = lo; i < hi; ++i) {
        double acc = 0.0;
        const double* xp = x + (i - c);
        for (int n = 0; n < hlen; ++n) acc += h[n] * xp[n];
        y[i] = acc;
    }
    for (int i = std::max(hi, lo); i < len; ++i) {
        double acc = 0.0;
        for (int n = 0; n < hlen; ++n) acc += h[n] * x[reflect_idx(i + n - c, len)];
        y[i] = acc;
    }
}

Grid transpose(const Grid& g) {
    Grid t(g.cols(), g.rows());
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) t(j, i) = g(i, j);
    return t;
}

Grid conv_h(const Grid& g, const double* h, int hlen) {
    Grid out(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i) conv_sym_row(g.row(i), g.cols(), h, hlen, out.row(i));
    return out;
}

Grid conv_v(const Grid& g, const double* h, int hlen) {
    return transpose(conv_h(transpose(g), h, hlen));
}

// One interleaved half-rate subband from the two tree streams. Tree a takes
// the odd output slots, tree b the even ones; input length divisible by 4.
void qshift_down_row(const double* x, int len, const double* ha, const double* hb, double* y) {
    for (int t = 0; t < len / 4; ++t) {
        double sa = 0.0, sb = 0.0;
        const int base = 4 * t;
        for (int n = 0; n < kQT; ++n) {
            sa += ha[n] * x[reflect_idx(base + kQT + 1 - 2 * n, len)];
            sb += hb[n] * x[reflect_idx(base + kQT - 2 * n, len)];
        }
        y[2 * t + 1] = sa;
        y[2 * t] = sb;
    }
}

Grid qshift_down_h(const Grid& g, bool highpass) {
    if (g.cols() % 4 != 0) throw ShapeError("quarter-shift stage needs length divisible by 4");
    const Bank& B = bank();
    const double* ha = highpass ? B.h1a.data() : B.h0a.data();
    const double* hb = highpass ? B.h1b.data() : B.h0b.data();
    Grid out(g.rows(), g.cols() / 2);
    for (int i = 0; i < g.rows(); ++i) qshift_down_row(g.row(i), g.cols(), ha, hb, out.row(i));
    return out;
}

Grid qshift_down_v(const Grid& g, bool highpass) {
    return transpose(qshift_down_h(transpose(g), highpass));
}

// Adjoint of qshift_down_row with matched boundary extension. The interleaved
// lowpass subband is half-sample symmetric, the highpass one anti-symmetric
// (h1b is the negated reverse of h1a), so each extends with its own rule.
void qshift_up_row(const double* lo, const double* hi, int half, double* out) {
    const Bank& B = bank();
    for (int i = 0; i < half; ++i) {
        double acc_odd = 0.0, acc_even = 0.0;
        for (int n = 0; n < kQT; ++n) {
            const int k = i + n - kQT / 2;
            if (k & 1) continue;
            const int t = k / 2;
            acc_odd += B.h0a[n] * lo[reflect_idx(2 * t + 1, half)] +
                       B.h1a[n] * reflect_anti(hi, 2 * t + 1, half);
            acc_even += B.h0b[n] * lo[reflect_idx(2 * t, half)] +
                        B.h1b[n] * reflect_anti(hi, 2 * t, half);
        }
        out[2 * i + 1] = acc_odd;
        out[2 * i] = acc_even;
    }
}

Grid qshift_up_h(const Grid& lo, const Grid& hi) {
    if (!lo.same_shape(hi)) throw ShapeError("subband pair shape mismatch");
    Grid out(lo.rows(), lo.cols() * 2);
    for (int i = 0; i < lo.rows(); ++i)
        qshift_up_row(lo.row(i), hi.row(i), lo.cols(), out.row(i));
    return out;
}

Grid qshift_up_v(const Grid& lo, const Grid& hi) {
    return transpose(qshift_up_h(transpose(lo), transpose(hi)));
}

// Quad-to-complex: the four sample phases of one real subband combine into
// two complex subbands with mirrored orientations. Energy-preserving.
void q2c(const Grid& g, CGrid& z1, CGrid& z2) {
    const int R = g.rows() / 2, C = g.cols() / 2;
    z1 = CGrid(R, C);
    z2 = CGrid(R, C);
    const double s = 1.0 / std::sqrt(2.0);
    for (int u = 0; u < R; ++u) {
        for (int v = 0; v < C; ++v) {
            const double a = g(2 * u, 2 * v);
            const double b = g(2 * u, 2 * v + 1);
            const double c = g(2 * u + 1, 2 * v);
            const double d = g(2 * u + 1, 2 * v + 1);
            const std::complex<double> p(a * s, b * s);
            const std::complex<double> q(d * s, -c * s);
            z1(u, v) = p - q;
            z2(u, v) = p + q;
        }
    }
}

Grid c2q(const CGrid& z1, const CGrid& z2) {
    const int R = z1.rows(), C = z1.cols();
    Grid g(2 * R, 2 * C);
    const double s = std::sqrt(2.0);
    for (int u = 0; u < R; ++u) {
        for (int v = 0; v < C; ++v) {
            const std::complex<double> p = 0.5 * (z1(u, v) + z2(u, v));
            const std::complex<double> q = 0.5 * (z2(u, v) - z1(u, v));
            g(2 * u, 2 * v) = s * p.real();
            g(2 * u, 2 * v + 1) = s * p.imag();
            g(2 * u + 1, 2 * v + 1) = s * q.real();
            g(2 * u + 1, 2 * v) = -s * q.imag();
        }
    }
    return g;
}

// Placement of the three real band quads (and their two complex parts each)
// into the documented orientation slots {+15,+45,+75,-75,-45,-15}. Fixed by
// grating calibration; negating an angle swaps slot b and slot 5-b.
struct PackEntry {
    int src;   // 0: (vLo,hHi)  1: (vHi,hLo)  2: (vHi,hHi)
    int part;  // 0: z1  1: z2
};
constexpr PackEntry kPack[6] = {{1, 0}, {2, 0}, {0, 0}, {0, 1}, {2, 1}, {1, 1}};

std::array<CGrid, 6> pack_level(const Grid& b_lh, const Grid& b_hl, const Grid& b_hh) {
    std::array<std::array<CGrid, 2>, 3> parts;
    q2c(b_lh, parts[0][0], parts[0][1]);
    q2c(b_hl, parts[1][0], parts[1][1]);
    q2c(b_hh, parts[2][0], parts[2][1]);
    std::array<CGrid, 6> out;
    for (int s = 0; s < 6; ++s) out[s] = std::move(parts[kPack[s].src][kPack[s].part]);
    return out;
}

void unpack_level(const std::array<CGrid, 6>& bands, Grid& b_lh, Grid& b_hl, Grid& b_hh) {
    std::array<std::array<const CGrid*, 2>, 3> parts{};
    for (int s = 0; s < 6; ++s) parts[kPack[s].src][kPack[s].part] = &bands[s];
    b_lh = c2q(*parts[0][0], *parts[0][1]);
    b_hl = c2q(*parts[1][0], *parts[1][1]);
    b_hh = c2q(*parts[2][0], *parts[2][1]);
}

}  // namespace

WaveletPyramid dtcwt_forward(const Grid& plane, int levels) {
    if (levels < 1) throw ShapeError("levels must be >= 1");
    const int side = plane.rows();
    if (plane.cols() != side) throw ShapeError("plane must be square");
    if (side <= 0 || levels > 30 || side % (1 << levels) != 0)
        throw ShapeError("plane side must be a positive multiple of 2^levels");

    const Bank& B = bank();
    WaveletPyramid pyr;
    pyr.levels = levels;
    pyr.rows = plane.rows();
    pyr.cols = plane.cols();
    pyr.subbands.reserve(levels);

    // level 1: undecimated odd-filter stage; sample parity plays the role
    // of the tree index from level 2 onward
    Grid vlo = conv_v(plane, B.h0o.data(), 9);
    Grid vhi = conv_v(plane, B.h1o.data(), 7);
    Grid ll = conv_h(vlo, B.h0o.data(), 9);
    {
        Grid b_lh = conv_h(vlo, B.h1o.data(), 7);
        Grid b_hl = conv_h(vhi, B.h0o.data(), 9);
        Grid b_hh = conv_h(vhi, B.h1o.data(), 7);
        pyr.subbands.push_back(pack_level(b_lh, b_hl, b_hh));
    }
    for (int level = 2; level <= levels; ++level) {
        Grid cl = qshift_down_v(ll, false);
        Grid ch = qshift_down_v(ll, true);
        Grid nll = qshift_down_h(cl, false);
        Grid b_lh = qshift_down_h(cl, true);
        Grid b_hl = qshift_down_h(ch, false);
        Grid b_hh = qshift_down_h(ch, true);
        pyr.subbands.push_back(pack_level(b_lh, b_hl, b_hh));
        ll = std::move(nll);
    }
    pyr.lowpass = std::move(ll);
    return pyr;
}

Grid dtcwt_inverse(const WaveletPyramid& pyr) {
    if (pyr.levels < 1 || static_cast<int>(pyr.subbands.size()) != pyr.levels)
        throw ShapeError("malformed pyramid: level count");
    const int side = pyr.rows;
    if (side != pyr.cols || side <= 0 || side % (1 << pyr.levels) != 0)
        throw ShapeError("malformed pyramid: stored shape");
    for (int l = 0; l < pyr.levels; ++l) {
        const int want = side >> (l + 1);
        for (const CGrid& b : pyr.subbands[l])
            if (b.rows() != want || b.cols() != want)
                throw ShapeError("malformed pyramid: subband shape");
    }
    const int lp_want = pyr.levels == 1 ? side : side >> (pyr.levels - 1);
    if (pyr.lowpass.rows() != lp_want || pyr.lowpass.cols() != lp_want)
        throw ShapeError("malformed pyramid: lowpass shape");

    const Bank& B = bank();
    Grid ll = pyr.lowpass;
    for (int level = pyr.levels; level >= 2; --level) {
        Grid b_lh, b_hl, b_hh;
        unpack_level(pyr.subbands[level - 1], b_lh, b_hl, b_hh);
        Grid cl = qshift_up_h(ll, b_lh);
        Grid ch = qshift_up_h(b_hl, b_hh);
        ll = qshift_up_v(cl, ch);
    }
    Grid b_lh, b_hl, b_hh;
    unpack_level(pyr.subbands[0], b_lh, b_hl, b_hh);
    Grid vlo = conv_h(ll, B.g0o.data(), 7);
    {
        Grid t = conv_h(b_lh, B.g1o.data(), 9);
        for (std::size_t i = 0; i < vlo.size(); ++i)
            vlo.raw()[i] = 0.5 * (vlo.raw()[i] + t.raw()[i]);
    }
    Grid vhi = conv_h(b_hl, B.g0o.data(), 7);
    {
        Grid t = conv_h(b_hh, B.g1o.data(), 9);
        for (std::size_t i = 0; i < vhi.size(); ++i)
            vhi.raw()[i] = 0.5 * (vhi.raw()[i] + t.raw()[i]);
    }
    Grid a = conv_v(vlo, B.g0o.data(), 7);
    Grid b = conv_v(vhi, B.g1o.data(), 9);
    Grid out(side, side);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.raw()[i] = 0.5 * (a.raw()[i] + b.raw()[i]);
    return out;
}

MagnitudePyramid magnitudes(const WaveletPyramid& pyr) {
    MagnitudePyramid out;
    out.levels = pyr.levels;
    out.subbands.resize(pyr.subbands.size());
    for (std::size_t l = 0; l < pyr.subbands.size(); ++l) {
        for (int b = 0; b < 6; ++b) {
            const CGrid& src = pyr.subbands[l][b];
            Grid m(src.rows(), src.cols());
            for (std::size_t i = 0; i < src.size(); ++i) m.raw()[i] = std::abs(src.raw()[i]);
            out.subbands[l][b] = std::move(m);
        }
    }
    return out;
}

MagnitudePyramid fuse_magnitudes(const WaveletPyramid& x, const WaveletPyramid& y,
                                 const WaveletPyramid& z) {
    if (x.levels != y.levels || x.levels != z.levels)
        throw ShapeError("pyramids must share level count");
    MagnitudePyramid out;
    out.levels = x.levels;
    out.subbands.resize(x.subbands.size());
    for (std::size_t l = 0; l < x.subbands.size(); ++l) {
        for (int b = 0; b < 6; ++b) {
            const CGrid& wx = x.subbands[l][b];
            const CGrid& wy = y.subbands[l][b];
            const CGrid& wz = z.subbands[l][b];
            if (!wx.same_shape(wy) || !wx.same_shape(wz))
                throw ShapeError("pyramids must share subband shapes");
            Grid m(wx.rows(), wx.cols());
            for (std::size_t i = 0; i < wx.size(); ++i)
                m.raw()[i] = std::sqrt(std::norm(wx.raw()[i]) + std::norm(wy.raw()[i]) +
                                       std::norm(wz.raw()[i]));
            out.subbands[l][b] = std::move(m);
        }
    }
    return out;
}

double subband_energy(const CGrid& band) {
    double e = 0.0;
    for (const auto& z : band.raw()) e += std::norm(z);
    return e;
}

}  // namespace tess

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tessella/dtcwt.hpp"
#include "tessella/dwt.hpp"
#include "tessella/grid.hpp"
#include "tessella/rng.hpp"

namespace testutil {

inline tess::Grid random_plane(int rows, int cols, tess::Rng& rng) {
    tess::Grid g(rows, cols);
    for (auto& v : g.raw()) v = rng.normal();
    return g;
}

// smooth random texture: gaussian noise blurred by a small box filter so
// that energy spreads across scales instead of sitting at Nyquist
inline tess::Grid random_texture(int rows, int cols, tess::Rng& rng, int blur = 2) {
    tess::Grid g = random_plane(rows, cols, rng);
    for (int pass = 0; pass < blur; ++pass) {
        tess::Grid s(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                double acc = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        acc += g((i + di + rows) % rows, (j + dj + cols) % cols);
                s(i, j) = acc / 9.0;
            }
        }
        g = s;
    }
    return g;
}

// stripes whose crests run at `deg` anticlockwise from the horizontal axis
// (y measured upward, so image row = -y)
inline tess::Grid grating(int side, double deg, double cycles_per_side, double phase = 0.0) {
    tess::Grid g(side, side);
    const double rad = deg * 3.14159265358979323846 / 180.0;
    const double f = cycles_per_side / side;
    const double kx = std::sin(rad) * f;
    const double ky = std::cos(rad) * f;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            g(r, c) = std::cos(2.0 * 3.14159265358979323846 * (kx * c + ky * r) + phase);
    return g;
}

inline double max_abs_diff(const tess::Grid& a, const tess::Grid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}

inline double energy(const tess::Grid& g) {
    double e = 0.0;
    for (double v : g.raw()) e += v * v;
    return e;
}

inline tess::Grid circshift(const tess::Grid& g, int dr, int dc) {
    tess::Grid out(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j)
            out((i + dr % g.rows() + g.rows()) % g.rows(),
                (j + dc % g.cols() + g.cols()) % g.cols()) = g(i, j);
    return out;
}

// one energy entry per (level, subband); lowpass excluded on both transforms
inline std::vector<double> energy_vector(const tess::WaveletPyramid& pyr) {
    std::vector<double> e;
    for (const auto& level : pyr.subbands)
        for (const auto& band : level) e.push_back(tess::subband_energy(band));
    return e;
}

inline std::vector<double> energy_vector(const tess::DwtPyramid& pyr) {
    std::vector<double> e;
    for (const auto& level : pyr.details)
        for (const auto& band : level) e.push_back(energy(band));
    return e;
}

inline double mean_rel_change(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(a[i] - b[i]) / std::max(a[i], 1e-300);
    return acc / static_cast<double>(a.size());
}

inline double rel_l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return std::sqrt(num / den);
}

// mean silhouette of a 2-D point set against known cluster ids
inline double silhouette_2d(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<int>& label) {
    const int n = static_cast<int>(x.size());
    const int k = *std::max_element(label.begin(), label.end()) + 1;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<int> cnt(k, 0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = std::hypot(x[i] - x[j], y[i] - y[j]);
            sum[label[j]] += d;
            cnt[label[j]]++;
        }
        const double a = sum[label[i]] / std::max(cnt[label[i]], 1);
        double b = 1e300;
        for (int c = 0; c < k; ++c)
            if (c != label[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
        total += (b - a) / std::max(a, b);
    }
    return total / n;
}

}  // namespace testutil

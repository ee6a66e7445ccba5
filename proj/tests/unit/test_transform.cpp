#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tessella/dtcwt.hpp"
#include "tessella/dwt.hpp"
#include "tessella/rng.hpp"
#include "unit/helpers.hpp"

using namespace tess;
using namespace testutil;

TEST_SUITE_BEGIN("transform");

TEST_CASE("pyramid shapes follow the dyadic ladder") {
    Grid plane(64, 64, 0.25);
    WaveletPyramid pyr = dtcwt_forward(plane, 6);
    REQUIRE(pyr.subbands.size() == 6);
    for (int l = 1; l <= 6; ++l) {
        const int want = 64 >> l;
        for (const CGrid& b : pyr.subbands[l - 1]) {
            CHECK(b.rows() == want);
            CHECK(b.cols() == want);
        }
    }
    CHECK(pyr.lowpass.rows() == 2);
    CHECK(pyr.lowpass.cols() == 2);
}

TEST_CASE("shape preconditions") {
    CHECK_THROWS_AS(dtcwt_forward(Grid(60, 60, 0.0), 6), ShapeError);
    CHECK_THROWS_AS(dtcwt_forward(Grid(64, 32, 0.0), 5), ShapeError);
    CHECK_THROWS_AS(dtcwt_forward(Grid(64, 64, 0.0), 0), ShapeError);
    WaveletPyramid pyr = dtcwt_forward(Grid(64, 64, 1.0), 6);
    pyr.subbands[2][4] = CGrid(3, 3);
    CHECK_THROWS_AS(dtcwt_inverse(pyr), ShapeError);
}

TEST_CASE("constant plane: details vanish, reconstruction exact") {
    Grid plane(64, 64, 0.8125);
    WaveletPyramid pyr = dtcwt_forward(plane, 6);
    for (const auto& level : pyr.subbands)
        for (const CGrid& band : level)
            for (const auto& z : band.raw()) CHECK(std::abs(z) < 1e-10);
    double lp_energy = 0.0;
    for (double v : pyr.lowpass.raw()) lp_energy += v * v;
    CHECK(lp_energy > 0.0);
    Grid back = dtcwt_inverse(pyr);
    CHECK(max_abs_diff(plane, back) < 1e-10);
}

TEST_CASE("perfect reconstruction on noise and stripes") {
    Rng rng(21);
    for (int rep = 0; rep < 8; ++rep) {
        Grid plane = random_plane(64, 64, rng);
        Grid back = dtcwt_inverse(dtcwt_forward(plane, 6));
        CHECK(max_abs_diff(plane, back) < 1e-8);
    }
    Grid stripes = grating(64, 45.0, 8.0);
    Grid back = dtcwt_inverse(dtcwt_forward(stripes, 6));
    CHECK(max_abs_diff(stripes, back) < 1e-8);

    // other valid sizes and depths
    for (int side : {32, 64, 128}) {
        for (int levels : {1, 2, 3}) {
            Grid p = random_plane(side, side, rng);
            Grid b = dtcwt_inverse(dtcwt_forward(p, levels));
            CHECK(max_abs_diff(p, b) < 1e-8);
        }
    }
}

TEST_CASE("linearity") {
    Rng rng(22);
    Grid x = random_plane(64, 64, rng);
    Grid y = random_plane(64, 64, rng);
    const double a = 1.75, b = -0.3125;
    Grid combo(64, 64);
    for (std::size_t i = 0; i < combo.size(); ++i)
        combo.raw()[i] = a * x.raw()[i] + b * y.raw()[i];
    WaveletPyramid px = dtcwt_forward(x, 6);
    WaveletPyramid py = dtcwt_forward(y, 6);
    WaveletPyramid pc = dtcwt_forward(combo, 6);
    for (int l = 0; l < 6; ++l) {
        for (int s = 0; s < 6; ++s) {
            const CGrid& cx = px.subbands[l][s];
            const CGrid& cy = py.subbands[l][s];
            const CGrid& cc = pc.subbands[l][s];
            for (std::size_t i = 0; i < cc.size(); ++i)
                CHECK(std::abs(cc.raw()[i] - (a * cx.raw()[i] + b * cy.raw()[i])) < 1e-10);
        }
    }
    for (std::size_t i = 0; i < pc.lowpass.size(); ++i)
        CHECK(std::abs(pc.lowpass.raw()[i] -
                       (a * px.lowpass.raw()[i] + b * py.lowpass.raw()[i])) < 1e-10);
}

// gratings at the six nominal angles must excite their own subband hardest;
// negating the angle must mirror the slot (b -> 5-b, zero-based)
TEST_CASE("orientation selectivity and mirror symmetry") {
    const double angles[6] = {15.0, 45.0, 75.0, 105.0, 135.0, 165.0};
    std::ostringstream table;
    int argmax_slot[6];
    for (int a = 0; a < 6; ++a) {
        Grid g = grating(64, angles[a], 8.0);
        WaveletPyramid pyr = dtcwt_forward(g, 6);
        // pick the level carrying the most detail energy, then the subband
        int best_level = 0;
        double best_level_e = -1.0;
        for (int l = 0; l < 6; ++l) {
            double e = 0.0;
            for (int s = 0; s < 6; ++s) e += subband_energy(pyr.subbands[l][s]);
            if (e > best_level_e) {
                best_level_e = e;
                best_level = l;
            }
        }
        table << "angle " << angles[a] << " level " << best_level + 1 << ":";
        int best_s = 0;
        double best_e = -1.0;
        for (int s = 0; s < 6; ++s) {
            const double e = subband_energy(pyr.subbands[best_level][s]);
            table << " " << e;
            if (e > best_e) {
                best_e = e;
                best_s = s;
            }
        }
        table << "\n";
        argmax_slot[a] = best_s;
    }
    INFO(table.str());
    for (int a = 0; a < 6; ++a) CHECK(argmax_slot[a] == a);
    // mirror pairs: 15<->165, 45<->135, 75<->105
    CHECK(argmax_slot[5] == 5 - argmax_slot[0]);
    CHECK(argmax_slot[4] == 5 - argmax_slot[1]);
    CHECK(argmax_slot[3] == 5 - argmax_slot[2]);
}

TEST_CASE("near shift invariance beats the decimated baseline") {
    // impulse pair from a fixed position to its 1-down neighbor
    Grid imp0(64, 64, 0.0), imp1(64, 64, 0.0);
    imp0(32, 32) = 1.0;
    imp1(33, 32) = 1.0;
    auto e0 = energy_vector(dtcwt_forward(imp0, 6));
    auto e1 = energy_vector(dtcwt_forward(imp1, 6));
    const double cplx_diff = rel_l2_diff(e0, e1);
    CHECK(cplx_diff < 0.05);
    auto d0 = energy_vector(dwt_forward(imp0, 6));
    auto d1 = energy_vector(dwt_forward(imp1, 6));
    CHECK(rel_l2_diff(d0, d1) > cplx_diff);

    // random textures, 1-pixel circular shift, mean relative energy change;
    // the baseline may sneak a win on an individual texture, so assert the
    // aggregate plus a 92% win rate (the full 100-texture version lives in
    // the acceptance suite at 95%)
    Rng rng(23);
    int wins = 0;
    const int reps = 25;
    double sum_c = 0.0, sum_d = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        Grid t = random_texture(64, 64, rng);
        Grid ts = circshift(t, 1, 0);
        const double mc = mean_rel_change(energy_vector(dtcwt_forward(t, 6)),
                                          energy_vector(dtcwt_forward(ts, 6)));
        const double md = mean_rel_change(energy_vector(dwt_forward(t, 6)),
                                          energy_vector(dwt_forward(ts, 6)));
        sum_c += mc;
        sum_d += md;
        if (mc < md) ++wins;
    }
    CHECK(sum_c < sum_d);
    CHECK(wins >= (reps * 92 + 99) / 100);
}

TEST_CASE("energy bookkeeping against the empirical frame constant") {
    // impulse-basis trace on a reduced size; same filter bank as 64/6
    const int side = 32, levels = 3;
    double trace = 0.0;
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            Grid imp(side, side, 0.0);
            imp(i, j) = 1.0;
            WaveletPyramid pyr = dtcwt_forward(imp, levels);
            for (const auto& level : pyr.subbands)
                for (const CGrid& band : level)
                    for (const auto& z : band.raw()) trace += std::norm(z);
            for (double v : pyr.lowpass.raw()) trace += v * v;
        }
    }
    const double frame_c = trace / (side * side);
    CHECK(frame_c > 1.0);

    // the frame is redundant, not tight: per-frequency gain ripples a few
    // percent around the trace average, so colored inputs drift. White noise
    // hits the trace average in expectation; a 100-plane batch binds the
    // bookkeeping to 1%.
    Rng rng(24);
    double e_in = 0.0, e_tr = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        Grid t = random_plane(side, side, rng);
        WaveletPyramid pyr = dtcwt_forward(t, levels);
        for (const auto& level : pyr.subbands)
            for (const CGrid& band : level)
                for (const auto& z : band.raw()) e_tr += std::norm(z);
        for (double v : pyr.lowpass.raw()) e_tr += v * v;
        e_in += energy(t);
    }
    CHECK(std::abs(e_tr / e_in - frame_c) < 0.01 * frame_c);
}

TEST_CASE("magnitude fusion") {
    WaveletPyramid zx = dtcwt_forward(Grid(64, 64, 0.0), 6);
    WaveletPyramid zy = zx, zz = zx;
    MagnitudePyramid zero = fuse_magnitudes(zx, zy, zz);
    for (const auto& level : zero.subbands)
        for (const Grid& band : level)
            for (double v : band.raw()) CHECK(v == 0.0);

    zx.subbands[2][1](1, 1) = {3.0, 4.0};
    MagnitudePyramid one = fuse_magnitudes(zx, zy, zz);
    CHECK(one.subbands[2][1](1, 1) == doctest::Approx(5.0));

    Rng rng(25);
    WaveletPyramid px = dtcwt_forward(random_plane(64, 64, rng), 6);
    WaveletPyramid py = dtcwt_forward(random_plane(64, 64, rng), 6);
    WaveletPyramid pz = dtcwt_forward(random_plane(64, 64, rng), 6);
    MagnitudePyramid fused = fuse_magnitudes(px, py, pz);
    for (int l = 0; l < 6; ++l) {
        for (int s = 0; s < 6; ++s) {
            const Grid& m = fused.subbands[l][s];
            for (int i = 0; i < m.rows(); ++i) {
                for (int j = 0; j < m.cols(); ++j) {
                    const double lo = std::max({std::abs(px.subbands[l][s](i, j)),
                                                std::abs(py.subbands[l][s](i, j)),
                                                std::abs(pz.subbands[l][s](i, j))});
                    CHECK(m(i, j) >= lo - 1e-14);
                    CHECK(m(i, j) >= 0.0);
                }
            }
        }
    }

    WaveletPyramid shallow = dtcwt_forward(Grid(64, 64, 0.0), 5);
    CHECK_THROWS_AS(fuse_magnitudes(px, py, shallow), ShapeError);
}

TEST_SUITE_END();

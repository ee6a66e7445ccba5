#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tessella/dtcwt.hpp"
#include "tessella/hmt.hpp"
#include "tessella/rng.hpp"

using namespace tess;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

double log_gauss(double w, double sigma) {
    const double z = w / sigma;
    return -0.5 * z * z - std::log(sigma) - kHalfLog2Pi;
}

// Brute-force reference: enumerate all 2^n hidden-state assignments of one
// tree, accumulate the exact log-likelihood and per-node marginals in log
// space. Only feasible for tiny trees; that is the point.
struct OracleResult {
    double loglik;
    std::vector<std::vector<std::array<double, 2>>> post;  // [s-1][node][state]
};

OracleResult enumerate_tree(const QuadForest& f, int tree, const HmtParams& p) {
    const int L = f.levels;
    struct Node {
        int s, r, c;
        int parent;  // flat index, -1 at root
    };
    std::vector<Node> nodes;
    std::vector<std::vector<int>> flat(L);  // flat id by [s-1][r*side+c]
    for (int s = L; s >= 1; --s) {
        const int side = f.side(s);
        flat[s - 1].resize(side * side);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                int par = -1;
                if (s < L) par = flat[s][(r / 2) * f.side(s + 1) + c / 2];
                flat[s - 1][r * side + c] = static_cast<int>(nodes.size());
                nodes.push_back({s, r, c, par});
            }
    }
    const int n = static_cast<int>(nodes.size());
    REQUIRE(n <= 22);

    auto value_of = [&](const Node& nd) {
        const int side = f.side(nd.s);
        return f.values[nd.s - 1][static_cast<std::size_t>(tree) * side * side +
                                  static_cast<std::size_t>(nd.r) * side + nd.c];
    };

    std::vector<double> lp(static_cast<std::size_t>(1) << n);
    for (std::size_t mask = 0; mask < lp.size(); ++mask) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const Node& nd = nodes[j];
            const int m = (mask >> j) & 1;
            acc += log_gauss(value_of(nd), p.sigma[nd.s - 1][m]);
            if (nd.parent < 0) {
                acc += std::log(p.prior[m]);
            } else {
                const int mp = (mask >> nd.parent) & 1;
                acc += std::log(p.trans[nd.s - 1][mp][m]);
            }
        }
        lp[mask] = acc;
    }

    const double mx = *std::max_element(lp.begin(), lp.end());
    double total = 0.0;
    std::vector<std::array<double, 2>> marg(n, {0.0, 0.0});
    for (std::size_t mask = 0; mask < lp.size(); ++mask) {
        const double e = std::exp(lp[mask] - mx);
        total += e;
        for (int j = 0; j < n; ++j) marg[j][(mask >> j) & 1] += e;
    }

    OracleResult res;
    res.loglik = mx + std::log(total);
    res.post.resize(L);
    for (int s = 1; s <= L; ++s) res.post[s - 1].resize(flat[s - 1].size());
    for (int j = 0; j < n; ++j) {
        const Node& nd = nodes[j];
        const int side = f.side(nd.s);
        res.post[nd.s - 1][nd.r * side + nd.c] = {marg[j][0] / total, marg[j][1] / total};
    }
    return res;
}

HmtParams random_params(int levels, Rng& rng) {
    HmtParams p;
    p.levels = levels;
    p.sigma.resize(levels);
    for (auto& sg : p.sigma) {
        sg = {std::exp(rng.uniform() * 3.0 - 2.0), std::exp(rng.uniform() * 3.0 - 2.0)};
    }
    p.trans.resize(levels - 1);
    for (auto& tr : p.trans)
        for (auto& row : tr) {
            const double u = 0.05 + 0.9 * rng.uniform();
            row = {u, 1.0 - u};
        }
    const double v = 0.05 + 0.9 * rng.uniform();
    p.prior = {v, 1.0 - v};
    return p;
}

QuadForest random_forest(int levels, int trees, Rng& rng, double scale = 1.0) {
    QuadForest f;
    f.levels = levels;
    f.trees = trees;
    f.values.resize(levels);
    for (int s = 1; s <= levels; ++s) {
        f.values[s - 1].resize(static_cast<std::size_t>(trees) * f.nodes_per_tree(s));
        for (double& v : f.values[s - 1]) v = scale * rng.normal();
    }
    return f;
}

// Draw hidden states root-down, then values conditioned on states.
QuadForest sample_model(const HmtParams& p, int trees, Rng& rng) {
    const int L = p.levels;
    QuadForest f;
    f.levels = L;
    f.trees = trees;
    f.values.resize(L);
    std::vector<std::vector<int>> st(L);
    for (int s = 1; s <= L; ++s) {
        const std::size_t n = static_cast<std::size_t>(trees) * f.nodes_per_tree(s);
        st[s - 1].resize(n);
        f.values[s - 1].resize(n);
    }
    for (int t = 0; t < trees; ++t) st[L - 1][t] = rng.uniform() < p.prior[0] ? 0 : 1;
    for (int s = L - 1; s >= 1; --s) {
        const int cs = f.side(s), ps = f.side(s + 1);
        for (int t = 0; t < trees; ++t)
            for (int r = 0; r < cs; ++r)
                for (int c = 0; c < cs; ++c) {
                    const int mp = st[s][t * ps * ps + (r / 2) * ps + c / 2];
                    st[s - 1][t * cs * cs + r * cs + c] =
                        rng.uniform() < p.trans[s - 1][mp][0] ? 0 : 1;
                }
    }
    for (int s = 1; s <= L; ++s)
        for (std::size_t i = 0; i < st[s - 1].size(); ++i)
            f.values[s - 1][i] = p.sigma[s - 1][st[s - 1][i]] * rng.normal();
    return f;
}

// Fit sanity shared by every EM call in this suite: trace must climb (small
// relative slack for arithmetic noise), rows must stay stochastic, states
// must come out in small-then-large order.
void check_fit(const HmtFit& fit) {
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
        const double slack = 1e-8 * (1.0 + std::abs(fit.loglik_trace[i - 1]));
        CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - slack);
    }
    const HmtParams& p = fit.params;
    for (int s = 1; s <= p.levels; ++s) {
        CHECK(p.sigma[s - 1][0] > 0.0);
        CHECK(p.sigma[s - 1][0] <= p.sigma[s - 1][1]);
    }
    for (const auto& tr : p.trans)
        for (const auto& row : tr) {
            CHECK(row[0] >= 0.0);
            CHECK(row[1] >= 0.0);
            CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(p.prior[0] + p.prior[1] == doctest::Approx(1.0).epsilon(1e-12));
}

}  // namespace

TEST_SUITE("hmt") {

TEST_CASE("posteriors match exhaustive enumeration on tiny forests") {
    Rng rng(4401);
    for (int inst = 0; inst < 50; ++inst) {
        const int trees = 1 + static_cast<int>(rng.below(2));
        const HmtParams p = random_params(2, rng);
        const QuadForest f = random_forest(2, trees, rng, 0.5 + rng.uniform());

        const HmtPosteriors got = upward_downward(f, p);

        double want_ll = 0.0;
        for (int t = 0; t < trees; ++t) {
            const OracleResult ref = enumerate_tree(f, t, p);
            want_ll += ref.loglik;
            for (int s = 1; s <= 2; ++s) {
                const int side = f.side(s);
                for (int i = 0; i < side * side; ++i) {
                    const auto& a = got.node[s - 1][static_cast<std::size_t>(t) * side * side + i];
                    const auto& b = ref.post[s - 1][i];
                    CHECK(std::abs(a[0] - b[0]) <= 1e-8);
                    CHECK(std::abs(a[1] - b[1]) <= 1e-8);
                }
            }
        }
        CHECK(got.loglik == doctest::Approx(want_ll).epsilon(1e-8));
    }
}

TEST_CASE("enumeration agreement extends to a depth-3 tree") {
    Rng rng(911);
    const HmtParams p = random_params(3, rng);
    const QuadForest f = random_forest(3, 1, rng);
    const HmtPosteriors got = upward_downward(f, p);
    const OracleResult ref = enumerate_tree(f, 0, p);
    CHECK(got.loglik == doctest::Approx(ref.loglik).epsilon(1e-8));
    for (int s = 1; s <= 3; ++s)
        for (std::size_t i = 0; i < got.node[s - 1].size(); ++i) {
            CHECK(std::abs(got.node[s - 1][i][0] - ref.post[s - 1][i][0]) <= 1e-8);
            CHECK(std::abs(got.node[s - 1][i][1] - ref.post[s - 1][i][1]) <= 1e-8);
        }
}

TEST_CASE("single-node forests") {
    QuadForest f;
    f.levels = 1;
    f.trees = 1;
    f.values = {{0.7}};

    HmtParams p;
    p.levels = 1;
    p.prior = {0.5, 0.5};

    SUBCASE("symmetric model leaves the posterior at one half") {
        p.sigma = {{1.3, 1.3}};
        const HmtPosteriors post = upward_downward(f, p);
        CHECK(post.node[0][0][0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(post.loglik == doctest::Approx(log_gauss(0.7, 1.3)).epsilon(1e-14));
    }
    SUBCASE("a large coefficient lands in the large-variance state") {
        p.sigma = {{0.1, 10.0}};
        f.values = {{30.0}};
        const HmtPosteriors post = upward_downward(f, p);
        CHECK(post.node[0][0][1] > 0.999);
    }
}

TEST_CASE("posterior rows are normalized") {
    Rng rng(77);
    const HmtParams p = random_params(4, rng);
    const QuadForest f = random_forest(4, 3, rng);
    const HmtPosteriors post = upward_downward(f, p);
    for (const auto& plane : post.node)
        for (const auto& rho : plane) {
            CHECK(std::isfinite(rho[0]));
            CHECK(rho[0] >= 0.0);
            CHECK(rho[1] >= 0.0);
            CHECK(std::abs(rho[0] + rho[1] - 1.0) <= 1e-10);
        }
}

TEST_CASE("invalid inputs are rejected") {
    Rng rng(5);
    const QuadForest f = random_forest(2, 1, rng);
    const HmtParams good = random_params(2, rng);

    HmtParams p = good;
    p.sigma[0][1] = 0.0;
    CHECK_THROWS_AS(upward_downward(f, p), NumericError);
    p = good;
    p.sigma[1][0] = -1.0;
    CHECK_THROWS_AS(upward_downward(f, p), NumericError);
    p = good;
    p.trans[0][0] = {0.7, 0.7};
    CHECK_THROWS_AS(upward_downward(f, p), NumericError);
    p = good;
    p.prior = {0.9, 0.3};
    CHECK_THROWS_AS(upward_downward(f, p), NumericError);
    p = good;
    p.levels = 3;
    CHECK_THROWS_AS(upward_downward(f, p), ShapeError);

    QuadForest bad = f;
    bad.values[0].pop_back();
    CHECK_THROWS_AS(upward_downward(bad, good), ShapeError);

    QuadForest flat = random_forest(1, 4, rng);
    CHECK_THROWS_AS(em_fit(flat), ShapeError);
}

TEST_CASE("EM log-likelihood trace climbs on varied inputs") {
    Rng rng(2024);
    for (int rep = 0; rep < 4; ++rep) {
        const int levels = 2 + static_cast<int>(rng.below(3));
        const QuadForest f = random_forest(levels, 8, rng, 0.3 + 2.0 * rng.uniform());
        const HmtFit fit = em_fit(f);
        CHECK(fit.loglik_trace.size() >= 2);
        CHECK(static_cast<int>(fit.loglik_trace.size()) == fit.iterations);
        check_fit(fit);
    }
}

TEST_CASE("EM recovers the generating mixture from sampled trees") {
    HmtParams truth;
    truth.levels = 4;
    truth.prior = {0.5, 0.5};
    truth.sigma.assign(4, {0.1, 2.0});
    truth.trans.assign(3, {{{0.85, 0.15}, {0.15, 0.85}}});

    Rng rng(31337);
    const QuadForest f = sample_model(truth, 250, rng);
    const HmtFit fit = em_fit(f);
    check_fit(fit);
    CHECK_FALSE(fit.params.degenerate);

    for (int s = 1; s <= 4; ++s) {
        CHECK(fit.params.sigma[s - 1][0] ==
              doctest::Approx(truth.sigma[s - 1][0]).epsilon(0.10));
        CHECK(fit.params.sigma[s - 1][1] ==
              doctest::Approx(truth.sigma[s - 1][1]).epsilon(0.10));
    }
    for (int cs = 1; cs <= 3; ++cs)
        for (int m = 0; m < 2; ++m)
            CHECK(std::abs(fit.params.trans[cs - 1][m][m] - 0.85) <= 0.05);
}

TEST_CASE("fits are bit-identical across repeat runs") {
    Rng rng(808);
    const QuadForest f = random_forest(3, 6, rng);
    const HmtFit a = em_fit(f);
    const HmtFit b = em_fit(f);
    REQUIRE(a.loglik_trace.size() == b.loglik_trace.size());
    for (std::size_t i = 0; i < a.loglik_trace.size(); ++i)
        CHECK(a.loglik_trace[i] == b.loglik_trace[i]);
    for (int s = 1; s <= 3; ++s) {
        CHECK(a.params.sigma[s - 1][0] == b.params.sigma[s - 1][0]);
        CHECK(a.params.sigma[s - 1][1] == b.params.sigma[s - 1][1]);
    }
    for (int cs = 1; cs <= 2; ++cs)
        for (int mp = 0; mp < 2; ++mp)
            for (int mc = 0; mc < 2; ++mc)
                CHECK(a.params.trans[cs - 1][mp][mc] == b.params.trans[cs - 1][mp][mc]);
}

TEST_CASE("constant forests take the documented fallback") {
    SUBCASE("all zero") {
        QuadForest f;
        f.levels = 2;
        f.trees = 2;
        f.values = {std::vector<double>(8, 0.0), std::vector<double>(2, 0.0)};
        const HmtFit fit = em_fit(f);
        CHECK(fit.params.degenerate);
        CHECK(fit.iterations == 0);
        CHECK(fit.loglik_trace.size() == 1);
        for (int s = 1; s <= 2; ++s) {
            CHECK(fit.params.sigma[s - 1][0] == doctest::Approx(1e-6).epsilon(1e-12));
            CHECK(fit.params.sigma[s - 1][1] == doctest::Approx(1e-6).epsilon(1e-12));
        }
        CHECK(fit.params.trans[0][0][0] == 0.8);
        CHECK(fit.params.prior[0] == 0.5);
        // reported likelihood really is the likelihood of the returned params
        const HmtPosteriors post = upward_downward(f, fit.params);
        CHECK(fit.loglik_trace[0] == doctest::Approx(post.loglik).epsilon(1e-12));
    }
    SUBCASE("constant but nonzero") {
        QuadForest f;
        f.levels = 2;
        f.trees = 1;
        f.values = {std::vector<double>(4, 3.5), std::vector<double>(1, 3.5)};
        const HmtFit fit = em_fit(f);
        CHECK(fit.params.degenerate);
        CHECK(fit.params.sigma[0][0] == doctest::Approx(3.5).epsilon(1e-12));
    }
    SUBCASE("one varying scale keeps EM alive") {
        Rng rng(6);
        QuadForest f;
        f.levels = 2;
        f.trees = 4;
        f.values = {std::vector<double>(16), std::vector<double>(4, 0.0)};
        for (double& v : f.values[0]) v = rng.normal();
        const HmtFit fit = em_fit(f);
        CHECK_FALSE(fit.params.degenerate);
        check_fit(fit);
    }
}

TEST_CASE("quadtree forests built from a transform pyramid") {
    Rng rng(99);
    const Grid plane = testutil::random_plane(64, 64, rng);
    const MagnitudePyramid mag = magnitudes(dtcwt_forward(plane, 6));

    for (int b = 0; b < 6; ++b) {
        const QuadForest f = build_forest(mag, b);
        CHECK(f.levels == 6);
        CHECK(f.trees == 1);
        std::size_t total = 0;
        const std::size_t want[6] = {1024, 256, 64, 16, 4, 1};
        for (int s = 1; s <= 6; ++s) {
            CHECK(f.values[s - 1].size() == want[s - 1]);
            total += f.values[s - 1].size();
        }
        CHECK(total == 1365);
        // values land at the addressed grid cells
        for (int s = 1; s <= 6; ++s) {
            const int side = f.side(s);
            CHECK(side == 1 << (6 - s));
            const Grid& g = mag.subbands[s - 1][b];
            for (int r = 0; r < side; r += std::max(side / 2, 1))
                for (int c = 0; c < side; c += std::max(side / 2, 1))
                    CHECK(f.values[s - 1][r * side + c] == g(r, c));
        }
    }

    CHECK_THROWS_AS(build_forest(mag, 6), ShapeError);
    CHECK_THROWS_AS(build_forest(mag, -1), ShapeError);
    const MagnitudePyramid shallow = magnitudes(dtcwt_forward(plane, 5));
    CHECK_THROWS_AS(build_forest(shallow, 0), ShapeError);
}

TEST_CASE("feature assembly places every parameter at its slot") {
    std::array<HmtParams, 6> per;
    for (int b = 0; b < 6; ++b) {
        HmtParams p;
        p.levels = 6;
        p.prior = {0.4, 0.6};
        p.sigma.resize(6);
        p.trans.resize(5);
        for (int s = 1; s <= 6; ++s)
            p.sigma[s - 1] = {std::exp(0.1 * (10 * b + s)), std::exp(0.1 * (10 * b + s) + 0.5)};
        for (int cs = 1; cs <= 5; ++cs) {
            const double d = 0.5 + 0.05 * cs + 0.01 * b;
            p.trans[cs - 1] = {{{d, 1.0 - d}, {1.0 - d - 0.02, d + 0.02}}};
        }
        per[b] = p;
    }

    const auto fv = assemble_features(per, true);
    for (int b = 0; b < 6; ++b)
        for (int s = 6; s >= 1; --s)
            for (int m = 0; m < 2; ++m) {
                const double sg = per[b].sigma[s - 1][m];
                CHECK(fv[20 * b + 2 * (6 - s) + m] ==
                      doctest::Approx(2.0 * std::log(sg)).epsilon(1e-14));
            }
    for (int b = 0; b < 6; ++b)
        for (int cs = 4; cs >= 1; --cs)
            for (int m = 0; m < 2; ++m) {
                const double v = fv[20 * b + 12 + 2 * (4 - cs) + m];
                CHECK(v == per[b].trans[cs - 1][m][m]);
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }

    const auto raw = assemble_features(per, false);
    CHECK(raw[0] == doctest::Approx(per[0].sigma[5][0] * per[0].sigma[5][0]).epsilon(1e-14));

    // same params in every subband slot tile the same 20-entry block
    std::array<HmtParams, 6> tiled;
    tiled.fill(per[2]);
    const auto tv = assemble_features(tiled, true);
    for (int b = 1; b < 6; ++b)
        for (int j = 0; j < 20; ++j) CHECK(tv[20 * b + j] == tv[j]);

    std::array<HmtParams, 6> bad = per;
    bad[3].sigma.pop_back();
    bad[3].levels = 5;
    CHECK_THROWS_AS(assemble_features(bad, true), ShapeError);
}

}  // TEST_SUITE

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tessella/rng.hpp"
#include "tessella/vocab.hpp"

using namespace tess;

namespace {

// Exact 2-means by enumerating every nonempty bipartition. Only for tiny
// instances; pins down what the Lloyd loop is supposed to find.
struct ExactSplit {
    double wcss;
    std::vector<std::uint8_t> side;
};

ExactSplit brute_force_2means(const Matrix& pts, const std::vector<int>& members) {
    const int n = static_cast<int>(members.size());
    const int d = pts.cols();
    REQUIRE(n <= 16);
    ExactSplit best{1e300, {}};
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<double> c0(d, 0.0), c1(d, 0.0);
        int n0 = 0, n1 = 0;
        for (int i = 0; i < n; ++i) {
            const double* x = pts.row(members[i]);
            if ((mask >> i) & 1) {
                for (int j = 0; j < d; ++j) c1[j] += x[j];
                ++n1;
            } else {
                for (int j = 0; j < d; ++j) c0[j] += x[j];
                ++n0;
            }
        }
        for (int j = 0; j < d; ++j) {
            c0[j] /= n0;
            c1[j] /= n1;
        }
        double w = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* x = pts.row(members[i]);
            const auto& c = ((mask >> i) & 1) ? c1 : c0;
            for (int j = 0; j < d; ++j) w += (x[j] - c[j]) * (x[j] - c[j]);
        }
        if (w < best.wcss) {
            best.wcss = w;
            best.side.assign(n, 0);
            for (int i = 0; i < n; ++i) best.side[i] = (mask >> i) & 1;
        }
    }
    return best;
}

bool same_bipartition(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size()) return false;
    bool eq = true, flip = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) eq = false;
        if (a[i] == b[i]) flip = false;
    }
    return eq || flip;
}

std::vector<int> iota_members(int n) {
    std::vector<int> m(n);
    for (int i = 0; i < n; ++i) m[i] = i;
    return m;
}

int ancestor_label(int leaf, int levels_up) {
    int c = leaf;
    for (int i = 0; i < levels_up; ++i) c = (c + 1) / 2;
    return c;
}

}  // namespace

TEST_SUITE("vocab") {

TEST_CASE("standardizer z-scores columns and remembers the fit") {
    Matrix X(2, 3);
    X(0, 0) = 1.0;  X(0, 1) = 5.0;  X(0, 2) = -2.0;
    X(1, 0) = 3.0;  X(1, 1) = 5.0;  X(1, 2) = 4.0;
    const Standardizer st = fit_standardizer(X);

    CHECK(st.mean[0] == 2.0);
    CHECK(st.scale[0] == 1.0);
    CHECK_FALSE(st.constant_col[0]);
    CHECK(st.constant_col[1]);

    const Matrix Z = st.apply(X);
    CHECK(Z(0, 0) == -1.0);
    CHECK(Z(1, 0) == 1.0);
    CHECK(Z(0, 1) == 0.0);
    CHECK(Z(1, 1) == 0.0);

    SUBCASE("training columns come out with mean zero and unit sd") {
        Rng rng(17);
        Matrix Y(40, 6);
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 6; ++j) Y(i, j) = 3.0 * rng.normal() + j;
        const Standardizer s2 = fit_standardizer(Y);
        const Matrix W = s2.apply(Y);
        for (int j = 0; j < 6; ++j) {
            double m = 0.0, ss = 0.0;
            for (int i = 0; i < 40; ++i) m += W(i, j);
            m /= 40;
            for (int i = 0; i < 40; ++i) ss += (W(i, j) - m) * (W(i, j) - m);
            CHECK(std::abs(m) <= 1e-12);
            CHECK(std::sqrt(ss / 40) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("stored transform reapplies bit-exactly") {
        const Matrix Z2 = st.apply(X);
        for (int i = 0; i < Z.rows(); ++i)
            for (int j = 0; j < Z.cols(); ++j) CHECK(Z(i, j) == Z2(i, j));
        for (int i = 0; i < X.rows(); ++i) {
            const auto row = st.apply_row(X.row(i), 3);
            for (int j = 0; j < 3; ++j) CHECK(row[j] == Z(i, j));
        }
    }
    SUBCASE("bad inputs") {
        Matrix one(1, 3);
        CHECK_THROWS_AS(fit_standardizer(one), InputError);
        CHECK_THROWS_AS(st.apply(Matrix(2, 4)), ShapeError);
        const double v[4] = {0, 0, 0, 0};
        CHECK_THROWS_AS(st.apply_row(v, 4), ShapeError);
    }
}

TEST_CASE("bisect finds the brute-force optimum on separated blobs") {
    // two 1-D blobs around -10 and +10
    Matrix pts(8, 1);
    const double vals[8] = {-10.1, -10.05, -9.95, -9.9, 9.9, 9.95, 10.05, 10.1};
    for (int i = 0; i < 8; ++i) pts(i, 0) = vals[i];
    const auto members = iota_members(8);
    const ExactSplit want = brute_force_2means(pts, members);

    std::vector<std::uint8_t> sign_split(8, 0);
    for (int i = 4; i < 8; ++i) sign_split[i] = 1;
    CHECK(same_bipartition(want.side, sign_split));

    for (std::uint64_t seed : {1ull, 42ull, 999ull}) {
        const BisectResult got = bisect(pts, members, seed);
        CHECK(same_bipartition(got.side, want.side));
        CHECK(got.count[0] + got.count[1] == 8);
        CHECK(got.wcss_trace.back() == doctest::Approx(want.wcss).epsilon(1e-12));
    }

    SUBCASE("same story in five dimensions") {
        Rng rng(7);
        Matrix p5(10, 5);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 5; ++j) p5(i, j) = (i < 5 ? -10.0 : 10.0) + 0.1 * rng.normal();
        const auto mem = iota_members(10);
        const ExactSplit ref = brute_force_2means(p5, mem);
        const BisectResult got = bisect(p5, mem, 3);
        CHECK(same_bipartition(got.side, ref.side));
        CHECK(got.wcss_trace.back() == doctest::Approx(ref.wcss).epsilon(1e-12));
    }
}

TEST_CASE("bisect degenerate rules") {
    SUBCASE("single point") {
        Matrix p(1, 2);
        p(0, 0) = 3.0;
        p(0, 1) = -1.0;
        const BisectResult r = bisect(p, {0}, 11);
        CHECK(r.count[0] == 1);
        CHECK(r.count[1] == 0);
        CHECK(r.side[0] == 0);
        CHECK(r.centroids[0][0] == 3.0);
    }
    SUBCASE("identical points all land on the odd side") {
        Matrix p(6, 3);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 3; ++j) p(i, j) = 2.5;
        const BisectResult r = bisect(p, iota_members(6), 11);
        CHECK(r.count[0] == 6);
        CHECK(r.count[1] == 0);
    }
    SUBCASE("empty input throws") {
        Matrix p(4, 2);
        CHECK_THROWS_AS(bisect(p, {}, 1), InputError);
    }
}

TEST_CASE("Lloyd objective never increases") {
    Rng rng(404);
    for (int rep = 0; rep < 6; ++rep) {
        const int n = 60 + static_cast<int>(rng.below(100));
        Matrix pts(n, 4);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 4; ++j)
                pts(i, j) = rng.normal() + (rng.uniform() < 0.5 ? -2.0 : 2.0);
        const BisectResult r = bisect(pts, iota_members(n), 1000 + rep);
        REQUIRE(!r.wcss_trace.empty());
        for (std::size_t i = 1; i < r.wcss_trace.size(); ++i)
            CHECK(r.wcss_trace[i] <= r.wcss_trace[i - 1] * (1.0 + 1e-12) + 1e-12);
    }
}

TEST_CASE("depth-2 build recovers four separated blobs") {
    Rng rng(52);
    const int per = 100;
    Matrix X(4 * per, 2);
    std::vector<int> blob(4 * per);
    const double cx[4] = {-10, -10, 10, 10};
    const double cy[4] = {-10, 10, -10, 10};
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < per; ++i) {
            const int r = b * per + i;
            blob[r] = b;
            X(r, 0) = cx[b] + 0.3 * rng.normal();
            X(r, 1) = cy[b] + 0.3 * rng.normal();
        }
    const Standardizer st = fit_standardizer(X);
    const Matrix Z = st.apply(X);
    const VocabBuild vb = build_vocab(Z, st, 2, 9001);

    // leaf labels vs blob ids must be a bijection
    std::map<int, std::set<int>> leaf_to_blob, blob_to_leaf;
    for (int r = 0; r < 4 * per; ++r) {
        CHECK(vb.labels[r] >= 1);
        CHECK(vb.labels[r] <= 4);
        leaf_to_blob[vb.labels[r]].insert(blob[r]);
        blob_to_leaf[blob[r]].insert(vb.labels[r]);
    }
    CHECK(leaf_to_blob.size() == 4);
    for (const auto& [leaf, blobs] : leaf_to_blob) CHECK(blobs.size() == 1);
    for (const auto& [b, leaves] : blob_to_leaf) CHECK(leaves.size() == 1);

    SUBCASE("assign reproduces every training label") {
        for (int r = 0; r < 4 * per; ++r) {
            const std::vector<double> raw{X(r, 0), X(r, 1)};
            CHECK(assign(vb.tree, raw) == vb.labels[r]);
        }
        CHECK_THROWS_AS(assign(vb.tree, std::vector<double>{1.0}), ShapeError);
    }
    SUBCASE("deterministic under fixed seed, any job count") {
        const VocabBuild again = build_vocab(Z, st, 2, 9001, 3);
        CHECK(again.labels == vb.labels);
        CHECK(vocab_to_json(again.tree) == vocab_to_json(vb.tree));
        const VocabBuild other = build_vocab(Z, st, 2, 9002);
        CHECK(vocab_to_json(other.tree) != vocab_to_json(vb.tree));
    }
}

TEST_CASE("partition, refinement, and structure laws on a bigger corpus") {
    Rng rng(8080);
    const int n = 2000, d = 16, depth = 6;
    Matrix X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    const Standardizer st = fit_standardizer(X);
    const Matrix Z = st.apply(X);
    const VocabBuild vb = build_vocab(Z, st, depth, 5, 2);

    for (int lbl : vb.labels) {
        CHECK(lbl >= 1);
        CHECK(lbl <= (1 << depth));
    }

    // parent arithmetic at every level; a node is split iff some point's
    // path passes through it
    std::set<std::size_t> visited;
    for (int lbl : vb.labels) {
        int c = lbl;
        for (int level = depth + 1; level >= 1; --level) {
            CHECK(c >= 1);
            CHECK(c <= (1 << (level - 1)));
            if (level <= depth) visited.insert((std::size_t{1} << (level - 1)) + c - 1);
            c = (c + 1) / 2;
        }
        CHECK(c == 1);
    }
    for (std::size_t h = 1; h < vb.tree.nodes.size(); ++h)
        CHECK(vb.tree.nodes[h].split == (visited.count(h) > 0));

    // refinement restated through ancestor arithmetic on the leaf labels
    for (int lbl : vb.labels)
        for (int up = 0; up + 1 <= depth; ++up)
            CHECK(ancestor_label(lbl, up + 1) == (ancestor_label(lbl, up) + 1) / 2);
}

TEST_CASE("assign tie-breaking and centroid queries") {
    Matrix X(2, 1);
    X(0, 0) = -1.0;
    X(1, 0) = 1.0;
    const Standardizer st = fit_standardizer(X);
    const VocabBuild vb = build_vocab(st.apply(X), st, 1, 3);

    // equidistant query takes the odd branch
    CHECK(assign(vb.tree, {0.0}) == 1);

    // a query standardizing exactly onto a centroid lands on that leaf
    const auto& node = vb.tree.nodes[1];
    REQUIRE(node.split);
    for (int side = 0; side < 2; ++side) {
        const double raw = node.centroids[side][0] * st.scale[0] + st.mean[0];
        const int leaf = assign(vb.tree, {raw});
        // centroids sit at the training points here, so sides map to leaves
        CHECK(leaf == 1 + side);
    }
}

TEST_CASE("binary-prefix locality on nested clusters") {
    Rng rng(123);
    const int depth = 3, per = 30;
    Matrix X(8 * per, 4);
    std::vector<int> truth(8 * per);
    for (int g = 0; g < 8; ++g)
        for (int i = 0; i < per; ++i) {
            const int r = g * per + i;
            truth[r] = g;
            X(r, 0) = (g & 4 ? 32.0 : -32.0) + 0.1 * rng.normal();
            X(r, 1) = (g & 2 ? 8.0 : -8.0) + 0.1 * rng.normal();
            X(r, 2) = (g & 1 ? 2.0 : -2.0) + 0.1 * rng.normal();
            X(r, 3) = 0.1 * rng.normal();
        }
    const Standardizer st = fit_standardizer(X);
    const Matrix Z = st.apply(X);
    const VocabBuild vb = build_vocab(Z, st, depth, 77);

    auto prefix_len = [&](int a, int b) {
        int la = vb.labels[a], lb = vb.labels[b];
        int shared = depth;
        while (la != lb) {
            la = (la + 1) / 2;
            lb = (lb + 1) / 2;
            --shared;
        }
        return shared;
    };
    double dist_sum[4] = {0, 0, 0, 0};
    long dist_cnt[4] = {0, 0, 0, 0};
    for (int a = 0; a < 8 * per; ++a)
        for (int b = a + 1; b < 8 * per; ++b) {
            double dd = 0.0;
            for (int j = 0; j < 4; ++j) dd += (Z(a, j) - Z(b, j)) * (Z(a, j) - Z(b, j));
            const int pl = std::max(prefix_len(a, b), 0);
            dist_sum[pl] += std::sqrt(dd);
            dist_cnt[pl]++;
        }
    for (int pl = 0; pl < 4; ++pl) REQUIRE(dist_cnt[pl] > 0);
    for (int pl = 1; pl < 4; ++pl)
        CHECK(dist_sum[pl] / dist_cnt[pl] <= dist_sum[pl - 1] / dist_cnt[pl - 1]);
}

TEST_CASE("vocabulary file round-trips and rejects junk") {
    Rng rng(31);
    Matrix X(120, 5);
    for (int i = 0; i < 120; ++i)
        for (int j = 0; j < 5; ++j) X(i, j) = rng.normal() * (j + 1);
    const Standardizer st = fit_standardizer(X);
    const VocabBuild vb = build_vocab(st.apply(X), st, 4, 2718);

    const std::string text = vocab_to_json(vb.tree);
    const VocabTree back = vocab_from_json(text);
    CHECK(back.depth == vb.tree.depth);
    CHECK(back.dim == vb.tree.dim);
    CHECK(back.seed == vb.tree.seed);
    CHECK(back.standardizer.mean == vb.tree.standardizer.mean);
    CHECK(back.standardizer.scale == vb.tree.standardizer.scale);
    for (std::size_t h = 1; h < back.nodes.size(); ++h) {
        CHECK(back.nodes[h].split == vb.tree.nodes[h].split);
        if (back.nodes[h].split) {
            CHECK(back.nodes[h].centroids[0] == vb.tree.nodes[h].centroids[0]);
            CHECK(back.nodes[h].centroids[1] == vb.tree.nodes[h].centroids[1]);
        }
    }
    for (int q = 0; q < 50; ++q) {
        std::vector<double> raw(5);
        for (double& v : raw) v = 3.0 * rng.normal();
        CHECK(assign(back, raw) == assign(vb.tree, raw));
    }

    const std::string path = "/tmp/tessella_vocab_test.json";
    save_vocab(vb.tree, path);
    const VocabTree loaded = load_vocab(path);
    CHECK(vocab_to_json(loaded) == text);

    CHECK_THROWS_AS(vocab_from_json("not json at all"), InputError);
    CHECK_THROWS_AS(vocab_from_json("{\"format\":\"other\"}"), InputError);
    CHECK_THROWS_AS(load_vocab("/nonexistent/path.json"), InputError);
}

TEST_CASE("full-depth build stays within the label budget") {
    Rng rng(64);
    Matrix X(1500, 8);
    for (int i = 0; i < 1500; ++i)
        for (int j = 0; j < 8; ++j) X(i, j) = rng.normal();
    const Standardizer st = fit_standardizer(X);
    const VocabBuild vb = build_vocab(st.apply(X), st, 10, 19);
    CHECK(vb.tree.nodes.size() == 1024);
    std::set<int> distinct;
    for (int lbl : vb.labels) {
        CHECK(lbl >= 1);
        CHECK(lbl <= 1024);
        distinct.insert(lbl);
    }
    CHECK(distinct.size() > 100);
}

}  // TEST_SUITE

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tessella/embed.hpp"
#include "tessella/rng.hpp"

using namespace tess;

namespace {

Matrix pairwise_sq(const Matrix& pts) {
    const int n = pts.rows();
    Matrix D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < pts.cols(); ++k) {
                const double d = pts(i, k) - pts(j, k);
                s += d * d;
            }
            D(i, j) = D(j, i) = s;
        }
    return D;
}

double row_perplexity(const Matrix& cond, int i) {
    double h = 0.0;
    for (int j = 0; j < cond.cols(); ++j) {
        const double p = cond(i, j);
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::exp(h);
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("three equidistant points at perplexity two") {
    Matrix D(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) D(i, j) = i == j ? 0.0 : 4.0;
    const Calibration cal = perplexity_calibration(D, 2.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(cal.bandwidth[i] > 0.0);
        CHECK(cal.conditional(i, i) == 0.0);
        for (int j = 0; j < 3; ++j)
            if (j != i) CHECK(cal.conditional(i, j) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("calibration hits the requested perplexity") {
    Rng rng(42);
    Matrix pts(40, 5);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 5; ++j) pts(i, j) = 2.0 * rng.normal();
    const Matrix D = pairwise_sq(pts);
    for (double perp : {5.0, 10.0, 25.0}) {
        const Calibration cal = perplexity_calibration(D, perp);
        for (int i = 0; i < 40; ++i) {
            CHECK(std::abs(row_perplexity(cal.conditional, i) - perp) <= 1e-4);
            double rs = 0.0;
            for (int j = 0; j < 40; ++j) rs += cal.conditional(i, j);
            CHECK(rs == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("calibration scale invariance") {
    Rng rng(7);
    Matrix pts(20, 3);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 3; ++j) pts(i, j) = rng.normal();
    const Matrix D = pairwise_sq(pts);
    Matrix Ds(20, 20);
    const double c2 = 9.0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) Ds(i, j) = c2 * D(i, j);

    const Calibration a = perplexity_calibration(D, 6.0);
    const Calibration b = perplexity_calibration(Ds, 6.0);
    for (int i = 0; i < 20; ++i) {
        CHECK(b.bandwidth[i] == doctest::Approx(c2 * a.bandwidth[i]).epsilon(1e-6));
        for (int j = 0; j < 20; ++j)
            CHECK(std::abs(b.conditional(i, j) - a.conditional(i, j)) <= 1e-10);
    }
}

TEST_CASE("calibration input validation") {
    Matrix D(5, 5);
    CHECK_THROWS_AS(perplexity_calibration(D, 5.0), InputError);   // 5 < 5+1
    CHECK_THROWS_AS(perplexity_calibration(Matrix(4, 5), 2.0), ShapeError);
    Matrix bad(5, 5);
    bad(2, 2) = 1.0;
    CHECK_THROWS_AS(perplexity_calibration(bad, 2.0), InputError);
    Matrix asym(5, 5);
    asym(0, 1) = 1.0;
    asym(1, 0) = 2.0;
    CHECK_THROWS_AS(perplexity_calibration(asym, 2.0), InputError);
}

TEST_CASE("two far clusters separate cleanly") {
    Rng rng(99);
    const int per = 20, dim = 20;
    Matrix pts(2 * per, dim);
    std::vector<int> truth(2 * per);
    for (int i = 0; i < 2 * per; ++i) {
        truth[i] = i < per ? 0 : 1;
        for (int j = 0; j < dim; ++j)
            pts(i, j) = (truth[i] ? 50.0 : 0.0) + 0.5 * rng.normal();
    }
    EmbeddingConfig cfg;
    cfg.perplexity = 10.0;
    cfg.seed = 3;
    const Embedding2D emb = tsne(pts, cfg);

    CHECK(emb.final_kl < emb.initial_kl);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 2 * per; ++i) {
        CHECK(std::isfinite(emb.x[i]));
        CHECK(std::isfinite(emb.y[i]));
        mx += emb.x[i];
        my += emb.y[i];
    }
    CHECK(std::abs(mx / (2 * per)) <= 1e-8);
    CHECK(std::abs(my / (2 * per)) <= 1e-8);
    CHECK(testutil::silhouette_2d(emb.x, emb.y, truth) > 0.5);
}

TEST_CASE("duplicated points finish next to each other") {
    Rng rng(5);
    const int pairs = 15;
    Matrix pts(2 * pairs, 6);
    for (int p = 0; p < pairs; ++p) {
        for (int j = 0; j < 6; ++j) {
            const double v = 3.0 * rng.normal();
            pts(2 * p, j) = v;
            pts(2 * p + 1, j) = v;
        }
    }
    EmbeddingConfig cfg;
    cfg.perplexity = 8.0;
    cfg.seed = 12;
    const Embedding2D emb = tsne(pts, cfg);

    std::vector<double> alldist;
    for (int i = 0; i < 2 * pairs; ++i)
        for (int j = i + 1; j < 2 * pairs; ++j)
            alldist.push_back(std::hypot(emb.x[i] - emb.x[j], emb.y[i] - emb.y[j]));
    std::nth_element(alldist.begin(), alldist.begin() + alldist.size() / 2, alldist.end());
    const double median = alldist[alldist.size() / 2];
    for (int p = 0; p < pairs; ++p) {
        const double d =
            std::hypot(emb.x[2 * p] - emb.x[2 * p + 1], emb.y[2 * p] - emb.y[2 * p + 1]);
        CHECK(d < median);
    }
}

TEST_CASE("seeded determinism, any job count") {
    Rng rng(1);
    Matrix pts(12, 4);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 4; ++j) pts(i, j) = rng.normal();
    EmbeddingConfig cfg;
    cfg.perplexity = 4.0;
    cfg.iterations = 200;
    cfg.seed = 77;
    const Embedding2D a = tsne(pts, cfg);
    const Embedding2D b = tsne(pts, cfg);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.final_kl == b.final_kl);

    EmbeddingConfig cfg4 = cfg;
    cfg4.jobs = 4;
    const Embedding2D c = tsne(pts, cfg4);
    CHECK(c.x == a.x);
    CHECK(c.y == a.y);

    EmbeddingConfig other = cfg;
    other.seed = 78;
    const Embedding2D d = tsne(pts, other);
    CHECK(d.x != a.x);
}

TEST_CASE("embedding input validation") {
    Matrix four(4, 3);
    CHECK_THROWS_AS(tsne(four, EmbeddingConfig{}), InputError);

    Rng rng(2);
    Matrix pts(10, 3);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 3; ++j) pts(i, j) = rng.normal();
    pts(4, 1) = std::nan("");
    EmbeddingConfig cfg;
    cfg.perplexity = 3.0;
    CHECK_THROWS_AS(tsne(pts, cfg), InputError);

    pts(4, 1) = 0.0;
    EmbeddingConfig big;
    big.perplexity = 30.0;  // 10 points cannot support it
    CHECK_THROWS_AS(tsne(pts, big), InputError);
}

}  // TEST_SUITE

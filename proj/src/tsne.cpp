#include <algorithm>
#include <cmath>

#include "tessella/embed.hpp"
#include "tessella/parallel.hpp"
#include "tessella/rng.hpp"

namespace tess {

namespace {

// Shannon entropy (nats) and the conditional row for one point at a given
// precision beta = 1/(2 sigma^2).
double row_entropy(const Matrix& D, int i, double beta, std::vector<double>& row) {
    const int n = D.rows();
    double mn = 1e300;
    for (int j = 0; j < n; ++j)
        if (j != i) mn = std::min(mn, D(i, j));
    double z = 0.0, moment = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j == i) {
            row[j] = 0.0;
            continue;
        }
        const double w = std::exp(-beta * (D(i, j) - mn));
        row[j] = w;
        z += w;
        moment += w * D(i, j);
    }
    for (int j = 0; j < n; ++j) row[j] /= z;
    // H = log Z + beta * E[d]; the min-shift cancels
    return std::log(z) + beta * (moment / z - mn);
}

}  // namespace

Calibration perplexity_calibration(const Matrix& sq_dist, double perplexity) {
    const int n = sq_dist.rows();
    if (sq_dist.cols() != n) throw ShapeError("distance matrix must be square");
    if (!(perplexity > 0.0)) throw InputError("perplexity must be positive");
    if (n < perplexity + 1.0) throw InputError("need more points than perplexity+1");
    for (int i = 0; i < n; ++i) {
        if (sq_dist(i, i) != 0.0) throw InputError("distance matrix diagonal must be zero");
        for (int j = i + 1; j < n; ++j) {
            if (!std::isfinite(sq_dist(i, j)) || sq_dist(i, j) < 0.0)
                throw InputError("squared distances must be finite and non-negative");
            if (std::abs(sq_dist(i, j) - sq_dist(j, i)) > 1e-12 * (1.0 + sq_dist(i, j)))
                throw InputError("distance matrix must be symmetric");
        }
    }

    const double target_h = std::log(perplexity);
    Calibration cal;
    cal.bandwidth.resize(n);
    cal.conditional = Matrix(n, n);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = 0.0;
        bool has_lo = false, has_hi = false;
        double h = row_entropy(sq_dist, i, beta, row);
        // bracket by doubling/halving, then bisect
        for (int step = 0; step < 64 && !(has_lo && has_hi); ++step) {
            if (h > target_h) {
                lo = beta;
                has_lo = true;
                if (!has_hi) beta *= 2.0;
            } else {
                hi = beta;
                has_hi = true;
                if (!has_lo) beta *= 0.5;
            }
            if (has_lo && has_hi) break;
            h = row_entropy(sq_dist, i, beta, row);
        }
        // all 50 steps every time: the interval shrinks to ~1e-15 relative,
        // which keeps the matched conditionals scale-invariant, far inside
        // the 1e-5 perplexity contract
        if (has_lo && has_hi) {
            for (int step = 0; step < 50; ++step) {
                beta = 0.5 * (lo + hi);
                h = row_entropy(sq_dist, i, beta, row);
                (h > target_h ? lo : hi) = beta;
            }
        }
        cal.bandwidth[i] = 0.5 / beta;  // sigma^2
        for (int j = 0; j < n; ++j) cal.conditional(i, j) = row[j];
    }
    return cal;
}

Embedding2D tsne(const Matrix& points, const EmbeddingConfig& config) {
    const int n = points.rows();
    if (n < 5) throw InputError("embedding needs at least five points");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < points.cols(); ++j)
            if (!std::isfinite(points(i, j))) throw InputError("embedding input has non-finite entries");

    Matrix D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < points.cols(); ++k) {
                const double d = points(i, k) - points(j, k);
                s += d * d;
            }
            D(i, j) = s;
            D(j, i) = s;
        }

    const Calibration cal = perplexity_calibration(D, config.perplexity);

    // symmetrized joint with a floor so KL stays finite
    Matrix P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            P(i, j) = std::max((cal.conditional(i, j) + cal.conditional(j, i)) / (2.0 * n),
                               1e-12);
        }

    Embedding2D emb;
    emb.x.resize(n);
    emb.y.resize(n);
    Rng rng(config.seed);
    for (int i = 0; i < n; ++i) {
        emb.x[i] = 1e-4 * rng.normal();
        emb.y[i] = 1e-4 * rng.normal();
    }

    std::vector<double> zrow(n);
    std::vector<double> gx(n), gy(n), vx(n, 0.0), vy(n, 0.0);

    auto kl_now = [&]() {
        // Z and the divergence against the unexaggerated P
        std::vector<double> zparts(n, 0.0);
        parallel_for(n, config.jobs, [&](int i) {
            double z = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = emb.x[i] - emb.x[j], dy = emb.y[i] - emb.y[j];
                z += 1.0 / (1.0 + dx * dx + dy * dy);
            }
            zparts[i] = z;
        });
        double Z = 0.0;
        for (int i = 0; i < n; ++i) Z += zparts[i];
        double kl = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = emb.x[i] - emb.x[j], dy = emb.y[i] - emb.y[j];
                const double q = std::max(1.0 / ((1.0 + dx * dx + dy * dy) * Z), 1e-300);
                kl += P(i, j) * std::log(P(i, j) / q);
            }
        return kl;
    };

    emb.initial_kl = kl_now();

    for (int it = 0; it < config.iterations; ++it) {
        const double ex = it < config.exaggeration_iters ? config.early_exaggeration : 1.0;
        const double mom =
            it < config.momentum_switch ? config.momentum_initial : config.momentum_late;

        parallel_for(n, config.jobs, [&](int i) {
            double z = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = emb.x[i] - emb.x[j], dy = emb.y[i] - emb.y[j];
                z += 1.0 / (1.0 + dx * dx + dy * dy);
            }
            zrow[i] = z;
        });
        double Z = 0.0;
        for (int i = 0; i < n; ++i) Z += zrow[i];

        parallel_for(n, config.jobs, [&](int i) {
            double ax = 0.0, ay = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = emb.x[i] - emb.x[j], dy = emb.y[i] - emb.y[j];
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                const double coef = (ex * P(i, j) - w / Z) * w;
                ax += coef * dx;
                ay += coef * dy;
            }
            gx[i] = 4.0 * ax;
            gy[i] = 4.0 * ay;
        });

        double mx = 0.0, my = 0.0;
        for (int i = 0; i < n; ++i) {
            vx[i] = mom * vx[i] - config.learning_rate * gx[i];
            vy[i] = mom * vy[i] - config.learning_rate * gy[i];
            emb.x[i] += vx[i];
            emb.y[i] += vy[i];
            mx += emb.x[i];
            my += emb.y[i];
        }
        mx /= n;
        my /= n;
        for (int i = 0; i < n; ++i) {
            emb.x[i] -= mx;
            emb.y[i] -= my;
        }
    }

    emb.final_kl = kl_now();
    return emb;
}

}  // namespace tess

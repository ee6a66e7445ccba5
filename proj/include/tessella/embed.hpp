#pragma once

#include <cstdint>
#include <vector>

#include "tessella/errors.hpp"
#include "tessella/grid.hpp"

namespace tess {

struct EmbeddingConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double early_exaggeration = 4.0;
    int exaggeration_iters = 100;
    double learning_rate = 100.0;
    double momentum_initial = 0.5;
    double momentum_late = 0.8;
    int momentum_switch = 250;  // iteration where the late momentum kicks in
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct Embedding2D {
    std::vector<double> x, y;
    double initial_kl = 0.0;  // KL right after the random init, no exaggeration
    double final_kl = 0.0;
};

// Per-point Gaussian bandwidths (sigma^2) matched to the target perplexity
// by bisection on the precision, plus the resulting conditional
// distributions (row i holds p_{j|i}, zero diagonal).
struct Calibration {
    std::vector<double> bandwidth;
    Matrix conditional;
};

// pre: square symmetric matrix of squared distances with zero diagonal
// errors: fewer points than perplexity+1 -> InputError; malformed matrix ->
// ShapeError / InputError
Calibration perplexity_calibration(const Matrix& sq_dist, double perplexity);

// Exact O(N^2) t-SNE with momentum; the embedding is recentered to mean zero
// every iteration. Deterministic for a fixed seed at any job count.
// errors: N < 5 or non-finite input -> InputError
Embedding2D tsne(const Matrix& points, const EmbeddingConfig& config = {});

}  // namespace tess

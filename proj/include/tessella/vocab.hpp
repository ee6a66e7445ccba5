#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tessella/errors.hpp"
#include "tessella/grid.hpp"

namespace tess {

// Per-dimension z-scoring with the fit kept around so out-of-sample vectors
// can be mapped into the same space. Constant training columns are flagged
// and map to zero.
struct Standardizer {
    int dim = 0;
    std::vector<double> mean;
    std::vector<double> scale;  // population sd; 1.0 where constant
    std::vector<std::uint8_t> constant_col;

    std::vector<double> apply_row(const double* x, int n) const;
    Matrix apply(const Matrix& features) const;
};

// pre: N >= 2 rows
Standardizer fit_standardizer(const Matrix& features);

// One 2-means split of the member rows of a standardized matrix.
// side[i] is 0 or 1 per member (0 keeps the lower/odd label); empty side
// keeps its seed centroid. wcss_trace holds the objective after every Lloyd
// iteration.
struct BisectResult {
    std::vector<std::uint8_t> side;
    std::array<std::vector<double>, 2> centroids;
    std::array<int, 2> count{0, 0};
    std::vector<double> wcss_trace;
};

BisectResult bisect(const Matrix& points, const std::vector<int>& members, std::uint64_t seed);

// Binary split tree stored as a 1-based heap: node h has children 2h and
// 2h+1; level-T node k (k in 1..2^(T-1)) sits at h = 2^(T-1)+k-1. Leaf
// labels are the level depth+1 node numbers, 1..2^depth.
struct VocabNode {
    bool split = false;
    std::array<std::vector<double>, 2> centroids;
};

struct VocabTree {
    int depth = 0;
    int dim = 0;
    std::uint64_t seed = 0;
    Standardizer standardizer;
    std::vector<VocabNode> nodes;  // index 1..2^depth-1; slot 0 unused

    // Descent over standardized coordinates. Ties and unsplit nodes take the
    // odd (lower-label) branch.
    int assign_standardized(const double* x) const;
};

struct VocabBuild {
    VocabTree tree;
    std::vector<int> labels;  // leaf label per row, 1..2^depth
};

// pre: features already standardized (build uses them as-is); the
// standardizer is recorded in the tree for later queries
VocabBuild build_vocab(const Matrix& standardized, const Standardizer& standardizer, int depth,
                       std::uint64_t seed, int jobs = 1);

// Out-of-sample quantization: standardize then descend.
// errors: dimension mismatch -> ShapeError
int assign(const VocabTree& tree, const std::vector<double>& raw_features);

std::string vocab_to_json(const VocabTree& tree);
VocabTree vocab_from_json(const std::string& text);
void save_vocab(const VocabTree& tree, const std::string& path);
VocabTree load_vocab(const std::string& path);

}  // namespace tess

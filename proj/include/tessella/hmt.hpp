#pragma once

#include <array>
#include <vector>

#include "tessella/dtcwt.hpp"
#include "tessella/grid.hpp"

namespace tess {

// One subband's coefficients arranged as complete quadtrees. Scale 1 is the
// finest; the root of each tree sits at scale `levels`. Node (t, r, c) at
// scale s lives at values[s-1][t*side(s)^2 + r*side(s) + c] with
// side(s) = 2^(levels-s); its parent is (t, r/2, c/2) one scale up.
struct QuadForest {
    int levels = 0;
    int trees = 0;
    std::vector<std::vector<double>> values;

    int side(int scale) const { return 1 << (levels - scale); }
    std::size_t nodes_per_tree(int scale) const {
        const std::size_t s = static_cast<std::size_t>(side(scale));
        return s * s;
    }
    std::size_t total_nodes() const {
        std::size_t n = 0;
        for (const auto& v : values) n += v.size();
        return n;
    }
};

// Requires a 6-level pyramid whose coarsest subband grid is 1x1
// (64x64 input); yields a single tree of 1365 nodes.
QuadForest build_forest(const MagnitudePyramid& pyr, int subband);

// Two-state zero-mean Gaussian mixture over the quadtrees. State 0 is the
// small-variance state after canonicalization.
struct HmtParams {
    int levels = 0;
    std::array<double, 2> prior{0.5, 0.5};
    // sigma[s-1][m]: standard deviation of state m at scale s
    std::vector<std::array<double, 2>> sigma;
    // trans[cs-1][mp][mc]: P(child state = mc | parent state = mp) on the
    // edge from scale cs+1 down to scale cs; rows on the simplex
    std::vector<std::array<std::array<double, 2>, 2>> trans;
    bool degenerate = false;
};

struct HmtConfig {
    int max_iterations = 200;
    double tolerance = 1e-6;        // relative log-likelihood change
    double variance_floor = 1e-12;  // sigma^2 never drops below this
    double eps_floor = 1e-12;       // transition/prior probability clamp
};

struct HmtPosteriors {
    // same layout as QuadForest::values; each entry sums to 1
    std::vector<std::vector<std::array<double, 2>>> node;
    double loglik = 0.0;
};

// Exact posterior state marginals by the scaled upward-downward recursion.
HmtPosteriors upward_downward(const QuadForest& forest, const HmtParams& params);

struct HmtFit {
    HmtParams params;
    std::vector<double> loglik_trace;  // loglik of the params entering each iteration
    int iterations = 0;
};

// EM with per-scale parameter tying and deterministic moment-based
// initialization. Input where every scale is constant is degenerate: the
// documented parameter set comes back flagged with a length-1 trace
// (all-zero data keeps sigma at the floor).
HmtFit em_fit(const QuadForest& forest, const HmtConfig& config = {});

// 120-entry patch descriptor over 6 subbands. Per subband b (0-based), a
// block of 20: entries [20b + 2*(6-s) + m] hold the state-m variance at
// scale s, coarse to fine (log sigma^2 by default); entries
// [20b + 12 + 2*(4-cs) + m] hold the persistence probability eps_mm of the
// transition into child scale cs, for the 4 finest transitions cs = 4..1.
std::array<double, 120> assemble_features(const std::array<HmtParams, 6>& per_subband,
                                          bool log_variance = true);

}  // namespace tess

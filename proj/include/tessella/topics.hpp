#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tessella/errors.hpp"
#include "tessella/grid.hpp"

namespace tess {

// Dense keyword histogram for one sub-image. Keyword ids are 0-based here;
// file formats number them 1-based.
struct BagOfWords {
    std::vector<int> counts;
    int total = 0;
};

// errors: negative count -> InputError
BagOfWords make_bag(std::vector<int> counts);

struct TopicModel {
    Matrix phi;                  // vocab x K, every column on the simplex
    std::vector<double> alpha;   // K, all > 0
    double beta = 0.01;
    int K = 0;
    std::uint64_t seed = 0;
    std::vector<double> bound_trace;  // corpus objective per outer iteration
};

// Gamma(sum a) / prod Gamma(a_i) * prod pi_i^(a_i-1).
// errors: pi off the simplex or alpha <= 0 -> NumericError
double dirichlet_pdf(const std::vector<double>& pi, const std::vector<double>& alpha);

struct EstepResult {
    std::vector<double> gamma;        // K
    std::vector<int> words;           // distinct keyword ids in the document
    Matrix resp;                      // one simplex row per entry of `words`
    double bound = 0.0;               // document evidence lower bound
    std::vector<double> bound_trace;  // after every inner sweep; non-decreasing
    int iterations = 0;
};

// Mean-field coordinate ascent for one document under a fixed model.
// Stops when the L1 change of gamma drops below tol.
// errors: empty document -> InputError; count vector not matching the
// model's vocabulary -> ShapeError
EstepResult variational_estep(const BagOfWords& doc, const TopicModel& model, double tol = 1e-8,
                              int max_iter = 100);

struct LdaConfig {
    int K = 20;
    double alpha = 1.0;  // symmetric document prior, not optimized
    double beta = 0.01;  // symmetric smoothing on phi
    int max_outer = 500;
    double rel_tol = 1e-6;  // on the corpus objective
    int inner_max = 100;
    double inner_tol = 1e-8;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct LdaFit {
    TopicModel model;
    Matrix weights;  // docs x K; row = normalized clip(gamma - alpha, 0)
    int iterations = 0;
};

// Variational EM. The reported objective is the sum of document bounds plus
// a Dirichlet(1+beta) log prior on each phi column, so the M-step is an
// exact maximizer and the trace is non-decreasing; document variational
// states are warm-started across outer iterations for the same reason.
// errors: empty corpus or K < 1 -> InputError; ragged count vectors ->
// ShapeError
LdaFit lda_fit(const std::vector<BagOfWords>& corpus, const LdaConfig& config = {});

// Per-panel mean of member weight rows, renormalized.
// panel_of[i] in [0, num_panels); anything else -> InputError; a panel with
// no members -> InputError
Matrix aggregate_panels(const Matrix& weights, const std::vector<int>& panel_of, int num_panels);

// Sum of the selected patterns' weights per row. Pattern ids are 1-based to
// match the report files; duplicates are ignored.
// errors: id outside 1..K -> InputError
std::vector<double> pattern_subset_score(const Matrix& weights,
                                         const std::vector<int>& patterns);

std::string lda_to_json(const TopicModel& model);
TopicModel lda_from_json(const std::string& text);
void save_lda(const TopicModel& model, const std::string& path);
TopicModel load_lda(const std::string& path);

namespace detail {
// digamma via the shift recurrence and the asymptotic series; |err| < 1e-12
// for x >= 1e-3
double digamma(double x);
}  // namespace detail

}  // namespace tess

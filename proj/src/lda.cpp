#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "tessella/parallel.hpp"
#include "tessella/rng.hpp"
#include "tessella/topics.hpp"

namespace tess {

namespace detail {

double digamma(double x) {
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    return acc + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
}

}  // namespace detail

using detail::digamma;

BagOfWords make_bag(std::vector<int> counts) {
    BagOfWords bag;
    bag.total = 0;
    for (int c : counts) {
        if (c < 0) throw InputError("keyword counts must be non-negative");
        bag.total += c;
    }
    bag.counts = std::move(counts);
    return bag;
}

double dirichlet_pdf(const std::vector<double>& pi, const std::vector<double>& alpha) {
    if (pi.size() != alpha.size() || pi.empty())
        throw NumericError("density needs matching non-empty pi and alpha");
    double sum_pi = 0.0, sum_a = 0.0, lg = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (!(alpha[i] > 0.0)) throw NumericError("alpha must be positive");
        if (pi[i] < 0.0) throw NumericError("pi has negative coordinates");
        sum_pi += pi[i];
        sum_a += alpha[i];
        lg -= std::lgamma(alpha[i]);
    }
    if (std::abs(sum_pi - 1.0) > 1e-9) throw NumericError("pi does not lie on the simplex");
    lg += std::lgamma(sum_a);
    double dens = std::exp(lg);
    for (std::size_t i = 0; i < pi.size(); ++i) dens *= std::pow(pi[i], alpha[i] - 1.0);
    return dens;
}

namespace {

struct DocView {
    std::vector<int> words;   // distinct ids
    std::vector<int> counts;  // aligned with words
    int total = 0;
};

DocView view_of(const BagOfWords& doc, int vocab) {
    if (static_cast<int>(doc.counts.size()) != vocab)
        throw ShapeError("document counts do not cover the model vocabulary");
    DocView v;
    for (int w = 0; w < vocab; ++w) {
        if (doc.counts[w] < 0) throw InputError("keyword counts must be non-negative");
        if (doc.counts[w] > 0) {
            v.words.push_back(w);
            v.counts.push_back(doc.counts[w]);
            v.total += doc.counts[w];
        }
    }
    if (v.total == 0) throw InputError("cannot fit an empty document");
    return v;
}

double doc_bound(const DocView& v, const Matrix& phi, const std::vector<double>& alpha,
                 const std::vector<double>& gamma, const Matrix& resp) {
    const int K = static_cast<int>(alpha.size());
    double g0 = 0.0, a0 = 0.0;
    for (int k = 0; k < K; ++k) {
        g0 += gamma[k];
        a0 += alpha[k];
    }
    const double psi_g0 = digamma(g0);
    double L = std::lgamma(a0) - std::lgamma(g0);
    for (int k = 0; k < K; ++k) {
        const double eg = digamma(gamma[k]) - psi_g0;
        L += (alpha[k] - gamma[k]) * eg - std::lgamma(alpha[k]) + std::lgamma(gamma[k]);
        double rsum = 0.0;
        for (std::size_t i = 0; i < v.words.size(); ++i) rsum += v.counts[i] * resp(static_cast<int>(i), k);
        L += rsum * eg;
    }
    for (std::size_t i = 0; i < v.words.size(); ++i) {
        for (int k = 0; k < K; ++k) {
            const double r = resp(static_cast<int>(i), k);
            if (r <= 0.0) continue;
            L += v.counts[i] * r * (std::log(phi(v.words[i], k)) - std::log(r));
        }
    }
    return L;
}

struct EstepScratch {
    std::vector<double> gamma, eg;
    Matrix resp;
};

// One document's coordinate ascent. gamma enters with the previous state
// (or empty for the cold-start rule alpha + N/K) and leaves converged.
double estep_core(const DocView& v, const Matrix& phi, const std::vector<double>& alpha,
                  double tol, int max_iter, EstepScratch& sc, std::vector<double>* trace,
                  int* iters_out) {
    const int K = static_cast<int>(alpha.size());
    const int W = static_cast<int>(v.words.size());
    if (sc.gamma.empty()) {
        sc.gamma.resize(K);
        for (int k = 0; k < K; ++k)
            sc.gamma[k] = alpha[k] + static_cast<double>(v.total) / K;
    }
    sc.eg.resize(K);
    sc.resp = Matrix(W, K);

    int it = 0;
    for (; it < max_iter; ++it) {
        double mx = -1e300;
        for (int k = 0; k < K; ++k) {
            sc.eg[k] = digamma(sc.gamma[k]);
            mx = std::max(mx, sc.eg[k]);
        }
        for (int k = 0; k < K; ++k) sc.eg[k] = std::exp(sc.eg[k] - mx);

        double l1 = 0.0;
        std::vector<double> ng(alpha);
        for (int i = 0; i < W; ++i) {
            double* row = sc.resp.row(i);
            double rs = 0.0;
            for (int k = 0; k < K; ++k) {
                row[k] = phi(v.words[i], k) * sc.eg[k];
                rs += row[k];
            }
            if (rs <= 0.0) {
                for (int k = 0; k < K; ++k) row[k] = 1.0 / K;
            } else {
                for (int k = 0; k < K; ++k) row[k] /= rs;
            }
            for (int k = 0; k < K; ++k) ng[k] += v.counts[i] * row[k];
        }
        for (int k = 0; k < K; ++k) {
            l1 += std::abs(ng[k] - sc.gamma[k]);
            sc.gamma[k] = ng[k];
        }
        if (trace) trace->push_back(doc_bound(v, phi, alpha, sc.gamma, sc.resp));
        if (l1 < tol) {
            ++it;
            break;
        }
    }
    if (iters_out) *iters_out = it;
    return doc_bound(v, phi, alpha, sc.gamma, sc.resp);
}

void validate_model(const TopicModel& m) {
    if (m.K < 1 || m.phi.cols() != m.K || static_cast<int>(m.alpha.size()) != m.K)
        throw ShapeError("model dimensions are inconsistent");
    for (double a : m.alpha)
        if (!(a > 0.0)) throw NumericError("alpha must be positive");
    for (int k = 0; k < m.K; ++k) {
        double s = 0.0;
        for (int w = 0; w < m.phi.rows(); ++w) {
            if (m.phi(w, k) < 0.0) throw NumericError("phi has negative entries");
            s += m.phi(w, k);
        }
        if (std::abs(s - 1.0) > 1e-8) throw NumericError("phi columns must sum to one");
    }
}

}  // namespace

EstepResult variational_estep(const BagOfWords& doc, const TopicModel& model, double tol,
                              int max_iter) {
    validate_model(model);
    const DocView v = view_of(doc, model.phi.rows());
    EstepResult res;
    EstepScratch sc;
    res.bound_trace.reserve(16);
    res.bound = estep_core(v, model.phi, model.alpha, tol, max_iter, sc, &res.bound_trace,
                           &res.iterations);
    res.gamma = sc.gamma;
    res.words = v.words;
    res.resp = std::move(sc.resp);
    return res;
}

LdaFit lda_fit(const std::vector<BagOfWords>& corpus, const LdaConfig& config) {
    if (corpus.empty()) throw InputError("cannot fit an empty corpus");
    if (config.K < 1) throw InputError("pattern count must be at least 1");
    if (!(config.alpha > 0.0) || !(config.beta > 0.0))
        throw InputError("alpha and beta must be positive");

    const int T = static_cast<int>(corpus[0].counts.size());
    if (T < 1) throw ShapeError("empty vocabulary");
    const int D = static_cast<int>(corpus.size());
    const int K = config.K;

    std::vector<DocView> docs(D);
    std::vector<double> corpus_freq(T, 0.0);
    double grand_total = 0.0;
    for (int d = 0; d < D; ++d) {
        docs[d] = view_of(corpus[d], T);
        for (std::size_t i = 0; i < docs[d].words.size(); ++i)
            corpus_freq[docs[d].words[i]] += docs[d].counts[i];
        grand_total += docs[d].total;
    }
    for (double& f : corpus_freq) f /= grand_total;

    TopicModel model;
    model.K = K;
    model.beta = config.beta;
    model.seed = config.seed;
    model.alpha.assign(K, config.alpha);
    model.phi = Matrix(T, K);
    for (int k = 0; k < K; ++k) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(k + 1)));
        double col = 0.0;
        for (int w = 0; w < T; ++w) {
            const double v = (corpus_freq[w] + config.beta) * (1.0 + 0.5 * rng.uniform());
            model.phi(w, k) = v;
            col += v;
        }
        for (int w = 0; w < T; ++w) model.phi(w, k) /= col;
    }

    // Dirichlet(1+beta) log prior on each column; constant part kept so the
    // trace is the actual log of the joint objective
    const double prior_const =
        K * (std::lgamma(T * (1.0 + config.beta)) - T * std::lgamma(1.0 + config.beta));
    auto phi_prior = [&]() {
        double s = prior_const;
        for (int k = 0; k < K; ++k)
            for (int w = 0; w < T; ++w) s += config.beta * std::log(model.phi(w, k));
        return s;
    };

    std::vector<EstepScratch> scratch(D);
    std::vector<double> doc_bounds(D, 0.0);
    LdaFit fit;
    double prev = 0.0;
    for (int outer = 0; outer < config.max_outer; ++outer) {
        parallel_for(D, config.jobs, [&](int d) {
            doc_bounds[d] = estep_core(docs[d], model.phi, model.alpha, config.inner_tol,
                                       config.inner_max, scratch[d], nullptr, nullptr);
        });
        double bound = phi_prior();
        for (int d = 0; d < D; ++d) bound += doc_bounds[d];
        model.bound_trace.push_back(bound);
        fit.iterations = outer + 1;
        if (outer > 0 && std::abs(bound - prev) < config.rel_tol * (1.0 + std::abs(prev))) break;
        prev = bound;

        // exact M-step: phi_wk proportional to expected counts + beta
        Matrix S(T, K);
        for (int d = 0; d < D; ++d) {
            const DocView& v = docs[d];
            const Matrix& r = scratch[d].resp;
            for (std::size_t i = 0; i < v.words.size(); ++i)
                for (int k = 0; k < K; ++k)
                    S(v.words[i], k) += v.counts[i] * r(static_cast<int>(i), k);
        }
        for (int k = 0; k < K; ++k) {
            double col = 0.0;
            for (int w = 0; w < T; ++w) col += S(w, k) + config.beta;
            for (int w = 0; w < T; ++w) model.phi(w, k) = (S(w, k) + config.beta) / col;
        }
    }

    fit.weights = Matrix(D, K);
    for (int d = 0; d < D; ++d) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) {
            const double v = std::max(scratch[d].gamma[k] - model.alpha[k], 0.0);
            fit.weights(d, k) = v;
            s += v;
        }
        for (int k = 0; k < K; ++k) fit.weights(d, k) /= s;
    }
    fit.model = std::move(model);
    return fit;
}

Matrix aggregate_panels(const Matrix& weights, const std::vector<int>& panel_of, int num_panels) {
    if (static_cast<int>(panel_of.size()) != weights.rows())
        throw InputError("panel map must cover every sub-image");
    if (num_panels < 1) throw InputError("need at least one panel");
    Matrix out(num_panels, weights.cols());
    std::vector<int> members(num_panels, 0);
    for (int i = 0; i < weights.rows(); ++i) {
        const int p = panel_of[i];
        if (p < 0 || p >= num_panels) throw InputError("sub-image mapped to no known panel");
        members[p]++;
        for (int k = 0; k < weights.cols(); ++k) out(p, k) += weights(i, k);
    }
    for (int p = 0; p < num_panels; ++p) {
        if (members[p] == 0) throw InputError("panel has no sub-images");
        double s = 0.0;
        for (int k = 0; k < weights.cols(); ++k) s += out(p, k);
        for (int k = 0; k < weights.cols(); ++k) out(p, k) /= s;
    }
    return out;
}

std::vector<double> pattern_subset_score(const Matrix& weights,
                                         const std::vector<int>& patterns) {
    std::vector<std::uint8_t> pick(weights.cols(), 0);
    for (int p : patterns) {
        if (p < 1 || p > weights.cols()) throw InputError("pattern id outside 1..K");
        pick[p - 1] = 1;
    }
    std::vector<double> out(weights.rows(), 0.0);
    for (int i = 0; i < weights.rows(); ++i)
        for (int k = 0; k < weights.cols(); ++k)
            if (pick[k]) out[i] += weights(i, k);
    return out;
}

std::string lda_to_json(const TopicModel& model) {
    nlohmann::json j;
    j["format"] = "tessella-topics";
    j["version"] = 1;
    j["vocab"] = model.phi.rows();
    j["k"] = model.K;
    j["alpha"] = model.alpha;
    j["beta"] = model.beta;
    j["seed"] = model.seed;
    j["bound_trace"] = model.bound_trace;
    nlohmann::json cols = nlohmann::json::array();
    for (int k = 0; k < model.K; ++k) {
        std::vector<double> col(model.phi.rows());
        for (int w = 0; w < model.phi.rows(); ++w) col[w] = model.phi(w, k);
        cols.push_back(std::move(col));
    }
    j["phi_columns"] = std::move(cols);
    return j.dump();
}

TopicModel lda_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("pattern model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "tessella-topics" || j.at("version") != 1)
            throw InputError("unrecognized pattern model file format");
        TopicModel m;
        const int T = j.at("vocab");
        m.K = j.at("k");
        j.at("alpha").get_to(m.alpha);
        m.beta = j.at("beta");
        m.seed = j.at("seed");
        j.at("bound_trace").get_to(m.bound_trace);
        const auto& cols = j.at("phi_columns");
        if (static_cast<int>(cols.size()) != m.K)
            throw InputError("pattern model column count mismatch");
        m.phi = Matrix(T, m.K);
        for (int k = 0; k < m.K; ++k) {
            const std::vector<double> col = cols[k].get<std::vector<double>>();
            if (static_cast<int>(col.size()) != T)
                throw InputError("pattern model column length mismatch");
            for (int w = 0; w < T; ++w) m.phi(w, k) = col[w];
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("pattern model file is missing fields: ") + e.what());
    }
}

void save_lda(const TopicModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open pattern model file for writing: " + path);
    f << lda_to_json(model);
    if (!f.flush()) throw InputError("failed writing pattern model file: " + path);
}

TopicModel load_lda(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open pattern model file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return lda_from_json(text);
}

}  // namespace tess

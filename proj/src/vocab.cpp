#include "tessella/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "tessella/parallel.hpp"
#include "tessella/rng.hpp"

namespace tess {

namespace {

double sqdist(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<double> Standardizer::apply_row(const double* x, int n) const {
    if (n != dim) throw ShapeError("feature dimension does not match standardizer");
    std::vector<double> out(dim);
    for (int j = 0; j < dim; ++j)
        out[j] = constant_col[j] ? 0.0 : (x[j] - mean[j]) / scale[j];
    return out;
}

Matrix Standardizer::apply(const Matrix& features) const {
    if (features.cols() != dim) throw ShapeError("feature dimension does not match standardizer");
    Matrix out(features.rows(), dim);
    for (int i = 0; i < features.rows(); ++i) {
        for (int j = 0; j < dim; ++j)
            out(i, j) = constant_col[j] ? 0.0 : (features(i, j) - mean[j]) / scale[j];
    }
    return out;
}

Standardizer fit_standardizer(const Matrix& features) {
    const int n = features.rows(), d = features.cols();
    if (n < 2) throw InputError("standardization needs at least two rows");
    Standardizer st;
    st.dim = d;
    st.mean.assign(d, 0.0);
    st.scale.assign(d, 1.0);
    st.constant_col.assign(d, 0);
    for (int j = 0; j < d; ++j) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m += features(i, j);
        m /= n;
        double ss = 0.0;
        bool varies = false;
        for (int i = 0; i < n; ++i) {
            const double dv = features(i, j) - m;
            ss += dv * dv;
            if (features(i, j) != features(0, j)) varies = true;
        }
        st.mean[j] = m;
        if (varies) {
            st.scale[j] = std::sqrt(ss / n);
        } else {
            st.constant_col[j] = 1;
        }
    }
    return st;
}

BisectResult bisect(const Matrix& points, const std::vector<int>& members, std::uint64_t seed) {
    if (members.empty()) throw InputError("cannot bisect an empty set");
    const int d = points.cols();
    const int n = static_cast<int>(members.size());

    // farthest pair within a seeded sample picks the two starting centers
    Rng rng(seed);
    std::vector<int> sample = members;
    const int m = std::min<int>(256, n);
    for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(sample[i], sample[j]);
    }
    int s0 = sample[0], s1 = sample[0];
    double best = -1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double dd = sqdist(points.row(sample[i]), points.row(sample[j]), d);
            if (dd > best) {
                best = dd;
                s0 = sample[i];
                s1 = sample[j];
            }
        }

    BisectResult res;
    res.centroids[0].assign(points.row(s0), points.row(s0) + d);
    res.centroids[1].assign(points.row(s1), points.row(s1) + d);
    res.side.assign(n, 0);

    std::vector<double> sum0(d), sum1(d);
    for (int it = 0; it < 100; ++it) {
        bool changed = it == 0;
        for (int i = 0; i < n; ++i) {
            const double* x = points.row(members[i]);
            const double d0 = sqdist(x, res.centroids[0].data(), d);
            const double d1 = sqdist(x, res.centroids[1].data(), d);
            const std::uint8_t side = d0 <= d1 ? 0 : 1;  // tie keeps the odd branch
            if (side != res.side[i]) changed = true;
            res.side[i] = side;
        }
        if (!changed) break;

        std::fill(sum0.begin(), sum0.end(), 0.0);
        std::fill(sum1.begin(), sum1.end(), 0.0);
        int c0 = 0, c1 = 0;
        for (int i = 0; i < n; ++i) {
            const double* x = points.row(members[i]);
            double* acc = res.side[i] ? sum1.data() : sum0.data();
            for (int j = 0; j < d; ++j) acc[j] += x[j];
            (res.side[i] ? c1 : c0)++;
        }
        if (c0 > 0)
            for (int j = 0; j < d; ++j) res.centroids[0][j] = sum0[j] / c0;
        if (c1 > 0)
            for (int j = 0; j < d; ++j) res.centroids[1][j] = sum1[j] / c1;

        double wcss = 0.0;
        for (int i = 0; i < n; ++i)
            wcss += sqdist(points.row(members[i]), res.centroids[res.side[i]].data(), d);
        res.wcss_trace.push_back(wcss);
    }

    res.count = {0, 0};
    for (std::uint8_t s : res.side) res.count[s]++;
    return res;
}

VocabBuild build_vocab(const Matrix& standardized, const Standardizer& standardizer, int depth,
                       std::uint64_t seed, int jobs) {
    if (depth < 1 || depth > 20) throw InputError("split depth out of range");
    if (standardized.cols() != standardizer.dim)
        throw ShapeError("feature dimension does not match standardizer");
    const int n = standardized.rows();

    VocabBuild out;
    out.tree.depth = depth;
    out.tree.dim = standardized.cols();
    out.tree.seed = seed;
    out.tree.standardizer = standardizer;
    out.tree.nodes.assign(std::size_t{1} << depth, VocabNode{});
    out.labels.assign(n, 1);

    for (int level = 1; level <= depth; ++level) {
        const int width = 1 << (level - 1);
        std::vector<std::vector<int>> members(width);
        for (int i = 0; i < n; ++i) members[out.labels[i] - 1].push_back(i);

        std::vector<BisectResult> splits(width);
        std::vector<std::uint8_t> did(width, 0);
        parallel_for(width, jobs, [&](int k) {
            if (members[k].empty()) return;
            const std::uint64_t node_seed =
                mix_seed(mix_seed(seed, static_cast<std::uint64_t>(level)),
                         static_cast<std::uint64_t>(k + 1));
            splits[k] = bisect(standardized, members[k], node_seed);
            did[k] = 1;
        });

        for (int k = 0; k < width; ++k) {
            const int parent_label = k + 1;
            const std::size_t h = (std::size_t{1} << (level - 1)) + k;
            if (!did[k]) continue;
            out.tree.nodes[h].split = true;
            out.tree.nodes[h].centroids = splits[k].centroids;
            for (std::size_t i = 0; i < members[k].size(); ++i)
                out.labels[members[k][i]] = 2 * parent_label - 1 + splits[k].side[i];
        }
    }
    return out;
}

int VocabTree::assign_standardized(const double* x) const {
    std::size_t h = 1;
    int label = 1;
    for (int level = 1; level <= depth; ++level) {
        int side = 0;
        if (nodes[h].split) {
            const double d0 = sqdist(x, nodes[h].centroids[0].data(), dim);
            const double d1 = sqdist(x, nodes[h].centroids[1].data(), dim);
            side = d0 <= d1 ? 0 : 1;
        }
        label = 2 * label - 1 + side;
        h = 2 * h + side;
    }
    return label;
}

int assign(const VocabTree& tree, const std::vector<double>& raw_features) {
    const std::vector<double> z =
        tree.standardizer.apply_row(raw_features.data(), static_cast<int>(raw_features.size()));
    return tree.assign_standardized(z.data());
}

std::string vocab_to_json(const VocabTree& tree) {
    nlohmann::json j;
    j["format"] = "tessella-vocab";
    j["version"] = 1;
    j["depth"] = tree.depth;
    j["dim"] = tree.dim;
    j["seed"] = tree.seed;
    j["standardizer"] = {{"mean", tree.standardizer.mean},
                         {"scale", tree.standardizer.scale},
                         {"constant", tree.standardizer.constant_col}};
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t h = 1; h < tree.nodes.size(); ++h) {
        if (!tree.nodes[h].split) {
            nodes.push_back(nullptr);
        } else {
            nodes.push_back({{"c0", tree.nodes[h].centroids[0]}, {"c1", tree.nodes[h].centroids[1]}});
        }
    }
    j["nodes"] = std::move(nodes);
    return j.dump();
}

VocabTree vocab_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("vocabulary file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "tessella-vocab" || j.at("version") != 1)
            throw InputError("unrecognized vocabulary file format");
        VocabTree t;
        t.depth = j.at("depth");
        t.dim = j.at("dim");
        t.seed = j.at("seed");
        t.standardizer.dim = t.dim;
        j.at("standardizer").at("mean").get_to(t.standardizer.mean);
        j.at("standardizer").at("scale").get_to(t.standardizer.scale);
        j.at("standardizer").at("constant").get_to(t.standardizer.constant_col);
        const auto& nodes = j.at("nodes");
        t.nodes.assign(std::size_t{1} << t.depth, VocabNode{});
        if (nodes.size() + 1 != t.nodes.size())
            throw InputError("vocabulary node table has the wrong size");
        for (std::size_t h = 1; h < t.nodes.size(); ++h) {
            const auto& nd = nodes[h - 1];
            if (nd.is_null()) continue;
            t.nodes[h].split = true;
            nd.at("c0").get_to(t.nodes[h].centroids[0]);
            nd.at("c1").get_to(t.nodes[h].centroids[1]);
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("vocabulary file is missing fields: ") + e.what());
    }
}

void save_vocab(const VocabTree& tree, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open vocabulary file for writing: " + path);
    f << vocab_to_json(tree);
    if (!f.flush()) throw InputError("failed writing vocabulary file: " + path);
}

VocabTree load_vocab(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open vocabulary file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return vocab_from_json(text);
}

}  // namespace tess

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tessella/config.hpp"
#include "tessella/embed.hpp"
#include "tessella/errors.hpp"
#include "tessella/grid.hpp"
#include "tessella/hash.hpp"
#include "tessella/pipeline.hpp"
#include "tessella/tiling.hpp"
#include "tessella/topics.hpp"
#include "tessella/vocab.hpp"

namespace py = pybind11;
using namespace tess;

namespace {

Grid grid_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                     const char* what) {
    if (a.ndim() != 2) throw ShapeError(std::string(what) + ": expected a 2-D array");
    Grid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), g.data());
    return g;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_vector(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// The heavy entry points copy their inputs into plain C++ structures first,
// then drop the GIL for the actual work.
template <typename F>
auto without_gil(F&& f) {
    py::gil_scoped_release release;
    return f();
}

}  // namespace

PYBIND11_MODULE(_tessella, m) {
    m.doc() = "painting stylometry core: wavelet texture descriptors, keyword "
              "vocabulary, pattern weights, 2-D embedding, and the staged pipeline";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PipelineError>(m, "PipelineError", PyExc_RuntimeError);
    // ShapeError and NumericError derive from InputError and surface as it
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    m.attr("FEATURE_DIM") = kFeatureDim;

    py::class_<RunConfig::Stages>(m, "Stages")
        .def(py::init<>())
        .def_readwrite("extract", &RunConfig::Stages::extract)
        .def_readwrite("vocab", &RunConfig::Stages::vocab)
        .def_readwrite("topics", &RunConfig::Stages::topics)
        .def_readwrite("embed", &RunConfig::Stages::embed)
        .def_readwrite("report", &RunConfig::Stages::report);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("patch", &RunConfig::patch)
        .def_readwrite("stride", &RunConfig::stride)
        .def_readwrite("subimage", &RunConfig::subimage)
        .def_readwrite("levels", &RunConfig::levels)
        .def_readwrite("vocab_depth", &RunConfig::vocab_depth)
        .def_readwrite("topics", &RunConfig::topics)
        .def_readwrite("alpha", &RunConfig::alpha)
        .def_readwrite("beta", &RunConfig::beta)
        .def_readwrite("perplexity", &RunConfig::perplexity)
        .def_readwrite("log_variance", &RunConfig::log_variance)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("vocab_seed", &RunConfig::vocab_seed)
        .def_readwrite("topics_seed", &RunConfig::topics_seed)
        .def_readwrite("embed_seed", &RunConfig::embed_seed)
        .def_readwrite("stages", &RunConfig::stages)
        .def_readwrite("images", &RunConfig::images)
        .def_readwrite("out_dir", &RunConfig::out_dir)
        .def_readwrite("jobs", &RunConfig::jobs)
        .def_readwrite("patterns", &RunConfig::patterns)
        .def_property_readonly("patch_grid", &RunConfig::patch_grid)
        .def_property_readonly("vocab_size", &RunConfig::vocab_size)
        .def("to_json", &config_to_json_text)
        .def("validate", [](const RunConfig& c) { validate_config(c); })
        .def("hash_hex", [](const RunConfig& c) { return hex64(config_hash(c)); })
        .def("__repr__", [](const RunConfig& c) {
            return "RunConfig(" + config_to_json_text(c) + ")";
        });

    m.def("config_from_json", &config_from_json_text, py::arg("text"),
          "Parse a JSON run description; unknown keys or bad types raise ConfigError.");
    m.def("load_config", &load_config, py::arg("path"));

    py::class_<TileIndex>(m, "TileIndex")
        .def_readonly("sub_row", &TileIndex::sub_row)
        .def_readonly("sub_col", &TileIndex::sub_col)
        .def_readonly("sub_index", &TileIndex::sub_index)
        .def_readonly("patch_row", &TileIndex::patch_row)
        .def_readonly("patch_col", &TileIndex::patch_col)
        .def_readonly("patch_index", &TileIndex::patch_index)
        .def_readonly("global_id", &TileIndex::global_id);

    py::class_<PatchRef>(m, "PatchRef")
        .def_readonly("x0", &PatchRef::x0)
        .def_readonly("y0", &PatchRef::y0)
        .def_property_readonly("index", [](const PatchRef& p) { return p.index; });

    py::class_<TilePlan>(m, "TilePlan")
        .def_readonly("sub_rows", &TilePlan::sub_rows)
        .def_readonly("sub_cols", &TilePlan::sub_cols)
        .def_readonly("grid", &TilePlan::grid)
        .def_readonly("patches", &TilePlan::patches)
        .def_property_readonly("sub_count", &TilePlan::sub_count)
        .def_property_readonly("patches_per_sub", &TilePlan::patches_per_sub);

    m.def("tile", &tile, py::arg("width"), py::arg("height"), py::arg("config"),
          "Plan the sub-image and patch layout for one panel; remainders past the "
          "last full sub-image are dropped.");

    m.def(
        "extract_patch_features",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> r,
           py::array_t<double, py::array::c_style | py::array::forcecast> g,
           py::array_t<double, py::array::c_style | py::array::forcecast> b,
           const RunConfig& config) {
            Grid gr = grid_from_array(r, "r"), gg = grid_from_array(g, "g"),
                 gb = grid_from_array(b, "b");
            std::vector<double> out = without_gil(
                [&] { return extract_patch_features(gr, gg, gb, config); });
            return array_from_vector(out);
        },
        py::arg("r"), py::arg("g"), py::arg("b"), py::arg("config") = RunConfig{},
        "120-entry texture descriptor of one patch given its three channel planes "
        "in [0, 1] (rows y, cols x).");

    py::class_<VocabTree>(m, "VocabTree")
        .def_readonly("depth", &VocabTree::depth)
        .def_readonly("dim", &VocabTree::dim)
        .def_readonly("seed", &VocabTree::seed)
        .def("to_json", &vocab_to_json)
        .def("assign",
             [](const VocabTree& t,
                py::array_t<double, py::array::c_style | py::array::forcecast> x) {
                 if (x.ndim() == 1) {
                     std::vector<double> row(x.data(), x.data() + x.size());
                     return py::cast(assign(t, row));
                 }
                 if (x.ndim() != 2) throw ShapeError("assign: expected a 1-D or 2-D array");
                 const auto n = x.shape(0), d = x.shape(1);
                 py::array_t<int> out(n);
                 for (py::ssize_t i = 0; i < n; ++i) {
                     std::vector<double> row(x.data() + i * d, x.data() + (i + 1) * d);
                     out.mutable_data()[i] = assign(t, row);
                 }
                 return py::cast<py::object>(out);
             },
             py::arg("features"),
             "Quantize raw descriptor rows to 1-based leaf labels.");

    m.def("vocab_from_json", &vocab_from_json, py::arg("text"));
    m.def(
        "build_vocab",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> features, int depth,
           std::uint64_t seed, int jobs) {
            Matrix raw = grid_from_array(features, "features");
            VocabBuild built = without_gil([&] {
                Standardizer st = fit_standardizer(raw);
                return build_vocab(st.apply(raw), st, depth, seed, jobs);
            });
            py::array_t<int> labels(static_cast<py::ssize_t>(built.labels.size()));
            std::copy(built.labels.begin(), built.labels.end(), labels.mutable_data());
            return py::make_tuple(std::move(built.tree), labels);
        },
        py::arg("features"), py::arg("depth"), py::arg("seed") = 0, py::arg("jobs") = 1,
        "Standardize raw descriptor rows and grow the binary split tree to "
        "2^depth leaves. Returns (tree, labels).");

    m.def(
        "lda_fit",
        [](const std::vector<std::vector<int>>& docs, int vocab_size, int K, double alpha,
           double beta, std::uint64_t seed, int jobs) {
            if (vocab_size < 1) throw InputError("vocab_size must be positive");
            std::vector<BagOfWords> corpus;
            corpus.reserve(docs.size());
            for (const auto& labels : docs) {
                std::vector<int> counts(vocab_size, 0);
                for (int w : labels) {
                    if (w < 1 || w > vocab_size)
                        throw InputError("keyword label outside 1..vocab_size");
                    ++counts[w - 1];
                }
                corpus.push_back(make_bag(std::move(counts)));
            }
            LdaConfig cfg;
            cfg.K = K;
            cfg.alpha = alpha;
            cfg.beta = beta;
            cfg.seed = seed;
            cfg.jobs = jobs;
            LdaFit fit = without_gil([&] { return lda_fit(corpus, cfg); });
            return py::make_tuple(array_from_matrix(fit.weights), lda_to_json(fit.model),
                                  fit.iterations);
        },
        py::arg("docs"), py::arg("vocab_size"), py::arg("K") = 20, py::arg("alpha") = 1.0,
        py::arg("beta") = 0.01, py::arg("seed") = 0, py::arg("jobs") = 1,
        "Fit the pattern model on documents given as lists of 1-based keyword "
        "labels. Returns (weights, model_json, iterations).");

    m.def(
        "tsne",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points,
           double perplexity, std::uint64_t seed, int jobs) {
            Matrix pts = grid_from_array(points, "points");
            EmbeddingConfig cfg;
            cfg.perplexity = perplexity;
            cfg.seed = seed;
            cfg.jobs = jobs;
            Embedding2D e = without_gil([&] { return tsne(pts, cfg); });
            const auto n = static_cast<py::ssize_t>(e.x.size());
            py::array_t<double> xy({n, static_cast<py::ssize_t>(2)});
            for (py::ssize_t i = 0; i < n; ++i) {
                xy.mutable_data()[2 * i] = e.x[i];
                xy.mutable_data()[2 * i + 1] = e.y[i];
            }
            return py::make_tuple(xy, e.initial_kl, e.final_kl);
        },
        py::arg("points"), py::arg("perplexity") = 30.0, py::arg("seed") = 0,
        py::arg("jobs") = 1,
        "Exact 2-D embedding of the rows of `points`. Returns (xy, kl_initial, "
        "kl_final).");

    py::class_<ExtractOutcome>(m, "ExtractOutcome")
        .def_readonly("features_path", &ExtractOutcome::features_path)
        .def_readonly("panels_ok", &ExtractOutcome::panels_ok)
        .def_readonly("panels_failed", &ExtractOutcome::panels_failed)
        .def_readonly("records", &ExtractOutcome::records)
        .def_readonly("skipped", &ExtractOutcome::skipped)
        .def_readonly("notes", &ExtractOutcome::notes);

    m.def(
        "run_extract",
        [](const RunConfig& c, bool export_csv) {
            return without_gil([&] { return run_extract(c, export_csv); });
        },
        py::arg("config"), py::arg("export_csv") = false);
    m.def("run_vocab",
          [](const RunConfig& c) { without_gil([&] { run_vocab(c); }); }, py::arg("config"));
    m.def("run_topics",
          [](const RunConfig& c) { without_gil([&] { run_topics(c); }); }, py::arg("config"));
    m.def("run_embed",
          [](const RunConfig& c) { without_gil([&] { run_embed(c); }); }, py::arg("config"));
    m.def("run_report",
          [](const RunConfig& c) { without_gil([&] { run_report(c); }); }, py::arg("config"));
    m.def("run_all", [](const RunConfig& c) { without_gil([&] { run_all(c); }); },
          py::arg("config"),
          "Run the enabled stages in order: extract, vocab, topics, embed, report.");

    m.def(
        "load_weights",
        [](const std::string& path) {
            WeightsTable t = load_weights(path);
            py::list panels;
            for (const auto& p : t.panels) panels.append(p.name);
            py::array_t<int> dp(static_cast<py::ssize_t>(t.doc_panel.size()));
            py::array_t<int> ds(static_cast<py::ssize_t>(t.doc_sub.size()));
            std::copy(t.doc_panel.begin(), t.doc_panel.end(), dp.mutable_data());
            std::copy(t.doc_sub.begin(), t.doc_sub.end(), ds.mutable_data());
            return py::make_tuple(panels, dp, ds, array_from_matrix(t.weights));
        },
        py::arg("path"),
        "Read a pattern weight table. Returns (panel_names, doc_panel, doc_sub, "
        "weights).");

    m.def(
        "load_embedding",
        [](const std::string& path) {
            EmbeddingTable t = load_embedding(path);
            py::list panels;
            for (const auto& p : t.panels) panels.append(p.name);
            py::array_t<int> dp(static_cast<py::ssize_t>(t.doc_panel.size()));
            py::array_t<int> ds(static_cast<py::ssize_t>(t.doc_sub.size()));
            std::copy(t.doc_panel.begin(), t.doc_panel.end(), dp.mutable_data());
            std::copy(t.doc_sub.begin(), t.doc_sub.end(), ds.mutable_data());
            const auto n = static_cast<py::ssize_t>(t.x.size());
            py::array_t<double> xy({n, static_cast<py::ssize_t>(2)});
            for (py::ssize_t i = 0; i < n; ++i) {
                xy.mutable_data()[2 * i] = t.x[i];
                xy.mutable_data()[2 * i + 1] = t.y[i];
            }
            return py::make_tuple(panels, dp, ds, xy);
        },
        py::arg("path"),
        "Read a 2-D embedding table. Returns (panel_names, doc_panel, doc_sub, xy).");
}

#include "tessella/pipeline.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tessella/colorspace.hpp"
#include "tessella/dtcwt.hpp"
#include "tessella/embed.hpp"
#include "tessella/errors.hpp"
#include "tessella/hash.hpp"
#include "tessella/hmt.hpp"
#include "tessella/image_io.hpp"
#include "tessella/parallel.hpp"
#include "tessella/report.hpp"
#include "tessella/tiling.hpp"
#include "tessella/topics.hpp"
#include "tessella/vocab.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace tess {

namespace {

std::string stem_of(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

// ---- extract journal -------------------------------------------------
//
// Append-only binary log of finished sub-images so an interrupted extract
// resumes instead of starting over. Internal format, never consumed by
// other stages:
//   tessella-features-journal 1
//   config <16 hex> / seed <dec> / dim <d> / end-header
// then records, each introduced by one type byte:
//   'P' u32 name_len, name, i32 width,height,sub_rows,sub_cols
//   'C' u32 name_len, name, i32 sub_index, i32 count,
//       count x (i32 patch_row, i32 patch_col, dim f64)
// A truncated trailing record (crash mid-write) is dropped on resume.

struct JournalChunk {
    std::vector<int> rows, cols;
    std::vector<double> values;  // count x dim, row-major
};

struct Journal {
    std::map<std::string, PanelInfo> panels;
    std::map<std::pair<std::string, int>, JournalChunk> chunks;
    bool needs_rewrite = false;  // stale tail or header mismatch on disk
};

void put_i32(std::ostream& out, std::int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

bool get_i32(std::istream& in, std::int32_t& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return bool(in);
}
bool get_u32(std::istream& in, std::uint32_t& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return bool(in);
}

void journal_header(std::ostream& out, std::uint64_t config, std::uint64_t seed, int dim) {
    out << "tessella-features-journal 1\n";
    out << "config " << hex64(config) << "\n";
    out << "seed " << seed << "\n";
    out << "dim " << dim << "\n";
    out << "end-header\n";
}

void append_panel_record(std::ostream& out, const PanelInfo& p) {
    out.put('P');
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_i32(out, p.width);
    put_i32(out, p.height);
    put_i32(out, p.sub_rows);
    put_i32(out, p.sub_cols);
}

void append_chunk_record(std::ostream& out, const std::string& name, int sub_index,
                         const JournalChunk& ch, int dim) {
    out.put('C');
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_i32(out, sub_index);
    const int count = static_cast<int>(ch.rows.size());
    put_i32(out, count);
    for (int i = 0; i < count; ++i) {
        put_i32(out, ch.rows[i]);
        put_i32(out, ch.cols[i]);
        out.write(reinterpret_cast<const char*>(ch.values.data() + std::size_t(i) * dim),
                  static_cast<std::streamsize>(sizeof(double) * dim));
    }
    out.flush();
}

Journal read_journal(const std::string& path, std::uint64_t config, std::uint64_t seed, int dim,
                     std::vector<std::string>& notes) {
    Journal j;
    std::ifstream in(path, std::ios::binary);
    if (!in) return j;

    // header must match the active run exactly, otherwise the journal is
    // from a different configuration and gets discarded
    std::string l0, l1, l2, l3, l4;
    if (!std::getline(in, l0) || !std::getline(in, l1) || !std::getline(in, l2) ||
        !std::getline(in, l3) || !std::getline(in, l4) ||
        l0 != "tessella-features-journal 1" || l1 != "config " + hex64(config) ||
        l2 != "seed " + std::to_string(seed) || l3 != "dim " + std::to_string(dim) ||
        l4 != "end-header") {
        notes.push_back("note: discarding resume journal (different configuration)");
        j.needs_rewrite = true;
        return j;
    }

    for (;;) {
        int type = in.get();
        if (type == EOF) break;
        std::uint32_t name_len = 0;
        if (!get_u32(in, name_len) || name_len > 4096) {
            j.needs_rewrite = true;
            break;
        }
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) {
            j.needs_rewrite = true;
            break;
        }
        if (type == 'P') {
            PanelInfo p;
            p.name = name;
            std::int32_t w, h, sr, sc;
            if (!get_i32(in, w) || !get_i32(in, h) || !get_i32(in, sr) || !get_i32(in, sc)) {
                j.needs_rewrite = true;
                break;
            }
            p.width = w;
            p.height = h;
            p.sub_rows = sr;
            p.sub_cols = sc;
            j.panels[name] = p;
        } else if (type == 'C') {
            std::int32_t sub = 0, count = 0;
            if (!get_i32(in, sub) || !get_i32(in, count) || count < 0 || count > 1 << 20) {
                j.needs_rewrite = true;
                break;
            }
            JournalChunk ch;
            ch.rows.resize(count);
            ch.cols.resize(count);
            ch.values.resize(std::size_t(count) * dim);
            bool ok = true;
            for (int i = 0; i < count && ok; ++i) {
                std::int32_t r, c;
                ok = get_i32(in, r) && get_i32(in, c);
                if (!ok) break;
                ch.rows[i] = r;
                ch.cols[i] = c;
                in.read(reinterpret_cast<char*>(ch.values.data() + std::size_t(i) * dim),
                        static_cast<std::streamsize>(sizeof(double) * dim));
                ok = bool(in);
            }
            if (!ok) {
                j.needs_rewrite = true;
                break;
            }
            j.chunks[{name, sub}] = std::move(ch);
        } else {
            j.needs_rewrite = true;
            break;
        }
    }
    if (!j.chunks.empty() || !j.panels.empty())
        notes.push_back("note: resuming from journal (" + std::to_string(j.chunks.size()) +
                        " sub-images already extracted)");
    return j;
}

void rewrite_journal(const std::string& path, const Journal& j, std::uint64_t config,
                     std::uint64_t seed, int dim) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp);
        journal_header(out, config, seed, dim);
        for (const auto& [name, p] : j.panels) append_panel_record(out, p);
        for (const auto& [key, ch] : j.chunks) append_chunk_record(out, key.first, key.second, ch, dim);
        if (!out) throw InputError("short write to " + tmp);
    }
    fs::rename(tmp, path);
}

// ---- CSV stage tables ------------------------------------------------

std::map<std::string, int> panel_index(const std::vector<PanelInfo>& panels) {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < panels.size(); ++i) m[panels[i].name] = static_cast<int>(i);
    return m;
}

int parse_int(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trail");
        return v;
    } catch (const std::exception&) {
        throw InputError(path + ": bad integer field \"" + s + "\"");
    }
}

double parse_double(const std::string& s, const std::string& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw InputError(path + ": bad numeric field \"" + s + "\"");
    return v;
}

void require_columns(const std::string& got, const std::string& want, const std::string& path) {
    if (got != want)
        throw InputError(path + ": unexpected column header \"" + got + "\" (want \"" + want +
                         "\")");
}

// ---- stage JSON wrapper ----------------------------------------------

void write_stage_json(const std::string& path, const std::string& magic,
                      const StageHeader& header, nlohmann::json payload) {
    nlohmann::json doc;
    doc["magic"] = magic;
    doc["version"] = header.version;
    doc["config"] = hex64(header.config);
    doc["seed"] = header.seed;
    doc["upstream"] = hex64(header.upstream);
    doc["payload"] = std::move(payload);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw InputError("short write to " + path);
}

void require_stage_file(const std::string& path, const char* producer) {
    if (!fs::exists(path))
        throw PipelineError(path + " is missing; run the " + std::string(producer) +
                            " stage first");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

}  // namespace

StagePaths stage_paths(const std::string& out_dir) {
    StagePaths p;
    p.features = out_dir + "/features.bin";
    p.features_csv = out_dir + "/features.csv";
    p.journal = out_dir + "/features.journal";
    p.extract_log = out_dir + "/extract_log.txt";
    p.vocab = out_dir + "/vocab.json";
    p.labels = out_dir + "/labels.csv";
    p.model = out_dir + "/model.json";
    p.weights = out_dir + "/weights.csv";
    p.embedding = out_dir + "/embedding.csv";
    p.report_dir = out_dir + "/report";
    return p;
}

std::vector<double> extract_patch_features(const Grid& r, const Grid& g, const Grid& b,
                                           const RunConfig& config) {
    CoordPlanes coords = rgb_planes_to_coords(r, g, b, true);
    WaveletPyramid px = dtcwt_forward(coords.x, config.levels);
    WaveletPyramid py = dtcwt_forward(coords.y, config.levels);
    WaveletPyramid pz = dtcwt_forward(coords.z, config.levels);
    MagnitudePyramid mags = fuse_magnitudes(px, py, pz);

    std::array<HmtParams, 6> params;
    for (int sb = 0; sb < 6; ++sb) {
        QuadForest forest = build_forest(mags, sb);
        params[sb] = em_fit(forest, {}).params;
    }
    std::array<double, kFeatureDim> feats = assemble_features(params, config.log_variance);
    return std::vector<double>(feats.begin(), feats.end());
}

ExtractOutcome run_extract(const RunConfig& config, bool export_csv) {
    validate_config(config);
    if (config.images.empty()) throw InputError("no input images configured");
    fs::create_directories(config.out_dir);

    const StagePaths paths = stage_paths(config.out_dir);
    const std::uint64_t cfg = config_hash(config);

    ExtractOutcome outcome;
    outcome.features_path = paths.features;

    // stem set of the requested corpus, for the up-to-date check
    std::set<std::string> want;
    for (const auto& p : config.images) want.insert(stem_of(p));

    if (fs::exists(paths.features)) {
        try {
            FeatureFile existing = load_features(paths.features);
            std::set<std::string> have;
            for (const auto& p : existing.panels) have.insert(p.name);
            if (existing.config == cfg && existing.seed == config.seed &&
                existing.dim == kFeatureDim && have == want) {
                outcome.skipped = true;
                outcome.panels_ok = static_cast<int>(existing.panels.size());
                outcome.records = existing.keys.size();
                outcome.notes.push_back(
                    "note: feature file already matches this configuration (delete " +
                    paths.features + " to force re-extraction)");
                return outcome;
            }
        } catch (const InputError&) {
            // unreadable or stale; rebuild below
        }
    }

    Journal journal = read_journal(paths.journal, cfg, config.seed, kFeatureDim, outcome.notes);

    std::vector<PanelInfo> panels;
    std::map<std::string, int> seen;

    // drop journal state for panels whose geometry changed on disk
    auto check_journal_panel = [&](const PanelInfo& info) {
        auto it = journal.panels.find(info.name);
        if (it == journal.panels.end()) return false;
        const PanelInfo& old = it->second;
        if (old.width != info.width || old.height != info.height ||
            old.sub_rows != info.sub_rows || old.sub_cols != info.sub_cols) {
            for (auto c = journal.chunks.begin(); c != journal.chunks.end();) {
                if (c->first.first == info.name) c = journal.chunks.erase(c);
                else ++c;
            }
            journal.panels.erase(it);
            journal.needs_rewrite = true;
            outcome.notes.push_back("note: " + info.name +
                                    " changed size; discarding its journal entries");
            return false;
        }
        return true;
    };

    bool journal_open = false;
    std::ofstream out;
    auto ensure_journal = [&] {
        if (journal_open) return;
        if (journal.needs_rewrite || !fs::exists(paths.journal))
            rewrite_journal(paths.journal, journal, cfg, config.seed, kFeatureDim);
        out.open(paths.journal, std::ios::binary | std::ios::app);
        if (!out) throw InputError("cannot append to " + paths.journal);
        journal_open = true;
    };

    for (const std::string& path : config.images) {
        PanelImage img;
        try {
            img = load_panel(path);
        } catch (const InputError& e) {
            outcome.notes.push_back("error: " + std::string(e.what()));
            ++outcome.panels_failed;
            continue;
        }
        for (const auto& w : img.warnings) outcome.notes.push_back("warning: " + w);
        if (seen.count(img.id)) {
            outcome.notes.push_back("error: duplicate panel id \"" + img.id + "\" from " + path +
                                    "; skipped");
            ++outcome.panels_failed;
            continue;
        }

        TilePlan plan;
        try {
            plan = tile(img.width, img.height, config);
        } catch (const InputError& e) {
            outcome.notes.push_back("error: " + path + ": " + e.what());
            ++outcome.panels_failed;
            continue;
        }

        PanelInfo info;
        info.name = img.id;
        info.width = img.width;
        info.height = img.height;
        info.sub_rows = plan.sub_rows;
        info.sub_cols = plan.sub_cols;

        const bool in_journal = check_journal_panel(info);
        if (!in_journal) {
            ensure_journal();
            append_panel_record(out, info);
            journal.panels[info.name] = info;
        }

        const int per_sub = plan.patches_per_sub();
        for (int sub = 0; sub < plan.sub_count(); ++sub) {
            if (journal.chunks.count({info.name, sub})) continue;

            JournalChunk ch;
            ch.rows.resize(per_sub);
            ch.cols.resize(per_sub);
            ch.values.resize(std::size_t(per_sub) * kFeatureDim);

            const PatchRef* base = &plan.patches[std::size_t(sub) * per_sub];
            parallel_for(per_sub, config.jobs, [&](std::size_t i) {
                const PatchRef& ref = base[i];
                Grid pr(config.patch, config.patch), pg(config.patch, config.patch),
                    pb(config.patch, config.patch);
                for (int y = 0; y < config.patch; ++y) {
                    for (int x = 0; x < config.patch; ++x) {
                        pr(y, x) = img.r(ref.y0 + y, ref.x0 + x);
                        pg(y, x) = img.g(ref.y0 + y, ref.x0 + x);
                        pb(y, x) = img.b(ref.y0 + y, ref.x0 + x);
                    }
                }
                const std::vector<double> f = extract_patch_features(pr, pg, pb, config);
                ch.rows[i] = ref.index.patch_row;
                ch.cols[i] = ref.index.patch_col;
                std::copy(f.begin(), f.end(), ch.values.begin() + i * kFeatureDim);
            });

            ensure_journal();
            append_chunk_record(out, info.name, sub, ch, kFeatureDim);
            journal.chunks[{info.name, sub}] = std::move(ch);
        }

        seen[info.name] = static_cast<int>(panels.size());
        panels.push_back(info);
        ++outcome.panels_ok;
        outcome.notes.push_back("ok: " + path + " (" + std::to_string(plan.sub_count()) +
                                " sub-images, " +
                                std::to_string(plan.sub_count() * per_sub) + " patches)");
    }
    if (journal_open) out.close();

    if (panels.empty()) {
        std::ofstream log = open_out(paths.extract_log);
        for (const auto& n : outcome.notes) log << n << "\n";
        throw InputError("no readable input images");
    }

    // assemble the columnar file in canonical (panel, sub-image, patch) order
    FeatureFile file;
    file.dim = kFeatureDim;
    file.config = cfg;
    file.seed = config.seed;
    file.panels = panels;

    std::size_t total = 0;
    for (const auto& p : panels)
        total += std::size_t(p.sub_rows) * p.sub_cols * config.patch_grid() * config.patch_grid();
    file.keys.reserve(total);
    file.values = Matrix(static_cast<int>(total), kFeatureDim);

    int row = 0;
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const PanelInfo& p = panels[pi];
        const int subs = p.sub_rows * p.sub_cols;
        for (int sub = 0; sub < subs; ++sub) {
            auto it = journal.chunks.find({p.name, sub});
            if (it == journal.chunks.end())
                throw PipelineError("internal: missing extracted sub-image " + p.name + "/" +
                                    std::to_string(sub));
            const JournalChunk& ch = it->second;
            for (std::size_t i = 0; i < ch.rows.size(); ++i) {
                PatchKey key;
                key.panel = static_cast<int>(pi);
                key.sub_index = sub;
                key.patch_row = ch.rows[i];
                key.patch_col = ch.cols[i];
                file.keys.push_back(key);
                std::memcpy(file.values.row(row), ch.values.data() + i * kFeatureDim,
                            sizeof(double) * kFeatureDim);
                ++row;
            }
        }
    }
    outcome.records = file.keys.size();

    save_features(paths.features, file);
    fs::remove(paths.journal);
    if (export_csv) export_features_csv(paths.features_csv, file);

    outcome.notes.push_back("wrote " + std::to_string(outcome.records) + " records for " +
                            std::to_string(panels.size()) + " panels to " + paths.features);
    std::ofstream log = open_out(paths.extract_log);
    for (const auto& n : outcome.notes) log << n << "\n";
    return outcome;
}

void run_vocab(const RunConfig& config) {
    validate_config(config);
    const StagePaths paths = stage_paths(config.out_dir);
    const std::uint64_t cfg = config_hash(config);

    require_stage_file(paths.features, "extract");
    FeatureFile f = load_features(paths.features);
    if (f.config != cfg)
        throw PipelineError(paths.features + ": config hash " + hex64(f.config) +
                            " does not match the active configuration " + hex64(cfg) +
                            "; re-run extract");
    if (f.dim != kFeatureDim)
        throw PipelineError(paths.features + ": unexpected descriptor width; re-run extract");
    if (f.keys.size() < 2) throw InputError("need at least two patches to build a vocabulary");

    const Standardizer st = fit_standardizer(f.values);
    const Matrix standardized = st.apply(f.values);
    const std::uint64_t seed = config.effective_vocab_seed();
    VocabBuild build = build_vocab(standardized, st, config.vocab_depth, seed, config.jobs);

    const std::uint64_t upstream = hash_file(paths.features);
    StageHeader header{"tessella-vocab-stage", 1, cfg, seed, upstream};
    write_stage_json(paths.vocab, header.magic, header,
                     nlohmann::json::parse(vocab_to_json(build.tree)));

    std::ofstream out = open_out(paths.labels);
    StageHeader lh{"tessella-labels", 1, cfg, seed, upstream};
    write_stage_comments(out, lh, &f.panels);
    out << "panel,sub_index,patch_row,patch_col,label\n";
    for (std::size_t i = 0; i < f.keys.size(); ++i) {
        const PatchKey& k = f.keys[i];
        out << f.panels[k.panel].name << "," << k.sub_index << "," << k.patch_row << ","
            << k.patch_col << "," << build.labels[i] << "\n";
    }
    if (!out) throw InputError("short write to " + paths.labels);
}

LabelsTable load_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    LabelsTable t;
    t.header = read_stage_comments(in, &t.panels);
    const auto idx = panel_index(t.panels);

    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": missing column header");
    require_columns(line, "panel,sub_index,patch_row,patch_col,label", path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw InputError(path + ": expected 5 fields per row");
        auto it = idx.find(f[0]);
        if (it == idx.end()) throw InputError(path + ": row references unknown panel " + f[0]);
        PatchKey k;
        k.panel = it->second;
        k.sub_index = parse_int(f[1], path);
        k.patch_row = parse_int(f[2], path);
        k.patch_col = parse_int(f[3], path);
        t.keys.push_back(k);
        t.labels.push_back(parse_int(f[4], path));
    }
    return t;
}

void run_topics(const RunConfig& config) {
    validate_config(config);
    const StagePaths paths = stage_paths(config.out_dir);
    const std::uint64_t cfg = config_hash(config);

    require_stage_file(paths.labels, "vocab");
    LabelsTable lt = load_labels(paths.labels);
    check_stage_header(lt.header, "tessella-labels", 1, cfg, paths.labels);
    check_upstream(lt.header, paths.features, paths.labels);

    const int T = config.vocab_size();
    const int per_doc = config.patch_grid() * config.patch_grid();

    // group rows into per-sub-image documents; rows arrive in canonical order
    std::vector<BagOfWords> docs;
    std::vector<int> doc_panel, doc_sub;
    std::set<std::pair<int, int>> closed;
    std::vector<int> counts;
    int cur_panel = -1, cur_sub = -1, cur_total = 0;

    auto close_doc = [&] {
        if (cur_panel < 0) return;
        if (cur_total != per_doc)
            throw InputError(paths.labels + ": sub-image " + lt.panels[cur_panel].name + "/" +
                             std::to_string(cur_sub) + " has " + std::to_string(cur_total) +
                             " patches, expected " + std::to_string(per_doc));
        docs.push_back(make_bag(counts));
        doc_panel.push_back(cur_panel);
        doc_sub.push_back(cur_sub);
        closed.insert({cur_panel, cur_sub});
    };

    for (std::size_t i = 0; i < lt.keys.size(); ++i) {
        const PatchKey& k = lt.keys[i];
        const int label = lt.labels[i];
        if (label < 1 || label > T)
            throw InputError(paths.labels + ": label " + std::to_string(label) +
                             " outside 1.." + std::to_string(T));
        if (k.panel != cur_panel || k.sub_index != cur_sub) {
            close_doc();
            if (closed.count({k.panel, k.sub_index}))
                throw InputError(paths.labels + ": rows for one sub-image are not contiguous");
            cur_panel = k.panel;
            cur_sub = k.sub_index;
            cur_total = 0;
            counts.assign(T, 0);
        }
        ++counts[label - 1];
        ++cur_total;
    }
    close_doc();
    if (docs.empty()) throw InputError(paths.labels + ": no label rows");

    LdaConfig lc;
    lc.K = config.topics;
    lc.alpha = config.alpha;
    lc.beta = config.beta;
    lc.seed = config.effective_topics_seed();
    lc.jobs = config.jobs;
    const LdaFit fit = lda_fit(docs, lc);

    const std::uint64_t upstream = hash_file(paths.labels);
    StageHeader header{"tessella-topics-stage", 1, cfg, lc.seed, upstream};
    write_stage_json(paths.model, header.magic, header,
                     nlohmann::json::parse(lda_to_json(fit.model)));

    std::ofstream out = open_out(paths.weights);
    StageHeader wh{"tessella-weights", 1, cfg, lc.seed, upstream};
    write_stage_comments(out, wh, &lt.panels);
    out << "panel,sub_index";
    for (int k = 1; k <= config.topics; ++k) out << ",pi_" << k;
    out << "\n";
    for (std::size_t d = 0; d < docs.size(); ++d) {
        out << lt.panels[doc_panel[d]].name << "," << doc_sub[d];
        for (int k = 0; k < config.topics; ++k)
            out << "," << csv_double(fit.weights(static_cast<int>(d), k));
        out << "\n";
    }
    if (!out) throw InputError("short write to " + paths.weights);
}

WeightsTable load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    WeightsTable t;
    t.header = read_stage_comments(in, &t.panels);
    const auto idx = panel_index(t.panels);

    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": missing column header");
    const auto head = split_csv_line(line);
    if (head.size() < 3 || head[0] != "panel" || head[1] != "sub_index")
        throw InputError(path + ": unexpected column header");
    const int K = static_cast<int>(head.size()) - 2;
    for (int k = 0; k < K; ++k)
        if (head[2 + k] != "pi_" + std::to_string(k + 1))
            throw InputError(path + ": unexpected weight column \"" + head[2 + k] + "\"");

    std::vector<double> flat;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (static_cast<int>(f.size()) != 2 + K)
            throw InputError(path + ": expected " + std::to_string(2 + K) + " fields per row");
        auto it = idx.find(f[0]);
        if (it == idx.end()) throw InputError(path + ": row references unknown panel " + f[0]);
        t.doc_panel.push_back(it->second);
        t.doc_sub.push_back(parse_int(f[1], path));
        for (int k = 0; k < K; ++k) flat.push_back(parse_double(f[2 + k], path));
    }
    const int n = static_cast<int>(t.doc_panel.size());
    t.weights = Matrix(n, K);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k) t.weights(i, k) = flat[std::size_t(i) * K + k];
    return t;
}

void run_embed(const RunConfig& config) {
    validate_config(config);
    const StagePaths paths = stage_paths(config.out_dir);
    const std::uint64_t cfg = config_hash(config);

    require_stage_file(paths.weights, "topics");
    WeightsTable wt = load_weights(paths.weights);
    check_stage_header(wt.header, "tessella-weights", 1, cfg, paths.weights);
    check_upstream(wt.header, paths.labels, paths.weights);

    EmbeddingConfig ec;
    ec.perplexity = config.perplexity;
    ec.seed = config.effective_embed_seed();
    ec.jobs = config.jobs;
    const Embedding2D emb = tsne(wt.weights, ec);

    const std::uint64_t upstream = hash_file(paths.weights);
    std::ofstream out = open_out(paths.embedding);
    StageHeader eh{"tessella-embedding", 1, cfg, ec.seed, upstream};
    write_stage_comments(out, eh, &wt.panels);
    out << "# x-kl-initial " << csv_double(emb.initial_kl) << "\n";
    out << "# x-kl-final " << csv_double(emb.final_kl) << "\n";
    out << "panel,sub_index,x,y\n";
    for (std::size_t d = 0; d < emb.x.size(); ++d) {
        out << wt.panels[wt.doc_panel[d]].name << "," << wt.doc_sub[d] << ","
            << csv_double(emb.x[d]) << "," << csv_double(emb.y[d]) << "\n";
    }
    if (!out) throw InputError("short write to " + paths.embedding);
}

EmbeddingTable load_embedding(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    EmbeddingTable t;
    t.header = read_stage_comments(in, &t.panels);
    const auto idx = panel_index(t.panels);

    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": missing column header");
    require_columns(line, "panel,sub_index,x,y", path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw InputError(path + ": expected 4 fields per row");
        auto it = idx.find(f[0]);
        if (it == idx.end()) throw InputError(path + ": row references unknown panel " + f[0]);
        t.doc_panel.push_back(it->second);
        t.doc_sub.push_back(parse_int(f[1], path));
        t.x.push_back(parse_double(f[2], path));
        t.y.push_back(parse_double(f[3], path));
    }
    return t;
}

void run_report(const RunConfig& config) {
    validate_config(config);
    const StagePaths paths = stage_paths(config.out_dir);
    const std::uint64_t cfg = config_hash(config);

    require_stage_file(paths.weights, "topics");
    require_stage_file(paths.embedding, "embed");
    WeightsTable wt = load_weights(paths.weights);
    check_stage_header(wt.header, "tessella-weights", 1, cfg, paths.weights);
    EmbeddingTable et = load_embedding(paths.embedding);
    check_stage_header(et.header, "tessella-embedding", 1, cfg, paths.embedding);
    check_upstream(wt.header, paths.labels, paths.weights);
    check_upstream(et.header, paths.weights, paths.embedding);

    if (et.doc_panel != wt.doc_panel || et.doc_sub != wt.doc_sub)
        throw PipelineError(paths.embedding + " does not cover the same sub-images as " +
                            paths.weights + "; re-run embed");

    std::vector<int> patterns = config.patterns;
    if (patterns.empty())
        for (int k = 1; k <= wt.weights.cols(); ++k) patterns.push_back(k);
    for (int p : patterns)
        if (p < 1 || p > wt.weights.cols())
            throw ConfigError("pattern id " + std::to_string(p) + " outside 1.." +
                              std::to_string(wt.weights.cols()));

    StageHeader rh{"tessella-report", 1, cfg, config.seed, hash_file(paths.weights)};
    write_report(paths.report_dir, rh, wt.panels, wt.doc_panel, wt.doc_sub, wt.weights, et.x,
                 et.y, patterns);
}

void run_all(const RunConfig& config) {
    validate_config(config);
    if (config.stages.extract) run_extract(config);
    if (config.stages.vocab) run_vocab(config);
    if (config.stages.topics) run_topics(config);
    if (config.stages.embed) run_embed(config);
    if (config.stages.report) run_report(config);
}

}  // namespace tess

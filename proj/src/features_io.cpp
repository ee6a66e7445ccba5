#include "tessella/features_io.hpp"

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tessella/errors.hpp"
#include "tessella/hash.hpp"

namespace tess {

namespace {

constexpr const char* kMagic = "tessella-features";
constexpr int kVersion = 1;

void write_i32_column(std::ostream& out, const std::vector<PatchKey>& keys,
                      int PatchKey::*field) {
    std::vector<std::int32_t> col(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) col[i] = keys[i].*field;
    out.write(reinterpret_cast<const char*>(col.data()),
              static_cast<std::streamsize>(col.size() * sizeof(std::int32_t)));
}

std::vector<std::int32_t> read_i32_column(std::istream& in, std::size_t n,
                                          const std::string& path) {
    std::vector<std::int32_t> col(n);
    in.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(n * sizeof(std::int32_t)));
    if (!in) throw InputError(path + ": truncated feature payload");
    return col;
}

}  // namespace

void save_features(const std::string& path, const FeatureFile& f) {
    if (f.values.rows() != static_cast<int>(f.keys.size()) || f.values.cols() != f.dim)
        throw ShapeError("save_features: key/value table mismatch");

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp);

        out << kMagic << " " << kVersion << "\n";
        out << "config " << hex64(f.config) << "\n";
        out << "seed " << f.seed << "\n";
        out << "dim " << f.dim << "\n";
        out << "records " << f.keys.size() << "\n";
        out << "panels " << f.panels.size() << "\n";
        for (std::size_t i = 0; i < f.panels.size(); ++i) {
            const PanelInfo& p = f.panels[i];
            out << "panel " << i << " " << p.width << " " << p.height << " " << p.sub_rows
                << " " << p.sub_cols << " " << p.name << "\n";
        }
        out << "end-header\n";

        write_i32_column(out, f.keys, &PatchKey::panel);
        write_i32_column(out, f.keys, &PatchKey::sub_index);
        write_i32_column(out, f.keys, &PatchKey::patch_row);
        write_i32_column(out, f.keys, &PatchKey::patch_col);

        const std::size_t n = f.keys.size();
        std::vector<double> col(n);
        for (int d = 0; d < f.dim; ++d) {
            for (std::size_t i = 0; i < n; ++i) col[i] = f.values(static_cast<int>(i), d);
            out.write(reinterpret_cast<const char*>(col.data()),
                      static_cast<std::streamsize>(n * sizeof(double)));
        }
        if (!out) throw InputError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

FeatureFile load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);

    FeatureFile f;
    std::size_t records = 0, npanels = 0;
    bool have_end = false;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (first) {
            int version = 0;
            if (key != kMagic || !(ls >> version))
                throw InputError(path + ": not a feature file");
            if (version != kVersion)
                throw InputError(path + ": feature format version " + std::to_string(version) +
                                 ", this build reads " + std::to_string(kVersion));
            first = false;
            continue;
        }
        if (key == "end-header") {
            have_end = true;
            break;
        }
        if (key == "config") {
            std::string hex;
            if (!(ls >> hex) || hex.size() != 16 ||
                std::sscanf(hex.c_str(), "%16" SCNx64, &f.config) != 1)
                throw InputError(path + ": bad config field");
        } else if (key == "seed") {
            if (!(ls >> f.seed)) throw InputError(path + ": bad seed field");
        } else if (key == "dim") {
            if (!(ls >> f.dim) || f.dim <= 0) throw InputError(path + ": bad dim field");
        } else if (key == "records") {
            if (!(ls >> records)) throw InputError(path + ": bad records field");
        } else if (key == "panels") {
            if (!(ls >> npanels)) throw InputError(path + ": bad panels field");
        } else if (key == "panel") {
            PanelInfo p;
            std::size_t idx;
            if (!(ls >> idx >> p.width >> p.height >> p.sub_rows >> p.sub_cols))
                throw InputError(path + ": bad panel line");
            std::getline(ls, p.name);
            if (!p.name.empty() && p.name.front() == ' ') p.name.erase(0, 1);
            if (idx != f.panels.size() || p.name.empty())
                throw InputError(path + ": bad panel table");
            f.panels.push_back(p);
        } else {
            throw InputError(path + ": unknown header field \"" + key + "\"");
        }
    }
    if (first || !have_end) throw InputError(path + ": truncated feature header");
    if (f.panels.size() != npanels) throw InputError(path + ": panel table count mismatch");
    if (f.dim <= 0) throw InputError(path + ": missing dim field");

    auto panel_col = read_i32_column(in, records, path);
    auto sub_col = read_i32_column(in, records, path);
    auto row_col = read_i32_column(in, records, path);
    auto col_col = read_i32_column(in, records, path);
    f.keys.resize(records);
    for (std::size_t i = 0; i < records; ++i) {
        f.keys[i].panel = panel_col[i];
        f.keys[i].sub_index = sub_col[i];
        f.keys[i].patch_row = row_col[i];
        f.keys[i].patch_col = col_col[i];
        if (panel_col[i] < 0 || panel_col[i] >= static_cast<int>(npanels))
            throw InputError(path + ": record references a panel outside the table");
    }

    f.values = Matrix(static_cast<int>(records), f.dim);
    std::vector<double> col(records);
    for (int d = 0; d < f.dim; ++d) {
        in.read(reinterpret_cast<char*>(col.data()),
                static_cast<std::streamsize>(records * sizeof(double)));
        if (!in) throw InputError(path + ": truncated feature payload");
        for (std::size_t i = 0; i < records; ++i) f.values(static_cast<int>(i), d) = col[i];
    }
    return f;
}

void export_features_csv(const std::string& path, const FeatureFile& f) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    StageHeader h{kMagic, kVersion, f.config, f.seed, 0};
    write_stage_comments(out, h, &f.panels);
    out << "panel,sub_index,patch_row,patch_col";
    for (int d = 1; d <= f.dim; ++d) out << ",f" << d;
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < f.keys.size(); ++i) {
        const PatchKey& k = f.keys[i];
        out << f.panels[k.panel].name << "," << k.sub_index << "," << k.patch_row << ","
            << k.patch_col;
        for (int d = 0; d < f.dim; ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.values(static_cast<int>(i), d));
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw InputError("short write to " + path);
}

}  // namespace tess

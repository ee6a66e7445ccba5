#include "tessella/stage_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>

#include "tessella/errors.hpp"
#include "tessella/hash.hpp"

namespace tess {

void write_stage_comments(std::ostream& out, const StageHeader& h,
                          const std::vector<PanelInfo>* panels) {
    out << "# " << h.magic << " " << h.version << "\n";
    out << "# config " << hex64(h.config) << "\n";
    out << "# seed " << h.seed << "\n";
    out << "# upstream " << hex64(h.upstream) << "\n";
    if (panels) {
        for (std::size_t i = 0; i < panels->size(); ++i) {
            const PanelInfo& p = (*panels)[i];
            out << "# panel " << i << " " << p.width << " " << p.height << " " << p.sub_rows
                << " " << p.sub_cols << " " << p.name << "\n";
        }
    }
}

StageHeader read_stage_comments(std::istream& in, std::vector<PanelInfo>* panels) {
    StageHeader h;
    bool first = true;
    while (in.peek() == '#') {
        std::string line;
        std::getline(in, line);
        std::istringstream ls(line);
        std::string hashmark, key;
        ls >> hashmark >> key;
        if (first) {
            h.magic = key;
            if (!(ls >> h.version)) throw InputError("stage header: missing version");
            first = false;
            continue;
        }
        if (key == "config" || key == "upstream") {
            std::string hex;
            if (!(ls >> hex) || hex.size() != 16)
                throw InputError("stage header: bad " + key + " field");
            std::uint64_t v = 0;
            if (std::sscanf(hex.c_str(), "%16" SCNx64, &v) != 1)
                throw InputError("stage header: bad " + key + " field");
            (key == "config" ? h.config : h.upstream) = v;
        } else if (key == "seed") {
            if (!(ls >> h.seed)) throw InputError("stage header: bad seed field");
        } else if (key == "panel") {
            PanelInfo p;
            std::size_t idx;
            if (!(ls >> idx >> p.width >> p.height >> p.sub_rows >> p.sub_cols))
                throw InputError("stage header: bad panel line");
            std::getline(ls, p.name);
            if (!p.name.empty() && p.name.front() == ' ') p.name.erase(0, 1);
            if (p.name.empty()) throw InputError("stage header: panel without a name");
            if (panels) {
                if (idx != panels->size()) throw InputError("stage header: panel index gap");
                panels->push_back(p);
            }
        } else if (key.rfind("x-", 0) == 0) {
            // extension comments (diagnostics), not part of the contract
        } else {
            throw InputError("stage header: unknown field \"" + key + "\"");
        }
    }
    if (first) throw InputError("stage header: missing magic line");
    return h;
}

void check_stage_header(const StageHeader& h, const std::string& magic, int version,
                        std::uint64_t config, const std::string& path) {
    if (h.magic != magic)
        throw PipelineError(path + ": expected a " + magic + " file, found " + h.magic);
    if (h.version != version)
        throw PipelineError(path + ": format version " + std::to_string(h.version) +
                            ", this build reads " + std::to_string(version) +
                            "; re-run the producing stage");
    if (h.config != config)
        throw PipelineError(path + ": config hash " + hex64(h.config) +
                            " does not match the active configuration " + hex64(config) +
                            "; re-run the upstream stages");
}

void check_upstream(const StageHeader& h, const std::string& upstream_path,
                    const std::string& path) {
    if (h.upstream == 0) return;
    if (!std::filesystem::exists(upstream_path)) return;
    const std::uint64_t actual = hash_file(upstream_path);
    if (actual != h.upstream)
        throw PipelineError(path + ": recorded upstream hash " + hex64(h.upstream) +
                            " does not match " + upstream_path + " (" + hex64(actual) +
                            "); re-run the upstream stages");
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace tess

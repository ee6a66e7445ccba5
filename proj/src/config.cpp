#include "tessella/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tessella/errors.hpp"
#include "tessella/hash.hpp"

#include "json.hpp"

namespace tess {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) bad("unknown key \"" + it.key() + "\" in " + where);
}

int get_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
    return v.get<int>();
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) bad(std::string(key) + " must be a number");
    return v.get<double>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) bad(std::string(key) + " must be a boolean");
    return v.get<bool>();
}

std::uint64_t get_seed(const json& v, const char* key) {
    if (!v.is_number_unsigned() && !v.is_number_integer())
        bad(std::string(key) + " must be a non-negative integer");
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
        bad(std::string(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("parse error: ") + e.what());
    }
    if (!j.is_object()) bad("top level must be an object");

    reject_unknown(j,
                   {"patch", "stride", "subimage", "levels", "vocab_depth", "topics", "alpha",
                    "beta", "perplexity", "log_variance", "seed", "seeds", "stages", "images",
                    "out_dir", "jobs", "patterns"},
                   "top level");

    RunConfig c;
    c.patch = get_int(j, "patch", c.patch);
    c.stride = get_int(j, "stride", c.stride);
    c.subimage = get_int(j, "subimage", c.subimage);
    c.levels = get_int(j, "levels", c.levels);
    c.vocab_depth = get_int(j, "vocab_depth", c.vocab_depth);
    c.topics = get_int(j, "topics", c.topics);
    c.alpha = get_num(j, "alpha", c.alpha);
    c.beta = get_num(j, "beta", c.beta);
    c.perplexity = get_num(j, "perplexity", c.perplexity);
    c.log_variance = get_bool(j, "log_variance", c.log_variance);
    c.jobs = get_int(j, "jobs", c.jobs);

    if (j.contains("seed")) c.seed = get_seed(j.at("seed"), "seed");

    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        if (!s.is_object()) bad("seeds must be an object");
        reject_unknown(s, {"vocab", "topics", "embed"}, "seeds");
        if (s.contains("vocab")) c.vocab_seed = get_seed(s.at("vocab"), "seeds.vocab");
        if (s.contains("topics")) c.topics_seed = get_seed(s.at("topics"), "seeds.topics");
        if (s.contains("embed")) c.embed_seed = get_seed(s.at("embed"), "seeds.embed");
    }

    if (j.contains("stages")) {
        const auto& s = j.at("stages");
        if (!s.is_object()) bad("stages must be an object");
        reject_unknown(s, {"extract", "vocab", "topics", "embed", "report"}, "stages");
        c.stages.extract = get_bool(s, "extract", true);
        c.stages.vocab = get_bool(s, "vocab", true);
        c.stages.topics = get_bool(s, "topics", true);
        c.stages.embed = get_bool(s, "embed", true);
        c.stages.report = get_bool(s, "report", true);
    }

    if (j.contains("images")) {
        const auto& a = j.at("images");
        if (!a.is_array()) bad("images must be an array of paths");
        for (const auto& v : a) {
            if (!v.is_string()) bad("images entries must be strings");
            c.images.push_back(v.get<std::string>());
        }
    }

    if (j.contains("out_dir")) {
        const auto& v = j.at("out_dir");
        if (!v.is_string()) bad("out_dir must be a string");
        c.out_dir = v.get<std::string>();
    }

    if (j.contains("patterns")) {
        const auto& a = j.at("patterns");
        if (!a.is_array()) bad("patterns must be an array of pattern ids");
        for (const auto& v : a) {
            if (!v.is_number_integer()) bad("patterns entries must be integers");
            c.patterns.push_back(v.get<int>());
        }
    }

    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const RunConfig& c) {
    json j;
    j["patch"] = c.patch;
    j["stride"] = c.stride;
    j["subimage"] = c.subimage;
    j["levels"] = c.levels;
    j["vocab_depth"] = c.vocab_depth;
    j["topics"] = c.topics;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["perplexity"] = c.perplexity;
    j["log_variance"] = c.log_variance;
    j["seed"] = c.seed;
    json seeds = json::object();
    if (c.vocab_seed) seeds["vocab"] = *c.vocab_seed;
    if (c.topics_seed) seeds["topics"] = *c.topics_seed;
    if (c.embed_seed) seeds["embed"] = *c.embed_seed;
    if (!seeds.empty()) j["seeds"] = seeds;
    j["stages"] = {{"extract", c.stages.extract},
                   {"vocab", c.stages.vocab},
                   {"topics", c.stages.topics},
                   {"embed", c.stages.embed},
                   {"report", c.stages.report}};
    j["images"] = c.images;
    j["out_dir"] = c.out_dir;
    j["jobs"] = c.jobs;
    if (!c.patterns.empty()) j["patterns"] = c.patterns;
    return j.dump(2) + "\n";
}

void validate_config(const RunConfig& c) {
    if (c.patch <= 0 || c.stride <= 0 || c.subimage <= 0) bad("tile sizes must be positive");
    if (c.levels != 6)
        bad("levels must be 6: the 120-entry descriptor packs exactly six scales per subband");
    if (c.patch != (1 << c.levels))
        bad("patch size must equal 2^levels so the coarsest subband is a single "
            "coefficient and every magnitude tree is a complete quadtree");
    if (c.stride > c.patch) bad("stride must not exceed patch size");
    if (c.subimage < c.patch) bad("sub-image smaller than patch");
    if ((c.subimage - c.patch) % c.stride != 0)
        bad("sub-image size incompatible with the patch grid: (subimage - patch) must be a "
            "multiple of stride");
    if (c.vocab_depth < 1 || c.vocab_depth > 24) bad("vocab_depth must be in 1..24");
    if (c.topics < 1) bad("topics must be at least 1");
    if (!(c.alpha > 0.0)) bad("alpha must be positive");
    if (!(c.beta > 0.0)) bad("beta must be positive");
    if (!(c.perplexity > 0.0)) bad("perplexity must be positive");
    if (c.jobs < 0) bad("jobs must be non-negative (0 = all cores)");
    for (int p : c.patterns)
        if (p < 1 || p > c.topics) bad("pattern id " + std::to_string(p) + " outside 1..K");
}

std::uint64_t config_hash(const RunConfig& c) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "patch=%d;stride=%d;subimage=%d;levels=%d;vocab_depth=%d;topics=%d;"
                  "alpha=%.17g;beta=%.17g;perplexity=%.17g;log_variance=%d;"
                  "seed=%" PRIu64 ";vocab_seed=%" PRIu64 ";topics_seed=%" PRIu64
                  ";embed_seed=%" PRIu64,
                  c.patch, c.stride, c.subimage, c.levels, c.vocab_depth, c.topics, c.alpha,
                  c.beta, c.perplexity, c.log_variance ? 1 : 0, c.seed, c.effective_vocab_seed(),
                  c.effective_topics_seed(), c.effective_embed_seed());
    return fnv64(buf);
}

}  // namespace tess

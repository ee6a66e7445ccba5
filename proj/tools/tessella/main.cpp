#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tessella/config.hpp"
#include "tessella/errors.hpp"
#include "tessella/pipeline.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int jobs = 0;
    std::vector<int> patterns;
    std::vector<std::string> images;
    bool export_csv = false;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_dir_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
    CLI::Option* patterns_opt = nullptr;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_images, bool with_patterns) {
    cmd->add_option("-c,--config", o.config_path, "JSON run description");
    o.seed_opt = cmd->add_option("--seed", o.seed,
                                 "master seed override; per-stage seed pins from the config "
                                 "file are cleared so every stage re-derives");
    o.out_dir_opt = cmd->add_option("--out-dir", o.out_dir, "output directory override");
    o.jobs_opt = cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    if (with_patterns)
        o.patterns_opt = cmd->add_option("--patterns", o.patterns,
                                         "1-based pattern subset for the heatmaps, e.g. 6,8")
                             ->delimiter(',');
    if (with_images)
        cmd->add_option("images", o.images, "input panels (override the config image list)");
}

tess::RunConfig resolve(const Overrides& o) {
    tess::RunConfig cfg =
        o.config_path.empty() ? tess::RunConfig{} : tess::load_config(o.config_path);
    if (o.seed_opt && o.seed_opt->count()) {
        cfg.seed = o.seed;
        cfg.vocab_seed.reset();
        cfg.topics_seed.reset();
        cfg.embed_seed.reset();
    }
    if (o.out_dir_opt && o.out_dir_opt->count()) cfg.out_dir = o.out_dir;
    if (o.jobs_opt && o.jobs_opt->count()) cfg.jobs = o.jobs;
    if (o.patterns_opt && o.patterns_opt->count()) cfg.patterns = o.patterns;
    if (!o.images.empty()) cfg.images = o.images;
    tess::validate_config(cfg);
    return cfg;
}

void print_notes(const tess::ExtractOutcome& out) {
    for (const auto& n : out.notes) std::printf("%s\n", n.c_str());
    std::printf("extract: %d panels ok, %d failed, %zu records%s\n", out.panels_ok,
                out.panels_failed, out.records, out.skipped ? " (up to date)" : "");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"painting stylometry pipeline: wavelet-tree patch descriptors, "
                 "bisecting-k-means keywords, topic patterns, 2-D embedding"};
    app.require_subcommand(1);

    Overrides o_extract, o_vocab, o_topics, o_embed, o_report, o_all;

    CLI::App* c_extract = app.add_subcommand("extract", "images -> patch descriptor file");
    add_common(c_extract, o_extract, true, false);
    c_extract->add_flag("--export-csv", o_extract.export_csv,
                        "also write features.csv next to the binary table");

    CLI::App* c_vocab =
        app.add_subcommand("vocab", "descriptors -> keyword tree + patch labels");
    add_common(c_vocab, o_vocab, false, false);

    CLI::App* c_topics =
        app.add_subcommand("topics", "labels -> pattern model + sub-image weights");
    add_common(c_topics, o_topics, false, false);

    CLI::App* c_embed = app.add_subcommand("embed", "weights -> 2-D embedding");
    add_common(c_embed, o_embed, false, false);

    CLI::App* c_report = app.add_subcommand("report", "weights + embedding -> SVG/CSV bundle");
    add_common(c_report, o_report, false, true);

    CLI::App* c_all = app.add_subcommand("run-all", "all stages in order");
    add_common(c_all, o_all, true, true);
    c_all->add_flag("--export-csv", o_all.export_csv,
                    "also write features.csv next to the binary table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;  // usage problems are configuration errors
    }

    try {
        if (c_extract->parsed()) {
            print_notes(tess::run_extract(resolve(o_extract), o_extract.export_csv));
        } else if (c_vocab->parsed()) {
            const tess::RunConfig cfg = resolve(o_vocab);
            tess::run_vocab(cfg);
            const tess::StagePaths p = tess::stage_paths(cfg.out_dir);
            std::printf("vocab: wrote %s and %s\n", p.vocab.c_str(), p.labels.c_str());
        } else if (c_topics->parsed()) {
            const tess::RunConfig cfg = resolve(o_topics);
            tess::run_topics(cfg);
            const tess::StagePaths p = tess::stage_paths(cfg.out_dir);
            std::printf("topics: wrote %s and %s\n", p.model.c_str(), p.weights.c_str());
        } else if (c_embed->parsed()) {
            const tess::RunConfig cfg = resolve(o_embed);
            tess::run_embed(cfg);
            std::printf("embed: wrote %s\n", tess::stage_paths(cfg.out_dir).embedding.c_str());
        } else if (c_report->parsed()) {
            const tess::RunConfig cfg = resolve(o_report);
            tess::run_report(cfg);
            std::printf("report: bundle under %s\n",
                        tess::stage_paths(cfg.out_dir).report_dir.c_str());
        } else if (c_all->parsed()) {
            const tess::RunConfig cfg = resolve(o_all);
            if (cfg.stages.extract)
                print_notes(tess::run_extract(cfg, o_all.export_csv));
            if (cfg.stages.vocab) {
                tess::run_vocab(cfg);
                std::printf("vocab: done\n");
            }
            if (cfg.stages.topics) {
                tess::run_topics(cfg);
                std::printf("topics: done\n");
            }
            if (cfg.stages.embed) {
                tess::run_embed(cfg);
                std::printf("embed: done\n");
            }
            if (cfg.stages.report) {
                tess::run_report(cfg);
                std::printf("report: bundle under %s\n",
                            tess::stage_paths(cfg.out_dir).report_dir.c_str());
            }
        }
    } catch (const tess::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const tess::PipelineError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const tess::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}

// vframe command-line front end: runs the pipeline stages against a JSON config.

#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>
#include <vframe/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_item_failures = 1;
constexpr int exit_config = 2;

void report(const vframe::pipeline::RunSummary& s)
{
    for (const auto& path : s.outputs) {
        std::cout << path.string() << '\n';
    }
    if (s.failures > 0) {
        vframe::log().warn("{} item(s) failed; see the errors above", s.failures);
    }
}

} // namespace

int main(int argc, char** argv)
{
    using namespace vframe;
    using namespace vframe::pipeline;

    CLI::App app{"Colour, brightness and transcript features of video corpora, with group comparisons and "
                 "classifier evaluation."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
    app.add_option("--config", config_path, "JSON pipeline config")->required();
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--workers", workers, "Worker threads (0 = all cores)");
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_flag("-v,--verbose", verbose, "Log per-video progress");

    auto* extract = app.add_subcommand("extract", "Decode videos into numbered frame images");
    auto* features = app.add_subcommand("features", "Write the per-video feature table");

    std::string group_a = "conspiracy", group_b = "debunking";
    std::optional<std::string> compare_segment;
    auto* compare = app.add_subcommand("compare", "Welch tests with Benjamini-Hochberg control between two labels");
    compare->add_option("--a", group_a, "First group label")->capture_default_str();
    compare->add_option("--b", group_b, "Second group label")->capture_default_str();
    compare->add_option("--segment", compare_segment, "Segment (default: every configured segment)");

    std::string model = "rf", feature_sets = "visual", segment_name = "all";
    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation of one model");
    auto* importance = app.add_subcommand("importance", "Permutation importance of one model");
    for (auto* sub : {cv, importance}) {
        sub->add_option("--model", model, "Model name from the config")->capture_default_str();
        sub->add_option("--features", feature_sets, "Feature sets joined with '+': visual, emotions, wordcount, "
                                                    "embedding")
            ->capture_default_str();
        sub->add_option("--segment", segment_name, "Segment providing the visual features")->capture_default_str();
    }

    std::string feature;
    std::size_t k = 5;
    auto* plot = app.add_subcommand("plot-data", "Per-group density histogram of one feature column");
    plot->add_option("--feature", feature, "Feature column, e.g. median_saturation")->required();
    plot->add_option("--segment", segment_name, "Segment")->capture_default_str();
    plot->add_option("--a", group_a, "First group label")->capture_default_str();
    plot->add_option("--b", group_b, "Second group label")->capture_default_str();

    auto* extremes = app.add_subcommand("extremes", "Lowest and highest videos for one feature column");
    extremes->add_option("--feature", feature, "Feature column")->required();
    extremes->add_option("--segment", segment_name, "Segment")->capture_default_str();
    extremes->add_option("-k", k, "Videos per end")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    if (verbose) {
        log().set_level(spdlog::level::info);
    }

    try {
        PipelineConfig config = load_config(config_path);
        if (out_dir) {
            config.out_dir = *out_dir;
        }
        if (workers) {
            config.workers = *workers;
        }
        if (seed) {
            config.seed = *seed;
        }

        RunSummary summary;
        if (*extract) {
            summary = cmd_extract(config);
        } else if (*features) {
            summary = cmd_features(config);
        } else if (*compare) {
            if (compare_segment) {
                summary = cmd_compare(config, group_a, group_b, Segment::parse(*compare_segment));
            } else {
                for (const auto& seg : config.segments) {
                    const auto s = cmd_compare(config, group_a, group_b, seg);
                    summary.outputs.insert(summary.outputs.end(), s.outputs.begin(), s.outputs.end());
                }
            }
        } else if (*cv) {
            summary = cmd_cv(config, model, feature_sets, Segment::parse(segment_name));
        } else if (*importance) {
            summary = cmd_importance(config, model, feature_sets, Segment::parse(segment_name));
        } else if (*plot) {
            summary = cmd_plotdata(config, feature, Segment::parse(segment_name), group_a, group_b);
        } else if (*extremes) {
            summary = cmd_extremes(config, feature, Segment::parse(segment_name), k);
        }
        report(summary);
        return summary.exit_code() == 0 ? exit_ok : exit_item_failures;
    } catch (const ConfigError& e) {
        log().error("configuration error: {}", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        log().error("{}", e.what());
        return exit_item_failures;
    }
}

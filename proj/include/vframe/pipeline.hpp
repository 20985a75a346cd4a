#pragma once

#include <vframe/colorfeat.hpp>
#include <vframe/ingest.hpp>
#include <vframe/learn.hpp>
#include <vframe/textfeat.hpp>

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vframe::pipeline {

struct TextConfig {
    /// NRC-style lexicon; emotion columns are omitted when unset.
    std::optional<fs::path> lexicon;
    /// Defaults to the stop-word list shipped in data/.
    std::optional<fs::path> stopwords;
    /// Keyword list for chunking; when set together with `chunked`, only the
    /// windows around keyword occurrences are used.
    std::optional<fs::path> keywords;
    bool chunked = false;
    std::size_t chunk_before = 20;
    std::size_t chunk_after = 20;
    ProfileNormalization normalization = ProfileNormalization::Tokens;
    bool embeddings = true;
    PvdmParams pvdm;
    std::size_t vocab_size = 10000;
    bool word_counts = false; ///< occurrence counts instead of presence
};

struct PipelineConfig {
    fs::path manifest;
    std::vector<Segment> segments{Segment::all_frames()};
    double frame_rate = 1.0;
    std::string decoder_command{default_decoder_command};
    FeatureOptions color;
    TextConfig text;
    /// Accept manifest records without a video or frame directory.
    bool allow_text_only = false;

    std::map<std::string, learn::ModelSpec> models;
    std::string positive_label = "conspiracy";
    std::string negative_label = "debunking";
    int folds = 10;
    int importance_repeats = 5;
    learn::ImportanceMetric importance_metric = learn::ImportanceMetric::Accuracy;
    double fdr_q = 0.05;
    /// Columns tested by `compare`; empty means the 31 visual aggregates.
    std::vector<std::string> compare_columns;

    std::optional<std::uint64_t> seed;
    fs::path out_dir = "out";
    unsigned workers = 1;
    std::chrono::seconds fetch_timeout{30};

    /// Seed or ConfigError naming the command that needs it.
    std::uint64_t require_seed(std::string_view command) const;
    const learn::ModelSpec& model(const std::string& name) const;

    fs::path features_csv() const { return out_dir / "features.csv"; }
    fs::path frames_root() const { return out_dir / "frames"; }
    fs::path thumbnails_root() const { return out_dir / "thumbnails"; }
};

/// Defaults plus the built-in "rf" and "mlp" model specs.
PipelineConfig default_config();

/// Parses a JSON config. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(std::string_view text, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

// ---------------------------------------------------------------------------
// Per-video feature table

/// The per-video CSV held in memory: one row per (video, segment), NaN for
/// empty cells.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> segments;
    std::vector<std::size_t> n_frames;
    std::vector<std::string> columns; ///< value columns, after id/segment/n_frames
    Eigen::MatrixXd values;

    std::optional<std::size_t> column(std::string_view name) const;
    /// Row indices whose segment matches, in file order.
    std::vector<std::size_t> rows_for(const Segment& segment) const;
};

FeatureTable read_feature_table(const fs::path& path);
void write_feature_table(const fs::path& path, const FeatureTable& table);

/// Names accepted by feature-set expressions ("visual", "emotions",
/// "wordcount", "embedding"), combined with '+'.
std::vector<std::string> feature_set_names();

/// Splits "visual+emotions" into known names; ConfigError lists valid names.
std::vector<std::string> parse_feature_sets(std::string_view expression);

// ---------------------------------------------------------------------------
// Commands

struct RunSummary {
    std::size_t processed = 0;
    std::size_t skipped = 0;
    std::size_t failures = 0;
    std::vector<fs::path> outputs;

    int exit_code() const noexcept { return failures > 0 ? 1 : 0; }
};

/// Runs the decoder for every record with a video and no frame directory, and
/// downloads remote thumbnails. Populated outputs are skipped.
RunSummary cmd_extract(const PipelineConfig& config);

/// Writes features.csv: visual aggregates per configured segment plus
/// emotion and embedding columns per video.
RunSummary cmd_features(const PipelineConfig& config);

/// Welch tests with BH control between two labels; writes compare_<segment>.csv.
RunSummary cmd_compare(const PipelineConfig& config, const std::string& group_a, const std::string& group_b,
                       const Segment& segment);

/// Cross-validates one model on one feature-set expression and upserts the row
/// into cv.csv.
RunSummary cmd_cv(const PipelineConfig& config, const std::string& model, const std::string& features,
                  const Segment& segment);

/// Permutation importance of a model trained on all labeled rows.
RunSummary cmd_importance(const PipelineConfig& config, const std::string& model, const std::string& features,
                          const Segment& segment);

/// Per-group histogram densities with Freedman-Diaconis bins.
RunSummary cmd_plotdata(const PipelineConfig& config, const std::string& feature, const Segment& segment,
                        const std::string& group_a, const std::string& group_b);

/// The k lowest and k highest videos for one feature column.
RunSummary cmd_extremes(const PipelineConfig& config, const std::string& feature, const Segment& segment,
                        std::size_t k);

/// Bin width 2 * IQR * n^(-1/3) over `values`, falling back to Sturges' rule
/// when the IQR is zero. Returns 0 for a sample without spread.
double freedman_diaconis_width(std::vector<double> values);

} // namespace vframe::pipeline

#include <vframe/pipeline.hpp>

#include <vframe/core/csv.hpp>
#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>
#include <vframe/core/parallel.hpp>
#include <vframe/core/random.hpp>
#include <vframe/stats.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#ifndef VFRAME_DATA_DIR
#define VFRAME_DATA_DIR "data"
#endif

namespace vframe::pipeline {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::vector<VideoRecord> load_records(const PipelineConfig& config)
{
    if (!fs::is_regular_file(config.manifest)) {
        throw ConfigError("manifest " + config.manifest.string() + " not found");
    }
    ManifestOptions options;
    options.require_visual_source = !config.allow_text_only;
    return load_manifest(config.manifest, options);
}

bool is_url(std::string_view s)
{
    return s.starts_with("http://") || s.starts_with("https://");
}

std::optional<fs::path> frames_dir_for(const VideoRecord& rec, const PipelineConfig& config)
{
    if (rec.frames_dir) {
        return rec.frames_dir;
    }
    if (rec.video_path) {
        return config.frames_root() / rec.id;
    }
    return std::nullopt;
}

std::optional<fs::path> thumbnail_path_for(const VideoRecord& rec, const PipelineConfig& config)
{
    if (!rec.thumbnail) {
        return std::nullopt;
    }
    if (is_url(*rec.thumbnail)) {
        return config.thumbnails_root() / (rec.id + ".thumb");
    }
    return fs::path(*rec.thumbnail);
}

bool wants_thumbnails(const PipelineConfig& config)
{
    return std::any_of(config.segments.begin(), config.segments.end(),
                       [](const Segment& s) { return s.kind() == Segment::Kind::Thumbnail; });
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Label require_label(std::string_view text, const std::vector<VideoRecord>& records)
{
    if (auto label = parse_label(text)) {
        return *label;
    }
    std::vector<std::string> present;
    for (const auto& rec : records) {
        const std::string name(to_string(rec.label));
        if (std::find(present.begin(), present.end(), name) == present.end()) {
            present.push_back(name);
        }
    }
    std::string list;
    for (const auto& p : present) {
        list += (list.empty() ? "" : ", ") + p;
    }
    throw ConfigError("unknown label '" + std::string(text) + "' (labels in manifest: " + list + ")");
}

std::unordered_map<std::string, const VideoRecord*> index_records(const std::vector<VideoRecord>& records)
{
    std::unordered_map<std::string, const VideoRecord*> index;
    for (const auto& rec : records) {
        index.emplace(rec.id, &rec);
    }
    return index;
}

std::string file_safe(std::string s)
{
    for (char& c : s) {
        if (c == '+' || c == '/' || c == '\\' || c == ' ') {
            c = '-';
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Transcripts

struct TextResources {
    TermSet stopwords;
    std::optional<TermSet> keywords;
};

TextResources load_text_resources(const PipelineConfig& config)
{
    TextResources res;
    const fs::path stop = config.text.stopwords.value_or(fs::path(VFRAME_DATA_DIR) / "stopwords_en.txt");
    if (!fs::exists(stop)) {
        throw ConfigError("stop-word list " + stop.string() + " not found (set text.stopwords)");
    }
    res.stopwords = load_term_list(stop);
    if (config.text.chunked) {
        if (!fs::exists(*config.text.keywords)) {
            throw ConfigError("keyword list " + config.text.keywords->string() + " not found");
        }
        res.keywords = load_term_list(*config.text.keywords);
    }
    return res;
}

/// Tokens used for every textual feature: the whole transcript, or the
/// concatenated keyword windows when chunking is enabled.
std::vector<std::string> transcript_tokens(const fs::path& path, const TextResources& res, const TextConfig& text)
{
    if (!fs::exists(path)) {
        throw DataError("transcript " + path.string() + " not found");
    }
    auto tokens = tokenize(read_text(path), res.stopwords);
    if (!res.keywords) {
        return tokens;
    }
    std::vector<std::string> joined;
    for (auto& window : chunk_transcript(tokens, *res.keywords, text.chunk_before, text.chunk_after)) {
        joined.insert(joined.end(), std::make_move_iterator(window.begin()), std::make_move_iterator(window.end()));
    }
    return joined;
}

// ---------------------------------------------------------------------------
// Visual features of one video

struct VisualResult {
    /// One entry per configured segment; nullopt leaves the cells empty.
    std::vector<std::optional<VideoFeatures>> segments;
    bool failed = false;
};

VisualResult visual_features(const VideoRecord& rec, const PipelineConfig& config)
{
    VisualResult result;
    result.segments.resize(config.segments.size());

    const bool needs_frames = std::any_of(config.segments.begin(), config.segments.end(),
                                          [](const Segment& s) { return s.kind() != Segment::Kind::Thumbnail; });
    std::vector<FrameFeatures> frames;
    std::vector<double> timestamps;
    if (needs_frames) {
        if (const auto dir = frames_dir_for(rec, config)) {
            try {
                const auto files = list_frame_files(*dir);
                if (files.empty()) {
                    throw DataError("no frame files in " + dir->string()
                                    + (rec.frames_dir ? "" : " (run `extract` first)"));
                }
                frames.reserve(files.size());
                for (std::size_t i = 0; i < files.size(); ++i) {
                    frames.push_back(frame_features(decode_image(files[i]), config.color));
                    timestamps.push_back(static_cast<double>(i) / config.frame_rate);
                }
            } catch (const Error& e) {
                log().error("[{}] {}; frame-based cells left empty", rec.id, e.what());
                frames.clear();
                result.failed = true;
            }
        } else {
            log().warn("[{}] no video or frame directory; frame-based cells left empty", rec.id);
        }
    }

    for (std::size_t s = 0; s < config.segments.size(); ++s) {
        const Segment& seg = config.segments[s];
        if (seg.kind() == Segment::Kind::Thumbnail) {
            const auto path = thumbnail_path_for(rec, config);
            if (!path) {
                log().warn("[{}] no thumbnail; thumbnail cells left empty", rec.id);
                continue;
            }
            try {
                const FrameFeatures f = frame_features(decode_image(*path), config.color);
                result.segments[s] = aggregate_video(std::span(&f, 1), seg);
            } catch (const Error& e) {
                log().error("[{}] thumbnail: {}", rec.id, e.what());
                result.failed = true;
            }
            continue;
        }
        if (frames.empty()) {
            continue;
        }
        const auto [first, last] = segment_bounds(timestamps, seg, config.frame_rate);
        result.segments[s] = aggregate_video(std::span(frames).subspan(first, last - first), seg);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Model inputs assembled from the feature table (and transcripts for word counts)

struct Dataset {
    Eigen::MatrixXd X;
    learn::Labels y;
    std::vector<std::string> columns;
    std::vector<std::string> ids;
};

std::vector<std::string> prefixed_columns(const FeatureTable& table, std::string_view prefix)
{
    std::vector<std::string> out;
    for (const auto& c : table.columns) {
        if (c.starts_with(prefix)) {
            out.push_back(c);
        }
    }
    return out;
}

Dataset build_dataset(const PipelineConfig& config, const std::vector<VideoRecord>& records,
                      const std::string& expression, const Segment& segment)
{
    const auto sets = parse_feature_sets(expression);
    const Label positive = require_label(config.positive_label, records);
    const Label negative = require_label(config.negative_label, records);
    if (positive == negative) {
        throw ConfigError("positive and negative labels must differ");
    }
    const FeatureTable table = read_feature_table(config.features_csv());
    const auto by_id = index_records(records);

    std::vector<std::size_t> rows;
    std::vector<int> labels;
    for (std::size_t r : table.rows_for(segment)) {
        const auto it = by_id.find(table.ids[r]);
        if (it == by_id.end()) {
            log().warn("[{}] in features.csv but not in the manifest; skipped", table.ids[r]);
            continue;
        }
        const Label l = it->second->label;
        if (l == positive || l == negative) {
            rows.push_back(r);
            labels.push_back(l == positive ? 1 : 0);
        }
    }
    if (rows.empty()) {
        throw DataError("no " + config.positive_label + "/" + config.negative_label + " rows for segment "
                        + segment.name() + " in " + config.features_csv().string());
    }

    std::vector<std::string> table_columns;
    bool word_counts = false;
    for (const auto& set : sets) {
        std::vector<std::string> cols;
        if (set == "visual") {
            cols = feature_vector_names();
        } else if (set == "emotions") {
            cols = prefixed_columns(table, "emo_");
        } else if (set == "embedding") {
            cols = prefixed_columns(table, "emb_");
        } else {
            word_counts = true;
            continue;
        }
        for (const auto& c : cols) {
            if (!table.column(c)) {
                throw ConfigError("column " + c + " missing from features.csv");
            }
        }
        if (cols.empty()) {
            throw ConfigError("feature set '" + set + "' has no columns in features.csv"
                              + (set == "emotions" ? " (configure text.lexicon and rerun features)"
                                                   : " (enable text.embeddings and rerun features)"));
        }
        table_columns.insert(table_columns.end(), cols.begin(), cols.end());
    }

    // Word-count vectors come straight from the transcripts.
    std::vector<std::optional<std::vector<std::string>>> tokens(rows.size());
    std::vector<std::string> vocab;
    if (word_counts) {
        const TextResources res = load_text_resources(config);
        std::vector<Transcript> corpus;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const VideoRecord& rec = *by_id.at(table.ids[rows[i]]);
            if (!rec.transcript_path) {
                continue;
            }
            try {
                tokens[i] = transcript_tokens(*rec.transcript_path, res, config.text);
                corpus.push_back({rec.id, {}, *tokens[i]});
            } catch (const Error& e) {
                log().warn("[{}] {}", rec.id, e.what());
            }
        }
        if (corpus.empty()) {
            throw DataError("feature set 'wordcount' needs transcripts, and none could be read");
        }
        vocab = build_vocab(corpus, config.text.vocab_size);
    }

    Dataset data;
    data.columns = table_columns;
    for (const auto& term : vocab) {
        data.columns.push_back("wc_" + term);
    }
    std::vector<std::size_t> col_index;
    for (const auto& c : table_columns) {
        col_index.push_back(*table.column(c));
    }

    std::vector<Eigen::VectorXd> kept;
    std::vector<int> kept_labels;
    std::vector<std::string> dropped;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(data.columns.size()));
        for (std::size_t c = 0; c < col_index.size(); ++c) {
            x(static_cast<Eigen::Index>(c))
                = table.values(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(col_index[c]));
        }
        if (word_counts) {
            if (!tokens[i]) {
                dropped.push_back(table.ids[rows[i]]);
                continue;
            }
            x.tail(static_cast<Eigen::Index>(vocab.size())) = vectorize(*tokens[i], vocab, config.text.word_counts);
        }
        if (!x.allFinite()) {
            dropped.push_back(table.ids[rows[i]]);
            continue;
        }
        kept.push_back(std::move(x));
        kept_labels.push_back(labels[i]);
        data.ids.push_back(table.ids[rows[i]]);
    }
    for (const auto& id : dropped) {
        log().warn("[{}] has empty feature cells for '{}'; row excluded", id, expression);
    }
    data.X.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(data.columns.size()));
    data.y.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        data.X.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
        data.y(static_cast<Eigen::Index>(i)) = kept_labels[i];
    }
    return data;
}

std::string descriptor(const std::string& features, const Segment& segment)
{
    return segment.kind() == Segment::Kind::AllFrames ? features : features + "@" + segment.name();
}

} // namespace

// ---------------------------------------------------------------------------

RunSummary cmd_extract(const PipelineConfig& config)
{
    const auto records = load_records(config);
    const bool thumbnails = wants_thumbnails(config);
    std::atomic<std::size_t> processed{0}, skipped{0}, failures{0};

    parallel_for(records.size(), config.workers, [&](std::size_t i) {
        const VideoRecord& rec = records[i];
        if (rec.video_path && !rec.frames_dir) {
            const fs::path dir = config.frames_root() / rec.id;
            try {
                if (!list_frame_files(dir).empty()) {
                    log().info("[{}] frames already present in {}; skipped", rec.id, dir.string());
                    ++skipped;
                } else {
                    // Decode into a scratch directory so an interrupted run never
                    // leaves a partial directory that a rerun would skip.
                    const fs::path scratch = config.frames_root() / (rec.id + ".partial");
                    fs::remove_all(scratch);
                    const std::size_t n = extract_frames(rec, config.frame_rate, scratch, config.decoder_command);
                    fs::remove_all(dir);
                    fs::rename(scratch, dir);
                    log().info("[{}] extracted {} frames", rec.id, n);
                    ++processed;
                }
            } catch (const std::exception& e) {
                log().error("[{}] {}", rec.id, e.what());
                ++failures;
            }
        }
        if (thumbnails && rec.thumbnail && is_url(*rec.thumbnail)) {
            try {
                fetch_thumbnail(*rec.thumbnail, *thumbnail_path_for(rec, config), FetchOptions{config.fetch_timeout});
            } catch (const std::exception& e) {
                log().error("[{}] thumbnail: {}", rec.id, e.what());
                ++failures;
            }
        }
    });

    RunSummary summary;
    summary.processed = processed;
    summary.skipped = skipped;
    summary.failures = failures;
    summary.outputs.push_back(config.frames_root());
    return summary;
}

RunSummary cmd_features(const PipelineConfig& config)
{
    const auto records = load_records(config);
    RunSummary summary;

    // Textual features first: they are per video and shared by all segments.
    const bool any_transcript = std::any_of(records.begin(), records.end(),
                                            [](const VideoRecord& r) { return r.transcript_path.has_value(); });
    std::vector<std::optional<std::vector<std::string>>> tokens(records.size());
    std::optional<EmotionLexicon> lexicon;
    std::vector<std::size_t> text_failed(records.size(), 0);
    if (any_transcript) {
        const TextResources res = load_text_resources(config);
        if (config.text.lexicon) {
            if (!fs::exists(*config.text.lexicon)) {
                throw ConfigError("lexicon " + config.text.lexicon->string() + " not found");
            }
            lexicon = load_lexicon(*config.text.lexicon);
        }
        parallel_for(records.size(), config.workers, [&](std::size_t i) {
            const auto& rec = records[i];
            if (!rec.transcript_path) {
                return;
            }
            try {
                tokens[i] = transcript_tokens(*rec.transcript_path, res, config.text);
            } catch (const Error& e) {
                log().error("[{}] {}; text cells left empty", rec.id, e.what());
                text_failed[i] = 1;
            }
        });
    }

    std::optional<PvdmModel> embedding;
    std::vector<std::ptrdiff_t> doc_of(records.size(), -1);
    const bool any_tokens = std::any_of(tokens.begin(), tokens.end(), [](const auto& t) { return t.has_value(); });
    if (any_tokens && config.text.embeddings) {
        PvdmParams params = config.text.pvdm;
        params.seed = config.require_seed("features (document embeddings)");
        std::vector<Transcript> corpus;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (tokens[i]) {
                doc_of[i] = static_cast<std::ptrdiff_t>(corpus.size());
                corpus.push_back({records[i].id, {}, *tokens[i]});
            }
        }
        try {
            embedding = train_pvdm(corpus, params);
        } catch (const DataError& e) {
            log().error("document embeddings not trained: {}", e.what());
            ++summary.failures;
        }
    }

    std::vector<VisualResult> visual(records.size());
    parallel_for(records.size(), config.workers,
                 [&](std::size_t i) { visual[i] = visual_features(records[i], config); });

    FeatureTable table;
    table.columns = aggregate_column_names();
    const auto n_visual = table.columns.size();
    if (lexicon) {
        for (int e = 0; e < emotion_count; ++e) {
            table.columns.push_back("emo_" + std::string(emotion_name(static_cast<Emotion>(e))));
        }
    }
    const bool emb_columns = any_tokens && config.text.embeddings;
    if (emb_columns) {
        for (int d = 0; d < config.text.pvdm.dim; ++d) {
            table.columns.push_back("emb_" + std::to_string(d));
        }
    }
    table.values.resize(static_cast<Eigen::Index>(records.size() * config.segments.size()),
                        static_cast<Eigen::Index>(table.columns.size()));
    table.values.setConstant(nan);

    std::size_t analyzable = 0;
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        bool any_cells = false;
        for (std::size_t s = 0; s < config.segments.size(); ++s, ++row) {
            table.ids.push_back(rec.id);
            table.segments.push_back(config.segments[s].name());
            std::size_t n_frames = 0;
            if (const auto& vf = visual[i].segments[s]) {
                const auto values = aggregate_column_values(*vf);
                for (std::size_t c = 0; c < values.size(); ++c) {
                    table.values(row, static_cast<Eigen::Index>(c)) = values[c];
                }
                n_frames = vf->n_frames;
                any_cells = true;
            }
            table.n_frames.push_back(n_frames);
            auto col = static_cast<Eigen::Index>(n_visual);
            if (lexicon) {
                if (tokens[i]) {
                    table.values.block(row, col, 1, emotion_count)
                        = emotion_profile(*tokens[i], *lexicon, config.text.normalization).transpose().matrix();
                    any_cells = true;
                }
                col += emotion_count;
            }
            if (emb_columns && embedding && doc_of[i] >= 0) {
                table.values.block(row, col, 1, config.text.pvdm.dim)
                    = embedding->doc_vector(static_cast<std::size_t>(doc_of[i])).transpose();
                any_cells = true;
            }
        }
        if (tokens[i] == std::nullopt && !rec.transcript_path && (lexicon || emb_columns)) {
            log().warn("[{}] no transcript; text cells left empty", rec.id);
        }
        summary.failures += (visual[i].failed ? 1 : 0) + text_failed[i];
        analyzable += any_cells ? 1 : 0;
    }
    if (!records.empty() && analyzable == 0) {
        throw DataError("no analyzable videos: every visual and text input was missing or failed");
    }
    summary.processed = analyzable;
    write_feature_table(config.features_csv(), table);
    summary.outputs.push_back(config.features_csv());
    return summary;
}

RunSummary cmd_compare(const PipelineConfig& config, const std::string& group_a, const std::string& group_b,
                       const Segment& segment)
{
    const auto records = load_records(config);
    const Label label_a = require_label(group_a, records);
    const Label label_b = require_label(group_b, records);
    if (label_a == label_b) {
        throw ConfigError("the two compared labels must differ");
    }
    const FeatureTable table = read_feature_table(config.features_csv());
    const auto by_id = index_records(records);

    const auto rows = table.rows_for(segment);
    if (rows.empty()) {
        throw ConfigError("features.csv has no rows for segment " + segment.name());
    }
    std::vector<int> group;
    std::size_t n_a = 0, n_b = 0;
    for (std::size_t r : rows) {
        const auto it = by_id.find(table.ids[r]);
        int g = -1;
        if (it != by_id.end()) {
            g = it->second->label == label_a ? 0 : it->second->label == label_b ? 1 : -1;
        }
        n_a += g == 0 ? 1 : 0;
        n_b += g == 1 ? 1 : 0;
        group.push_back(g);
    }
    if (n_a < 2 || n_b < 2) {
        throw DataError("each group needs at least 2 videos (" + group_a + ": " + std::to_string(n_a) + ", " + group_b
                        + ": " + std::to_string(n_b) + ")");
    }

    const std::vector<std::string> requested
        = config.compare_columns.empty() ? aggregate_column_names() : config.compare_columns;
    std::vector<std::string> columns;
    std::vector<Eigen::Index> col_index;
    for (const auto& name : requested) {
        const auto c = table.column(name);
        if (!c) {
            throw ConfigError("compare column '" + name + "' is not in features.csv");
        }
        std::size_t have_a = 0, have_b = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!std::isnan(table.values(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(*c)))) {
                have_a += group[i] == 0 ? 1 : 0;
                have_b += group[i] == 1 ? 1 : 0;
            }
        }
        if (have_a < 2 || have_b < 2) {
            log().warn("{}: fewer than 2 values in a group for segment {}; not tested", name, segment.name());
            continue;
        }
        columns.push_back(name);
        col_index.push_back(static_cast<Eigen::Index>(*c));
    }
    if (columns.empty()) {
        throw DataError("no testable columns for segment " + segment.name());
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c))
                = table.values(static_cast<Eigen::Index>(rows[i]), col_index[c]);
        }
    }
    const auto results = stats::compare_groups(values, columns, group, config.fdr_q);

    csv::Table report;
    report.header = {"variable", "group_a", "group_b", "p_uncorrected", "bh_threshold", "significant", "cohens_d"};
    nlohmann::json mirror;
    mirror["group_a"] = group_a;
    mirror["group_b"] = group_b;
    mirror["segment"] = segment.name();
    mirror["q"] = config.fdr_q;
    mirror["note"] = "group values are means of per-video values; cohens_d is signed as group_a - group_b "
                     "(the CSV shows |d|); BH thresholds are rank * q / m over the variables in this file";
    mirror["rows"] = nlohmann::json::array();
    for (const auto& r : results) {
        report.rows.push_back({r.variable, csv::fixed(r.group_a_value, 2), csv::fixed(r.group_b_value, 2),
                               csv::fixed(r.p_uncorrected, 4), csv::fixed(r.bh_threshold, 4),
                               r.significant ? "true" : "false", csv::fixed(std::abs(r.cohens_d), 3)});
        nlohmann::json row = {{"variable", r.variable},   {"group_a", r.group_a_value}, {"group_b", r.group_b_value},
                              {"n_a", r.n_a},             {"n_b", r.n_b},               {"t", r.t},
                              {"df", r.df},               {"p_uncorrected", r.p_uncorrected},
                              {"bh_threshold", r.bh_threshold}, {"significant", r.significant}};
        row["cohens_d"] = std::isnan(r.cohens_d) ? nlohmann::json(nullptr) : nlohmann::json(r.cohens_d);
        mirror["rows"].push_back(std::move(row));
    }
    const std::string stem = "compare_" + group_a + "_vs_" + group_b + "_" + segment.name();
    const fs::path csv_path = config.out_dir / (stem + ".csv");
    const fs::path json_path = config.out_dir / (stem + ".json");
    csv::write(csv_path, report);
    write_text(json_path, mirror.dump(2) + "\n");

    RunSummary summary;
    summary.processed = results.size();
    summary.outputs = {csv_path, json_path};
    return summary;
}

RunSummary cmd_cv(const PipelineConfig& config, const std::string& model, const std::string& features,
                  const Segment& segment)
{
    const std::uint64_t seed = config.require_seed("cv");
    learn::ModelSpec spec = config.model(model);
    const auto records = load_records(config);
    const Dataset data = build_dataset(config, records, features, segment);

    learn::CvReport report = learn::kfold_cv(data.X, data.y, config.folds, spec, seed, config.workers);
    report.model = model;
    report.features = descriptor(features, segment);

    // Upsert keyed by (model, features) so reruns replace their own row.
    const fs::path path = config.out_dir / "cv.csv";
    csv::Table table;
    table.header = {"model", "features", "precision_mean", "precision_ci", "recall_mean", "recall_ci"};
    if (fs::exists(path)) {
        const csv::Table old = csv::read(path);
        if (old.header == table.header) {
            table.rows = old.rows;
        } else {
            log().warn("{} has an unexpected header; rewriting it", path.string());
        }
    }
    std::vector<std::string> row{report.model,
                                 report.features,
                                 csv::fixed(report.precision_mean, 4),
                                 csv::fixed(report.precision_ci, 4),
                                 csv::fixed(report.recall_mean, 4),
                                 csv::fixed(report.recall_ci, 4)};
    const auto it = std::find_if(table.rows.begin(), table.rows.end(), [&](const auto& r) {
        return r.size() >= 2 && r[0] == report.model && r[1] == report.features;
    });
    if (it != table.rows.end()) {
        *it = row;
    } else {
        table.rows.push_back(row);
    }
    csv::write(path, table);

    nlohmann::json mirror;
    mirror["model"] = report.model;
    mirror["features"] = report.features;
    mirror["positive_label"] = config.positive_label;
    mirror["negative_label"] = config.negative_label;
    mirror["samples"] = data.X.rows();
    mirror["n_features"] = data.X.cols();
    mirror["folds"] = config.folds;
    mirror["seed"] = seed;
    mirror["ci_definition"] = "half-width 1.96 * sd / sqrt(k), sample sd over the k fold values; folds are "
                              "stratified (seeded shuffle, then round-robin per class)";
    mirror["precision_mean"] = report.precision_mean;
    mirror["precision_ci"] = report.precision_ci;
    mirror["recall_mean"] = report.recall_mean;
    mirror["recall_ci"] = report.recall_ci;
    for (const auto& f : report.folds) {
        mirror["per_fold"].push_back({{"precision", f.precision},
                                      {"recall", f.recall},
                                      {"tp", f.counts.tp},
                                      {"fp", f.counts.fp},
                                      {"tn", f.counts.tn},
                                      {"fn", f.counts.fn},
                                      {"test_size", f.test_size}});
    }
    const fs::path json_path = config.out_dir / ("cv_" + file_safe(model + "_" + report.features) + ".json");
    write_text(json_path, mirror.dump(2) + "\n");

    RunSummary summary;
    summary.processed = static_cast<std::size_t>(data.X.rows());
    summary.outputs = {path, json_path};
    return summary;
}

RunSummary cmd_importance(const PipelineConfig& config, const std::string& model, const std::string& features,
                          const Segment& segment)
{
    const std::uint64_t seed = config.require_seed("importance");
    learn::ModelSpec spec = config.model(model);
    spec.forest.workers = config.workers;
    const auto records = load_records(config);
    const Dataset data = build_dataset(config, records, features, segment);
    if ((data.y.array() == 1).count() == 0 || (data.y.array() == 0).count() == 0) {
        throw DataError("importance needs both labels among the usable rows");
    }

    const learn::Model fitted = learn::train(spec, data.X, data.y, derive_seed(seed, 0));
    const learn::ImportanceReport report = learn::permutation_importance(
        fitted, data.X, data.y, config.importance_repeats, derive_seed(seed, 1), config.importance_metric,
        spec.threshold);

    std::vector<std::size_t> order(report.features.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.features[a].mean_drop > report.features[b].mean_drop;
    });
    csv::Table table;
    table.header = {"feature", "mean_drop", "sd", "baseline"};
    for (std::size_t j : order) {
        table.rows.push_back({data.columns[j], csv::general(report.features[j].mean_drop),
                              csv::general(report.features[j].sd), csv::general(report.baseline)});
    }
    const fs::path path
        = config.out_dir / ("importance_" + file_safe(model + "_" + descriptor(features, segment)) + ".csv");
    csv::write(path, table);

    RunSummary summary;
    summary.processed = report.features.size();
    summary.outputs = {path};
    return summary;
}

RunSummary cmd_plotdata(const PipelineConfig& config, const std::string& feature, const Segment& segment,
                        const std::string& group_a, const std::string& group_b)
{
    const auto records = load_records(config);
    const Label labels[2] = {require_label(group_a, records), require_label(group_b, records)};
    const FeatureTable table = read_feature_table(config.features_csv());
    const auto col = table.column(feature);
    if (!col) {
        throw ConfigError("unknown feature column '" + feature + "'");
    }
    const auto by_id = index_records(records);

    std::vector<double> values[2];
    std::vector<double> pooled;
    for (std::size_t r : table.rows_for(segment)) {
        const double v = table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*col));
        const auto it = by_id.find(table.ids[r]);
        if (std::isnan(v) || it == by_id.end()) {
            continue;
        }
        for (int g = 0; g < 2; ++g) {
            if (it->second->label == labels[g]) {
                values[g].push_back(v);
                pooled.push_back(v);
            }
        }
    }
    const std::string names[2] = {group_a, group_b};
    for (int g = 0; g < 2; ++g) {
        if (values[g].empty()) {
            throw DataError("no " + names[g] + " values of " + feature + " for segment " + segment.name());
        }
    }

    const double lo = *std::min_element(pooled.begin(), pooled.end());
    const double hi = *std::max_element(pooled.begin(), pooled.end());
    double width = freedman_diaconis_width(pooled);
    std::size_t bins = 1;
    if (width > 0.0) {
        constexpr std::size_t max_bins = 10000;
        bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / width)), 1, max_bins);
        width = (hi - lo) / static_cast<double>(bins);
    } else {
        width = 1.0; // all values equal: one unit-wide bin centred on them
    }
    const double origin = bins == 1 && hi == lo ? lo - 0.5 : lo;

    csv::Table out;
    out.header = {"group", "bin_center", "density"};
    for (int g = 0; g < 2; ++g) {
        std::vector<std::size_t> counts(bins, 0);
        for (double v : values[g]) {
            const auto b = static_cast<std::size_t>(std::floor((v - origin) / width));
            ++counts[std::min(b, bins - 1)];
        }
        const double scale = 1.0 / (static_cast<double>(values[g].size()) * width);
        for (std::size_t b = 0; b < bins; ++b) {
            out.rows.push_back({names[g], csv::general(origin + (static_cast<double>(b) + 0.5) * width, 10),
                                csv::general(static_cast<double>(counts[b]) * scale, 12)});
        }
    }
    const fs::path path = config.out_dir / ("plot_" + feature + "_" + segment.name() + ".csv");
    csv::write(path, out);

    RunSummary summary;
    summary.processed = pooled.size();
    summary.outputs = {path};
    return summary;
}

RunSummary cmd_extremes(const PipelineConfig& config, const std::string& feature, const Segment& segment,
                        std::size_t k)
{
    const auto records = load_records(config);
    const FeatureTable table = read_feature_table(config.features_csv());
    const auto col = table.column(feature);
    if (!col) {
        throw ConfigError("unknown feature column '" + feature + "'");
    }
    const auto by_id = index_records(records);

    std::vector<std::pair<double, std::string>> entries;
    for (std::size_t r : table.rows_for(segment)) {
        const double v = table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*col));
        if (!std::isnan(v)) {
            entries.emplace_back(v, table.ids[r]);
        }
    }
    if (k > entries.size()) {
        log().warn("k = {} exceeds the {} videos with a {} value; clamped", k, entries.size(), feature);
        k = entries.size();
    }

    auto source = [&](const std::string& id) -> std::string {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            return {};
        }
        const VideoRecord& rec = *it->second;
        if (segment.kind() == Segment::Kind::Thumbnail) {
            return rec.thumbnail.value_or("");
        }
        if (const auto dir = frames_dir_for(rec, config)) {
            return dir->string();
        }
        return {};
    };

    csv::Table out;
    out.header = {"end", "rank", "id", "value", "source"};
    auto low = entries;
    std::sort(low.begin(), low.end());
    auto high = entries;
    std::sort(high.begin(), high.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < k; ++i) {
        out.rows.push_back({"low", std::to_string(i + 1), low[i].second, csv::general(low[i].first),
                            source(low[i].second)});
    }
    for (std::size_t i = 0; i < k; ++i) {
        out.rows.push_back({"high", std::to_string(i + 1), high[i].second, csv::general(high[i].first),
                            source(high[i].second)});
    }
    const fs::path path = config.out_dir / ("extremes_" + feature + "_" + segment.name() + ".csv");
    csv::write(path, out);

    RunSummary summary;
    summary.processed = 2 * k;
    summary.outputs = {path};
    return summary;
}

} // namespace vframe::pipeline

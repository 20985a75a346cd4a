#include <vframe/pipeline.hpp>

#include <vframe/core/error.hpp>

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace vframe::pipeline {

using nlohmann::json;

std::uint64_t PipelineConfig::require_seed(std::string_view command) const
{
    if (!seed) {
        throw ConfigError(std::string(command) + " needs an explicit seed (config \"seed\" or --seed)");
    }
    return *seed;
}

const learn::ModelSpec& PipelineConfig::model(const std::string& name) const
{
    const auto it = models.find(name);
    if (it == models.end()) {
        std::string known;
        for (const auto& [key, spec] : models) {
            known += (known.empty() ? "" : ", ") + key;
        }
        throw ConfigError("unknown model '" + name + "' (configured: " + known + ")");
    }
    return it->second;
}

PipelineConfig default_config()
{
    PipelineConfig config;
    learn::ModelSpec rf;
    rf.kind = learn::ModelKind::Forest;
    learn::ModelSpec mlp;
    mlp.kind = learn::ModelKind::Mlp;
    config.models.emplace("rf", rf);
    config.models.emplace("mlp", mlp);
    return config;
}

namespace {

// Every object is checked against the keys it may contain, so a misspelled
// option fails loudly instead of silently falling back to a default.
void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        throw ConfigError(std::string(where) + " must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ConfigError("unknown option '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out)
{
    if (const auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("option '") + key + "' has the wrong type");
        }
    }
}

template <typename T>
void read_positive(const json& obj, const char* key, T& out)
{
    read(obj, key, out);
    if (!(out > 0)) {
        throw ConfigError(std::string("option '") + key + "' must be positive");
    }
}

void read_path(const json& obj, const char* key, const fs::path& base, std::optional<fs::path>& out)
{
    std::string text;
    if (obj.contains(key)) {
        read(obj, key, text);
        out = base / fs::path(text);
    }
}

learn::ModelSpec parse_model(const std::string& name, const json& j)
{
    learn::ModelSpec spec;
    const std::string type = j.value("type", "");
    if (type == "forest" || type == "rf") {
        check_keys(j, "model " + name, {"type", "n_trees", "mtry", "min_leaf"});
        spec.kind = learn::ModelKind::Forest;
        read_positive(j, "n_trees", spec.forest.n_trees);
        read(j, "mtry", spec.forest.mtry);
        read_positive(j, "min_leaf", spec.forest.min_leaf);
        if (spec.forest.mtry < 0) {
            throw ConfigError("model " + name + ": mtry must be >= 0");
        }
    } else if (type == "mlp") {
        check_keys(j, "model " + name,
                   {"type", "hidden", "learning_rate", "batch_size", "epochs", "patience", "tolerance", "threshold"});
        spec.kind = learn::ModelKind::Mlp;
        read(j, "hidden", spec.mlp.hidden);
        read_positive(j, "learning_rate", spec.mlp.learning_rate);
        read_positive(j, "batch_size", spec.mlp.batch_size);
        read_positive(j, "epochs", spec.mlp.epochs);
        read_positive(j, "patience", spec.mlp.patience);
        read(j, "tolerance", spec.mlp.tolerance);
        read(j, "threshold", spec.threshold);
        for (int h : spec.mlp.hidden) {
            if (h <= 0) {
                throw ConfigError("model " + name + ": hidden layer sizes must be positive");
            }
        }
        if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) {
            throw ConfigError("model " + name + ": threshold must lie in (0, 1)");
        }
    } else {
        throw ConfigError("model " + name + ": type must be \"forest\" or \"mlp\"");
    }
    return spec;
}

void parse_text(const json& j, const fs::path& base, TextConfig& text)
{
    check_keys(j, "text",
               {"lexicon", "stopwords", "keywords", "chunked", "chunk_before", "chunk_after", "normalization",
                "embeddings", "vocab_size", "word_counts", "pvdm"});
    read_path(j, "lexicon", base, text.lexicon);
    read_path(j, "stopwords", base, text.stopwords);
    read_path(j, "keywords", base, text.keywords);
    read(j, "chunked", text.chunked);
    read(j, "chunk_before", text.chunk_before);
    read(j, "chunk_after", text.chunk_after);
    read(j, "embeddings", text.embeddings);
    read_positive(j, "vocab_size", text.vocab_size);
    read(j, "word_counts", text.word_counts);
    const std::string norm = j.value("normalization", "tokens");
    if (norm == "tokens") {
        text.normalization = ProfileNormalization::Tokens;
    } else if (norm == "characters") {
        text.normalization = ProfileNormalization::Characters;
    } else {
        throw ConfigError("text.normalization must be \"tokens\" or \"characters\"");
    }
    if (text.chunked && !text.keywords) {
        throw ConfigError("text.chunked needs text.keywords");
    }
    if (const auto it = j.find("pvdm"); it != j.end()) {
        check_keys(*it, "text.pvdm", {"dim", "window", "negative", "epochs", "min_count", "alpha", "min_alpha"});
        auto& p = text.pvdm;
        read_positive(*it, "dim", p.dim);
        read_positive(*it, "window", p.window);
        read(*it, "negative", p.negative);
        read_positive(*it, "epochs", p.epochs);
        read_positive(*it, "min_count", p.min_count);
        read_positive(*it, "alpha", p.alpha);
        read_positive(*it, "min_alpha", p.min_alpha);
    }
}

} // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"manifest", "segments", "frame_rate", "decoder_command", "allow_text_only", "color", "text", "models",
                "labels", "cv", "importance", "compare", "seed", "out", "workers", "fetch_timeout_s"});

    PipelineConfig config = default_config();
    std::optional<fs::path> manifest;
    read_path(j, "manifest", base_dir, manifest);
    if (!manifest) {
        throw ConfigError("config needs a \"manifest\" path");
    }
    config.manifest = *manifest;

    if (j.contains("segments")) {
        std::vector<std::string> names;
        read(j, "segments", names);
        config.segments.clear();
        for (const auto& name : names) {
            config.segments.push_back(Segment::parse(name));
        }
        if (config.segments.empty()) {
            throw ConfigError("\"segments\" must list at least one segment");
        }
    }
    read_positive(j, "frame_rate", config.frame_rate);
    read(j, "decoder_command", config.decoder_command);
    read(j, "allow_text_only", config.allow_text_only);

    if (const auto it = j.find("color"); it != j.end()) {
        check_keys(*it, "color", {"contrast_trim", "brightness", "hue_half_scale"});
        read(*it, "contrast_trim", config.color.contrast_trim);
        read(*it, "hue_half_scale", config.color.hue_half_scale);
        const std::string model = it->value("brightness", "perceived");
        if (model == "perceived") {
            config.color.brightness = BrightnessModel::Perceived;
        } else if (model == "rec601") {
            config.color.brightness = BrightnessModel::Rec601;
        } else {
            throw ConfigError("color.brightness must be \"perceived\" or \"rec601\"");
        }
        if (!(config.color.contrast_trim >= 0.0 && config.color.contrast_trim < 0.5)) {
            throw ConfigError("color.contrast_trim must lie in [0, 0.5)");
        }
    }
    if (const auto it = j.find("text"); it != j.end()) {
        parse_text(*it, base_dir, config.text);
    }
    if (const auto it = j.find("models"); it != j.end()) {
        if (!it->is_object()) {
            throw ConfigError("\"models\" must be an object of named model specs");
        }
        for (const auto& [name, spec] : it->items()) {
            config.models[name] = parse_model(name, spec);
        }
    }
    if (const auto it = j.find("labels"); it != j.end()) {
        check_keys(*it, "labels", {"positive", "negative"});
        read(*it, "positive", config.positive_label);
        read(*it, "negative", config.negative_label);
    }
    if (const auto it = j.find("cv"); it != j.end()) {
        check_keys(*it, "cv", {"folds"});
        read(*it, "folds", config.folds);
        if (config.folds < 2) {
            throw ConfigError("cv.folds must be at least 2");
        }
    }
    if (const auto it = j.find("importance"); it != j.end()) {
        check_keys(*it, "importance", {"repeats", "metric"});
        read_positive(*it, "repeats", config.importance_repeats);
        const std::string metric = it->value("metric", "accuracy");
        if (metric == "accuracy") {
            config.importance_metric = learn::ImportanceMetric::Accuracy;
        } else if (metric == "f1") {
            config.importance_metric = learn::ImportanceMetric::F1;
        } else {
            throw ConfigError("importance.metric must be \"accuracy\" or \"f1\"");
        }
    }
    if (const auto it = j.find("compare"); it != j.end()) {
        check_keys(*it, "compare", {"q", "columns"});
        read(*it, "q", config.fdr_q);
        read(*it, "columns", config.compare_columns);
        if (!(config.fdr_q > 0.0 && config.fdr_q < 1.0)) {
            throw ConfigError("compare.q must lie in (0, 1)");
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) {
            throw ConfigError("\"seed\" must be a non-negative integer");
        }
        config.seed = j["seed"].get<std::uint64_t>();
    }
    std::optional<fs::path> out;
    read_path(j, "out", base_dir, out);
    if (out) {
        config.out_dir = *out;
    }
    read(j, "workers", config.workers);
    int timeout = static_cast<int>(config.fetch_timeout.count());
    read_positive(j, "fetch_timeout_s", timeout);
    config.fetch_timeout = std::chrono::seconds(timeout);
    return config;
}

PipelineConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

} // namespace vframe::pipeline

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace vframe {

using TermSet = std::unordered_set<std::string>;

struct Transcript {
    std::string video_id;
    std::string raw;
    std::vector<std::string> tokens;
};

/// Strips <...> markup, lowercases (ASCII, Latin-1, Latin Extended-A, Greek,
/// Cyrillic), splits on non-alphanumeric code points and drops stopwords.
std::vector<std::string> tokenize(std::string_view raw, const TermSet& stopwords);

Transcript preprocess(std::string_view raw, const TermSet& stopwords, std::string video_id = {});

/// One word per line; blank lines and lines starting with '#' are skipped.
TermSet load_term_list(const std::filesystem::path& path);

/// Windows of `before` tokens, the keyword, and `after` tokens around each
/// keyword occurrence, clamped at the transcript boundaries.
std::vector<std::vector<std::string>> chunk_transcript(std::span<const std::string> tokens,
                                                       const TermSet& keywords, std::size_t before = 20,
                                                       std::size_t after = 20);

enum class Emotion : int {
    Anger,
    Fear,
    Anticipation,
    Trust,
    Surprise,
    Sadness,
    Joy,
    Disgust,
    Negative,
    Positive,
};
inline constexpr int emotion_count = 10;

std::string_view emotion_name(Emotion e) noexcept;

/// Term -> bitmask over Emotion.
struct EmotionLexicon {
    std::unordered_map<std::string, std::uint16_t> entries;

    void add(std::string term, Emotion e);
    bool has(std::string_view term, Emotion e) const;
};

/// Reads `term<TAB>category<TAB>0|1` lines; lines flagged 0 are skipped.
EmotionLexicon load_lexicon(const std::filesystem::path& path);

using EmotionProfile = Eigen::Array<double, emotion_count, 1>;

enum class ProfileNormalization {
    /// Divide counts by the number of tokens.
    Tokens,
    /// Divide counts by the number of characters (code points) over all tokens.
    Characters,
};

/// Per category, occurrences of lexicon terms divided by the token total.
EmotionProfile emotion_profile(std::span<const std::string> tokens, const EmotionLexicon& lexicon,
                               ProfileNormalization norm = ProfileNormalization::Tokens);

/// Top-k terms by corpus frequency, ties broken lexicographically.
std::vector<std::string> build_vocab(std::span<const Transcript> corpus, std::size_t k = 10000);

/// Presence (or, with counts = true, occurrence-count) vector over `vocab`.
Eigen::VectorXd vectorize(std::span<const std::string> tokens, std::span<const std::string> vocab,
                          bool counts = false);

// ---------------------------------------------------------------------------
// Paragraph vectors, distributed-memory variant with negative sampling.

struct PvdmParams {
    int dim = 200;
    int window = 5;
    int negative = 5;
    int epochs = 20;
    int min_count = 2;
    double alpha = 0.025;
    double min_alpha = 0.0001;
    std::uint64_t seed = 1;
};

struct PvdmModel {
    PvdmParams params;
    std::vector<std::string> vocab;
    std::unordered_map<std::string, int> index;
    std::vector<std::int64_t> counts;
    /// Columns are vectors: dim x |vocab|, dim x |docs|, dim x |vocab|.
    Eigen::MatrixXd word_vectors;
    Eigen::MatrixXd doc_vectors;
    Eigen::MatrixXd output_vectors;
    /// Cumulative count^0.75 distribution for negative draws.
    std::vector<double> noise_cdf;
    /// Objective after each epoch, averaged over a fixed sample of training examples.
    std::vector<double> epoch_loss;

    int dim() const noexcept { return params.dim; }
    Eigen::VectorXd doc_vector(std::size_t doc) const { return doc_vectors.col(static_cast<Eigen::Index>(doc)); }
};

/// One prediction: the center word from the mean of the document vector and the
/// context word vectors, against the center (label 1) and negatives (label 0).
struct PvdmExample {
    int doc = 0;
    std::vector<int> context;
    int center = 0;
    std::vector<int> negatives;
};

struct PvdmGradient {
    double loss = 0.0;
    Eigen::VectorXd doc;     ///< d loss / d doc vector
    Eigen::MatrixXd context; ///< column j: d loss / d word vector of context[j]
    Eigen::MatrixXd output;  ///< column 0: center, then one per negative
};

/// Negative-sampling loss -log s(h.o_c) - sum log s(-h.o_n) for one example.
double pvdm_loss(const PvdmModel& model, const PvdmExample& example);
PvdmGradient pvdm_gradient(const PvdmModel& model, const PvdmExample& example);

/// Trains word, document and output vectors; deterministic given params.seed.
PvdmModel train_pvdm(std::span<const Transcript> corpus, const PvdmParams& params);

/// Fits a new document vector with the word and output vectors frozen. Returns
/// the zero vector when no token is in the vocabulary.
Eigen::VectorXd infer_pvdm(const PvdmModel& model, std::span<const std::string> tokens, int steps = 50,
                           std::uint64_t seed = 1);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

} // namespace vframe

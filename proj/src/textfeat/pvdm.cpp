#include <vframe/textfeat.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>
#include <vframe/core/random.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace vframe {

namespace {

double sigmoid(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// -log(sigmoid(x)), stable for large |x|.
double neg_log_sigmoid(double x)
{
    return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

Eigen::VectorXd init_vector(Rng& rng, int dim)
{
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
        v(i) = (rng.uniform() - 0.5) / dim;
    }
    return v;
}

int draw_noise(const std::vector<double>& cdf, Rng& rng)
{
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

std::vector<int> vocab_ids(const PvdmModel& model, std::span<const std::string> tokens)
{
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (auto it = model.index.find(t); it != model.index.end()) {
            ids.push_back(it->second);
        }
    }
    return ids;
}

/// Shared inner loop of training and inference: walks one document once,
/// updating the document vector and, when TrainWords, the word and output
/// vectors. Returns the summed loss and the number of examples.
template <bool TrainWords, typename Model>
std::pair<double, std::size_t> walk_document(Model& model, Eigen::Ref<Eigen::VectorXd> doc,
                                             const std::vector<int>& ids, Rng& rng, double& lr,
                                             double lr_step, double lr_floor)
{
    const int dim = model.dim();
    const int window = model.params.window;
    Eigen::VectorXd hidden(dim);
    Eigen::VectorXd dh(dim);
    std::vector<int> context;
    double loss = 0.0;
    std::size_t examples = 0;

    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
        const int reduced = window - static_cast<int>(rng.below(static_cast<std::uint64_t>(window)));
        const std::size_t lo = pos >= static_cast<std::size_t>(reduced) ? pos - reduced : 0;
        const std::size_t hi = std::min(ids.size() - 1, pos + static_cast<std::size_t>(reduced));
        context.clear();
        for (std::size_t c = lo; c <= hi; ++c) {
            if (c != pos) {
                context.push_back(ids[c]);
            }
        }
        const double inv_count = 1.0 / static_cast<double>(context.size() + 1);
        hidden = doc;
        for (int w : context) {
            hidden += model.word_vectors.col(w);
        }
        hidden *= inv_count;

        dh.setZero();
        const int center = ids[pos];
        for (int k = 0; k <= model.params.negative; ++k) {
            int target = center;
            double label = 1.0;
            if (k > 0) {
                target = draw_noise(model.noise_cdf, rng);
                if (target == center) {
                    continue;
                }
                label = 0.0;
            }
            auto out = model.output_vectors.col(target);
            const double score = hidden.dot(out);
            loss += label > 0.5 ? neg_log_sigmoid(score) : neg_log_sigmoid(-score);
            const double g = sigmoid(score) - label;
            dh.noalias() += g * out;
            if constexpr (TrainWords) {
                out.noalias() -= (lr * g) * hidden;
            }
        }
        const double step = lr * inv_count;
        doc.noalias() -= step * dh;
        if constexpr (TrainWords) {
            for (int w : context) {
                model.word_vectors.col(w).noalias() -= step * dh;
            }
        }
        ++examples;
        lr = std::max(lr_floor, lr - lr_step);
    }
    return {loss, examples};
}

/// A fixed sample of training examples, drawn once from its own stream, on
/// which the objective is evaluated after every epoch. Fresh negatives in the
/// running loss would add sampling noise of the same size as the late-epoch
/// improvements.
std::vector<PvdmExample> probe_examples(const PvdmModel& model, const std::vector<std::vector<int>>& docs,
                                        std::uint64_t seed)
{
    constexpr std::size_t max_probe = 4096;
    std::vector<std::pair<int, std::size_t>> positions;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (std::size_t p = 0; p < docs[d].size(); ++p) {
            positions.emplace_back(static_cast<int>(d), p);
        }
    }
    Rng rng(seed);
    if (positions.size() > max_probe) {
        rng.shuffle(positions.begin(), positions.end());
        positions.resize(max_probe);
    }
    std::vector<PvdmExample> out;
    out.reserve(positions.size());
    for (const auto& [d, pos] : positions) {
        const auto& ids = docs[static_cast<std::size_t>(d)];
        PvdmExample ex;
        ex.doc = d;
        ex.center = ids[pos];
        // Same shrunken-window distribution as training.
        const auto window = static_cast<std::size_t>(model.params.window)
                            - rng.below(static_cast<std::uint64_t>(model.params.window));
        const std::size_t lo = pos >= window ? pos - window : 0;
        const std::size_t hi = std::min(ids.size() - 1, pos + window);
        for (std::size_t c = lo; c <= hi; ++c) {
            if (c != pos) {
                ex.context.push_back(ids[c]);
            }
        }
        for (int k = 0; k < model.params.negative; ++k) {
            const int n = draw_noise(model.noise_cdf, rng);
            if (n != ex.center) {
                ex.negatives.push_back(n);
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace

double pvdm_loss(const PvdmModel& model, const PvdmExample& ex)
{
    Eigen::VectorXd hidden = model.doc_vectors.col(ex.doc);
    for (int w : ex.context) {
        hidden += model.word_vectors.col(w);
    }
    hidden /= static_cast<double>(ex.context.size() + 1);
    double loss = neg_log_sigmoid(hidden.dot(model.output_vectors.col(ex.center)));
    for (int n : ex.negatives) {
        loss += neg_log_sigmoid(-hidden.dot(model.output_vectors.col(n)));
    }
    return loss;
}

PvdmGradient pvdm_gradient(const PvdmModel& model, const PvdmExample& ex)
{
    const int dim = model.dim();
    const double inv_count = 1.0 / static_cast<double>(ex.context.size() + 1);
    Eigen::VectorXd hidden = model.doc_vectors.col(ex.doc);
    for (int w : ex.context) {
        hidden += model.word_vectors.col(w);
    }
    hidden *= inv_count;

    PvdmGradient grad;
    grad.output.resize(dim, static_cast<Eigen::Index>(1 + ex.negatives.size()));
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k <= ex.negatives.size(); ++k) {
        const int target = k == 0 ? ex.center : ex.negatives[k - 1];
        const double label = k == 0 ? 1.0 : 0.0;
        const auto out = model.output_vectors.col(target);
        const double score = hidden.dot(out);
        grad.loss += label > 0.5 ? neg_log_sigmoid(score) : neg_log_sigmoid(-score);
        const double g = sigmoid(score) - label;
        dh += g * out;
        grad.output.col(static_cast<Eigen::Index>(k)) = g * hidden;
    }
    grad.doc = dh * inv_count;
    grad.context = grad.doc.replicate(1, static_cast<Eigen::Index>(ex.context.size()));
    return grad;
}

PvdmModel train_pvdm(std::span<const Transcript> corpus, const PvdmParams& params)
{
    if (corpus.empty()) {
        throw DataError("PV-DM training needs a nonempty corpus");
    }
    if (params.dim < 1 || params.window < 1 || params.epochs < 1 || params.negative < 0) {
        throw ConfigError("PV-DM dim, window and epochs must be >= 1");
    }

    std::map<std::string, std::int64_t> freq;
    for (const auto& doc : corpus) {
        for (const auto& t : doc.tokens) {
            ++freq[t];
        }
    }
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [term, count] : freq) {
        if (count >= params.min_count) {
            kept.emplace_back(term, count);
        }
    }
    if (kept.empty()) {
        throw DataError("PV-DM vocabulary is empty after applying min_count "
                        + std::to_string(params.min_count));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    PvdmModel model;
    model.params = params;
    for (auto& [term, count] : kept) {
        model.index.emplace(term, static_cast<int>(model.vocab.size()));
        model.vocab.push_back(term);
        model.counts.push_back(count);
    }
    const auto vocab_size = static_cast<Eigen::Index>(model.vocab.size());
    const auto doc_count = static_cast<Eigen::Index>(corpus.size());

    Rng rng(params.seed);
    model.word_vectors.resize(params.dim, vocab_size);
    for (Eigen::Index w = 0; w < vocab_size; ++w) {
        model.word_vectors.col(w) = init_vector(rng, params.dim);
    }
    model.doc_vectors.resize(params.dim, doc_count);
    for (Eigen::Index d = 0; d < doc_count; ++d) {
        model.doc_vectors.col(d) = init_vector(rng, params.dim);
    }
    model.output_vectors = Eigen::MatrixXd::Zero(params.dim, vocab_size);

    double acc = 0.0;
    for (auto c : model.counts) {
        acc += std::pow(static_cast<double>(c), 0.75);
        model.noise_cdf.push_back(acc);
    }

    std::vector<std::vector<int>> docs;
    std::size_t total_positions = 0;
    for (const auto& doc : corpus) {
        docs.push_back(vocab_ids(model, doc.tokens));
        total_positions += docs.back().size();
    }
    const double total_steps = std::max<double>(1.0, static_cast<double>(total_positions) * params.epochs);
    const double lr_step = (params.alpha - params.min_alpha) / total_steps;
    double lr = params.alpha;

    const auto probe = probe_examples(model, docs, derive_seed(params.seed, 0x70726f6265));
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            walk_document<true>(model, model.doc_vectors.col(static_cast<Eigen::Index>(d)), docs[d], rng, lr,
                                lr_step, params.min_alpha);
        }
        double loss = 0.0;
        for (const auto& ex : probe) {
            loss += pvdm_loss(model, ex);
        }
        model.epoch_loss.push_back(probe.empty() ? 0.0 : loss / static_cast<double>(probe.size()));
    }
    return model;
}

Eigen::VectorXd infer_pvdm(const PvdmModel& model, std::span<const std::string> tokens, int steps,
                           std::uint64_t seed)
{
    const auto ids = vocab_ids(model, tokens);
    if (ids.empty()) {
        if (!tokens.empty()) {
            log().warn("PV-DM inference: all {} tokens are out of vocabulary; returning a zero vector",
                       tokens.size());
        }
        return Eigen::VectorXd::Zero(model.dim());
    }
    Rng rng(seed);
    Eigen::VectorXd doc = init_vector(rng, model.dim());
    const int passes = std::max(1, steps);
    const double lr_step = (model.params.alpha - model.params.min_alpha)
                           / (static_cast<double>(ids.size()) * passes);
    double lr = model.params.alpha;
    for (int s = 0; s < passes; ++s) {
        walk_document<false>(model, doc, ids, rng, lr, lr_step, model.params.min_alpha);
    }
    return doc;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double denom = a.norm() * b.norm();
    return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

} // namespace vframe

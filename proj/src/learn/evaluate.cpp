#include <vframe/learn.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>
#include <vframe/core/parallel.hpp>
#include <vframe/core/random.hpp>

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <unordered_set>

namespace vframe::learn {

void FeatureMatrix::validate() const
{
    if (static_cast<std::size_t>(rows.cols()) != column_names.size()) {
        throw DataError("feature matrix has " + std::to_string(rows.cols()) + " columns but "
                        + std::to_string(column_names.size()) + " names");
    }
    if (!row_ids.empty() && static_cast<std::size_t>(rows.rows()) != row_ids.size()) {
        throw DataError("feature matrix row ids do not match its rows");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : column_names) {
        if (!seen.insert(name).second) {
            throw DataError("duplicate feature column '" + name + "'");
        }
    }
    if (!rows.allFinite()) {
        throw DataError("feature matrix contains non-finite values");
    }
}

FeatureMatrix FeatureMatrix::take_rows(std::span<const Eigen::Index> indices) const
{
    FeatureMatrix out;
    out.column_names = column_names;
    const std::vector<Eigen::Index> idx(indices.begin(), indices.end());
    out.rows = rows(idx, Eigen::all);
    if (!row_ids.empty()) {
        for (auto i : indices) {
            out.row_ids.push_back(row_ids[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

Model train(const ModelSpec& spec, const Eigen::MatrixXd& X, const Labels& y, std::uint64_t seed)
{
    if (spec.kind == ModelKind::Forest) {
        ForestParams p = spec.forest;
        p.seed = seed;
        return train_forest(X, y, p);
    }
    MlpParams p = spec.mlp;
    p.seed = seed;
    return train_mlp(X, y, p);
}

Labels predict(const Model& model, const Eigen::MatrixXd& X, double threshold)
{
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        return forest_predict_labels(*forest, X);
    }
    return mlp_predict(std::get<MlpModel>(model), X, threshold);
}

Confusion confusion(const Labels& y_true, const Labels& y_pred)
{
    if (y_true.size() != y_pred.size()) {
        throw DataError("label vectors differ in length");
    }
    Confusion c;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const bool truth = y_true(i) == 1;
        const bool pred = y_pred(i) == 1;
        if (truth && pred) {
            ++c.tp;
        } else if (!truth && pred) {
            ++c.fp;
        } else if (truth) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

namespace {

PrecisionRecall ratios(const Confusion& c, bool warn)
{
    PrecisionRecall pr{1.0, 1.0};
    if (c.tp + c.fp > 0) {
        pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    } else if (warn) {
        log().warn("precision undefined (no positive predictions); reporting 1.0");
    }
    if (c.tp + c.fn > 0) {
        pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    } else if (warn) {
        log().warn("recall undefined (no positive labels); reporting 1.0");
    }
    return pr;
}

} // namespace

PrecisionRecall precision_recall(const Labels& y_true, const Labels& y_pred)
{
    return ratios(confusion(y_true, y_pred), true);
}

std::vector<int> stratified_folds(const Labels& y, int k, std::uint64_t seed)
{
    if (k < 2) {
        throw ConfigError("cross-validation needs k >= 2");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(y.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    std::vector<int> fold(order.size());
    std::int64_t dealt[2] = {0, 0};
    for (auto i : order) {
        const int cls = y(i) == 1 ? 1 : 0;
        fold[static_cast<std::size_t>(i)] = static_cast<int>(dealt[cls]++ % k);
    }
    return fold;
}

CvReport kfold_cv(const Eigen::MatrixXd& X, const Labels& y, int k, const ModelSpec& spec, std::uint64_t seed,
                  unsigned workers)
{
    if (X.rows() != y.size()) {
        throw DataError("feature rows and labels differ in length");
    }
    const auto positives = (y.array() == 1).count();
    const auto negatives = y.size() - positives;
    if (positives < k || negatives < k) {
        throw DataError("each class needs at least k = " + std::to_string(k) + " samples (have "
                        + std::to_string(negatives) + " negative, " + std::to_string(positives) + " positive)");
    }
    const std::vector<int> fold = stratified_folds(y, k, seed);

    CvReport report;
    report.model = spec.kind == ModelKind::Forest ? "RF" : "MLP";
    report.folds.resize(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), workers, [&](std::size_t f) {
        std::vector<Eigen::Index> train_idx, test_idx;
        for (std::size_t i = 0; i < fold.size(); ++i) {
            (fold[i] == static_cast<int>(f) ? test_idx : train_idx).push_back(static_cast<Eigen::Index>(i));
        }
        const Eigen::MatrixXd Xtr = X(train_idx, Eigen::all);
        const Eigen::MatrixXd Xte = X(test_idx, Eigen::all);
        const Labels ytr = y(train_idx);
        const Labels yte = y(test_idx);
        const Model model = train(spec, Xtr, ytr, derive_seed(seed, f + 1));
        const Confusion c = confusion(yte, predict(model, Xte, spec.threshold));
        const PrecisionRecall pr = ratios(c, true);
        report.folds[f] = {pr.precision, pr.recall, c, test_idx.size()};
    });

    const auto kd = static_cast<double>(k);
    auto summarize = [kd](const std::vector<double>& v, double& mean, double& ci) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / kd;
        double ss = 0.0;
        for (double x : v) {
            ss += (x - mean) * (x - mean);
        }
        ci = 1.96 * std::sqrt(ss / (kd - 1.0)) / std::sqrt(kd);
    };
    std::vector<double> precision, recall;
    for (const auto& fr : report.folds) {
        precision.push_back(fr.precision);
        recall.push_back(fr.recall);
    }
    summarize(precision, report.precision_mean, report.precision_ci);
    summarize(recall, report.recall_mean, report.recall_ci);
    return report;
}

double score(const Labels& y_true, const Labels& y_pred, ImportanceMetric metric)
{
    const Confusion c = confusion(y_true, y_pred);
    if (metric == ImportanceMetric::Accuracy) {
        return static_cast<double>(c.tp + c.tn) / static_cast<double>(y_true.size());
    }
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    return denom > 0.0 ? 2.0 * static_cast<double>(c.tp) / denom : 0.0;
}

ImportanceReport permutation_importance(const Model& model, const Eigen::MatrixXd& X, const Labels& y, int repeats,
                                        std::uint64_t seed, ImportanceMetric metric, double threshold)
{
    if (repeats < 1) {
        throw ConfigError("permutation importance needs repeats >= 1");
    }
    ImportanceReport report;
    report.baseline = score(y, predict(model, X, threshold), metric);

    Eigen::MatrixXd work = X;
    std::vector<double> drops(static_cast<std::size_t>(repeats));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (int r = 0; r < repeats; ++r) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(repeats)
                                          + static_cast<std::uint64_t>(r)));
            std::vector<double> column(X.col(j).begin(), X.col(j).end());
            rng.shuffle(column.begin(), column.end());
            work.col(j) = Eigen::Map<const Eigen::VectorXd>(column.data(), X.rows());
            drops[static_cast<std::size_t>(r)] = report.baseline - score(y, predict(model, work, threshold), metric);
        }
        work.col(j) = X.col(j);
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / repeats;
        double ss = 0.0;
        for (double d : drops) {
            ss += (d - mean) * (d - mean);
        }
        report.features.push_back({mean, std::sqrt(ss / repeats)});
    }
    return report;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

namespace {

constexpr int format_version = 1;

json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_hint)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_hint;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = j[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError("ragged matrix in model file");
        }
        m.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), cols);
    }
    return m;
}

void check_header(const json& j, const char* format)
{
    if (j.value("format", "") != format) {
        throw ParseError(std::string("not a ") + format + " model file");
    }
    if (j.value("version", 0) != format_version) {
        throw ParseError("unsupported model file version " + std::to_string(j.value("version", 0)));
    }
}

} // namespace

std::string to_json(const ForestModel& model)
{
    json j;
    j["format"] = "vframe-forest";
    j["version"] = format_version;
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"mtry", model.params.mtry},
                   {"min_leaf", model.params.min_leaf},
                   {"seed", model.params.seed}};
    j["n_features"] = model.n_features;
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json t;
        for (const auto& node : tree.nodes) {
            t["feature"].push_back(node.feature);
            t["threshold"].push_back(node.threshold);
            t["left"].push_back(node.left);
            t["right"].push_back(node.right);
            t["count0"].push_back(node.count0);
            t["count1"].push_back(node.count1);
        }
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

ForestModel forest_from_json(const std::string& text)
{
    const json j = json::parse(text);
    check_header(j, "vframe-forest");
    ForestModel model;
    model.params.n_trees = j.at("params").at("n_trees").get<int>();
    model.params.mtry = j.at("params").at("mtry").get<int>();
    model.params.min_leaf = j.at("params").at("min_leaf").get<int>();
    model.params.seed = j.at("params").at("seed").get<std::uint64_t>();
    model.n_features = j.at("n_features").get<int>();
    for (const auto& t : j.at("trees")) {
        DecisionTree tree;
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto threshold = t.at("threshold").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto c0 = t.at("count0").get<std::vector<std::int64_t>>();
        const auto c1 = t.at("count1").get<std::vector<std::int64_t>>();
        for (std::size_t i = 0; i < feature.size(); ++i) {
            if (feature[i] >= model.n_features) {
                throw ParseError("tree node references feature beyond n_features");
            }
            tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], c0[i], c1[i]});
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::string to_json(const MlpModel& model)
{
    json j;
    j["format"] = "vframe-mlp";
    j["version"] = format_version;
    j["layer_sizes"] = model.layer_sizes();
    json layers = json::array();
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        layers.push_back({{"weights", matrix_to_json(model.weights[l])},
                          {"bias", std::vector<double>(model.biases[l].begin(), model.biases[l].end())}});
    }
    j["layers"] = std::move(layers);
    j["input_mean"] = std::vector<double>(model.input_mean.begin(), model.input_mean.end());
    j["input_scale"] = std::vector<double>(model.input_scale.begin(), model.input_scale.end());
    return j.dump();
}

MlpModel mlp_from_json(const std::string& text)
{
    const json j = json::parse(text);
    check_header(j, "vframe-mlp");
    MlpModel model;
    for (const auto& layer : j.at("layers")) {
        model.weights.push_back(matrix_from_json(layer.at("weights"), 0));
        const auto bias = layer.at("bias").get<std::vector<double>>();
        model.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size())));
    }
    const auto mean = j.at("input_mean").get<std::vector<double>>();
    const auto scale = j.at("input_scale").get<std::vector<double>>();
    model.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    return model;
}

} // namespace vframe::learn

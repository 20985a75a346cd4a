#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vframe::learn {

using Labels = Eigen::VectorXi;

/// Samples x features, with names for columns and ids for rows.
struct FeatureMatrix {
    Eigen::MatrixXd rows;
    std::vector<std::string> column_names;
    std::vector<std::string> row_ids;

    Eigen::Index samples() const noexcept { return rows.rows(); }
    Eigen::Index features() const noexcept { return rows.cols(); }

    /// Throws DataError on non-finite values, duplicate column names or
    /// mismatched name/id counts.
    void validate() const;

    /// Subset of rows, in the given order.
    FeatureMatrix take_rows(std::span<const Eigen::Index> indices) const;
};

// ---------------------------------------------------------------------------
// Random forest

struct ForestParams {
    int n_trees = 100;
    /// Candidate features per split; 0 means floor(sqrt(p)).
    int mtry = 0;
    int min_leaf = 1;
    std::uint64_t seed = 1;
    /// Threads used to grow trees; results do not depend on it.
    unsigned workers = 1;
};

struct TreeNode {
    /// -1 for leaves.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Training samples of class 0 and class 1 that reached this node.
    std::int64_t count0 = 0;
    std::int64_t count1 = 0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; ///< nodes[0] is the root

    /// Leaf majority class for x; ties go to class 0.
    int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_features = 0;
    ForestParams params;
};

struct Prediction {
    int label;
    double probability; ///< fraction of trees voting 1
};

ForestModel train_forest(const Eigen::MatrixXd& X, const Labels& y, const ForestParams& params);

/// Majority vote; exact ties go to class 0.
Prediction forest_predict(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);

Labels forest_predict_labels(const ForestModel& model, const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// Multilayer perceptron

struct MlpParams {
    std::vector<int> hidden{64, 64};
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 200;
    /// Stop after this many epochs without a training-loss improvement of `tolerance`.
    int patience = 20;
    double tolerance = 1e-4;
    std::uint64_t seed = 1;
};

/// Fully connected ReLU network with one logistic output. Inputs are
/// standardized with the stored training statistics before the first layer.
template <typename Scalar>
struct MlpNetwork {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Matrix> weights; ///< weights[l] is out x in
    std::vector<Vector> biases;
    Vector input_mean;
    Vector input_scale; ///< 1 / sd, or 0 for constant training columns

    /// Layer sizes including input and output, e.g. {p, 64, 64, 1}.
    std::vector<int> layer_sizes() const;

    /// Standardized inputs (samples x features).
    Matrix standardize(const Matrix& X) const;

    /// Output logits for already standardized inputs.
    Vector logits(const Matrix& Z) const;

    /// Probabilities of class 1 for raw inputs.
    Vector predict_proba(const Matrix& X) const;
};

using MlpModel = MlpNetwork<double>;

/// Network with the given layer sizes, Glorot-uniform weights and zero biases,
/// identity standardization.
template <typename Scalar>
MlpNetwork<Scalar> make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

template <typename Scalar>
struct MlpGradients {
    Scalar loss = 0;
    std::vector<typename MlpNetwork<Scalar>::Matrix> weights;
    std::vector<typename MlpNetwork<Scalar>::Vector> biases;
};

/// Mean binary cross-entropy over the batch and its exact gradient by reverse
/// accumulation. `Z` holds standardized inputs, one sample per row.
template <typename Scalar>
MlpGradients<Scalar> mlp_gradients(const MlpNetwork<Scalar>& net,
                                   const typename MlpNetwork<Scalar>::Matrix& Z,
                                   const Eigen::Ref<const Labels>& y);

/// Mean binary cross-entropy of standardized inputs Z.
template <typename Scalar>
Scalar mlp_loss(const MlpNetwork<Scalar>& net, const typename MlpNetwork<Scalar>::Matrix& Z,
                const Eigen::Ref<const Labels>& y);

struct MlpTrainingLog {
    std::vector<double> epoch_loss;
};

/// Adam on shuffled mini-batches with early stopping on the training loss.
MlpModel train_mlp(const Eigen::MatrixXd& X, const Labels& y, const MlpParams& params,
                   MlpTrainingLog* training_log = nullptr);

/// Class labels at the given probability threshold.
Labels mlp_predict(const MlpModel& model, const Eigen::MatrixXd& X, double threshold = 0.5);

// ---------------------------------------------------------------------------
// Evaluation

enum class ModelKind { Forest, Mlp };

struct ModelSpec {
    ModelKind kind = ModelKind::Forest;
    ForestParams forest;
    MlpParams mlp;
    double threshold = 0.5; ///< MLP decision threshold
};

using Model = std::variant<ForestModel, MlpModel>;

Model train(const ModelSpec& spec, const Eigen::MatrixXd& X, const Labels& y, std::uint64_t seed);
Labels predict(const Model& model, const Eigen::MatrixXd& X, double threshold = 0.5);

struct PrecisionRecall {
    double precision;
    double recall;
};

/// Of the positive class (label 1). Undefined ratios are reported as 1.0 with a warning.
PrecisionRecall precision_recall(const Labels& y_true, const Labels& y_pred);

struct Confusion {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};
Confusion confusion(const Labels& y_true, const Labels& y_pred);

struct FoldResult {
    double precision;
    double recall;
    Confusion counts;
    std::size_t test_size;
};

struct CvReport {
    std::string model;
    std::string features;
    std::vector<FoldResult> folds;
    double precision_mean = 0.0;
    double recall_mean = 0.0;
    /// Half-widths: 1.96 * sd / sqrt(k) across folds (sample sd).
    double precision_ci = 0.0;
    double recall_ci = 0.0;
};

/// Fold index per sample: samples are shuffled once with `seed`, then each
/// class is dealt round-robin over the k folds.
std::vector<int> stratified_folds(const Labels& y, int k, std::uint64_t seed);

CvReport kfold_cv(const Eigen::MatrixXd& X, const Labels& y, int k, const ModelSpec& spec, std::uint64_t seed,
                  unsigned workers = 1);

enum class ImportanceMetric { Accuracy, F1 };

struct FeatureImportance {
    double mean_drop;
    double sd; ///< population sd over repeats
};

struct ImportanceReport {
    double baseline = 0.0;
    std::vector<FeatureImportance> features;
};

double score(const Labels& y_true, const Labels& y_pred, ImportanceMetric metric);

/// Score drop when each column is shuffled, `repeats` times per column.
ImportanceReport permutation_importance(const Model& model, const Eigen::MatrixXd& X, const Labels& y,
                                        int repeats, std::uint64_t seed,
                                        ImportanceMetric metric = ImportanceMetric::Accuracy,
                                        double threshold = 0.5);

// ---------------------------------------------------------------------------
// Serialization (versioned JSON)

std::string to_json(const ForestModel& model);
std::string to_json(const MlpModel& model);
ForestModel forest_from_json(const std::string& text);
MlpModel mlp_from_json(const std::string& text);

} // namespace vframe::learn

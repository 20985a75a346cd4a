#include <vframe/learn.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/parallel.hpp>
#include <vframe/core/random.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vframe::learn {

namespace {

void check_training_data(const Eigen::MatrixXd& X, const Labels& y)
{
    if (X.rows() != y.size()) {
        throw DataError("feature rows and labels differ in length");
    }
    if (X.rows() < 2) {
        throw DataError("training needs at least two samples");
    }
    if (X.cols() == 0) {
        throw DataError("training needs at least one feature");
    }
    if (!X.allFinite()) {
        throw DataError("feature matrix contains non-finite values");
    }
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) == 0) {
            has0 = true;
        } else if (y(i) == 1) {
            has1 = true;
        } else {
            throw DataError("labels must be 0 or 1");
        }
    }
    if (!has0 || !has1) {
        throw DataError("training labels contain a single class");
    }
}

double gini(double n0, double n1)
{
    const double n = n0 + n1;
    if (n == 0.0) {
        return 0.0;
    }
    const double p0 = n0 / n;
    const double p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Labels& y, int mtry, int min_leaf, Rng& rng)
        : X_(X), y_(y), mtry_(mtry), min_leaf_(min_leaf), rng_(rng)
    {
    }

    DecisionTree build(std::vector<Eigen::Index> samples)
    {
        DecisionTree tree;
        struct Pending {
            int node;
            std::vector<Eigen::Index> samples;
        };
        std::vector<Pending> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(samples)});
        while (!stack.empty()) {
            Pending job = std::move(stack.back());
            stack.pop_back();
            std::int64_t c0 = 0, c1 = 0;
            for (auto s : job.samples) {
                (y_(s) == 1 ? c1 : c0) += 1;
            }
            tree.nodes[job.node].count0 = c0;
            tree.nodes[job.node].count1 = c1;
            if (c0 == 0 || c1 == 0 || job.samples.size() < 2 * static_cast<std::size_t>(min_leaf_)) {
                continue;
            }
            const Split split = best_split(job.samples, c0, c1);
            if (split.feature < 0) {
                continue;
            }
            std::vector<Eigen::Index> left, right;
            for (auto s : job.samples) {
                (X_(s, split.feature) <= split.threshold ? left : right).push_back(s);
            }
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            TreeNode& node = tree.nodes[job.node];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = l;
            node.right = l + 1;
            stack.push_back({l + 1, std::move(right)});
            stack.push_back({l, std::move(left)});
        }
        return tree;
    }

private:
    Split best_split(const std::vector<Eigen::Index>& samples, std::int64_t c0, std::int64_t c1)
    {
        const auto p = static_cast<int>(X_.cols());
        std::vector<int> features(static_cast<std::size_t>(p));
        std::iota(features.begin(), features.end(), 0);
        rng_.shuffle(features.begin(), features.end());

        const double n = static_cast<double>(samples.size());
        const double parent = gini(static_cast<double>(c0), static_cast<double>(c1));
        Split best;
        int evaluated = 0;
        std::vector<std::pair<double, int>> column(samples.size());
        for (int f : features) {
            if (evaluated >= mtry_) {
                break;
            }
            for (std::size_t i = 0; i < samples.size(); ++i) {
                column[i] = {X_(samples[i], f), y_(samples[i])};
            }
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) {
                continue; // constant in this node: not a usable candidate
            }
            ++evaluated;
            double l0 = 0.0, l1 = 0.0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                (column[i].second == 1 ? l1 : l0) += 1.0;
                if (column[i].first == column[i + 1].first) {
                    continue;
                }
                const double nl = l0 + l1;
                const double nr = n - nl;
                if (nl < min_leaf_ || nr < min_leaf_) {
                    continue;
                }
                const double r0 = static_cast<double>(c0) - l0;
                const double r1 = static_cast<double>(c1) - l1;
                const double gain = parent - (nl * gini(l0, l1) + nr * gini(r0, r1)) / n;
                double thr = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
                if (!(thr < column[i + 1].first)) {
                    thr = column[i].first;
                }
                const bool better = gain > best.gain
                                    || (gain == best.gain
                                        && (f < best.feature || (f == best.feature && thr < best.threshold)));
                if (better) {
                    best = {f, thr, gain};
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const Labels& y_;
    int mtry_;
    int min_leaf_;
    Rng& rng_;
};

} // namespace

int DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const
{
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& node = nodes[static_cast<std::size_t>(i)];
        i = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    const TreeNode& leaf = nodes[static_cast<std::size_t>(i)];
    return leaf.count1 > leaf.count0 ? 1 : 0;
}

ForestModel train_forest(const Eigen::MatrixXd& X, const Labels& y, const ForestParams& params)
{
    check_training_data(X, y);
    if (params.n_trees < 1) {
        throw ConfigError("forest needs at least one tree");
    }
    if (params.min_leaf < 1) {
        throw ConfigError("min_leaf must be >= 1");
    }
    const auto p = static_cast<int>(X.cols());
    const int mtry = params.mtry > 0 ? std::min(params.mtry, p)
                                     : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));

    ForestModel model;
    model.params = params;
    model.n_features = p;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));
    const auto n = static_cast<std::uint64_t>(X.rows());
    parallel_for(model.trees.size(), params.workers, [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<Eigen::Index> bootstrap(n);
        for (auto& s : bootstrap) {
            s = static_cast<Eigen::Index>(rng.below(n));
        }
        TreeBuilder builder(X, y, mtry, params.min_leaf, rng);
        model.trees[t] = builder.build(std::move(bootstrap));
    });
    return model;
}

Prediction forest_predict(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x)
{
    if (x.size() != model.n_features) {
        throw DataError("feature row has " + std::to_string(x.size()) + " values, model expects "
                        + std::to_string(model.n_features));
    }
    std::size_t votes = 0;
    for (const auto& tree : model.trees) {
        votes += static_cast<std::size_t>(tree.predict(x));
    }
    const std::size_t total = model.trees.size();
    return {2 * votes > total ? 1 : 0, static_cast<double>(votes) / static_cast<double>(total)};
}

Labels forest_predict_labels(const ForestModel& model, const Eigen::MatrixXd& X)
{
    Labels out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out(i) = forest_predict(model, X.row(i)).label;
    }
    return out;
}

} // namespace vframe::learn

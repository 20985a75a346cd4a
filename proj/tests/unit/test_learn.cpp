#include <vframe/core/error.hpp>
#include <vframe/core/random.hpp>
#include <vframe/learn.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace vframe;
using namespace vframe::learn;
using doctest::Approx;

namespace {

struct Dataset {
    Eigen::MatrixXd X;
    Labels y;
};

/// Two Gaussian-free clusters separated along feature 0 by a gap.
Dataset separable(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d{Eigen::MatrixXd(Eigen::Index(n), 2), Labels(Eigen::Index(n))};
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
        const int label = i % 2;
        d.y(i) = label;
        d.X(i, 0) = label ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
        d.X(i, 1) = rng.uniform(-1.0, 1.0);
    }
    return d;
}

Dataset random_labels(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d{Eigen::MatrixXd(Eigen::Index(n), 3), Labels(Eigen::Index(n))};
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
        d.y(i) = i % 2;
        for (int j = 0; j < 3; ++j) {
            d.X(i, j) = rng.normal();
        }
    }
    return d;
}

ForestParams forest_params(int trees, std::uint64_t seed)
{
    ForestParams p;
    p.n_trees = trees;
    p.seed = seed;
    return p;
}

double accuracy(const Labels& a, const Labels& b)
{
    return double((a.array() == b.array()).count()) / double(a.size());
}

} // namespace

TEST_CASE("FeatureMatrix validation and row subsets")
{
    FeatureMatrix m;
    m.rows = Eigen::MatrixXd::Zero(3, 2);
    m.rows(2, 1) = 7;
    m.column_names = {"a", "b"};
    m.row_ids = {"r0", "r1", "r2"};
    CHECK_NOTHROW(m.validate());
    const std::vector<Eigen::Index> idx{2, 0};
    const auto sub = m.take_rows(idx);
    CHECK(sub.row_ids == std::vector<std::string>{"r2", "r0"});
    CHECK(sub.rows(0, 1) == 7);

    auto dup = m;
    dup.column_names = {"a", "a"};
    CHECK_THROWS_AS(dup.validate(), DataError);
    auto bad = m;
    bad.rows(0, 0) = std::nan("");
    CHECK_THROWS_AS(bad.validate(), DataError);
    auto short_ids = m;
    short_ids.row_ids.pop_back();
    CHECK_THROWS_AS(short_ids.validate(), DataError);
}

TEST_CASE("forest root splits a one-feature separable set at the boundary")
{
    Eigen::MatrixXd X(200, 1);
    Labels y(200);
    for (int i = 0; i < 200; ++i) {
        X(i, 0) = (i + 0.5) / 200.0;
        y(i) = X(i, 0) > 0.5 ? 1 : 0;
    }
    const auto model = train_forest(X, y, forest_params(30, 4));
    REQUIRE(model.trees.size() == 30);
    for (const auto& tree : model.trees) {
        REQUIRE_FALSE(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].feature == 0);
        CHECK(tree.nodes[0].threshold == Approx(0.5).epsilon(0.03));
    }
    CHECK(accuracy(forest_predict_labels(model, X), y) == 1.0);
}

TEST_CASE("forest structure invariants, determinism and worker independence")
{
    auto d = separable(120, 9);
    d.X.conservativeResize(Eigen::NoChange, 4);
    d.X.col(2).setConstant(3.0);
    Rng rng(1);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        d.X(i, 3) = rng.normal();
    }
    auto p = forest_params(40, 77);
    p.mtry = 2;
    const auto a = train_forest(d.X, d.y, p);
    const auto b = train_forest(d.X, d.y, p);
    CHECK(to_json(a) == to_json(b));
    p.workers = 3;
    CHECK(to_json(train_forest(d.X, d.y, p)) == to_json(a));
    p.seed = 78;
    CHECK(to_json(train_forest(d.X, d.y, p)) != to_json(a));

    for (const auto& tree : a.trees) {
        for (const auto& node : tree.nodes) {
            CHECK(node.feature != 2);
            CHECK(node.feature < 4);
            CHECK(node.count0 + node.count1 > 0);
            if (!node.is_leaf()) {
                CHECK(node.left > 0);
                CHECK(node.right > 0);
            }
        }
    }
    CHECK(accuracy(forest_predict_labels(a, d.X), d.y) == 1.0);
}

TEST_CASE("forest prediction: votes, ties and dimension checks")
{
    // Hand-built stumps: x < 0 -> class 0, else class 1, and their mirror.
    DecisionTree up, down;
    up.nodes = {{0, 0.0, 1, 2, 2, 2}, {-1, 0, -1, -1, 2, 0}, {-1, 0, -1, -1, 0, 2}};
    down.nodes = {{0, 0.0, 1, 2, 2, 2}, {-1, 0, -1, -1, 0, 2}, {-1, 0, -1, -1, 2, 0}};
    ForestModel m;
    m.n_features = 1;
    m.trees = {up, up, up};
    Eigen::RowVectorXd x(1);
    x << 1.0;
    auto pred = forest_predict(m, x);
    CHECK(pred.label == 1);
    CHECK(pred.probability == 1.0);

    m.trees = {up, down};
    pred = forest_predict(m, x);
    CHECK(pred.label == 0);
    CHECK(pred.probability == 0.5);

    DecisionTree tied;
    tied.nodes = {{-1, 0, -1, -1, 3, 3}};
    CHECK(tied.predict(x) == 0);

    Eigen::RowVectorXd wrong(2);
    wrong << 1.0, 2.0;
    CHECK_THROWS_AS(forest_predict(m, wrong), DataError);

    const auto d = random_labels(60, 2);
    const auto model = train_forest(d.X, d.y, forest_params(15, 3));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const auto p = forest_predict(model, d.X.row(i));
        CHECK(p.probability >= 0.0);
        CHECK(p.probability <= 1.0);
        CHECK(p.label == (p.probability > 0.5 ? 1 : 0));
    }
}

TEST_CASE("forest training errors")
{
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    CHECK_THROWS_AS(train_forest(X, Labels::Ones(3), forest_params(5, 1)), DataError);
    CHECK_THROWS_AS(train_forest(Eigen::MatrixXd(3, 0), Labels{{0, 1, 0}}, forest_params(5, 1)), DataError);
    CHECK_THROWS_AS(train_forest(X, Labels{{0, 1, 0}}, forest_params(0, 1)), ConfigError);
}

TEST_CASE("MLP gradient matches central differences on a [3,4,4,1] network")
{
    auto net = make_mlp<double>({3, 4, 4, 1}, 11);
    Rng rng(12);
    for (auto& b : net.biases) {
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            b(i) = rng.uniform(-0.5, 0.5);
        }
    }
    Eigen::MatrixXd Z(12, 3);
    Labels y(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        y(i) = int(rng.below(2));
        for (int j = 0; j < 3; ++j) {
            Z(i, j) = rng.normal();
        }
    }
    const auto g = mlp_gradients(net, Z, y);
    CHECK(g.loss == Approx(mlp_loss(net, Z, y)).epsilon(1e-14));

    const double h = 1e-6;
    double worst = 0.0;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = mlp_loss(net, Z, y);
        param = saved - h;
        const double down = mlp_loss(net, Z, y);
        param = saved;
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(numeric - analytic) / std::max(1e-7, std::abs(numeric) + std::abs(analytic)));
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
            probe(net.weights[l](i), g.weights[l](i));
        }
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
            probe(net.biases[l](i), g.biases[l](i));
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("MLP gradient special cases")
{
    auto net = make_mlp<double>({3, 4, 4, 1}, 2);
    Eigen::MatrixXd Z(6, 3);
    Rng rng(5);
    for (Eigen::Index i = 0; i < Z.size(); ++i) {
        Z(i) = rng.normal();
    }
    Z.col(1).setZero();
    const Labels y{{1, 0, 1, 0, 0, 1}};
    const auto g = mlp_gradients(net, Z, y);
    CHECK(g.weights[0].col(1).isZero(0.0));

    for (auto& w : net.weights) {
        w.setZero();
    }
    for (auto& b : net.biases) {
        b.setZero();
    }
    const auto zero = mlp_gradients(net, Z, y);
    CHECK(zero.biases.back()(0) == Approx(0.0));
    CHECK(zero.loss == Approx(std::log(2.0)));
}

TEST_CASE("MLP learns XOR for most seeds")
{
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 0, 1, 1, 0, 1, 1;
    const Labels y{{0, 1, 1, 0}};
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        MlpParams p;
        p.seed = seed;
        const auto model = train_mlp(X, y, p);
        solved += mlp_predict(model, X) == y;
    }
    INFO("solved " << solved << " of 10");
    CHECK(solved >= 8);
}

TEST_CASE("MLP determinism, standardization and training curve")
{
    const auto d = separable(80, 3);
    MlpParams p;
    p.seed = 21;
    p.epochs = 40;
    MlpTrainingLog log_a, log_b;
    const auto a = train_mlp(d.X, d.y, p, &log_a);
    const auto b = train_mlp(d.X, d.y, p, &log_b);
    REQUIRE(log_a.epoch_loss.size() >= 5);
    CHECK(log_a.epoch_loss == log_b.epoch_loss);
    CHECK(to_json(a) == to_json(b));
    for (std::size_t e = 1; e < 5; ++e) {
        CHECK(log_a.epoch_loss[e] <= log_a.epoch_loss[e - 1]);
    }
    CHECK(a.layer_sizes() == std::vector<int>{2, 64, 64, 1});
    CHECK(accuracy(mlp_predict(a, d.X), d.y) >= 0.95);

    // Standardization statistics come from the training data; constant columns pass as zero.
    Eigen::MatrixXd Xc(4, 2);
    Xc << 1, 5, 2, 5, 3, 5, 4, 5;
    const auto c = train_mlp(Xc, Labels{{0, 0, 1, 1}}, p);
    CHECK(c.input_mean(0) == Approx(2.5));
    CHECK(c.input_scale(1) == 0.0);
    CHECK(c.standardize(Xc).col(1).isZero(0.0));
    const Eigen::MatrixXd z = c.standardize(Xc);
    CHECK(z.col(0).mean() == Approx(0.0).scale(1.0));

    CHECK_THROWS_AS(train_mlp(Xc, Labels::Zero(4), p), DataError);
}

TEST_CASE("precision and recall")
{
    auto pr = precision_recall(Labels{{1, 0, 1}}, Labels{{1, 0, 1}});
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
    pr = precision_recall(Labels{{1, 1, 0, 0}}, Labels{{1, 0, 1, 0}});
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 0.5);
    pr = precision_recall(Labels{{1, 1, 0}}, Labels{{0, 0, 0}});
    CHECK(pr.recall == 0.0);
    CHECK(pr.precision == 1.0);
    const auto c = confusion(Labels{{1, 1, 0, 0, 1}}, Labels{{1, 0, 1, 0, 1}});
    CHECK(c.tp == 2);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
    CHECK_THROWS_AS(precision_recall(Labels{{1}}, Labels{{1, 0}}), DataError);
    CHECK(score(Labels{{1, 1, 0, 0}}, Labels{{1, 0, 1, 0}}, ImportanceMetric::Accuracy) == 0.5);
    CHECK(score(Labels{{1, 1, 0, 0}}, Labels{{1, 0, 1, 0}}, ImportanceMetric::F1) == 0.5);
    CHECK(score(Labels{{0, 0}}, Labels{{0, 0}}, ImportanceMetric::F1) == 0.0);
}

TEST_CASE("stratified folds balance each class")
{
    Rng rng(40);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = 20 + rng.below(60);
        Labels y(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y(i) = rng.uniform() < 0.3 ? 1 : 0;
        }
        const int k = 2 + int(rng.below(9));
        const auto fold = stratified_folds(y, k, rng.next());
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<int> sizes(std::size_t(k), 0);
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                REQUIRE(fold[std::size_t(i)] >= 0);
                REQUIRE(fold[std::size_t(i)] < k);
                if (y(i) == cls) {
                    ++sizes[std::size_t(fold[std::size_t(i)])];
                }
            }
            const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
            REQUIRE(*hi - *lo <= 1);
        }
    }
    CHECK(stratified_folds(Labels{{0, 1, 0, 1}}, 2, 5) == stratified_folds(Labels{{0, 1, 0, 1}}, 2, 5));
}

TEST_CASE("k-fold CV on separable data and its report")
{
    const auto d = separable(100, 5);
    ModelSpec spec;
    const auto r = kfold_cv(d.X, d.y, 10, spec, 8);
    REQUIRE(r.folds.size() == 10);
    CHECK(r.precision_mean >= 0.95);
    CHECK(r.recall_mean >= 0.95);
    std::size_t total = 0;
    double sum = 0, ss = 0;
    for (const auto& f : r.folds) {
        total += f.test_size;
        sum += f.precision;
    }
    for (const auto& f : r.folds) {
        ss += std::pow(f.precision - sum / 10, 2);
    }
    CHECK(total == 100);
    CHECK(r.precision_mean == Approx(sum / 10));
    CHECK(r.precision_ci == Approx(1.96 * std::sqrt(ss / 9) / std::sqrt(10.0)).scale(1.0));

    CHECK_THROWS_AS(kfold_cv(d.X.topRows(15), d.y.head(15), 10, spec, 8), DataError);
    const auto par = kfold_cv(d.X, d.y, 10, spec, 8, 3);
    CHECK(par.precision_mean == r.precision_mean);
    CHECK(par.recall_ci == r.recall_ci);
}

TEST_CASE("k-fold CV on labels without signal stays near chance")
{
    ModelSpec spec;
    spec.forest.n_trees = 50;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = random_labels(200, 100 + seed);
        const auto r = kfold_cv(d.X, d.y, 10, spec, seed);
        INFO("seed " << seed << " recall " << r.recall_mean);
        CHECK(r.recall_mean >= 0.3);
        CHECK(r.recall_mean <= 0.7);
    }
}

TEST_CASE("k-fold CV label orientation: flipping labels swaps the confusion cells")
{
    const auto d = random_labels(80, 6);
    Labels flipped = (1 - d.y.array()).matrix();
    ModelSpec spec;
    spec.forest.n_trees = 101;
    const auto r = kfold_cv(d.X, d.y, 5, spec, 17);
    const auto f = kfold_cv(d.X, flipped, 5, spec, 17);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(f.folds[i].counts.tp == r.folds[i].counts.tn);
        CHECK(f.folds[i].counts.tn == r.folds[i].counts.tp);
        CHECK(f.folds[i].counts.fp == r.folds[i].counts.fn);
        CHECK(f.folds[i].counts.fn == r.folds[i].counts.fp);
    }
}

TEST_CASE("MLP through the generic train/predict interface")
{
    const auto d = separable(60, 12);
    ModelSpec spec;
    spec.kind = ModelKind::Mlp;
    spec.mlp.epochs = 60;
    const auto model = train(spec, d.X, d.y, 3);
    REQUIRE(std::holds_alternative<MlpModel>(model));
    CHECK(accuracy(predict(model, d.X), d.y) >= 0.95);
    CHECK(predict(model, d.X, 1.1).isZero());
}

TEST_CASE("permutation importance: constant column and restoration")
{
    auto d = separable(60, 4);
    d.X.col(1).setConstant(2.0);
    const Model model = train_forest(d.X, d.y, forest_params(20, 1));
    const Eigen::MatrixXd before = d.X;
    const auto rep = permutation_importance(model, d.X, d.y, 5, 9);
    CHECK(d.X == before);
    REQUIRE(rep.features.size() == 2);
    CHECK(rep.baseline == 1.0);
    CHECK(rep.features[1].mean_drop == 0.0);
    CHECK(rep.features[1].sd == 0.0);
    CHECK(rep.features[0].mean_drop > 0.2);
    CHECK_THROWS_AS(permutation_importance(model, d.X, d.y, 0, 9), ConfigError);
}

TEST_CASE("permutation importance ranks the signal column above noise")
{
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd X(80, 2);
        Labels y(80);
        for (Eigen::Index i = 0; i < 80; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = rng.normal();
            y(i) = X(i, 0) > 0 ? 1 : 0;
        }
        if (y.sum() == 0 || y.sum() == 80) {
            continue;
        }
        const Model model = train_forest(X, y, forest_params(25, seed));
        const auto rep = permutation_importance(model, X, y, 5, seed + 1000);
        wins += rep.features[0].mean_drop > rep.features[1].mean_drop;
    }
    CHECK(wins >= 95);
}

TEST_CASE("importance sd is the population sd over repeats")
{
    // With two repeats the population sd is |d1 - d2| / 2, so mean -/+ sd recovers
    // the two accuracy drops, each a multiple of 1/n. A sample sd would not.
    const auto d = random_labels(50, 8);
    const Model model = train_forest(d.X, d.y, forest_params(15, 2));
    const auto two = permutation_importance(model, d.X, d.y, 2, 3);
    bool any_spread = false;
    for (const auto& f : two.features) {
        for (double drop : {f.mean_drop - f.sd, f.mean_drop + f.sd}) {
            CHECK(drop * 50 == Approx(std::round(drop * 50)).epsilon(1e-9).scale(1.0));
        }
        any_spread = any_spread || f.sd > 0;
    }
    CHECK(any_spread);
    for (const auto& f : permutation_importance(model, d.X, d.y, 1, 3).features) {
        CHECK(f.sd == 0.0);
    }
    const auto f1 = permutation_importance(model, d.X, d.y, 7, 3, ImportanceMetric::F1);
    CHECK(f1.baseline == Approx(score(d.y, forest_predict_labels(std::get<ForestModel>(model), d.X),
                                      ImportanceMetric::F1)));
}

TEST_CASE("model JSON round trips")
{
    const auto d = separable(50, 30);
    const auto forest = train_forest(d.X, d.y, forest_params(10, 5));
    const auto text = to_json(forest);
    const auto back = forest_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(forest_predict_labels(back, d.X) == forest_predict_labels(forest, d.X));

    MlpParams p;
    p.epochs = 5;
    const auto mlp = train_mlp(d.X, d.y, p);
    const auto mtext = to_json(mlp);
    const auto mback = mlp_from_json(mtext);
    CHECK(to_json(mback) == mtext);
    CHECK(mback.predict_proba(d.X) == mlp.predict_proba(d.X));

    CHECK_THROWS_AS(forest_from_json(mtext), ParseError);
    CHECK_THROWS_AS(mlp_from_json("{\"format\":\"vframe-mlp\",\"version\":99}"), ParseError);
}

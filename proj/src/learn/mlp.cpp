#include <vframe/learn.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vframe::learn {

template <typename Scalar>
std::vector<int> MlpNetwork<Scalar>::layer_sizes() const
{
    std::vector<int> sizes;
    if (weights.empty()) {
        return sizes;
    }
    sizes.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& w : weights) {
        sizes.push_back(static_cast<int>(w.rows()));
    }
    return sizes;
}

template <typename Scalar>
auto MlpNetwork<Scalar>::standardize(const Matrix& X) const -> Matrix
{
    return ((X.rowwise() - input_mean.transpose()).array().rowwise() * input_scale.transpose().array()).matrix();
}

template <typename Scalar>
auto MlpNetwork<Scalar>::logits(const Matrix& Z) const -> Vector
{
    Matrix a = Z;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Matrix z = (a * weights[l].transpose()).rowwise() + biases[l].transpose();
        a = l + 1 < weights.size() ? Matrix(z.cwiseMax(Scalar(0))) : z;
    }
    return a.col(0);
}

template <typename Scalar>
auto MlpNetwork<Scalar>::predict_proba(const Matrix& X) const -> Vector
{
    const Vector z = logits(standardize(X));
    return z.unaryExpr([](Scalar v) {
        return v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v)) : std::exp(v) / (Scalar(1) + std::exp(v));
    });
}

template <typename Scalar>
MlpNetwork<Scalar> make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed)
{
    if (layer_sizes.size() < 2) {
        throw ConfigError("an MLP needs at least input and output layers");
    }
    using Net = MlpNetwork<Scalar>;
    Net net;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        if (in < 1 || out < 1) {
            throw ConfigError("layer sizes must be positive");
        }
        const double bound = std::sqrt(6.0 / (in + out));
        typename Net::Matrix w(out, in);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
            }
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Net::Vector::Zero(out));
    }
    net.input_mean = Net::Vector::Zero(layer_sizes.front());
    net.input_scale = Net::Vector::Ones(layer_sizes.front());
    return net;
}

namespace {

template <typename Scalar>
Scalar softplus(Scalar x)
{
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
    return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x)) : std::exp(x) / (Scalar(1) + std::exp(x));
}

} // namespace

template <typename Scalar>
Scalar mlp_loss(const MlpNetwork<Scalar>& net, const typename MlpNetwork<Scalar>::Matrix& Z,
                const Eigen::Ref<const Labels>& y)
{
    const auto z = net.logits(Z);
    Scalar total = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        total += softplus(z(i)) - static_cast<Scalar>(y(i)) * z(i);
    }
    return total / static_cast<Scalar>(z.size());
}

template <typename Scalar>
MlpGradients<Scalar> mlp_gradients(const MlpNetwork<Scalar>& net, const typename MlpNetwork<Scalar>::Matrix& Z,
                                   const Eigen::Ref<const Labels>& y)
{
    using Matrix = typename MlpNetwork<Scalar>::Matrix;
    const std::size_t layers = net.weights.size();
    const auto n = static_cast<Scalar>(Z.rows());

    // Forward pass, keeping every layer's activations.
    std::vector<Matrix> acts;
    acts.reserve(layers + 1);
    acts.push_back(Z);
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = (acts.back() * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
        acts.push_back(l + 1 < layers ? Matrix(z.cwiseMax(Scalar(0))) : z);
    }

    MlpGradients<Scalar> g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    const auto& logit = acts.back();
    Matrix delta(logit.rows(), 1);
    for (Eigen::Index i = 0; i < logit.rows(); ++i) {
        const Scalar target = static_cast<Scalar>(y(i));
        g.loss += softplus(logit(i, 0)) - target * logit(i, 0);
        delta(i, 0) = (sigmoid(logit(i, 0)) - target) / n;
    }
    g.loss /= n;

    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta.transpose() * acts[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix back = delta * net.weights[l];
            delta = (acts[l].array() > Scalar(0)).select(back, Scalar(0));
        }
    }
    return g;
}

namespace {

void check_labels(const Eigen::MatrixXd& X, const Labels& y)
{
    if (X.rows() != y.size()) {
        throw DataError("feature rows and labels differ in length");
    }
    if (!X.allFinite()) {
        throw DataError("feature matrix contains non-finite values");
    }
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0 && y(i) != 1) {
            throw DataError("labels must be 0 or 1");
        }
        (y(i) == 1 ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
        throw DataError("training labels contain a single class");
    }
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
};

} // namespace

MlpModel train_mlp(const Eigen::MatrixXd& X, const Labels& y, const MlpParams& params, MlpTrainingLog* training_log)
{
    check_labels(X, y);
    if (params.batch_size < 1 || params.epochs < 1) {
        throw ConfigError("MLP batch size and epochs must be >= 1");
    }
    std::vector<int> sizes{static_cast<int>(X.cols())};
    sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
    sizes.push_back(1);
    MlpModel net = make_mlp<double>(sizes, derive_seed(params.seed, 0));

    const double n = static_cast<double>(X.rows());
    net.input_mean = X.colwise().mean().transpose();
    const Eigen::VectorXd var = (X.rowwise() - net.input_mean.transpose()).array().square().colwise().sum() / n;
    net.input_scale = var.unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0; });
    const Eigen::MatrixXd Z = net.standardize(X);

    AdamState adam;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        adam.mw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        adam.vw.push_back(adam.mw.back());
        adam.mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        adam.vb.push_back(adam.mb.back());
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    Rng rng(derive_seed(params.seed, 1));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(params.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(params.batch_size));
            const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            const Eigen::MatrixXd zb = Z(rows, Eigen::all);
            const Labels yb = y(rows);
            const auto g = mlp_gradients(net, zb, yb);

            ++adam.step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
            const double lr = params.learning_rate * std::sqrt(c2) / c1;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                adam.mw[l] = beta1 * adam.mw[l] + (1.0 - beta1) * g.weights[l];
                adam.vw[l] = beta2 * adam.vw[l] + (1.0 - beta2) * g.weights[l].cwiseAbs2();
                net.weights[l].array() -= lr * adam.mw[l].array() / (adam.vw[l].array().sqrt() + eps);
                adam.mb[l] = beta1 * adam.mb[l] + (1.0 - beta1) * g.biases[l];
                adam.vb[l] = beta2 * adam.vb[l] + (1.0 - beta2) * g.biases[l].cwiseAbs2();
                net.biases[l].array() -= lr * adam.mb[l].array() / (adam.vb[l].array().sqrt() + eps);
            }
        }
        const double loss = mlp_loss(net, Z, y);
        if (training_log) {
            training_log->epoch_loss.push_back(loss);
        }
        if (loss < best - params.tolerance) {
            stale = 0;
        } else if (++stale >= params.patience) {
            break;
        }
        best = std::min(best, loss);
    }
    return net;
}

Labels mlp_predict(const MlpModel& model, const Eigen::MatrixXd& X, double threshold)
{
    if (X.cols() != model.input_mean.size()) {
        throw DataError("feature matrix has " + std::to_string(X.cols()) + " columns, model expects "
                        + std::to_string(model.input_mean.size()));
    }
    const Eigen::VectorXd p = model.predict_proba(X);
    return p.unaryExpr([threshold](double v) { return v >= threshold ? 1 : 0; });
}

template struct MlpNetwork<float>;
template struct MlpNetwork<double>;
template MlpNetwork<float> make_mlp<float>(const std::vector<int>&, std::uint64_t);
template MlpNetwork<double> make_mlp<double>(const std::vector<int>&, std::uint64_t);
template MlpGradients<float> mlp_gradients<float>(const MlpNetwork<float>&, const MlpNetwork<float>::Matrix&,
                                                  const Eigen::Ref<const Labels>&);
template MlpGradients<double> mlp_gradients<double>(const MlpNetwork<double>&, const MlpNetwork<double>::Matrix&,
                                                    const Eigen::Ref<const Labels>&);
template float mlp_loss<float>(const MlpNetwork<float>&, const MlpNetwork<float>::Matrix&,
                               const Eigen::Ref<const Labels>&);
template double mlp_loss<double>(const MlpNetwork<double>&, const MlpNetwork<double>::Matrix&,
                                 const Eigen::Ref<const Labels>&);

} // namespace vframe::learn

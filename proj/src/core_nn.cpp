#include "fnbound/core_nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fnbound/errors.hpp"
#include "fnbound/rng.hpp"

namespace fnb::nn {

std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

std::string_view to_string(InitScheme s) {
    return s == InitScheme::he ? "he" : "xavier";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

InitScheme parse_init_scheme(std::string_view name) {
    if (name == "he") return InitScheme::he;
    if (name == "xavier") return InitScheme::xavier;
    throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

void NetworkConfig::validate() const {
    if (layer_sizes.size() < 2)
        throw ConfigError("network needs at least an input and an output layer");
    for (std::size_t i = 0; i < layer_sizes.size(); ++i)
        if (layer_sizes[i] == 0)
            throw ConfigError("layer " + std::to_string(i) + " has zero size");
}

std::size_t NetworkConfig::parameter_count() const {
    std::size_t k = 0;
    for (std::size_t i = 1; i < layer_sizes.size(); ++i)
        k += layer_sizes[i - 1] * layer_sizes[i] + layer_sizes[i];
    return k;
}

Network::Network(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
    for (std::size_t l = 1; l < layers_.size(); ++l)
        if (layers_[l].weight.cols() != layers_[l - 1].weight.rows())
            throw ShapeError("layer " + std::to_string(l) + " input width does not match previous output");
    for (std::size_t l = 0; l < layers_.size(); ++l)
        if (layers_[l].bias.size() != layers_[l].weight.rows())
            throw ShapeError("layer " + std::to_string(l) + " bias length does not match its output width");
}

std::size_t Network::input_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Network::output_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t Network::parameter_count() const {
    std::size_t k = 0;
    for (const auto& layer : layers_)
        k += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return k;
}

std::vector<std::size_t> Network::layer_sizes() const {
    std::vector<std::size_t> sizes;
    if (layers_.empty()) return sizes;
    sizes.push_back(input_size());
    for (const auto& layer : layers_)
        sizes.push_back(static_cast<std::size_t>(layer.weight.rows()));
    return sizes;
}

bool Network::all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& layer) {
        return layer.weight.allFinite() && layer.bias.allFinite();
    });
}

Network init_network(const NetworkConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::vector<DenseLayer> layers;
    layers.reserve(config.layer_sizes.size() - 1);
    for (std::size_t l = 1; l < config.layer_sizes.size(); ++l) {
        const auto fan_in = config.layer_sizes[l - 1];
        const auto fan_out = config.layer_sizes[l];
        const double variance = config.init_scheme == InitScheme::he
                                    ? 2.0 / static_cast<double>(fan_in)
                                    : 2.0 / static_cast<double>(fan_in + fan_out);
        std::normal_distribution<double> dist(0.0, std::sqrt(variance));
        DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(static_cast<Eigen::Index>(fan_out))};
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                layer.weight(r, c) = dist(rng);
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers), config.activation);
}

namespace {

void activate(Matrix& z, Activation a) {
    if (a == Activation::relu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh().matrix();
}

// Multiplies `grad` in place by the activation derivative evaluated at the
// pre-activation `z` (relu'(0) := 0).
void apply_activation_derivative(Matrix& grad, const Matrix& z, Activation a) {
    if (a == Activation::relu) {
        grad = (z.array() > 0.0).select(grad, 0.0);
    } else {
        const auto t = z.array().tanh();
        grad = (grad.array() * (1.0 - t * t)).matrix();
    }
}

void check_width(const Network& net, const Matrix& batch) {
    if (net.layers().empty()) throw ShapeError("network has no layers");
    if (static_cast<std::size_t>(batch.cols()) != net.input_size())
        throw ShapeError("batch width " + std::to_string(batch.cols()) + " != input size " +
                         std::to_string(net.input_size()));
}

// Pre-activations z_l for every layer plus the input; activations are
// recomputed from z when needed.
struct ForwardCache {
    std::vector<Matrix> pre;   // pre[l] = input to layer l's affine map (a_{l-1}), pre[0] = batch
    std::vector<Matrix> z;     // z[l] = affine output of layer l
};

ForwardCache forward_cached(const Network& net, const Matrix& batch) {
    ForwardCache cache;
    const auto& layers = net.layers();
    cache.pre.reserve(layers.size());
    cache.z.reserve(layers.size());
    cache.pre.push_back(batch);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z(cache.pre[l].rows(), layers[l].weight.rows());
        z.noalias() = cache.pre[l] * layers[l].weight.transpose();
        z.rowwise() += layers[l].bias.transpose();
        if (l + 1 < layers.size()) {
            Matrix a = z;
            activate(a, net.activation());
            cache.pre.push_back(std::move(a));
        }
        cache.z.push_back(std::move(z));
    }
    return cache;
}

// Backpropagates d(loss)/d(logits) through the network.
Gradients backpropagate(const Network& net, const ForwardCache& cache, Matrix grad_z,
                         bool want_input) {
    const auto& layers = net.layers();
    Gradients g;
    g.layers.resize(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        auto& out = g.layers[l];
        out.weight.noalias() = grad_z.transpose() * cache.pre[l];
        out.bias = grad_z.colwise().sum().transpose();
        if (!out.weight.allFinite() || !out.bias.allFinite())
            throw NumericError(l, "non-finite parameter gradient");
        if (l == 0 && !want_input) break;
        Matrix grad_a(grad_z.rows(), layers[l].weight.cols());
        grad_a.noalias() = grad_z * layers[l].weight;
        if (!grad_a.allFinite()) throw NumericError(l, "non-finite input gradient");
        if (l == 0) {
            g.input = std::move(grad_a);
        } else {
            apply_activation_derivative(grad_a, cache.z[l - 1], net.activation());
            grad_z = std::move(grad_a);
        }
    }
    return g;
}

Gradients compute_gradients(const Network& net, const Matrix& batch, std::span<const int> labels,
                            bool want_input) {
    check_width(net, batch);
    const ForwardCache cache = forward_cached(net, batch);
    LossResult loss = cross_entropy_loss(cache.z.back(), labels);
    Gradients g = backpropagate(net, cache, std::move(loss.grad_logits), want_input);
    g.loss = loss.loss;
    return g;
}

} // namespace

Matrix forward(const Network& net, const Matrix& batch) {
    check_width(net, batch);
    Matrix a = batch;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z(a.rows(), layers[l].weight.rows());
        z.noalias() = a * layers[l].weight.transpose();
        z.rowwise() += layers[l].bias.transpose();
        if (l + 1 < layers.size()) activate(z, net.activation());
        a = std::move(z);
    }
    return a;
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = std::log((logits.row(r).array() - mx).exp().sum());
        out.row(r) = (logits.row(r).array() - mx - lse).matrix();
    }
    return out;
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
        throw ShapeError("logit rows " + std::to_string(logits.rows()) + " != label count " +
                         std::to_string(labels.size()));
    const auto classes = logits.cols();
    for (const int y : labels)
        if (y < 0 || y >= classes)
            throw DataError("label " + std::to_string(y) + " outside {0.." + std::to_string(classes - 1) + "}");
    const Matrix logp = log_softmax(logits);
    const auto batch = static_cast<double>(logits.rows());
    LossResult result;
    result.grad_logits = logp.array().exp().matrix();
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        total -= logp(r, labels[r]);
        result.grad_logits(r, labels[r]) -= 1.0;
    }
    result.loss = logits.rows() > 0 ? total / batch : 0.0;
    if (logits.rows() > 0) result.grad_logits /= batch;
    return result;
}

Gradients backward(const Network& net, const Matrix& batch, std::span<const int> labels) {
    return compute_gradients(net, batch, labels, true);
}

std::vector<int> predict(const Network& net, const Matrix& batch) {
    const Matrix logits = forward(net, batch);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double evaluate(const Network& net, const data::LabeledDataset& dataset) {
    if (dataset.size() == 0) throw DataError("cannot evaluate on an empty dataset");
    const auto predicted = predict(net, dataset.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        correct += predicted[i] == dataset.labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Vector saliency_map(const Network& net, std::span<const double> sample, int class_index) {
    if (class_index < 0 || static_cast<std::size_t>(class_index) >= net.output_size())
        throw ShapeError("class index " + std::to_string(class_index) + " out of range");
    Matrix batch(1, static_cast<Eigen::Index>(sample.size()));
    for (std::size_t i = 0; i < sample.size(); ++i) batch(0, static_cast<Eigen::Index>(i)) = sample[i];
    check_width(net, batch);
    const ForwardCache cache = forward_cached(net, batch);
    Matrix seed = Matrix::Zero(1, static_cast<Eigen::Index>(net.output_size()));
    seed(0, class_index) = 1.0;
    const Gradients g = backpropagate(net, cache, std::move(seed), true);
    return g.input.row(0).transpose().cwiseAbs();
}

Vector flatten_weights(const Network& net) {
    Vector flat(static_cast<Eigen::Index>(net.parameter_count()));
    Eigen::Index pos = 0;
    for (const auto& layer : net.layers()) {
        // Row-major storage makes the matrix data already in row order.
        flat.segment(pos, layer.weight.size()) =
            Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
        pos += layer.weight.size();
        flat.segment(pos, layer.bias.size()) = layer.bias;
        pos += layer.bias.size();
    }
    return flat;
}

Network unflatten_weights(std::span<const std::size_t> layer_sizes, Activation activation,
                          const Vector& flat) {
    NetworkConfig shape{{layer_sizes.begin(), layer_sizes.end()}, activation, InitScheme::he, 0};
    shape.validate();
    if (static_cast<std::size_t>(flat.size()) != shape.parameter_count())
        throw ShapeError("flat vector has " + std::to_string(flat.size()) + " entries, expected " +
                         std::to_string(shape.parameter_count()));
    std::vector<DenseLayer> layers;
    Eigen::Index pos = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(layer_sizes[l]);
        const auto cols = static_cast<Eigen::Index>(layer_sizes[l - 1]);
        DenseLayer layer{Matrix(rows, cols), Vector(rows)};
        layer.weight = Eigen::Map<const Matrix>(flat.data() + pos, rows, cols);
        pos += rows * cols;
        layer.bias = flat.segment(pos, rows);
        pos += rows;
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers), activation);
}

void TrainSchedule::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(lr_initial >= 0.0) || !std::isfinite(lr_initial)) throw ConfigError("lr must be finite and >= 0");
    if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0)) throw ConfigError("lr_drop_factor must be in (0,1]");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
}

double TrainSchedule::learning_rate(std::size_t epoch) const {
    return epoch <= lr_drop_epoch ? lr_initial : lr_initial * lr_drop_factor;
}

TrainResult train(Network net, const data::LabeledDataset& dataset, const TrainSchedule& schedule,
                  std::uint64_t seed, const TrainOptions& options) {
    schedule.validate();
    dataset.validate();
    if (net.layers().empty()) throw ConfigError("network has no layers");
    if (static_cast<std::size_t>(dataset.class_count) != net.output_size())
        throw ConfigError("dataset has " + std::to_string(dataset.class_count) +
                          " classes but the network outputs " + std::to_string(net.output_size()));
    if (dataset.feature_count() != net.input_size())
        throw ShapeError("dataset width " + std::to_string(dataset.feature_count()) +
                         " != input size " + std::to_string(net.input_size()));

    const std::size_t m = dataset.size();
    const std::size_t n = dataset.feature_count();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, stream::shuffle));

    std::vector<DenseLayer> velocity;
    for (const auto& layer : net.layers())
        velocity.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                            Vector::Zero(layer.bias.size())});

    TrainResult result;
    auto& record = result.record;
    Matrix batch;
    std::vector<int> batch_labels;
    for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const double lr = schedule.learning_rate(epoch);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < m; start += schedule.batch_size) {
            const std::size_t count = std::min(schedule.batch_size, m - start);
            batch.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
            batch_labels.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                batch.row(static_cast<Eigen::Index>(i)) =
                    dataset.features.row(static_cast<Eigen::Index>(order[start + i]));
                batch_labels[i] = dataset.labels[order[start + i]];
            }
            Gradients g;
            try {
                g = compute_gradients(net, batch, batch_labels, false);
            } catch (const NumericError& e) {
                throw TrainingError(epoch, e.what());
            }
            if (!std::isfinite(g.loss)) throw TrainingError(epoch, "non-finite training loss");
            loss_sum += g.loss * static_cast<double>(count);
            auto& layers = net.layers();
            for (std::size_t l = 0; l < layers.size(); ++l) {
                velocity[l].weight = schedule.momentum * velocity[l].weight + g.layers[l].weight;
                velocity[l].bias = schedule.momentum * velocity[l].bias + g.layers[l].bias;
                layers[l].weight -= lr * velocity[l].weight;
                layers[l].bias -= lr * velocity[l].bias;
            }
        }
        if (!net.all_finite()) throw TrainingError(epoch, "weights became non-finite");
        record.train_loss.push_back(loss_sum / static_cast<double>(m));
        record.accuracy.push_back(evaluate(net, options.eval_set ? *options.eval_set : dataset));
        if (options.keep_snapshots) record.snapshots.push_back(flatten_weights(net));
    }
    result.net = std::move(net);
    return result;
}

} // namespace fnb::nn

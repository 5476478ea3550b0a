#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "fnbound/datasets.hpp"
#include "fnbound/linalg.hpp"

namespace fnb::nn {

enum class Activation { relu, tanh };
enum class InitScheme { he, xavier };

std::string_view to_string(Activation a);
std::string_view to_string(InitScheme s);
Activation parse_activation(std::string_view name);
InitScheme parse_init_scheme(std::string_view name);

struct NetworkConfig {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., output
    Activation activation = Activation::relu;
    InitScheme init_scheme = InitScheme::he;
    std::uint64_t seed = 0;

    // ConfigError on fewer than two layers or a zero-sized layer.
    void validate() const;
    std::size_t parameter_count() const;
};

// weight is (fan_out x fan_in); a layer computes a * W^T + b.
struct DenseLayer {
    Matrix weight;
    Vector bias;
};

class Network {
public:
    Network() = default;
    Network(std::vector<DenseLayer> layers, Activation activation);

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    Activation activation() const { return activation_; }

    std::size_t input_size() const;
    std::size_t output_size() const;
    std::size_t parameter_count() const;
    std::vector<std::size_t> layer_sizes() const;
    bool all_finite() const;

private:
    std::vector<DenseLayer> layers_;
    Activation activation_ = Activation::relu;
};

// Weights ~ N(0, 2/fan_in) (he) or N(0, 2/(fan_in+fan_out)) (xavier), drawn
// layer by layer in row-major order from a generator seeded with config.seed.
// Biases start at zero.
Network init_network(const NetworkConfig& config);

// Logits, one row per sample. ShapeError when the batch width differs from
// the input layer.
Matrix forward(const Network& net, const Matrix& batch);

struct LossResult {
    double loss = 0.0;   // mean over the batch of -ln softmax(logits)[label], nats
    Matrix grad_logits;  // (softmax - onehot) / batch_size
};

// Softmax uses max-subtraction. DataError on a label outside {0..c-1}.
LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

// Row-wise log-softmax.
Matrix log_softmax(const Matrix& logits);

struct Gradients {
    std::vector<DenseLayer> layers;  // same shapes as the network
    Matrix input;                    // d loss / d batch
    double loss = 0.0;
};

// Exact gradients of cross_entropy_loss. NumericError carrying the layer
// index when a gradient entry is non-finite.
Gradients backward(const Network& net, const Matrix& batch, std::span<const int> labels);

// Argmax of each logit row; ties go to the lowest class index.
std::vector<int> predict(const Network& net, const Matrix& batch);

// Fraction of correct argmax predictions. DataError on an empty dataset.
double evaluate(const Network& net, const data::LabeledDataset& dataset);

// |d logit[class_index] / d x| for one sample.
Vector saliency_map(const Network& net, std::span<const double> sample, int class_index);

// Layer-major: for each layer, the weight matrix row by row, then its bias.
Vector flatten_weights(const Network& net);
Network unflatten_weights(std::span<const std::size_t> layer_sizes, Activation activation,
                          const Vector& flat);

struct TrainSchedule {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double lr_initial = 0.05;
    // Epochs are numbered from 1. Epochs <= lr_drop_epoch use lr_initial,
    // later ones use lr_initial * lr_drop_factor. 0 drops from the start;
    // a value >= epochs never drops.
    std::size_t lr_drop_epoch = 20;
    double lr_drop_factor = 0.1;
    double momentum = 0.9;

    void validate() const;
    double learning_rate(std::size_t epoch) const;
};

struct TrainRecord {
    std::vector<double> train_loss;  // mean sample loss seen during each epoch
    std::vector<double> accuracy;    // on the evaluation set after each epoch
    std::vector<Vector> snapshots;   // flattened weights after each epoch, when requested
};

struct TrainOptions {
    // Accuracy is measured on this set; on the training set when null.
    const data::LabeledDataset* eval_set = nullptr;
    bool keep_snapshots = false;
};

struct TrainResult {
    Network net;
    TrainRecord record;
};

// Momentum SGD over mini-batches reshuffled each epoch; the shuffle stream is
// derived only from `seed`. TrainingError at the first epoch whose loss or
// weights stop being finite.
TrainResult train(Network net, const data::LabeledDataset& dataset, const TrainSchedule& schedule,
                  std::uint64_t seed, const TrainOptions& options = {});

} // namespace fnb::nn

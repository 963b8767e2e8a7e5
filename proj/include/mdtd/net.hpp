#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <variant>
#include <vector>

#include "mdtd/tensor.hpp"

namespace mdtd {

struct Dense {
    std::size_t in = 0, out = 0;
    std::vector<double> weight;  // out x in, row-major
    std::vector<double> bias;    // out
};

struct Conv2d {
    std::size_t in_ch = 0, out_ch = 0, kh = 0, kw = 0, stride = 1;
    std::vector<double> kernel;  // out_ch x in_ch x kh x kw
    std::vector<double> bias;    // out_ch
};

struct Relu {};

struct MaxPool2d {
    std::size_t pool = 2;  // window and stride
};

struct Flatten {};

using Layer = std::variant<Dense, Conv2d, Relu, MaxPool2d, Flatten>;

struct Network {
    std::vector<Layer> layers;
    std::vector<std::size_t> input_shape;
    std::size_t num_classes = 0;
};

struct Sample {
    Tensor x;
    std::size_t label = 0;
};

struct Dataset {
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};

// Per-layer parameter gradients, same layout as the layer's parameters.
struct LayerGrad {
    std::vector<double> weight;
    std::vector<double> bias;
};

struct Gradients {
    std::vector<LayerGrad> layers;
};

struct TrainResult {
    Network net;
    std::vector<double> loss_history;  // mean loss per epoch
};

// Output shape of a layer given its input shape; throws on incompatibility.
std::vector<std::size_t> layer_output_shape(const Layer& layer,
                                            const std::vector<std::size_t>& in_shape);

// Checks that consecutive layer shapes compose and the final output has
// num_classes >= 2 elements.
void validate(const Network& net);

Tensor forward(const Network& net, const Tensor& x);
std::size_t predict(const Network& net, const Tensor& x);

// Softmax cross-entropy, -log softmax(logits)[y].
double loss(const Network& net, const Tensor& x, std::size_t y);

// Exact reverse-mode gradient of loss w.r.t. the input.
Tensor grad_input(const Network& net, const Tensor& x, std::size_t y);

// Mean parameter gradient over the batch.
Gradients grad_params(const Network& net, const std::vector<Sample>& batch);

// Activation feeding the final layer; requires >= 2 layers.
Tensor penultimate_features(const Network& net, const Tensor& x);

// Optional per-sample transform applied before each gradient step
// (used for adversarial training).
using SamplePerturb = std::function<Tensor(const Network&, const Tensor&, std::size_t)>;

TrainResult train(const Network& net, const Dataset& ds, const TrainConfig& cfg,
                  const SamplePerturb& perturb = nullptr);

std::vector<double> softmax(const std::vector<double>& logits);

// Reference architectures. Weights initialized uniform in
// +/- sqrt(6 / (fan_in + fan_out)), seeded.
Network make_mlp(const std::vector<std::size_t>& input_shape,
                 const std::vector<std::size_t>& hidden, std::size_t num_classes,
                 std::uint64_t seed);
Network make_cnn(const std::vector<std::size_t>& input_shape, std::size_t filters,
                 std::size_t num_classes, std::uint64_t seed);

}  // namespace mdtd

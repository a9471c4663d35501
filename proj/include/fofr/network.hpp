#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fofr/types.hpp"

namespace fofr {

enum class Activation { Elu, Relu, Tanh };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);

/// elu(x) = x for x >= 0, e^x - 1 otherwise.
inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }

struct NetworkSpec {
    Index input_dim = 1;
    std::vector<Index> hidden_widths{16};
    Index output_dim = 1;
    Activation activation = Activation::Elu;
    std::uint64_t seed = 0;
};

void validate_spec(const NetworkSpec& spec);

struct DenseLayer {
    Matrix weight;  ///< out x in
    Vector bias;    ///< out
};

/// Fully connected network: hidden layers use `activation`, the output layer is linear.
struct NetworkParams {
    Activation activation = Activation::Elu;
    std::vector<DenseLayer> layers;

    Index input_dim() const { return layers.front().weight.cols(); }
    Index output_dim() const { return layers.back().weight.rows(); }
    /// Number of scalars actually stored.
    std::size_t scalar_count() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, seeded.
NetworkParams init_network(const NetworkSpec& spec);

Vector forward(const NetworkParams& params, const Vector& input);
/// Row i of the result is the network output for row i of `inputs`.
Matrix forward(const NetworkParams& params, const Matrix& inputs);

struct NetworkGradients {
    std::vector<DenseLayer> layers;
    double loss = 0.0;
};

/// Mean squared error over samples and output coordinates, and its exact
/// gradient. Rows of `inputs` / `targets` are samples.
NetworkGradients gradients(const NetworkParams& params, const Matrix& inputs, const Matrix& targets);
double mse_loss(const NetworkParams& params, const Matrix& inputs, const Matrix& targets);

enum class OptimizerKind { Sgd, Momentum, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct EarlyStop {
    std::size_t patience = 200;
    double validation_fraction = 0.2;
};

struct TrainConfig {
    std::size_t epochs = 2000;
    std::size_t batch_size = 32;
    double learning_rate = 1e-2;
    OptimizerConfig optimizer;
    std::optional<EarlyStop> early_stop;
    std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& config);

struct TrainingLog {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

struct TrainedNetwork {
    NetworkParams params;
    TrainingLog log;
};

/// Mini-batch MSE training. Shuffling and the validation split draw from a
/// stream seeded by `config.seed`, so identical inputs give identical output.
TrainedNetwork train_network(const NetworkSpec& spec, const TrainConfig& config, const Matrix& inputs,
                             const Matrix& targets);

std::size_t count_params(const NetworkSpec& spec);

}  // namespace fofr

#include "fofr/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fofr/error.hpp"

namespace fofr {

namespace {

Matrix activate(Activation a, const Matrix& z) {
    switch (a) {
    case Activation::Elu: return z.unaryExpr([](double x) { return elu(x); });
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    }
    return z;
}

Matrix activate_derivative(Activation a, const Matrix& z) {
    switch (a) {
    case Activation::Elu: return z.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : std::exp(x); });
    case Activation::Relu: return z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
    case Activation::Tanh: return z.unaryExpr([](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        });
    }
    return Matrix::Ones(z.rows(), z.cols());
}

void check_inputs(const NetworkParams& params, const Matrix& inputs) {
    if (params.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
    if (inputs.cols() != params.input_dim())
        throw Error(ErrorCode::ShapeMismatch, "input width " + std::to_string(inputs.cols()) + " but network expects " +
                                                  std::to_string(params.input_dim()));
}

/// Pre-activations (z) and activations (a) per layer, samples as columns.
struct ForwardTrace {
    std::vector<Matrix> z;
    std::vector<Matrix> a;  // a[0] is the input
};

ForwardTrace trace(const NetworkParams& params, const Matrix& inputs) {
    ForwardTrace t;
    t.a.push_back(inputs.transpose());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Matrix z = layer.weight * t.a.back();
        z.colwise() += layer.bias;
        const bool last = l + 1 == params.layers.size();
        t.a.push_back(last ? z : activate(params.activation, z));
        t.z.push_back(std::move(z));
    }
    return t;
}

double batch_loss(const Matrix& outputs_t, const Matrix& targets) {
    return (outputs_t - targets.transpose()).squaredNorm() / static_cast<double>(targets.size());
}

struct OptimizerState {
    std::vector<DenseLayer> first, second;
    std::size_t steps = 0;
};

std::vector<DenseLayer> zeros_like(const NetworkParams& p) {
    std::vector<DenseLayer> out;
    for (const auto& l : p.layers)
        out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return out;
}

void step(NetworkParams& params, const NetworkGradients& g, const TrainConfig& config, OptimizerState& state) {
    const auto& opt = config.optimizer;
    const double lr = config.learning_rate;
    ++state.steps;
    switch (opt.kind) {
    case OptimizerKind::Sgd:
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            params.layers[l].weight -= lr * g.layers[l].weight;
            params.layers[l].bias -= lr * g.layers[l].bias;
        }
        break;
    case OptimizerKind::Momentum:
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto& v = state.first[l];
            v.weight = opt.momentum * v.weight + g.layers[l].weight;
            v.bias = opt.momentum * v.bias + g.layers[l].bias;
            params.layers[l].weight -= lr * v.weight;
            params.layers[l].bias -= lr * v.bias;
        }
        break;
    case OptimizerKind::Adam: {
        const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.steps));
        const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.steps));
        auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
            m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
            v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseAbs2();
            param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
        };
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            update(params.layers[l].weight, state.first[l].weight, state.second[l].weight, g.layers[l].weight);
            update(params.layers[l].bias, state.first[l].bias, state.second[l].bias, g.layers[l].bias);
        }
        break;
    }
    }
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Index>(end - begin), m.cols());
    for (std::size_t k = begin; k < end; ++k) out.row(static_cast<Index>(k - begin)) = m.row(rows[k]);
    return out;
}

}  // namespace

std::string to_string(Activation activation) {
    switch (activation) {
    case Activation::Elu: return "elu";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    }
    return "elu";
}

Activation parse_activation(const std::string& name) {
    if (name == "elu") return Activation::Elu;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw Error(ErrorCode::BadConfig, "unknown activation '" + name + "'");
}

void validate_spec(const NetworkSpec& spec) {
    if (spec.input_dim < 1 || spec.output_dim < 1) throw Error(ErrorCode::BadConfig, "network dims must be >= 1");
    for (auto w : spec.hidden_widths)
        if (w < 1) throw Error(ErrorCode::BadConfig, "hidden widths must be >= 1");
}

std::size_t NetworkParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::size_t count_params(const NetworkSpec& spec) {
    validate_spec(spec);
    std::size_t n = 0;
    Index fan_in = spec.input_dim;
    auto widths = spec.hidden_widths;
    widths.push_back(spec.output_dim);
    for (auto out : widths) {
        n += static_cast<std::size_t>(fan_in * out + out);
        fan_in = out;
    }
    return n;
}

NetworkParams init_network(const NetworkSpec& spec) {
    validate_spec(spec);
    std::mt19937_64 rng(spec.seed);
    NetworkParams params;
    params.activation = spec.activation;
    Index fan_in = spec.input_dim;
    auto widths = spec.hidden_widths;
    widths.push_back(spec.output_dim);
    for (auto out : widths) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-scale, scale);
        DenseLayer layer{Matrix(out, fan_in), Vector::Zero(out)};
        for (Index r = 0; r < out; ++r)
            for (Index c = 0; c < fan_in; ++c) layer.weight(r, c) = dist(rng);
        params.layers.push_back(std::move(layer));
        fan_in = out;
    }
    return params;
}

Matrix forward(const NetworkParams& params, const Matrix& inputs) {
    check_inputs(params, inputs);
    return trace(params, inputs).a.back().transpose();
}

Vector forward(const NetworkParams& params, const Vector& input) {
    return forward(params, Matrix(input.transpose())).row(0).transpose();
}

double mse_loss(const NetworkParams& params, const Matrix& inputs, const Matrix& targets) {
    check_inputs(params, inputs);
    return batch_loss(trace(params, inputs).a.back(), targets);
}

NetworkGradients gradients(const NetworkParams& params, const Matrix& inputs, const Matrix& targets) {
    check_inputs(params, inputs);
    if (targets.rows() != inputs.rows() || targets.cols() != params.output_dim())
        throw Error(ErrorCode::ShapeMismatch, "targets must be " + std::to_string(inputs.rows()) + "x" +
                                                  std::to_string(params.output_dim()));
    const auto t = trace(params, inputs);
    NetworkGradients g;
    g.layers.resize(params.layers.size());
    g.loss = batch_loss(t.a.back(), targets);

    Matrix delta = (2.0 / static_cast<double>(targets.size())) * (t.a.back() - targets.transpose());
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        g.layers[l].weight = delta * t.a[l].transpose();
        g.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
            delta = (params.layers[l].weight.transpose() * delta)
                        .cwiseProduct(activate_derivative(params.activation, t.z[l - 1]));
        }
    }
    return g;
}

void validate_train_config(const TrainConfig& config) {
    if (config.batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
    if (!(config.learning_rate > 0.0)) throw Error(ErrorCode::BadConfig, "learning_rate must be > 0");
    if (config.early_stop) {
        const double f = config.early_stop->validation_fraction;
        if (!(f >= 0.0 && f <= 0.5)) throw Error(ErrorCode::BadConfig, "validation fraction must lie in [0, 0.5]");
    }
}

TrainedNetwork train_network(const NetworkSpec& spec, const TrainConfig& config, const Matrix& inputs,
                             const Matrix& targets) {
    validate_train_config(config);
    if (inputs.rows() < 2) throw Error(ErrorCode::ShapeMismatch, "training needs at least 2 samples");
    if (inputs.cols() != spec.input_dim || targets.cols() != spec.output_dim || targets.rows() != inputs.rows())
        throw Error(ErrorCode::ShapeMismatch, "training data shape does not match the network spec");

    std::mt19937_64 rng(config.seed);
    std::vector<Index> order(static_cast<std::size_t>(inputs.rows()));
    std::iota(order.begin(), order.end(), Index{0});

    std::size_t n_val = 0;
    if (config.early_stop && config.early_stop->validation_fraction > 0.0) {
        std::shuffle(order.begin(), order.end(), rng);
        n_val = static_cast<std::size_t>(
            std::ceil(config.early_stop->validation_fraction * static_cast<double>(order.size())));
        n_val = std::min(n_val, order.size() - 1);
    }
    const std::size_t n_train = order.size() - n_val;
    std::vector<Index> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Index> val_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    const Matrix train_x = take_rows(inputs, train_rows, 0, n_train);
    const Matrix train_t = take_rows(targets, train_rows, 0, n_train);
    const Matrix val_x = take_rows(inputs, val_rows, 0, n_val);
    const Matrix val_t = take_rows(targets, val_rows, 0, n_val);

    TrainedNetwork result{init_network(spec), {}};
    NetworkParams& params = result.params;
    NetworkParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    OptimizerState state{zeros_like(params), zeros_like(params), 0};
    const std::size_t batch = std::min(config.batch_size, n_train);
    std::vector<Index> perm(n_train);
    std::iota(perm.begin(), perm.end(), Index{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t begin = 0; begin < n_train; begin += batch) {
            const std::size_t end = std::min(begin + batch, n_train);
            const auto g = gradients(params, take_rows(train_x, perm, begin, end), take_rows(train_t, perm, begin, end));
            step(params, g, config, state);
        }
        const double train_loss = mse_loss(params, train_x, train_t);
        if (!std::isfinite(train_loss))
            throw Error(ErrorCode::DivergenceDetected, "training loss became non-finite at epoch " +
                                                           std::to_string(epoch + 1));
        result.log.train_loss.push_back(train_loss);
        result.log.epochs_run = epoch + 1;
        if (n_val > 0) {
            const double val_loss = mse_loss(params, val_x, val_t);
            result.log.validation_loss.push_back(val_loss);
            if (val_loss < best_val) {
                best_val = val_loss;
                best = params;
                result.log.best_epoch = epoch + 1;
                since_best = 0;
            } else if (++since_best >= config.early_stop->patience) {
                break;
            }
        }
    }
    if (n_val > 0) {
        params = best;
    } else {
        result.log.best_epoch = result.log.epochs_run;
    }
    return result;
}

}  // namespace fofr

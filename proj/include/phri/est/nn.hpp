#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace phri::est::nn {

/// Batched sequence tensor: rows are channels, column t*batch + b holds step t
/// of sample b.
struct Tensor {
    Eigen::MatrixXd value;
    int steps = 1;
    int batch() const { return steps > 0 ? static_cast<int>(value.cols()) / steps : 0; }
    int channels() const { return static_cast<int>(value.rows()); }
};

struct Param {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool regularized = false;  // kernels are, biases are not
};

struct Shape {
    int channels = 0;
    int steps = 0;
    bool operator==(const Shape&) const = default;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Shape output_shape(Shape in) const = 0;
    /// Caches whatever backward() needs.
    virtual Tensor forward(const Tensor& x) = 0;
    /// Accumulates parameter gradients and returns d loss / d input.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Param*> params() { return {}; }
    virtual void init(std::mt19937_64&) {}
    virtual nlohmann::json config() const { return {{"kind", kind()}}; }
};

class Dense final : public Layer {
public:
    Dense(int in, int out);
    std::string kind() const override { return "dense"; }
    Shape output_shape(Shape in) const override;
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;
    std::vector<Param*> params() override { return {&w_, &b_}; }
    void init(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int in_, out_;
    Param w_, b_;
    Tensor x_;
};

/// Valid 1-D convolution over steps.
class Conv1D final : public Layer {
public:
    Conv1D(int in, int filters, int width);
    std::string kind() const override { return "conv1d"; }
    Shape output_shape(Shape in) const override;
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;
    std::vector<Param*> params() override { return {&w_, &b_}; }
    void init(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int in_, filters_, width_;
    Param w_, b_;  // w: filters x (width * in), tap k occupies columns [k*in, (k+1)*in)
    Tensor x_;
};

/// Single LSTM layer returning the last hidden state (steps = 1).
class Lstm final : public Layer {
public:
    Lstm(int in, int hidden);
    std::string kind() const override { return "lstm"; }
    Shape output_shape(Shape in) const override;
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;
    std::vector<Param*> params() override { return {&w_, &u_, &b_}; }
    void init(std::mt19937_64& rng) override;
    nlohmann::json config() const override;

private:
    int in_, hidden_;
    Param w_, u_, b_;  // gate order i, f, g, o
    Tensor x_;
    std::vector<Eigen::MatrixXd> gates_;  // activated gates per step (4H x B)
    std::vector<Eigen::MatrixXd> c_;      // cell state per step, c_[0] = initial
    std::vector<Eigen::MatrixXd> h_;      // hidden state per step, h_[0] = initial
};

class Relu final : public Layer {
public:
    std::string kind() const override { return "relu"; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;

private:
    Tensor y_;
};

/// Column-wise softmax over channels.
class Softmax final : public Layer {
public:
    std::string kind() const override { return "softmax"; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;

private:
    Tensor y_;
};

/// Keeps every `stride`-th step starting from step 0.
class Subsample final : public Layer {
public:
    explicit Subsample(int stride = 2) : stride_(stride) {}
    std::string kind() const override { return "subsample"; }
    Shape output_shape(Shape in) const override;
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;
    nlohmann::json config() const override { return {{"kind", kind()}, {"stride", stride_}}; }

private:
    int stride_;
    int in_steps_ = 0;
};

/// (C x T*B) -> (C*T x B), row t*C + c.
class Flatten final : public Layer {
public:
    std::string kind() const override { return "flatten"; }
    Shape output_shape(Shape in) const override { return {in.channels * in.steps, 1}; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& g) override;

private:
    int channels_ = 0;
    int steps_ = 0;
};

enum class Loss { CrossEntropy, MeanSquared };

/// Sequential network with L1/L2 kernel penalties.
class Network {
public:
    Network() = default;
    Network(Shape input, Loss loss) : input_(input), loss_(loss) {}
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    Network& add(std::unique_ptr<Layer> layer);
    void init(std::uint64_t seed);

    Tensor forward(const Tensor& x);
    /// Data loss (mean over the batch) plus penalties; fills parameter gradients.
    double loss_and_grad(const Tensor& x, const Eigen::MatrixXd& target);
    /// Loss without touching gradients.
    double loss(const Tensor& x, const Eigen::MatrixXd& target);
    double penalty() const;

    std::vector<Param*> params();
    Shape input_shape() const { return input_; }
    Shape output_shape() const;
    Loss loss_kind() const { return loss_; }
    double l1 = 0.0;
    double l2 = 0.0;

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

private:
    double data_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target) const;

    Shape input_{};
    Loss loss_ = Loss::MeanSquared;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Samples stored one per column, flattened with row t*C + c.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;  // outputs x samples
    std::vector<int> groups;  // e.g. trial index, used for the validation split
    Shape shape{};
    long size() const { return inputs.cols(); }
};

/// Gathers the listed samples into a batched tensor.
Tensor make_batch(const Dataset& d, const std::vector<long>& idx, long from, long to);

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    int batch = 64;
    double learning_rate = 1e-4;
    double decay = 0.95;  // per epoch
    int epochs = 40;
    double validation_fraction = 0.05;
    int patience = 10;
    Optimizer optimizer = Optimizer::Adam;
    std::uint64_t seed = 1;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    bool stopped_early = false;
};

/// Minibatch training with per-epoch learning-rate decay, a validation split by
/// group, early stopping and restoration of the best weights. Throws
/// TrainingAborted when the loss becomes non-finite.
TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view s);

}  // namespace phri::est::nn

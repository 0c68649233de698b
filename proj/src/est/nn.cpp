#include "phri/est/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"
#include "phri/est/codec.hpp"

namespace phri::est::nn {

using Eigen::MatrixXd;

namespace {

void glorot(MatrixXd& w, int fan_in, int fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
}

Param make_param(std::string name, Eigen::Index rows, Eigen::Index cols, bool regularized) {
    Param p;
    p.name = std::move(name);
    p.value = MatrixXd::Zero(rows, cols);
    p.grad = MatrixXd::Zero(rows, cols);
    p.regularized = regularized;
    return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---- Dense ----

Dense::Dense(int in, int out)
    : in_(in), out_(out), w_(make_param("kernel", out, in, true)), b_(make_param("bias", out, 1, false)) {}

Shape Dense::output_shape(Shape in) const {
    if (in.channels != in_) throw ConfigError("dense layer input width mismatch");
    return {out_, in.steps};
}

Tensor Dense::forward(const Tensor& x) {
    x_ = x;
    Tensor y{w_.value * x.value, x.steps};
    y.value.colwise() += b_.value.col(0);
    return y;
}

Tensor Dense::backward(const Tensor& g) {
    w_.grad.noalias() += g.value * x_.value.transpose();
    b_.grad.noalias() += g.value.rowwise().sum();
    return {w_.value.transpose() * g.value, g.steps};
}

void Dense::init(std::mt19937_64& rng) {
    glorot(w_.value, in_, out_, rng);
    b_.value.setZero();
}

nlohmann::json Dense::config() const { return {{"kind", kind()}, {"in", in_}, {"out", out_}}; }

// ---- Conv1D ----

Conv1D::Conv1D(int in, int filters, int width)
    : in_(in),
      filters_(filters),
      width_(width),
      w_(make_param("kernel", filters, static_cast<Eigen::Index>(width) * in, true)),
      b_(make_param("bias", filters, 1, false)) {}

Shape Conv1D::output_shape(Shape in) const {
    if (in.channels != in_) throw ConfigError("conv1d input channel mismatch");
    if (in.steps < width_) throw ConfigError("conv1d input shorter than the filter");
    return {filters_, in.steps - width_ + 1};
}

Tensor Conv1D::forward(const Tensor& x) {
    x_ = x;
    const int b = x.batch();
    const int t_out = x.steps - width_ + 1;
    Tensor y{MatrixXd(filters_, static_cast<Eigen::Index>(t_out) * b), t_out};
    y.value.colwise() = b_.value.col(0);
    for (int k = 0; k < width_; ++k)
        y.value.noalias() += w_.value.middleCols(static_cast<Eigen::Index>(k) * in_, in_) *
                             x.value.middleCols(static_cast<Eigen::Index>(k) * b, static_cast<Eigen::Index>(t_out) * b);
    return y;
}

Tensor Conv1D::backward(const Tensor& g) {
    const int b = x_.batch();
    const int t_out = g.steps;
    Tensor dx{MatrixXd::Zero(in_, x_.value.cols()), x_.steps};
    b_.grad.noalias() += g.value.rowwise().sum();
    for (int k = 0; k < width_; ++k) {
        const auto xs = x_.value.middleCols(static_cast<Eigen::Index>(k) * b, static_cast<Eigen::Index>(t_out) * b);
        w_.grad.middleCols(static_cast<Eigen::Index>(k) * in_, in_).noalias() += g.value * xs.transpose();
        dx.value.middleCols(static_cast<Eigen::Index>(k) * b, static_cast<Eigen::Index>(t_out) * b).noalias() +=
            w_.value.middleCols(static_cast<Eigen::Index>(k) * in_, in_).transpose() * g.value;
    }
    return dx;
}

void Conv1D::init(std::mt19937_64& rng) {
    glorot(w_.value, in_ * width_, filters_ * width_, rng);
    b_.value.setZero();
}

nlohmann::json Conv1D::config() const {
    return {{"kind", kind()}, {"in", in_}, {"filters", filters_}, {"width", width_}};
}

// ---- LSTM ----

Lstm::Lstm(int in, int hidden)
    : in_(in),
      hidden_(hidden),
      w_(make_param("kernel", 4 * hidden, in, true)),
      u_(make_param("recurrent_kernel", 4 * hidden, hidden, true)),
      b_(make_param("bias", 4 * hidden, 1, false)) {}

Shape Lstm::output_shape(Shape in) const {
    if (in.channels != in_) throw ConfigError("lstm input width mismatch");
    return {hidden_, 1};
}

Tensor Lstm::forward(const Tensor& x) {
    x_ = x;
    const int b = x.batch();
    const int h = hidden_;
    gates_.assign(static_cast<std::size_t>(x.steps), MatrixXd());
    c_.assign(static_cast<std::size_t>(x.steps) + 1, MatrixXd::Zero(h, b));
    h_.assign(static_cast<std::size_t>(x.steps) + 1, MatrixXd::Zero(h, b));
    // Input projections for all steps at once.
    MatrixXd zx = w_.value * x.value;
    zx.colwise() += b_.value.col(0);
    for (int t = 0; t < x.steps; ++t) {
        const auto st = static_cast<std::size_t>(t);
        MatrixXd z = zx.middleCols(static_cast<Eigen::Index>(t) * b, b);
        z.noalias() += u_.value * h_[st];
        z.topRows(2 * h) = z.topRows(2 * h).unaryExpr(&sigmoid);
        z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh();
        z.bottomRows(h) = z.bottomRows(h).unaryExpr(&sigmoid);
        c_[st + 1] = z.middleRows(h, h).cwiseProduct(c_[st]) + z.topRows(h).cwiseProduct(z.middleRows(2 * h, h));
        h_[st + 1] = z.bottomRows(h).cwiseProduct(c_[st + 1].array().tanh().matrix());
        gates_[st] = std::move(z);
    }
    return {h_.back(), 1};
}

Tensor Lstm::backward(const Tensor& g) {
    const int b = x_.batch();
    const int h = hidden_;
    MatrixXd dh = g.value;
    MatrixXd dc = MatrixXd::Zero(h, b);
    MatrixXd dz(4 * h, b);
    MatrixXd dzx(4 * h, x_.value.cols());
    for (int t = x_.steps - 1; t >= 0; --t) {
        const auto st = static_cast<std::size_t>(t);
        const auto& z = gates_[st];
        const auto i = z.topRows(h).array();
        const auto f = z.middleRows(h, h).array();
        const auto gg = z.middleRows(2 * h, h).array();
        const auto o = z.bottomRows(h).array();
        const Eigen::ArrayXXd tc = c_[st + 1].array().tanh();
        dc.array() += dh.array() * o * (1.0 - tc.square());
        dz.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
        dz.topRows(h) = (dc.array() * gg * i * (1.0 - i)).matrix();
        dz.middleRows(h, h) = (dc.array() * c_[st].array() * f * (1.0 - f)).matrix();
        dz.middleRows(2 * h, h) = (dc.array() * i * (1.0 - gg.square())).matrix();
        dzx.middleCols(static_cast<Eigen::Index>(t) * b, b) = dz;
        u_.grad.noalias() += dz * h_[st].transpose();
        dh.noalias() = u_.value.transpose() * dz;
        dc.array() *= f;
    }
    w_.grad.noalias() += dzx * x_.value.transpose();
    b_.grad.noalias() += dzx.rowwise().sum();
    return {w_.value.transpose() * dzx, x_.steps};
}

void Lstm::init(std::mt19937_64& rng) {
    glorot(w_.value, in_, 4 * hidden_, rng);
    glorot(u_.value, hidden_, 4 * hidden_, rng);
    b_.value.setZero();
    b_.value.middleRows(hidden_, hidden_).setOnes();  // forget gate
}

nlohmann::json Lstm::config() const { return {{"kind", kind()}, {"in", in_}, {"hidden", hidden_}}; }

// ---- ReLU / Softmax ----

Tensor Relu::forward(const Tensor& x) {
    y_ = {x.value.cwiseMax(0.0), x.steps};
    return y_;
}

Tensor Relu::backward(const Tensor& g) {
    return {(y_.value.array() > 0.0).select(g.value, 0.0), g.steps};
}

Tensor Softmax::forward(const Tensor& x) {
    MatrixXd y = x.value;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        auto col = y.col(c);
        col.array() = (col.array() - col.maxCoeff()).exp();
        col /= col.sum();
    }
    y_ = {std::move(y), x.steps};
    return y_;
}

Tensor Softmax::backward(const Tensor& g) {
    const Eigen::RowVectorXd dot = (g.value.cwiseProduct(y_.value)).colwise().sum();
    MatrixXd dx = g.value;
    dx.rowwise() -= dot;
    return {dx.cwiseProduct(y_.value), g.steps};
}

// ---- Subsample / Flatten ----

Shape Subsample::output_shape(Shape in) const { return {in.channels, (in.steps + stride_ - 1) / stride_}; }

Tensor Subsample::forward(const Tensor& x) {
    in_steps_ = x.steps;
    const int b = x.batch();
    const int t_out = (x.steps + stride_ - 1) / stride_;
    Tensor y{MatrixXd(x.value.rows(), static_cast<Eigen::Index>(t_out) * b), t_out};
    for (int t = 0; t < t_out; ++t)
        y.value.middleCols(static_cast<Eigen::Index>(t) * b, b) =
            x.value.middleCols(static_cast<Eigen::Index>(t) * stride_ * b, b);
    return y;
}

Tensor Subsample::backward(const Tensor& g) {
    const int b = g.batch();
    Tensor dx{MatrixXd::Zero(g.value.rows(), static_cast<Eigen::Index>(in_steps_) * b), in_steps_};
    for (int t = 0; t < g.steps; ++t)
        dx.value.middleCols(static_cast<Eigen::Index>(t) * stride_ * b, b) =
            g.value.middleCols(static_cast<Eigen::Index>(t) * b, b);
    return dx;
}

Tensor Flatten::forward(const Tensor& x) {
    channels_ = x.channels();
    steps_ = x.steps;
    const int b = x.batch();
    Tensor y{MatrixXd(static_cast<Eigen::Index>(channels_) * steps_, b), 1};
    for (int t = 0; t < steps_; ++t)
        y.value.middleRows(static_cast<Eigen::Index>(t) * channels_, channels_) =
            x.value.middleCols(static_cast<Eigen::Index>(t) * b, b);
    return y;
}

Tensor Flatten::backward(const Tensor& g) {
    const int b = g.batch();
    Tensor dx{MatrixXd(channels_, static_cast<Eigen::Index>(steps_) * b), steps_};
    for (int t = 0; t < steps_; ++t)
        dx.value.middleCols(static_cast<Eigen::Index>(t) * b, b) =
            g.value.middleRows(static_cast<Eigen::Index>(t) * channels_, channels_);
    return dx;
}

// ---- Network ----

Network& Network::add(std::unique_ptr<Layer> layer) {
    Shape s = output_shape();
    layer->output_shape(s);  // validates
    layers_.push_back(std::move(layer));
    return *this;
}

Shape Network::output_shape() const {
    Shape s = input_;
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
}

void Network::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& l : layers_) l->init(rng);
}

std::vector<Param*> Network::params() {
    std::vector<Param*> out;
    for (auto& l : layers_)
        for (auto* p : l->params()) out.push_back(p);
    return out;
}

Tensor Network::forward(const Tensor& x) {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
}

double Network::penalty() const {
    double p = 0.0;
    for (const auto& l : layers_)
        for (auto* q : l->params())
            if (q->regularized) p += l1 * q->value.cwiseAbs().sum() + l2 * q->value.squaredNorm();
    return p;
}

double Network::data_loss(const MatrixXd& out, const MatrixXd& target) const {
    const double n = static_cast<double>(out.cols());
    if (loss_ == Loss::CrossEntropy)
        return -(target.array() * out.array().max(1e-300).log()).sum() / n;
    return (out - target).squaredNorm() / (n * static_cast<double>(out.rows()));
}

double Network::loss(const Tensor& x, const MatrixXd& target) {
    return data_loss(forward(x).value, target) + penalty();
}

double Network::loss_and_grad(const Tensor& x, const MatrixXd& target) {
    for (auto* p : params()) p->grad.setZero();
    const Tensor out = forward(x);
    const double n = static_cast<double>(out.value.cols());
    const double value = data_loss(out.value, target) + penalty();

    std::size_t last = layers_.size();
    Tensor g;
    if (loss_ == Loss::CrossEntropy && !layers_.empty() && layers_.back()->kind() == "softmax") {
        // Softmax + cross-entropy: gradient w.r.t. the logits.
        g = {(out.value - target) / n, out.steps};
        --last;
    } else if (loss_ == Loss::CrossEntropy) {
        g = {-target.cwiseQuotient(out.value.cwiseMax(1e-300)) / n, out.steps};
    } else {
        g = {2.0 * (out.value - target) / (n * static_cast<double>(out.value.rows())), out.steps};
    }
    for (std::size_t i = last; i-- > 0;) g = layers_[i]->backward(g);

    for (auto& l : layers_)
        for (auto* p : l->params())
            if (p->regularized) {
                if (l1 != 0.0) p->grad += l1 * p->value.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
                if (l2 != 0.0) p->grad += 2.0 * l2 * p->value;
            }
    return value;
}

nlohmann::json Network::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        auto c = l->config();
        nlohmann::json ps = nlohmann::json::object();
        for (auto* p : l->params()) ps[p->name] = encode_matrix(p->value);
        if (!ps.empty()) c["params"] = ps;
        layers.push_back(c);
    }
    return {{"input", {input_.channels, input_.steps}},
            {"loss", loss_ == Loss::CrossEntropy ? "cross_entropy" : "mse"},
            {"l1", l1},
            {"l2", l2},
            {"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
    Network net({j.at("input").at(0).get<int>(), j.at("input").at(1).get<int>()},
                j.at("loss").get<std::string>() == "cross_entropy" ? Loss::CrossEntropy : Loss::MeanSquared);
    net.l1 = j.at("l1").get<double>();
    net.l2 = j.at("l2").get<double>();
    for (const auto& c : j.at("layers")) {
        const auto kind = c.at("kind").get<std::string>();
        std::unique_ptr<Layer> l;
        if (kind == "dense") l = std::make_unique<Dense>(c.at("in").get<int>(), c.at("out").get<int>());
        else if (kind == "conv1d")
            l = std::make_unique<Conv1D>(c.at("in").get<int>(), c.at("filters").get<int>(), c.at("width").get<int>());
        else if (kind == "lstm") l = std::make_unique<Lstm>(c.at("in").get<int>(), c.at("hidden").get<int>());
        else if (kind == "relu") l = std::make_unique<Relu>();
        else if (kind == "softmax") l = std::make_unique<Softmax>();
        else if (kind == "subsample") l = std::make_unique<Subsample>(c.at("stride").get<int>());
        else if (kind == "flatten") l = std::make_unique<Flatten>();
        else throw FormatError("unknown layer kind: " + kind);
        for (auto* p : l->params()) {
            MatrixXd v = decode_matrix(c.at("params").at(p->name));
            if (v.rows() != p->value.rows() || v.cols() != p->value.cols())
                throw FormatError("parameter shape mismatch in layer " + kind);
            p->value = std::move(v);
        }
        net.add(std::move(l));
    }
    return net;
}

// ---- training ----

Tensor make_batch(const Dataset& d, const std::vector<long>& idx, long from, long to) {
    const int c = d.shape.channels;
    const int steps = d.shape.steps;
    const long b = to - from;
    Tensor x{MatrixXd(c, steps * b), steps};
    for (long j = 0; j < b; ++j) {
        const auto col = d.inputs.col(idx[static_cast<std::size_t>(from + j)]);
        for (int t = 0; t < steps; ++t) x.value.col(t * b + j) = col.segment(static_cast<Eigen::Index>(t) * c, c);
    }
    return x;
}

namespace {

MatrixXd gather_targets(const Dataset& d, const std::vector<long>& idx, long from, long to) {
    MatrixXd y(d.targets.rows(), to - from);
    for (long j = from; j < to; ++j) y.col(j - from) = d.targets.col(idx[static_cast<std::size_t>(j)]);
    return y;
}

double evaluate(Network& net, const Dataset& d, const std::vector<long>& idx, int batch) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    const long n = static_cast<long>(idx.size());
    const double pen = net.penalty();
    for (long from = 0; from < n; from += batch) {
        const long to = std::min(n, from + batch);
        sum += (net.loss(make_batch(d, idx, from, to), gather_targets(d, idx, from, to)) - pen) *
               static_cast<double>(to - from);
    }
    return sum / static_cast<double>(n) + pen;
}

}  // namespace

std::string_view to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(std::string_view s) {
    if (s == "adam") return Optimizer::Adam;
    if (s == "sgd") return Optimizer::Sgd;
    throw ConfigError("unknown optimizer: " + std::string(s));
}

TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    if (data.size() == 0) throw ConfigError("training set is empty");
    if (data.shape != net.input_shape()) throw ConfigError("training data shape does not match the network input");
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x7a11ULL));

    // Validation split by group.
    std::vector<int> groups(data.groups.begin(), data.groups.end());
    if (groups.empty()) groups.assign(static_cast<std::size_t>(data.size()), 0);
    std::vector<int> unique = groups;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    std::shuffle(unique.begin(), unique.end(), rng);
    std::vector<char> is_val_group;
    const int max_group = unique.empty() ? 0 : *std::max_element(unique.begin(), unique.end());
    is_val_group.assign(static_cast<std::size_t>(max_group) + 1, 0);
    std::vector<long> group_size(static_cast<std::size_t>(max_group) + 1, 0);
    for (int g : groups) ++group_size[static_cast<std::size_t>(g)];
    const long want = std::lround(cfg.validation_fraction * static_cast<double>(data.size()));
    long have = 0;
    for (int g : unique) {
        if (have >= want || unique.size() < 2) break;
        is_val_group[static_cast<std::size_t>(g)] = 1;
        have += group_size[static_cast<std::size_t>(g)];
    }
    std::vector<long> train_idx, val_idx;
    for (long i = 0; i < data.size(); ++i)
        (is_val_group[static_cast<std::size_t>(groups[static_cast<std::size_t>(i)])] ? val_idx : train_idx).push_back(i);
    if (train_idx.empty()) throw ConfigError("validation split left no training samples");

    auto params = net.params();
    std::vector<MatrixXd> m1, m2;
    for (auto* p : params) {
        m1.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
        m2.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
    long step = 0;

    TrainResult result;
    std::vector<MatrixXd> best;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    const long n = static_cast<long>(train_idx.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.decay, epoch);
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double total = 0.0;
        for (long from = 0; from < n; from += cfg.batch) {
            const long to = std::min(n, from + cfg.batch);
            const double l = net.loss_and_grad(make_batch(data, train_idx, from, to),
                                               gather_targets(data, train_idx, from, to));
            if (!std::isfinite(l))
                throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                                      std::to_string(from) + " (learning rate " + std::to_string(lr) + ")");
            total += l * static_cast<double>(to - from);
            ++step;
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto& p = *params[i];
                if (cfg.optimizer == Optimizer::Sgd) {
                    p.value -= lr * p.grad;
                } else {
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * p.grad;
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * p.grad.cwiseAbs2();
                    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                    p.value.array() -= lr * (m1[i].array() / c1) / ((m2[i].array() / c2).sqrt() + eps);
                }
            }
        }
        EpochLog log;
        log.epoch = epoch + 1;
        log.learning_rate = lr;
        log.train_loss = total / static_cast<double>(n);
        log.val_loss = val_idx.empty() ? log.train_loss : evaluate(net, data, val_idx, cfg.batch);
        if (!std::isfinite(log.val_loss)) throw TrainingAborted("non-finite validation loss at epoch " + std::to_string(epoch + 1));
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);
        if (log.val_loss < best_val) {
            best_val = log.val_loss;
            result.best_epoch = log.epoch;
            best.clear();
            for (auto* p : params) best.push_back(p->value);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    for (std::size_t i = 0; i < params.size() && i < best.size(); ++i) params[i]->value = best[i];
    result.best_val_loss = best_val;
    return result;
}

}  // namespace phri::est::nn

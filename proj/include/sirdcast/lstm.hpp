#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sirdcast/errors.hpp"
#include "sirdcast/io.hpp"
#include "sirdcast/random.hpp"

namespace sirdcast::lstm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<const RowMatrix>;
using MutMatrixView = Eigen::Map<RowMatrix>;
using VectorView = Eigen::Map<const Vector>;
using MutVectorView = Eigen::Map<Vector>;

/// Read-only view of one layer's weights. Gate rows are stacked as input, forget, output, candidate,
/// so every matrix has 4 * hidden_dim rows.
struct LstmLayer {
    MatrixView input_weights;     // (4H x input_dim)
    MatrixView recurrent_weights; // (4H x H)
    VectorView bias;              // (4H)

    Eigen::Index hidden_dim() const { return recurrent_weights.cols(); }
    Eigen::Index input_dim() const { return input_weights.cols(); }
};

/// Stacked LSTM with a linear output head on the last layer's final hidden state.
///
/// All weights live in one flat parameter vector so the optimizer and the gradient share a layout:
/// per layer the input weights, the recurrent weights and the bias (matrices row-major), followed by
/// the head weights and head bias.
class LstmNetwork {
public:
    LstmNetwork() = default;

    LstmNetwork(std::size_t input_dim, std::vector<std::size_t> hidden_units, std::size_t output_dim,
                std::size_t lookback = 1)
        : input_dim_(input_dim), output_dim_(output_dim), lookback_(lookback), hidden_(std::move(hidden_units))
    {
        if (input_dim_ == 0 || output_dim_ == 0 || hidden_.empty() || lookback_ == 0) {
            throw InvalidInput("network dimensions must be positive and at least one layer is required");
        }
        std::size_t offset = 0;
        std::size_t in = input_dim_;
        for (std::size_t h : hidden_) {
            if (h == 0) {
                throw InvalidInput("hidden layer width must be positive");
            }
            LayerOffsets lo;
            lo.input = offset;
            offset += 4 * h * in;
            lo.recurrent = offset;
            offset += 4 * h * h;
            lo.bias = offset;
            offset += 4 * h;
            offsets_.push_back(lo);
            in = h;
        }
        head_weights_ = offset;
        offset += output_dim_ * in;
        head_bias_ = offset;
        offset += output_dim_;
        params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
    }

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }
    std::size_t num_layers() const noexcept { return hidden_.size(); }
    std::size_t hidden_dim(std::size_t layer) const { return hidden_.at(layer); }
    const std::vector<std::size_t>& hidden_units() const noexcept { return hidden_; }
    std::size_t lookback() const noexcept { return lookback_; }
    void set_lookback(std::size_t lookback) { lookback_ = lookback; }

    std::size_t layer_input_dim(std::size_t layer) const { return layer == 0 ? input_dim_ : hidden_.at(layer - 1); }

    Vector& parameters() noexcept { return params_; }
    const Vector& parameters() const noexcept { return params_; }

    LstmLayer layer(std::size_t l) const { return layer_view(params_, l); }

    /// Layer view over an arbitrary vector with this network's layout (used for gradients).
    LstmLayer layer_view(const Vector& flat, std::size_t l) const
    {
        const auto& o = offsets_.at(l);
        const auto h = static_cast<Eigen::Index>(hidden_[l]);
        const auto in = static_cast<Eigen::Index>(layer_input_dim(l));
        return {MatrixView(flat.data() + o.input, 4 * h, in), MatrixView(flat.data() + o.recurrent, 4 * h, h),
                VectorView(flat.data() + o.bias, 4 * h)};
    }

    MatrixView head_weights() const { return head_weights_view(params_); }
    VectorView head_bias() const { return head_bias_view(params_); }

    MatrixView head_weights_view(const Vector& flat) const
    {
        return {flat.data() + head_weights_, static_cast<Eigen::Index>(output_dim_),
                static_cast<Eigen::Index>(hidden_.back())};
    }
    VectorView head_bias_view(const Vector& flat) const
    {
        return {flat.data() + head_bias_, static_cast<Eigen::Index>(output_dim_)};
    }

    struct MutLayer {
        MutMatrixView input_weights;
        MutMatrixView recurrent_weights;
        MutVectorView bias;
    };

    MutLayer mutable_layer_view(Vector& flat, std::size_t l) const
    {
        const auto& o = offsets_.at(l);
        const auto h = static_cast<Eigen::Index>(hidden_[l]);
        const auto in = static_cast<Eigen::Index>(layer_input_dim(l));
        return {MutMatrixView(flat.data() + o.input, 4 * h, in), MutMatrixView(flat.data() + o.recurrent, 4 * h, h),
                MutVectorView(flat.data() + o.bias, 4 * h)};
    }
    MutMatrixView mutable_head_weights_view(Vector& flat) const
    {
        return {flat.data() + head_weights_, static_cast<Eigen::Index>(output_dim_),
                static_cast<Eigen::Index>(hidden_.back())};
    }
    MutVectorView mutable_head_bias_view(Vector& flat) const
    {
        return {flat.data() + head_bias_, static_cast<Eigen::Index>(output_dim_)};
    }

    /// Uniform(-k, k) initialization with k = 1 / sqrt(fan_in). The fan-in of a gate is the layer
    /// input width plus the hidden width; the head's fan-in is the last hidden width.
    void initialize(Rng& rng)
    {
        auto fill = [&](std::size_t begin, std::size_t end, double k) {
            for (std::size_t p = begin; p < end; ++p) {
                params_[static_cast<Eigen::Index>(p)] = -k + 2.0 * k * unit_uniform(rng);
            }
        };
        for (std::size_t l = 0; l < hidden_.size(); ++l) {
            const double k = 1.0 / std::sqrt(static_cast<double>(layer_input_dim(l) + hidden_[l]));
            const std::size_t end = offsets_[l].bias + 4 * hidden_[l];
            fill(offsets_[l].input, end, k);
        }
        fill(head_weights_, static_cast<std::size_t>(params_.size()), 1.0 / std::sqrt(static_cast<double>(hidden_.back())));
    }

    bool operator==(const LstmNetwork& other) const
    {
        return input_dim_ == other.input_dim_ && output_dim_ == other.output_dim_ && lookback_ == other.lookback_ &&
               hidden_ == other.hidden_ && params_.size() == other.params_.size() && params_ == other.params_;
    }

private:
    struct LayerOffsets {
        std::size_t input = 0;
        std::size_t recurrent = 0;
        std::size_t bias = 0;
    };

    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::size_t lookback_ = 1;
    std::vector<std::size_t> hidden_;
    std::vector<LayerOffsets> offsets_;
    std::size_t head_weights_ = 0;
    std::size_t head_bias_ = 0;
    Vector params_;
};

struct TrainConfig {
    double learning_rate = 0.005;
    std::size_t epochs = 500;
    double huber_delta = 1.0;
    /// Input window length in rows (weeks for the parameter series).
    std::size_t lookback = 4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
    std::vector<std::size_t> hidden_units{20, 30};

    void validate() const
    {
        if (!(learning_rate > 0.0)) {
            throw InvalidInput("learning rate must be positive");
        }
        if (epochs < 1) {
            throw InvalidInput("need at least one epoch");
        }
        if (lookback < 1) {
            throw InvalidInput("lookback must be at least 1");
        }
        if (!(huber_delta > 0.0)) {
            throw InvalidInput("huber delta must be positive");
        }
        if (hidden_units.empty()) {
            throw InvalidInput("need at least one LSTM layer");
        }
    }
};

/// Per-feature min-max scaling onto [0, 1].
struct Scaler {
    Vector min;
    Vector max;

    static Scaler fit(const Matrix& rows)
    {
        if (rows.rows() == 0) {
            throw InvalidInput("cannot fit a scaler on zero rows");
        }
        return {rows.colwise().minCoeff().transpose(), rows.colwise().maxCoeff().transpose()};
    }

    /// Constant features map to 0.
    Vector transform(const Vector& x) const
    {
        Vector out(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double range = max[k] - min[k];
            out[k] = range > 0.0 ? (x[k] - min[k]) / range : 0.0;
        }
        return out;
    }

    Vector inverse(const Vector& s) const
    {
        Vector out(s.size());
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            out[k] = min[k] + s[k] * (max[k] - min[k]);
        }
        return out;
    }

    Matrix transform_rows(const Matrix& rows) const
    {
        Matrix out(rows.rows(), rows.cols());
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            out.row(r) = transform(rows.row(r).transpose()).transpose();
        }
        return out;
    }

    bool operator==(const Scaler& other) const { return min == other.min && max == other.max; }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <class Derived>
Matrix sigmoid(const Eigen::MatrixBase<Derived>& z)
{
    return z.array().logistic().matrix();
}

// tanh through the vectorized logistic; absolute error stays near machine epsilon.
template <class Derived>
Matrix tanh(const Eigen::MatrixBase<Derived>& z)
{
    return (2.0 * (2.0 * z.array()).logistic() - 1.0).matrix();
}

// Activations of one layer across the unrolled sequence; every matrix is (H x batch).
struct LayerTape {
    std::vector<Matrix> inputs;
    std::vector<Matrix> in_gate;
    std::vector<Matrix> forget_gate;
    std::vector<Matrix> out_gate;
    std::vector<Matrix> candidate;
    std::vector<Matrix> cell;      // cell[t + 1] is c_t; cell[0] is the zero initial state
    std::vector<Matrix> cell_tanh;
    std::vector<Matrix> hidden;    // hidden[t + 1] is h_t
};

inline LayerTape run_layer(const LstmLayer& layer, std::vector<Matrix> inputs)
{
    const Eigen::Index h = layer.hidden_dim();
    const Eigen::Index batch = inputs.front().cols();
    LayerTape tape;
    const std::size_t steps = inputs.size();
    tape.cell.push_back(Matrix::Zero(h, batch));
    tape.hidden.push_back(Matrix::Zero(h, batch));
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix z = layer.input_weights * inputs[t] + layer.recurrent_weights * tape.hidden.back();
        z.colwise() += layer.bias;
        tape.in_gate.push_back(sigmoid(z.topRows(h)));
        tape.forget_gate.push_back(sigmoid(z.middleRows(h, h)));
        tape.out_gate.push_back(sigmoid(z.middleRows(2 * h, h)));
        tape.candidate.push_back(tanh(z.bottomRows(h)));
        Matrix c = tape.forget_gate.back().cwiseProduct(tape.cell.back()) +
                   tape.in_gate.back().cwiseProduct(tape.candidate.back());
        Matrix ct = tanh(c);
        tape.hidden.push_back(tape.out_gate.back().cwiseProduct(ct));
        tape.cell.push_back(std::move(c));
        tape.cell_tanh.push_back(std::move(ct));
    }
    tape.inputs = std::move(inputs);
    return tape;
}

// Backpropagates through one layer. `d_hidden[t]` is the loss gradient flowing into h_t from above;
// returns the gradient with respect to each input x_t.
inline std::vector<Matrix> backprop_layer(const LstmLayer& layer, const LayerTape& tape,
                                          const std::vector<Matrix>& d_hidden, LstmNetwork::MutLayer grad)
{
    const Eigen::Index h = layer.hidden_dim();
    const Eigen::Index batch = tape.inputs.front().cols();
    const std::size_t steps = tape.inputs.size();
    std::vector<Matrix> d_inputs(steps);
    Matrix dh_next = Matrix::Zero(h, batch);
    Matrix dc_next = Matrix::Zero(h, batch);
    Matrix dz(4 * h, batch);
    for (std::size_t t = steps; t-- > 0;) {
        const Matrix& ig = tape.in_gate[t];
        const Matrix& fg = tape.forget_gate[t];
        const Matrix& og = tape.out_gate[t];
        const Matrix& g = tape.candidate[t];
        const Matrix& ct = tape.cell_tanh[t];
        const Matrix dh = d_hidden[t] + dh_next;
        const Matrix d_out = dh.cwiseProduct(ct);
        const Matrix dc =
            dc_next + dh.cwiseProduct(og).cwiseProduct((1.0 - ct.array().square()).matrix());
        dz.topRows(h) = dc.cwiseProduct(g).cwiseProduct(ig).cwiseProduct((1.0 - ig.array()).matrix());
        dz.middleRows(h, h) =
            dc.cwiseProduct(tape.cell[t]).cwiseProduct(fg).cwiseProduct((1.0 - fg.array()).matrix());
        dz.middleRows(2 * h, h) = d_out.cwiseProduct(og).cwiseProduct((1.0 - og.array()).matrix());
        dz.bottomRows(h) = dc.cwiseProduct(ig).cwiseProduct((1.0 - g.array().square()).matrix());
        dc_next = dc.cwiseProduct(fg);

        grad.input_weights.noalias() += dz * tape.inputs[t].transpose();
        grad.recurrent_weights.noalias() += dz * tape.hidden[t].transpose();
        grad.bias += dz.rowwise().sum();
        dh_next.noalias() = layer.recurrent_weights.transpose() * dz;
        d_inputs[t].noalias() = layer.input_weights.transpose() * dz;
    }
    return d_inputs;
}

inline void check_sequence(const LstmNetwork& net, const std::vector<Matrix>& inputs)
{
    if (inputs.empty()) {
        throw InvalidInput("input sequence is empty");
    }
    for (const auto& x : inputs) {
        if (static_cast<std::size_t>(x.rows()) != net.input_dim() || x.cols() != inputs.front().cols()) {
            throw InvalidInput("input sequence dimension mismatch");
        }
    }
}

} // namespace detail

/// One LSTM cell update: returns (h', c').
inline std::pair<Vector, Vector> cell_forward(const Vector& x, const Vector& h, const Vector& c,
                                              const LstmLayer& layer)
{
    const Eigen::Index hd = layer.hidden_dim();
    if (x.size() != layer.input_dim() || h.size() != hd || c.size() != hd) {
        throw InvalidInput("cell_forward: dimension mismatch");
    }
    const Vector z = layer.input_weights * x + layer.recurrent_weights * h + layer.bias;
    const Vector i = detail::sigmoid(z.head(hd));
    const Vector f = detail::sigmoid(z.segment(hd, hd));
    const Vector o = detail::sigmoid(z.segment(2 * hd, hd));
    const Vector g = detail::tanh(z.tail(hd));
    Vector c_next = f.cwiseProduct(c) + i.cwiseProduct(g);
    Vector h_next = o.cwiseProduct(detail::tanh(c_next));
    return {std::move(h_next), std::move(c_next)};
}

/// Batched forward pass. inputs[t] is (input_dim x batch); returns (output_dim x batch).
inline Matrix forward_batch(const LstmNetwork& net, std::vector<Matrix> inputs)
{
    detail::check_sequence(net, inputs);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        auto tape = detail::run_layer(net.layer(l), std::move(inputs));
        inputs.assign(tape.hidden.begin() + 1, tape.hidden.end());
    }
    Matrix out = net.head_weights() * inputs.back();
    out.colwise() += net.head_bias();
    return out;
}

/// Runs one sequence through the stack from zero state and applies the head to the final hidden state.
inline Vector forward(std::span<const Vector> sequence, const LstmNetwork& net)
{
    if (sequence.empty()) {
        throw InvalidInput("forward: empty sequence");
    }
    std::vector<Matrix> inputs;
    inputs.reserve(sequence.size());
    for (const auto& x : sequence) {
        inputs.emplace_back(x);
    }
    return forward_batch(net, std::move(inputs)).col(0);
}

/// Mean Huber loss over all elements.
inline double huber_loss(const Matrix& pred, const Matrix& target, double delta)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw InvalidInput("huber_loss: length mismatch");
    }
    if (!(delta > 0.0)) {
        throw InvalidInput("huber_loss: delta must be positive");
    }
    if (pred.size() == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < pred.size(); ++k) {
        const double e = std::abs(pred.data()[k] - target.data()[k]);
        sum += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
    }
    return sum / static_cast<double>(pred.size());
}

/// Loss and its gradient with respect to every network parameter, by backpropagation through time.
inline std::pair<double, Vector> loss_and_gradient(const LstmNetwork& net, std::vector<Matrix> inputs,
                                                   const Matrix& targets, double delta)
{
    detail::check_sequence(net, inputs);
    std::vector<detail::LayerTape> tapes;
    tapes.reserve(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        tapes.push_back(detail::run_layer(net.layer(l), std::move(inputs)));
        inputs.assign(tapes.back().hidden.begin() + 1, tapes.back().hidden.end());
    }
    const Matrix& last_hidden = inputs.back();
    Matrix pred = net.head_weights() * last_hidden;
    pred.colwise() += net.head_bias();
    const double loss = huber_loss(pred, targets, delta);

    const double scale = 1.0 / static_cast<double>(pred.size());
    Matrix d_pred = (pred - targets).unaryExpr([&](double e) {
        return (std::abs(e) <= delta ? e : (e > 0.0 ? delta : -delta)) * scale;
    });

    Vector grad = Vector::Zero(net.parameters().size());
    net.mutable_head_weights_view(grad).noalias() += d_pred * last_hidden.transpose();
    net.mutable_head_bias_view(grad) += d_pred.rowwise().sum();

    const std::size_t steps = tapes.front().inputs.size();
    std::vector<Matrix> d_hidden(steps, Matrix::Zero(last_hidden.rows(), last_hidden.cols()));
    d_hidden.back() = net.head_weights().transpose() * d_pred;
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        d_hidden = detail::backprop_layer(net.layer(l), tapes[l], d_hidden, net.mutable_layer_view(grad, l));
    }
    return {loss, std::move(grad)};
}

struct AdamState {
    Vector m;
    Vector v;
    std::size_t t = 0;
};

/// One Adam update with bias correction, in place.
inline void adam_step(Vector& params, const Vector& grads, AdamState& state, const TrainConfig& config)
{
    if (grads.size() != params.size()) {
        throw InvalidInput("adam_step: gradient shape does not match parameters");
    }
    if (!grads.allFinite()) {
        throw TrainingDiverged("non-finite gradient");
    }
    if (state.m.size() != params.size()) {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
        state.t = 0;
    }
    ++state.t;
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (Eigen::Index k = 0; k < params.size(); ++k) {
        const double m_hat = state.m[k] / bc1;
        const double v_hat = state.v[k] / bc2;
        params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

/// Supervised pairs from scaled rows: window of `lookback` rows -> following row.
struct SupervisedSet {
    std::vector<Matrix> inputs; // inputs[t] is (features x pairs)
    Matrix targets;             // (features x pairs)
};

inline SupervisedSet make_supervised(const Matrix& scaled_rows, std::size_t lookback)
{
    const auto n = static_cast<std::size_t>(scaled_rows.rows());
    if (n < lookback + 1) {
        throw InvalidInput("history has " + std::to_string(n) + " rows; need at least lookback + 1 = " +
                           std::to_string(lookback + 1));
    }
    const auto pairs = static_cast<Eigen::Index>(n - lookback);
    const Eigen::Index features = scaled_rows.cols();
    SupervisedSet set;
    for (std::size_t t = 0; t < lookback; ++t) {
        Matrix x(features, pairs);
        for (Eigen::Index j = 0; j < pairs; ++j) {
            x.col(j) = scaled_rows.row(j + static_cast<Eigen::Index>(t)).transpose();
        }
        set.inputs.push_back(std::move(x));
    }
    set.targets.resize(features, pairs);
    for (Eigen::Index j = 0; j < pairs; ++j) {
        set.targets.col(j) = scaled_rows.row(j + static_cast<Eigen::Index>(lookback)).transpose();
    }
    return set;
}

struct TrainResult {
    LstmNetwork network;
    Scaler scaler;
    /// Full-batch loss at the start of each epoch.
    std::vector<double> loss_curve;
};

using EpochProgress = std::function<void(std::size_t epoch, double loss)>;

/// Full-batch BPTT training on history rows (time x features); one Adam step per epoch.
inline TrainResult train(const Matrix& history, const TrainConfig& config, const EpochProgress& progress = {})
{
    config.validate();
    if (history.rows() < static_cast<Eigen::Index>(config.lookback + 1)) {
        throw InvalidInput("history has " + std::to_string(history.rows()) + " rows; need at least " +
                           std::to_string(config.lookback + 1));
    }
    if (!history.allFinite()) {
        throw InvalidInput("history contains non-finite values");
    }
    const auto features = static_cast<std::size_t>(history.cols());
    TrainResult result{LstmNetwork(features, config.hidden_units, features, config.lookback), Scaler::fit(history), {}};
    Rng rng(config.seed);
    result.network.initialize(rng);

    const auto set = make_supervised(result.scaler.transform_rows(history), config.lookback);
    AdamState adam;
    result.loss_curve.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto [loss, grad] = loss_and_gradient(result.network, set.inputs, set.targets, config.huber_delta);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
        }
        result.loss_curve.push_back(loss);
        if (progress) {
            progress(epoch, loss);
        }
        adam_step(result.network.parameters(), grad, adam, config);
    }
    return result;
}

/// Output range applied after inverse scaling.
struct OutputClamp {
    double lo = 0.0;
    double hi = 1.0;
};

/// Recursive multi-step forecast: predicts one row, appends it to the input window, repeats.
/// Returns (horizon x features) in original units, clamped to `clamp`.
inline Matrix forecast(const LstmNetwork& net, const Scaler& scaler, const Matrix& history, int horizon,
                       OutputClamp clamp = {})
{
    const auto features = static_cast<Eigen::Index>(net.input_dim());
    if (horizon <= 0) {
        return Matrix(0, features);
    }
    if (net.output_dim() != net.input_dim() || history.cols() != features) {
        throw InvalidInput("forecast: history width does not match the network");
    }
    const auto lookback = static_cast<Eigen::Index>(net.lookback());
    if (history.rows() < lookback) {
        throw InvalidInput("forecast: history shorter than the lookback window");
    }
    std::vector<Vector> window;
    for (Eigen::Index r = history.rows() - lookback; r < history.rows(); ++r) {
        window.push_back(scaler.transform(history.row(r).transpose()));
    }
    Matrix out(horizon, features);
    for (int k = 0; k < horizon; ++k) {
        Vector next = forward(std::span<const Vector>(window), net);
        window.erase(window.begin());
        window.push_back(next);
        out.row(k) = scaler.inverse(next).cwiseMax(clamp.lo).cwiseMin(clamp.hi).transpose();
    }
    return out;
}

// Text model format, version 1 (one token group per line, doubles as C99 hex floats):
//   sirdcast-lstm 1
//   input_dim <n>
//   output_dim <n>
//   lookback <n>
//   layers <count> <h1> <h2> ...
//   parameters <count>
//   <value>            (count lines, flat layout of LstmNetwork)
//   scaler_min <n> <v1> ... <vn>
//   scaler_max <n> <v1> ... <vn>

namespace detail {

inline std::string hex_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_hex_double(const std::string& token)
{
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw InvalidInput("model file: bad number '" + token + "'");
    }
    return v;
}

} // namespace detail

inline std::string serialize_model(const LstmNetwork& net, const Scaler& scaler)
{
    std::string out = "sirdcast-lstm 1\n";
    out += "input_dim " + std::to_string(net.input_dim()) + "\n";
    out += "output_dim " + std::to_string(net.output_dim()) + "\n";
    out += "lookback " + std::to_string(net.lookback()) + "\n";
    out += "layers " + std::to_string(net.num_layers());
    for (std::size_t h : net.hidden_units()) {
        out += " " + std::to_string(h);
    }
    out += "\nparameters " + std::to_string(net.parameters().size()) + "\n";
    for (Eigen::Index k = 0; k < net.parameters().size(); ++k) {
        out += detail::hex_double(net.parameters()[k]) + "\n";
    }
    auto vec = [&](const char* name, const Vector& v) {
        out += std::string(name) + " " + std::to_string(v.size());
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            out += " " + detail::hex_double(v[k]);
        }
        out += "\n";
    };
    vec("scaler_min", scaler.min);
    vec("scaler_max", scaler.max);
    return out;
}

inline std::pair<LstmNetwork, Scaler> deserialize_model(const std::string& text)
{
    std::istringstream in(text);
    auto expect = [&](const std::string& key) {
        std::string got;
        if (!(in >> got) || got != key) {
            throw InvalidInput("model file: expected '" + key + "'");
        }
    };
    auto size = [&] {
        long long v = -1;
        if (!(in >> v) || v < 0) {
            throw InvalidInput("model file: bad size field");
        }
        return static_cast<std::size_t>(v);
    };
    auto number = [&] {
        std::string token;
        if (!(in >> token)) {
            throw InvalidInput("model file: truncated");
        }
        return detail::parse_hex_double(token);
    };
    expect("sirdcast-lstm");
    if (size() != 1) {
        throw InvalidInput("model file: unsupported version");
    }
    expect("input_dim");
    const auto input_dim = size();
    expect("output_dim");
    const auto output_dim = size();
    expect("lookback");
    const auto lookback = size();
    expect("layers");
    std::vector<std::size_t> hidden(size());
    for (auto& h : hidden) {
        h = size();
    }
    LstmNetwork net(input_dim, hidden, output_dim, lookback);
    expect("parameters");
    if (size() != static_cast<std::size_t>(net.parameters().size())) {
        throw InvalidInput("model file: parameter count does not match the layer layout");
    }
    for (Eigen::Index k = 0; k < net.parameters().size(); ++k) {
        net.parameters()[k] = number();
    }
    Scaler scaler;
    auto vec = [&](const char* name) {
        expect(name);
        Vector v(static_cast<Eigen::Index>(size()));
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            v[k] = number();
        }
        return v;
    };
    scaler.min = vec("scaler_min");
    scaler.max = vec("scaler_max");
    return {std::move(net), std::move(scaler)};
}

inline void save_model(const std::filesystem::path& path, const LstmNetwork& net, const Scaler& scaler)
{
    io::write_text_file(path, serialize_model(net, scaler));
}

inline std::pair<LstmNetwork, Scaler> load_model(const std::filesystem::path& path)
{
    return deserialize_model(io::read_text_file(path));
}

} // namespace sirdcast::lstm

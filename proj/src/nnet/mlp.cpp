#include "covpred/nnet/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "covpred/error.hpp"

namespace covpred::nnet {

void MlpSpec::validate() const {
  if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || output_dim < 1)
    throw InvalidInput("MLP dimensions must all be at least 1");
}

Mlp::Mlp(MlpSpec spec, std::vector<Layer> layers) : spec_(spec), layers_(std::move(layers)) {
  spec_.validate();
  if (layers_.size() != static_cast<std::size_t>(spec_.hidden_layers) + 1)
    throw ShapeError("layer count does not match spec");
  int fan_in = spec_.input_dim;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const int fan_out = i + 1 == layers_.size() ? spec_.output_dim : spec_.hidden_width;
    const Layer& l = layers_[i];
    if (l.weight.rows() != fan_in || l.weight.cols() != fan_out || l.bias.size() != fan_out)
      throw ShapeError("layer " + std::to_string(i) + " shape does not match spec");
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw InvalidInput("layer " + std::to_string(i) + " has non-finite entries");
    fan_in = fan_out;
  }
}

Mlp Mlp::init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  int fan_in = spec.input_dim;
  for (int i = 0; i <= spec.hidden_layers; ++i) {
    const int fan_out = i == spec.hidden_layers ? spec.output_dim : spec.hidden_width;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer l;
    l.weight.resize(fan_in, fan_out);
    // Filled in row-major order so the draw sequence matches the file layout.
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) l.weight(r, c) = dist(rng);
    l.bias = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return Mlp(spec, std::move(layers));
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(spec_.input_dim))
    throw ShapeError("input has " + std::to_string(x.size()) + " features, expected " +
                     std::to_string(spec_.input_dim));
  Eigen::MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), x.size());
  return forward_rowwise(row).row(0).transpose();
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.cols() != spec_.input_dim) throw ShapeError("batch input width does not match spec");
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = a * layers_[i].weight;
    z.rowwise() += layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_rowwise(const Eigen::MatrixXd& x) const {
  if (x.cols() != spec_.input_dim) throw ShapeError("batch input width does not match spec");
  Eigen::MatrixXd out(x.rows(), spec_.output_dim);
  Eigen::RowVectorXd a, z;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    a = x.row(r);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      z.noalias() = a * layers_[i].weight;
      z += layers_[i].bias.transpose();
      if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
      a.swap(z);
    }
    out.row(r) = a;
  }
  return out;
}

const Eigen::MatrixXd& Mlp::forward_batch(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.cols() != spec_.input_dim) throw ShapeError("batch input width does not match spec");
  tape.activations.resize(layers_.size() + 1);
  tape.activations[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd& z = tape.activations[i + 1];
    z.noalias() = tape.activations[i] * layers_[i].weight;
    z.rowwise() += layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
  }
  return tape.activations.back();
}

void Mlp::backward_batch(const Tape& tape, const Eigen::MatrixXd& grad_output, Gradients& grads,
                         Eigen::MatrixXd* grad_input) const {
  if (tape.activations.size() != layers_.size() + 1) throw StateError("tape does not match network");
  if (grad_output.rows() != tape.activations.back().rows() || grad_output.cols() != spec_.output_dim)
    throw ShapeError("output gradient shape does not match forward pass");
  grads.resize(layers_.size());
  Eigen::MatrixXd g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Eigen::MatrixXd& in = tape.activations[i];
    grads[i].weight.noalias() = in.transpose() * g;
    grads[i].bias = g.colwise().sum().transpose();
    if (i == 0 && grad_input == nullptr) break;
    Eigen::MatrixXd g_prev = g * layers_[i].weight.transpose();
    if (i > 0) {
      // ReLU: pass gradient only where the unit was active.
      g_prev = g_prev.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
    } else {
      *grad_input = g_prev;
    }
    g = std::move(g_prev);
  }
}

Gradients Mlp::zero_gradients() const {
  Gradients g(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    g[i].weight = Eigen::MatrixXd::Zero(layers_[i].weight.rows(), layers_[i].weight.cols());
    g[i].bias = Eigen::VectorXd::Zero(layers_[i].bias.size());
  }
  return g;
}

bool Mlp::operator==(const Mlp& other) const {
  if (!(spec_ == other.spec_) || layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight != other.layers_[i].weight) return false;
    if (layers_[i].bias != other.layers_[i].bias) return false;
  }
  return true;
}

double masked_mse(std::span<const double> y, std::span<const double> yhat,
                  const std::vector<bool>& mask) {
  if (y.size() != yhat.size() || y.size() != mask.size())
    throw ShapeError("masked_mse: length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i]) continue;
    const double e = yhat[i] - y[i];
    sum += e * e;
    ++n;
  }
  if (n == 0) throw InvalidInput("masked_mse: empty mask");
  return sum / static_cast<double>(n);
}

double masked_mse_batch(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat,
                        const Eigen::MatrixXd& mask, Eigen::MatrixXd* grad) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols() || mask.rows() != y.rows() ||
      mask.cols() != y.cols())
    throw ShapeError("masked_mse_batch: shape mismatch");
  if (y.rows() == 0) throw InvalidInput("masked_mse_batch: empty batch");
  const Eigen::VectorXd counts = mask.rowwise().sum();
  if ((counts.array() <= 0.0).any()) throw InvalidInput("masked_mse_batch: row with empty mask");
  const Eigen::MatrixXd err = (yhat - y).cwiseProduct(mask);
  const Eigen::VectorXd inv = counts.cwiseInverse();
  const double rows = static_cast<double>(y.rows());
  const double loss = (err.array().square().rowwise().sum().matrix().cwiseProduct(inv)).sum() / rows;
  if (grad != nullptr) *grad = (2.0 / rows) * (inv.asDiagonal() * err);
  return loss;
}

Gradients backward(const Mlp& m, std::span<const double> x, std::span<const double> y,
                   const std::vector<bool>& mask) {
  if (x.size() != static_cast<std::size_t>(m.spec().input_dim))
    throw ShapeError("backward: input length mismatch");
  const auto out = static_cast<std::size_t>(m.spec().output_dim);
  if (y.size() != out || mask.size() != out) throw ShapeError("backward: target length mismatch");
  Eigen::MatrixXd xb = Eigen::Map<const Eigen::RowVectorXd>(x.data(), x.size());
  Eigen::MatrixXd yb = Eigen::Map<const Eigen::RowVectorXd>(y.data(), y.size());
  Eigen::MatrixXd mb(1, out);
  for (std::size_t i = 0; i < out; ++i) mb(0, i) = mask[i] ? 1.0 : 0.0;
  Tape tape;
  const Eigen::MatrixXd& yhat = m.forward_batch(xb, tape);
  Eigen::MatrixXd g;
  masked_mse_batch(yb, yhat, mb, &g);
  Gradients grads;
  m.backward_batch(tape, g, grads);
  return grads;
}

}  // namespace covpred::nnet

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covpred::nnet {

enum class Activation { relu };

struct MlpSpec {
  int input_dim = 1;
  int hidden_layers = 1;
  int hidden_width = 1;
  int output_dim = 1;
  Activation activation = Activation::relu;

  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

/// Dense layer in the row-vector convention: out = in * weight + bias, with
/// `weight` shaped (fan_in x fan_out).
struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Gradients share the layer layout of the network they belong to.
using Gradients = std::vector<Layer>;

/// Post-activation values of one batch pass, kept for backpropagation.
/// activations[0] is the input, activations.back() the linear output.
struct Tape {
  std::vector<Eigen::MatrixXd> activations;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::vector<Layer> layers);

  /// He-style fan-in scaled uniform weights, zero biases.
  static Mlp init(const MlpSpec& spec, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t parameter_count() const;

  Eigen::VectorXd forward(std::span<const double> x) const;

  /// Rows of `x` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
  const Eigen::MatrixXd& forward_batch(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Evaluates each row on its own. A row's result does not depend on the
  /// other rows in `x`, unlike the blocked batch product.
  Eigen::MatrixXd forward_rowwise(const Eigen::MatrixXd& x) const;

  /// Overwrites `grads` with dLoss/dParams given dLoss/dOutput. When
  /// `grad_input` is non-null it receives dLoss/dInput.
  void backward_batch(const Tape& tape, const Eigen::MatrixXd& grad_output, Gradients& grads,
                      Eigen::MatrixXd* grad_input = nullptr) const;

  Gradients zero_gradients() const;

  bool operator==(const Mlp& other) const;

 private:
  MlpSpec spec_;
  std::vector<Layer> layers_;
};

/// Mean squared error over the entries with mask set. Throws InvalidInput for
/// an empty mask and ShapeError for mismatched lengths.
double masked_mse(std::span<const double> y, std::span<const double> yhat,
                  const std::vector<bool>& mask);

/// Batch form: mean over rows of the per-row masked MSE. `mask` holds 0/1.
/// When `grad` is non-null it receives dLoss/dYhat.
double masked_mse_batch(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat,
                        const Eigen::MatrixXd& mask, Eigen::MatrixXd* grad);

/// Single-sample gradient of masked_mse(y, forward(x)) with respect to all
/// parameters of `m`.
Gradients backward(const Mlp& m, std::span<const double> x, std::span<const double> y,
                   const std::vector<bool>& mask);

}  // namespace covpred::nnet

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "covpred/nnet/mlp.hpp"

namespace covpred::nnet {

/// One subnetwork reading a fixed subset of the shared input columns.
struct FusedPart {
  Mlp net;
  std::vector<int> inputs;
};

/// Sum of subnetworks: out = sum_k net_k(x[:, inputs_k]). A single part
/// with all columns is an ordinary MLP.
class FusedNet {
 public:
  FusedNet() = default;
  FusedNet(int input_dim, std::vector<FusedPart> parts);

  int input_dim() const { return input_dim_; }
  int output_dim() const;
  const std::vector<FusedPart>& parts() const { return parts_; }
  std::vector<FusedPart>& parts() { return parts_; }
  std::size_t parameter_count() const;

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

  /// Row-independent evaluation used for prediction.
  Eigen::MatrixXd forward_rowwise(const Eigen::MatrixXd& x) const;

  /// Per-part outputs before fusion.
  std::vector<Eigen::MatrixXd> part_outputs(const Eigen::MatrixXd& x) const;

  struct Pass {
    std::vector<Tape> tapes;
    Eigen::MatrixXd output;
  };
  const Eigen::MatrixXd& forward_batch(const Eigen::MatrixXd& x, Pass& pass) const;

  /// The fused output is a plain sum, so every part receives `grad_output`
  /// unchanged.
  void backward_batch(const Pass& pass, const Eigen::MatrixXd& grad_output,
                      std::vector<Gradients>& grads) const;

  bool operator==(const FusedNet& other) const;

 private:
  Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const FusedPart& part) const;

  int input_dim_ = 0;
  std::vector<FusedPart> parts_;
};

}  // namespace covpred::nnet

#include "covpred/nnet/fused_net.hpp"

#include <string>

#include "covpred/error.hpp"

namespace covpred::nnet {

FusedNet::FusedNet(int input_dim, std::vector<FusedPart> parts)
    : input_dim_(input_dim), parts_(std::move(parts)) {
  if (parts_.empty()) throw InvalidInput("fused net needs at least one part");
  const int out = parts_.front().net.spec().output_dim;
  for (std::size_t k = 0; k < parts_.size(); ++k) {
    const FusedPart& p = parts_[k];
    if (p.net.spec().output_dim != out) throw ShapeError("fused parts disagree on output width");
    if (static_cast<int>(p.inputs.size()) != p.net.spec().input_dim)
      throw ShapeError("part " + std::to_string(k) + " input list does not match its MLP");
    for (int c : p.inputs)
      if (c < 0 || c >= input_dim_) throw ShapeError("part input column out of range");
  }
}

int FusedNet::output_dim() const {
  return parts_.empty() ? 0 : parts_.front().net.spec().output_dim;
}

std::size_t FusedNet::parameter_count() const {
  std::size_t n = 0;
  for (const FusedPart& p : parts_) n += p.net.parameter_count();
  return n;
}

Eigen::MatrixXd FusedNet::gather(const Eigen::MatrixXd& x, const FusedPart& part) const {
  if (x.cols() != input_dim_) throw ShapeError("fused input width does not match");
  return x(Eigen::all, part.inputs);
}

Eigen::MatrixXd FusedNet::forward_batch(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), output_dim());
  for (const FusedPart& p : parts_) out += p.net.forward_batch(gather(x, p));
  return out;
}

Eigen::MatrixXd FusedNet::forward_rowwise(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), output_dim());
  for (const FusedPart& p : parts_) out += p.net.forward_rowwise(gather(x, p));
  return out;
}

std::vector<Eigen::MatrixXd> FusedNet::part_outputs(const Eigen::MatrixXd& x) const {
  std::vector<Eigen::MatrixXd> outs;
  outs.reserve(parts_.size());
  for (const FusedPart& p : parts_) outs.push_back(p.net.forward_batch(gather(x, p)));
  return outs;
}

const Eigen::MatrixXd& FusedNet::forward_batch(const Eigen::MatrixXd& x, Pass& pass) const {
  pass.tapes.resize(parts_.size());
  pass.output = Eigen::MatrixXd::Zero(x.rows(), output_dim());
  for (std::size_t k = 0; k < parts_.size(); ++k)
    pass.output += parts_[k].net.forward_batch(gather(x, parts_[k]), pass.tapes[k]);
  return pass.output;
}

void FusedNet::backward_batch(const Pass& pass, const Eigen::MatrixXd& grad_output,
                              std::vector<Gradients>& grads) const {
  grads.resize(parts_.size());
  for (std::size_t k = 0; k < parts_.size(); ++k)
    parts_[k].net.backward_batch(pass.tapes[k], grad_output, grads[k]);
}

bool FusedNet::operator==(const FusedNet& other) const {
  if (input_dim_ != other.input_dim_ || parts_.size() != other.parts_.size()) return false;
  for (std::size_t k = 0; k < parts_.size(); ++k)
    if (!(parts_[k].net == other.parts_[k].net) || parts_[k].inputs != other.parts_[k].inputs)
      return false;
  return true;
}

}  // namespace covpred::nnet

#include "covpred/nnet/adam.hpp"

#include <cmath>

#include "covpred/error.hpp"

namespace covpred::nnet {

AdamState AdamState::for_network(const Mlp& m) {
  AdamState s;
  s.first_moment = m.zero_gradients();
  s.second_moment = m.zero_gradients();
  return s;
}

namespace {

template <typename Param, typename Grad>
void update(Param& p, const Grad& g, Param& m, Param& v, double b1, double b2, double step_size,
            double eps_hat) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  p.array() -= step_size * m.array() / (v.array().sqrt() + eps_hat);
}

}  // namespace

void adam_step(Mlp& m, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  auto& layers = m.layers();
  if (grads.size() != layers.size() || state.first_moment.size() != layers.size() ||
      state.second_moment.size() != layers.size())
    throw ShapeError("adam_step: gradient/state layout does not match network");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  // Bias correction folded into the step size; eps scaled to keep the
  // update identical to lr * mhat / (sqrt(vhat) + eps).
  const double step_size = cfg.learning_rate * std::sqrt(bc2) / bc1;
  const double eps_hat = cfg.epsilon * std::sqrt(bc2);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads[i].weight.rows() != layers[i].weight.rows() ||
        grads[i].weight.cols() != layers[i].weight.cols() ||
        grads[i].bias.size() != layers[i].bias.size())
      throw ShapeError("adam_step: gradient shape mismatch");
    update(layers[i].weight, grads[i].weight, state.first_moment[i].weight,
           state.second_moment[i].weight, cfg.beta1, cfg.beta2, step_size, eps_hat);
    update(layers[i].bias, grads[i].bias, state.first_moment[i].bias, state.second_moment[i].bias,
           cfg.beta1, cfg.beta2, step_size, eps_hat);
  }
}

}  // namespace covpred::nnet

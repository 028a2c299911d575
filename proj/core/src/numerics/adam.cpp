#include "mdr/numerics/adam.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"

namespace mdr {

Adam::Adam(AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 ||
      config_.beta2 >= 1.0) {
    throw ConfigError("adam: betas must lie in [0, 1)");
  }
  if (config_.weight_decay < 0.0) throw ConfigError("adam: weight decay must be >= 0");
}

void Adam::step(ParamStore& params, const GradientMap& grads) {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);

  for (Parameter& p : params.parameters()) {
    auto [m_it, m_new] = state_.first_moment.try_emplace(p.name, p.value.shape());
    auto [v_it, v_new] = state_.second_moment.try_emplace(p.name, p.value.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape()) {
      throw ConfigError("adam: state shape " + shape_string(m.shape()) +
                        " does not match parameter '" + p.name + "' " +
                        shape_string(p.value.shape()));
    }

    const Tensor* grad = nullptr;
    if (auto it = grads.find(p.name); it != grads.end()) {
      grad = &it->second;
      if (grad->shape() != p.value.shape()) {
        throw ConfigError("adam: gradient shape " + shape_string(grad->shape()) +
                          " does not match parameter '" + p.name + "' " +
                          shape_string(p.value.shape()));
      }
    } else if (warned_missing_.insert(p.name).second) {
      spdlog::warn("adam: no gradient for '{}', treating it as zero", p.name);
    }

    const double decay = p.weight_decay ? config_.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = (grad ? (*grad)[i] : 0.0) + decay * p.value[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace mdr

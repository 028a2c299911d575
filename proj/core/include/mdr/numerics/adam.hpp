#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "mdr/numerics/params.hpp"

namespace mdr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Added to the gradient as weight_decay * param (L2 style, not decoupled)
  /// for parameters whose weight_decay flag is set.
  double weight_decay = 1e-5;
};

struct AdamState {
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
  std::int64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  /// One update of every parameter in the store. A parameter missing from
  /// grads is updated with a zero gradient (weight decay still applies).
  void step(ParamStore& params, const GradientMap& grads);

  const AdamConfig& config() const { return config_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  AdamConfig config_;
  AdamState state_;
  std::set<std::string> warned_missing_;
};

}  // namespace mdr

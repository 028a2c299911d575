#pragma once

#include <map>
#include <string>
#include <vector>

#include "mdr/numerics/tape.hpp"
#include "mdr/numerics/tensor.hpp"

namespace mdr {

struct Parameter {
  std::string name;
  Tensor value;
  bool weight_decay = true;
};

using GradientMap = std::map<std::string, Tensor>;

/// Parameters bound to one tape for one step.
class BoundParams {
 public:
  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.contains(name); }

  /// Gradients after tape.backward(); zero tensors for parameters the loss
  /// never touched.
  GradientMap gradients() const;

 private:
  friend class ParamStore;
  std::map<std::string, Var> vars_;
};

/// Named trainable tensors in insertion order.
class ParamStore {
 public:
  Parameter& add(std::string name, Tensor value, bool weight_decay = true);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Parameter& parameter(const std::string& name) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t size() const { return params_.size(); }
  /// Total number of scalar entries.
  std::size_t scalar_count() const;

  BoundParams bind(Tape& tape) const;

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<Parameter> params_;
};

bool operator==(const Parameter& a, const Parameter& b);

}  // namespace mdr

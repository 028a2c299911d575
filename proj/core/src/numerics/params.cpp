#include "mdr/numerics/params.hpp"

#include <algorithm>

#include "mdr/error.hpp"

namespace mdr {

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw UsageError("parameter '" + name + "' is not bound");
  return it->second;
}

GradientMap BoundParams::gradients() const {
  GradientMap grads;
  for (const auto& [name, var] : vars_) grads.emplace(name, var.tape().grad(var));
  return grads;
}

Parameter& ParamStore::add(std::string name, Tensor value, bool weight_decay) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  params_.push_back(Parameter{std::move(name), std::move(value), weight_decay});
  return params_.back();
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

const Parameter& ParamStore::parameter(const std::string& name) const {
  auto it = std::find_if(params_.begin(), params_.end(),
                         [&](const Parameter& p) { return p.name == name; });
  if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
  return *it;
}

const Tensor& ParamStore::get(const std::string& name) const {
  return parameter(name).value;
}

Tensor& ParamStore::get(const std::string& name) {
  return const_cast<Parameter&>(parameter(name)).value;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

BoundParams ParamStore::bind(Tape& tape) const {
  BoundParams bound;
  for (const Parameter& p : params_) bound.vars_.emplace(p.name, tape.variable(p.value));
  return bound;
}

bool operator==(const Parameter& a, const Parameter& b) {
  return a.name == b.name && a.value == b.value && a.weight_decay == b.weight_decay;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  return a.params_ == b.params_;
}

}  // namespace mdr

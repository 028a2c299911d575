#include "mdr/numerics/finite_diff.hpp"

#include "mdr/error.hpp"

namespace mdr {

GradientMap finite_diff_gradient(const std::function<double(const ParamStore&)>& f,
                                 const ParamStore& params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: step must be > 0");
  ParamStore probe = params;
  GradientMap grads;
  for (Parameter& p : probe.parameters()) {
    Tensor g(p.value.shape());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value[i];
      p.value[i] = original + h;
      const double plus = f(probe);
      p.value[i] = original - h;
      const double minus = f(probe);
      p.value[i] = original;
      g[i] = (plus - minus) / (2.0 * h);
    }
    grads.emplace(p.name, std::move(g));
  }
  return grads;
}

}  // namespace mdr

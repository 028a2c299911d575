#pragma once

#include <functional>

#include "mdr/numerics/params.hpp"

namespace mdr {

/// Central differences (f(p + h) - f(p - h)) / 2h, one coordinate at a time.
/// Slow; used as a test oracle for the tape.
GradientMap finite_diff_gradient(const std::function<double(const ParamStore&)>& f,
                                 const ParamStore& params, double h = 1e-5);

}  // namespace mdr

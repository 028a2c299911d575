#pragma once

#include <cstddef>
#include <span>

#include "mdr/numerics/tape.hpp"

// Differentiable primitives. Shape errors throw ConfigError naming both
// shapes. Subgradients at kinks are zero: relu'(0) = hinge'(0) = abs'(0) = 0.
namespace mdr::ops {

Var matmul(Var a, Var b);

/// Elementwise when shapes match; a [n, m] matrix with a [m] vector
/// broadcasts the vector over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double factor);
Var shift(Var a, double offset);

Var relu(Var a);
/// max(x, 0) on loss terms. Same math as relu, kept separate so tapes read
/// naturally.
Var hinge(Var a);
Var abs(Var a);
Var square(Var a);
/// sqrt(x + eps). The gradient is zero where the result is zero.
Var sqrt(Var a, double eps = 0.0);

Var sum(Var a);
Var mean(Var a);
/// [n, m] -> [n]
Var row_sum(Var a);

/// Rows of a matrix, or entries of a vector, selected by index. Repeated
/// indices accumulate in the backward pass.
Var gather(Var a, std::span<const std::size_t> indices);

/// Row-wise x / ||x||. Rows with norm below 1e-12 are replaced by the
/// constant unit vector (1, ..., 1) / sqrt(m) and pass no gradient.
Var l2_normalize_rows(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

}  // namespace mdr::ops

#include "mdr/numerics/ops.hpp"

#include <cmath>
#include <vector>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"

namespace mdr::ops {
namespace {

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a,
                                 const Shape& b) {
  throw ConfigError(std::string(op) + ": incompatible shapes " +
                    shape_string(a) + " and " + shape_string(b));
}

bool is_row_broadcast(const Shape& matrix, const Shape& vec) {
  return matrix.size() == 2 && vec.size() == 1 && matrix[1] == vec[0];
}

// Accumulates a [n, m] gradient into a [m] vector gradient.
void reduce_rows_into(const Tensor& g, Tensor& out, double sign) {
  const std::size_t n = g.rows();
  const std::size_t m = g.cols();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) out[c] += sign * g[r * m + c];
  }
}

template <typename Fn>
Tensor map(const Tensor& a, Fn fn) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

Var add_or_sub(Var a, Var b, double sign, std::string_view op) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() == bv.shape()) {
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + sign * bv[i];
    return a.tape().record(
        std::move(out), {a, b},
        [sign](BackwardContext& ctx) {
          const Tensor& g = ctx.grad();
          if (Tensor* ga = ctx.input_grad(0)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
          }
          if (Tensor* gb = ctx.input_grad(1)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += sign * g[i];
          }
        },
        op);
  }
  if (!is_row_broadcast(av.shape(), bv.shape())) {
    shape_mismatch(op, av.shape(), bv.shape());
  }
  const std::size_t n = av.rows();
  const std::size_t m = av.cols();
  Tensor out(av.shape());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      out[r * m + c] = av[r * m + c] + sign * bv[c];
    }
  }
  return a.tape().record(
      std::move(out), {a, b},
      [sign](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = ctx.input_grad(1)) reduce_rows_into(g, *gb, sign);
      },
      op);
}

// out[n, m] += a[n, k] * b[k, m]
void gemm_nn(const double* a, const double* b, double* out, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* b_row = b + p * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
    }
  }
}

// out[n, k] += g[n, m] * b[k, m]^T
void gemm_nt(const double* g, const double* b, double* out, std::size_t n,
             std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* g_row = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += g_row[j] * b_row[j];
      out[i * k + p] += acc;
    }
  }
}

// out[k, m] += a[n, k]^T * g[n, m]
void gemm_tn(const double* a, const double* g, double* out, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* g_row = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      double* out_row = out + p * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * g_row[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    shape_mismatch("matmul", av.shape(), bv.shape());
  }
  const std::size_t n = av.rows();
  const std::size_t k = av.cols();
  const std::size_t m = bv.cols();
  Tensor out(Shape{n, m});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  return a.tape().record(
      std::move(out), {a, b},
      [n, k, m](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          gemm_nt(g.data().data(), ctx.input(1).data().data(),
                  ga->data().data(), n, m, k);
        }
        if (Tensor* gb = ctx.input_grad(1)) {
          gemm_tn(ctx.input(0).data().data(), g.data().data(),
                  gb->data().data(), n, k, m);
        }
      },
      "matmul");
}

Var add(Var a, Var b) { return add_or_sub(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_or_sub(a, b, -1.0, "sub"); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("mul", av.shape(), bv.shape());
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(
      std::move(out), {a, b},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          const Tensor& bv = ctx.input(1);
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
        }
        if (Tensor* gb = ctx.input_grad(1)) {
          const Tensor& av = ctx.input(0);
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
        }
      },
      "mul");
}

Var scale(Var a, double factor) {
  Tensor out = map(a.value(), [factor](double x) { return factor * x; });
  return a.tape().record(
      std::move(out), {a},
      [factor](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += factor * g[i];
        }
      },
      "scale");
}

Var shift(Var a, double offset) {
  Tensor out = map(a.value(), [offset](double x) { return x + offset; });
  return a.tape().record(
      std::move(out), {a},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
      },
      "shift");
}

namespace {

Var positive_part(Var a, std::string_view op) {
  const Tensor& av = a.value();
  Tape& tape = a.tape();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = av[i] > 0.0 ? av[i] : 0.0;
    if (tape.requires_grad(a)) tape.note_kink(av[i]);
  }
  return tape.record(
      std::move(out), {a},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& x = ctx.input(0);
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] > 0.0) (*ga)[i] += g[i];
          }
        }
      },
      op);
}

}  // namespace

Var relu(Var a) { return positive_part(a, "relu"); }
Var hinge(Var a) { return positive_part(a, "hinge"); }

Var abs(Var a) {
  const Tensor& av = a.value();
  Tape& tape = a.tape();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = std::abs(av[i]);
    if (tape.requires_grad(a)) tape.note_kink(av[i]);
  }
  return tape.record(
      std::move(out), {a},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& x = ctx.input(0);
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] > 0.0) {
              (*ga)[i] += g[i];
            } else if (x[i] < 0.0) {
              (*ga)[i] -= g[i];
            }
          }
        }
      },
      "abs");
}

Var square(Var a) {
  Tensor out = map(a.value(), [](double x) { return x * x; });
  return a.tape().record(
      std::move(out), {a},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& x = ctx.input(0);
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += 2.0 * x[i] * g[i];
        }
      },
      "square");
}

Var sqrt(Var a, double eps) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i] + eps;
    if (x < 0.0) {
      throw NumericalError("sqrt of negative value " + std::to_string(av[i]));
    }
    out[i] = std::sqrt(x);
  }
  return a.tape().record(
      std::move(out), {a},
      [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& y = ctx.value();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (y[i] > 0.0) (*ga)[i] += g[i] / (2.0 * y[i]);
          }
        }
      },
      "sqrt");
}

Var sum(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return a.tape().record(
      Tensor::scalar(total), {a},
      [](BackwardContext& ctx) {
        const double g = ctx.grad()[0];
        if (Tensor* ga = ctx.input_grad(0)) {
          for (double& x : ga->data()) x += g;
        }
      },
      "sum");
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ConfigError("mean of an empty tensor");
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return a.tape().record(
      Tensor::scalar(total / static_cast<double>(n)), {a},
      [n](BackwardContext& ctx) {
        const double g = ctx.grad()[0] / static_cast<double>(n);
        if (Tensor* ga = ctx.input_grad(0)) {
          for (double& x : ga->data()) x += g;
        }
      },
      "mean");
}

Var row_sum(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ConfigError("row_sum needs a matrix, got " + shape_string(av.shape()));
  const std::size_t n = av.rows();
  const std::size_t m = av.cols();
  Tensor out(Shape{n});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) acc += av[r * m + c];
    out[r] = acc;
  }
  return a.tape().record(
      std::move(out), {a},
      [n, m](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < m; ++c) (*ga)[r * m + c] += g[r];
          }
        }
      },
      "row_sum");
}

Var gather(Var a, std::span<const std::size_t> indices) {
  const Tensor& av = a.value();
  if (av.rank() != 1 && av.rank() != 2) {
    throw ConfigError("gather needs a vector or matrix, got " + shape_string(av.shape()));
  }
  const std::size_t n = av.rows();
  const std::size_t width = av.rank() == 2 ? av.cols() : 1;
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Shape out_shape = av.rank() == 2 ? Shape{idx.size(), width} : Shape{idx.size()};
  Tensor out(out_shape);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) {
      throw ConfigError("gather index " + std::to_string(idx[r]) +
                        " out of range for " + shape_string(av.shape()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = av[idx[r] * width + c];
    }
  }
  return a.tape().record(
      std::move(out), {a},
      [idx = std::move(idx), width](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t c = 0; c < width; ++c) {
              (*ga)[idx[r] * width + c] += g[r * width + c];
            }
          }
        }
      },
      "gather");
}

Var l2_normalize_rows(Var a) {
  constexpr double kMinNorm = 1e-12;
  const Tensor& av = a.value();
  if (av.rank() != 2) {
    throw ConfigError("l2_normalize_rows needs a matrix, got " + shape_string(av.shape()));
  }
  const std::size_t n = av.rows();
  const std::size_t m = av.cols();
  Tensor out(av.shape());
  std::vector<double> norms(n);
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < m; ++c) sq += av[r * m + c] * av[r * m + c];
    norms[r] = std::sqrt(sq);
    if (norms[r] < kMinNorm) {
      spdlog::warn("l2_normalize_rows: row {} has zero norm, substituting a constant unit row", r);
      const double v = 1.0 / std::sqrt(static_cast<double>(m));
      for (std::size_t c = 0; c < m; ++c) out[r * m + c] = v;
      norms[r] = 0.0;
    } else {
      for (std::size_t c = 0; c < m; ++c) out[r * m + c] = av[r * m + c] / norms[r];
    }
  }
  return a.tape().record(
      std::move(out), {a},
      [norms = std::move(norms), n, m](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& y = ctx.value();
        Tensor* ga = ctx.input_grad(0);
        if (ga == nullptr) return;
        // d(x/|x|) = (I - y y^T) / |x|
        for (std::size_t r = 0; r < n; ++r) {
          if (norms[r] == 0.0) continue;
          double dot = 0.0;
          for (std::size_t c = 0; c < m; ++c) dot += y[r * m + c] * g[r * m + c];
          for (std::size_t c = 0; c < m; ++c) {
            (*ga)[r * m + c] += (g[r * m + c] - y[r * m + c] * dot) / norms[r];
          }
        }
      },
      "l2_normalize_rows");
}

}  // namespace mdr::ops

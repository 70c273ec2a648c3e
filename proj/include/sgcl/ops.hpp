#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sgcl/tensor.hpp"

// Dense kernels for the losses and networks. Everything is float64 and
// row-major; 2-D shapes are (rows, cols), reductions produce scalars
// (shape {}). Broadcasting exists only where a row-wise op is defined.

namespace sgcl {

namespace detail {

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw dimension_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
}

inline void check_matrix(const char* op, const Tensor& t) {
  if (t.shape().size() != 2)
    throw dimension_error(std::string(op) + ": expected 2-D tensor, got " + shape_str(t.shape()));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("add", a, b);
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op("add", {a, b}, a.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   if (self.inputs[0]->requires_grad) {
                     auto& ga = gin(0);
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                   }
                   if (self.inputs[1]->requires_grad) {
                     auto& gb = gin(1);
                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                   }
                 });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op("sub", {a, b}, a.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   if (self.inputs[0]->requires_grad) {
                     auto& ga = gin(0);
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                   }
                   if (self.inputs[1]->requires_grad) {
                     auto& gb = gin(1);
                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                   }
                 });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op("mul", {a, b}, a.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   const auto& da = self.inputs[0]->data;
                   const auto& db = self.inputs[1]->data;
                   if (self.inputs[0]->requires_grad) {
                     auto& ga = gin(0);
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * db[i];
                   }
                   if (self.inputs[1]->requires_grad) {
                     auto& gb = gin(1);
                     for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * da[i];
                   }
                 });
}

inline Tensor scalar_mul(const Tensor& a, double s) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  return make_op("scalar_mul", {a}, a.shape(), std::move(out),
                 [s](const detail::Node&, const std::vector<double>& g, const auto& gin) {
                   auto& ga = gin(0);
                   for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
                 });
}

// x: (m,n), bias: (n). Adds bias to every row.
inline Tensor add_row_vector(const Tensor& x, const Tensor& bias) {
  detail::check_matrix("add_row_vector", x);
  if (bias.shape().size() != 1 || bias.shape()[0] != x.cols())
    throw dimension_error("add_row_vector: bias shape " + shape_str(bias.shape()) +
                          " does not match " + shape_str(x.shape()));
  const auto m = x.rows(), n = x.cols();
  std::vector<double> out(x.data().size());
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      out[i * n + j] = x.data()[i * n + j] + bias.data()[j];
  return make_op("add_row_vector", {x, bias}, x.shape(), std::move(out),
                 [m, n](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   if (self.inputs[0]->requires_grad) {
                     auto& gx = gin(0);
                     for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                   }
                   if (self.inputs[1]->requires_grad) {
                     auto& gb = gin(1);
                     for (std::int64_t i = 0; i < m; ++i)
                       for (std::int64_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                   }
                 });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::check_matrix("matmul", a);
  detail::check_matrix("matmul", b);
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw dimension_error("matmul: inner dimensions " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      for (std::int64_t j = 0; j < n; ++j) out[i * n + j] += av * pb[p * n + j];
    }
  return make_op(
      "matmul", {a, b}, {m, n}, std::move(out),
      [m, k, n](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
        const auto& da = self.inputs[0]->data;
        const auto& db = self.inputs[1]->data;
        if (self.inputs[0]->requires_grad) {
          auto& ga = gin(0);  // dA = g * B^T
          for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j) {
              const double gv = g[i * n + j];
              if (gv == 0.0) continue;
              for (std::int64_t p = 0; p < k; ++p) ga[i * k + p] += gv * db[p * n + j];
            }
        }
        if (self.inputs[1]->requires_grad) {
          auto& gb = gin(1);  // dB = A^T * g
          for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t p = 0; p < k; ++p) {
              const double av = da[i * k + p];
              if (av == 0.0) continue;
              for (std::int64_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
            }
        }
      });
}

inline Tensor transpose(const Tensor& x) {
  detail::check_matrix("transpose", x);
  const auto m = x.rows(), n = x.cols();
  std::vector<double> out(x.data().size());
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
  return make_op("transpose", {x}, {n, m}, std::move(out),
                 [m, n](const detail::Node&, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   for (std::int64_t i = 0; i < m; ++i)
                     for (std::int64_t j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
                 });
}

inline Tensor exp(const Tensor& x) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x.data()[i]);
  return make_op("exp", {x}, x.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * self.data[i];
                 });
}

// log(max(x, 1e-12)); the clamp guards the K*log(Q) terms of the losses.
// In the clamped region the derivative is zero.
inline constexpr double kLogClamp = 1e-12;

inline Tensor log(const Tensor& x) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(x.data()[i], kLogClamp));
  return make_op("log", {x}, x.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   const auto& dx = self.inputs[0]->data;
                   for (std::size_t i = 0; i < g.size(); ++i)
                     if (dx[i] > kLogClamp) gx[i] += g[i] / dx[i];
                 });
}

inline Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.data()[i]);
  return make_op("tanh", {x}, x.shape(), std::move(out),
                 [](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   for (std::size_t i = 0; i < g.size(); ++i)
                     gx[i] += g[i] * (1.0 - self.data[i] * self.data[i]);
                 });
}

// Row-wise softmax of x / temp, computed with max subtraction.
inline Tensor softmax_rows(const Tensor& x, double temp) {
  detail::check_matrix("softmax_rows", x);
  if (!(temp > 0.0)) throw config_error("softmax_rows: temperature must be positive");
  const auto m = x.rows(), n = x.cols();
  std::vector<double> out(x.data().size());
  for (std::int64_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mx = row[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double e = std::exp((row[j] - mx) / temp);
      out[i * n + j] = e;
      sum += e;
    }
    for (std::int64_t j = 0; j < n; ++j) out[i * n + j] /= sum;
  }
  return make_op(
      "softmax_rows", {x}, x.shape(), std::move(out),
      [m, n, temp](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
        auto& gx = gin(0);
        for (std::int64_t i = 0; i < m; ++i) {
          const double* s = self.data.data() + i * n;
          const double* gr = g.data() + i * n;
          double dot = 0.0;
          for (std::int64_t j = 0; j < n; ++j) dot += gr[j] * s[j];
          for (std::int64_t j = 0; j < n; ++j) gx[i * n + j] += s[j] * (gr[j] - dot) / temp;
        }
      });
}

// Rows scaled to unit L2 norm. Rows with norm < 1e-12 stay exactly zero and
// carry zero gradient; their indices are appended to *zero_rows if given.
inline Tensor l2_normalize_rows(const Tensor& x, std::vector<std::int64_t>* zero_rows = nullptr) {
  detail::check_matrix("l2_normalize_rows", x);
  const auto m = x.rows(), n = x.cols();
  std::vector<double> out(x.data().size());
  std::vector<double> norms(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (std::int64_t j = 0; j < n; ++j) sq += x.data()[i * n + j] * x.data()[i * n + j];
    const double r = std::sqrt(sq);
    norms[static_cast<std::size_t>(i)] = r;
    if (r < 1e-12) {
      if (zero_rows) zero_rows->push_back(i);
      for (std::int64_t j = 0; j < n; ++j) out[i * n + j] = 0.0;
    } else {
      for (std::int64_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] / r;
    }
  }
  return make_op(
      "l2_normalize_rows", {x}, x.shape(), std::move(out),
      [m, n, norms](const detail::Node& self, const std::vector<double>& g, const auto& gin) {
        auto& gx = gin(0);
        for (std::int64_t i = 0; i < m; ++i) {
          const double r = norms[static_cast<std::size_t>(i)];
          if (r < 1e-12) continue;
          const double* y = self.data.data() + i * n;
          const double* gr = g.data() + i * n;
          double dot = 0.0;
          for (std::int64_t j = 0; j < n; ++j) dot += gr[j] * y[j];
          for (std::int64_t j = 0; j < n; ++j) gx[i * n + j] += (gr[j] - dot * y[j]) / r;
        }
      });
}

inline Tensor gather_rows(const Tensor& x, std::vector<std::int64_t> idx) {
  detail::check_matrix("gather_rows", x);
  const auto m = x.rows(), n = x.cols();
  for (const auto i : idx)
    if (i < 0 || i >= m)
      throw dimension_error("gather_rows: index " + std::to_string(i) + " out of range [0," +
                            std::to_string(m) + ")");
  const auto out_m = static_cast<std::int64_t>(idx.size());
  std::vector<double> out(static_cast<std::size_t>(out_m * n));
  for (std::int64_t r = 0; r < out_m; ++r)
    for (std::int64_t j = 0; j < n; ++j) out[r * n + j] = x.data()[idx[r] * n + j];
  return make_op("gather_rows", {x}, {out_m, n}, std::move(out),
                 [idx = std::move(idx), n](const detail::Node&, const std::vector<double>& g,
                                           const auto& gin) {
                   auto& gx = gin(0);
                   for (std::size_t r = 0; r < idx.size(); ++r)
                     for (std::int64_t j = 0; j < n; ++j)
                       gx[idx[r] * n + j] += g[static_cast<std::int64_t>(r) * n + j];
                 });
}

// Averages rows sharing a segment id into one row per segment. Every segment
// in [0, num_segments) must be hit by at least one row.
inline Tensor segment_mean(const Tensor& x, const std::vector<std::int64_t>& segment_ids,
                           std::int64_t num_segments) {
  detail::check_matrix("segment_mean", x);
  const auto m = x.rows(), n = x.cols();
  if (static_cast<std::int64_t>(segment_ids.size()) != m)
    throw dimension_error("segment_mean: ids size " + std::to_string(segment_ids.size()) +
                          " vs rows " + std::to_string(m));
  std::vector<double> counts(static_cast<std::size_t>(num_segments), 0.0);
  std::vector<double> out(static_cast<std::size_t>(num_segments * n), 0.0);
  for (std::int64_t i = 0; i < m; ++i) {
    const auto s = segment_ids[static_cast<std::size_t>(i)];
    if (s < 0 || s >= num_segments)
      throw dimension_error("segment_mean: segment id " + std::to_string(s) + " out of range");
    counts[static_cast<std::size_t>(s)] += 1.0;
    for (std::int64_t j = 0; j < n; ++j) out[s * n + j] += x.data()[i * n + j];
  }
  for (std::int64_t s = 0; s < num_segments; ++s) {
    if (counts[static_cast<std::size_t>(s)] == 0.0)
      throw precondition_error("segment_mean: segment " + std::to_string(s) + " is empty");
    for (std::int64_t j = 0; j < n; ++j) out[s * n + j] /= counts[static_cast<std::size_t>(s)];
  }
  return make_op("segment_mean", {x}, {num_segments, n}, std::move(out),
                 [ids = segment_ids, counts, n](const detail::Node&, const std::vector<double>& g,
                                                const auto& gin) {
                   auto& gx = gin(0);
                   for (std::size_t i = 0; i < ids.size(); ++i) {
                     const auto s = ids[i];
                     const double inv = 1.0 / counts[static_cast<std::size_t>(s)];
                     for (std::int64_t j = 0; j < n; ++j)
                       gx[static_cast<std::int64_t>(i) * n + j] += g[s * n + j] * inv;
                   }
                 });
}

// out_i = mean over the neighbor list of row i. `neighbors` is row-major
// (m, k); rows with k=0 (empty graph) pass through unchanged.
inline Tensor neighbor_mean(const Tensor& x, const std::vector<std::int64_t>& neighbors,
                            std::int64_t k) {
  detail::check_matrix("neighbor_mean", x);
  const auto m = x.rows(), n = x.cols();
  if (k == 0) return make_op("neighbor_mean", {x}, x.shape(), std::vector<double>(x.data()),
                             [](const detail::Node&, const std::vector<double>& g, const auto& gin) {
                               auto& gx = gin(0);
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                             });
  if (static_cast<std::int64_t>(neighbors.size()) != m * k)
    throw dimension_error("neighbor_mean: neighbor list size mismatch");
  std::vector<double> out(x.data().size(), 0.0);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t t = 0; t < k; ++t) {
      const auto j = neighbors[static_cast<std::size_t>(i * k + t)];
      if (j < 0 || j >= m) throw dimension_error("neighbor_mean: neighbor index out of range");
      for (std::int64_t c = 0; c < n; ++c) out[i * n + c] += x.data()[j * n + c];
    }
    for (std::int64_t c = 0; c < n; ++c) out[i * n + c] /= static_cast<double>(k);
  }
  return make_op("neighbor_mean", {x}, x.shape(), std::move(out),
                 [nbrs = neighbors, k, m, n](const detail::Node&, const std::vector<double>& g,
                                             const auto& gin) {
                   auto& gx = gin(0);
                   const double inv = 1.0 / static_cast<double>(k);
                   for (std::int64_t i = 0; i < m; ++i)
                     for (std::int64_t t = 0; t < k; ++t) {
                       const auto j = nbrs[static_cast<std::size_t>(i * k + t)];
                       for (std::int64_t c = 0; c < n; ++c) gx[j * n + c] += g[i * n + c] * inv;
                     }
                 });
}

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (const double v : x.data()) s += v;
  return make_op("sum", {x}, {}, {s},
                 [](const detail::Node&, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   for (auto& v : gx) v += g[0];
                 });
}

inline Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw empty_input_error("mean: empty tensor");
  double s = 0.0;
  for (const double v : x.data()) s += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return make_op("mean", {x}, {}, {s * inv},
                 [inv](const detail::Node&, const std::vector<double>& g, const auto& gin) {
                   auto& gx = gin(0);
                   for (auto& v : gx) v += g[0] * inv;
                 });
}

// sum_i w_i * x_i with constant weights; the workhorse of both losses.
inline Tensor weighted_sum(const Tensor& x, std::vector<double> weights) {
  if (weights.size() != x.data().size())
    throw dimension_error("weighted_sum: weight count " + std::to_string(weights.size()) +
                          " vs elements " + std::to_string(x.data().size()));
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x.data()[i];
  return make_op("weighted_sum", {x}, {}, {s},
                 [w = std::move(weights)](const detail::Node&, const std::vector<double>& g,
                                          const auto& gin) {
                   auto& gx = gin(0);
                   for (std::size_t i = 0; i < w.size(); ++i) gx[i] += g[0] * w[i];
                 });
}

}  // namespace sgcl

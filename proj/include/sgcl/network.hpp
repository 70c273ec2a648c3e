#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sgcl/knn.hpp"
#include "sgcl/ops.hpp"
#include "sgcl/pointcloud.hpp"
#include "sgcl/tensor.hpp"

// Student/teacher network pair: a point MLP trunk with kNN mean aggregation
// between blocks, projector heads g (grouping) and h (contrastive), an
// asymmetric predictor on the student's h branch, and n learnable unit-norm
// prototypes. The teacher is the EMA of the student and never sees a
// gradient.

namespace sgcl {

struct EncoderConfig {
  std::vector<std::int64_t> widths = {32, 64};
  std::int64_t feature_dim = 32;  // D
  std::int64_t knn_k = 8;
  bool colors_centered = false;  // feed colors as [-0.5, 0.5] instead of [0, 1]
  bool predictor = true;
  std::int64_t prototypes = 32;  // n

  void validate() const {
    if (feature_dim < 2) throw config_error("encoder: feature_dim must be >= 2");
    if (prototypes < 2) throw config_error("encoder: need at least 2 prototypes");
    if (widths.empty()) throw config_error("encoder: widths must be nonempty");
    for (const auto w : widths)
      if (w < 1) throw config_error("encoder: widths must be positive");
    if (knn_k < 1) throw config_error("encoder: knn_k must be >= 1");
  }
};

struct NamedParams {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor& at(const std::string& name) {
    for (auto& [n, t] : items)
      if (n == name) return t;
    throw precondition_error("unknown parameter: " + name);
  }
  const Tensor& at(const std::string& name) const {
    return const_cast<NamedParams*>(this)->at(name);
  }
  bool has(const std::string& name) const {
    for (const auto& [n, _] : items)
      if (n == name) return true;
    return false;
  }
};

struct ModelState {
  EncoderConfig cfg;
  NamedParams student;  // requires_grad leaves
  NamedParams teacher;  // same names minus pred.*, no gradient ever
  std::vector<double> center;  // n-vector c, teacher logit bias
  std::int64_t step = 0;
};

// Rows i.i.d. standard normal, then l2-normalized.
inline Tensor init_prototypes(std::int64_t n, std::int64_t dim, std::uint64_t seed,
                              bool requires_grad = true) {
  if (n < 2 || dim < 2) throw config_error("init_prototypes: need n >= 2 and D >= 2");
  Rng rng(mix_seed(seed, 0x9407));
  std::vector<double> data(static_cast<std::size_t>(n * dim));
  for (auto& v : data) v = rng.normal();
  for (std::int64_t r = 0; r < n; ++r) {
    double sq = 0.0;
    for (std::int64_t c = 0; c < dim; ++c) sq += data[r * dim + c] * data[r * dim + c];
    const double inv = 1.0 / std::sqrt(sq);
    for (std::int64_t c = 0; c < dim; ++c) data[r * dim + c] *= inv;
  }
  return Tensor::leaf({n, dim}, std::move(data), requires_grad);
}

namespace net_detail {

inline constexpr std::int64_t kInputDim = 9;  // centered xyz, rgb, normal

inline Tensor init_linear(Rng& rng, std::int64_t fan_in, std::int64_t fan_out, bool requires_grad) {
  std::vector<double> w(static_cast<std::size_t>(fan_in * fan_out));
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w) v = rng.normal(0.0, scale);
  return Tensor::leaf({fan_in, fan_out}, std::move(w), requires_grad);
}

inline void push_linear(NamedParams& p, Rng& rng, const std::string& prefix, std::int64_t fan_in,
                        std::int64_t fan_out, bool requires_grad) {
  p.items.emplace_back(prefix + ".W", init_linear(rng, fan_in, fan_out, requires_grad));
  p.items.emplace_back(prefix + ".b",
                       Tensor::zeros({fan_out}, requires_grad));
}

inline NamedParams init_params(const EncoderConfig& cfg, std::uint64_t seed, bool student) {
  NamedParams p;
  Rng rng(mix_seed(seed, 0x57d));  // one stream; teacher starts equal to the student
  std::int64_t in = kInputDim;
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    push_linear(p, rng, "trunk." + std::to_string(i), in, cfg.widths[i], student);
    in = cfg.widths[i];
  }
  push_linear(p, rng, "trunk.out", in, cfg.feature_dim, student);
  for (const char* head : {"g", "h"}) {
    push_linear(p, rng, std::string(head) + ".0", cfg.feature_dim, cfg.feature_dim, student);
    push_linear(p, rng, std::string(head) + ".1", cfg.feature_dim, cfg.feature_dim, student);
  }
  if (student && cfg.predictor) {
    push_linear(p, rng, "pred.0", cfg.feature_dim, cfg.feature_dim, student);
    push_linear(p, rng, "pred.1", cfg.feature_dim, cfg.feature_dim, student);
  }
  p.items.emplace_back("prototypes",
                       init_prototypes(cfg.prototypes, cfg.feature_dim, seed, student));
  return p;
}

}  // namespace net_detail

inline ModelState init_model(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelState s;
  s.cfg = cfg;
  s.student = net_detail::init_params(cfg, seed, true);
  s.teacher = net_detail::init_params(cfg, seed, false);  // identical values, no grad
  s.center.assign(static_cast<std::size_t>(cfg.prototypes), 0.0);
  return s;
}

struct EncodeResult {
  Tensor trunk;     // (M, D) backbone features
  Tensor group;     // (M, D) projector g output
  Tensor contrast;  // (M, D) projector h output; student adds the predictor
};

// Per-point features for a point subset. The input row is (coords - subset
// centroid, colors, normal); between trunk blocks features are blended with
// the mean over knn_k graph neighbors. Permutation equivariant as long as
// nearest neighbors are unambiguous.
inline EncodeResult encode(const PointCloud& points, const NamedParams& params,
                           const EncoderConfig& cfg, bool student_branch) {
  if (points.size() == 0) throw empty_input_error("encode: empty point set");
  if (!points.has_normals()) throw precondition_error("encode: points need normals");
  const auto m = points.size();

  const Vec3 center = points.centroid();
  std::vector<double> input(static_cast<std::size_t>(m * net_detail::kInputDim));
  for (std::int64_t i = 0; i < m; ++i) {
    const auto s = static_cast<std::size_t>(i);
    double* row = input.data() + i * net_detail::kInputDim;
    for (int a = 0; a < 3; ++a) row[a] = points.coords[s][a] - center[a];
    for (int a = 0; a < 3; ++a)
      row[3 + a] = points.colors[s][a] - (cfg.colors_centered ? 0.5 : 0.0);
    for (int a = 0; a < 3; ++a) row[6 + a] = points.normals[s][a];
  }
  Tensor x = Tensor::leaf({m, net_detail::kInputDim}, std::move(input));

  std::vector<std::int64_t> nbrs;
  std::int64_t k_eff = 0;
  if (m >= 2) {
    const KnnGraph g = knn_graph(points, cfg.knn_k);
    nbrs = g.flat_targets();
    k_eff = g.k;
  }

  auto linear = [&](const Tensor& t, const std::string& prefix) {
    return add_row_vector(matmul(t, params.at(prefix + ".W")), params.at(prefix + ".b"));
  };

  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    x = tanh(linear(x, "trunk." + std::to_string(i)));
    if (k_eff > 0) x = scalar_mul(add(x, neighbor_mean(x, nbrs, k_eff)), 0.5);
  }
  EncodeResult out;
  out.trunk = linear(x, "trunk.out");
  out.group = linear(tanh(linear(out.trunk, "g.0")), "g.1");
  out.contrast = linear(tanh(linear(out.trunk, "h.0")), "h.1");
  if (student_branch && cfg.predictor && params.has("pred.0.W"))
    out.contrast = linear(tanh(linear(out.contrast, "pred.0")), "pred.1");
  return out;
}

// p_teacher <- momentum * p_teacher + (1 - momentum) * p_student, for every
// teacher parameter (the predictor has no teacher counterpart). The center
// is not an EMA target of any parameter and stays untouched.
inline void ema_update(ModelState& state, double momentum) {
  if (momentum < 0.0 || momentum > 1.0)
    throw config_error("ema_update: momentum must lie in [0,1]");
  for (auto& [name, teacher_param] : state.teacher.items) {
    const Tensor& student_param = state.student.at(name);
    auto& t = teacher_param.mutable_data();
    const auto& s = student_param.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = momentum * t[i] + (1.0 - momentum) * s[i];
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned little-endian binary blob.
// layout: magic "SGCLCKP1", u32 version, encoder config, u64 echo length +
// config echo text, student params, teacher params, center, step. Each
// param: u32 name length, name, u32 ndim, i64 dims, f64 data.
// ---------------------------------------------------------------------------

namespace ckpt_detail {

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw io_error("truncated checkpoint: " + path);
  return v;
}

inline void put_params(std::ofstream& out, const NamedParams& params) {
  put<std::uint64_t>(out, params.items.size());
  for (const auto& [name, t] : params.items) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (const auto d : t.shape()) put<std::int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.data().size() * sizeof(double)));
  }
}

inline NamedParams get_params(std::ifstream& in, const std::string& path, bool requires_grad) {
  NamedParams p;
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw io_error("truncated checkpoint: " + path);
    const auto ndim = get<std::uint32_t>(in, path);
    Shape shape(ndim);
    for (auto& d : shape) d = get<std::int64_t>(in, path);
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw io_error("truncated checkpoint: " + path);
    p.items.emplace_back(name, Tensor::leaf(std::move(shape), std::move(data), requires_grad));
  }
  return p;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const ModelState& state, const std::string& path,
                            const std::string& config_echo = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  out.write("SGCLCKP1", 8);
  ckpt_detail::put<std::uint32_t>(out, 1);

  ckpt_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(state.cfg.widths.size()));
  for (const auto w : state.cfg.widths) ckpt_detail::put<std::int64_t>(out, w);
  ckpt_detail::put<std::int64_t>(out, state.cfg.feature_dim);
  ckpt_detail::put<std::int64_t>(out, state.cfg.knn_k);
  ckpt_detail::put<std::uint8_t>(out, state.cfg.colors_centered ? 1 : 0);
  ckpt_detail::put<std::uint8_t>(out, state.cfg.predictor ? 1 : 0);
  ckpt_detail::put<std::int64_t>(out, state.cfg.prototypes);

  ckpt_detail::put<std::uint64_t>(out, config_echo.size());
  out.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));

  ckpt_detail::put_params(out, state.student);
  ckpt_detail::put_params(out, state.teacher);
  ckpt_detail::put<std::uint64_t>(out, state.center.size());
  out.write(reinterpret_cast<const char*>(state.center.data()),
            static_cast<std::streamsize>(state.center.size() * sizeof(double)));
  ckpt_detail::put<std::int64_t>(out, state.step);
  if (!out) throw io_error("write failure on checkpoint: " + path);
}

struct LoadedCheckpoint {
  ModelState state;
  std::string config_echo;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "SGCLCKP1", 8) != 0)
    throw parse_error("not a checkpoint file: " + path);
  const auto version = ckpt_detail::get<std::uint32_t>(in, path);
  if (version != 1)
    throw parse_error("unsupported checkpoint version " + std::to_string(version) + ": " + path);

  LoadedCheckpoint out;
  EncoderConfig& cfg = out.state.cfg;
  const auto n_widths = ckpt_detail::get<std::uint32_t>(in, path);
  cfg.widths.resize(n_widths);
  for (auto& w : cfg.widths) w = ckpt_detail::get<std::int64_t>(in, path);
  cfg.feature_dim = ckpt_detail::get<std::int64_t>(in, path);
  cfg.knn_k = ckpt_detail::get<std::int64_t>(in, path);
  cfg.colors_centered = ckpt_detail::get<std::uint8_t>(in, path) != 0;
  cfg.predictor = ckpt_detail::get<std::uint8_t>(in, path) != 0;
  cfg.prototypes = ckpt_detail::get<std::int64_t>(in, path);

  const auto echo_len = ckpt_detail::get<std::uint64_t>(in, path);
  out.config_echo.resize(echo_len);
  if (echo_len > 0 && !in.read(out.config_echo.data(), static_cast<std::streamsize>(echo_len)))
    throw io_error("truncated checkpoint: " + path);

  out.state.student = ckpt_detail::get_params(in, path, true);
  out.state.teacher = ckpt_detail::get_params(in, path, false);
  const auto center_len = ckpt_detail::get<std::uint64_t>(in, path);
  out.state.center.resize(center_len);
  if (center_len > 0 &&
      !in.read(reinterpret_cast<char*>(out.state.center.data()),
               static_cast<std::streamsize>(center_len * sizeof(double))))
    throw io_error("truncated checkpoint: " + path);
  out.state.step = ckpt_detail::get<std::int64_t>(in, path);
  return out;
}

}  // namespace sgcl

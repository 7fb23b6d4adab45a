#pragma once

// Linear descriptor encoder z = normalize(W x + b) and its Adam state.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ilgen/binary_io.hpp"
#include "ilgen/descriptor.hpp"
#include "ilgen/hash.hpp"
#include "ilgen/rng.hpp"

namespace ilgen {

inline constexpr double kBiasRetryPerturbation = 1e-8;

template <Real T>
struct LinearEncoder {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<T> weight;  // out_dim x in_dim, row-major
  std::vector<T> bias;    // out_dim

  LinearEncoder() = default;
  LinearEncoder(std::size_t in, std::size_t out) : in_dim(in), out_dim(out), weight(in * out, T{0}), bias(out, T{0}) {
    require(in > 0 && out > 0, Errc::invalid_argument, "encoder dimensions must be positive");
  }

  template <Real U>
  LinearEncoder<U> cast() const {
    LinearEncoder<U> out(in_dim, out_dim);
    for (std::size_t i = 0; i < weight.size(); ++i) out.weight[i] = static_cast<U>(weight[i]);
    for (std::size_t i = 0; i < bias.size(); ++i) out.bias[i] = static_cast<U>(bias[i]);
    return out;
  }

  /// Pre-normalization activation W x + b, accumulated in double.
  std::vector<double> activation(std::span<const double> x) const {
    require(x.size() == in_dim, Errc::dimension_mismatch,
            "feature dim " + std::to_string(x.size()) + " != encoder input " + std::to_string(in_dim));
    std::vector<double> u(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
      double acc = static_cast<double>(bias[r]);
      const T* row = weight.data() + r * in_dim;
      for (std::size_t c = 0; c < in_dim; ++c) acc += static_cast<double>(row[c]) * x[c];
      u[r] = acc;
    }
    return u;
  }

  friend bool operator==(const LinearEncoder&, const LinearEncoder&) = default;
};

/// Adds 1e-8 to every component when `u` is numerically zero, matching a
/// single retry with a perturbed bias.
inline void perturb_if_degenerate(std::vector<double>& u) {
  if (l2_norm(std::span<const double>(u)) < kZeroNormThreshold)
    for (double& v : u) v += kBiasRetryPerturbation;
}

template <Real T>
Descriptor encode(const LinearEncoder<T>& enc, std::span<const double> x) {
  auto u = enc.activation(x);
  perturb_if_degenerate(u);
  return normalize(std::span<const double>(u));
}

/// W ~ N(0, 1/in_dim), b = 0.
inline LinearEncoder<float> init_encoder(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  LinearEncoder<float> enc(in_dim, out_dim);
  Rng rng(split_seed(seed, "encoder-init"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& w : enc.weight) w = static_cast<float>(rng.normal() * scale);
  return enc;
}

struct AdamMoments {
  std::vector<float> m;
  std::vector<float> v;

  explicit AdamMoments(std::size_t n = 0) : m(n, 0.0f), v(n, 0.0f) {}
  friend bool operator==(const AdamMoments&, const AdamMoments&) = default;
};

struct AdamConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Decoupled weight decay (p -= lr * wd * p) followed by the Adam update.
/// `step` is the 1-based step index used for bias correction.
inline void adam_update(std::span<float> params, std::span<const double> grad, AdamMoments& st, std::uint64_t step,
                        const AdamConfig& cfg) {
  require(params.size() == grad.size() && st.m.size() == params.size(), Errc::dimension_mismatch,
          "parameter, gradient and moment sizes differ");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double p = params[i];
    if (cfg.weight_decay != 0.0) p -= cfg.learning_rate * cfg.weight_decay * p;
    const double m = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    const double v = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    st.m[i] = static_cast<float>(m);
    st.v[i] = static_cast<float>(v);
    if (cfg.learning_rate != 0.0) p -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    params[i] = static_cast<float>(p);
  }
}

/// Trainable encoder state as written to checkpoints.
struct EncoderParams {
  LinearEncoder<float> encoder;
  AdamMoments weight_moments;
  AdamMoments bias_moments;
  std::uint64_t step = 0;

  EncoderParams() = default;
  explicit EncoderParams(LinearEncoder<float> enc)
      : encoder(std::move(enc)), weight_moments(encoder.weight.size()), bias_moments(encoder.bias.size()) {}

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// SHA-256 over the little-endian bytes of W then b (moments excluded).
inline std::string parameter_fingerprint(const LinearEncoder<float>& enc) {
  ByteWriter w;
  w.f32s(enc.weight);
  w.f32s(enc.bias);
  return sha256_hex(w.bytes());
}

// Checkpoint: "ILCK" | u16 version | u32 D_in | u32 d | u64 step |
//             W | b | m_W | v_W | m_b | v_b   (little-endian f32)
inline constexpr std::string_view kCheckpointMagic = "ILCK";
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline Bytes encode_checkpoint(const EncoderParams& p) {
  const auto& e = p.encoder;
  ByteWriter w;
  w.raw(kCheckpointMagic);
  w.le<std::uint16_t>(kCheckpointVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(e.in_dim));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(e.out_dim));
  w.le<std::uint64_t>(p.step);
  w.f32s(e.weight);
  w.f32s(e.bias);
  w.f32s(p.weight_moments.m);
  w.f32s(p.weight_moments.v);
  w.f32s(p.bias_moments.m);
  w.f32s(p.bias_moments.v);
  return std::move(w).bytes();
}

inline EncoderParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  require(r.raw(4) == kCheckpointMagic, Errc::format_error, "bad checkpoint magic");
  const auto version = r.le<std::uint16_t>();
  require(version == kCheckpointVersion, Errc::format_error, "unsupported checkpoint version " + std::to_string(version));
  const std::size_t in = r.le<std::uint32_t>();
  const std::size_t out = r.le<std::uint32_t>();
  require(in > 0 && out > 0, Errc::format_error, "zero encoder dimension");
  const std::uint64_t step = r.le<std::uint64_t>();
  const std::size_t nw = in * out;
  require(r.remaining() == 4 * (3 * nw + 3 * out), Errc::format_error, "checkpoint size does not match dimensions");
  EncoderParams p(LinearEncoder<float>(in, out));
  p.step = step;
  p.encoder.weight = r.f32s(nw);
  p.encoder.bias = r.f32s(out);
  p.weight_moments.m = r.f32s(nw);
  p.weight_moments.v = r.f32s(nw);
  p.bias_moments.m = r.f32s(out);
  p.bias_moments.v = r.f32s(out);
  for (float x : p.encoder.weight) require(std::isfinite(x), Errc::format_error, "non-finite weight");
  return p;
}

inline void write_checkpoint(const std::filesystem::path& path, const EncoderParams& p) {
  write_file_atomic(path, encode_checkpoint(p));
}

inline EncoderParams read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace ilgen

#pragma once

// Retrieval substrate: unit-norm descriptors, cosine scoring and deterministic
// ranking. Scores accumulate in double regardless of the storage type.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ilgen/error.hpp"

namespace ilgen {

inline constexpr double kZeroNormThreshold = 1e-12;

template <typename T>
concept Real = std::floating_point<T>;

/// Unit-L2-norm embedding vector. Only obtainable through `normalize`.
class Descriptor {
 public:
  Descriptor() = default;

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  operator std::span<const double>() const noexcept { return values_; }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;

 private:
  template <Real T>
  friend Descriptor normalize(std::span<const T> v);

  explicit Descriptor(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

template <Real T, Real U>
double dot(std::span<const T> a, std::span<const U> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <Real T>
double l2_norm(std::span<const T> v) noexcept {
  return std::sqrt(dot(v, v));
}

/// Scales `v` to unit L2 norm. Throws ZeroVector when ||v|| < 1e-12 and
/// NonFinite when any component is NaN or infinite.
template <Real T>
Descriptor normalize(std::span<const T> v) {
  require(!v.empty(), Errc::zero_vector, "empty vector");
  for (T x : v) require(std::isfinite(x), Errc::non_finite, "vector has NaN/Inf component");
  const double norm = l2_norm(v);
  require(norm >= kZeroNormThreshold, Errc::zero_vector, "norm below 1e-12");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) / norm;
  return Descriptor(std::move(out));
}

inline Descriptor normalize(const std::vector<double>& v) { return normalize(std::span<const double>(v)); }
inline Descriptor normalize(const std::vector<float>& v) { return normalize(std::span<const float>(v)); }

/// Row-major matrix of descriptors, each row bound to a unique image id.
/// Immutable once built; share freely across threads.
template <Real T = float>
class BasicDescriptorSet {
 public:
  using value_type = T;

  BasicDescriptorSet() = default;
  explicit BasicDescriptorSet(std::size_t dim) : dim_(dim) {
    require(dim > 0, Errc::dimension_mismatch, "descriptor dimension must be positive");
  }

  /// Takes raw rows verbatim (no normalization); used by the file reader.
  static BasicDescriptorSet from_rows(std::vector<std::string> ids, std::vector<T> values, std::size_t dim) {
    BasicDescriptorSet set(dim);
    require(values.size() == ids.size() * dim, Errc::dimension_mismatch, "values size != n*d");
    for (T x : values) require(std::isfinite(x), Errc::non_finite, "descriptor set has NaN/Inf");
    set.values_ = std::move(values);
    set.ids_ = std::move(ids);
    set.index_.reserve(set.ids_.size());
    for (const auto& id : set.ids_)
      require(set.index_.insert(id).second, Errc::duplicate_id, "duplicate image id '" + id + "'");
    return set;
  }

  void add(std::string id, const Descriptor& d) {
    if (dim_ == 0 && ids_.empty()) dim_ = d.dim();
    require(d.dim() == dim_, Errc::dimension_mismatch,
            "row dim " + std::to_string(d.dim()) + " != set dim " + std::to_string(dim_));
    require(!index_.contains(id), Errc::duplicate_id, "duplicate image id '" + id + "'");
    index_.insert(id);
    ids_.push_back(std::move(id));
    for (double x : d.values()) values_.push_back(static_cast<T>(x));
  }

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const noexcept { return ids_[i]; }
  std::span<const T> row(std::size_t i) const noexcept { return {values_.data() + i * dim_, dim_}; }
  std::span<const T> data() const noexcept { return values_; }
  bool contains(const std::string& id) const { return index_.contains(id); }

  /// Copy of the set with every row re-normalized (for externally produced descriptors).
  BasicDescriptorSet normalized() const {
    BasicDescriptorSet out(dim_);
    for (std::size_t i = 0; i < size(); ++i) out.add(ids_[i], normalize(row(i)));
    return out;
  }

  friend bool operator==(const BasicDescriptorSet& a, const BasicDescriptorSet& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<T> values_;
  std::unordered_set<std::string> index_;
};

using DescriptorSet = BasicDescriptorSet<float>;

/// One cosine similarity per database row.
using ScoreVector = std::vector<double>;

/// Dot product of `query` against every row; equals cosine similarity for unit rows.
template <Real Q, Real T>
ScoreVector cosine_scores(std::span<const Q> query, const BasicDescriptorSet<T>& db) {
  require(!db.empty(), Errc::empty_input, "empty database");
  require(query.size() == db.dim(), Errc::dimension_mismatch,
          "query dim " + std::to_string(query.size()) + " != database dim " + std::to_string(db.dim()));
  ScoreVector scores(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) scores[i] = dot(query, db.row(i));
  return scores;
}

template <Real T>
ScoreVector cosine_scores(const Descriptor& query, const BasicDescriptorSet<T>& db) {
  return cosine_scores(query.values(), db);
}

/// Database ids ordered by descending score; equal scores are ordered by
/// ascending id (byte-wise lexicographic).
struct RankedList {
  std::vector<std::string> ids;
  std::vector<double> scores;

  std::size_t size() const noexcept { return ids.size(); }
};

/// Permutation that sorts `scores` descending, ties by ascending `ids[i]`.
inline std::vector<std::size_t> rank_order(std::span<const double> scores, std::span<const std::string> ids) {
  require(scores.size() == ids.size(), Errc::length_mismatch,
          "scores has " + std::to_string(scores.size()) + " entries, ids has " + std::to_string(ids.size()));
  for (double s : scores) require(!std::isnan(s), Errc::non_finite, "NaN score");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return order;
}

inline RankedList rank_descending(std::span<const double> scores, std::span<const std::string> ids) {
  const auto order = rank_order(scores, ids);
  RankedList out;
  out.ids.reserve(order.size());
  out.scores.reserve(order.size());
  for (std::size_t i : order) {
    out.ids.push_back(ids[i]);
    out.scores.push_back(scores[i]);
  }
  return out;
}

}  // namespace ilgen

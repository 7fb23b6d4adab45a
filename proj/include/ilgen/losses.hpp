#pragma once

// Training objectives with analytic gradients.
//
// Every head returns a LossReport whose `grad` is aligned with the similarity
// scores it consumed. The descriptor-level heads (contrastive, softmax-margin)
// additionally return gradients with respect to their input vectors.
//
// Smooth recall@k, for database scores s and binary labels y with positives P:
//
//   rank(p)   = 1 + sum_{j != p} sigmoid((s_j - s_p) / temp_rank)
//   recall_k  = 1/min(|P|,k) * sum_{p in P} sigmoid((k - rank(p)) / temp_outer)
//   value     = mean_k (1 - recall_k)
//
// The rank sum runs over every other database item, positives included,
// unless `rank_negatives_only` is set. Only the negatives-only form is
// monotone in each positive's score: in the default form raising one positive
// pushes the other positives down.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ilgen/descriptor.hpp"

namespace ilgen {

using LabelVector = std::vector<std::uint8_t>;

struct LossReport {
  double value = 0.0;
  std::vector<double> grad;
};

struct RecallKConfig {
  std::vector<std::size_t> ks{1, 2, 4, 8};
  double temp_rank = 0.01;
  double temp_outer = 1.0;
  bool rank_negatives_only = false;

  void validate() const {
    require(!ks.empty(), Errc::invalid_argument, "recall@k needs at least one k");
    require(std::is_sorted(ks.begin(), ks.end()), Errc::invalid_argument, "ks must be sorted ascending");
    require(ks.front() >= 1, Errc::invalid_argument, "ks must be >= 1");
    require(temp_rank > 0 && temp_outer > 0, Errc::invalid_argument, "temperatures must be positive");
  }
};

inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {

inline void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) require(std::isfinite(x), Errc::non_finite, std::string(what) + " has NaN/Inf");
}

struct LabelCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline LabelCounts count_labels(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), Errc::length_mismatch,
          "scores has " + std::to_string(scores.size()) + " entries, labels " + std::to_string(labels.size()));
  LabelCounts c;
  for (auto l : labels) {
    require(l <= 1, Errc::invalid_argument, "labels must be 0 or 1");
    (l ? c.positives : c.negatives)++;
  }
  return c;
}

inline double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace detail

/// 1 + sum_j sigmoid((other_j - pos) / temp).
inline double smooth_rank(double pos_score, std::span<const double> other_scores, double temp) {
  require(temp > 0, Errc::invalid_argument, "temperature must be positive");
  require(std::isfinite(pos_score), Errc::non_finite, "positive score is NaN/Inf");
  detail::check_finite(other_scores, "other scores");
  double rank = 1.0;
  for (double s : other_scores) rank += sigmoid((s - pos_score) / temp);
  return rank;
}

inline LossReport recall_at_k_loss(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                   const RecallKConfig& config = {}) {
  config.validate();
  const auto counts = detail::count_labels(scores, labels);
  require(counts.positives > 0, Errc::no_positive, "recall@k loss needs a positive");
  require(counts.negatives > 0, Errc::no_negative, "recall@k loss needs a negative");
  detail::check_finite(scores, "scores");

  const std::size_t n = scores.size();
  const double tr = config.temp_rank;
  const double to = config.temp_outer;
  const double num_ks = static_cast<double>(config.ks.size());

  LossReport out;
  out.grad.assign(n, 0.0);
  double recall_sum = 0.0;  // sum over ks of recall_k
  for (std::size_t p = 0; p < n; ++p) {
    if (!labels[p]) continue;
    auto counted = [&](std::size_t j) { return j != p && !(config.rank_negatives_only && labels[j]); };
    double rank = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (counted(j)) rank += sigmoid((scores[j] - scores[p]) / tr);

    // d value / d rank(p)
    double g_rank = 0.0;
    for (std::size_t k : config.ks) {
      const double norm = static_cast<double>(std::min(counts.positives, k));
      const double member = sigmoid((static_cast<double>(k) - rank) / to);
      recall_sum += member / norm;
      g_rank += member * (1.0 - member) / (to * norm);
    }
    g_rank /= num_ks;

    for (std::size_t j = 0; j < n; ++j) {
      if (!counted(j)) continue;
      const double sg = sigmoid((scores[j] - scores[p]) / tr);
      const double d = g_rank * sg * (1.0 - sg) / tr;
      out.grad[j] += d;
      out.grad[p] -= d;
    }
  }
  out.value = 1.0 - recall_sum / num_ks;
  return out;
}

/// -(1/|P|) sum_{p in P} log softmax(s / temperature)_p over all database scores.
inline LossReport info_nce_loss(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                double temperature = 0.05) {
  require(temperature > 0, Errc::invalid_argument, "temperature must be positive");
  const auto counts = detail::count_labels(scores, labels);
  require(counts.positives > 0, Errc::no_positive, "infoNCE needs a positive");
  detail::check_finite(scores, "scores");

  const std::size_t n = scores.size();
  std::vector<double> logits(n);
  for (std::size_t j = 0; j < n; ++j) logits[j] = scores[j] / temperature;
  const double lse = detail::log_sum_exp(logits);
  const double np = static_cast<double>(counts.positives);

  LossReport out;
  out.grad.resize(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (labels[j]) sum += logits[j] - lse;
    const double prob = std::exp(logits[j] - lse);
    out.grad[j] = (prob - (labels[j] ? 1.0 / np : 0.0)) / temperature;
  }
  out.value = -sum / np;
  return out;
}

struct ContrastiveReport : LossReport {
  // grad[0] = d/d cos(anchor, positive), grad[1] = d/d cos(anchor, hardest)
  std::size_t hardest = 0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<double> grad_negative;  // w.r.t. the hardest negative row
};

/// Index of the row most cosine-similar to `anchor`; ties resolve to the lowest index.
template <Real T>
std::size_t hardest_negative(std::span<const double> anchor, const BasicDescriptorSet<T>& negatives) {
  const auto scores = cosine_scores(anchor, negatives);
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

/// D(a,p)^2 + max(0, margin - D(a,n*))^2 with n* the hardest negative and
/// D^2 = 2 - 2 cos for unit vectors.
template <Real T>
ContrastiveReport contrastive_loss(std::span<const double> anchor, std::span<const double> positive,
                                   const BasicDescriptorSet<T>& negatives, double margin = 1.0) {
  require(!negatives.empty(), Errc::empty_negatives, "contrastive loss needs candidate negatives");
  require(anchor.size() == positive.size() && anchor.size() == negatives.dim(), Errc::dimension_mismatch,
          "anchor, positive and negatives must share a dimension");
  detail::check_finite(anchor, "anchor");
  detail::check_finite(positive, "positive");

  ContrastiveReport out;
  out.hardest = hardest_negative(anchor, negatives);
  const auto neg = negatives.row(out.hardest);
  const double s_ap = dot(anchor, positive);
  const double s_an = dot(anchor, neg);

  const double pos_term = 2.0 - 2.0 * s_ap;
  double g_ap = 0.0;
  if (pos_term > 0) {
    out.value += pos_term;
    g_ap = -2.0;
  }
  double g_an = 0.0;
  const double dist_an = std::max(std::sqrt(std::max(2.0 - 2.0 * s_an, 0.0)), 1e-12);
  if (dist_an < margin) {
    const double gap = margin - dist_an;
    out.value += gap * gap;
    g_an = 2.0 * gap / dist_an;
  }
  out.grad = {g_ap, g_an};

  const std::size_t d = anchor.size();
  out.grad_anchor.resize(d);
  out.grad_positive.resize(d);
  out.grad_negative.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.grad_anchor[i] = g_ap * positive[i] + g_an * static_cast<double>(neg[i]);
    out.grad_positive[i] = g_ap * anchor[i];
    out.grad_negative[i] = g_an * anchor[i];
  }
  return out;
}

struct SoftmaxMarginReport : LossReport {
  // grad is d/d cos(embedding, w_c), one entry per class
  std::vector<double> grad_embedding;
  std::vector<double> grad_weights;  // row-major, classes x dim
};

/// Cross-entropy of softmax(scale * (cos_c - margin * [c == class_index])).
/// `weights` holds one unit-norm row per class, row-major with `dim` columns.
inline SoftmaxMarginReport softmax_margin_loss(std::span<const double> embedding, std::size_t class_index,
                                               std::span<const double> weights, double scale = 16.0,
                                               double margin = 0.0) {
  const std::size_t d = embedding.size();
  require(d > 0 && weights.size() % d == 0, Errc::dimension_mismatch, "weights must be classes x dim");
  const std::size_t classes = weights.size() / d;
  require(class_index < classes, Errc::index_out_of_range,
          "class " + std::to_string(class_index) + " out of " + std::to_string(classes));
  detail::check_finite(embedding, "embedding");
  detail::check_finite(weights, "classifier weights");

  std::vector<double> logits(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double cos = dot(embedding, weights.subspan(c * d, d));
    logits[c] = scale * (cos - (c == class_index ? margin : 0.0));
  }
  const double lse = detail::log_sum_exp(logits);

  SoftmaxMarginReport out;
  out.value = lse - logits[class_index];
  out.grad.resize(classes);
  out.grad_embedding.assign(d, 0.0);
  out.grad_weights.resize(classes * d);
  for (std::size_t c = 0; c < classes; ++c) {
    const double g = scale * (std::exp(logits[c] - lse) - (c == class_index ? 1.0 : 0.0));
    out.grad[c] = g;
    for (std::size_t i = 0; i < d; ++i) {
      out.grad_embedding[i] += g * weights[c * d + i];
      out.grad_weights[c * d + i] = g * embedding[i];
    }
  }
  return out;
}

}  // namespace ilgen

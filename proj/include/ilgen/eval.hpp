#pragma once

// Retrieval metrics with junk handling (junk is removed from the ranking
// before scoring), per-query reports and paired per-query comparisons.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ilgen/descriptor.hpp"
#include "ilgen/parallel.hpp"

namespace ilgen {

struct RelevanceJudgment {
  std::string query_id;
  std::set<std::string> positive_ids;
  std::set<std::string> junk_ids;

  void validate() const {
    require(!positive_ids.empty(), Errc::invalid_judgment, "query '" + query_id + "' has no positives");
    require(!positive_ids.contains(query_id), Errc::invalid_judgment,
            "query '" + query_id + "' lists itself as a positive");
    for (const auto& j : junk_ids)
      require(!positive_ids.contains(j), Errc::invalid_judgment,
              "id '" + j + "' is both positive and junk for query '" + query_id + "'");
  }
};

using Judgments = std::map<std::string, RelevanceJudgment>;

struct MetricConfig {
  std::optional<std::size_t> cutoff;  // none = full mAP
  std::vector<std::size_t> recall_ks;

  void validate() const {
    require(!cutoff || *cutoff >= 1, Errc::invalid_argument, "cutoff must be >= 1");
    for (auto k : recall_ks) require(k >= 1, Errc::invalid_argument, "recall k must be >= 1");
  }

  std::string metric_name() const { return cutoff ? "mAP@" + std::to_string(*cutoff) : "mAP"; }
};

namespace detail {

inline void check_ids_known(const RankedList& ranked, const RelevanceJudgment& j) {
  std::unordered_set<std::string_view> present(ranked.ids.begin(), ranked.ids.end());
  for (const auto& id : j.positive_ids)
    require(present.contains(id), Errc::unknown_id, "positive '" + id + "' not in database");
  for (const auto& id : j.junk_ids)
    require(present.contains(id), Errc::unknown_id, "junk '" + id + "' not in database");
}

}  // namespace detail

/// AP = (1 / min(|P|, cutoff)) * sum over post-junk ranks i <= cutoff holding a
/// positive of (positives in the first i) / i.
inline double average_precision(const RankedList& ranked, const RelevanceJudgment& judgment,
                                const MetricConfig& config = {}) {
  judgment.validate();
  config.validate();
  detail::check_ids_known(ranked, judgment);
  const std::size_t cutoff = config.cutoff.value_or(ranked.size());
  std::size_t rank = 0;
  std::size_t hits = 0;
  double sum = 0.0;
  for (const auto& id : ranked.ids) {
    if (judgment.junk_ids.contains(id)) continue;
    if (++rank > cutoff) break;
    if (judgment.positive_ids.contains(id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  const std::size_t denom = std::min(judgment.positive_ids.size(), cutoff);
  return sum / static_cast<double>(denom);
}

/// |positives among the first k post-junk entries| / min(|P|, k).
inline double recall_at_k_metric(const RankedList& ranked, const RelevanceJudgment& judgment, std::size_t k) {
  judgment.validate();
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  detail::check_ids_known(ranked, judgment);
  std::size_t rank = 0;
  std::size_t hits = 0;
  for (const auto& id : ranked.ids) {
    if (judgment.junk_ids.contains(id)) continue;
    if (++rank > k) break;
    if (judgment.positive_ids.contains(id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::min(judgment.positive_ids.size(), k));
}

inline double mean_average_precision(std::span<const double> aps) {
  require(!aps.empty(), Errc::empty_input, "no queries to average");
  double sum = 0.0;
  for (double ap : aps) sum += ap;
  return sum / static_cast<double>(aps.size());
}

struct QueryAp {
  std::string query_id;
  double ap = 0.0;

  friend bool operator==(const QueryAp&, const QueryAp&) = default;
};

struct PerQueryReport {
  std::string dataset;
  std::string model;
  std::vector<QueryAp> rows;  // query order of the evaluated query set

  std::vector<double> aps() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.ap);
    return out;
  }

  friend bool operator==(const PerQueryReport&, const PerQueryReport&) = default;
};

struct MetricValue {
  std::string name;
  double value = 0.0;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct EvalSummary {
  std::string dataset;
  std::string model;
  std::vector<MetricValue> metrics;  // first entry is the mAP variant

  double map() const { return metrics.front().value; }

  friend bool operator==(const EvalSummary&, const EvalSummary&) = default;
};

struct EvalResult {
  PerQueryReport report;
  EvalSummary summary;
};

/// Ranks `database` for every query by cosine similarity and scores it
/// against its judgment. Each query must have a judgment and must not itself
/// appear in the database.
template <Real T>
EvalResult evaluate_dataset(const BasicDescriptorSet<T>& queries, const BasicDescriptorSet<T>& database,
                            const Judgments& judgments, const MetricConfig& config, std::string dataset = "dataset",
                            std::string model = "model", std::size_t threads = 1) {
  config.validate();
  require(!queries.empty(), Errc::empty_input, "no queries");
  require(queries.dim() == database.dim(), Errc::dimension_mismatch, "query and database dimensions differ");
  for (const auto& qid : queries.ids()) {
    const auto it = judgments.find(qid);
    require(it != judgments.end(), Errc::invalid_judgment, "query '" + qid + "' has no judgment");
    require(it->second.query_id == qid, Errc::invalid_judgment, "judgment keyed under the wrong query id");
    it->second.validate();
    require(!database.contains(qid), Errc::invalid_judgment, "query '" + qid + "' is present in the database");
  }

  const std::size_t nq = queries.size();
  std::vector<double> aps(nq);
  std::vector<std::vector<double>> recalls(nq);
  parallel_for(nq, threads, [&](std::size_t qi) {
    const auto scores = cosine_scores(queries.row(qi), database);
    const auto ranked = rank_descending(scores, database.ids());
    const auto& judgment = judgments.at(queries.id(qi));
    aps[qi] = average_precision(ranked, judgment, config);
    for (auto k : config.recall_ks) recalls[qi].push_back(recall_at_k_metric(ranked, judgment, k));
  });

  EvalResult result;
  result.report.dataset = dataset;
  result.report.model = model;
  for (std::size_t qi = 0; qi < nq; ++qi) result.report.rows.push_back({queries.id(qi), aps[qi]});
  result.summary.dataset = std::move(dataset);
  result.summary.model = std::move(model);
  result.summary.metrics.push_back({config.metric_name(), mean_average_precision(aps)});
  for (std::size_t ki = 0; ki < config.recall_ks.size(); ++ki) {
    double sum = 0.0;
    for (std::size_t qi = 0; qi < nq; ++qi) sum += recalls[qi][ki];
    result.summary.metrics.push_back({"R@" + std::to_string(config.recall_ks[ki]), sum / static_cast<double>(nq)});
  }
  return result;
}

/// Unweighted mean of the first metric across dataset summaries.
inline double average_across_datasets(std::span<const EvalSummary> summaries) {
  require(!summaries.empty(), Errc::empty_input, "no summaries to average");
  double sum = 0.0;
  for (const auto& s : summaries) sum += s.map();
  return sum / static_cast<double>(summaries.size());
}

/// One point of a per-query AP scatter: x from the first report, y from the second.
struct ScatterRow {
  std::string query_id;
  double x = 0.0;
  double y = 0.0;

  bool below_diagonal() const noexcept { return y < x; }
  bool on_diagonal() const noexcept { return y == x; }
};

/// Pairs the two reports by query id, in the first report's query order.
inline std::vector<ScatterRow> scatter_pairs(const PerQueryReport& a, const PerQueryReport& b) {
  require(a.rows.size() == b.rows.size(), Errc::query_set_mismatch,
          "reports cover " + std::to_string(a.rows.size()) + " and " + std::to_string(b.rows.size()) + " queries");
  std::unordered_map<std::string, double> by_id;
  for (const auto& r : b.rows)
    require(by_id.emplace(r.query_id, r.ap).second, Errc::query_set_mismatch, "duplicate query '" + r.query_id + "'");
  std::vector<ScatterRow> out;
  out.reserve(a.rows.size());
  std::unordered_set<std::string> seen;
  for (const auto& r : a.rows) {
    const auto it = by_id.find(r.query_id);
    require(it != by_id.end(), Errc::query_set_mismatch, "query '" + r.query_id + "' missing from second report");
    require(seen.insert(r.query_id).second, Errc::query_set_mismatch, "duplicate query '" + r.query_id + "'");
    out.push_back({r.query_id, r.ap, it->second});
  }
  return out;
}

}  // namespace ilgen

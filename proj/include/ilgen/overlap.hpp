#pragma once

// Train/test contamination mining: the closest training images to each
// evaluation query, surfaced for visual inspection.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "ilgen/descriptor.hpp"
#include "ilgen/parallel.hpp"
#include "ilgen/text.hpp"

namespace ilgen {

struct OverlapPair {
  std::string query_id;
  std::string train_id;
  double similarity = 0.0;
  std::size_t rank = 0;  // 1-based position in the global list

  friend bool operator==(const OverlapPair&, const OverlapPair&) = default;
};

/// Global order: descending similarity, then query id, then training id.
inline bool overlap_before(const OverlapPair& a, const OverlapPair& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.query_id != b.query_id) return a.query_id < b.query_id;
  return a.train_id < b.train_id;
}

/// Each query's `per_query` best training matches (by cosine_scores, ties by
/// training id); the global list keeps the `top_m` highest of these.
template <Real T>
std::vector<OverlapPair> mine_overlap(const BasicDescriptorSet<T>& queries, const BasicDescriptorSet<T>& train,
                                      std::size_t top_m, std::size_t per_query = 1, std::size_t threads = 1) {
  require(!queries.empty() && !train.empty(), Errc::empty_set, "overlap mining needs non-empty query and training sets");
  require(queries.dim() == train.dim(), Errc::dimension_mismatch,
          "query dim " + std::to_string(queries.dim()) + " != training dim " + std::to_string(train.dim()));
  require(top_m >= 1 && per_query >= 1, Errc::invalid_argument, "top_m and per_query must be >= 1");
  const auto& train_ids = train.ids();
  std::vector<std::vector<OverlapPair>> best(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    const ScoreVector scores = cosine_scores(queries.row(q), train);
    const auto order = rank_order(scores, train_ids);
    const std::size_t k = std::min(per_query, order.size());
    for (std::size_t r = 0; r < k; ++r)
      best[q].push_back({queries.id(q), train_ids[order[r]], scores[order[r]], 0});
  });
  std::vector<OverlapPair> all;
  for (auto& b : best) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end(), overlap_before);
  if (all.size() > top_m) all.resize(top_m);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = i + 1;
  return all;
}

inline std::string format_overlap_csv(const std::vector<OverlapPair>& pairs) {
  std::string out = "query_id,train_image_id,similarity,rank\n";
  for (const auto& p : pairs)
    out += p.query_id + "," + p.train_id + "," + text::fixed(p.similarity, 6) + "," + std::to_string(p.rank) + "\n";
  return out;
}

using PathResolver = std::function<std::string(const std::string& id)>;

/// Contact-sheet directive: one "rank<TAB>query_path<TAB>train_path<TAB>similarity"
/// line per pair, preceded by a "# contact-sheet v1" line.
inline std::string format_contact_sheet(const std::vector<OverlapPair>& pairs, const PathResolver& query_path,
                                        const PathResolver& train_path) {
  std::string out = "# contact-sheet v1\n";
  for (const auto& p : pairs)
    out += std::to_string(p.rank) + "\t" + query_path(p.query_id) + "\t" + train_path(p.train_id) + "\t" +
           text::fixed(p.similarity, 6) + "\n";
  return out;
}

}  // namespace ilgen

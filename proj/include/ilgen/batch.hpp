#pragma once

// Query-vs-database batch planning. A batch holds B classes with all N of
// their images; each class contributes one query and the remaining NB-1
// images of the batch form that query's database.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ilgen/error.hpp"
#include "ilgen/losses.hpp"
#include "ilgen/rng.hpp"

namespace ilgen {

struct InstanceClass {
  std::string class_id;
  std::vector<std::string> image_ids;

  friend bool operator==(const InstanceClass&, const InstanceClass&) = default;
};

struct BatchEntry {
  std::size_t class_index = 0;  // index into the epoch's input class list
  std::string class_id;
  std::vector<std::string> image_ids;
  std::size_t query_index = 0;  // into image_ids

  friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

struct BatchPlan {
  std::size_t batch_index = 0;
  std::uint64_t rng_seed = 0;
  std::vector<BatchEntry> entries;

  std::size_t image_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.image_ids.size();
    return n;
  }

  friend bool operator==(const BatchPlan&, const BatchPlan&) = default;
};

struct RetrievalTask {
  std::string query_id;
  std::size_t query_pos = 0;               // flat position within the batch
  std::vector<std::string> database;       // the other NB-1 images, batch order
  std::vector<std::size_t> database_pos;   // flat positions of `database`
  LabelVector labels;                      // 1 = same class as the query
  std::size_t entry = 0;                   // batch entry the query belongs to
};

inline void validate_plan(const BatchPlan& plan) {
  require(plan.entries.size() >= 2, Errc::invalid_plan, "batch needs at least two classes");
  std::unordered_set<std::string> classes;
  std::unordered_set<std::string> images;
  const std::size_t n = plan.entries.front().image_ids.size();
  for (const auto& e : plan.entries) {
    require(classes.insert(e.class_id).second, Errc::invalid_plan, "class '" + e.class_id + "' repeated in batch");
    require(e.image_ids.size() == n && n >= 2, Errc::invalid_plan, "classes must share N >= 2");
    require(e.query_index < n, Errc::invalid_plan, "query index out of range");
    for (const auto& id : e.image_ids)
      require(images.insert(id).second, Errc::invalid_plan, "image '" + id + "' repeated in batch");
  }
}

/// Shuffles classes with a seeded generator and cuts them into consecutive
/// batches of `batch_classes`. A short final batch is kept when it has at
/// least two classes and dropped when it has one.
inline std::vector<BatchPlan> build_epoch(const std::vector<InstanceClass>& classes, std::size_t batch_classes,
                                          std::uint64_t rng_seed) {
  require(batch_classes >= 2, Errc::invalid_argument, "batch must hold at least two classes");
  require(classes.size() >= 2, Errc::too_few_classes,
          "need at least two classes, got " + std::to_string(classes.size()));
  const std::size_t n = classes.front().image_ids.size();
  require(n >= 2, Errc::invalid_argument, "classes need at least two images");
  std::unordered_set<std::string> ids;
  for (const auto& c : classes) {
    require(c.image_ids.size() == n, Errc::invalid_argument, "class '" + c.class_id + "' does not have N images");
    require(ids.insert(c.class_id).second, Errc::invalid_argument, "duplicate class id '" + c.class_id + "'");
    std::unordered_set<std::string> imgs(c.image_ids.begin(), c.image_ids.end());
    require(imgs.size() == n, Errc::invalid_argument, "class '" + c.class_id + "' repeats an image");
  }

  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffler(split_seed(rng_seed, "epoch-shuffle"));
  shuffle(std::span(order), shuffler);

  std::vector<BatchPlan> plans;
  for (std::size_t start = 0; start < order.size(); start += batch_classes) {
    const std::size_t end = std::min(order.size(), start + batch_classes);
    if (end - start < 2) break;
    BatchPlan plan;
    plan.batch_index = plans.size();
    plan.rng_seed = split_seed(rng_seed, "batch", {plan.batch_index});
    for (std::size_t i = start; i < end; ++i) {
      const auto& c = classes[order[i]];
      Rng pick(split_seed(plan.rng_seed, "query", {i - start}));
      plan.entries.push_back({order[i], c.class_id, c.image_ids, static_cast<std::size_t>(pick.below(n))});
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

/// One retrieval task per class of the batch.
inline std::vector<RetrievalTask> batch_to_tasks(const BatchPlan& plan) {
  validate_plan(plan);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& e : plan.entries) {
    offsets.push_back(total);
    total += e.image_ids.size();
  }
  std::vector<RetrievalTask> tasks;
  tasks.reserve(plan.entries.size());
  for (std::size_t qe = 0; qe < plan.entries.size(); ++qe) {
    const auto& query_entry = plan.entries[qe];
    RetrievalTask task;
    task.entry = qe;
    task.query_id = query_entry.image_ids[query_entry.query_index];
    task.query_pos = offsets[qe] + query_entry.query_index;
    task.database.reserve(total - 1);
    task.database_pos.reserve(total - 1);
    task.labels.reserve(total - 1);
    for (std::size_t e = 0; e < plan.entries.size(); ++e) {
      for (std::size_t i = 0; i < plan.entries[e].image_ids.size(); ++i) {
        const std::size_t pos = offsets[e] + i;
        if (pos == task.query_pos) continue;
        task.database.push_back(plan.entries[e].image_ids[i]);
        task.database_pos.push_back(pos);
        task.labels.push_back(e == qe ? 1 : 0);
      }
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

/// Debug dump, one batch per line:
///   batch_idx<TAB>class_id:query_image/img1,img2,...<TAB>class_id:...
inline std::string format_batch_plans(std::span<const BatchPlan> plans) {
  std::string out;
  for (const auto& plan : plans) {
    out += std::to_string(plan.batch_index);
    for (const auto& e : plan.entries) {
      out += '\t';
      out += e.class_id + ":" + e.image_ids[e.query_index] + "/";
      for (std::size_t i = 0; i < e.image_ids.size(); ++i) {
        if (i) out += ',';
        out += e.image_ids[i];
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace ilgen

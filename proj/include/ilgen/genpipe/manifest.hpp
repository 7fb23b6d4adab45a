#pragma once

// DatasetManifest and its line-delimited JSON form.
//
//   line 1     {"type":"header", ... ,"fingerprint":"<sha256>"}
//   line 2..   {"type":"class", ...}    one per surviving class
//   then       {"type":"failure", ...}  one per dropped class
//
// The fingerprint is sha256 over the header serialized without its
// fingerprint field, then every following line, each terminated by '\n'.
// Field order is fixed by construction (ordered_json), so the byte stream,
// and therefore the fingerprint, is platform independent.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ilgen/batch.hpp"
#include "ilgen/eval.hpp"
#include "ilgen/genpipe/config.hpp"
#include "ilgen/text.hpp"

namespace ilgen::genpipe {

inline constexpr int kManifestVersion = 1;

struct StageRecord {
  std::string stage;
  std::string client;
  std::uint64_t seed = 0;  // 0 for unseeded stages
  std::string hash;        // output content hash

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::string hash;
  double padding_fraction = 0.0;
  std::vector<StageRecord> chain;  // generate, remove-bg, pad, relight

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct ClassRecord {
  std::string class_id;
  std::string domain;
  std::string category;
  std::size_t category_index = 0;
  std::size_t instance_index = 0;
  std::uint64_t instance_seed = 0;
  std::string prompt;
  double mask_coverage = 0.0;
  std::vector<ImageRecord> images;

  friend bool operator==(const ClassRecord&, const ClassRecord&) = default;
};

struct FailureRecord {
  std::string domain;
  std::string category;
  std::size_t category_index = 0;
  std::size_t instance_index = 0;
  std::uint64_t instance_seed = 0;
  std::string stage;
  std::string code;
  std::string message;

  friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

struct DomainSummary {
  std::string name;
  std::size_t categories_requested = 0;  // C as configured
  std::size_t categories = 0;            // C actually accepted
  std::size_t instances = 0;   // K
  std::size_t backgrounds = 0; // N
  std::string category_source;
  std::size_t categories_received = 0;  // before dedup and truncation

  friend bool operator==(const DomainSummary&, const DomainSummary&) = default;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string config_fingerprint;
  std::uint64_t master_seed = 0;
  std::vector<DomainSummary> domains;
  std::vector<ClassRecord> classes;
  std::vector<FailureRecord> failures;

  std::size_t expected_classes() const noexcept {
    std::size_t n = 0;
    for (const auto& d : domains) n += d.categories * d.instances;
    return n;
  }

  std::size_t image_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.images.size();
    return n;
  }

  /// Maps image id to content hash.
  std::map<std::string, std::string> image_hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& c : classes)
      for (const auto& im : c.images) out.emplace(im.image_id, im.hash);
    return out;
  }

  std::vector<InstanceClass> instance_classes() const {
    std::vector<InstanceClass> out;
    out.reserve(classes.size());
    for (const auto& c : classes) {
      InstanceClass ic{c.class_id, {}};
      for (const auto& im : c.images) ic.image_ids.push_back(im.image_id);
      out.push_back(std::move(ic));
    }
    return out;
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline std::string make_class_id(std::string_view domain, std::size_t category_index, std::size_t instance_index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "-c%04zu-k%03zu", category_index, instance_index);
  return std::string(domain) + buf;
}

inline std::string make_image_id(std::string_view class_id, std::size_t background_index) {
  return std::string(class_id) + "-n" + std::to_string(background_index);
}

namespace manifest_detail {

inline Json stage_json(const StageRecord& s) {
  Json j;
  j["stage"] = s.stage;
  j["client"] = s.client;
  j["seed"] = s.seed;
  j["hash"] = s.hash;
  return j;
}

inline Json header_json(const DatasetManifest& m) {
  Json j;
  j["type"] = "header";
  j["version"] = kManifestVersion;
  j["dataset_id"] = m.dataset_id;
  j["config_fingerprint"] = m.config_fingerprint;
  j["master_seed"] = m.master_seed;
  Json ds = Json::array();
  for (const auto& d : m.domains) {
    Json dj;
    dj["name"] = d.name;
    dj["C_requested"] = d.categories_requested;
    dj["C"] = d.categories;
    dj["K"] = d.instances;
    dj["N"] = d.backgrounds;
    dj["category_source"] = d.category_source;
    dj["categories_received"] = d.categories_received;
    ds.push_back(std::move(dj));
  }
  j["domains"] = std::move(ds);
  j["classes"] = m.classes.size();
  j["images"] = m.image_count();
  j["failures"] = m.failures.size();
  return j;
}

inline Json class_json(const ClassRecord& c) {
  Json j;
  j["type"] = "class";
  j["class_id"] = c.class_id;
  j["domain"] = c.domain;
  j["category"] = c.category;
  j["category_index"] = c.category_index;
  j["instance_index"] = c.instance_index;
  j["instance_seed"] = c.instance_seed;
  j["prompt"] = c.prompt;
  j["mask_coverage"] = c.mask_coverage;
  Json ims = Json::array();
  for (const auto& im : c.images) {
    Json ij;
    ij["image_id"] = im.image_id;
    ij["hash"] = im.hash;
    ij["padding_fraction"] = im.padding_fraction;
    Json chain = Json::array();
    for (const auto& s : im.chain) chain.push_back(stage_json(s));
    ij["chain"] = std::move(chain);
    ims.push_back(std::move(ij));
  }
  j["images"] = std::move(ims);
  return j;
}

inline Json failure_json(const FailureRecord& f) {
  Json j;
  j["type"] = "failure";
  j["domain"] = f.domain;
  j["category"] = f.category;
  j["category_index"] = f.category_index;
  j["instance_index"] = f.instance_index;
  j["instance_seed"] = f.instance_seed;
  j["stage"] = f.stage;
  j["code"] = f.code;
  j["message"] = f.message;
  return j;
}

inline std::string body_lines(const DatasetManifest& m) {
  std::string out;
  for (const auto& c : m.classes) out += class_json(c).dump() + "\n";
  for (const auto& f : m.failures) out += failure_json(f).dump() + "\n";
  return out;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace manifest_detail

inline std::string manifest_fingerprint(const DatasetManifest& m) {
  return sha256_hex(manifest_detail::header_json(m).dump() + "\n" + manifest_detail::body_lines(m));
}

inline std::string format_manifest(const DatasetManifest& m) {
  Json header = manifest_detail::header_json(m);
  header["fingerprint"] = manifest_fingerprint(m);
  return header.dump() + "\n" + manifest_detail::body_lines(m);
}

/// Parses and verifies the stored fingerprint.
inline DatasetManifest parse_manifest(std::string_view content) {
  using manifest_detail::get;
  DatasetManifest m;
  bool have_header = false;
  std::string stored_fp;
  std::size_t line_no = 0;
  for (auto line : text::lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format_error, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto type = get<std::string>(j, "type");
    if (!have_header) {
      require(type == "header", Errc::format_error, "manifest must start with a header line");
      require(get<int>(j, "version") == kManifestVersion, Errc::format_error, "unsupported manifest version");
      m.dataset_id = get<std::string>(j, "dataset_id");
      m.config_fingerprint = get<std::string>(j, "config_fingerprint");
      m.master_seed = get<std::uint64_t>(j, "master_seed");
      for (const auto& d : j.at("domains"))
        m.domains.push_back({get<std::string>(d, "name"), get<std::size_t>(d, "C_requested"),
                             get<std::size_t>(d, "C"), get<std::size_t>(d, "K"), get<std::size_t>(d, "N"),
                             get<std::string>(d, "category_source"), get<std::size_t>(d, "categories_received")});
      stored_fp = get<std::string>(j, "fingerprint");
      have_header = true;
    } else if (type == "class") {
      ClassRecord c;
      c.class_id = get<std::string>(j, "class_id");
      c.domain = get<std::string>(j, "domain");
      c.category = get<std::string>(j, "category");
      c.category_index = get<std::size_t>(j, "category_index");
      c.instance_index = get<std::size_t>(j, "instance_index");
      c.instance_seed = get<std::uint64_t>(j, "instance_seed");
      c.prompt = get<std::string>(j, "prompt");
      c.mask_coverage = get<double>(j, "mask_coverage");
      for (const auto& ij : j.at("images")) {
        ImageRecord im;
        im.image_id = get<std::string>(ij, "image_id");
        im.hash = get<std::string>(ij, "hash");
        im.padding_fraction = get<double>(ij, "padding_fraction");
        for (const auto& s : ij.at("chain"))
          im.chain.push_back({get<std::string>(s, "stage"), get<std::string>(s, "client"),
                              get<std::uint64_t>(s, "seed"), get<std::string>(s, "hash")});
        c.images.push_back(std::move(im));
      }
      m.classes.push_back(std::move(c));
    } else if (type == "failure") {
      m.failures.push_back({get<std::string>(j, "domain"), get<std::string>(j, "category"),
                            get<std::size_t>(j, "category_index"), get<std::size_t>(j, "instance_index"),
                            get<std::uint64_t>(j, "instance_seed"), get<std::string>(j, "stage"),
                            get<std::string>(j, "code"), get<std::string>(j, "message")});
    } else {
      fail(Errc::format_error, "manifest line " + std::to_string(line_no) + ": unknown record type '" + type + "'");
    }
  }
  require(have_header, Errc::format_error, "manifest is empty");
  require(manifest_fingerprint(m) == stored_fp, Errc::format_error, "manifest fingerprint does not match content");
  return m;
}

/// Checks the structural invariants: counts add up, each class has its
/// domain's N images, and image hashes are unique.
inline void validate_manifest(const DatasetManifest& m) {
  require(m.classes.size() + m.failures.size() == m.expected_classes(), Errc::format_error,
          "class count plus failures does not equal the sum of C*K");
  std::map<std::string, std::size_t> n_of;
  for (const auto& d : m.domains) n_of[d.name] = d.backgrounds;
  std::set<std::string> hashes, ids;
  for (const auto& c : m.classes) {
    require(n_of.count(c.domain) == 1, Errc::format_error, "class '" + c.class_id + "' has an unknown domain");
    require(c.images.size() == n_of[c.domain], Errc::format_error, "class '" + c.class_id + "' does not have N images");
    require(ids.insert(c.class_id).second, Errc::format_error, "duplicate class id '" + c.class_id + "'");
    for (const auto& im : c.images)
      require(hashes.insert(im.hash).second, Errc::format_error, "duplicate image hash " + im.hash);
  }
}

/// Retrieval split of a manifest: image `query_slot` of every class is the
/// query, the class's other images are its positives, and all non-query
/// images form the database.
struct HoldoutSplit {
  std::vector<std::string> query_ids;
  std::vector<std::string> database_ids;
  Judgments judgments;
};

inline HoldoutSplit holdout_split(const DatasetManifest& m, std::size_t query_slot = 0) {
  HoldoutSplit s;
  for (const auto& c : m.classes) {
    require(query_slot < c.images.size(), Errc::index_out_of_range, "class '" + c.class_id + "' is too small");
    RelevanceJudgment j;
    j.query_id = c.images[query_slot].image_id;
    for (std::size_t i = 0; i < c.images.size(); ++i) {
      if (i == query_slot) continue;
      j.positive_ids.insert(c.images[i].image_id);
      s.database_ids.push_back(c.images[i].image_id);
    }
    s.query_ids.push_back(j.query_id);
    s.judgments.emplace(j.query_id, std::move(j));
  }
  return s;
}

}  // namespace ilgen::genpipe

#pragma once

// Four-stage generation pipeline: categories -> instance -> background
// removal -> padding -> relighting, over pluggable StageClients.
//
// Seeds (split_seed, see rng.hpp):
//   instance_seed = split_seed(master, "instance", {fnv1a64(domain), category_index, k})
//   pad seed      = split_seed(instance_seed, "pad", {n})
//   relight seed  = split_seed(instance_seed, "relight", {n})
//
// Every client response is decoded and re-encoded with encode_png, so content
// hashes depend on pixels only, never on the remote PNG encoder.

#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ilgen/genpipe/clients.hpp"
#include "ilgen/genpipe/config.hpp"
#include "ilgen/genpipe/manifest.hpp"
#include "ilgen/genpipe/store.hpp"
#include "ilgen/image.hpp"
#include "ilgen/parallel.hpp"
#include "ilgen/png.hpp"

namespace ilgen::genpipe {

inline constexpr double kMinCategoryFraction = 0.9;
inline constexpr double kMinMaskCoverage = 0.01;
inline constexpr double kMaxMaskCoverage = 0.99;
inline constexpr double kMaxClassFailureFraction = 0.2;

struct PipelineStats {
  std::atomic<std::size_t> client_calls{0};
  std::atomic<std::size_t> journal_hits{0};
};

struct CategoryList {
  std::vector<std::string> names;
  std::size_t received = 0;
};

/// Trims, collapses whitespace and drops case-insensitive duplicates, keeping
/// first occurrences. More than `count` names are truncated; fewer than
/// ceil(0.9 * count) is TooFewCategories.
inline CategoryList accept_categories(const std::vector<std::string>& raw, std::size_t count) {
  CategoryList out;
  out.received = raw.size();
  std::set<std::string> seen;
  for (const auto& r : raw) {
    std::string name = text::collapse_whitespace(r);
    if (name.empty()) continue;
    if (!seen.insert(text::to_lower(name)).second) continue;
    out.names.push_back(std::move(name));
  }
  const auto minimum = static_cast<std::size_t>(std::ceil(kMinCategoryFraction * static_cast<double>(count)));
  require(out.names.size() >= minimum, Errc::too_few_categories,
          "category source returned " + std::to_string(out.names.size()) + " usable names, need at least " +
              std::to_string(minimum) + " of " + std::to_string(count));
  if (out.names.size() > count) out.names.resize(count);
  return out;
}

inline CategoryList generate_categories(const std::string& domain, const PromptTemplate& tmpl, std::size_t count,
                                        CategorySource& client, const ContentStore* store = nullptr,
                                        PipelineStats* stats = nullptr) {
  const std::string prompt = render_category_prompt(tmpl, count);
  const std::string key = "categories\n" + client.id() + "\n" + domain + "\n" + prompt + "\n" + std::to_string(count);
  std::vector<std::string> raw;
  if (auto cached = store ? store->journal_get(key) : std::nullopt) {
    raw = Json::parse(*cached).get<std::vector<std::string>>();
    if (stats) ++stats->journal_hits;
  } else {
    if (stats) ++stats->client_calls;
    raw = client.categories(domain, prompt, count);
    if (store) store->journal_put(key, Json(raw).dump());
  }
  return accept_categories(raw, count);
}

/// Decodes a client response and re-encodes it canonically with the wanted
/// channel count.
inline std::pair<Bytes, Image> canonicalize(const Bytes& png, int channels) {
  Image img = decode_png(png);
  if (channels == 3 && img.channels == 4) img = drop_alpha(img);
  require(img.channels == channels, Errc::decode_error,
          "expected a " + std::to_string(channels) + "-channel image, got " + std::to_string(img.channels));
  return {encode_png(img), std::move(img)};
}

/// Runs `call` unless the journal already maps `key` to a stored image.
template <typename Call>
std::string journaled_image(const ContentStore& store, PipelineStats* stats, const std::string& key, int channels,
                            Call&& call) {
  if (auto cached = store.journal_get(key); cached && store.contains(*cached)) {
    if (stats) ++stats->journal_hits;
    return *cached;
  }
  if (stats) ++stats->client_calls;
  const auto [bytes, img] = canonicalize(call(), channels);
  const std::string hash = store.put(bytes);
  store.journal_put(key, hash);
  return hash;
}

inline StageRecord generate_instance(const std::string& category, std::uint64_t instance_seed, int steps,
                                     InstanceSource& client, const ContentStore& store,
                                     PipelineStats* stats = nullptr) {
  const std::string prompt = render_instance_prompt(category);
  const std::string key = "generate\n" + client.id() + "\n" + prompt + "\n" + std::to_string(instance_seed) + "\n" +
                          std::to_string(steps);
  const auto hash = journaled_image(store, stats, key, 3, [&] { return client.generate(prompt, instance_seed, steps); });
  return {std::string(kStageGenerate), client.id(), instance_seed, hash};
}

/// Fraction of pixels with alpha > 0.5; DegenerateMask outside [0.01, 0.99].
inline double check_mask(const Image& rgba) {
  require(rgba.channels == 4, Errc::decode_error, "background removal must return an RGBA image");
  const double coverage = alpha_coverage(rgba);
  require(coverage >= kMinMaskCoverage && coverage <= kMaxMaskCoverage, Errc::degenerate_mask,
          "alpha coverage " + text::fixed(coverage, 4) + " outside [0.01, 0.99]");
  return coverage;
}

struct ForegroundResult {
  StageRecord record;
  double coverage = 0.0;
};

inline ForegroundResult remove_background(const std::string& image_hash, BackgroundRemover& client,
                                          const ContentStore& store, PipelineStats* stats = nullptr) {
  const std::string key = "remove-bg\n" + client.id() + "\n" + image_hash;
  const auto hash = journaled_image(store, stats, key, 4, [&] { return client.remove_background(store.get(image_hash)); });
  const double coverage = check_mask(decode_png(store.get(hash)));
  return {{std::string(kStageRemoveBg), client.id(), 0, hash}, coverage};
}

/// Adds round(p*W) columns and round(p*H) rows of transparent border, split
/// between the two sides by `rng`, then resizes back to W x H.
inline Image pad_and_resize(const Image& rgba, double p, Rng& rng) {
  require(rgba.channels == 4, Errc::invalid_argument, "padding expects an RGBA image");
  const int total_x = static_cast<int>(std::lround(p * rgba.width));
  const int total_y = static_cast<int>(std::lround(p * rgba.height));
  if (total_x == 0 && total_y == 0) return rgba;
  const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(total_x) + 1));
  const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(total_y) + 1));
  const Image padded = pad(rgba, left, top, total_x - left, total_y - top);
  return resize_bilinear(padded, rgba.width, rgba.height);
}

/// Padding fraction drawn for one image: uniform in [0, max_fraction].
inline double sample_padding_fraction(std::uint64_t pad_seed, double max_fraction) {
  Rng rng(split_seed(pad_seed, "fraction"));
  return rng.uniform(0.0, max_fraction);
}

struct PadResult {
  StageRecord record;
  double fraction = 0.0;
};

inline PadResult pad_stage(const std::string& foreground_hash, std::uint64_t pad_seed, double max_fraction,
                           const ContentStore& store) {
  const double p = sample_padding_fraction(pad_seed, max_fraction);
  const std::string key = "pad\n" + foreground_hash + "\n" + std::to_string(pad_seed) + "\n" + text::shortest(p);
  std::string hash;
  if (auto cached = store.journal_get(key); cached && store.contains(*cached)) {
    hash = *cached;
  } else {
    Rng rng(pad_seed);
    hash = store.put(encode_png(pad_and_resize(decode_png(store.get(foreground_hash)), p, rng)));
    store.journal_put(key, hash);
  }
  return {{std::string(kStagePad), "builtin", pad_seed, hash}, p};
}

inline StageRecord relight(const std::string& foreground_hash, const std::string& category, std::uint64_t seed,
                           Relighter& client, const ContentStore& store, PipelineStats* stats = nullptr) {
  const std::string key =
      "relight\n" + client.id() + "\n" + foreground_hash + "\n" + category + "\n" + std::to_string(seed);
  const auto hash =
      journaled_image(store, stats, key, 3, [&] { return client.relight(store.get(foreground_hash), category, seed); });
  return {std::string(kStageRelight), client.id(), seed, hash};
}

inline std::uint64_t instance_seed_for(std::uint64_t master_seed, std::string_view domain, std::size_t category_index,
                                       std::size_t instance_index) {
  return split_seed(master_seed, "instance", {fnv1a64(domain), category_index, instance_index});
}

struct PipelineResult {
  DatasetManifest manifest;
  std::size_t client_calls = 0;
  std::size_t journal_hits = 0;
};

namespace pipeline_detail {

struct WorkItem {
  std::string domain;
  std::size_t backgrounds = 0;
  std::string category;
  std::size_t category_index = 0;
  std::size_t instance_index = 0;
  std::uint64_t instance_seed = 0;
};

inline ClassRecord run_class(const WorkItem& w, const GenerationConfig& cfg, const StageClients& clients,
                             const ContentStore& store, PipelineStats& stats, std::string& stage) {
  ClassRecord c;
  c.class_id = make_class_id(w.domain, w.category_index, w.instance_index);
  c.domain = w.domain;
  c.category = w.category;
  c.category_index = w.category_index;
  c.instance_index = w.instance_index;
  c.instance_seed = w.instance_seed;
  c.prompt = render_instance_prompt(w.category);

  stage = kStageGenerate;
  const StageRecord gen = generate_instance(w.category, w.instance_seed, cfg.steps, *clients.instance_source, store, &stats);
  stage = kStageRemoveBg;
  const ForegroundResult fg = remove_background(gen.hash, *clients.background_remover, store, &stats);
  c.mask_coverage = fg.coverage;
  for (std::size_t n = 0; n < w.backgrounds; ++n) {
    stage = kStagePad;
    const PadResult padded =
        pad_stage(fg.record.hash, split_seed(w.instance_seed, "pad", {n}), cfg.max_padding_fraction, store);
    stage = kStageRelight;
    const StageRecord lit = relight(padded.record.hash, w.category, split_seed(w.instance_seed, "relight", {n}),
                                    *clients.relighter, store, &stats);
    c.images.push_back({make_image_id(c.class_id, n), lit.hash, padded.fraction, {gen, fg.record, padded.record, lit}});
  }
  return c;
}

}  // namespace pipeline_detail

/// Runs every stage for every class of `cfg`. A class with any failing image
/// is dropped and recorded as a failure; more than 20% failed classes aborts
/// with PipelineAborted. Category-stage errors propagate directly.
inline PipelineResult run_pipeline(const GenerationConfig& cfg, const StageClients& clients, const ContentStore& store) {
  cfg.validate();
  require(clients.complete(), Errc::invalid_argument, "all four stage clients are required");
  PipelineStats stats;
  DatasetManifest m;
  m.dataset_id = cfg.dataset_id;
  m.config_fingerprint = config_fingerprint(cfg);
  m.master_seed = cfg.master_seed;

  std::vector<pipeline_detail::WorkItem> work;
  for (const auto& d : cfg.domains) {
    CategoryList cats;
    try {
      cats = generate_categories(d.name, d.prompt_template(), d.categories, *clients.category_source, &store, &stats);
    } catch (const ClientError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ClientError(std::string(kStageCategories), e.what());
    }
    m.domains.push_back({d.name, d.categories, cats.names.size(), d.instances, d.backgrounds,
                         clients.category_source->id(), cats.received});
    for (std::size_t ci = 0; ci < cats.names.size(); ++ci)
      for (std::size_t k = 0; k < d.instances; ++k)
        work.push_back({d.name, d.backgrounds, cats.names[ci], ci, k, instance_seed_for(cfg.master_seed, d.name, ci, k)});
  }

  std::vector<std::variant<ClassRecord, FailureRecord>> results(work.size());
  parallel_for(work.size(), cfg.threads, [&](std::size_t i) {
    const auto& w = work[i];
    std::string stage;
    try {
      results[i] = pipeline_detail::run_class(w, cfg, clients, store, stats, stage);
    } catch (const Error& e) {
      const auto* ce = dynamic_cast<const ClientError*>(&e);
      results[i] = FailureRecord{w.domain, w.category, w.category_index, w.instance_index, w.instance_seed,
                                 ce ? ce->stage() : stage, std::string(errc_name(e.code())), e.what()};
    }
  });
  for (auto& r : results) {
    if (auto* c = std::get_if<ClassRecord>(&r)) m.classes.push_back(std::move(*c));
    else m.failures.push_back(std::move(std::get<FailureRecord>(r)));
  }

  if (!work.empty() && static_cast<double>(m.failures.size()) > kMaxClassFailureFraction * static_cast<double>(work.size())) {
    std::string msg = std::to_string(m.failures.size()) + " of " + std::to_string(work.size()) +
                      " classes failed (limit 20%)";
    const auto& f = m.failures.front();
    msg += "; first failure at stage '" + f.stage + "': " + f.code + ": " + f.message;
    fail(Errc::pipeline_aborted, msg);
  }
  return {std::move(m), stats.client_calls.load(), stats.journal_hits.load()};
}

/// Recomputes one image's stage chain from its recorded seeds and returns the
/// hash produced at each stage. Uses a scratch store for intermediates.
inline std::vector<std::string> replay_image(const ClassRecord& c, const ImageRecord& im, const StageClients& clients,
                                             int steps, const ContentStore& scratch) {
  require(im.chain.size() == 4, Errc::format_error, "image record must carry four stages");
  const auto gen = generate_instance(c.category, c.instance_seed, steps, *clients.instance_source, scratch);
  const auto fg = remove_background(gen.hash, *clients.background_remover, scratch);
  Rng rng(im.chain[2].seed);
  const auto padded = scratch.put(encode_png(pad_and_resize(decode_png(scratch.get(fg.record.hash)), im.padding_fraction, rng)));
  const auto lit = relight(padded, c.category, im.chain[3].seed, *clients.relighter, scratch);
  return {gen.hash, fg.record.hash, padded, lit.hash};
}

}  // namespace ilgen::genpipe

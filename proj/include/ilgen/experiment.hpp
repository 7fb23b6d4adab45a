#pragma once

// Desk-scale end-to-end run on mock data: generate a dataset, hold out image 0
// of every class as a query, train the linear encoder on the remaining images
// and compare held-out retrieval mAP against the untrained initialization.
//
// Retrieval protocol: the queries search the non-query images of every class;
// a query's positives are the other images of its own class.
//
// With `unseen_instances` set, evaluation instead runs on a second dataset
// generated from `heldout_seed` (same categories, new instances), and training
// uses all N images of the first.

#include <filesystem>
#include <optional>
#include <string>

#include "ilgen/eval.hpp"
#include "ilgen/genpipe/mock.hpp"
#include "ilgen/genpipe/pipeline.hpp"
#include "ilgen/trainer.hpp"

namespace ilgen {

struct ExperimentConfig {
  std::size_t categories = 20;
  std::size_t instances = 5;
  std::size_t backgrounds = 4;
  std::uint64_t train_seed = 1;
  std::uint64_t heldout_seed = 2;
  bool unseen_instances = false;
  TrainConfig train = train_for(LossKind::recall_k);

  /// Desk-scale settings per loss head: 5 epochs, no augmentation, learning
  /// rates and batch sizes picked for the 768 -> 64 linear encoder.
  static TrainConfig train_for(LossKind kind) {
    TrainConfig t;
    t.loss.kind = kind;
    t.epochs = 5;
    t.batch_classes = 10;
    t.adam.learning_rate = 3e-3;
    t.augment = AugmentConfig::none();
    if (kind == LossKind::softmax_margin) {
      t.adam.learning_rate = 1e-3;
      t.loss.classifier_learning_rate = 1e-3;
      t.loss.classifier_warmup_epochs = 0;
    }
    return t;
  }
};

struct ExperimentResult {
  double initial_map = 0.0;
  double trained_map = 0.0;
  TrainLog log;

  double gain() const noexcept { return trained_map - initial_map; }
};

inline genpipe::GenerationConfig mock_generation_config(std::size_t c, std::size_t k, std::size_t n,
                                                        std::uint64_t seed) {
  genpipe::GenerationConfig cfg;
  cfg.master_seed = seed;
  cfg.threads = 1;
  genpipe::DomainSpec d;
  d.name = "generic";
  d.categories = c;
  d.instances = k;
  d.backgrounds = n;
  cfg.domains.push_back(d);
  return cfg;
}

/// Provider that decodes images of `manifest` from `store`.
inline ImageProvider store_provider(const genpipe::DatasetManifest& manifest, const genpipe::ContentStore& store) {
  auto hashes = std::make_shared<std::map<std::string, std::string>>(manifest.image_hashes());
  return [hashes, &store](const std::string& id) {
    const auto it = hashes->find(id);
    require(it != hashes->end(), Errc::missing_image, "image '" + id + "' is not in the manifest");
    return decode_png(store.get(it->second));
  };
}

/// Held-out mAP of `enc` on `manifest` (image 0 of each class as query).
template <Real T>
double heldout_map(const LinearEncoder<T>& enc, const genpipe::DatasetManifest& manifest,
                   const ImageProvider& images, std::size_t threads = 1) {
  const auto split = genpipe::holdout_split(manifest, 0);
  const auto queries = extract_descriptors(enc, split.query_ids, images, threads);
  const auto db = extract_descriptors(enc, split.database_ids, images, threads);
  return evaluate_dataset(queries, db, split.judgments, MetricConfig{}, "mock-heldout", "encoder", threads)
      .summary.map();
}

inline ExperimentResult run_mock_experiment(const ExperimentConfig& cfg, const std::filesystem::path& store_dir) {
  const genpipe::ContentStore store(store_dir);
  genpipe::MockClients mocks;
  const auto train_set =
      genpipe::run_pipeline(mock_generation_config(cfg.categories, cfg.instances, cfg.backgrounds, cfg.train_seed),
                            mocks.stage_clients(), store)
          .manifest;
  const auto heldout =
      cfg.unseen_instances
          ? genpipe::run_pipeline(
                mock_generation_config(cfg.categories, cfg.instances, cfg.backgrounds, cfg.heldout_seed),
                mocks.stage_clients(), store)
                .manifest
          : train_set;

  auto classes = train_set.instance_classes();
  if (!cfg.unseen_instances)
    for (auto& c : classes) c.image_ids.erase(c.image_ids.begin());
  const auto table = load_images(classes, store_provider(train_set, store));
  const auto heldout_images = store_provider(heldout, store);

  ExperimentResult r;
  const auto initial = init_encoder(kFeatureDim, cfg.train.out_dim, cfg.train.seed);
  r.initial_map = heldout_map(initial, heldout, heldout_images, cfg.train.threads);
  auto trained = train(classes, table, cfg.train);
  r.trained_map = heldout_map(trained.params.encoder, heldout, heldout_images, cfg.train.threads);
  r.log = std::move(trained.log);
  return r;
}

}  // namespace ilgen

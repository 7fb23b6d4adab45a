#pragma once

// Desk-scale training loop: batch planning, augmentation, featurization,
// loss heads, analytic backprop through normalize(W x + b), and Adam.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ilgen/augment.hpp"
#include "ilgen/batch.hpp"
#include "ilgen/encoder.hpp"
#include "ilgen/features.hpp"
#include "ilgen/json_util.hpp"
#include "ilgen/losses.hpp"
#include "ilgen/parallel.hpp"
#include "ilgen/text.hpp"

namespace ilgen {

enum class LossKind { recall_k, info_nce, contrastive, softmax_margin };

inline std::string_view loss_name(LossKind k) noexcept {
  switch (k) {
    case LossKind::recall_k: return "recallk";
    case LossKind::info_nce: return "infonce";
    case LossKind::contrastive: return "contrastive";
    case LossKind::softmax_margin: return "softmax-margin";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  for (auto k : {LossKind::recall_k, LossKind::info_nce, LossKind::contrastive, LossKind::softmax_margin})
    if (loss_name(k) == s) return k;
  fail(Errc::config_error, "unknown loss '" + std::string(s) + "' (recallk|infonce|contrastive|softmax-margin)");
}

struct LossConfig {
  LossKind kind = LossKind::recall_k;
  RecallKConfig recall;
  double infonce_temperature = 0.05;
  double contrastive_margin = 1.0;
  double softmax_scale = 16.0;
  double softmax_margin = 0.0;
  // softmax-margin: the encoder stays frozen for the first
  // `classifier_warmup_epochs` while only the classifier trains.
  std::size_t classifier_warmup_epochs = 2;
  double classifier_learning_rate = 1e-3;
  // Start classifier rows at the normalized class-mean descriptors of the
  // initial encoder instead of random directions.
  bool classifier_imprint = true;
};

struct TrainConfig {
  LossConfig loss;
  AdamConfig adam;
  std::size_t epochs = 1;
  std::size_t batch_classes = 400;
  std::uint64_t seed = 0;
  std::size_t out_dim = 64;
  AugmentConfig augment;
  std::size_t threads = 1;

  void validate() const {
    require(adam.learning_rate >= 0 && std::isfinite(adam.learning_rate), Errc::config_error,
            "learning rate must be finite and >= 0");
    require(adam.weight_decay >= 0, Errc::config_error, "weight decay must be >= 0");
    require(epochs >= 1, Errc::config_error, "epochs must be >= 1");
    require(batch_classes >= 2, Errc::config_error, "batch must hold at least two classes");
    require(out_dim >= 1, Errc::config_error, "descriptor dimension must be >= 1");
    require(loss.classifier_learning_rate >= 0 && std::isfinite(loss.classifier_learning_rate), Errc::config_error,
            "classifier learning rate must be finite and >= 0");
    require(augment.crop_min_area > 0 && augment.crop_min_area <= augment.crop_max_area && augment.crop_max_area <= 1,
            Errc::config_error, "crop areas must satisfy 0 < min <= max <= 1");
    require(augment.flip_prob >= 0 && augment.flip_prob <= 1 && augment.grayscale_prob >= 0 &&
                augment.grayscale_prob <= 1,
            Errc::config_error, "augmentation probabilities must lie in [0, 1]");
    require(augment.brightness >= 0 && augment.brightness < 1 && augment.contrast >= 0 && augment.contrast < 1,
            Errc::config_error, "brightness and contrast jitter must lie in [0, 1)");
    loss.recall.validate();
  }
};

/// Canonical JSON form; `threads` is omitted because it does not change results.
inline Json to_json(const TrainConfig& c) {
  Json j;
  j["loss"] = std::string(loss_name(c.loss.kind));
  j["recall_ks"] = c.loss.recall.ks;
  j["recall_temp_rank"] = c.loss.recall.temp_rank;
  j["recall_temp_outer"] = c.loss.recall.temp_outer;
  j["infonce_temperature"] = c.loss.infonce_temperature;
  j["contrastive_margin"] = c.loss.contrastive_margin;
  j["softmax_scale"] = c.loss.softmax_scale;
  j["softmax_margin"] = c.loss.softmax_margin;
  j["classifier_warmup_epochs"] = c.loss.classifier_warmup_epochs;
  j["classifier_learning_rate"] = c.loss.classifier_learning_rate;
  j["classifier_imprint"] = c.loss.classifier_imprint;
  j["learning_rate"] = c.adam.learning_rate;
  j["weight_decay"] = c.adam.weight_decay;
  j["adam_beta1"] = c.adam.beta1;
  j["adam_beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["epochs"] = c.epochs;
  j["batch_classes"] = c.batch_classes;
  j["seed"] = c.seed;
  j["out_dim"] = c.out_dim;
  Json a;
  a["enabled"] = c.augment.enabled;
  a["crop_min_area"] = c.augment.crop_min_area;
  a["crop_max_area"] = c.augment.crop_max_area;
  a["flip_prob"] = c.augment.flip_prob;
  a["brightness"] = c.augment.brightness;
  a["contrast"] = c.augment.contrast;
  a["grayscale_prob"] = c.augment.grayscale_prob;
  j["augment"] = std::move(a);
  return j;
}

/// Strict parse over defaults: unknown keys are errors, missing keys keep
/// their default.
inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  using json_util::read;
  const std::string w = "train config";
  json_util::check_keys(j,
                        {"loss", "recall_ks", "recall_temp_rank", "recall_temp_outer", "infonce_temperature",
                         "contrastive_margin", "softmax_scale", "softmax_margin", "classifier_warmup_epochs",
                         "classifier_learning_rate", "classifier_imprint", "learning_rate", "weight_decay",
                         "adam_beta1", "adam_beta2", "adam_eps", "epochs", "batch_classes", "seed", "out_dim",
                         "augment", "threads"},
                        w);
  std::string loss(loss_name(c.loss.kind));
  read(j, "loss", loss, w);
  c.loss.kind = parse_loss_kind(loss);
  read(j, "recall_ks", c.loss.recall.ks, w);
  read(j, "recall_temp_rank", c.loss.recall.temp_rank, w);
  read(j, "recall_temp_outer", c.loss.recall.temp_outer, w);
  read(j, "infonce_temperature", c.loss.infonce_temperature, w);
  read(j, "contrastive_margin", c.loss.contrastive_margin, w);
  read(j, "softmax_scale", c.loss.softmax_scale, w);
  read(j, "softmax_margin", c.loss.softmax_margin, w);
  read(j, "classifier_warmup_epochs", c.loss.classifier_warmup_epochs, w);
  read(j, "classifier_learning_rate", c.loss.classifier_learning_rate, w);
  read(j, "classifier_imprint", c.loss.classifier_imprint, w);
  read(j, "learning_rate", c.adam.learning_rate, w);
  read(j, "weight_decay", c.adam.weight_decay, w);
  read(j, "adam_beta1", c.adam.beta1, w);
  read(j, "adam_beta2", c.adam.beta2, w);
  read(j, "adam_eps", c.adam.eps, w);
  read(j, "epochs", c.epochs, w);
  read(j, "batch_classes", c.batch_classes, w);
  read(j, "seed", c.seed, w);
  read(j, "out_dim", c.out_dim, w);
  read(j, "threads", c.threads, w);
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    const std::string wa = "train config augment";
    json_util::check_keys(a, {"enabled", "crop_min_area", "crop_max_area", "flip_prob", "brightness", "contrast",
                              "grayscale_prob"},
                          wa);
    read(a, "enabled", c.augment.enabled, wa);
    read(a, "crop_min_area", c.augment.crop_min_area, wa);
    read(a, "crop_max_area", c.augment.crop_max_area, wa);
    read(a, "flip_prob", c.augment.flip_prob, wa);
    read(a, "brightness", c.augment.brightness, wa);
    read(a, "contrast", c.augment.contrast, wa);
    read(a, "grayscale_prob", c.augment.grayscale_prob, wa);
  }
  c.validate();
  return c;
}

inline std::string train_config_fingerprint(const TrainConfig& c) { return sha256_hex(to_json(c).dump()); }

/// Inputs to one optimizer step, positions flattened in batch order.
struct BatchInputs {
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> class_of;  // global class index (softmax-margin target)
  std::vector<RetrievalTask> tasks;
  std::vector<std::size_t> contrastive_positive;  // per task: index into task.database
};

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;
  std::vector<double> grad_classifier;  // softmax-margin only, classes x out_dim
};

/// Total batch loss and its gradient. Ranking heads average over the batch's
/// retrieval tasks; softmax-margin averages over every image of the batch.
/// `classifier` holds raw class weights (rows are normalized internally).
template <Real T>
BatchGradient batch_objective(const LinearEncoder<T>& enc, const BatchInputs& in, const LossConfig& loss,
                              std::span<const double> classifier = {}) {
  const std::size_t n = in.features.size();
  const std::size_t d = enc.out_dim;
  require(n > 0 && !in.tasks.empty(), Errc::invalid_argument, "empty batch");

  std::vector<std::vector<double>> z(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto u = enc.activation(in.features[i]);
    perturb_if_degenerate(u);
    norms[i] = l2_norm(std::span<const double>(u));
    for (double& v : u) v /= norms[i];
    z[i] = std::move(u);
  }
  std::vector<std::vector<double>> dz(n, std::vector<double>(d, 0.0));

  BatchGradient out;
  const double inv_tasks = 1.0 / static_cast<double>(in.tasks.size());
  auto add_scaled = [](std::vector<double>& acc, std::span<const double> v, double s) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
  };

  switch (loss.kind) {
    case LossKind::recall_k:
    case LossKind::info_nce: {
      for (const auto& task : in.tasks) {
        const auto& zq = z[task.query_pos];
        std::vector<double> scores(task.database_pos.size());
        for (std::size_t j = 0; j < scores.size(); ++j)
          scores[j] = dot(std::span<const double>(zq), std::span<const double>(z[task.database_pos[j]]));
        const LossReport r = loss.kind == LossKind::recall_k
                                 ? recall_at_k_loss(scores, task.labels, loss.recall)
                                 : info_nce_loss(scores, task.labels, loss.infonce_temperature);
        out.loss += r.value * inv_tasks;
        for (std::size_t j = 0; j < scores.size(); ++j) {
          const std::size_t pos = task.database_pos[j];
          add_scaled(dz[task.query_pos], z[pos], r.grad[j] * inv_tasks);
          add_scaled(dz[pos], zq, r.grad[j] * inv_tasks);
        }
      }
      break;
    }
    case LossKind::contrastive: {
      require(in.contrastive_positive.size() == in.tasks.size(), Errc::invalid_argument,
              "contrastive loss needs one chosen positive per task");
      for (std::size_t t = 0; t < in.tasks.size(); ++t) {
        const auto& task = in.tasks[t];
        const std::size_t pos_idx = in.contrastive_positive[t];
        require(pos_idx < task.labels.size() && task.labels[pos_idx], Errc::invalid_argument,
                "chosen contrastive positive is not a positive");
        std::vector<std::string> neg_ids;
        std::vector<double> neg_values;
        std::vector<std::size_t> neg_pos;
        for (std::size_t j = 0; j < task.labels.size(); ++j) {
          if (task.labels[j]) continue;
          neg_ids.push_back(task.database[j]);
          neg_pos.push_back(task.database_pos[j]);
          neg_values.insert(neg_values.end(), z[task.database_pos[j]].begin(), z[task.database_pos[j]].end());
        }
        const auto negatives = BasicDescriptorSet<double>::from_rows(std::move(neg_ids), std::move(neg_values), d);
        const std::size_t p = task.database_pos[pos_idx];
        const auto r = contrastive_loss(std::span<const double>(z[task.query_pos]), std::span<const double>(z[p]),
                                        negatives, loss.contrastive_margin);
        out.loss += r.value * inv_tasks;
        add_scaled(dz[task.query_pos], r.grad_anchor, inv_tasks);
        add_scaled(dz[p], r.grad_positive, inv_tasks);
        add_scaled(dz[neg_pos[r.hardest]], r.grad_negative, inv_tasks);
      }
      break;
    }
    case LossKind::softmax_margin: {
      require(!classifier.empty() && classifier.size() % d == 0, Errc::invalid_argument,
              "softmax-margin needs classifier weights of shape classes x out_dim");
      const std::size_t classes = classifier.size() / d;
      std::vector<double> w(classifier.size());
      std::vector<double> row_norms(classes);
      for (std::size_t c = 0; c < classes; ++c) {
        const auto row = classifier.subspan(c * d, d);
        row_norms[c] = std::max(l2_norm(row), kZeroNormThreshold);
        for (std::size_t i = 0; i < d; ++i) w[c * d + i] = row[i] / row_norms[c];
      }
      std::vector<double> dw(classifier.size(), 0.0);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = softmax_margin_loss(z[i], in.class_of[i], w, loss.softmax_scale, loss.softmax_margin);
        out.loss += r.value * inv_n;
        add_scaled(dz[i], r.grad_embedding, inv_n);
        add_scaled(dw, r.grad_weights, inv_n);
      }
      out.grad_classifier.assign(classifier.size(), 0.0);
      for (std::size_t c = 0; c < classes; ++c) {
        const std::span<const double> wc(w.data() + c * d, d);
        const std::span<const double> gc(dw.data() + c * d, d);
        const double radial = dot(wc, gc);
        for (std::size_t i = 0; i < d; ++i) out.grad_classifier[c * d + i] = (gc[i] - radial * wc[i]) / row_norms[c];
      }
      break;
    }
  }

  out.grad_weight.assign(enc.weight.size(), 0.0);
  out.grad_bias.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double radial = dot(std::span<const double>(z[i]), std::span<const double>(dz[i]));
    const auto& x = in.features[i];
    for (std::size_t r = 0; r < d; ++r) {
      const double du = (dz[i][r] - radial * z[i][r]) / norms[i];
      if (du == 0.0) continue;
      out.grad_bias[r] += du;
      double* g = out.grad_weight.data() + r * enc.in_dim;
      for (std::size_t c = 0; c < enc.in_dim; ++c) g[c] += du * x[c];
    }
  }
  return out;
}

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
};

struct TrainLog {
  std::string loss_head;
  std::string config_fingerprint;
  std::vector<StepLog> steps;
  std::vector<double> epoch_mean_loss;
  double wall_seconds = 0.0;
  std::string initial_fingerprint;
  std::string final_fingerprint;
};

inline std::string format_train_log_csv(const TrainLog& log) {
  std::string out = "step,epoch,batch,loss\n";
  for (const auto& s : log.steps)
    out += std::to_string(s.step) + "," + std::to_string(s.epoch) + "," + std::to_string(s.batch) + "," +
           text::shortest(s.loss) + "\n";
  return out;
}

struct TrainResult {
  EncoderParams params;
  TrainLog log;
};

/// Returns the decoded image for an id; throws when the id is unknown.
using ImageProvider = std::function<Image(const std::string& image_id)>;

/// Image ids mapped to decoded rasters, loaded once up front.
using ImageTable = std::unordered_map<std::string, Image>;

inline ImageTable load_images(const std::vector<InstanceClass>& classes, const ImageProvider& provider) {
  ImageTable table;
  for (const auto& c : classes)
    for (const auto& id : c.image_ids) {
      if (table.contains(id)) continue;
      try {
        table.emplace(id, provider(id));
      } catch (const std::exception& e) {
        fail(Errc::missing_image, "image '" + id + "' of class '" + c.class_id + "': " + e.what());
      }
    }
  return table;
}

/// Assembles the optimizer inputs for one planned batch: augmented and
/// featurized images, tasks and (for contrastive) the sampled positives.
inline BatchInputs prepare_batch(const BatchPlan& plan, const ImageTable& images, const AugmentConfig& augment,
                                 std::size_t threads) {
  BatchInputs in;
  in.tasks = batch_to_tasks(plan);
  std::vector<const Image*> sources;
  for (const auto& e : plan.entries)
    for (const auto& id : e.image_ids) {
      sources.push_back(&images.at(id));
      in.class_of.push_back(e.class_index);
    }
  in.features.resize(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    Rng rng(split_seed(plan.rng_seed, "augment", {i}));
    in.features[i] = featurize_values(augment.enabled ? ilgen::augment(*sources[i], rng, augment) : *sources[i]);
  });
  for (std::size_t t = 0; t < in.tasks.size(); ++t) {
    const auto& labels = in.tasks[t].labels;
    std::vector<std::size_t> positives;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j]) positives.push_back(j);
    Rng rng(split_seed(plan.rng_seed, "positive", {t}));
    in.contrastive_positive.push_back(positives[rng.below(positives.size())]);
  }
  return in;
}

/// Trains from `initial` (or a fresh seeded init) over `classes`.
inline TrainResult train(const std::vector<InstanceClass>& classes, const ImageTable& images, const TrainConfig& cfg,
                         std::optional<EncoderParams> initial = std::nullopt) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  result.params = initial ? std::move(*initial) : EncoderParams(init_encoder(kFeatureDim, cfg.out_dim, cfg.seed));
  auto& enc = result.params.encoder;
  result.log.loss_head = std::string(loss_name(cfg.loss.kind));
  result.log.config_fingerprint = train_config_fingerprint(cfg);
  result.log.initial_fingerprint = parameter_fingerprint(enc);

  std::vector<float> classifier;
  AdamMoments classifier_moments;
  std::uint64_t classifier_step = 0;
  AdamConfig classifier_adam = cfg.adam;
  classifier_adam.learning_rate = cfg.loss.classifier_learning_rate;
  if (cfg.loss.kind == LossKind::softmax_margin) {
    classifier.resize(classes.size() * enc.out_dim);
    Rng rng(split_seed(cfg.seed, "classifier-init"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(enc.out_dim));
    for (auto& w : classifier) w = static_cast<float>(rng.normal() * scale);
    if (cfg.loss.classifier_imprint) {
      std::vector<double> row(enc.out_dim);
      for (std::size_t c = 0; c < classes.size(); ++c) {
        std::fill(row.begin(), row.end(), 0.0);
        for (const auto& id : classes[c].image_ids) {
          const auto z = encode(enc, featurize_values(images.at(id)));
          for (std::size_t i = 0; i < row.size(); ++i) row[i] += z[i];
        }
        const auto unit = normalize(row);
        for (std::size_t i = 0; i < row.size(); ++i) classifier[c * enc.out_dim + i] = static_cast<float>(unit[i]);
      }
    }
    classifier_moments = AdamMoments(classifier.size());
  }

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto plans = build_epoch(classes, cfg.batch_classes, split_seed(cfg.seed, "epoch", {epoch}));
    const bool encoder_frozen = !classifier.empty() && epoch < cfg.loss.classifier_warmup_epochs;
    double epoch_sum = 0.0;
    for (const auto& plan : plans) {
      const BatchInputs in = prepare_batch(plan, images, cfg.augment, cfg.threads);
      std::vector<double> classifier_d(classifier.begin(), classifier.end());
      const auto g = batch_objective(enc, in, cfg.loss, classifier_d);
      require(std::isfinite(g.loss), Errc::non_finite_loss,
              "loss is not finite at step " + std::to_string(step) + " (epoch " + std::to_string(epoch) +
                  ", batch " + std::to_string(plan.batch_index) + ")");
      if (!encoder_frozen) {
        ++result.params.step;
        adam_update(enc.weight, g.grad_weight, result.params.weight_moments, result.params.step, cfg.adam);
        adam_update(enc.bias, g.grad_bias, result.params.bias_moments, result.params.step, cfg.adam);
      }
      if (!classifier.empty())
        adam_update(classifier, g.grad_classifier, classifier_moments, ++classifier_step, classifier_adam);
      result.log.steps.push_back({step, epoch, plan.batch_index, g.loss});
      epoch_sum += g.loss;
      ++step;
    }
    result.log.epoch_mean_loss.push_back(plans.empty() ? 0.0 : epoch_sum / static_cast<double>(plans.size()));
  }
  result.log.final_fingerprint = parameter_fingerprint(enc);
  result.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Descriptors for `ids` under `enc`, without augmentation.
template <Real T>
DescriptorSet extract_descriptors(const LinearEncoder<T>& enc, const std::vector<std::string>& ids,
                                  const ImageProvider& images, std::size_t threads = 1) {
  std::vector<Descriptor> rows(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) { rows[i] = encode(enc, featurize_values(images(ids[i]))); });
  DescriptorSet set(enc.out_dim);
  for (std::size_t i = 0; i < ids.size(); ++i) set.add(ids[i], rows[i]);
  return set;
}

}  // namespace ilgen

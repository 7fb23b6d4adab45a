// ilgen command-line tool.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ilgen/descriptor_io.hpp"
#include "ilgen/eval_io.hpp"
#include "ilgen/experiment.hpp"
#include "ilgen/genpipe/golden.hpp"
#include "ilgen/genpipe/http_client.hpp"
#include "ilgen/genpipe/manifest.hpp"
#include "ilgen/genpipe/mock.hpp"
#include "ilgen/genpipe/pipeline.hpp"
#include "ilgen/overlap.hpp"
#include "ilgen/png.hpp"
#include "ilgen/trainer.hpp"

namespace fs = std::filesystem;
using namespace ilgen;
using namespace ilgen::genpipe;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void usage_require(bool cond, const std::string& message) {
  if (!cond) throw UsageError(message);
}

Json read_json_file(const fs::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, path.string() + ": " + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) { return parse_manifest(read_text_file(path)); }

fs::path store_for(const fs::path& manifest, const std::string& store) {
  return store.empty() ? manifest.parent_path() / "store" : fs::path(store);
}

/// Image ids of every <id>.png directly under `dir`, sorted.
std::vector<std::string> list_image_ids(const fs::path& dir) {
  require(fs::is_directory(dir), Errc::missing_image, "not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

ImageProvider dir_provider(const fs::path& dir) {
  return [dir](const std::string& id) {
    const fs::path p = dir / (id + ".png");
    require(fs::exists(p), Errc::missing_image, "no image file " + p.string());
    return decode_png(read_file(p));
  };
}

LinearEncoder<float> load_encoder(const std::string& checkpoint, std::uint64_t init_seed, std::size_t dim) {
  if (!checkpoint.empty()) return read_checkpoint(checkpoint).encoder;
  return init_encoder(kFeatureDim, dim, init_seed);
}

void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, content);
}

// Encoder selection shared by extract and eval: a checkpoint or a seeded
// random initialization.
struct EncoderFlags {
  std::string checkpoint;
  std::uint64_t init_seed = 0;
  std::size_t dim = 64;

  void add(CLI::App& cmd) {
    cmd.add_option("--checkpoint", checkpoint, "Encoder checkpoint; omitted means a random initialization");
    cmd.add_option("--init-seed", init_seed, "Seed of the random initialization");
    cmd.add_option("--dim", dim, "Descriptor dimension of the random initialization");
  }
  LinearEncoder<float> encoder() const { return load_encoder(checkpoint, init_seed, dim); }
};

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  bool mock = false;
  std::string endpoint;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 4;
  std::size_t categories = 20, instances = 5, backgrounds = 4;
};

int cmd_generate(const GenerateArgs& a) {
  usage_require(a.mock != !a.endpoint.empty(), "exactly one of --mock and --endpoint (or ILGEN_ENDPOINT) is required");
  GenerationConfig cfg;
  if (!a.config.empty()) {
    cfg = generation_config_from_json(read_json_file(a.config));
  } else {
    DomainSpec d;
    d.name = "generic";
    d.categories = a.categories;
    d.instances = a.instances;
    d.backgrounds = a.backgrounds;
    cfg.domains.push_back(d);
  }
  if (a.seed) cfg.master_seed = *a.seed;
  cfg.threads = a.threads;
  cfg.validate();

  MockClients mocks(cfg.image_size);
  const StageClients clients = a.mock ? mocks.stage_clients() : remote_clients(a.endpoint);
  const fs::path out(a.out);
  const ContentStore store(out / "store");
  const auto result = run_pipeline(cfg, clients, store);
  const auto& m = result.manifest;
  const fs::path manifest_path = out / "manifest.jsonl";
  write_text(manifest_path, format_manifest(m));
  for (const auto& f : m.failures)
    std::cerr << "failed class " << f.domain << "/" << f.category << "#" << f.instance_index << " at stage " << f.stage
              << ": " << f.message << "\n";
  std::cout << "classes " << m.classes.size() << "\n"
            << "images " << m.image_count() << "\n"
            << "failures " << m.failures.size() << "\n"
            << "client_calls " << result.client_calls << "\n"
            << "fingerprint " << manifest_fingerprint(m) << "\n"
            << "manifest " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  EncoderFlags enc;
  std::string manifest, store, split = "all", images, out;
  std::size_t threads = 1;
};

int cmd_extract(const ExtractArgs& a) {
  usage_require(a.manifest.empty() != a.images.empty(), "exactly one of --manifest and --images is required");
  const auto enc = a.enc.encoder();
  DescriptorSet set;
  if (!a.images.empty()) {
    set = extract_descriptors(enc, list_image_ids(a.images), dir_provider(a.images), a.threads);
  } else {
    const auto m = load_manifest(a.manifest);
    const ContentStore store(store_for(a.manifest, a.store));
    std::vector<std::string> ids;
    if (a.split == "all") {
      for (const auto& c : m.classes)
        for (const auto& im : c.images) ids.push_back(im.image_id);
    } else {
      const auto s = holdout_split(m);
      usage_require(a.split == "query" || a.split == "database", "--split must be all, query or database");
      ids = a.split == "query" ? s.query_ids : s.database_ids;
    }
    set = extract_descriptors(enc, ids, store_provider(m, store), a.threads);
  }
  write_descriptor_file(a.out, set);
  std::cout << "descriptors " << set.size() << "\n"
            << "dim " << set.dim() << "\n"
            << "out " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest, store, config, init, out;
  bool holdout = false;
  CLI::Option* loss_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* wd_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* dim_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* no_aug_opt = nullptr;
  std::string loss = std::string(loss_name(TrainConfig{}.loss.kind));
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t batch_classes = TrainConfig{}.batch_classes;
  double lr = TrainConfig{}.adam.learning_rate;
  double weight_decay = TrainConfig{}.adam.weight_decay;
  std::uint64_t seed = TrainConfig{}.seed;
  std::size_t out_dim = TrainConfig{}.out_dim;
  std::size_t threads = TrainConfig{}.threads;
  bool no_augment = false;
};

// Flags given on the command line override the config file.
TrainConfig train_config_of(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : train_config_from_json(read_json_file(a.config));
  if (a.loss_opt->count()) cfg.loss.kind = parse_loss_kind(a.loss);
  if (a.epochs_opt->count()) cfg.epochs = a.epochs;
  if (a.batch_opt->count()) cfg.batch_classes = a.batch_classes;
  if (a.lr_opt->count()) cfg.adam.learning_rate = a.lr;
  if (a.wd_opt->count()) cfg.adam.weight_decay = a.weight_decay;
  if (a.seed_opt->count()) cfg.seed = a.seed;
  if (a.dim_opt->count()) cfg.out_dim = a.out_dim;
  if (a.threads_opt->count()) cfg.threads = a.threads;
  if (a.no_aug_opt->count()) cfg.augment.enabled = false;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const TrainConfig cfg = train_config_of(a);
  const auto m = load_manifest(a.manifest);
  const ContentStore store(store_for(a.manifest, a.store));
  auto classes = m.instance_classes();
  if (a.holdout)
    for (auto& c : classes) c.image_ids.erase(c.image_ids.begin());
  const auto table = load_images(classes, store_provider(m, store));
  std::optional<EncoderParams> initial;
  if (!a.init.empty()) initial = read_checkpoint(a.init);
  const auto result = train(classes, table, cfg, std::move(initial));

  const fs::path out(a.out);
  fs::create_directories(out);
  write_checkpoint(out / "checkpoint.ilck", result.params);
  write_text(out / "train_log.csv", format_train_log_csv(result.log));
  write_text(out / "train_config.json", to_json(cfg).dump(2) + "\n");
  // wall time is the only nondeterministic output, kept apart from the rest
  write_text(out / "timing.txt", "wall_seconds " + text::fixed(result.log.wall_seconds, 3) + "\n");
  std::cout << "loss_head " << result.log.loss_head << "\n"
            << "steps " << result.log.steps.size() << "\n";
  if (!result.log.epoch_mean_loss.empty())
    std::cout << "final_epoch_loss " << text::shortest(result.log.epoch_mean_loss.back()) << "\n";
  std::cout << "initial_fingerprint " << result.log.initial_fingerprint << "\n"
            << "final_fingerprint " << result.log.final_fingerprint << "\n"
            << "checkpoint " << (out / "checkpoint.ilck").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  EncoderFlags enc;
  std::string images, query_images, relevance, query_desc, db_desc, manifest, store, out;
  std::optional<std::size_t> cutoff;
  std::vector<std::size_t> recall_ks;
  std::string dataset = "dataset", model = "model";
  std::size_t threads = 1;
};

int cmd_eval(const EvalArgs& a) {
  const int sources = !a.images.empty() + !a.query_desc.empty() + !a.manifest.empty();
  usage_require(sources == 1, "exactly one of --images, --query-descriptors or --manifest is required");
  MetricConfig metric;
  metric.cutoff = a.cutoff;
  metric.recall_ks = a.recall_ks;

  DescriptorSet queries, db;
  Judgments judgments;
  if (!a.manifest.empty()) {
    const auto m = load_manifest(a.manifest);
    const ContentStore store(store_for(a.manifest, a.store));
    const auto split = holdout_split(m);
    const auto provider = store_provider(m, store);
    const auto enc = a.enc.encoder();
    queries = extract_descriptors(enc, split.query_ids, provider, a.threads);
    db = extract_descriptors(enc, split.database_ids, provider, a.threads);
    judgments = split.judgments;
  } else {
    usage_require(!a.relevance.empty(), "--relevance is required with --images or --query-descriptors");
    const auto rel = parse_relevance(read_text_file(a.relevance));
    for (const auto& q : rel.dropped) std::cerr << "query " << q << " has no positives; skipped\n";
    judgments = rel.judgments;
    if (!a.images.empty()) {
      const auto enc = a.enc.encoder();
      const std::set<std::string> qset(rel.query_order.begin(), rel.query_order.end());
      std::vector<std::string> db_ids;
      for (auto& id : list_image_ids(a.images))
        if (!a.query_images.empty() || !qset.count(id)) db_ids.push_back(std::move(id));
      const fs::path qdir = a.query_images.empty() ? fs::path(a.images) : fs::path(a.query_images);
      queries = extract_descriptors(enc, rel.query_order, dir_provider(qdir), a.threads);
      db = extract_descriptors(enc, db_ids, dir_provider(a.images), a.threads);
    } else {
      usage_require(!a.db_desc.empty(), "--db-descriptors is required with --query-descriptors");
      const auto all_q = read_descriptor_file(a.query_desc);
      db = read_descriptor_file(a.db_desc);
      std::map<std::string, std::size_t> row_of;
      for (std::size_t i = 0; i < all_q.size(); ++i) row_of.emplace(all_q.id(i), i);
      std::vector<float> values;
      for (const auto& id : rel.query_order) {
        const auto it = row_of.find(id);
        require(it != row_of.end(), Errc::invalid_judgment, "query '" + id + "' has no descriptor");
        const auto row = all_q.row(it->second);
        values.insert(values.end(), row.begin(), row.end());
      }
      queries = DescriptorSet::from_rows(rel.query_order, std::move(values), all_q.dim());
    }
  }
  const auto result = evaluate_dataset(queries, db, judgments, metric, a.dataset, a.model, a.threads);
  const std::vector<EvalSummary> summaries{result.summary};
  const std::string summary = format_summary(summaries);
  if (!a.out.empty()) {
    const fs::path out(a.out);
    write_text(out / "summary.tsv", summary);
    write_text(out / "per_query.csv", format_report_csv(result.report));
  }
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------- scatter

int cmd_scatter(const std::string& a, const std::string& b, const std::string& out) {
  const auto ra = parse_report_csv(read_text_file(a));
  const auto rb = parse_report_csv(read_text_file(b));
  const auto rows = scatter_pairs(ra, rb);
  const std::string csv = format_scatter_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
    std::size_t below = 0, on = 0;
    for (const auto& r : rows) below += r.below_diagonal(), on += r.on_diagonal();
    std::cout << "queries " << rows.size() << "\n"
              << "below_diagonal " << below << "\n"
              << "on_diagonal " << on << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- overlap

struct OverlapArgs {
  std::string test, train, out, contact_sheet, test_images, train_images;
  std::size_t top_m = 10, per_query = 1, threads = 1;
};

int cmd_overlap(const OverlapArgs& a) {
  const auto q = read_descriptor_file(a.test);
  const auto t = read_descriptor_file(a.train);
  const auto pairs = mine_overlap(q, t, a.top_m, a.per_query, a.threads);
  const std::string csv = format_overlap_csv(pairs);
  if (a.out.empty()) std::cout << csv;
  else write_text(a.out, csv);
  if (!a.contact_sheet.empty()) {
    auto resolver = [](std::string dir) {
      return [dir = std::move(dir)](const std::string& id) {
        return dir.empty() ? id + ".png" : (fs::path(dir) / (id + ".png")).string();
      };
    };
    write_text(a.contact_sheet, format_contact_sheet(pairs, resolver(a.test_images), resolver(a.train_images)));
  }
  if (!a.out.empty())
    std::cout << "pairs " << pairs.size() << "\n"
              << "top_similarity " << (pairs.empty() ? std::string("-") : text::fixed(pairs[0].similarity, 6)) << "\n";
  return 0;
}

// ---------------------------------------------------------------- split

int cmd_split(const std::string& manifest, const std::string& store_dir, const std::string& out, bool export_images) {
  const auto m = load_manifest(manifest);
  const auto s = holdout_split(m);
  const fs::path dir(out);
  write_text(dir / "relevance.txt", format_relevance(s.judgments, s.query_ids));
  std::string q, d;
  for (const auto& id : s.query_ids) q += id + "\n";
  for (const auto& id : s.database_ids) d += id + "\n";
  write_text(dir / "query_ids.txt", q);
  write_text(dir / "database_ids.txt", d);
  if (export_images) {
    const ContentStore store(store_for(manifest, store_dir));
    fs::create_directories(dir / "images");
    for (const auto& [id, hash] : m.image_hashes()) write_file_atomic(dir / "images" / (id + ".png"), store.get(hash));
  }
  std::cout << "queries " << s.query_ids.size() << "\n"
            << "database " << s.database_ids.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(const std::string& loss, bool unseen, const std::string& work, std::size_t threads) {
  ExperimentConfig cfg;
  cfg.train = ExperimentConfig::train_for(parse_loss_kind(loss));
  cfg.train.threads = threads;
  cfg.unseen_instances = unseen;
  const auto r = run_mock_experiment(cfg, work);
  std::cout << "loss_head " << r.log.loss_head << "\n"
            << "initial_map " << text::fixed(r.initial_map, 4) << "\n"
            << "trained_map " << text::fixed(r.trained_map, 4) << "\n"
            << "gain " << text::fixed(r.gain(), 4) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ilgen: synthetic instance-level training data, toy training and retrieval evaluation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Run the generation pipeline and write a manifest");
  g->add_option("--config", gen.config, "Generation config (JSON); omitted means one generic domain");
  g->add_flag("--mock", gen.mock, "Use the built-in mock clients");
  g->add_option("--endpoint", gen.endpoint, "Generation service URL")->envname("ILGEN_ENDPOINT");
  g->add_option("--seed", gen.seed, "Master seed (overrides the config)");
  g->add_option("--out", gen.out, "Output directory (manifest.jsonl and store/)")->required();
  g->add_option("--threads", gen.threads, "In-flight work items");
  g->add_option("--categories", gen.categories, "C, without --config");
  g->add_option("--instances", gen.instances, "K, without --config");
  g->add_option("--backgrounds", gen.backgrounds, "N, without --config");

  ExtractArgs ext;
  auto* e = app.add_subcommand("extract", "Write descriptors for a manifest split or an image directory");
  ext.enc.add(*e);
  e->add_option("--manifest", ext.manifest, "Dataset manifest");
  e->add_option("--store", ext.store, "Content store (default: store/ next to the manifest)");
  e->add_option("--split", ext.split, "all | query | database (held-out split of the manifest)");
  e->add_option("--images", ext.images, "Directory of <id>.png images");
  e->add_option("--out", ext.out, "Descriptor file")->required();
  e->add_option("--threads", ext.threads, "Worker threads");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the toy encoder on a manifest");
  t->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  t->add_option("--store", tr.store, "Content store (default: store/ next to the manifest)");
  t->add_option("--config", tr.config, "Train config (JSON); flags override it");
  t->add_option("--init", tr.init, "Checkpoint to continue from");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_flag("--holdout", tr.holdout, "Leave image 0 of every class out of training");
  tr.loss_opt = t->add_option("--loss", tr.loss, "recallk | infonce | contrastive | softmax-margin");
  tr.epochs_opt = t->add_option("--epochs", tr.epochs, "Epochs");
  tr.batch_opt = t->add_option("--batch-classes", tr.batch_classes, "Classes per batch (B)");
  tr.lr_opt = t->add_option("--lr", tr.lr, "Adam learning rate");
  tr.wd_opt = t->add_option("--weight-decay", tr.weight_decay, "Decoupled weight decay");
  tr.seed_opt = t->add_option("--seed", tr.seed, "Training seed");
  tr.dim_opt = t->add_option("--out-dim", tr.out_dim, "Descriptor dimension");
  tr.threads_opt = t->add_option("--threads", tr.threads, "Worker threads (output does not depend on it)");
  tr.no_aug_opt = t->add_flag("--no-augment", tr.no_augment, "Disable augmentation");

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Retrieval evaluation: summary and per-query AP");
  ev.enc.add(*v);
  v->add_option("--images", ev.images, "Database images (<id>.png); queries too unless --query-images");
  v->add_option("--query-images", ev.query_images, "Separate query image directory");
  v->add_option("--relevance", ev.relevance, "Relevance file");
  v->add_option("--query-descriptors", ev.query_desc, "Precomputed query descriptors");
  v->add_option("--db-descriptors", ev.db_desc, "Precomputed database descriptors");
  v->add_option("--manifest", ev.manifest, "Evaluate the held-out split of a manifest");
  v->add_option("--store", ev.store, "Content store (default: store/ next to the manifest)");
  v->add_option("--cutoff", ev.cutoff, "Truncate AP at this rank (mAP@k)");
  v->add_option("--recall-ks", ev.recall_ks, "Also report R@k for these k");
  v->add_option("--dataset", ev.dataset, "Dataset label");
  v->add_option("--model", ev.model, "Model label");
  v->add_option("--out", ev.out, "Output directory (summary.tsv, per_query.csv)");
  v->add_option("--threads", ev.threads, "Worker threads");

  std::string sc_a, sc_b, sc_out;
  auto* s = app.add_subcommand("scatter", "Pair two per-query reports for plotting");
  s->add_option("report_a", sc_a, "Per-query CSV (x axis)")->required();
  s->add_option("report_b", sc_b, "Per-query CSV (y axis)")->required();
  s->add_option("--out", sc_out, "Output CSV (default: stdout)");

  OverlapArgs ov;
  auto* o = app.add_subcommand("overlap", "Highest-similarity pairs between evaluation and training descriptors");
  o->add_option("--test", ov.test, "Evaluation query descriptors")->required();
  o->add_option("--train", ov.train, "Training set descriptors")->required();
  o->add_option("--top-m", ov.top_m, "Pairs to keep");
  o->add_option("--per-query", ov.per_query, "Best matches considered per query");
  o->add_option("--out", ov.out, "Output CSV (default: stdout)");
  o->add_option("--contact-sheet", ov.contact_sheet, "Also write a contact-sheet directive file");
  o->add_option("--test-images", ov.test_images, "Image directory for query paths in the contact sheet");
  o->add_option("--train-images", ov.train_images, "Image directory for training paths in the contact sheet");
  o->add_option("--threads", ov.threads, "Worker threads");

  std::string sp_manifest, sp_store, sp_out;
  bool sp_export = false;
  auto* sp = app.add_subcommand("split", "Write the held-out query/database split of a manifest");
  sp->add_option("--manifest", sp_manifest, "Dataset manifest")->required();
  sp->add_option("--store", sp_store, "Content store (default: store/ next to the manifest)");
  sp->add_option("--out", sp_out, "Output directory")->required();
  sp->add_flag("--export-images", sp_export, "Copy images to <out>/images/<id>.png");

  std::string golden_out;
  auto* gd = app.add_subcommand("golden", "Write the wire-protocol golden files from the mock clients");
  gd->add_option("--out", golden_out, "Output directory")->required();

  int port = 8089;
  std::string host = "127.0.0.1";
  int serve_size = kGoldenImageSize;
  auto* sv = app.add_subcommand("serve", "Serve the mock clients over the wire protocol");
  sv->add_option("--host", host, "Listen address");
  sv->add_option("--port", port, "Listen port; 0 picks a free one");
  sv->add_option("--image-size", serve_size, "Mock image size");

  std::string ex_loss = "recallk", ex_work;
  bool ex_unseen = false;
  std::size_t ex_threads = 1;
  auto* ex = app.add_subcommand("experiment", "Desk-scale mock experiment: held-out mAP before and after training");
  ex->add_option("--loss", ex_loss, "Loss head");
  ex->add_flag("--unseen", ex_unseen, "Evaluate on instances generated from a different seed");
  ex->add_option("--work", ex_work, "Working directory for the content store")->required();
  ex->add_option("--threads", ex_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*e) return cmd_extract(ext);
    if (*t) return cmd_train(tr);
    if (*v) return cmd_eval(ev);
    if (*s) return cmd_scatter(sc_a, sc_b, sc_out);
    if (*o) return cmd_overlap(ov);
    if (*sp) return cmd_split(sp_manifest, sp_store, sp_out, sp_export);
    if (*gd) {
      MockClients mocks(kGoldenImageSize);
      const auto cases = build_golden_cases(mocks.stage_clients());
      write_golden_cases(golden_out, cases);
      std::cout << "cases " << cases.size() << "\n";
      return 0;
    }
    if (*sv) {
      MockClients mocks(serve_size);
      httplib::Server server;
      install_protocol_routes(server, mocks.stage_clients());
      const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      require(bound > 0, Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
      std::cout << "listening http://" << host << ":" << bound << std::endl;
      server.listen_after_bind();
      return 0;
    }
    if (*ex) return cmd_experiment(ex_loss, ex_unseen, ex_work, ex_threads);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.code() == Errc::config_error ? kExitUsage : kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

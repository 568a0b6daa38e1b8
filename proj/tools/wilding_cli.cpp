// wilding: command-line front end for training and evaluating the fusion head
// over precomputed embedding files.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wilding/embedding_store.hpp"
#include "wilding/error.hpp"
#include "wilding/evaluator.hpp"
#include "wilding/fusion_head.hpp"
#include "wilding/text_head.hpp"
#include "wilding/trainer.hpp"

namespace fs = std::filesystem;
using namespace wilding;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

SampleManifest labels_for(const fs::path& images, const std::string& labels_override) {
  const fs::path source = labels_override.empty() ? manifest_path(images) : fs::path(labels_override);
  if (!fs::exists(source)) fail(ErrorCode::IoError, "no label manifest at " + source.string());
  return load_manifest(source);
}

LabeledEmbeddings load_labeled(const fs::path& images, const fs::path& captions,
                               const std::string& labels_override,
                               std::span<const std::string> catalog) {
  const EmbeddingMatrix img = load_embedding_file(images);
  const EmbeddingMatrix cap = load_embedding_file(captions);
  if (img.rows() == 0) fail(ErrorCode::TooFewSamples, images.string() + " has no rows");
  return align_labeled(img, cap, labels_for(images, labels_override), catalog);
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "image/caption fusion weight")->capture_default_str();
  cmd->add_option("--tau", cfg.tau, "softmax temperature")->capture_default_str();
  cmd->add_option("--lr", cfg.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--momentum", cfg.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", cfg.epochs, "maximum epochs")->capture_default_str();
  cmd->add_option("--patience", cfg.patience, "early stopping patience")->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden_dim, "hidden layer width")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "seed for init, shuffling and partitioning")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------

int run_ingest(const std::vector<std::string>& paths, const std::string& catalog_file) {
  std::optional<ClassCentroids> catalog;
  if (!catalog_file.empty()) catalog = load_class_centroids(catalog_file);
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      const ClassPack pack = load_class_pack(p);
      std::size_t templates = 0;
      for (const auto& c : pack.classes) templates += c.templates.has_value();
      std::cout << "ok pack " << p << ": " << pack.classes.size() << " classes, dim "
                << pack.dim() << ", " << templates << " with templates\n";
      continue;
    }
    const EmbeddingMatrix m = load_embedding_file(p);
    if (catalog && fs::exists(manifest_path(p))) {
      check_labels(load_manifest(manifest_path(p)), catalog->classes);
    }
    std::cout << "ok " << p << ": " << m.rows() << " x " << m.dim() << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string images, captions, centroids, val_images, val_captions, out, report;
  double val_fraction = kDefaultValFraction;
  TrainConfig config;
};

FusionModel train_model(const TrainArgs& a, TrainReport* report_out) {
  const ClassCentroids classes = load_class_centroids(a.centroids);
  LabeledEmbeddings dev = load_labeled(a.images, a.captions, "", classes.classes);
  LabeledEmbeddings train_set, val_set;
  if (!a.val_images.empty()) {
    train_set = std::move(dev);
    val_set = load_labeled(a.val_images, a.val_captions, "", classes.classes);
  } else {
    const Partition p = monte_carlo_partition(dev.size(), a.config.seed, a.val_fraction);
    train_set = dev.subset(p.train);
    val_set = dev.subset(p.val);
  }
  TrainConfig cfg = a.config;
  cfg.beta = classes.beta;
  TrainReport report = train(train_set, val_set, classes, cfg);
  FusionModel model{report.params, cfg.alpha, cfg.tau, classes.classes};
  if (report_out) *report_out = std::move(report);
  return model;
}

int run_train(const TrainArgs& a) {
  TrainReport report;
  const FusionModel model = train_model(a, &report);
  save_model(model, a.out);
  TrainConfig cfg = a.config;
  cfg.beta = load_class_centroids(a.centroids).beta;
  const std::string json = report_to_json(report, cfg);
  if (!a.report.empty()) write_text(a.report, json);
  std::cout << "best epoch " << report.best_epoch << " of " << report.epochs_run()
            << ", val accuracy " << report.val_accuracy[report.best_epoch] << " ("
            << to_string(report.stop_reason) << ")\n";
  return 0;
}

struct EvalArgs {
  std::string model, images, captions, centroids, labels, out;
};

int run_eval(const EvalArgs& a) {
  const FusionModel model = load_model(a.model);
  const ClassCentroids classes = load_class_centroids(a.centroids);
  const LabeledEmbeddings data = load_labeled(a.images, a.captions, a.labels, classes.classes);
  const EvalReport report = evaluate(model.params, model.alpha, data, classes);
  write_text(a.out, eval_to_json(report));
  std::cout << "accuracy " << report.accuracy << ", macro F1 " << report.macro_f1 << " over "
            << report.n_samples << " samples\n";
  return 0;
}

int run_predict(const EvalArgs& a) {
  const FusionModel model = load_model(a.model);
  const ClassCentroids classes = load_class_centroids(a.centroids);
  const EmbeddingMatrix images = load_embedding_file(a.images);
  const EmbeddingMatrix captions = load_embedding_file(a.captions);
  if (images.ids != captions.ids) {
    fail(ErrorCode::AlignmentMismatch, "image and caption ids differ");
  }
  if (images.rows() == 0) fail(ErrorCode::TooFewSamples, a.images + " has no rows");
  const auto preds =
      predict_fused(model.params, model.alpha, images.values, captions.values, classes);
  std::string csv = "id,predicted_class,score\n";
  char score[64];
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::snprintf(score, sizeof score, "%.17g", preds[i].score);
    csv += images.ids[i] + "," + classes.classes[preds[i].index] + "," + score + "\n";
  }
  write_text(a.out, csv);
  return 0;
}

struct SearchArgs {
  std::string images, captions, centroids, out;
  SearchOptions options;
};

int run_search(SearchArgs a) {
  const ClassCentroids classes = load_class_centroids(a.centroids);
  const LabeledEmbeddings dev = load_labeled(a.images, a.captions, "", classes.classes);
  a.options.base.beta = classes.beta;
  const auto ranking = random_search(SearchSpace{}, dev, classes, a.options);
  write_text(a.out, search_to_json(ranking));
  const auto& best = ranking.front();
  std::cout << "best trial " << best.trial << ": mean val accuracy " << best.mean_accuracy
            << " +/- " << best.std_accuracy << "\n";
  return 0;
}

struct SweepArgs {
  std::string param, grid, model, pack, out;
  std::vector<std::string> images, captions;
  double beta = kDefaultBeta;
  bool retrain = false;
  TrainArgs train;
  std::string train_pack;
};

int run_sweep(SweepArgs a) {
  if (a.images.size() != a.captions.size() || a.images.empty()) {
    fail(ErrorCode::InvalidParameter, "give one --captions per --images");
  }
  const SweepParam param = parse_sweep_param(a.param);
  const auto grid = parse_grid(a.grid);

  SweepInputs in;
  in.model = load_model(a.model);
  in.pack = load_class_pack(a.pack);
  in.beta = a.beta;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const EmbeddingMatrix img = load_embedding_file(a.images[i]);
    const EmbeddingMatrix cap = load_embedding_file(a.captions[i]);
    const SampleManifest manifest = labels_for(a.images[i], "");
    if (img.ids != cap.ids || manifest.ids != img.ids) {
      fail(ErrorCode::AlignmentMismatch, a.images[i] + " and " + a.captions[i] + " differ in ids");
    }
    if (!manifest.labels) fail(ErrorCode::UnknownLabel, a.images[i] + " manifest has no labels");
    const std::string name = manifest.split ? std::string(to_string(*manifest.split))
                                            : fs::path(a.images[i]).stem().string();
    in.sets.push_back(EvalSet{name, img.values, cap.values, *manifest.labels});
  }
  if (a.retrain) {
    if (param != SweepParam::Alpha) fail(ErrorCode::InvalidParameter, "--retrain applies to alpha sweeps");
    if (a.train.images.empty() || a.train.captions.empty() || a.train.centroids.empty()) {
      fail(ErrorCode::InvalidParameter,
           "--retrain needs --train-images, --train-captions and --train-centroids");
    }
    a.train.config.tau = in.model.tau;
    in.retrain = [train_args = a.train](double alpha) {
      TrainArgs t = train_args;
      t.config.alpha = alpha;
      return train_model(t, nullptr).params;
    };
  }
  const auto rows = sweep(param, grid, in);
  write_text(a.out, sweep_to_csv(param, rows));
  std::cout << rows.size() << " sweep rows written to " << a.out << "\n";
  return 0;
}

int run_centroids(const std::string& pack_dir, double beta, std::size_t max_descriptions,
                  const std::string& out) {
  const ClassPack pack = load_class_pack(pack_dir);
  const auto limit = max_descriptions ? std::optional<std::size_t>(max_descriptions) : std::nullopt;
  const ClassCentroids c = build_class_matrix(pack, beta, limit);
  write_class_centroids(c, out);
  std::cout << c.size() << " class centroids (dim " << c.dim() << ") written to " << out << "\n";
  return 0;
}

int run_synth(const SynthParams& params, const std::string& out) {
  write_synthetic_dataset(synth_dataset(params), out);
  std::cout << "synthetic dataset written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fusion-head training and open-set evaluation over embedding files"};
  app.require_subcommand(1);

  std::vector<std::string> ingest_paths;
  std::string ingest_catalog;
  bool ingest_check = false;
  auto* ingest = app.add_subcommand("ingest", "Validate embedding files and class packs");
  ingest->add_flag("--check", ingest_check, "validate only (the default and only mode)");
  ingest->add_option("--catalog", ingest_catalog, "centroid file whose catalog labels must match");
  ingest->add_option("paths", ingest_paths, "embedding files or class-pack directories")->required();

  std::string pack_dir, centroid_out;
  double beta = kDefaultBeta;
  std::size_t max_desc = 0;
  auto* centroids = app.add_subcommand("centroids", "Build class centroids from a class pack");
  centroids->add_option("--pack", pack_dir, "class pack directory")->required();
  centroids->add_option("--beta", beta, "LLM vs template weight")->capture_default_str();
  centroids->add_option("--max-descriptions", max_desc, "use only the first m LLM rows (0 = all)");
  centroids->add_option("--out", centroid_out, "output embedding file")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the fusion head");
  train_cmd->add_option("--images", ta.images)->required();
  train_cmd->add_option("--captions", ta.captions)->required();
  train_cmd->add_option("--centroids", ta.centroids)->required();
  train_cmd->add_option("--val-images", ta.val_images, "explicit validation images");
  train_cmd->add_option("--val-captions", ta.val_captions, "explicit validation captions");
  train_cmd->add_option("--val-fraction", ta.val_fraction)->capture_default_str();
  train_cmd->add_option("--out", ta.out, "model JSON")->required();
  train_cmd->add_option("--report", ta.report, "training report JSON");
  add_train_flags(train_cmd, ta.config);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labelled split");
  eval_cmd->add_option("--model", ea.model)->required();
  eval_cmd->add_option("--images", ea.images)->required();
  eval_cmd->add_option("--captions", ea.captions)->required();
  eval_cmd->add_option("--centroids", ea.centroids)->required();
  eval_cmd->add_option("--labels", ea.labels, "manifest with labels (default: images manifest)");
  eval_cmd->add_option("--out", ea.out, "metrics JSON")->required();

  EvalArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Write per-sample predictions as CSV");
  predict_cmd->add_option("--model", pa.model)->required();
  predict_cmd->add_option("--images", pa.images)->required();
  predict_cmd->add_option("--captions", pa.captions)->required();
  predict_cmd->add_option("--centroids", pa.centroids)->required();
  predict_cmd->add_option("--out", pa.out, "predictions CSV")->required();

  SearchArgs sa;
  auto* search_cmd = app.add_subcommand("search", "Random hyperparameter search");
  search_cmd->add_option("--images", sa.images)->required();
  search_cmd->add_option("--captions", sa.captions)->required();
  search_cmd->add_option("--centroids", sa.centroids)->required();
  search_cmd->add_option("--trials", sa.options.trials)->capture_default_str();
  search_cmd->add_option("--partitions", sa.options.partitions)->capture_default_str();
  search_cmd->add_option("--val-fraction", sa.options.val_fraction)->capture_default_str();
  search_cmd->add_option("--seed", sa.options.seed)->capture_default_str();
  search_cmd->add_option("--patience", sa.options.base.patience)->capture_default_str();
  search_cmd->add_option("--threads", sa.options.threads, "0 = all cores")->capture_default_str();
  search_cmd->add_option("--out", sa.out, "ranking JSON")->required();

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sensitivity sweep over alpha, beta or m_c");
  sweep_cmd->add_option("--param", wa.param, "alpha | beta | mc")->required();
  sweep_cmd->add_option("--grid", wa.grid, "start:stop:step or v1,v2,...")->required();
  sweep_cmd->add_option("--model", wa.model)->required();
  sweep_cmd->add_option("--pack", wa.pack, "test class pack")->required();
  sweep_cmd->add_option("--images", wa.images, "one per split")->required();
  sweep_cmd->add_option("--captions", wa.captions, "one per split")->required();
  sweep_cmd->add_option("--beta", wa.beta, "beta when not sweeping it")->capture_default_str();
  sweep_cmd->add_flag("--retrain", wa.retrain, "retrain the head for every alpha");
  sweep_cmd->add_option("--train-images", wa.train.images);
  sweep_cmd->add_option("--train-captions", wa.train.captions);
  sweep_cmd->add_option("--train-centroids", wa.train.centroids);
  sweep_cmd->add_option("--val-fraction", wa.train.val_fraction)->capture_default_str();
  add_train_flags(sweep_cmd, wa.train.config);
  sweep_cmd->remove_option(sweep_cmd->get_option("--alpha"));
  sweep_cmd->remove_option(sweep_cmd->get_option("--tau"));
  sweep_cmd->add_option("--out", wa.out, "sweep CSV")->required();

  SynthParams sp;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--seed", sp.seed)->capture_default_str();
  synth_cmd->add_option("--classes", sp.classes)->capture_default_str();
  synth_cmd->add_option("--per-class", sp.per_class)->capture_default_str();
  synth_cmd->add_option("--dim", sp.dim)->capture_default_str();
  synth_cmd->add_option("--shift", sp.shift)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return run_ingest(ingest_paths, ingest_catalog);
    if (*centroids) return run_centroids(pack_dir, beta, max_desc, centroid_out);
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_eval(ea);
    if (*predict_cmd) return run_predict(pa);
    if (*search_cmd) return run_search(sa);
    if (*sweep_cmd) return run_sweep(wa);
    if (*synth_cmd) return run_synth(sp, synth_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_io() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

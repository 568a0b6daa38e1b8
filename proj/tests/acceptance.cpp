// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "wilding/embedding_store.hpp"
#include "wilding/error.hpp"
#include "wilding/evaluator.hpp"
#include "wilding/objective.hpp"
#include "wilding/similarity.hpp"
#include "wilding/text_head.hpp"
#include "wilding/trainer.hpp"

using namespace wilding;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Scratch {
  fs::path path;
  Scratch() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("wilding_acceptance_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Prepared {
  SyntheticDataset data;
  ClassCentroids classes;
  LabeledEmbeddings dev;
  LabeledEmbeddings test;
};

Prepared prepare(const SynthParams& p) {
  Prepared out{synth_dataset(p), {}, {}, {}};
  out.classes = build_class_matrix(out.data.pack, 1.0);
  out.dev = align_labeled(out.data.train.images, out.data.train.captions, out.data.train.manifest,
                          out.classes.classes);
  out.test = align_labeled(out.data.test.images, out.data.test.captions, out.data.test.manifest,
                           out.classes.classes);
  return out;
}

TrainConfig synthetic_config() {
  TrainConfig c;
  c.batch_size = 32;
  c.epochs = 50;
  return c;
}

Outcome gradient_correctness() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t checked = 0, skipped = 0, entries = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; checked < 200; ++seed) {
    const auto r = gradcheck::check(gradcheck::make_instance(seed));
    if (r.skipped) {
      ++skipped;
      continue;
    }
    ++checked;
    entries += r.entries;
    worst = std::max(worst, r.max_rel_error);
  }
  const double elapsed = seconds_since(start);
  o.require(worst < gradcheck::kTolerance, fmt("max relative error %.3g", worst));
  o.require(elapsed < 60.0, fmt("took %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("%zu instances, %zu entries, %zu skipped at kinks, max rel err %.2g, %.2f s",
                   checked, entries, skipped, worst, elapsed);
  }
  return o;
}

Outcome loss_identities() {
  Outcome o;
  double worst = 0.0;
  std::mt19937_64 gen(11);
  for (std::size_t classes : {2u, 16u, 46u}) {
    for (double value : {0.0, 0.42, -0.9, 1.0}) {
      const Matrix s(5, classes, value);
      BatchLabels labels;
      for (std::size_t i = 0; i < 5; ++i) labels.indices.push_back(gen() % classes);
      for (double tau : {1.0, 0.1, 0.001}) {
        const double err = std::abs(contrastive_loss(s, labels, tau) - std::log(static_cast<double>(classes)));
        worst = std::max(worst, err);
      }
    }
  }
  o.require(worst < 1e-9, fmt("uniform-row error %.3g", worst));

  double shift_err = 0.0, scale_err = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t batch = 1 + gen() % 8, classes = 2 + gen() % 45;
    const Matrix s = oracle::random_matrix(gen, batch, classes);
    BatchLabels labels;
    for (std::size_t i = 0; i < batch; ++i) labels.indices.push_back(gen() % classes);
    const double tau = std::uniform_real_distribution<double>(0.01, 2.0)(gen);
    const double base = contrastive_loss(s, labels, tau);

    Matrix shifted = s;
    for (std::size_t i = 0; i < batch; ++i) {
      const double c = std::uniform_real_distribution<double>(-5, 5)(gen);
      for (auto& v : shifted.row(i)) v += c;
    }
    shift_err = std::max(shift_err, std::abs(contrastive_loss(shifted, labels, tau) - base));

    Matrix scaled = s;
    for (auto& v : scaled.values()) v /= tau;
    scale_err = std::max(scale_err, std::abs(contrastive_loss(scaled, labels, 1.0) - base));
  }
  o.require(shift_err < 1e-9, fmt("shift invariance error %.3g", shift_err));
  o.require(scale_err < 1e-9, fmt("temperature scaling error %.3g", scale_err));
  if (o.pass) {
    o.detail = fmt("uniform %.2g, shift %.2g, scaling %.2g", worst, shift_err, scale_err);
  }
  return o;
}

Outcome similarity_oracles() {
  Outcome o;
  std::mt19937_64 gen(12);
  auto dims = [&] { return 1 + gen() % 16; };
  double cos_err = 0.0, fuse_err = 0.0, mean_err = 0.0, blend_err = 0.0;
  bool endpoints = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t b = dims(), c = dims(), f = dims();
    const Matrix a = oracle::random_matrix(gen, b, f), t = oracle::random_matrix(gen, c, f);
    const Matrix got = cosine_matrix(a, t), want = oracle::cosine(a, t);
    for (std::size_t k = 0; k < got.size(); ++k)
      cos_err = std::max(cos_err, std::abs(got.values()[k] - want.values()[k]));

    const Matrix w = oracle::random_matrix(gen, b, c), q = oracle::random_matrix(gen, b, c);
    const double alpha = std::uniform_real_distribution<double>(0, 1)(gen);
    const Matrix s = fuse(w, q, alpha), s_want = oracle::fuse(w, q, alpha);
    for (std::size_t k = 0; k < s.size(); ++k)
      fuse_err = std::max(fuse_err, std::abs(s.values()[k] - s_want.values()[k]));
    endpoints = endpoints && fuse(w, q, 1.0) == w && fuse(w, q, 0.0) == q;

    const Matrix rows = oracle::random_matrix(gen, b, f);
    const auto m = compute_centroid(rows), m_want = oracle::mean_rows(rows);
    for (std::size_t k = 0; k < f; ++k) mean_err = std::max(mean_err, std::abs(m[k] - m_want[k]));

    const auto m1 = oracle::random_vector(gen, f), m2 = oracle::random_vector(gen, f);
    const double beta = std::uniform_real_distribution<double>(0, 1)(gen);
    const auto bl = blend(m1, m2, beta), bl_want = oracle::blend(m1, m2, beta);
    for (std::size_t k = 0; k < f; ++k) blend_err = std::max(blend_err, std::abs(bl[k] - bl_want[k]));
  }
  o.require(cos_err < 1e-12, fmt("cosine error %.3g", cos_err));
  o.require(fuse_err < 1e-12, fmt("fuse error %.3g", fuse_err));
  o.require(mean_err < 1e-12, fmt("centroid error %.3g", mean_err));
  o.require(blend_err < 1e-12, fmt("blend error %.3g", blend_err));
  o.require(endpoints, "fuse endpoints are not bitwise W / Q");
  if (o.pass) {
    o.detail = fmt("1000 instances each; cosine %.2g, fuse %.2g, centroid %.2g, blend %.2g; endpoints exact",
                   cos_err, fuse_err, mean_err, blend_err);
  }
  return o;
}

Outcome ablation_endpoints() {
  Outcome o;
  std::mt19937_64 gen(13);
  std::size_t datasets = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = prepare({seed, 2 + seed % 5, 20, 8 + seed, 0.1 * static_cast<double>(seed)});
    const auto params = oracle::random_params(gen, p.dev.images.cols(), 6, 0.3);
    for (const auto* set : {&p.dev, &p.test}) {
      const auto w = predict(cosine_matrix(set->images, p.classes.centroids));
      const auto q = predict(cosine_matrix(forward(params, set->captions), p.classes.centroids));
      std::vector<std::size_t> at1, at0;
      for (const auto& r : predict_fused(params, 1.0, set->images, set->captions, p.classes))
        at1.push_back(r.index);
      for (const auto& r : predict_fused(params, 0.0, set->images, set->captions, p.classes))
        at0.push_back(r.index);
      o.require(at1 == w, fmt("alpha = 1 differs from image-only argmax (seed %llu)",
                              static_cast<unsigned long long>(seed)));
      o.require(at0 == q, fmt("alpha = 0 differs from caption-only argmax (seed %llu)",
                              static_cast<unsigned long long>(seed)));
      ++datasets;
    }
  }
  if (o.pass) o.detail = fmt("%zu datasets, prediction vectors identical at both endpoints", datasets);
  return o;
}

Outcome synthetic_learning() {
  Outcome o;
  const auto start = Clock::now();
  const TrainConfig config = synthetic_config();

  const auto clean = prepare({0, 4, 50, 16, 0.0});
  const Partition part = monte_carlo_partition(clean.dev.size(), 0, kDefaultValFraction);
  const TrainReport r = train(clean.dev.subset(part.train), clean.dev.subset(part.val), clean.classes, config);
  const double val = r.val_accuracy[r.best_epoch];
  o.require(val >= 0.95, fmt("validation accuracy %.3f at shift 0", val));

  std::string shifted_detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto shifted = prepare({seed, 4, 50, 16, 0.5});
    const Partition sp = monte_carlo_partition(shifted.dev.size(), seed, kDefaultValFraction);
    TrainConfig c = config;
    c.seed = seed;
    const TrainReport sr =
        train(shifted.dev.subset(sp.train), shifted.dev.subset(sp.val), shifted.classes, c);
    const double fused = evaluate(sr.params, c.alpha, shifted.test, shifted.classes).accuracy;
    const double image_only = evaluate(sr.params, 1.0, shifted.test, shifted.classes).accuracy;
    o.require(fused >= image_only, fmt("shift 0.5 seed %llu: fused %.3f < image-only %.3f",
                                       static_cast<unsigned long long>(seed), fused, image_only));
    shifted_detail += fmt(" %.3f/%.3f", fused, image_only);
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 120.0, fmt("took %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("val %.3f after %zu epochs; shift 0.5 fused/image-only:", val, r.epochs_run()) +
               shifted_detail + fmt("; %.2f s", elapsed);
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  Scratch scratch;
  const auto p = prepare({21, 4, 50, 16, 0.3});
  const Partition part = monte_carlo_partition(p.dev.size(), 21, kDefaultValFraction);
  TrainConfig c = synthetic_config();
  c.seed = 21;
  std::vector<std::string> reports;
  std::vector<std::vector<std::uint8_t>> models;
  for (int run = 0; run < 2; ++run) {
    const TrainReport r = train(p.dev.subset(part.train), p.dev.subset(part.val), p.classes, c);
    reports.push_back(report_to_json(r, c));
    const fs::path file = scratch.path / ("model" + std::to_string(run) + ".json");
    save_model(FusionModel{r.params, c.alpha, c.tau, p.classes.classes}, file);
    models.push_back(slurp(file));
  }
  o.require(reports[0] == reports[1], "training reports differ");
  o.require(!models[0].empty() && models[0] == models[1], "model files differ");

  SearchOptions opt;
  opt.trials = 6;
  opt.partitions = 2;
  opt.seed = 21;
  opt.threads = 1;
  const auto a = search_to_json(random_search(SearchSpace{}, p.dev, p.classes, opt));
  opt.threads = 4;
  const auto b = search_to_json(random_search(SearchSpace{}, p.dev, p.classes, opt));
  o.require(a == b, "search rankings differ");
  if (o.pass) {
    o.detail = fmt("report %zu B, model %zu B, ranking %zu B identical across runs and thread counts",
                   reports[0].size(), models[0].size(), a.size());
  }
  return o;
}

Outcome search_protocol() {
  Outcome o;
  const auto start = Clock::now();
  const auto p = prepare({31, 4, 50, 16, 0.0});
  SearchOptions opt;
  opt.trials = 30;
  opt.partitions = 3;
  opt.seed = 31;
  const SearchSpace space;
  const auto first = random_search(space, p.dev, p.classes, opt);
  const double elapsed = seconds_since(start);
  const auto second = random_search(space, p.dev, p.classes, opt);

  o.require(first.size() == 30, fmt("%zu trials reported", first.size()));
  for (const auto& r : first) {
    o.require(space.contains(r.config), fmt("trial %zu sampled outside the search space", r.trial));
    o.require(r.partition_accuracy.size() == 3, fmt("trial %zu has %zu partitions", r.trial,
                                                    r.partition_accuracy.size()));
  }
  o.require(search_to_json(first) == search_to_json(second), "ranking not reproducible");
  opt.seed = 32;
  const auto other = random_search(space, p.dev, p.classes, opt);
  o.require(search_to_json(other) != search_to_json(first), "a different seed gave the same ranking");
  o.require(elapsed < 1800.0, fmt("took %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("30 trials x 3 partitions in %.2f s; best mean %.3f (trial %zu)", elapsed,
                   first.front().mean_accuracy, first.front().trial);
  }
  return o;
}

Outcome format() {
  Outcome o;
  Scratch scratch;
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const std::size_t rows = gen() % 10, cols = 1 + gen() % 20;
    Matrix m(rows, cols);
    for (auto& v : m.values()) {
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(gen()));
      } while (!std::isfinite(f));
      v = f;
    }
    const fs::path a = scratch.path / "a.wing", b = scratch.path / "b.wing";
    write_embedding_file(EmbeddingMatrix::with_index_ids(m), a);
    const auto loaded = load_embedding_file(a);
    o.require(loaded.values == m, fmt("values changed in round trip %d", trial));
    write_embedding_file(loaded, b);
    o.require(slurp(a) == slurp(b), fmt("bytes changed in round trip %d", trial));
    fs::remove(manifest_path(a));
    fs::remove(manifest_path(b));
  }

  const auto good = encode_embedding_bytes(Matrix(3, 4, 0.25));
  auto put_u64 = [](std::vector<std::uint8_t>& bytes, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  struct Case {
    const char* name;
    std::function<void(std::vector<std::uint8_t>&)> edit;
    ErrorCode expected;
  };
  const std::vector<Case> cases{
      {"magic", [](auto& b) { b[1] = 'X'; }, ErrorCode::BadMagic},
      {"version", [](auto& b) { b[4] = 7; }, ErrorCode::VersionUnsupported},
      {"flags", [](auto& b) { b[7] = 1; }, ErrorCode::BadFlags},
      {"N too large", [&](auto& b) { put_u64(b, 8, 9); }, ErrorCode::TruncatedFile},
      {"N too small", [&](auto& b) { put_u64(b, 8, 1); }, ErrorCode::TrailingBytes},
      {"F zero", [&](auto& b) { put_u64(b, 16, 0); }, ErrorCode::InvalidDimension},
      {"F too large", [&](auto& b) { put_u64(b, 16, 5); }, ErrorCode::TruncatedFile},
      {"header cut", [](auto& b) { b.resize(20); }, ErrorCode::TruncatedFile},
      {"NaN payload", [](auto& b) { b[27] = 0x7f; b[26] = 0xc0; }, ErrorCode::NonFiniteValue},
  };
  std::size_t rejected = 0;
  for (const auto& c : cases) {
    auto bytes = good;
    c.edit(bytes);
    try {
      decode_embedding_bytes(bytes);
      o.require(false, fmt("%s accepted", c.name));
    } catch (const Error& e) {
      o.require(e.code() == c.expected,
                fmt("%s gave %s", c.name, std::string(to_string(e.code())).c_str()));
      rejected += e.code() == c.expected;
    }
  }
  if (o.pass) o.detail = fmt("1000 file round trips bitwise; %zu corrupt cases rejected", rejected);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"loss identities", loss_identities},
      {"similarity oracles", similarity_oracles},
      {"ablation endpoints", ablation_endpoints},
      {"synthetic learning", synthetic_learning},
      {"determinism", determinism},
      {"search protocol", search_protocol},
      {"format", format},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

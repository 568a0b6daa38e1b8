#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wilding/embedding_store.hpp"
#include "wilding/fusion_head.hpp"
#include "wilding/text_head.hpp"
#include "wilding/trainer.hpp"

namespace wilding {

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : n_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                  std::size_t classes);

  std::size_t classes() const noexcept { return n_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  std::size_t row_sum(std::size_t truth) const noexcept;
  std::size_t col_sum(std::size_t predicted) const noexcept;
  /// Classes with at least one ground-truth sample.
  std::vector<std::size_t> present() const;

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion{0};
  std::size_t n_samples = 0;
};

/// F1_c = 2PR / (P + R), 0 when P + R = 0, averaged over `present`.
double macro_f1(const ConfusionMatrix& confusion, std::span<const std::size_t> present);

EvalReport report_from_predictions(std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted,
                                   std::span<const std::string> class_names);

struct Prediction {
  std::size_t index = 0;
  double score = 0.0;  // fused similarity of the chosen class
};

/// Open-set prediction: only the order of `classes` defines indices; the
/// training catalog is never consulted.
std::vector<Prediction> predict_fused(const FusionHeadParams& params, double alpha,
                                      const Matrix& images, const Matrix& captions,
                                      const ClassCentroids& classes);

EvalReport evaluate(const FusionHeadParams& params, double alpha, const LabeledEmbeddings& data,
                    const ClassCentroids& classes);

std::string eval_to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Sensitivity sweeps

enum class SweepParam { Alpha, Beta, DescriptionCount };

SweepParam parse_sweep_param(std::string_view name);
std::string_view to_string(SweepParam param) noexcept;

/// "a:b:step" -> a, a + step, ... up to b inclusive (within 1e-9 of b).
std::vector<double> parse_grid(std::string_view text);

/// Test split with labels kept as names so that every re-built catalog can
/// map them afresh.
struct EvalSet {
  std::string name;
  Matrix images;
  Matrix captions;
  std::vector<std::string> labels;
};

struct SweepRow {
  double value = 0.0;
  std::string split;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct SweepInputs {
  FusionModel model;
  ClassPack pack;            // test catalog source
  double beta = kDefaultBeta;  // used when not sweeping beta
  std::vector<EvalSet> sets;
  /// Alpha sweeps only: when set, called once per grid value to produce a
  /// freshly trained head instead of reusing `model.params`.
  std::function<FusionHeadParams(double alpha)> retrain;
};

std::vector<SweepRow> sweep(SweepParam param, std::span<const double> grid,
                            const SweepInputs& inputs);

std::string sweep_to_csv(SweepParam param, std::span<const SweepRow> rows);

}  // namespace wilding

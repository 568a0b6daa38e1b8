#include "wilding/evaluator.hpp"

#include "json.hpp"
#include "wilding/error.hpp"
#include "wilding/similarity.hpp"

namespace wilding {

ConfusionMatrix::ConfusionMatrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted, std::size_t classes)
    : ConfusionMatrix(classes) {
  if (truth.size() != predicted.size()) {
    fail(ErrorCode::ShapeMismatch, "truth and prediction counts differ");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) {
      fail(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i) + " outside the catalog");
    }
    ++at(truth[i], predicted[i]);
  }
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += at(i, i);
  return s;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const noexcept {
  std::size_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += at(truth, j);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const noexcept {
  std::size_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += at(i, predicted);
  return s;
}

std::vector<std::size_t> ConfusionMatrix::present() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_sum(i) > 0) out.push_back(i);
  }
  return out;
}

namespace {

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  ClassMetrics m;
  const double tp = static_cast<double>(cm.at(c, c));
  const auto predicted = cm.col_sum(c);
  m.support = cm.row_sum(c);
  m.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
  m.recall = m.support ? tp / static_cast<double>(m.support) : 0.0;
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

}  // namespace

double macro_f1(const ConfusionMatrix& confusion, std::span<const std::size_t> present) {
  if (present.empty()) fail(ErrorCode::EmptyPresentSet, "macro F1 over no classes");
  double sum = 0.0;
  for (auto c : present) {
    if (c >= confusion.classes()) {
      fail(ErrorCode::LabelOutOfRange, "present class " + std::to_string(c) + " outside matrix");
    }
    sum += class_metrics(confusion, c).f1;
  }
  return sum / static_cast<double>(present.size());
}

EvalReport report_from_predictions(std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted,
                                   std::span<const std::string> class_names) {
  if (truth.empty()) fail(ErrorCode::TooFewSamples, "evaluation set is empty");
  EvalReport r;
  r.confusion = ConfusionMatrix(truth, predicted, class_names.size());
  r.n_samples = truth.size();
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.n_samples);
  r.macro_f1 = macro_f1(r.confusion, r.confusion.present());
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    r.per_class.push_back(class_metrics(r.confusion, c));
    r.per_class.back().name = class_names[c];
  }
  return r;
}

std::vector<Prediction> predict_fused(const FusionHeadParams& params, double alpha,
                                      const Matrix& images, const Matrix& captions,
                                      const ClassCentroids& classes) {
  if (images.rows() != captions.rows()) {
    fail(ErrorCode::AlignmentMismatch, std::to_string(images.rows()) + " images vs " +
                                           std::to_string(captions.rows()) + " captions");
  }
  const auto sims = similarities(images, forward(params, captions), classes.centroids, alpha);
  const auto best = predict(sims.fused);
  std::vector<Prediction> out(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) out[i] = {best[i], sims.fused(i, best[i])};
  return out;
}

EvalReport evaluate(const FusionHeadParams& params, double alpha, const LabeledEmbeddings& data,
                    const ClassCentroids& classes) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= classes.size()) {
      fail(ErrorCode::UnknownLabel, "row " + std::to_string(i) + " label outside test catalog");
    }
  }
  const auto preds = predict_fused(params, alpha, data.images, data.captions, classes);
  std::vector<std::size_t> predicted(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) predicted[i] = preds[i].index;
  return report_from_predictions(data.labels, predicted, classes.classes);
}

std::string eval_to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : report.per_class) {
    per_class.push_back({{"class", m.name},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t i = 0; i < report.confusion.classes(); ++i) {
    std::vector<std::size_t> row;
    for (std::size_t j = 0; j < report.confusion.classes(); ++j) row.push_back(report.confusion.at(i, j));
    confusion.push_back(row);
  }
  nlohmann::json doc{{"accuracy", report.accuracy},
                     {"macro_f1", report.macro_f1},
                     {"n_samples", report.n_samples},
                     {"per_class", per_class},
                     {"confusion", confusion}};
  return doc.dump(2) + "\n";
}

}  // namespace wilding

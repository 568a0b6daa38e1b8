#include <charconv>
#include <cmath>
#include <cstdio>

#include "wilding/error.hpp"
#include "wilding/evaluator.hpp"

namespace wilding {

namespace {

double parse_number(std::string_view text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
    fail(ErrorCode::InvalidParameter, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = text.find(sep, start);
    parts.push_back(text.substr(start, at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return parts;
}

LabeledEmbeddings bind(const EvalSet& set, const ClassCentroids& classes) {
  LabeledEmbeddings out{set.images, set.captions, {}};
  for (const auto& label : set.labels) out.labels.push_back(classes.index_of(label));
  return out;
}

}  // namespace

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "alpha") return SweepParam::Alpha;
  if (name == "beta") return SweepParam::Beta;
  if (name == "mc" || name == "m_c") return SweepParam::DescriptionCount;
  fail(ErrorCode::InvalidParameter, "unknown sweep parameter '" + std::string(name) + "'");
}

std::string_view to_string(SweepParam param) noexcept {
  switch (param) {
    case SweepParam::Alpha: return "alpha";
    case SweepParam::Beta: return "beta";
    case SweepParam::DescriptionCount: return "m_c";
  }
  return "alpha";
}

std::vector<double> parse_grid(std::string_view text) {
  if (text.find(':') == std::string_view::npos) {
    std::vector<double> values;
    for (auto part : split(text, ',')) values.push_back(parse_number(part));
    return values;
  }
  const auto parts = split(text, ':');
  if (parts.size() != 3) fail(ErrorCode::InvalidParameter, "grid must be 'start:stop:step'");
  const double start = parse_number(parts[0]);
  const double stop = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  if (!(step > 0.0)) fail(ErrorCode::InvalidParameter, "grid step must be > 0");
  if (stop < start) fail(ErrorCode::InvalidParameter, "grid stop is below start");
  std::vector<double> values;
  for (std::size_t k = 0;; ++k) {
    const double v = start + static_cast<double>(k) * step;
    if (v > stop + 1e-9) break;
    values.push_back(std::min(v, stop));
  }
  return values;
}

std::vector<SweepRow> sweep(SweepParam param, std::span<const double> grid,
                            const SweepInputs& inputs) {
  if (grid.empty()) fail(ErrorCode::InvalidParameter, "empty sweep grid");
  // Range checks happen before any work so a bad grid fails fast.
  for (double v : grid) {
    switch (param) {
      case SweepParam::Alpha:
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::AlphaOutOfRange, "alpha " + std::to_string(v));
        break;
      case SweepParam::Beta:
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::BetaOutOfRange, "beta " + std::to_string(v));
        break;
      case SweepParam::DescriptionCount:
        if (!(v >= 1.0) || v != std::floor(v)) {
          fail(ErrorCode::InvalidParameter, "description count must be a positive integer");
        }
        break;
    }
  }

  std::vector<SweepRow> rows;
  const ClassCentroids base = build_class_matrix(inputs.pack, inputs.beta);
  for (double v : grid) {
    double alpha = inputs.model.alpha;
    const FusionHeadParams* params = &inputs.model.params;
    FusionHeadParams retrained;
    ClassCentroids rebuilt;
    const ClassCentroids* classes = &base;
    switch (param) {
      case SweepParam::Alpha:
        alpha = v;
        if (inputs.retrain) {
          retrained = inputs.retrain(v);
          params = &retrained;
        }
        break;
      case SweepParam::Beta:
        rebuilt = build_class_matrix(inputs.pack, v);
        classes = &rebuilt;
        break;
      case SweepParam::DescriptionCount:
        rebuilt = build_class_matrix(inputs.pack, inputs.beta, static_cast<std::size_t>(v));
        classes = &rebuilt;
        break;
    }
    for (const auto& set : inputs.sets) {
      const EvalReport r = evaluate(*params, alpha, bind(set, *classes), *classes);
      rows.push_back({v, set.name, r.accuracy, r.macro_f1});
    }
  }
  return rows;
}

std::string sweep_to_csv(SweepParam param, std::span<const SweepRow> rows) {
  std::string out = std::string(to_string(param)) + ",split,accuracy,macro_f1\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.10g,%s,%.17g,%.17g\n", r.value, r.split.c_str(),
                  r.accuracy, r.macro_f1);
    out += line;
  }
  return out;
}

}  // namespace wilding

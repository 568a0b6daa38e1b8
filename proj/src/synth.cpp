#include <cmath>
#include <numbers>
#include <string>

#include "wilding/embedding_store.hpp"
#include "wilding/error.hpp"
#include "wilding/rng.hpp"

// Generative model
//
//   anchor a_c      Gaussian, Gram-Schmidt orthonormalized while classes <= dim
//   clean image x   normalize(a_c + kImageNoise * g / sqrt(dim))
//   test image      normalize(R(x) + shift * d): R rotates one random plane by
//                   shift * pi/2, d is a random unit "background" direction
//   caption         x + kCaptionNoise * g / sqrt(dim), taken from the clean
//                   image so captions describe the animal, not the scene
//   LLM rows        a_c + kDescriptionNoise * g / sqrt(dim)
//   template rows   a_c + kTemplateBias * b + kDescriptionNoise * g / sqrt(dim)
//                   with b a shared unit vector (generic prompt context)

namespace wilding {

namespace {

constexpr double kImageNoise = 0.8;
constexpr double kCaptionNoise = 0.8;
constexpr double kDescriptionNoise = 0.3;
constexpr double kTemplateBias = 0.5;
constexpr std::size_t kDescriptionsPerClass = 8;
constexpr std::size_t kTemplatesPerClass = 20;

using Vec = std::vector<double>;

Vec gaussian(Rng& rng, std::size_t dim, double scale) {
  Vec v(dim);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

void normalize(Vec& v) {
  const double n = norm(v);
  if (n > 0.0) {
    for (auto& x : v) x /= n;
  }
}

Vec unit(Rng& rng, std::size_t dim) {
  Vec v = gaussian(rng, dim, 1.0);
  normalize(v);
  return v;
}

std::vector<Vec> make_anchors(Rng& rng, std::size_t classes, std::size_t dim) {
  std::vector<Vec> anchors;
  for (std::size_t c = 0; c < classes; ++c) {
    Vec v = gaussian(rng, dim, 1.0);
    if (classes <= dim) {
      for (const auto& prev : anchors) {
        const double p = dot(v, prev);
        for (std::size_t k = 0; k < dim; ++k) v[k] -= p * prev[k];
      }
    }
    normalize(v);
    anchors.push_back(std::move(v));
  }
  return anchors;
}

Vec noisy(Rng& rng, const Vec& center, double sigma) {
  const double scale = sigma / std::sqrt(static_cast<double>(center.size()));
  Vec v = center;
  for (auto& x : v) x += scale * rng.normal();
  return v;
}

struct Shift {
  Vec u, v, direction;
  double angle = 0.0;
  double amount = 0.0;

  Vec apply(const Vec& x) const {
    Vec y = x;
    if (amount != 0.0) {
      const double pu = dot(x, u), pv = dot(x, v);
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] += (c * pu - s * pv - pu) * u[k] + (s * pu + c * pv - pv) * v[k];
        y[k] += amount * direction[k];
      }
      normalize(y);
    }
    return y;
  }
};

LabeledSplit make_split(Rng& rng, const std::vector<Vec>& anchors, std::size_t per_class,
                        const Shift& shift, Split split) {
  const std::size_t dim = anchors.front().size();
  const std::size_t n = anchors.size() * per_class;
  Matrix images(n, dim), captions(n, dim);
  SampleManifest manifest;
  manifest.labels.emplace();
  manifest.split = split;
  std::size_t row = 0;
  for (std::size_t c = 0; c < anchors.size(); ++c) {
    for (std::size_t k = 0; k < per_class; ++k, ++row) {
      Vec clean = noisy(rng, anchors[c], kImageNoise);
      normalize(clean);
      Vec caption = noisy(rng, clean, kCaptionNoise);
      Vec image = shift.apply(clean);
      std::copy(image.begin(), image.end(), images.row(row).begin());
      std::copy(caption.begin(), caption.end(), captions.row(row).begin());
      manifest.ids.push_back(std::string(to_string(split)) + "/" + std::to_string(c) + "/" +
                             std::to_string(k));
      manifest.labels->push_back("class_" + std::to_string(c));
    }
  }
  LabeledSplit out;
  out.images = EmbeddingMatrix{std::move(images), manifest.ids};
  out.captions = EmbeddingMatrix{std::move(captions), manifest.ids};
  out.manifest = std::move(manifest);
  return out;
}

EmbeddingMatrix description_rows(Rng& rng, const Vec& center, std::size_t count,
                                 const std::string& prefix) {
  Matrix m(count, center.size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < count; ++i) {
    Vec v = noisy(rng, center, kDescriptionNoise);
    std::copy(v.begin(), v.end(), m.row(i).begin());
    ids.push_back(prefix + std::to_string(i));
  }
  return EmbeddingMatrix{std::move(m), std::move(ids)};
}

}  // namespace

SyntheticDataset synth_dataset(const SynthParams& params) {
  if (params.classes < 1 || params.per_class < 1) {
    fail(ErrorCode::InvalidParameter, "classes and per-class counts must be >= 1");
  }
  if (params.dim < 2) fail(ErrorCode::InvalidParameter, "dim must be >= 2");
  if (!std::isfinite(params.shift)) fail(ErrorCode::InvalidParameter, "shift must be finite");

  Rng rng(derive_seed(params.seed, Stream::Synth));
  const auto anchors = make_anchors(rng, params.classes, params.dim);

  Shift shift;
  shift.u = unit(rng, params.dim);
  shift.v = gaussian(rng, params.dim, 1.0);
  const double p = dot(shift.v, shift.u);
  for (std::size_t k = 0; k < params.dim; ++k) shift.v[k] -= p * shift.u[k];
  normalize(shift.v);
  shift.direction = unit(rng, params.dim);
  shift.angle = params.shift * std::numbers::pi / 2.0;
  shift.amount = params.shift;
  const Vec template_bias = unit(rng, params.dim);

  SyntheticDataset out;
  out.train = make_split(rng, anchors, params.per_class, Shift{}, Split::Train);
  out.test = make_split(rng, anchors, params.per_class, shift, Split::Test);

  for (std::size_t c = 0; c < params.classes; ++c) {
    const std::string name = "class_" + std::to_string(c);
    ClassEntry entry;
    entry.name = name;
    entry.llm = description_rows(rng, anchors[c], kDescriptionsPerClass, name + "/llm/");
    Vec biased = anchors[c];
    for (std::size_t k = 0; k < params.dim; ++k) biased[k] += kTemplateBias * template_bias[k];
    entry.templates = description_rows(rng, biased, kTemplatesPerClass, name + "/template/");
    out.pack.classes.push_back(std::move(entry));
  }
  return out;
}

void write_synthetic_dataset(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto* split : {&data.train, &data.test}) {
    const std::string name(to_string(*split->manifest.split));
    write_embedding_file(split->images, split->manifest, dir / (name + "_images.wing"));
    write_embedding_file(split->captions, split->manifest, dir / (name + "_captions.wing"));
  }
  write_class_pack(data.pack, dir / "pack");
}

}  // namespace wilding

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "json.hpp"
#include "wilding/error.hpp"
#include "wilding/rng.hpp"
#include "wilding/trainer.hpp"

namespace wilding {

namespace {

template <typename T>
bool member(const std::vector<T>& set, T value) {
  return std::any_of(set.begin(), set.end(), [&](T v) {
    if constexpr (std::is_floating_point_v<T>) {
      return std::abs(v - value) <= 1e-9 * std::max(1.0, std::abs(v));
    } else {
      return v == value;
    }
  });
}

template <typename T>
T pick(Rng& rng, const std::vector<T>& set) {
  return set[static_cast<std::size_t>(rng.below(set.size()))];
}

}  // namespace

SearchSpace::SearchSpace() {
  for (std::size_t k = 0; k <= 11; ++k) hidden_dims.push_back(253 + 60 * k);
  for (int k = 1; k <= 9; ++k) learning_rates.push_back(k / 100.0);
  for (int k = 80; k <= 98; k += 2) momenta.push_back(k / 100.0);
}

bool SearchSpace::contains(const TrainConfig& c) const {
  return member(batch_sizes, c.batch_size) && member(hidden_dims, c.hidden_dim) &&
         member(learning_rates, c.learning_rate) && member(momenta, c.momentum) &&
         c.epochs >= min_epochs && c.epochs <= max_epochs && member(taus, c.tau) &&
         member(alphas, c.alpha);
}

TrainConfig SearchSpace::sample(Rng& rng, const TrainConfig& base) const {
  TrainConfig c = base;
  c.batch_size = pick(rng, batch_sizes);
  c.hidden_dim = pick(rng, hidden_dims);
  c.learning_rate = pick(rng, learning_rates);
  c.momentum = pick(rng, momenta);
  c.epochs = min_epochs + static_cast<std::size_t>(rng.below(max_epochs - min_epochs + 1));
  c.tau = pick(rng, taus);
  c.alpha = pick(rng, alphas);
  return c;
}

std::vector<SearchResult> random_search(const SearchSpace& space, const LabeledEmbeddings& dev,
                                        const ClassCentroids& classes,
                                        const SearchOptions& options) {
  if (options.trials < 1) fail(ErrorCode::InvalidParameter, "trials must be >= 1");
  if (options.partitions < 1) fail(ErrorCode::InvalidParameter, "partitions must be >= 1");

  // Configs and partitions are fixed up front from the search seed, so the
  // worker schedule cannot influence them.
  Rng rng(derive_seed(options.seed, Stream::Search));
  std::vector<SearchResult> results(options.trials);
  for (std::size_t t = 0; t < options.trials; ++t) {
    results[t].trial = t;
    results[t].config = space.sample(rng, options.base);
    results[t].config.seed = derive_seed(options.seed, Stream::Search, t + 1);
    results[t].config.validate();
    results[t].partition_accuracy.assign(options.partitions, 0.0);
  }
  std::vector<Partition> partitions;
  for (std::size_t p = 0; p < options.partitions; ++p) {
    partitions.push_back(monte_carlo_partition(
        dev.size(), derive_seed(options.seed, Stream::Partition, p), options.val_fraction));
  }
  std::vector<LabeledEmbeddings> train_sets, val_sets;
  for (const auto& p : partitions) {
    train_sets.push_back(dev.subset(p.train));
    val_sets.push_back(dev.subset(p.val));
  }

  const std::size_t jobs = options.trials * options.partitions;
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t t = job / options.partitions, p = job % options.partitions;
      try {
        const TrainReport r = train(train_sets[p], val_sets[p], classes, results[t].config);
        results[t].partition_accuracy[p] = r.val_accuracy[r.best_epoch];
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& r : results) {
    const double n = static_cast<double>(r.partition_accuracy.size());
    double sum = 0.0;
    for (double a : r.partition_accuracy) sum += a;
    r.mean_accuracy = sum / n;
    double sq = 0.0;
    for (double a : r.partition_accuracy) sq += (a - r.mean_accuracy) * (a - r.mean_accuracy);
    r.std_accuracy = std::sqrt(sq / n);
  }
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return a.mean_accuracy > b.mean_accuracy;
  });
  return results;
}

std::string search_to_json(const std::vector<SearchResult>& ranking) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : ranking) {
    const auto& c = r.config;
    rows.push_back({{"trial", r.trial},
                    {"mean_accuracy", r.mean_accuracy},
                    {"std_accuracy", r.std_accuracy},
                    {"partition_accuracy", r.partition_accuracy},
                    {"config",
                     {{"alpha", c.alpha},
                      {"tau", c.tau},
                      {"learning_rate", c.learning_rate},
                      {"momentum", c.momentum},
                      {"batch_size", c.batch_size},
                      {"epochs", c.epochs},
                      {"patience", c.patience},
                      {"hidden_dim", c.hidden_dim},
                      {"seed", c.seed},
                      {"beta", c.beta}}}});
  }
  return nlohmann::json{{"ranking", rows}}.dump(2) + "\n";
}

}  // namespace wilding

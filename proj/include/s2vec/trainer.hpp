#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "seq2seq.hpp"
#include "tokenizer.hpp"

namespace s2vec {

enum class TrainMode { s2vec, vanilla };

inline const char* to_string(TrainMode m) { return m == TrainMode::s2vec ? "s2vec" : "vanilla"; }

struct TrainConfig {
  SamplerConfig sampler;
  double cell_size = 0.0;  // <= 0: sized for about 100 cells over the path bounding box
  int min_hits = 5;
  double noise_magnitude = 0.1;
  std::size_t d_emb = 64;
  std::size_t hidden = 128;
  double learning_rate = 0.05;
  double clip_norm = 5.0;
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::s2vec;
  bool projection_bias = true;
  std::size_t weight_top_k = 0;  // 0 keeps full proximity rows
  // Re-sample walks every epoch and stop on a 3-epoch moving average of the
  // validation loss instead of fixing walks once.
  bool resample_each_epoch = false;
  unsigned threads = 1;

  double effective_noise() const { return mode == TrainMode::vanilla ? 0.0 : noise_magnitude; }
  bool one_hot_weights() const { return mode == TrainMode::vanilla; }

  void validate() const {
    sampler.validate();
    if (min_hits < 1) throw ConfigError("min_hits must be >= 1");
    if (!(noise_magnitude >= 0.0)) throw ConfigError("noise_magnitude must be non-negative");
    if (d_emb < 1 || hidden < 1) throw ConfigError("d_emb and hidden must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw ConfigError("validation_fraction must lie in (0, 1)");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::string stop_reason;
  std::size_t degenerate_paths = 0;
  std::size_t vocab_size = 0;
  double cell_size = 0.0;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

// Raised when a loss or gradient turns non-finite; carries the report so far.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, TrainReport report) : NumericError(what), report_(std::move(report)) {}
  const TrainReport& report() const noexcept { return report_; }

 private:
  TrainReport report_;
};

// Validation-based stopping: an epoch improves when its loss beats the best by
// more than min_delta; training stops after `patience` epochs without one.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience, double min_delta = 1e-6, int smoothing = 1)
      : patience_(patience), min_delta_(min_delta), smoothing_(std::max(1, smoothing)) {}

  // Returns true when training should stop after this epoch.
  bool update(int epoch, double val_loss) {
    history_.push_back(val_loss);
    const std::size_t k = std::min<std::size_t>(history_.size(), static_cast<std::size_t>(smoothing_));
    double smoothed = 0.0;
    for (std::size_t i = history_.size() - k; i < history_.size(); ++i) smoothed += history_[i];
    smoothed /= static_cast<double>(k);
    improved_ = smoothed < best_ - min_delta_;
    if (improved_) {
      best_ = smoothed;
      best_epoch_ = epoch;
      wait_ = 0;
    } else {
      ++wait_;
    }
    return wait_ >= patience_;
  }

  bool improved() const noexcept { return improved_; }
  double best() const noexcept { return best_; }
  int best_epoch() const noexcept { return best_epoch_; }

 private:
  int patience_;
  double min_delta_;
  int smoothing_;
  std::vector<double> history_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int wait_ = 0;
  bool improved_ = false;
};

struct PairRef {
  std::size_t graph = 0;
  std::size_t walk = 0;

  friend auto operator<=>(const PairRef&, const PairRef&) = default;
};

struct SplitResult {
  std::vector<PairRef> train;
  std::vector<PairRef> validation;
};

// Holds out max(1, round(fraction * N)) pairs after a seeded shuffle. A pair is
// only taken while its graph keeps at least one training pair; if that cannot
// fill the quota (graphs with a single walk), the remaining pairs are taken in
// shuffled order.
inline SplitResult split_train_validation(const std::vector<PairRef>& pairs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  if (pairs.size() < 2) throw ConfigError("need at least 2 sequence pairs to hold out a validation set");
  const std::size_t n = pairs.size();
  const std::size_t want = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = substream(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  std::unordered_map<std::size_t, std::size_t> remaining;
  for (const auto& p : pairs) ++remaining[p.graph];
  std::vector<char> held(n, 0);
  std::size_t taken = 0;
  for (std::size_t i : order) {
    if (taken == want) break;
    if (remaining[pairs[i].graph] > 1) {
      held[i] = 1;
      --remaining[pairs[i].graph];
      ++taken;
    }
  }
  for (std::size_t i : order) {
    if (taken == want) break;
    if (!held[i]) held[i] = 1, ++taken;
  }
  SplitResult out;
  for (std::size_t i = 0; i < n; ++i) (held[i] ? out.validation : out.train).push_back(pairs[i]);
  return out;
}

struct TrainResult {
  ModelParams params;
  Vocabulary vocab;
  TrainReport report;
  std::vector<std::vector<Path>> paths;  // clean walks per graph
};

namespace detail {

inline std::vector<std::vector<Path>> sample_all(const GraphDataset& ds, const SamplerConfig& cfg, unsigned threads) {
  std::vector<std::vector<Path>> out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t g) { out[g] = sample_path_set(ds.graphs[g], cfg, ds.ids[g]); });
  return out;
}

using SequenceTable = std::vector<std::vector<TokenSequence>>;

inline SequenceTable tokenize_all(const std::vector<std::vector<Path>>& paths, const Vocabulary& v) {
  SequenceTable out(paths.size());
  for (std::size_t g = 0; g < paths.size(); ++g)
    for (const auto& p : paths[g]) out[g].push_back(tokenize_path(p, v));
  return out;
}

// Corrupts each graph once with stream (seed, label, graph index) and replays
// the clean walks on the displaced coordinates.
inline SequenceTable corrupted_sequences(const GraphDataset& ds, const std::vector<std::vector<Path>>& paths,
                                         const Vocabulary& v, double noise, std::uint64_t seed,
                                         const std::string& label, unsigned threads) {
  SequenceTable out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t g) {
    Rng rng = substream(seed, label, g);
    const SpatialGraph noisy = corrupt_graph(ds.graphs[g], noise, rng);
    for (const auto& p : paths[g]) out[g].push_back(tokenize_path(replay_path(p, noisy), v));
  });
  return out;
}

inline std::vector<PairRef> all_pairs(const std::vector<std::vector<Path>>& paths) {
  std::vector<PairRef> out;
  for (std::size_t g = 0; g < paths.size(); ++g)
    for (std::size_t w = 0; w < paths[g].size(); ++w) out.push_back({g, w});
  return out;
}

inline std::vector<SequencePair> make_pairs(const std::vector<PairRef>& refs, const SequenceTable& corrupted,
                                            const SequenceTable& clean) {
  std::vector<SequencePair> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back({&corrupted[r.graph][r.walk], &clean[r.graph][r.walk]});
  return out;
}

}  // namespace detail

// Denoising training loop. Walks are sampled once (unless resample_each_epoch)
// and the vocabulary is built from them; every epoch re-draws corruption
// noise, optimizes with mini-batch SGD, and scores the held-out pairs against
// a validation corruption that is identical across epochs. Returns the
// parameters of the best validation epoch.
inline TrainResult train(const GraphDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.size() == 0) throw DataError("cannot train on an empty dataset");

  TrainResult result;
  auto& report = result.report;
  result.paths = detail::sample_all(ds, cfg.sampler, cfg.threads);
  std::vector<Path> flat;
  for (const auto& ps : result.paths)
    for (const auto& p : ps) {
      flat.push_back(p);
      if (p.degenerate) ++report.degenerate_paths;
    }
  const double cell_size = cfg.cell_size > 0.0 ? cfg.cell_size : auto_cell_size(flat);
  result.vocab = build_vocabulary(flat, cell_size, cfg.min_hits);
  report.vocab_size = result.vocab.size();
  report.cell_size = cell_size;

  const ProximityWeights weights(result.vocab, cfg.one_hot_weights(), cfg.weight_top_k);
  ModelShape shape{result.vocab.size(), cfg.d_emb, cfg.hidden, cfg.projection_bias};
  ModelParams params = init_params(shape, cfg.seed);
  ModelParams best = params;
  ModelParams grads = params.zeros_like();
  const double noise = cfg.effective_noise();

  auto paths = result.paths;
  auto clean = detail::tokenize_all(paths, result.vocab);
  auto split = split_train_validation(detail::all_pairs(paths), cfg.validation_fraction, cfg.seed);
  auto val_corrupted =
      detail::corrupted_sequences(ds, paths, result.vocab, noise, cfg.seed, "corrupt-validation", cfg.threads);

  EarlyStopping stopper(cfg.patience, 1e-6, cfg.resample_each_epoch ? 3 : 1);
  report.stop_reason = "max_epochs";
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (cfg.resample_each_epoch && epoch > 1) {
      SamplerConfig sc = cfg.sampler;
      sc.seed = mix_seed(cfg.sampler.seed, static_cast<std::uint64_t>(epoch));
      paths = detail::sample_all(ds, sc, cfg.threads);
      clean = detail::tokenize_all(paths, result.vocab);
      split = split_train_validation(detail::all_pairs(paths), cfg.validation_fraction,
                                     mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
      val_corrupted =
          detail::corrupted_sequences(ds, paths, result.vocab, noise, cfg.seed, "corrupt-validation", cfg.threads);
    }
    const auto corrupted = detail::corrupted_sequences(ds, paths, result.vocab, noise,
                                                       mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)),
                                                       "corrupt-train", cfg.threads);
    auto order = split.train;
    Rng shuffle_rng = substream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const auto train_pairs = detail::make_pairs(order, corrupted, clean);

    double train_total = 0.0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < train_pairs.size(); start += bs) {
      std::span<const SequencePair> batch(train_pairs.data() + start, std::min(bs, train_pairs.size() - start));
      const double loss = batch_loss(params, batch, weights, &grads, cfg.threads);
      if (!std::isfinite(loss)) throw TrainingError("non-finite training loss", report);
      train_total += loss * static_cast<double>(batch.size());
      try {
        sgd_step_inplace(params, grads, cfg.learning_rate, cfg.clip_norm);
      } catch (const NumericError& e) {
        throw TrainingError(e.what(), report);
      }
    }
    const auto val_pairs = detail::make_pairs(split.validation, val_corrupted, clean);
    const double val = batch_loss(params, val_pairs, weights, nullptr, cfg.threads);
    if (!std::isfinite(val)) throw TrainingError("non-finite validation loss", report);

    report.epochs.push_back({epoch, train_total / static_cast<double>(train_pairs.size()), val});
    const bool stop = stopper.update(epoch, val);
    if (stopper.improved()) {
      best = params;
      report.best_epoch = epoch;
      report.best_val_loss = val;
    }
    if (stop) {
      report.stop_reason = "patience";
      break;
    }
  }
  result.params = std::move(best);
  return result;
}

inline std::string write_training_log(const TrainReport& r) {
  std::string out = "epoch\ttrain_loss\tval_loss\n";
  for (const auto& e : r.epochs)
    out += std::to_string(e.epoch) + "\t" + io::format_exact(e.train_loss) + "\t" + io::format_exact(e.val_loss) + "\n";
  return out;
}

}  // namespace s2vec

#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cluster.hpp"
#include "embedder.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "trainer.hpp"

namespace s2vec {

// Shared settings of every pipeline stage. The flat key=value form is the
// config file format; keys are listed in PipelineConfig::keys().
struct PipelineConfig {
  SyntheticConfig synthetic;
  TrainConfig train;
  LatentKind latent = LatentKind::hidden;
  // DBSCAN: eps <= 0 selects the eps_percentile-th percentile of each matrix.
  double eps = 0.0;
  double eps_percentile = 15.0;
  int min_pts = 3;
  std::size_t pca_components = 0;  // 0: min(hidden, rows, cols)
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void set_seed(std::uint64_t s) {
    seed = s;
    synthetic.seed = s;
    train.seed = s;
    train.sampler.seed = s;
  }

  void set_threads(unsigned t) {
    threads = std::max(1u, t);
    train.threads = threads;
  }

  DbscanParams dbscan_for(const DistanceMatrix& d) const {
    DbscanParams p;
    p.eps = eps > 0.0 ? eps : auto_eps(d, eps_percentile);
    p.min_pts = min_pts;
    return p;
  }

  void set(std::string_view key, std::string_view value);
  std::string to_text() const;
  static std::vector<std::string> keys();
};

namespace detail {

template <class T>
T parse_value(std::string_view key, std::string_view v) {
  T out{};
  bool ok = false;
  if constexpr (std::is_same_v<T, double>) {
    ok = io::parse_double(v, out) && std::isfinite(out);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (v == "true" || v == "1") out = true, ok = true;
    else if (v == "false" || v == "0") out = false, ok = true;
  } else {
    ok = io::parse_int(v, out);
  }
  if (!ok) throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return out;
}

struct ConfigField {
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

inline std::string fmt(double v) { return io::format_real(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }
template <class T>
std::string fmt(T v) {
  return std::to_string(v);
}

#define S2VEC_FIELD(name, member)                                                                    \
  {                                                                                                  \
    name, ConfigField {                                                                              \
      [](PipelineConfig& c, std::string_view v) { c.member = parse_value<decltype(c.member)>(name, v); }, \
          [](const PipelineConfig& c) { return fmt(c.member); }                                      \
    }                                                                                                \
  }

inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  static const std::vector<std::pair<std::string, ConfigField>> fields = {
      {"seed", {[](PipelineConfig& c, std::string_view v) { c.set_seed(parse_value<std::uint64_t>("seed", v)); },
                [](const PipelineConfig& c) { return fmt(c.seed); }}},
      {"threads", {[](PipelineConfig& c, std::string_view v) { c.set_threads(parse_value<unsigned>("threads", v)); },
                   [](const PipelineConfig& c) { return fmt(c.threads); }}},
      S2VEC_FIELD("k_clusters", synthetic.k_clusters),
      S2VEC_FIELD("per_cluster", synthetic.per_cluster),
      S2VEC_FIELD("nodes_per_graph", synthetic.nodes_per_graph),
      S2VEC_FIELD("within_jitter", synthetic.within_jitter),
      S2VEC_FIELD("center_spread", synthetic.center_spread),
      S2VEC_FIELD("edge_radius", synthetic.edge_radius),
      S2VEC_FIELD("template_radius", synthetic.template_radius),
      S2VEC_FIELD("template_sites", synthetic.template_sites),
      S2VEC_FIELD("walk_length", train.sampler.walk_length),
      S2VEC_FIELD("num_walks", train.sampler.num_walks_per_graph),
      S2VEC_FIELD("move_probability", train.sampler.move_probability),
      S2VEC_FIELD("smoother", train.sampler.smoother),
      S2VEC_FIELD("cell_size", train.cell_size),
      S2VEC_FIELD("min_hits", train.min_hits),
      S2VEC_FIELD("noise", train.noise_magnitude),
      S2VEC_FIELD("d_emb", train.d_emb),
      S2VEC_FIELD("hidden", train.hidden),
      S2VEC_FIELD("learning_rate", train.learning_rate),
      S2VEC_FIELD("clip_norm", train.clip_norm),
      S2VEC_FIELD("batch_size", train.batch_size),
      S2VEC_FIELD("max_epochs", train.max_epochs),
      S2VEC_FIELD("patience", train.patience),
      S2VEC_FIELD("validation_fraction", train.validation_fraction),
      S2VEC_FIELD("projection_bias", train.projection_bias),
      S2VEC_FIELD("weight_top_k", train.weight_top_k),
      S2VEC_FIELD("resample_each_epoch", train.resample_each_epoch),
      {"mode", {[](PipelineConfig& c, std::string_view v) {
                  if (v == "s2vec") c.train.mode = TrainMode::s2vec;
                  else if (v == "vanilla") c.train.mode = TrainMode::vanilla;
                  else throw ConfigError("mode must be s2vec or vanilla");
                },
                [](const PipelineConfig& c) { return std::string(to_string(c.train.mode)); }}},
      {"latent", {[](PipelineConfig& c, std::string_view v) {
                    if (v == "hidden") c.latent = LatentKind::hidden;
                    else if (v == "hidden_cell") c.latent = LatentKind::hidden_cell;
                    else throw ConfigError("latent must be hidden or hidden_cell");
                  },
                  [](const PipelineConfig& c) {
                    return std::string(c.latent == LatentKind::hidden ? "hidden" : "hidden_cell");
                  }}},
      {"eps", {[](PipelineConfig& c, std::string_view v) {
                 c.eps = v == "auto" ? 0.0 : parse_value<double>("eps", v);
               },
               [](const PipelineConfig& c) { return c.eps > 0.0 ? fmt(c.eps) : std::string("auto"); }}},
      S2VEC_FIELD("eps_percentile", eps_percentile),
      S2VEC_FIELD("min_pts", min_pts),
      S2VEC_FIELD("pca_components", pca_components),
  };
  return fields;
}

#undef S2VEC_FIELD

}  // namespace detail

inline void PipelineConfig::set(std::string_view key, std::string_view value) {
  for (const auto& [name, f] : detail::config_fields())
    if (name == key) return f.set(*this, value);
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

inline std::string PipelineConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : detail::config_fields()) out += name + "=" + f.get(*this) + "\n";
  return out;
}

inline std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [name, f] : detail::config_fields()) out.push_back(name);
  return out;
}

// Applies "key=value" lines; blank lines and '#' comments are skipped.
inline void apply_config_text(PipelineConfig& cfg, std::string_view text) {
  auto all = io::lines(text);
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    std::string_view line = all[ln];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(ln + 1) + ": expected key=value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(ln + 1) + ": " + e.what());
    }
  }
}

}  // namespace s2vec

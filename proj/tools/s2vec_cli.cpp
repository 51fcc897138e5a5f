// s2vec command-line front end: dataset generation, training, embedding,
// the PCA baseline and DBSCAN/ARI evaluation. Every subcommand writes a
// manifest.json describing the effective configuration and its outputs.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <s2vec/s2vec.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace s2vec;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigExit = 2, kDataExit = 3, kNumericExit = 4 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

PipelineConfig load_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) apply_config_text(cfg, io::read_file(g.config_path));
  for (const auto& kv : g.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.set_seed(*g.seed);
  if (g.threads) cfg.set_threads(*g.threads);
  return cfg;
}

ordered_json config_json(const PipelineConfig& cfg) {
  ordered_json j = ordered_json::object();
  const std::string text = cfg.to_text();
  for (auto line : io::lines(text)) {
    auto eq = line.find('=');
    j[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return j;
}

void write_manifest(const fs::path& path, const std::string& command, const PipelineConfig& cfg,
                    const std::vector<fs::path>& artifacts, ordered_json extra = ordered_json::object()) {
  ordered_json m;
  m["tool"] = "s2vec";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["threads"] = cfg.threads;
  for (auto& [k, v] : extra.items()) m[k] = v;
  m["config"] = config_json(cfg);
  ordered_json files = ordered_json::array();
  // Artifacts are listed relative to the manifest so two output trees compare equal.
  const fs::path base = fs::absolute(path).parent_path();
  for (const auto& a : artifacts)
    files.push_back(a.is_absolute() ? a.lexically_relative(base).generic_string() : a.generic_string());
  m["artifacts"] = files;
  io::write_file(path, m.dump(2) + "\n");
}

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".manifest.json"); }

void log(const std::string& msg) { std::cerr << "s2vec: " << msg << "\n"; }

// ---------------------------------------------------------------------------

int cmd_gen(const PipelineConfig& cfg, const fs::path& out) {
  auto ds = generate_synthetic_dataset(cfg.synthetic);
  write_dataset(ds, out);
  std::vector<fs::path> files;
  for (const auto& id : ds.ids) files.push_back(id + ".sg");
  files.push_back("labels.tsv");
  write_manifest(out / "manifest.json", "gen", cfg, files);
  log("wrote " + std::to_string(ds.size()) + " graphs to " + out.string());
  return kOk;
}

int cmd_stats(const PipelineConfig&, const fs::path& data, const std::string& out) {
  auto ds = read_dataset(data);
  std::string table = "id\tnodes\tedges\tavg_degree\tclustering_coefficient\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto s = graph_stats(ds.graphs[i]);
    table += ds.ids[i] + "\t" + std::to_string(ds.graphs[i].size()) + "\t" + std::to_string(ds.graphs[i].edge_count()) +
             "\t" + io::format_exact(s.avg_degree) + "\t" + io::format_exact(s.clustering_coefficient) + "\n";
  }
  if (out.empty()) std::cout << table;
  else io::write_file(out, table);
  return kOk;
}

int cmd_train(const PipelineConfig& cfg, const fs::path& data, const fs::path& out, bool dump_paths) {
  auto ds = read_dataset(data);
  const ordered_json extra = {{"mode", to_string(cfg.train.mode)}, {"dataset", data.generic_string()}};
  TrainResult r;
  try {
    r = train(ds, cfg.train);
  } catch (const TrainingError& e) {
    io::write_file(out / "training_log.tsv", write_training_log(e.report()));
    ordered_json failed = extra;
    failed["status"] = "aborted";
    failed["error"] = e.what();
    write_manifest(out / "manifest.json", "train", cfg, {"training_log.tsv"}, failed);
    throw;
  }
  io::write_file(out / "checkpoint.txt", write_checkpoint(r.params));
  io::write_file(out / "vocab.txt", write_vocabulary(r.vocab));
  io::write_file(out / "training_log.tsv", write_training_log(r.report));
  io::write_file(out / "config.txt", cfg.to_text());
  std::vector<fs::path> files{"checkpoint.txt", "vocab.txt", "training_log.tsv", "config.txt"};
  if (dump_paths) {
    io::write_file(out / "paths.tsv", write_path_dump(r.paths));
    files.push_back("paths.tsv");
  }
  ordered_json info = extra;
  info["status"] = "ok";
  info["epochs"] = r.report.epochs.size();
  info["best_epoch"] = r.report.best_epoch;
  info["best_val_loss"] = r.report.best_val_loss;
  info["stop_reason"] = r.report.stop_reason;
  info["vocab_size"] = r.report.vocab_size;
  info["cell_size"] = r.report.cell_size;
  info["degenerate_paths"] = r.report.degenerate_paths;
  write_manifest(out / "manifest.json", "train", cfg, files, info);
  if (r.report.degenerate_paths > 0)
    log(std::to_string(r.report.degenerate_paths) + " walks started on isolated nodes");
  log("trained " + std::to_string(r.report.epochs.size()) + " epochs, best validation loss " +
      io::format_real(r.report.best_val_loss) + " at epoch " + std::to_string(r.report.best_epoch));
  return kOk;
}

int cmd_embed(const PipelineConfig& cfg, const fs::path& checkpoint, const fs::path& vocab_path, const fs::path& data,
              const fs::path& out) {
  auto params = read_checkpoint(io::read_file(checkpoint));
  auto vocab = read_vocabulary(io::read_file(vocab_path));
  if (params.shape().vocab != vocab.size()) throw DataError("checkpoint and vocabulary sizes differ");
  auto ds = read_dataset(data);
  auto m = embed_dataset(params, vocab, ds, cfg.train.sampler, cfg.latent, cfg.threads);
  io::write_file(out, write_embeddings(m));
  write_manifest(manifest_beside(out), "embed", cfg, {out.filename()},
                 {{"checkpoint", checkpoint.generic_string()}, {"vocabulary", vocab_path.generic_string()}});
  return kOk;
}

int cmd_baseline(const PipelineConfig& cfg, const std::string& method, const fs::path& data, std::size_t n,
                 const fs::path& out) {
  if (method != "pca") throw ConfigError("unknown baseline method '" + method + "'");
  auto ds = read_dataset(data);
  const std::size_t comps = n > 0 ? n : default_pca_components(cfg, ds);
  auto m = pca_baseline_embed(ds, comps);
  io::write_file(out, write_embeddings(m));
  write_manifest(manifest_beside(out), "baseline", cfg, {out.filename()}, {{"method", method}, {"components", comps}});
  return kOk;
}

int cmd_eval(const PipelineConfig& cfg, const fs::path& data, const std::vector<std::string>& specs,
             const fs::path& out, const std::string& partitions_dir) {
  auto ds = read_dataset(data);
  std::vector<std::pair<std::string, EmbeddingMatrix>> methods;
  for (const auto& spec : specs) {
    auto eq = spec.find('=');
    std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    try {
      methods.emplace_back(name, read_embeddings(io::read_file(path)));
    } catch (const ParseError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  auto report = evaluate_embeddings(ds, methods, cfg);
  io::write_file(out, write_evaluation_report(report));
  std::vector<fs::path> files{out.filename()};
  ordered_json eps = ordered_json::object();
  eps["ground_truth"] = report.truth_eps;
  if (!partitions_dir.empty()) {
    const fs::path dir(partitions_dir);
    io::write_file(dir / "ground_truth.tsv", write_partition(report.truth, ds.ids));
    files.push_back(fs::absolute(dir / "ground_truth.tsv"));
    for (const auto& m : report.methods) {
      io::write_file(dir / (m.method + ".tsv"), write_partition(m.partition, ds.ids));
      files.push_back(fs::absolute(dir / (m.method + ".tsv")));
    }
  }
  for (const auto& m : report.methods) eps[m.method] = m.eps;
  write_manifest(manifest_beside(out), "eval", cfg, files,
                 {{"dataset", data.generic_string()}, {"dbscan_min_pts", cfg.min_pts}, {"dbscan_eps", eps}});
  std::cout << write_evaluation_report(report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"s2vec: spatial graph embedding with a denoising LSTM autoencoder"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config file)");
  app.add_option("--threads", g.threads, "worker threads; results do not depend on it");
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");

  std::string out, data, checkpoint, vocab, method = "pca", partitions;
  std::size_t components = 0;
  bool dump_paths = false;
  std::vector<std::string> embeddings;
  std::optional<double> eps;
  std::optional<int> min_pts;

  auto* gen = app.add_subcommand("gen", "generate a labeled synthetic dataset");
  gen->add_option("--out,out", out, "output dataset directory")->required();

  auto* stats = app.add_subcommand("stats", "per-graph node/edge counts, degree and clustering");
  stats->add_option("--data,data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--out", out, "write the table here instead of stdout");

  auto* tr = app.add_subcommand("train", "train the sequence autoencoder");
  tr->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "output model directory")->required();
  tr->add_flag("--dump-paths", dump_paths, "also write the sampled walks");
  tr->add_flag_callback("--vanilla", [&] { g.overrides.push_back("mode=vanilla"); }, "shorthand for --set mode=vanilla");

  auto* emb = app.add_subcommand("embed", "embed every graph of a dataset");
  emb->add_option("--checkpoint", checkpoint, "checkpoint.txt from train")->required()->check(CLI::ExistingFile);
  emb->add_option("--vocab", vocab, "vocab.txt from train")->required()->check(CLI::ExistingFile);
  emb->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  emb->add_option("--out", out, "embeddings TSV")->required();

  auto* base = app.add_subcommand("baseline", "baseline embeddings");
  base->add_option("--method", method, "baseline method")->check(CLI::IsMember({"pca"}));
  base->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  base->add_option("-n,--components", components, "output dimension (default: min(hidden, graphs, 2 * max nodes))");
  base->add_option("--out", out, "embeddings TSV")->required();

  auto* ev = app.add_subcommand("eval", "cluster embeddings and score them against the distance ground truth");
  ev->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--embedding,-e", embeddings, "name=path of an embeddings TSV (repeatable)")->required();
  ev->add_option("--out", out, "report TSV")->required();
  ev->add_option("--partitions", partitions, "directory for per-method partition files");
  ev->add_option("--eps", eps, "DBSCAN radius (default: percentile rule)");
  ev->add_option("--min-pts", min_pts, "DBSCAN min_pts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    auto cfg = load_config(g);
    if (eps) cfg.eps = *eps;
    if (min_pts) cfg.min_pts = *min_pts;
    if (*gen) return cmd_gen(cfg, out);
    if (*stats) return cmd_stats(cfg, data, out);
    if (*tr) return cmd_train(cfg, data, out, dump_paths);
    if (*emb) return cmd_embed(cfg, checkpoint, vocab, data, out);
    if (*base) return cmd_baseline(cfg, method, data, components, out);
    if (*ev) return cmd_eval(cfg, data, embeddings, out, partitions);
  } catch (const ConfigError& e) {
    log("configuration error: " + std::string(e.what()));
    return kConfigExit;
  } catch (const NumericError& e) {
    log("numeric failure: " + std::string(e.what()));
    return kNumericExit;
  } catch (const Error& e) {
    log("data error: " + std::string(e.what()));
    return kDataExit;
  } catch (const fs::filesystem_error& e) {
    log("data error: " + std::string(e.what()));
    return kDataExit;
  }
  return kConfigExit;
}

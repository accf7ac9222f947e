// Command-line front end: synthetic sweep generation, fingerprint
// extraction, database training, verification/registration, the two
// benchmark pipelines, and the authentication-protocol simulator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ofp/bench.hpp"
#include "ofp/io.hpp"
#include "ofp/rng.hpp"

namespace fs = std::filesystem;
using namespace ofp;

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return Rng(seed).child(tag).raw(); }

ToolkitConfig load_config(const std::string& path) {
  if (path.empty()) return ToolkitConfig{};
  return read_config(path);
}

/// --seed N reseeds the whole pipeline from one master seed (and collapses
/// bench seed lists to {N}); without it the config seeds apply.
void apply_seed(ToolkitConfig& cfg, std::optional<std::uint64_t> seed) {
  if (!seed) return;
  cfg.population.seed = derive(*seed, 1);
  cfg.geometry.seed = derive(*seed, 2);
  cfg.seeds = {*seed};
}

std::uint64_t dataset_seed(const ToolkitConfig& cfg, std::optional<std::uint64_t> seed) {
  return seed ? derive(*seed, 3) : derive(cfg.population.seed, 3);
}

struct LabeledFingerprints {
  std::map<std::string, std::vector<OpticFingerprint>> by_device;
  double mse_sum = 0.0;
  std::size_t n_fits = 0;
  std::size_t unconverged = 0;
};

LabeledFingerprints fit_directory(const fs::path& dir, const FitOptions& opts) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".s2p")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no sweep files in " + dir.string());

  std::vector<S21Sweep> sweeps;
  for (const auto& f : files) {
    S21Sweep sw = read_sweep(f);
    if (!sw.device_id)
      throw std::runtime_error(f.string() + ": sweep has no device_id header; cannot label");
    sweeps.push_back(std::move(sw));
  }
  const auto fits = fit_dataset(sweeps, opts, ExecMode::Parallel);
  LabeledFingerprints out;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    out.mse_sum += fits[i].mse;
    ++out.n_fits;
    if (!fits[i].converged) {
      ++out.unconverged;
      continue;
    }
    out.by_device[*sweeps[i].device_id].push_back(fingerprint(fits[i]));
  }
  return out;
}

int cmd_synth(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  ToolkitConfig cfg = load_config(config_path);
  apply_seed(cfg, seed);
  const auto devices = sample_population(cfg.population);
  const auto geoms = sample_geometries(cfg.geometry);
  const auto ds = simulate_dataset(devices, geoms, cfg.reps, cfg.grid(),
                                   cfg.population.intra_device_jitter, cfg.electronics_gain,
                                   dataset_seed(cfg, seed), ExecMode::Parallel);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < ds.sweeps.size(); ++i) {
    const std::size_t gi = (i / static_cast<std::size_t>(cfg.reps)) % geoms.size();
    const std::size_t ri = i % static_cast<std::size_t>(cfg.reps);
    char name[128];
    std::snprintf(name, sizeof(name), "%s_pos%02zu_rep%02zu.csv", ds.labels[i].c_str(), gi + 1,
                  ri + 1);
    write_sweep(dir / name, ds.sweeps[i]);
  }
  write_ground_truth(dir / "ground_truth.json", devices, geoms, cfg);
  std::printf("wrote %zu sweeps and ground_truth.json to %s\n", ds.sweeps.size(),
              dir.string().c_str());
  return 0;
}

int cmd_extract(const std::string& config_path, const std::string& in_path,
                const std::string& out_path) {
  ToolkitConfig cfg = load_config(config_path);
  const S21Sweep sweep = read_sweep(in_path);
  const FitResult fit = fit_sweep(sweep, cfg.fit);
  FingerprintRecord rec;
  rec.fp = {fit.params.r_c, fit.params.c_j, fit.params.r_q};
  rec.c_q = fit.params.c_q;
  rec.zeta = fit.zeta.zeta;
  rec.mse = fit.mse;
  rec.iterations = fit.iterations;
  rec.converged = fit.converged;
  if (sweep.device_id) rec.device_id = *sweep.device_id;
  write_fingerprint(out_path, rec);
  std::printf("fit: mse=%.6g iterations=%d converged=%s\n", fit.mse, fit.iterations,
              fit.converged ? "true" : "false");
  if (!fit.converged) {
    std::fprintf(stderr, "error: fit did not converge\n");
    return 1;
  }
  return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& in_dir, const std::string& model_kind,
              const std::string& out_path) {
  ToolkitConfig cfg = load_config(config_path);
  apply_seed(cfg, seed);

  LabeledFingerprints fps;
  if (!in_dir.empty()) {
    fps = fit_directory(in_dir, cfg.fit);
  } else {
    const auto devices = sample_population(cfg.population);
    const auto geoms = sample_geometries(cfg.geometry);
    const auto ds = simulate_dataset(devices, geoms, cfg.reps, cfg.grid(),
                                     cfg.population.intra_device_jitter, cfg.electronics_gain,
                                     dataset_seed(cfg, seed), ExecMode::Parallel);
    const auto fits = fit_dataset(ds.sweeps, cfg.fit, ExecMode::Parallel);
    for (std::size_t i = 0; i < fits.size(); ++i) {
      fps.mse_sum += fits[i].mse;
      ++fps.n_fits;
      if (!fits[i].converged) {
        ++fps.unconverged;
        continue;
      }
      fps.by_device[ds.labels[i]].push_back(fingerprint(fits[i]));
    }
  }

  FingerprintDatabase db;
  db.model_kind = classifier_from_name(model_kind);
  for (const auto& [id, list] : fps.by_device) register_device(db, id, list);
  write_db(out_path, db);
  std::printf("registered %zu devices (%zu fits, mean mse %.6g, %zu unconverged), tau=%.6g\n",
              fps.by_device.size(), fps.n_fits, fps.mse_sum / std::max<std::size_t>(fps.n_fits, 1),
              fps.unconverged, db.tau);
  return 0;
}

OpticFingerprint fingerprint_from_file(const std::string& fp_path, const std::string& sweep_path,
                                       const FitOptions& opts) {
  if (!fp_path.empty()) return read_fingerprint(fp_path).fp;
  if (sweep_path.empty()) throw std::runtime_error("verify needs --in or --sweep");
  const FitResult fit = fit_sweep(read_sweep(sweep_path), opts);
  return fingerprint(fit);  // throws if unconverged
}

int cmd_verify(const std::string& config_path, const std::string& db_path,
               const std::string& claim, const std::string& fp_path,
               const std::string& sweep_path) {
  ToolkitConfig cfg = load_config(config_path);
  const FingerprintDatabase db = read_db(db_path);
  const OpticFingerprint fp = fingerprint_from_file(fp_path, sweep_path, cfg.fit);
  const Verdict v = verify(db, claim, fp);
  std::printf("%s claim=%s matched=%s score=%.4f distance=%.6g tau=%.6g reason=%s\n",
              v.accepted ? "ACCEPT" : "REJECT", claim.c_str(),
              v.matched_id ? v.matched_id->c_str() : "-", v.score, v.distance, db.tau,
              auth_reason_name(v.reason).c_str());
  return v.accepted ? 0 : 1;
}

int cmd_register(const std::string& config_path, const std::string& db_path,
                 const std::string& id, const std::vector<std::string>& fp_paths,
                 const std::vector<std::string>& sweep_paths, const std::string& out_path) {
  ToolkitConfig cfg = load_config(config_path);
  FingerprintDatabase db = read_db(db_path);
  std::vector<OpticFingerprint> fps;
  for (const auto& p : fp_paths) fps.push_back(read_fingerprint(p).fp);
  for (const auto& p : sweep_paths) {
    const FitResult fit = fit_sweep(read_sweep(p), cfg.fit);
    if (!fit.converged) throw std::runtime_error(p + ": fit did not converge");
    fps.push_back(fingerprint(fit));
  }
  const RegistrationOutcome out = register_device(db, id, fps);
  if (!out.accepted) {
    std::fprintf(stderr, "error: registration rejected: %s\n",
                 auth_reason_name(out.reason).c_str());
    return 1;
  }
  write_db(out_path.empty() ? db_path : out_path, db);
  std::printf("registered %s with %zu fingerprints, db version %llu, tau=%.6g\n", id.c_str(),
              fps.size(), static_cast<unsigned long long>(db.version), db.tau);
  return 0;
}

int cmd_bench(bool noise, const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir, bool emit_plot_data) {
  ToolkitConfig cfg = load_config(config_path);
  apply_seed(cfg, seed);
  BenchConfig bc = cfg.bench();
  const BenchReport rep = noise ? run_noise_bench(bc) : run_accuracy_bench(bc);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  atomic_write(dir / "report.txt", rep.body_text());
  atomic_write(dir / "report.json", rep.body_json());
  atomic_write(dir / (noise ? "noise_curves.csv" : "accuracy.csv"), rep.csv_series());
  if (emit_plot_data) {
    atomic_write(dir / "fit_overlay.csv", fit_overlay_csv(bc));
    atomic_write(dir / "param_scatter.csv", parameter_scatter_csv(bc));
  }
  // runtime goes to stdout only; output files stay identical across runs
  std::printf("%s", rep.body_text().c_str());
  std::printf("runtime: %s", rep.runtime_text().c_str());
  return 0;
}

int cmd_auth_sim(const std::string& scenario_path, const std::string& out_path,
                 const std::string& db_out) {
  const Scenario sc = read_scenario(scenario_path);
  FingerprintDatabase db;
  const Transcript tr = run_scenario(sc, &db);
  write_transcript(out_path, tr);
  if (!db_out.empty()) write_db(db_out, db);
  std::printf("transcript: %zu messages, genuine %d/%d accepted, impostor %d/%d accepted, "
              "FRR=%.4f FAR=%.4f\n",
              tr.messages.size(), tr.summary.genuine_accepts, tr.summary.genuine_trials,
              tr.summary.impostor_accepts, tr.summary.impostor_trials, tr.summary.frr(),
              tr.summary.far());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LED optic-fingerprint toolkit"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, db_path, claim, id, scenario_path, db_out;
  std::string sweep_path;
  std::string model_kind = "fine-knn";
  std::vector<std::string> fp_paths, sweep_paths;
  std::optional<std::uint64_t> seed;
  bool emit_plot_data = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic sweep dataset");
  synth->add_option("--config", config_path, "config file");
  synth->add_option("--seed", seed, "master seed override");
  synth->add_option("--out", out_path, "output directory")->required();

  auto* extract = app.add_subcommand("extract", "fit one sweep and emit its fingerprint");
  extract->add_option("--config", config_path, "config file");
  extract->add_option("--in", in_path, "sweep file (.csv or .s2p)")->required();
  extract->add_option("--out", out_path, "fingerprint output file")->required();

  auto* train = app.add_subcommand("train", "build a fingerprint database");
  train->add_option("--config", config_path, "config file");
  train->add_option("--seed", seed, "master seed override");
  train->add_option("--in", in_path, "directory of labeled sweeps (default: synthesize)");
  train->add_option("--model", model_kind, "database classifier kind");
  train->add_option("--out", out_path, "database output file")->required();

  auto* verify_cmd = app.add_subcommand("verify", "verify a fingerprint claim against a database");
  verify_cmd->add_option("--config", config_path, "config file");
  verify_cmd->add_option("--db", db_path, "database file")->required();
  verify_cmd->add_option("--claim", claim, "claimed device id")->required();
  verify_cmd->add_option("--in", in_path, "fingerprint file");
  verify_cmd->add_option("--sweep", sweep_path, "sweep file to fit instead of --in");

  auto* reg = app.add_subcommand("register", "register a new device into a database");
  reg->add_option("--config", config_path, "config file");
  reg->add_option("--db", db_path, "database file")->required();
  reg->add_option("--id", id, "new device id")->required();
  reg->add_option("--in", fp_paths, "fingerprint file(s)");
  reg->add_option("--sweep", sweep_paths, "sweep file(s) to fit");
  reg->add_option("--out", out_path, "output database (default: overwrite --db)");

  auto* ba = app.add_subcommand("bench-accuracy", "classifier accuracy benchmark (clean test)");
  ba->add_option("--config", config_path, "config file");
  ba->add_option("--seed", seed, "single-seed override");
  ba->add_option("--out", out_path, "report directory")->required();
  ba->add_flag("--emit-plot-data", emit_plot_data, "also write fit overlay and parameter CSVs");

  auto* bn = app.add_subcommand("bench-noise", "noise robustness benchmark");
  bn->add_option("--config", config_path, "config file");
  bn->add_option("--seed", seed, "single-seed override");
  bn->add_option("--out", out_path, "report directory")->required();
  bn->add_flag("--emit-plot-data", emit_plot_data, "also write fit overlay and parameter CSVs");

  auto* sim = app.add_subcommand("auth-sim", "run an authentication protocol scenario");
  sim->add_option("--scenario", scenario_path, "scenario file")->required();
  sim->add_option("--out", out_path, "transcript output file")->required();
  sim->add_option("--db-out", db_out, "also write the final database");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, seed, out_path);
    if (extract->parsed()) return cmd_extract(config_path, in_path, out_path);
    if (train->parsed()) return cmd_train(config_path, seed, in_path, model_kind, out_path);
    if (verify_cmd->parsed()) return cmd_verify(config_path, db_path, claim, in_path, sweep_path);
    if (reg->parsed())
      return cmd_register(config_path, db_path, id, fp_paths, sweep_paths, out_path);
    if (ba->parsed()) return cmd_bench(false, config_path, seed, out_path, emit_plot_data);
    if (bn->parsed()) return cmd_bench(true, config_path, seed, out_path, emit_plot_data);
    if (sim->parsed()) return cmd_auth_sim(scenario_path, out_path, db_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

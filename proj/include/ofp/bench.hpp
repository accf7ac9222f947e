#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ofp/classify.hpp"
#include "ofp/extract.hpp"
#include "ofp/synth.hpp"

namespace ofp {

enum class Representation { OpticFP, RawS21 };
std::string representation_name(Representation r);

/// Full benchmark configuration. Each seed re-derives its own population,
/// geometries, dataset, split and noise streams, so the report depends only
/// on this struct.
struct BenchConfig {
  PopulationSpec population;
  GeometrySampling geometry;
  int reps = 10;
  double electronics_gain = kDefaultElectronicsGain;
  double f_min = 1e5;
  double f_max = 1e8;
  std::size_t grid_points = 750;
  std::vector<double> noise_levels_dbm = {-90, -80, -70, -60, -50, -40, -30, -20};
  double signal_power_dbm = -5.0;
  std::vector<ClassifierKind> classifiers = {
      ClassifierKind::FineTree, ClassifierKind::FineKnn, ClassifierKind::GaussianNB,
      ClassifierKind::BaggedTrees};
  double train_fraction = 0.5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  FitOptions fit;
  ExecMode exec = ExecMode::Parallel;

  FrequencyGrid grid() const { return FrequencyGrid::log_spaced(f_min, f_max, grid_points); }
  void require_valid() const;
};

/// One (classifier, representation, noise level) cell. No noise level means
/// a clean-test reference cell.
struct BenchCell {
  ClassifierKind classifier;
  Representation repr;
  std::optional<double> noise_dbm;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_seed;
};

struct BenchReport {
  std::string kind;  // "accuracy" or "noise"
  std::size_t of_feature_count = 3;
  std::size_t raw_feature_count = 0;
  std::vector<BenchCell> cells;
  double clean_fit_mse_mean = 0.0;
  double clean_fit_mse_max = 0.0;
  std::map<double, double> noisy_fit_mse_mean;  // level -> mean mse
  std::vector<std::string> diagnostics;          // aborted seeds etc.
  std::vector<std::uint64_t> seeds_used;
  std::size_t sweeps_per_seed = 0;

  // wall-clock seconds; excluded from the deterministic report body
  struct Runtime {
    double synth = 0.0;
    double fit = 0.0;
    double train_eval = 0.0;
    double total = 0.0;
  } runtime;

  /// Deterministic plain-text body (identical for identical configs+seeds).
  std::string body_text() const;
  /// Deterministic JSON body.
  std::string body_json() const;
  /// Per-figure CSV series: accuracy bars (clean cells) or noise curves.
  std::string csv_series() const;
  /// Runtime sidecar (not part of the body contract).
  std::string runtime_text() const;

  const BenchCell* find(ClassifierKind c, Representation r,
                        std::optional<double> noise) const;
  /// Mean accuracy across the classifier set for one representation.
  double mean_over_classifiers(Representation r, std::optional<double> noise) const;
};

/// Clean-data pipeline per seed: synth -> fit -> (fingerprints | raw dB) ->
/// stratified split -> train -> evaluate, aggregated over seeds.
BenchReport run_accuracy_bench(const BenchConfig& cfg);

/// Noise robustness: models train on clean data; per noise level the test
/// sweeps get fresh noise, fingerprints are re-extracted from the noisy
/// sweeps, and the raw path classifies the noisy dB vectors. Clean-test
/// reference cells are included.
BenchReport run_noise_bench(const BenchConfig& cfg);

/// Fit overlay + extracted-parameter scatter series for external plotting
/// (magnitude fits of a few sweeps and the per-device fitted parameters).
std::string fit_overlay_csv(const BenchConfig& cfg);
std::string parameter_scatter_csv(const BenchConfig& cfg);

}  // namespace ofp

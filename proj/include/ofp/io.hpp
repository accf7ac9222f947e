#pragma once

#include <filesystem>
#include <string>

#include "ofp/authproto.hpp"
#include "ofp/bench.hpp"
#include "ofp/circuit.hpp"
#include "ofp/extract.hpp"

namespace ofp {

/// Write a file atomically (temp file in the same directory, then rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Sweep files. CSV is the native format (freq_hz,s21_real,s21_imag with
/// optional `# key: value` header lines); files ending in .s1p/.s2p are
/// parsed as Touchstone, mapping the S21 column and accepting RI, MA and DB
/// value formats. Malformed rows and non-monotone frequency report the
/// offending line number.
S21Sweep read_sweep(const std::filesystem::path& path);
void write_sweep(const std::filesystem::path& path, const S21Sweep& sweep);

/// Single-fingerprint files (extraction results).
struct FingerprintRecord {
  OpticFingerprint fp;
  double c_q = 0.0;
  double zeta = 0.0;
  double mse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string device_id;
};
FingerprintRecord read_fingerprint(const std::filesystem::path& path);
void write_fingerprint(const std::filesystem::path& path, const FingerprintRecord& rec);

/// Fingerprint database persistence. The classifier state is serialized, so
/// loading retrains nothing and verify verdicts survive a round trip. Loads
/// are atomic: a corrupt file throws and leaves no partial database.
FingerprintDatabase read_db(const std::filesystem::path& path);
void write_db(const std::filesystem::path& path, const FingerprintDatabase& db);

/// Toolkit configuration file (JSON). Unknown keys anywhere are rejected
/// with an error naming the key.
struct ToolkitConfig {
  PopulationSpec population;
  GeometrySampling geometry;
  double electronics_gain = kDefaultElectronicsGain;
  double f_min = 1e5;
  double f_max = 1e8;
  std::size_t grid_points = 750;
  int reps = 10;
  FitOptions fit;
  std::vector<ClassifierKind> classifiers = {
      ClassifierKind::FineTree, ClassifierKind::FineKnn, ClassifierKind::GaussianNB,
      ClassifierKind::BaggedTrees};
  std::vector<double> noise_levels_dbm = {-90, -80, -70, -60, -50, -40, -30, -20};
  double signal_power_dbm = -5.0;
  double train_fraction = 0.5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  FrequencyGrid grid() const { return FrequencyGrid::log_spaced(f_min, f_max, grid_points); }
  BenchConfig bench() const;
};
ToolkitConfig read_config(const std::filesystem::path& path);
ToolkitConfig parse_config(const std::string& text, const std::string& origin = "<config>");

Scenario read_scenario(const std::filesystem::path& path);
void write_transcript(const std::filesystem::path& path, const Transcript& tr);

/// Ground-truth manifest written next to synthesized sweep files.
void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<DeviceGroundTruth>& devices,
                        const std::vector<ChannelGeometry>& geometries,
                        const ToolkitConfig& cfg);

}  // namespace ofp

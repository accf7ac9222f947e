#include "ofp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ofp/rng.hpp"

namespace ofp {

namespace {

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return Rng(seed).child(tag).raw(); }

std::vector<double> fp_row(const OpticFingerprint& fp) { return {fp.r_c, fp.c_j, fp.r_q}; }

struct SeedData {
  bool ok = false;
  std::string diagnostic;
  SweepDataset ds;
  std::vector<FitResult> fits;
  std::vector<std::size_t> train_idx, test_idx;
  FeatureMatrix of_all;   // only converged rows carry fingerprints
  FeatureMatrix raw_all;
  double fit_mse_mean = 0.0;
  double fit_mse_max = 0.0;
};

SeedData build_seed(const BenchConfig& cfg, std::uint64_t seed, const FrequencyGrid& grid,
                    double* synth_t, double* fit_t) {
  SeedData sd;
  PopulationSpec pop = cfg.population;
  pop.seed = derive(seed, 1);
  GeometrySampling gs = cfg.geometry;
  gs.seed = derive(seed, 2);

  double t0 = now_s();
  const auto devices = sample_population(pop);
  const auto geoms = sample_geometries(gs);
  sd.ds = simulate_dataset(devices, geoms, cfg.reps, grid, pop.intra_device_jitter,
                           cfg.electronics_gain, derive(seed, 3), cfg.exec);
  *synth_t += now_s() - t0;

  t0 = now_s();
  sd.fits = fit_dataset(sd.ds.sweeps, cfg.fit, cfg.exec);
  *fit_t += now_s() - t0;

  std::size_t unconverged = 0;
  for (const auto& f : sd.fits) {
    if (!f.converged) ++unconverged;
    sd.fit_mse_mean += f.mse;
    sd.fit_mse_max = std::max(sd.fit_mse_max, f.mse);
  }
  sd.fit_mse_mean /= static_cast<double>(sd.fits.size());
  if (unconverged * 20 > sd.fits.size()) {  // > 5%
    char buf[160];
    std::snprintf(buf, sizeof(buf), "seed %llu aborted: %zu/%zu fits unconverged (> 5%%)",
                  static_cast<unsigned long long>(seed), unconverged, sd.fits.size());
    sd.diagnostic = buf;
    return sd;
  }

  sd.of_all.dim = 3;
  sd.raw_all.dim = grid.size();
  for (std::size_t i = 0; i < sd.ds.sweeps.size(); ++i) {
    sd.of_all.labels.push_back(sd.ds.labels[i]);
    sd.raw_all.labels.push_back(sd.ds.labels[i]);
    sd.of_all.rows.push_back(sd.fits[i].converged
                                 ? fp_row(fingerprint(sd.fits[i]))
                                 : std::vector<double>(3, 0.0));
    sd.raw_all.rows.push_back(raw_s21_features(sd.ds.sweeps[i]));
  }

  auto [ti, si] = split_indices(sd.ds.labels, cfg.train_fraction, derive(seed, 4));
  sd.train_idx = std::move(ti);
  sd.test_idx = std::move(si);
  sd.ok = true;
  return sd;
}

FeatureMatrix take(const FeatureMatrix& m, const std::vector<std::size_t>& idx) {
  FeatureMatrix out;
  out.dim = m.dim;
  for (std::size_t i : idx) {
    out.rows.push_back(m.rows[i]);
    out.labels.push_back(m.labels[i]);
  }
  return out;
}

double manual_accuracy(const ClassifierModel& model, const FeatureMatrix& test,
                       const std::vector<bool>* usable) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (usable && !(*usable)[i]) continue;  // failed extraction counts as a miss
    if (predict(model, test.rows[i]).label == test.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

void aggregate(BenchCell& cell) {
  const auto& v = cell.per_seed;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  cell.mean_accuracy = m;
  cell.std_accuracy = std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::string representation_name(Representation r) {
  return r == Representation::OpticFP ? "of" : "raw-s21";
}

void BenchConfig::require_valid() const {
  population.require_valid();
  geometry.require_valid();
  fit.require_valid();
  if (seeds.empty()) throw std::invalid_argument("BenchConfig: seeds must be non-empty");
  if (classifiers.empty()) throw std::invalid_argument("BenchConfig: classifiers must be non-empty");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("BenchConfig: train_fraction must lie in (0, 1)");
  for (std::size_t i = 1; i < noise_levels_dbm.size(); ++i)
    if (!(noise_levels_dbm[i - 1] < noise_levels_dbm[i]))
      throw std::invalid_argument("BenchConfig: noise levels must be sorted ascending");
  if (reps < 1) throw std::invalid_argument("BenchConfig: reps must be >= 1");
}

const BenchCell* BenchReport::find(ClassifierKind c, Representation r,
                                   std::optional<double> noise) const {
  for (const auto& cell : cells) {
    if (cell.classifier != c || cell.repr != r) continue;
    if (noise.has_value() != cell.noise_dbm.has_value()) continue;
    if (noise && *noise != *cell.noise_dbm) continue;
    return &cell;
  }
  return nullptr;
}

double BenchReport::mean_over_classifiers(Representation r, std::optional<double> noise) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cell : cells) {
    if (cell.repr != r) continue;
    if (noise.has_value() != cell.noise_dbm.has_value()) continue;
    if (noise && *noise != *cell.noise_dbm) continue;
    sum += cell.mean_accuracy;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("BenchReport: no cells for requested slice");
  return sum / static_cast<double>(n);
}

std::string BenchReport::body_text() const {
  std::ostringstream os;
  os << "# ofp-bench v1\n";
  os << "kind: " << kind << "\n";
  os << "seeds:";
  for (auto s : seeds_used) os << " " << s;
  os << "\n";
  os << "sweeps-per-seed: " << sweeps_per_seed << "\n";
  os << "of-features: " << of_feature_count << "\n";
  os << "raw-features: " << raw_feature_count << "\n";
  os << "clean-fit-mse: mean " << fmt(clean_fit_mse_mean) << " max " << fmt(clean_fit_mse_max)
     << "\n";
  for (const auto& [lvl, mse] : noisy_fit_mse_mean)
    os << "noisy-fit-mse[" << fmt(lvl) << "]: " << fmt(mse) << "\n";
  os << "cells: " << cells.size() << "\n";
  for (const auto& d : diagnostics) os << "diagnostic: " << d << "\n";
  os << "classifier,representation,noise_dbm,mean_accuracy,std_accuracy";
  os << "\n";
  for (const auto& c : cells) {
    os << classifier_name(c.classifier) << "," << representation_name(c.repr) << ","
       << (c.noise_dbm ? fmt(*c.noise_dbm) : "clean") << "," << fmt(c.mean_accuracy) << ","
       << fmt(c.std_accuracy);
    for (double v : c.per_seed) os << "," << fmt(v);
    os << "\n";
  }
  return os.str();
}

std::string BenchReport::body_json() const {
  std::ostringstream os;
  os << "{\"format\":\"ofp-bench\",\"version\":1,\"kind\":\"" << kind << "\",";
  os << "\"of_features\":" << of_feature_count << ",\"raw_features\":" << raw_feature_count << ",";
  os << "\"clean_fit_mse_mean\":" << fmt(clean_fit_mse_mean) << ",";
  os << "\"clean_fit_mse_max\":" << fmt(clean_fit_mse_max) << ",";
  os << "\"cells\":[";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (i) os << ",";
    os << "{\"classifier\":\"" << classifier_name(c.classifier) << "\",\"representation\":\""
       << representation_name(c.repr) << "\",\"noise_dbm\":"
       << (c.noise_dbm ? fmt(*c.noise_dbm) : "null") << ",\"mean\":" << fmt(c.mean_accuracy)
       << ",\"std\":" << fmt(c.std_accuracy) << ",\"per_seed\":[";
    for (std::size_t j = 0; j < c.per_seed.size(); ++j) {
      if (j) os << ",";
      os << fmt(c.per_seed[j]);
    }
    os << "]}";
  }
  os << "]}";
  return os.str();
}

std::string BenchReport::csv_series() const {
  std::ostringstream os;
  os << "classifier,representation,noise_dbm,mean_accuracy,std_accuracy\n";
  for (const auto& c : cells) {
    os << classifier_name(c.classifier) << "," << representation_name(c.repr) << ","
       << (c.noise_dbm ? fmt(*c.noise_dbm) : "clean") << "," << fmt(c.mean_accuracy) << ","
       << fmt(c.std_accuracy) << "\n";
  }
  return os.str();
}

std::string BenchReport::runtime_text() const {
  std::ostringstream os;
  os << "synth_s " << fmt(runtime.synth) << "\nfit_s " << fmt(runtime.fit) << "\ntrain_eval_s "
     << fmt(runtime.train_eval) << "\ntotal_s " << fmt(runtime.total) << "\n";
  return os.str();
}

BenchReport run_accuracy_bench(const BenchConfig& cfg) {
  cfg.require_valid();
  const double t_start = now_s();
  const FrequencyGrid grid = cfg.grid();

  BenchReport rep;
  rep.kind = "accuracy";
  rep.raw_feature_count = grid.size();

  for (auto c : cfg.classifiers)
    for (auto r : {Representation::OpticFP, Representation::RawS21})
      rep.cells.push_back({c, r, std::nullopt, 0.0, 0.0, {}});

  double mse_sum = 0.0;
  std::size_t mse_n = 0;
  for (std::uint64_t seed : cfg.seeds) {
    SeedData sd = build_seed(cfg, seed, grid, &rep.runtime.synth, &rep.runtime.fit);
    rep.sweeps_per_seed = sd.ds.sweeps.size();
    if (!sd.ok) {
      rep.diagnostics.push_back(sd.diagnostic);
      continue;
    }
    rep.seeds_used.push_back(seed);
    mse_sum += sd.fit_mse_mean;
    ++mse_n;
    rep.clean_fit_mse_max = std::max(rep.clean_fit_mse_max, sd.fit_mse_max);

    const double t0 = now_s();
    FeatureMatrix of_train = take(sd.of_all, sd.train_idx);
    FeatureMatrix of_test = take(sd.of_all, sd.test_idx);
    FeatureMatrix raw_train = take(sd.raw_all, sd.train_idx);
    FeatureMatrix raw_test = take(sd.raw_all, sd.test_idx);
    const Normalizer nm = fit_normalizer(of_train);
    const FeatureMatrix of_train_z = nm.apply(of_train);
    const FeatureMatrix of_test_z = nm.apply(of_test);

    for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
      TrainHyper hyper;
      hyper.seed = derive(seed, 100 + ci);
      const ClassifierModel m_of = train_classifier(cfg.classifiers[ci], of_train_z, hyper);
      const ClassifierModel m_raw = train_classifier(cfg.classifiers[ci], raw_train, hyper);
      rep.cells[2 * ci].per_seed.push_back(evaluate(m_of, of_test_z).accuracy);
      rep.cells[2 * ci + 1].per_seed.push_back(evaluate(m_raw, raw_test).accuracy);
    }
    rep.runtime.train_eval += now_s() - t0;
  }
  if (rep.seeds_used.empty())
    throw std::runtime_error("run_accuracy_bench: every seed aborted");
  rep.clean_fit_mse_mean = mse_sum / static_cast<double>(mse_n);
  for (auto& c : rep.cells) aggregate(c);
  rep.runtime.total = now_s() - t_start;
  return rep;
}

BenchReport run_noise_bench(const BenchConfig& cfg) {
  cfg.require_valid();
  if (cfg.noise_levels_dbm.size() < 2)
    throw std::invalid_argument("run_noise_bench: need at least 2 noise levels");
  const double t_start = now_s();
  const FrequencyGrid grid = cfg.grid();

  BenchReport rep;
  rep.kind = "noise";
  rep.raw_feature_count = grid.size();

  // cell layout: per classifier, per repr: clean reference then each level
  std::vector<std::optional<double>> levels;
  levels.push_back(std::nullopt);
  for (double l : cfg.noise_levels_dbm) levels.push_back(l);
  for (auto c : cfg.classifiers)
    for (auto r : {Representation::OpticFP, Representation::RawS21})
      for (const auto& l : levels) rep.cells.push_back({c, r, l, 0.0, 0.0, {}});
  auto cell_at = [&](std::size_t ci, Representation r, std::size_t li) -> BenchCell& {
    const std::size_t per_cls = 2 * levels.size();
    return rep.cells[ci * per_cls + (r == Representation::RawS21 ? levels.size() : 0) + li];
  };

  std::map<double, std::pair<double, std::size_t>> noisy_mse;
  double mse_sum = 0.0;
  std::size_t mse_n = 0;

  for (std::uint64_t seed : cfg.seeds) {
    SeedData sd = build_seed(cfg, seed, grid, &rep.runtime.synth, &rep.runtime.fit);
    rep.sweeps_per_seed = sd.ds.sweeps.size();
    if (!sd.ok) {
      rep.diagnostics.push_back(sd.diagnostic);
      continue;
    }
    rep.seeds_used.push_back(seed);
    mse_sum += sd.fit_mse_mean;
    ++mse_n;
    rep.clean_fit_mse_max = std::max(rep.clean_fit_mse_max, sd.fit_mse_max);

    double t0 = now_s();
    const FeatureMatrix of_train = take(sd.of_all, sd.train_idx);
    const FeatureMatrix raw_train = take(sd.raw_all, sd.train_idx);
    const Normalizer nm = fit_normalizer(of_train);
    const FeatureMatrix of_train_z = nm.apply(of_train);

    std::vector<ClassifierModel> m_of, m_raw;
    for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
      TrainHyper hyper;
      hyper.seed = derive(seed, 100 + ci);
      m_of.push_back(train_classifier(cfg.classifiers[ci], of_train_z, hyper));
      m_raw.push_back(train_classifier(cfg.classifiers[ci], raw_train, hyper));
    }

    // clean reference cells
    const FeatureMatrix of_test_z = nm.apply(take(sd.of_all, sd.test_idx));
    const FeatureMatrix raw_test = take(sd.raw_all, sd.test_idx);
    for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
      cell_at(ci, Representation::OpticFP, 0).per_seed.push_back(
          manual_accuracy(m_of[ci], of_test_z, nullptr));
      cell_at(ci, Representation::RawS21, 0).per_seed.push_back(
          manual_accuracy(m_raw[ci], raw_test, nullptr));
    }
    rep.runtime.train_eval += now_s() - t0;

    for (std::size_t li = 0; li < cfg.noise_levels_dbm.size(); ++li) {
      const double level = cfg.noise_levels_dbm[li];
      t0 = now_s();
      std::vector<S21Sweep> noisy(sd.test_idx.size());
      parallel_for(sd.test_idx.size(), cfg.exec, [&](std::size_t k) {
        noisy[k] = add_noise(sd.ds.sweeps[sd.test_idx[k]], level, cfg.signal_power_dbm,
                             derive(seed, 1000 + li * 10007 + sd.test_idx[k]));
      });
      rep.runtime.synth += now_s() - t0;

      t0 = now_s();
      const auto fits = fit_dataset(noisy, cfg.fit, cfg.exec);
      rep.runtime.fit += now_s() - t0;

      t0 = now_s();
      FeatureMatrix of_noisy;
      of_noisy.dim = 3;
      std::vector<bool> usable(noisy.size(), false);
      std::size_t failed = 0;
      double lvl_mse = 0.0;
      for (std::size_t k = 0; k < noisy.size(); ++k) {
        lvl_mse += fits[k].mse;
        of_noisy.labels.push_back(sd.ds.labels[sd.test_idx[k]]);
        if (fits[k].converged) {
          of_noisy.rows.push_back(nm.apply(fp_row(fingerprint(fits[k]))));
          usable[k] = true;
        } else {
          of_noisy.rows.push_back(std::vector<double>(3, 0.0));
          ++failed;
        }
      }
      auto& acc = noisy_mse[level];
      acc.first += lvl_mse / static_cast<double>(noisy.size());
      acc.second += 1;
      if (failed * 20 > noisy.size()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "seed %llu level %g dBm: %zu/%zu noisy extractions unconverged (counted as misses)",
                      static_cast<unsigned long long>(seed), level, failed, noisy.size());
        rep.diagnostics.push_back(buf);
      }

      FeatureMatrix raw_noisy;
      raw_noisy.dim = grid.size();
      for (std::size_t k = 0; k < noisy.size(); ++k) {
        raw_noisy.labels.push_back(sd.ds.labels[sd.test_idx[k]]);
        raw_noisy.rows.push_back(raw_s21_features(noisy[k]));
      }

      for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
        cell_at(ci, Representation::OpticFP, li + 1)
            .per_seed.push_back(manual_accuracy(m_of[ci], of_noisy, &usable));
        cell_at(ci, Representation::RawS21, li + 1)
            .per_seed.push_back(manual_accuracy(m_raw[ci], raw_noisy, nullptr));
      }
      rep.runtime.train_eval += now_s() - t0;
    }
  }
  if (rep.seeds_used.empty()) throw std::runtime_error("run_noise_bench: every seed aborted");
  rep.clean_fit_mse_mean = mse_sum / static_cast<double>(mse_n);
  for (const auto& [lvl, acc] : noisy_mse)
    rep.noisy_fit_mse_mean[lvl] = acc.first / static_cast<double>(acc.second);
  for (auto& c : rep.cells) aggregate(c);
  rep.runtime.total = now_s() - t_start;
  return rep;
}

std::string fit_overlay_csv(const BenchConfig& cfg) {
  cfg.require_valid();
  const FrequencyGrid grid = cfg.grid();
  PopulationSpec pop = cfg.population;
  pop.seed = derive(cfg.seeds.front(), 1);
  GeometrySampling gs = cfg.geometry;
  gs.seed = derive(cfg.seeds.front(), 2);
  const auto devices = sample_population(pop);
  const auto geoms = sample_geometries(gs);
  const auto ds = simulate_dataset(devices, geoms, 1, grid, pop.intra_device_jitter,
                                   cfg.electronics_gain, derive(cfg.seeds.front(), 3), cfg.exec);

  std::ostringstream os;
  os << "device,freq_hz,measured_db,fitted_db\n";
  // one sweep per device (first geometry)
  for (std::size_t di = 0; di < devices.size(); ++di) {
    const std::size_t idx = di * geoms.size();
    const auto fit = fit_sweep(ds.sweeps[idx], cfg.fit);
    const auto model = sweep_response(fit.params, fit.zeta, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << ds.labels[idx] << "," << fmt(grid.hz[i]) << ","
         << fmt(20.0 * std::log10(std::abs(ds.sweeps[idx].values[i]))) << ","
         << fmt(20.0 * std::log10(std::abs(model.values[i]))) << "\n";
    }
  }
  return os.str();
}

std::string parameter_scatter_csv(const BenchConfig& cfg) {
  cfg.require_valid();
  const FrequencyGrid grid = cfg.grid();
  PopulationSpec pop = cfg.population;
  pop.seed = derive(cfg.seeds.front(), 1);
  GeometrySampling gs = cfg.geometry;
  gs.seed = derive(cfg.seeds.front(), 2);
  const auto devices = sample_population(pop);
  const auto geoms = sample_geometries(gs);
  const auto ds = simulate_dataset(devices, geoms, cfg.reps, grid, pop.intra_device_jitter,
                                   cfg.electronics_gain, derive(cfg.seeds.front(), 3), cfg.exec);
  const auto fits = fit_dataset(ds.sweeps, cfg.fit, cfg.exec);

  std::ostringstream os;
  os << "device,r_c_ohm,c_j_f,r_q_ohm,c_q_f,zeta,mse,converged\n";
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    os << ds.labels[i] << "," << fmt(f.params.r_c) << "," << fmt(f.params.c_j) << ","
       << fmt(f.params.r_q) << "," << fmt(f.params.c_q) << "," << fmt(f.zeta.zeta) << ","
       << fmt(f.mse) << "," << (f.converged ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace ofp

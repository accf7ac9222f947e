// Times the data-parallel kernels (dataset synthesis, dataset fitting,
// noise injection) in serial reference mode against the OpenMP path and
// checks that both produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "ofp/extract.hpp"
#include "ofp/synth.hpp"

using namespace ofp;

namespace {

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

template <class Fn>
double timed(Fn&& fn) {
  const double t0 = now_s();
  fn();
  return now_s() - t0;
}

}  // namespace

int main() {
  PopulationSpec pop;
  GeometrySampling gs;
  const FrequencyGrid grid = FrequencyGrid::log_spaced(1e5, 1e8, 750);
  const auto devices = sample_population(pop);
  const auto geoms = sample_geometries(gs);

  std::printf("kernel                  serial_s  openmp_s  speedup  identical\n");

  SweepDataset ds_s, ds_p;
  const double t_synth_s = timed([&] {
    ds_s = simulate_dataset(devices, geoms, 10, grid, pop.intra_device_jitter,
                            kDefaultElectronicsGain, 42, ExecMode::Serial);
  });
  const double t_synth_p = timed([&] {
    ds_p = simulate_dataset(devices, geoms, 10, grid, pop.intra_device_jitter,
                            kDefaultElectronicsGain, 42, ExecMode::Parallel);
  });
  bool same = ds_s.sweeps.size() == ds_p.sweeps.size();
  for (std::size_t i = 0; same && i < ds_s.sweeps.size(); ++i)
    same = ds_s.sweeps[i].values == ds_p.sweeps[i].values;
  std::printf("simulate_dataset        %8.3f  %8.3f  %7.2f  %s\n", t_synth_s, t_synth_p,
              t_synth_s / t_synth_p, same ? "yes" : "NO");

  std::vector<S21Sweep> noisy_s(ds_s.sweeps.size()), noisy_p(ds_s.sweeps.size());
  const double t_noise_s = timed([&] {
    for (std::size_t i = 0; i < ds_s.sweeps.size(); ++i)
      noisy_s[i] = add_noise(ds_s.sweeps[i], -40.0, -5.0, 1000 + i);
  });
  const double t_noise_p = timed([&] {
    parallel_for(ds_s.sweeps.size(), ExecMode::Parallel, [&](std::size_t i) {
      noisy_p[i] = add_noise(ds_s.sweeps[i], -40.0, -5.0, 1000 + i);
    });
  });
  same = true;
  for (std::size_t i = 0; same && i < noisy_s.size(); ++i)
    same = noisy_s[i].values == noisy_p[i].values;
  std::printf("add_noise               %8.3f  %8.3f  %7.2f  %s\n", t_noise_s, t_noise_p,
              t_noise_s / t_noise_p, same ? "yes" : "NO");

  std::vector<FitResult> fit_s, fit_p;
  const double t_fit_s = timed([&] { fit_s = fit_dataset(noisy_s, FitOptions{}, ExecMode::Serial); });
  const double t_fit_p =
      timed([&] { fit_p = fit_dataset(noisy_s, FitOptions{}, ExecMode::Parallel); });
  same = fit_s.size() == fit_p.size();
  for (std::size_t i = 0; same && i < fit_s.size(); ++i)
    same = fit_s[i].params.r_c == fit_p[i].params.r_c &&
           fit_s[i].params.c_j == fit_p[i].params.c_j &&
           fit_s[i].params.r_q == fit_p[i].params.r_q &&
           fit_s[i].params.c_q == fit_p[i].params.c_q && fit_s[i].mse == fit_p[i].mse;
  std::printf("fit_dataset             %8.3f  %8.3f  %7.2f  %s\n", t_fit_s, t_fit_p,
              t_fit_s / t_fit_p, same ? "yes" : "NO");
  return 0;
}

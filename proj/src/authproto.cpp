#include "ofp/authproto.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ofp/rng.hpp"

namespace ofp {

namespace {

std::vector<double> fp_row(const OpticFingerprint& fp) { return {fp.r_c, fp.c_j, fp.r_q}; }

double zdistance(const std::vector<double>& z, const std::vector<double>& centroid) {
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double e = z[j] - centroid[j];
    s += e * e;
  }
  return std::sqrt(s);
}

bool fp_ok(const OpticFingerprint& fp) { return fp.valid(); }

}  // namespace

std::string auth_reason_name(AuthReason r) {
  switch (r) {
    case AuthReason::Accepted: return "accepted";
    case AuthReason::UnknownId: return "unknown id";
    case AuthReason::ClassifierMismatch: return "classifier mismatch";
    case AuthReason::DistanceExceeded: return "distance exceeded";
    case AuthReason::DuplicateId: return "duplicate id";
    case AuthReason::MalformedFingerprint: return "malformed fingerprint";
  }
  return "?";
}

std::string message_kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::OFReport: return "OFReport";
    case MessageKind::VerifyRequest: return "VerifyRequest";
    case MessageKind::VerifyResult: return "VerifyResult";
    case MessageKind::AccessDecision: return "AccessDecision";
    case MessageKind::RegistrationRequest: return "RegistrationRequest";
    case MessageKind::RegistrationResult: return "RegistrationResult";
    case MessageKind::Alert: return "Alert";
  }
  return "?";
}

double calibrate_threshold(FingerprintDatabase& db) {
  std::vector<double> dists;
  for (const auto& [id, fps] : db.entries) {
    if (fps.size() < 5)
      throw std::invalid_argument("calibrate_threshold: id '" + id +
                                  "' has fewer than 5 fingerprints");
    const auto& centroid = db.centroids.at(id);
    for (const auto& fp : fps)
      dists.push_back(zdistance(db.normalizer.apply(fp_row(fp)), centroid));
  }
  if (dists.empty()) throw std::invalid_argument("calibrate_threshold: empty database");
  std::sort(dists.begin(), dists.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(dists.size())));
  db.tau = dists[std::min(std::max<std::size_t>(rank, 1), dists.size()) - 1];
  return db.tau;
}

void rebuild_database(FingerprintDatabase& db) {
  db.centroids.clear();
  db.trained = false;
  if (db.entries.empty()) return;

  FeatureMatrix all;
  all.dim = 3;
  for (const auto& [id, fps] : db.entries)
    for (const auto& fp : fps) {
      all.rows.push_back(fp_row(fp));
      all.labels.push_back(id);
    }
  db.normalizer = fit_normalizer(all);

  for (const auto& [id, fps] : db.entries) {
    std::vector<double> c(3, 0.0);
    for (const auto& fp : fps) {
      const auto z = db.normalizer.apply(fp_row(fp));
      for (int j = 0; j < 3; ++j) c[static_cast<std::size_t>(j)] += z[static_cast<std::size_t>(j)];
    }
    for (auto& v : c) v /= static_cast<double>(fps.size());
    db.centroids[id] = c;
  }

  if (db.entries.size() >= 2) {
    db.model = train_classifier(db.model_kind, db.normalizer.apply(all), db.hyper);
    db.trained = true;
    calibrate_threshold(db);
  }
}

Verdict verify(const FingerprintDatabase& db, const std::string& claimed_id,
               const OpticFingerprint& fp) {
  Verdict v;
  if (!fp_ok(fp)) {
    v.reason = AuthReason::MalformedFingerprint;
    return v;
  }
  auto it = db.entries.find(claimed_id);
  if (it == db.entries.end() || !db.trained) {
    v.reason = AuthReason::UnknownId;
    return v;
  }
  const auto z = db.normalizer.apply(fp_row(fp));
  v.distance = zdistance(z, db.centroids.at(claimed_id));
  const Prediction p = predict(db.model, z);
  v.matched_id = p.label;
  v.score = p.score;
  if (p.label != claimed_id) {
    v.reason = AuthReason::ClassifierMismatch;
    return v;
  }
  if (v.distance > db.tau) {
    v.reason = AuthReason::DistanceExceeded;
    return v;
  }
  v.accepted = true;
  v.reason = AuthReason::Accepted;
  return v;
}

RegistrationOutcome register_device(FingerprintDatabase& db, const std::string& id,
                                    const std::vector<OpticFingerprint>& fps) {
  RegistrationOutcome out;
  out.version = db.version;
  if (db.entries.count(id)) {
    out.reason = AuthReason::DuplicateId;
    return out;
  }
  if (fps.size() < 5)
    throw std::invalid_argument("register_device: need at least 5 fingerprints");
  for (const auto& fp : fps)
    if (!fp_ok(fp)) {
      out.reason = AuthReason::MalformedFingerprint;
      return out;
    }
  db.entries[id] = fps;
  rebuild_database(db);
  ++db.version;
  out.accepted = true;
  out.reason = AuthReason::Accepted;
  out.version = db.version;
  return out;
}

namespace {

/// Measurement simulator shared by provisioning and events: draws a fresh
/// geometry, jitters the device, sweeps, optionally adds noise, and fits.
struct MeasurementRig {
  const Scenario* sc;
  std::vector<DeviceGroundTruth> devices;
  FrequencyGrid grid;
  Rng root;

  explicit MeasurementRig(const Scenario& s)
      : sc(&s),
        devices(sample_population(s.population)),
        grid(FrequencyGrid::log_spaced(s.f_min, s.f_max, s.grid_points)),
        root(s.seed) {}

  int device_index(const std::string& id) const {
    for (std::size_t i = 0; i < devices.size(); ++i)
      if (devices[i].device_id == id) return static_cast<int>(i);
    return -1;
  }

  /// counter must be unique per measurement; the stream only depends on
  /// (seed, device, counter).
  std::optional<OpticFingerprint> measure(int dev_idx, std::uint64_t counter) const {
    Rng rng = root.child(static_cast<std::uint64_t>(dev_idx) * 0x10001ULL + counter);
    const auto& gs = sc->geometry;
    ChannelGeometry g;
    g.d = rng.uniform(gs.d_min, gs.d_max);
    g.phi = rng.uniform(0.0, gs.angle_max);
    g.psi = rng.uniform(0.0, gs.angle_max);
    g.phi_half = gs.phi_half;
    g.a_r = gs.a_r;
    g.g_psi = gs.g_psi;

    const double j = sc->population.intra_device_jitter;
    CircuitParams base = devices[static_cast<std::size_t>(dev_idx)].true_params;
    CircuitParams p;
    p.r_c = base.r_c * (1.0 + rng.uniform(-j, j));
    p.c_j = base.c_j * (1.0 + rng.uniform(-j, j));
    p.r_q = base.r_q * (1.0 + rng.uniform(-j, j));
    p.c_q = base.c_q * (1.0 + rng.uniform(-j, j));

    S21Sweep sw = sweep_response(p, zeta_for(g, sc->electronics_gain), grid);
    if (sc->measurement_noise_dbm != kNoiseOff)
      sw = add_noise(sw, sc->measurement_noise_dbm, sc->signal_power_dbm, rng.raw());
    const FitResult fit = fit_sweep(sw, sc->fit);
    if (!fit.converged) return std::nullopt;
    return fingerprint(fit);
  }
};

struct Sequencer {
  std::map<std::string, std::uint64_t> next;
  std::uint64_t take(const std::string& sender) { return ++next[sender]; }
};

}  // namespace

Transcript run_scenario(const Scenario& sc, FingerprintDatabase* db_out) {
  MeasurementRig rig(sc);
  FingerprintDatabase db;
  db.model_kind = sc.model_kind;

  // Pre-provisioned users: cataloged directly, no protocol traffic.
  std::uint64_t counter = 0;
  for (const auto& id : sc.registered) {
    const int di = rig.device_index(id);
    if (di < 0) throw std::invalid_argument("run_scenario: unknown registered id " + id);
    std::vector<OpticFingerprint> fps;
    for (int s = 0; s < sc.registration_samples; ++s)
      if (auto fp = rig.measure(di, counter++)) fps.push_back(*fp);
    register_device(db, id, fps);
  }

  // stable order on (time, position)
  std::vector<std::size_t> order(sc.events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sc.events[a].time < sc.events[b].time;
  });

  Transcript tr;
  Sequencer seq;
  auto emit = [&](AuthMessage m) {
    m.seq = seq.take(m.sender);
    tr.messages.push_back(std::move(m));
  };

  for (std::size_t ev_i : order) {
    const ScenarioEvent& ev = sc.events[ev_i];
    const std::uint64_t corr = ev_i;
    const int di = rig.device_index(ev.device);
    if (di < 0) throw std::invalid_argument("run_scenario: unknown device " + ev.device);

    if (ev.kind == "verify") {
      const std::string claim = ev.claim.empty() ? ev.device : ev.claim;
      const auto fp = rig.measure(di, counter++);
      OpticFingerprint report = fp.value_or(OpticFingerprint{0.0, 0.0, 0.0});

      emit({MessageKind::OFReport, "UE:" + ev.device, "AP", 0, corr, claim, ev.device, report,
            std::nullopt, ""});
      emit({MessageKind::VerifyRequest, "AP", "SVS", 0, corr, claim, ev.device, report,
            std::nullopt, ""});
      const Verdict v = fp ? verify(db, claim, report)
                           : Verdict{false, std::nullopt, 0.0, 0.0,
                                     AuthReason::MalformedFingerprint};
      emit({MessageKind::VerifyResult, "SVS", "NMS", 0, corr, claim, ev.device, std::nullopt, v,
            v.accepted ? "accept" : "reject"});
      if (v.accepted) {
        emit({MessageKind::AccessDecision, "NMS", "ACS", 0, corr, claim, ev.device, std::nullopt,
              v, "grant"});
      } else {
        emit({MessageKind::Alert, "NMS", "ISE", 0, corr, claim, ev.device, std::nullopt, v,
              auth_reason_name(v.reason)});
      }

      const bool genuine = db.entries.count(ev.device) && claim == ev.device;
      if (genuine) {
        ++tr.summary.genuine_trials;
        if (v.accepted) ++tr.summary.genuine_accepts;
      } else {
        ++tr.summary.impostor_trials;
        if (v.accepted) ++tr.summary.impostor_accepts;
      }
    } else if (ev.kind == "register") {
      const std::string new_id = ev.claim.empty() ? ev.device : ev.claim;
      const int samples = ev.samples > 0 ? ev.samples : sc.registration_samples;
      std::vector<OpticFingerprint> fps;
      for (int s = 0; s < samples; ++s)
        if (auto fp = rig.measure(di, counter++)) fps.push_back(*fp);

      emit({MessageKind::RegistrationRequest, "AP", "SVS", 0, corr, new_id, ev.device,
            fps.empty() ? std::nullopt : std::optional<OpticFingerprint>(fps.front()),
            std::nullopt, ""});
      RegistrationOutcome out;
      if (fps.size() < 5) {
        out.accepted = false;
        out.reason = AuthReason::MalformedFingerprint;
        out.version = db.version;
      } else {
        out = register_device(db, new_id, fps);
      }
      emit({MessageKind::RegistrationResult, "SVS", "NMS", 0, corr, new_id, ev.device,
            std::nullopt, std::nullopt, out.accepted ? "accept" : auth_reason_name(out.reason)});
      if (out.accepted) {
        ++tr.summary.registrations;
        emit({MessageKind::AccessDecision, "NMS", "ISE", 0, corr, new_id, ev.device, std::nullopt,
              std::nullopt, "provision"});
      } else {
        ++tr.summary.registration_rejects;
        emit({MessageKind::Alert, "NMS", "ISE", 0, corr, new_id, ev.device, std::nullopt,
              std::nullopt, auth_reason_name(out.reason)});
      }
    } else {
      throw std::invalid_argument("run_scenario: unknown event kind '" + ev.kind + "'");
    }
  }

  if (db_out) *db_out = db;
  return tr;
}

}  // namespace ofp

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

/// Registered fingerprint store plus the matching machinery derived from it.
/// Every mutation retrains the classifier, refits the normalizer and
/// recalibrates tau; version counts mutations.
struct FingerprintDatabase {
  std::map<std::string, std::vector<OpticFingerprint>> entries;
  Normalizer normalizer;
  ClassifierModel model;
  ClassifierKind model_kind = ClassifierKind::FineKnn;
  TrainHyper hyper;
  double tau = 0.0;  // z-space distance threshold
  std::uint64_t version = 0;
  bool trained = false;

  /// Per-id centroids in normalized space.
  std::map<std::string, std::vector<double>> centroids;
};

enum class AuthReason {
  Accepted,
  UnknownId,
  ClassifierMismatch,
  DistanceExceeded,
  DuplicateId,
  MalformedFingerprint,
};
std::string auth_reason_name(AuthReason r);

struct Verdict {
  bool accepted = false;
  std::optional<std::string> matched_id;  // classifier prediction
  double score = 0.0;
  double distance = 0.0;  // z-space distance to the claimed centroid
  AuthReason reason = AuthReason::UnknownId;
};

struct RegistrationOutcome {
  bool accepted = false;
  AuthReason reason = AuthReason::Accepted;
  std::uint64_t version = 0;
};

/// Rebuild normalizer, model, centroids and tau from the current entries.
/// Needs at least two registered ids with >= 5 fingerprints each before the
/// classifier trains; with fewer the database stays untrained and verify
/// rejects everything as unknown.
void rebuild_database(FingerprintDatabase& db);

/// tau = 99th percentile of within-device z-normalized distances to the own
/// centroid, pooled across devices. Percentile rule: ascending sort, rank
/// ceil(0.99 n). Requires >= 5 fingerprints per registered id.
double calibrate_threshold(FingerprintDatabase& db);

/// Dual acceptance criterion: the classifier must predict the claimed id and
/// the z-space distance to the claimed centroid must not exceed tau. Never
/// mutates the database.
Verdict verify(const FingerprintDatabase& db, const std::string& claimed_id,
               const OpticFingerprint& fp);

/// Add a new id with its fingerprints. Duplicate ids are rejected without
/// any change; success retrains the matcher and bumps version.
RegistrationOutcome register_device(FingerprintDatabase& db, const std::string& id,
                                    const std::vector<OpticFingerprint>& fps);

// --- scenario simulation -------------------------------------------------

/// One timed event. kind "verify": `device` measures a fingerprint and
/// claims `claim` (its own id when empty). kind "register": `device` asks to
/// join as `claim` (own id when empty) with `samples` measurements.
struct ScenarioEvent {
  double time = 0.0;
  std::string kind;
  std::string device;
  std::string claim;
  int samples = 0;
};

struct Scenario {
  std::uint64_t seed = 1;
  PopulationSpec population;       // includes devices never registered (Eves)
  GeometrySampling geometry;
  double electronics_gain = kDefaultElectronicsGain;
  double f_min = 1e5, f_max = 1e8;
  std::size_t grid_points = 750;
  FitOptions fit;
  double measurement_noise_dbm = kNoiseOff;
  double signal_power_dbm = -5.0;
  int registration_samples = 10;
  ClassifierKind model_kind = ClassifierKind::FineKnn;
  std::vector<std::string> registered;  // provisioned before events run
  std::vector<ScenarioEvent> events;
};

enum class MessageKind {
  OFReport,
  VerifyRequest,
  VerifyResult,
  AccessDecision,
  RegistrationRequest,
  RegistrationResult,
  Alert,
};
std::string message_kind_name(MessageKind k);

struct AuthMessage {
  MessageKind kind;
  std::string sender;
  std::string receiver;
  std::uint64_t seq;          // strictly increasing per sender
  std::uint64_t correlation;  // event index the message belongs to
  std::string claimed_id;
  std::string subject_id;     // reporting device (verify) or new id (register)
  std::optional<OpticFingerprint> fp;
  std::optional<Verdict> verdict;
  std::string note;           // "grant", "provision", or a reject reason
};

struct TranscriptSummary {
  int genuine_trials = 0;
  int genuine_accepts = 0;
  int impostor_trials = 0;
  int impostor_accepts = 0;
  int registrations = 0;
  int registration_rejects = 0;
  double far() const {
    return impostor_trials ? static_cast<double>(impostor_accepts) / impostor_trials : 0.0;
  }
  double frr() const {
    return genuine_trials
               ? 1.0 - static_cast<double>(genuine_accepts) / genuine_trials
               : 0.0;
  }
};

struct Transcript {
  std::vector<AuthMessage> messages;
  TranscriptSummary summary;
};

/// Execute the AP -> SVS -> NMS -> ACS/ISE message flow for every event in
/// simulated time order. Deterministic in (scenario, seed). If db_out is
/// given it receives the final database state.
Transcript run_scenario(const Scenario& sc, FingerprintDatabase* db_out = nullptr);

}  // namespace ofp

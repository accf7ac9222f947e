#include "ofp/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ofp {

namespace {

using ordered_json = nlohmann::ordered_json;
using njson = nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

void check_keys(const njson& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::runtime_error("unknown key '" + it.key() + "' in " + ctx);
  }
}

double fnum(const njson& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool has_suffix(const std::string& s, const std::string& suf) {
  if (s.size() < suf.size()) return false;
  for (std::size_t i = 0; i < suf.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suf.size() + i])) != suf[i])
      return false;
  return true;
}

S21Sweep read_touchstone(const std::filesystem::path& path) {
  if (!has_suffix(path.string(), ".s2p"))
    throw std::runtime_error(path.string() + ": only 2-port Touchstone files are supported");
  std::istringstream in(slurp(path));

  double unit = 1e9;  // Touchstone default GHz
  enum class Fmt { RI, MA, DB } fmt = Fmt::MA;
  bool option_seen = false;

  S21Sweep sweep;
  std::string line;
  std::size_t lineno = 0;
  double prev_f = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto bang = line.find('!');
    if (bang != std::string::npos) line.erase(bang);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;

    if (first == "#") {
      if (option_seen) line_error(path, lineno, "duplicate option line");
      option_seen = true;
      std::string tok;
      while (ls >> tok) {
        std::string up;
        for (char c : tok) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up == "HZ") unit = 1.0;
        else if (up == "KHZ") unit = 1e3;
        else if (up == "MHZ") unit = 1e6;
        else if (up == "GHZ") unit = 1e9;
        else if (up == "RI") fmt = Fmt::RI;
        else if (up == "MA") fmt = Fmt::MA;
        else if (up == "DB") fmt = Fmt::DB;
        else if (up == "S") { /* parameter type */ }
        else if (up == "R") { ls >> tok; /* reference impedance */ }
        else line_error(path, lineno, "unsupported option token '" + tok + "'");
      }
      continue;
    }

    // data record: freq + 4 value pairs on one line
    std::vector<double> nums;
    ls.clear();
    ls.str(line);
    double v;
    while (ls >> v) nums.push_back(v);
    if (!ls.eof()) line_error(path, lineno, "malformed Touchstone row");
    if (nums.size() != 9)
      line_error(path, lineno, "expected 9 values for a 2-port record, got " +
                                   std::to_string(nums.size()));
    const double f = nums[0] * unit;
    if (!(f > prev_f)) line_error(path, lineno, "frequency not strictly increasing");
    prev_f = f;
    const double a = nums[3], b = nums[4];  // S21 pair: S11 S21 S12 S22 order
    std::complex<double> s21;
    switch (fmt) {
      case Fmt::RI: s21 = {a, b}; break;
      case Fmt::MA: s21 = std::polar(a, b * 3.14159265358979323846 / 180.0); break;
      case Fmt::DB: s21 = std::polar(std::pow(10.0, a / 20.0), b * 3.14159265358979323846 / 180.0); break;
    }
    sweep.grid.hz.push_back(f);
    sweep.values.push_back(s21);
  }
  if (sweep.grid.hz.size() < 2) throw std::runtime_error(path.string() + ": too few data rows");
  sweep.require_valid();
  return sweep;
}

void parse_geometry_header(const std::string& text, S21Sweep& sweep,
                           const std::filesystem::path& path, std::size_t lineno) {
  ChannelGeometry g{};
  std::istringstream ss(text);
  std::string kv;
  int fields = 0;
  while (ss >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) line_error(path, lineno, "bad geometry field '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const double val = std::stod(kv.substr(eq + 1));
    if (key == "d") g.d = val;
    else if (key == "phi") g.phi = val;
    else if (key == "psi") g.psi = val;
    else if (key == "phi_half") g.phi_half = val;
    else if (key == "a_r") g.a_r = val;
    else if (key == "g_psi") g.g_psi = val;
    else line_error(path, lineno, "unknown geometry field '" + key + "'");
    ++fields;
  }
  if (fields != 6) line_error(path, lineno, "geometry header needs 6 fields");
  sweep.geometry = g;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

S21Sweep read_sweep(const std::filesystem::path& path) {
  const std::string name = path.string();
  if (has_suffix(name, ".s2p") || has_suffix(name, ".s1p")) return read_touchstone(path);

  std::istringstream in(slurp(path));
  S21Sweep sweep;
  std::string line;
  std::size_t lineno = 0;
  double prev_f = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(1);
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;  // banner line
      std::string key = body.substr(0, colon);
      std::string val = body.substr(colon + 1);
      auto trim = [](std::string& s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
      };
      trim(key);
      trim(val);
      if (key == "device_id") sweep.device_id = val;
      else if (key == "geometry") parse_geometry_header(val, sweep, path, lineno);
      else if (key == "noise_power_dbm") sweep.noise_power_dbm = std::stod(val);
      else if (key == "signal_power_dbm") sweep.signal_power_dbm = std::stod(val);
      else line_error(path, lineno, "unknown header key '" + key + "'");
      continue;
    }
    if (line.rfind("freq_hz", 0) == 0) continue;  // column header

    double f, re, im;
    char extra;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf %c", &f, &re, &im, &extra) != 3)
      line_error(path, lineno, "malformed row (expected freq_hz,s21_real,s21_imag)");
    if (!(f > prev_f)) line_error(path, lineno, "frequency not strictly increasing");
    prev_f = f;
    sweep.grid.hz.push_back(f);
    sweep.values.emplace_back(re, im);
  }
  if (sweep.grid.hz.size() < 2) throw std::runtime_error(name + ": too few data rows");
  sweep.require_valid();
  return sweep;
}

void write_sweep(const std::filesystem::path& path, const S21Sweep& sweep) {
  sweep.require_valid();
  std::ostringstream os;
  os << "# ofp-sweep v1\n";
  if (sweep.device_id) os << "# device_id: " << *sweep.device_id << "\n";
  if (sweep.geometry) {
    const auto& g = *sweep.geometry;
    os << "# geometry: d=" << fmt17(g.d) << " phi=" << fmt17(g.phi) << " psi=" << fmt17(g.psi)
       << " phi_half=" << fmt17(g.phi_half) << " a_r=" << fmt17(g.a_r)
       << " g_psi=" << fmt17(g.g_psi) << "\n";
  }
  if (sweep.noise_power_dbm) os << "# noise_power_dbm: " << fmt17(*sweep.noise_power_dbm) << "\n";
  os << "# signal_power_dbm: " << fmt17(sweep.signal_power_dbm) << "\n";
  os << "freq_hz,s21_real,s21_imag\n";
  for (std::size_t i = 0; i < sweep.size(); ++i)
    os << fmt17(sweep.grid.hz[i]) << "," << fmt17(sweep.values[i].real()) << ","
       << fmt17(sweep.values[i].imag()) << "\n";
  atomic_write(path, os.str());
}

FingerprintRecord read_fingerprint(const std::filesystem::path& path) {
  njson j = njson::parse(slurp(path));
  check_keys(j, {"format", "version", "device_id", "r_c_ohm", "c_j_f", "r_q_ohm", "c_q_f",
                 "zeta", "mse", "iterations", "converged"},
             path.string());
  if (j.value("format", "") != "ofp-fingerprint" || j.value("version", 0) != 1)
    throw std::runtime_error(path.string() + ": not an ofp-fingerprint v1 file");
  FingerprintRecord rec;
  rec.fp = {j.at("r_c_ohm").get<double>(), j.at("c_j_f").get<double>(),
            j.at("r_q_ohm").get<double>()};
  rec.c_q = fnum(j, "c_q_f", 0.0);
  rec.zeta = fnum(j, "zeta", 0.0);
  rec.mse = fnum(j, "mse", 0.0);
  rec.iterations = j.value("iterations", 0);
  rec.converged = j.value("converged", false);
  rec.device_id = j.value("device_id", "");
  return rec;
}

void write_fingerprint(const std::filesystem::path& path, const FingerprintRecord& rec) {
  ordered_json j;
  j["format"] = "ofp-fingerprint";
  j["version"] = 1;
  if (!rec.device_id.empty()) j["device_id"] = rec.device_id;
  j["r_c_ohm"] = rec.fp.r_c;
  j["c_j_f"] = rec.fp.c_j;
  j["r_q_ohm"] = rec.fp.r_q;
  j["c_q_f"] = rec.c_q;
  j["zeta"] = rec.zeta;
  j["mse"] = rec.mse;
  j["iterations"] = rec.iterations;
  j["converged"] = rec.converged;
  atomic_write(path, j.dump(2) + "\n");
}

// --- database -------------------------------------------------------------

namespace {

ordered_json tree_json(const DecisionTree& t) {
  ordered_json arr = ordered_json::array();
  for (const auto& n : t.nodes)
    arr.push_back({n.feature, n.threshold, n.left, n.right, n.label, n.purity});
  return arr;
}

DecisionTree tree_from_json(const njson& arr) {
  DecisionTree t;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 6) throw std::runtime_error("corrupt tree node");
    t.nodes.push_back({e[0].get<int>(), e[1].get<double>(), e[2].get<int>(), e[3].get<int>(),
                       e[4].get<int>(), e[5].get<double>()});
  }
  if (t.nodes.empty()) throw std::runtime_error("corrupt tree: empty");
  return t;
}

ordered_json model_json(const ClassifierModel& m) {
  ordered_json j;
  j["kind"] = classifier_name(m.kind);
  j["classes"] = m.classes;
  j["dim"] = m.dim;
  switch (m.kind) {
    case ClassifierKind::FineTree: j["tree"] = tree_json(m.tree); break;
    case ClassifierKind::FineKnn:
      j["k"] = m.knn_k;
      j["rows"] = m.knn_rows;
      j["labels"] = m.knn_labels;
      break;
    case ClassifierKind::GaussianNB:
      j["priors"] = m.nb_priors;
      j["means"] = m.nb_means;
      j["vars"] = m.nb_vars;
      break;
    case ClassifierKind::BaggedTrees: {
      ordered_json bag = ordered_json::array();
      for (const auto& t : m.bag) bag.push_back(tree_json(t));
      j["bag"] = bag;
      break;
    }
  }
  return j;
}

ClassifierModel model_from_json(const njson& j) {
  ClassifierModel m;
  m.kind = classifier_from_name(j.at("kind").get<std::string>());
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.dim = j.at("dim").get<std::size_t>();
  switch (m.kind) {
    case ClassifierKind::FineTree: m.tree = tree_from_json(j.at("tree")); break;
    case ClassifierKind::FineKnn:
      m.knn_k = j.at("k").get<int>();
      m.knn_rows = j.at("rows").get<std::vector<std::vector<double>>>();
      m.knn_labels = j.at("labels").get<std::vector<int>>();
      break;
    case ClassifierKind::GaussianNB:
      m.nb_priors = j.at("priors").get<std::vector<double>>();
      m.nb_means = j.at("means").get<std::vector<std::vector<double>>>();
      m.nb_vars = j.at("vars").get<std::vector<std::vector<double>>>();
      break;
    case ClassifierKind::BaggedTrees:
      for (const auto& t : j.at("bag")) m.bag.push_back(tree_from_json(t));
      break;
  }
  return m;
}

}  // namespace

FingerprintDatabase read_db(const std::filesystem::path& path) {
  njson j = njson::parse(slurp(path));
  if (!j.contains("format") || !j.contains("version"))
    throw std::runtime_error(path.string() + ": version field missing");
  if (j.at("format").get<std::string>() != "ofp-db")
    throw std::runtime_error(path.string() + ": not an ofp-db file");
  check_keys(j, {"format", "version", "model_kind", "tau", "trained", "hyper", "normalizer",
                 "centroids", "model", "entries"},
             path.string());

  FingerprintDatabase db;
  db.version = j.at("version").get<std::uint64_t>();
  db.model_kind = classifier_from_name(j.value("model_kind", "fine-knn"));
  db.tau = j.value("tau", 0.0);
  db.trained = j.value("trained", false);
  if (j.contains("hyper")) {
    const auto& h = j.at("hyper");
    check_keys(h, {"max_leaves", "k", "n_bagged_trees", "seed"}, "hyper");
    db.hyper.max_leaves = h.value("max_leaves", 100);
    db.hyper.k = h.value("k", 1);
    db.hyper.n_bagged_trees = h.value("n_bagged_trees", 30);
    db.hyper.seed = h.value("seed", 0ULL);
  }
  if (j.contains("normalizer")) {
    const auto& n = j.at("normalizer");
    check_keys(n, {"mean", "std", "degenerate"}, "normalizer");
    db.normalizer.mean = n.at("mean").get<std::vector<double>>();
    db.normalizer.stddev = n.at("std").get<std::vector<double>>();
    db.normalizer.degenerate = n.at("degenerate").get<std::vector<bool>>();
  }
  if (j.contains("centroids"))
    for (auto it = j.at("centroids").begin(); it != j.at("centroids").end(); ++it)
      db.centroids[it.key()] = it.value().get<std::vector<double>>();
  if (j.contains("model") && !j.at("model").is_null()) db.model = model_from_json(j.at("model"));
  if (j.contains("entries")) {
    for (auto it = j.at("entries").begin(); it != j.at("entries").end(); ++it) {
      std::vector<OpticFingerprint> fps;
      for (const auto& row : it.value()) {
        if (!row.is_array() || row.size() != 3)
          throw std::runtime_error(path.string() + ": corrupt fingerprint entry for " + it.key());
        OpticFingerprint fp{row[0].get<double>(), row[1].get<double>(), row[2].get<double>()};
        fp.require_valid();
        fps.push_back(fp);
      }
      if (fps.empty())
        throw std::runtime_error(path.string() + ": empty fingerprint list for " + it.key());
      db.entries[it.key()] = std::move(fps);
    }
  }
  return db;
}

void write_db(const std::filesystem::path& path, const FingerprintDatabase& db) {
  ordered_json j;
  j["format"] = "ofp-db";
  j["version"] = db.version;
  j["model_kind"] = classifier_name(db.model_kind);
  j["tau"] = db.tau;
  j["trained"] = db.trained;
  j["hyper"] = {{"max_leaves", db.hyper.max_leaves},
                {"k", db.hyper.k},
                {"n_bagged_trees", db.hyper.n_bagged_trees},
                {"seed", db.hyper.seed}};
  j["normalizer"] = {{"mean", db.normalizer.mean},
                     {"std", db.normalizer.stddev},
                     {"degenerate", db.normalizer.degenerate}};
  ordered_json cents = ordered_json::object();
  for (const auto& [id, c] : db.centroids) cents[id] = c;
  j["centroids"] = cents;
  j["model"] = db.trained ? model_json(db.model) : ordered_json(nullptr);
  ordered_json entries = ordered_json::object();
  for (const auto& [id, fps] : db.entries) {
    ordered_json arr = ordered_json::array();
    for (const auto& fp : fps) arr.push_back({fp.r_c, fp.c_j, fp.r_q});
    entries[id] = arr;
  }
  j["entries"] = entries;
  atomic_write(path, j.dump(2) + "\n");
}

// --- config ----------------------------------------------------------------

namespace {

CircuitParams parse_nominal(const njson& j) {
  check_keys(j, {"r_c", "c_j", "r_q", "c_q"}, "population.nominal");
  CircuitParams d = CircuitParams::nominal();
  return {fnum(j, "r_c", d.r_c), fnum(j, "c_j", d.c_j), fnum(j, "r_q", d.r_q),
          fnum(j, "c_q", d.c_q)};
}

PopulationSpec parse_population(const njson& j) {
  check_keys(j,
             {"n_devices", "nominal", "tolerance", "tolerance_overrides", "intra_device_jitter",
              "seed"},
             "population");
  PopulationSpec p;
  p.n_devices = j.value("n_devices", p.n_devices);
  if (j.contains("nominal")) p.nominal = parse_nominal(j.at("nominal"));
  p.tolerance = fnum(j, "tolerance", p.tolerance);
  p.intra_device_jitter = fnum(j, "intra_device_jitter", p.intra_device_jitter);
  p.seed = j.value("seed", p.seed);
  if (j.contains("tolerance_overrides")) {
    const auto& o = j.at("tolerance_overrides");
    check_keys(o, {"r_c", "c_j", "r_q", "c_q"}, "population.tolerance_overrides");
    ParamSpread s{p.tolerance, p.tolerance, p.tolerance, p.tolerance};
    s.r_c = fnum(o, "r_c", s.r_c);
    s.c_j = fnum(o, "c_j", s.c_j);
    s.r_q = fnum(o, "r_q", s.r_q);
    s.c_q = fnum(o, "c_q", s.c_q);
    p.tolerance_overrides = s;
  }
  return p;
}

GeometrySampling parse_geometry(const njson& j) {
  check_keys(j, {"n_positions", "d_min", "d_max", "angle_max", "phi_half", "a_r", "g_psi", "seed"},
             "geometry");
  GeometrySampling g;
  g.n_positions = j.value("n_positions", g.n_positions);
  g.d_min = fnum(j, "d_min", g.d_min);
  g.d_max = fnum(j, "d_max", g.d_max);
  g.angle_max = fnum(j, "angle_max", g.angle_max);
  g.phi_half = fnum(j, "phi_half", g.phi_half);
  g.a_r = fnum(j, "a_r", g.a_r);
  g.g_psi = fnum(j, "g_psi", g.g_psi);
  g.seed = j.value("seed", g.seed);
  return g;
}

FitOptions parse_fit(const njson& j, const CircuitParams& nominal) {
  check_keys(j, {"max_iterations", "mse_tolerance", "step_tolerance", "damping_init", "use_phase"},
             "fit");
  FitOptions f;
  f.max_iterations = j.value("max_iterations", f.max_iterations);
  f.mse_tolerance = fnum(j, "mse_tolerance", f.mse_tolerance);
  f.step_tolerance = fnum(j, "step_tolerance", f.step_tolerance);
  f.damping_init = fnum(j, "damping_init", f.damping_init);
  f.use_phase = j.value("use_phase", f.use_phase);
  f.nominal = nominal;
  return f;
}

}  // namespace

BenchConfig ToolkitConfig::bench() const {
  BenchConfig b;
  b.population = population;
  b.geometry = geometry;
  b.reps = reps;
  b.electronics_gain = electronics_gain;
  b.f_min = f_min;
  b.f_max = f_max;
  b.grid_points = grid_points;
  b.noise_levels_dbm = noise_levels_dbm;
  b.signal_power_dbm = signal_power_dbm;
  b.classifiers = classifiers;
  b.train_fraction = train_fraction;
  b.seeds = seeds;
  b.fit = fit;
  return b;
}

ToolkitConfig parse_config(const std::string& text, const std::string& origin) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  check_keys(j,
             {"format", "version", "population", "geometry", "electronics_gain", "grid", "reps",
              "fit", "classifiers", "noise", "split", "seeds"},
             origin);
  if (j.contains("format") && j.at("format").get<std::string>() != "ofp-config")
    throw std::runtime_error(origin + ": not an ofp-config file");

  ToolkitConfig c;
  if (j.contains("population")) c.population = parse_population(j.at("population"));
  if (j.contains("geometry")) c.geometry = parse_geometry(j.at("geometry"));
  c.electronics_gain = fnum(j, "electronics_gain", c.electronics_gain);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"f_min_hz", "f_max_hz", "points"}, "grid");
    c.f_min = fnum(g, "f_min_hz", c.f_min);
    c.f_max = fnum(g, "f_max_hz", c.f_max);
    c.grid_points = g.value("points", c.grid_points);
  }
  c.reps = j.value("reps", c.reps);
  c.fit = parse_fit(j.contains("fit") ? j.at("fit") : njson::object(), c.population.nominal);
  if (j.contains("classifiers")) {
    c.classifiers.clear();
    for (const auto& name : j.at("classifiers"))
      c.classifiers.push_back(classifier_from_name(name.get<std::string>()));
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    check_keys(n, {"levels_dbm", "signal_power_dbm"}, "noise");
    if (n.contains("levels_dbm")) c.noise_levels_dbm = n.at("levels_dbm").get<std::vector<double>>();
    c.signal_power_dbm = fnum(n, "signal_power_dbm", c.signal_power_dbm);
  }
  if (j.contains("split")) {
    check_keys(j.at("split"), {"train_fraction"}, "split");
    c.train_fraction = fnum(j.at("split"), "train_fraction", c.train_fraction);
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return c;
}

ToolkitConfig read_config(const std::filesystem::path& path) {
  return parse_config(slurp(path), path.string());
}

// --- scenario / transcript ---------------------------------------------------

Scenario read_scenario(const std::filesystem::path& path) {
  njson j = njson::parse(slurp(path));
  check_keys(j,
             {"format", "version", "seed", "population", "geometry", "electronics_gain", "grid",
              "fit", "measurement_noise_dbm", "signal_power_dbm", "registration_samples",
              "model_kind", "registered", "events"},
             path.string());
  if (j.value("format", "") != "ofp-scenario" || j.value("version", 0) != 1)
    throw std::runtime_error(path.string() + ": not an ofp-scenario v1 file");

  Scenario sc;
  sc.seed = j.value("seed", sc.seed);
  if (j.contains("population")) sc.population = parse_population(j.at("population"));
  if (j.contains("geometry")) sc.geometry = parse_geometry(j.at("geometry"));
  sc.electronics_gain = fnum(j, "electronics_gain", sc.electronics_gain);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"f_min_hz", "f_max_hz", "points"}, "grid");
    sc.f_min = fnum(g, "f_min_hz", sc.f_min);
    sc.f_max = fnum(g, "f_max_hz", sc.f_max);
    sc.grid_points = g.value("points", sc.grid_points);
  }
  sc.fit = parse_fit(j.contains("fit") ? j.at("fit") : njson::object(), sc.population.nominal);
  if (j.contains("measurement_noise_dbm") && !j.at("measurement_noise_dbm").is_null())
    sc.measurement_noise_dbm = j.at("measurement_noise_dbm").get<double>();
  sc.signal_power_dbm = fnum(j, "signal_power_dbm", sc.signal_power_dbm);
  sc.registration_samples = j.value("registration_samples", sc.registration_samples);
  sc.model_kind = classifier_from_name(j.value("model_kind", "fine-knn"));
  if (j.contains("registered")) sc.registered = j.at("registered").get<std::vector<std::string>>();
  if (j.contains("events")) {
    for (const auto& e : j.at("events")) {
      check_keys(e, {"time", "kind", "device", "claim", "samples"}, "event");
      ScenarioEvent ev;
      ev.time = fnum(e, "time", 0.0);
      ev.kind = e.at("kind").get<std::string>();
      ev.device = e.at("device").get<std::string>();
      ev.claim = e.value("claim", "");
      ev.samples = e.value("samples", 0);
      sc.events.push_back(ev);
    }
  }
  return sc;
}

void write_transcript(const std::filesystem::path& path, const Transcript& tr) {
  ordered_json j;
  j["format"] = "ofp-transcript";
  j["version"] = 1;
  j["summary"] = {{"genuine_trials", tr.summary.genuine_trials},
                  {"genuine_accepts", tr.summary.genuine_accepts},
                  {"impostor_trials", tr.summary.impostor_trials},
                  {"impostor_accepts", tr.summary.impostor_accepts},
                  {"registrations", tr.summary.registrations},
                  {"registration_rejects", tr.summary.registration_rejects},
                  {"far", tr.summary.far()},
                  {"frr", tr.summary.frr()}};
  ordered_json msgs = ordered_json::array();
  for (const auto& m : tr.messages) {
    ordered_json e;
    e["kind"] = message_kind_name(m.kind);
    e["sender"] = m.sender;
    e["receiver"] = m.receiver;
    e["seq"] = m.seq;
    e["correlation"] = m.correlation;
    e["claimed_id"] = m.claimed_id;
    e["subject_id"] = m.subject_id;
    e["fingerprint"] =
        m.fp ? ordered_json({m.fp->r_c, m.fp->c_j, m.fp->r_q}) : ordered_json(nullptr);
    if (m.verdict) {
      e["verdict"] = {{"accepted", m.verdict->accepted},
                      {"matched_id", m.verdict->matched_id ? ordered_json(*m.verdict->matched_id)
                                                           : ordered_json(nullptr)},
                      {"score", m.verdict->score},
                      {"distance", m.verdict->distance},
                      {"reason", auth_reason_name(m.verdict->reason)}};
    } else {
      e["verdict"] = nullptr;
    }
    e["note"] = m.note;
    msgs.push_back(e);
  }
  j["messages"] = msgs;
  atomic_write(path, j.dump(2) + "\n");
}

void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<DeviceGroundTruth>& devices,
                        const std::vector<ChannelGeometry>& geometries,
                        const ToolkitConfig& cfg) {
  ordered_json j;
  j["format"] = "ofp-ground-truth";
  j["version"] = 1;
  ordered_json devs = ordered_json::array();
  for (const auto& d : devices)
    devs.push_back({{"device_id", d.device_id},
                    {"r_c", d.true_params.r_c},
                    {"c_j", d.true_params.c_j},
                    {"r_q", d.true_params.r_q},
                    {"c_q", d.true_params.c_q}});
  j["devices"] = devs;
  ordered_json geos = ordered_json::array();
  for (const auto& g : geometries)
    geos.push_back({{"d", g.d},
                    {"phi", g.phi},
                    {"psi", g.psi},
                    {"phi_half", g.phi_half},
                    {"a_r", g.a_r},
                    {"g_psi", g.g_psi}});
  j["geometries"] = geos;
  j["grid"] = {{"f_min_hz", cfg.f_min}, {"f_max_hz", cfg.f_max}, {"points", cfg.grid_points}};
  j["electronics_gain"] = cfg.electronics_gain;
  j["reps"] = cfg.reps;
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace ofp

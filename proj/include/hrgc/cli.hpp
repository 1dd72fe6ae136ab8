#pragma once

// Command-line front end. `run_cli` is the whole program minus process plumbing, so tests drive it
// in-process with string streams.
//
// Exit codes: 0 success, 1 usage error (bad flag or flag value), 2 data error (unreadable or
// malformed input, failed analysis, failed training).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hrgc/augment.hpp"
#include "hrgc/error.hpp"
#include "hrgc/geodata.hpp"
#include "hrgc/hangup.hpp"
#include "hrgc/neural/checkpoint.hpp"
#include "hrgc/neural/train.hpp"
#include "hrgc/profile.hpp"
#include "hrgc/report.hpp"
#include "hrgc/service.hpp"
#include "hrgc/vehicle.hpp"

namespace hrgc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Seed used when --seed is not given. Every random draw of every command derives from it.
inline constexpr std::uint64_t kDefaultSeed = 2024;

/// Environment variable read for --log-level (error, warn, info, debug).
inline constexpr const char* kLogLevelEnv = "HRGC_LOG_LEVEL";

namespace cli {

/// A flag is missing, unknown, or has an unusable value.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Error, Warn, Info, Debug };

class Logger {
public:
  Logger(std::ostream& err, LogLevel level) : err_(&err), level_(level) {}
  void error(const std::string& m) const { emit(LogLevel::Error, "error", m); }
  void warn(const std::string& m) const { emit(LogLevel::Warn, "warn", m); }
  void info(const std::string& m) const { emit(LogLevel::Info, "info", m); }
  void debug(const std::string& m) const { emit(LogLevel::Debug, "debug", m); }

private:
  void emit(LogLevel l, const char* tag, const std::string& m) const {
    if (l <= level_) *err_ << '[' << tag << "] " << m << '\n';
  }
  std::ostream* err_;
  LogLevel level_;
};

inline LogLevel parse_log_level(const std::string& s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw UsageError("--log-level: expected error, warn, info or debug, got '" + s + "'");
}

/// FNV-1a 64-bit digest as 16 hex digits.
inline std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance record written once by every batch command. Only started_at_utc and
/// duration_s vary between identical runs.
class RunManifest {
public:
  RunManifest(std::string command, std::vector<std::string> argv, std::uint64_t seed)
      : started_(std::chrono::system_clock::now()), clock_(std::chrono::steady_clock::now()) {
    doc_ = {{"command", std::move(command)},
            {"tool_version", kToolVersion},
            {"argv", std::move(argv)},
            {"seeds", {{"seed", seed}}},
            {"config", nlohmann::json::object()},
            {"inputs", nlohmann::json::array()},
            {"outputs", nlohmann::json::array()}};
  }

  nlohmann::json& config() { return doc_["config"]; }
  nlohmann::json& doc() { return doc_; }
  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }

  /// Records an input file by digest; `text` is its content as already read.
  void input(const std::filesystem::path& path, std::string_view text) {
    doc_["inputs"].push_back({{"path", path.generic_string()}, {"bytes", text.size()}, {"fnv1a64", fnv1a64(text)}});
  }
  void output(const std::filesystem::path& path) { doc_["outputs"].push_back(path.generic_string()); }

  void write(const std::filesystem::path& path) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    doc_["started_at_utc"] = utc_timestamp(started_);
    doc_["duration_s"] = elapsed;
    write_text_file(path, doc_.dump(2) + "\n");
  }

private:
  nlohmann::json doc_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
};

/// `dir/stem<suffix>` next to `path`.
inline std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

inline VehicleType vehicle_flag(const std::string& flag, const std::string& value) {
  auto t = parse_vehicle_type(value);
  if (!t) throw UsageError(flag + ": unknown vehicle type '" + value + "' (see `vehicles --list`)");
  return *t;
}

inline Scenario scenario_flag(const std::string& flag, const std::string& value) {
  auto s = parse_scenario(value);
  if (!s) throw UsageError(flag + ": expected median, p75-25 or worst, got '" + value + "'");
  return *s;
}

inline std::vector<VehicleType> types_flag(const std::string& value) {
  if (value == "all") return {kAllVehicleTypes.begin(), kAllVehicleTypes.end()};
  std::vector<VehicleType> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = vehicle_flag("--types", std::string(csv::trim(item)));
    if (std::find(out.begin(), out.end(), t) != out.end()) throw UsageError("--types: '" + item + "' listed twice");
    out.push_back(t);
  }
  if (out.empty()) throw UsageError("--types: no vehicle types given");
  return out;
}

/// Bundled statistics, or statistics summarized from a raw measurement CSV.
inline DimensionStats load_stats(const std::string& raw_path, RunManifest* manifest) {
  if (raw_path.empty()) return load_bundled_stats();
  const std::string text = read_text_file(raw_path);
  if (manifest) manifest->input(raw_path, text);
  return summarize_dimensions(parse_dimension_csv(text, raw_path));
}

inline std::string vehicles_table(const DimensionStats& stats) {
  std::ostringstream o;
  o << std::left << std::setw(26) << "vehicle_type" << std::setw(34) << "label" << std::right << std::setw(6)
    << "count" << std::setw(8) << "wb_p50" << std::setw(8) << "wb_p75" << std::setw(8) << "wb_max" << std::setw(9)
    << "clr_min" << std::setw(9) << "clr_p25" << std::setw(9) << "clr_p50" << '\n';
  o << std::fixed << std::setprecision(2);
  for (const auto& t : stats.types)
    o << std::left << std::setw(26) << slug(t.type) << std::setw(34) << label(t.type) << std::right << std::setw(6)
      << t.count << std::setw(8) << t.wheelbase.p50 << std::setw(8) << t.wheelbase.p75 << std::setw(8)
      << t.wheelbase.max << std::setw(9) << t.clearance_wheelbase.min << std::setw(9) << t.clearance_wheelbase.p25
      << std::setw(9) << t.clearance_wheelbase.p50 << '\n';
  return o.str();
}

struct Streams {
  std::ostream& out;
  std::ostream& err;
  const Logger& log;
  const std::vector<std::string>& argv;
  std::uint64_t seed;
  unsigned jobs;
};

// ---------------------------------------------------------------------------
// Commands

struct AugmentArgs {
  std::string manifest, out, run_manifest, t1_target = "altitude", t2_target = "profile";
  double noise_fraction = 0.04;
  std::size_t t1 = 42, t2 = 21;
};

inline NoiseTarget noise_target_flag(const std::string& flag, const std::string& v) {
  if (v == "altitude") return NoiseTarget::Altitude;
  if (v == "profile") return NoiseTarget::Profile;
  throw UsageError(flag + ": expected altitude or profile, got '" + v + "'");
}

inline int cmd_augment(const AugmentArgs& a, const Streams& io) {
  AugmentConfig cfg;
  cfg.noise_fraction = a.noise_fraction;
  cfg.noise_realizations_t1 = a.t1;
  cfg.noise_realizations_t2 = a.t2;
  cfg.seed = io.seed;
  cfg.technique1_target = noise_target_flag("--t1-target", a.t1_target);
  cfg.technique2_target = noise_target_flag("--t2-target", a.t2_target);
  if (!(cfg.noise_fraction >= 0.0)) throw UsageError("--noise-fraction: must be >= 0");
  if (cfg.noise_realizations_t1 < 1 || cfg.noise_realizations_t2 < 1) throw UsageError("--t1/--t2: must be >= 1");

  RunManifest man("augment", io.argv, io.seed);
  man.input(a.manifest, read_text_file(a.manifest));
  auto originals = load_paired_samples(a.manifest);
  io.log.info("loaded " + std::to_string(originals.size()) + " original samples from " + a.manifest);
  DatasetSplit split = build_dataset(originals, cfg);

  const std::filesystem::path root(a.out);
  auto write_split = [&](const char* name, const std::vector<PairedSample>& samples) {
    std::vector<ManifestEntry> entries;
    const auto dir = root / name;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::ostringstream stem;
      stem << std::setw(6) << std::setfill('0') << i;
      const std::string imu = stem.str() + "_imu.csv", prof = stem.str() + "_profile.csv";
      write_text_file(dir / imu, serialize_imugps_csv(samples[i].input));
      write_text_file(dir / prof, serialize_profile_csv(target_as_profile(samples[i])));
      entries.push_back({samples[i].crossing_id(), imu, prof});
    }
    write_text_file(dir / "manifest.csv", serialize_manifest_csv(entries));
    man.output(dir / "manifest.csv");
  };
  write_split("train", split.train);
  write_split("validation", split.validation);
  write_split("test", split.test);

  man.config() = {{"noise_fraction", cfg.noise_fraction},
                  {"noise_realizations_t1", cfg.noise_realizations_t1},
                  {"noise_realizations_t2", cfg.noise_realizations_t2},
                  {"technique1_target", to_string(cfg.technique1_target)},
                  {"technique2_target", to_string(cfg.technique2_target)}};
  man.doc()["counts"] = {{"originals", originals.size()},
                         {"total", split.total()},
                         {"train", split.train.size()},
                         {"validation", split.validation.size()},
                         {"test", split.test.size()}};
  man.write(a.run_manifest.empty() ? root / "run_manifest.json" : std::filesystem::path(a.run_manifest));
  io.out << "samples: " << split.total() << " (train " << split.train.size() << ", validation "
         << split.validation.size() << ", test " << split.test.size() << ")\n";
  return 0;
}

struct TrainArgs {
  std::string data, out, run_manifest, optimizer = "adam";
  int epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  nn::Architecture arch;
};

inline int cmd_train(const TrainArgs& a, const Streams& io) {
  try {
    a.arch.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("architecture flags: ") + e.what());
  }
  if (a.epochs < 1) throw UsageError("--epochs: must be >= 1");
  if (!(a.lr >= 0.0)) throw UsageError("--lr: must be >= 0");
  if (a.batch_size < 1) throw UsageError("--batch-size: must be >= 1");
  nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch_size;
  cfg.seed = io.seed;
  if (a.optimizer == "adam")
    cfg.optimizer = nn::Optimizer::Adam;
  else if (a.optimizer == "sgd")
    cfg.optimizer = nn::Optimizer::Sgd;
  else
    throw UsageError("--optimizer: expected adam or sgd, got '" + a.optimizer + "'");

  RunManifest man("train", io.argv, io.seed);
  const std::filesystem::path root(a.data);
  DatasetSplit split;
  auto load = [&](const char* name, std::vector<PairedSample>& into, bool required) {
    const auto m = root / name / "manifest.csv";
    if (!required && !std::filesystem::exists(m)) return;
    man.input(m, read_text_file(m));
    into = load_paired_samples(m);
  };
  load("train", split.train, true);
  load("validation", split.validation, true);
  load("test", split.test, false);
  io.log.info("training on " + std::to_string(split.train.size()) + " samples, validating on " +
              std::to_string(split.validation.size()));

  cfg.on_epoch = [&](int epoch, double tr, double va) {
    io.log.info("epoch " + std::to_string(epoch) + ": train rmse " + csv::format_double(tr) + ", validation rmse " +
                csv::format_double(va));
  };
  auto result = nn::train(nn::init_model(a.arch, io.seed), split, cfg);
  write_text_file(a.out, nn::save_checkpoint(result.model));
  man.output(a.out);

  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : result.history)
    history.push_back({{"epoch", h.epoch},
                       {"train_loss", h.train_loss},
                       {"train_rmse", h.train.rmse},
                       {"validation_rmse", h.validation.rmse},
                       {"validation_mae", h.validation.mae}});
  man.config() = {{"learning_rate", cfg.learning_rate},
                  {"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"optimizer", a.optimizer},
                  {"d_model", a.arch.d_model},
                  {"num_heads", a.arch.num_heads},
                  {"lstm_hidden", a.arch.lstm_hidden},
                  {"ff_width", a.arch.ff_width},
                  {"num_blocks", a.arch.num_blocks}};
  man.doc()["epochs"] = std::move(history);
  man.doc()["best_epoch"] = result.best_epoch;
  if (!split.test.empty()) {
    const auto m = nn::evaluate(result.model, split.test);
    man.doc()["test"] = {{"rmse", m.rmse}, {"mae", m.mae}};
  }
  man.write(a.run_manifest.empty() ? sibling(a.out, ".manifest.json") : std::filesystem::path(a.run_manifest));
  const auto& best = result.history[static_cast<std::size_t>(result.best_epoch)];
  io.out << "best epoch " << result.best_epoch << ": validation rmse " << csv::format_double(best.validation.rmse)
         << " (initial " << csv::format_double(result.history[0].validation.rmse) << ")\n";
  return 0;
}

struct PredictArgs {
  std::string model, imu, out, run_manifest, crossing_id;
};

inline int cmd_predict(const PredictArgs& a, const Streams& io) {
  RunManifest man("predict", io.argv, io.seed);
  const std::string model_text = read_text_file(a.model);
  man.input(a.model, model_text);
  const auto model = nn::load_checkpoint(model_text, a.model);
  const std::string imu_text = read_text_file(a.imu);
  man.input(a.imu, imu_text);
  const auto seq = parse_imugps_csv(imu_text, a.imu, a.crossing_id);
  write_text_file(a.out, serialize_profile_csv(nn::predict_profile(model, seq)));
  man.output(a.out);
  man.doc()["rows"] = seq.size();
  man.write(a.run_manifest.empty() ? sibling(a.out, ".manifest.json") : std::filesystem::path(a.run_manifest));
  io.out << "wrote " << seq.size() << " predicted elevations to " << a.out << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string profile, vehicle, scenario, stats, curve_out;
  std::optional<double> wheelbase, clearance, front_length, front_clearance, rear_length, rear_clearance;
  double spacing = kDefaultSpacing;
  bool json = false;
};

inline VehicleGeometry analyze_vehicle(const AnalyzeArgs& a) {
  const bool by_type = !a.vehicle.empty() || !a.scenario.empty();
  const bool explicit_geom = a.wheelbase || a.clearance;
  if (by_type == explicit_geom)
    throw UsageError("give either --vehicle with --scenario, or --wheelbase with --clearance");
  VehicleGeometry v;
  if (by_type) {
    if (a.vehicle.empty()) throw UsageError("--vehicle: required with --scenario");
    if (a.scenario.empty()) throw UsageError("--scenario: required with --vehicle");
    const auto t = vehicle_flag("--vehicle", a.vehicle);
    const auto s = scenario_flag("--scenario", a.scenario);
    return design_vehicle(load_stats(a.stats, nullptr), t, s);
  }
  if (!a.wheelbase || !a.clearance) throw UsageError("--wheelbase and --clearance: both required");
  v.wheelbase = *a.wheelbase;
  v.clearance_wheelbase = *a.clearance;
  v.label = "custom";
  auto overhang = [](const char* which, const std::optional<double>& l, const std::optional<double>& c) {
    if (!l && !c) return std::optional<Overhang>{};
    if (!l || !c)
      throw UsageError(std::string("--") + which + "-overhang-length and --" + which +
                       "-overhang-clearance: give both or neither");
    return std::optional<Overhang>{Overhang{*l, *c}};
  };
  v.front_overhang = overhang("front", a.front_length, a.front_clearance);
  v.rear_overhang = overhang("rear", a.rear_length, a.rear_clearance);
  try {
    v.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  return v;
}

inline int cmd_analyze(const AnalyzeArgs& a, const Streams& io) {
  if (!(a.spacing > 0.0)) throw UsageError("--spacing: must be > 0");
  const VehicleGeometry v = analyze_vehicle(a);
  const auto id = std::filesystem::path(a.profile).stem().string();
  const Profile p = parse_profile_csv(read_text_file(a.profile), a.profile, id);
  HangupOptions opts;
  opts.spacing = a.spacing;
  const HangupResult r = analyze_crossing(p, v, opts);
  if (!a.curve_out.empty()) {
    std::string text = "rear_axle_station_m,delta_m\n";
    for (const auto& c : r.clearance_curve)
      text += csv::format_double(c.rear_axle_station) + ',' + csv::format_double(c.delta) + '\n';
    write_text_file(a.curve_out, text);
  }
  if (a.json) {
    io.out << nlohmann::json{{"crossing_id", id},
                             {"vehicle", to_json(v)},
                             {"delta_min_m", r.delta_min},
                             {"level", r.level},
                             {"worst_rear_axle_station_m", r.worst_rear_axle_station},
                             {"worst_interference_station_m", r.worst_interference_station},
                             {"direction", std::string(to_string(r.direction))}}
                      .dump(2)
           << '\n';
    return 0;
  }
  io.out << "crossing: " << id << '\n'
         << "vehicle: " << v.label << " (wheelbase " << csv::format_double(v.wheelbase) << " m, clearance "
         << csv::format_double(v.clearance_wheelbase) << " m)\n"
         << "delta_min_m: " << csv::format_fixed(r.delta_min, kResultDecimals) << '\n'
         << "level: " << r.level << '\n'
         << "worst_rear_axle_station_m: " << csv::format_fixed(r.worst_rear_axle_station, kResultDecimals) << '\n'
         << "worst_interference_station_m: " << csv::format_fixed(r.worst_interference_station, kResultDecimals)
         << '\n'
         << "direction: " << to_string(r.direction) << '\n';
  return 0;
}

struct NetworkArgs {
  std::string inventory, profiles, scenario = "median", types = "all", out, summary, stats, run_manifest;
  double spacing = kDefaultSpacing;
};

inline int cmd_network(const NetworkArgs& a, const Streams& io) {
  const Scenario scenario = scenario_flag("--scenario", a.scenario);
  const auto types = types_flag(a.types);
  if (!(a.spacing > 0.0)) throw UsageError("--spacing: must be > 0");

  RunManifest man("network", io.argv, io.seed);
  const std::string inv_text = read_text_file(a.inventory);
  man.input(a.inventory, inv_text);
  const Inventory inv = parse_inventory_csv(inv_text, a.inventory);
  const std::filesystem::path profile_dir =
      a.profiles.empty() ? std::filesystem::path(a.inventory).parent_path() : std::filesystem::path(a.profiles);
  const auto crossings = load_profiles(inv, profile_dir);
  for (const auto& r : inv.records()) {
    const auto path = profile_dir / (r.profile_path.empty() ? r.crossing_id + ".csv" : r.profile_path);
    man.input(path, read_text_file(path));
  }
  const DimensionStats stats = load_stats(a.stats, &man);
  HangupOptions opts;
  opts.spacing = a.spacing;
  io.log.info("analyzing " + std::to_string(crossings.size()) + " crossings x " + std::to_string(types.size()) +
              " vehicle types with " + std::to_string(io.jobs) + " job(s)");
  const NetworkSummary summary = analyze_network(crossings, stats, scenario, types, opts, io.jobs);
  for (const auto* f : summary.failures())
    io.log.warn(f->crossing_id + " / " + std::string(slug(f->vehicle_type)) + ": " + f->error);

  const auto rows = result_rows(summary);
  write_text_file(a.out, serialize_results_csv(rows));
  man.output(a.out);
  const std::filesystem::path summary_path = a.summary.empty() ? sibling(a.out, ".summary.json") : std::filesystem::path(a.summary);
  write_text_file(summary_path, to_json(summary).dump(2) + "\n");
  man.output(summary_path);

  nlohmann::json type_slugs = nlohmann::json::array();
  for (auto t : types) type_slugs.push_back(std::string(slug(t)));
  man.config() = {{"scenario", std::string(slug(scenario))},
                  {"types", std::move(type_slugs)},
                  {"spacing_m", opts.spacing},
                  {"jobs", io.jobs},
                  {"stats", a.stats.empty() ? "bundled" : a.stats}};
  man.write(a.run_manifest.empty() ? sibling(a.out, ".manifest.json") : std::filesystem::path(a.run_manifest));

  const auto c = summary.worst_counts();
  io.out << "crossings: " << summary.worst.size() << ", results: " << rows.size() << ", failures: "
         << summary.failures().size() << "\nworst level counts: L1 " << c[0] << ", L2 " << c[1] << ", L3 " << c[2]
         << ", L4 " << c[3] << '\n';
  return summary.worst.empty() ? 2 : 0;
}

struct VehiclesArgs {
  bool list = false, csv = false, json = false;
  std::string summarize, out;
};

inline int cmd_vehicles(const VehiclesArgs& a, const Streams& io) {
  if (static_cast<int>(a.list) + static_cast<int>(a.csv) + static_cast<int>(a.json) > 1)
    throw UsageError("--list, --csv and --json are mutually exclusive");
  DimensionStats stats = load_stats(a.summarize, nullptr);
  for (const auto& w : stats.warnings) io.log.warn(w);
  std::string text = a.csv ? serialize_stats_csv(stats) : a.json ? to_json(stats).dump(2) + "\n" : vehicles_table(stats);
  if (a.out.empty())
    io.out << text;
  else
    write_text_file(a.out, text);
  return 0;
}

struct ExportArgs {
  std::string inventory, results, out, layer = "worst", layers_dir, run_manifest;
};

inline int cmd_export(const ExportArgs& a, const Streams& io) {
  if (a.out.empty() == a.layers_dir.empty()) throw UsageError("give exactly one of --out or --layers-dir");
  RunManifest man("export-geojson", io.argv, io.seed);
  const std::string inv_text = read_text_file(a.inventory);
  man.input(a.inventory, inv_text);
  const Inventory inv = parse_inventory_csv(inv_text, a.inventory);
  const std::string res_text = read_text_file(a.results);
  man.input(a.results, res_text);
  const auto rows = parse_results_csv(res_text, a.results);
  const auto layers = export_layers(inv, rows);
  std::filesystem::path manifest_path;
  if (!a.out.empty()) {
    auto it = layers.find(a.layer);
    if (it == layers.end()) {
      std::string names;
      for (const auto& [k, v] : layers) names += (names.empty() ? "" : ", ") + k;
      throw UsageError("--layer: no layer '" + a.layer + "' in the results (available: " + names + ")");
    }
    write_text_file(a.out, geojson_text(it->second));
    man.output(a.out);
    manifest_path = sibling(a.out, ".manifest.json");
  } else {
    for (const auto& [name, doc] : layers) {
      const auto path = std::filesystem::path(a.layers_dir) / (name + ".geojson");
      write_text_file(path, geojson_text(doc));
      man.output(path);
    }
    manifest_path = std::filesystem::path(a.layers_dir) / "run_manifest.json";
  }
  man.config() = {{"layer", a.out.empty() ? "all" : a.layer}};
  man.write(a.run_manifest.empty() ? manifest_path : std::filesystem::path(a.run_manifest));
  io.out << "features: " << (a.out.empty() ? layers.at("worst") : layers.at(a.layer))["features"].size()
         << (a.out.empty() ? " per layer, layers: " + std::to_string(layers.size()) : std::string()) << '\n';
  return 0;
}

struct ServeArgs {
  std::string inventory, profiles, model, stats, host = "127.0.0.1";
  int port = 8080;
};

inline int cmd_serve(const ServeArgs& a, const Streams& io) {
  if (a.port < 0 || a.port > 65535) throw UsageError("--port: must be in 0..65535");
  ServiceData data;
  data.inventory = parse_inventory_csv(read_text_file(a.inventory), a.inventory);
  data.profiles = load_profiles(data.inventory, a.profiles.empty() ? std::filesystem::path(a.inventory).parent_path()
                                                                   : std::filesystem::path(a.profiles));
  data.stats = load_stats(a.stats, nullptr);
  if (!a.model.empty()) data.model = nn::load_checkpoint(read_text_file(a.model), a.model);
  data.jobs = io.jobs;
  const Service service(std::move(data));
  httplib::Server server;
  service.mount(server);
  const int port = a.port == 0 ? server.bind_to_any_port(a.host) : (server.bind_to_port(a.host, a.port) ? a.port : -1);
  if (port < 0) throw Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
  io.out << "listening on http://" << a.host << ':' << port << '\n' << std::flush;
  io.log.info("serving " + std::to_string(service.data().inventory.size()) + " crossings");
  server.listen_after_bind();
  return 0;
}

} // namespace cli

/// Runs one command. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hang-up risk toolkit for highway-railway grade crossings", "hrgc"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  std::string log_level = "warn";
  app.add_option("--seed", seed, "Seed for every random draw (default " + std::to_string(kDefaultSeed) + ")");
  app.add_option("--jobs", jobs, "Worker threads for network analysis")->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "error, warn, info or debug")->envname(kLogLevelEnv);

  cli::AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Build a noise-augmented train/validation/test dataset");
  augment->add_option("--manifest", aug.manifest, "Paired-sample manifest CSV")->required();
  augment->add_option("--out", aug.out, "Output directory")->required();
  augment->add_option("--noise-fraction", aug.noise_fraction, "Noise std as a fraction of the series range");
  augment->add_option("--t1", aug.t1, "Noise realizations per original (technique 1)");
  augment->add_option("--t2", aug.t2, "Noise realizations per original before odd/even split (technique 2)");
  augment->add_option("--t1-target", aug.t1_target, "altitude or profile");
  augment->add_option("--t2-target", aug.t2_target, "altitude or profile");
  augment->add_option("--run-manifest", aug.run_manifest, "Run manifest path (default <out>/run_manifest.json)");

  cli::TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the profile model on an augmented dataset");
  train->add_option("--data", tr.data, "Directory written by `augment`")->required();
  train->add_option("--out", tr.out, "Checkpoint JSON path")->required();
  train->add_option("--epochs", tr.epochs, "Training epochs");
  train->add_option("--lr", tr.lr, "Learning rate");
  train->add_option("--batch-size", tr.batch_size, "Sequences per update");
  train->add_option("--optimizer", tr.optimizer, "adam or sgd");
  train->add_option("--d-model", tr.arch.d_model, "Embedding width");
  train->add_option("--heads", tr.arch.num_heads, "Attention heads");
  train->add_option("--hidden", tr.arch.lstm_hidden, "LSTM hidden size");
  train->add_option("--ff", tr.arch.ff_width, "Feed-forward width");
  train->add_option("--blocks", tr.arch.num_blocks, "Transformer blocks");
  train->add_option("--run-manifest", tr.run_manifest, "Run manifest path (default <out stem>.manifest.json)");

  cli::PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Predict a crossing profile from an IMU-GPS CSV");
  predict->add_option("--model", pr.model, "Checkpoint JSON")->required();
  predict->add_option("--imu", pr.imu, "IMU-GPS CSV")->required();
  predict->add_option("--out", pr.out, "Profile CSV to write")->required();
  predict->add_option("--crossing-id", pr.crossing_id, "Identifier attached to the prediction");
  predict->add_option("--run-manifest", pr.run_manifest, "Run manifest path (default <out stem>.manifest.json)");

  cli::AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Hang-up analysis of one crossing profile");
  analyze->add_option("--profile", an.profile, "Profile CSV (station_m, elevation_m)")->required();
  analyze->add_option("--vehicle", an.vehicle, "Vehicle type (slug or label)");
  analyze->add_option("--scenario", an.scenario, "median, p75-25 or worst");
  analyze->add_option("--stats", an.stats, "Raw dimension CSV to use instead of the bundled statistics");
  analyze->add_option("--wheelbase", an.wheelbase, "Explicit wheelbase (m)");
  analyze->add_option("--clearance", an.clearance, "Explicit clearance between axles (m)");
  analyze->add_option("--front-overhang-length", an.front_length, "Front overhang length (m)");
  analyze->add_option("--front-overhang-clearance", an.front_clearance, "Front overhang clearance (m)");
  analyze->add_option("--rear-overhang-length", an.rear_length, "Rear overhang length (m)");
  analyze->add_option("--rear-overhang-clearance", an.rear_clearance, "Rear overhang clearance (m)");
  analyze->add_option("--spacing", an.spacing, "Resample spacing (m)");
  analyze->add_option("--curve-out", an.curve_out, "Write the clearance curve CSV here");
  analyze->add_flag("--json", an.json, "Print JSON instead of text");

  cli::NetworkArgs nw;
  auto* network = app.add_subcommand("network", "Batch analysis of an inventory of crossings");
  network->add_option("--inventory", nw.inventory, "Inventory CSV")->required();
  network->add_option("--profiles", nw.profiles, "Profile directory (default: the inventory's directory)");
  network->add_option("--scenario", nw.scenario, "median, p75-25 or worst");
  network->add_option("--types", nw.types, "all, or comma-separated vehicle types");
  network->add_option("--out", nw.out, "Results CSV")->required();
  network->add_option("--summary", nw.summary, "Summary JSON (default <out stem>.summary.json)");
  network->add_option("--stats", nw.stats, "Raw dimension CSV to use instead of the bundled statistics");
  network->add_option("--spacing", nw.spacing, "Resample spacing (m)");
  network->add_option("--run-manifest", nw.run_manifest, "Run manifest path (default <out stem>.manifest.json)");

  cli::VehiclesArgs vh;
  auto* vehicles = app.add_subcommand("vehicles", "Print vehicle dimension statistics");
  vehicles->add_flag("--list", vh.list, "Table of design dimensions per vehicle type (default)");
  vehicles->add_flag("--csv", vh.csv, "Statistics as CSV");
  vehicles->add_flag("--json", vh.json, "Statistics as JSON");
  vehicles->add_option("--summarize", vh.summarize, "Summarize this raw dimension CSV instead of the bundled data");
  vehicles->add_option("--out", vh.out, "Write to a file instead of standard output");

  cli::ExportArgs ex;
  auto* exportg = app.add_subcommand("export-geojson", "Export results as GeoJSON risk-map layers");
  exportg->add_option("--inventory", ex.inventory, "Inventory CSV")->required();
  exportg->add_option("--results", ex.results, "Results CSV written by `network`")->required();
  exportg->add_option("--out", ex.out, "GeoJSON file for one layer");
  exportg->add_option("--layer", ex.layer, "Layer for --out: worst or a vehicle type (default worst)");
  exportg->add_option("--layers-dir", ex.layers_dir, "Write every layer into this directory");
  exportg->add_option("--run-manifest", ex.run_manifest, "Run manifest path");

  cli::ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Start the HTTP JSON API");
  serve->add_option("--inventory", sv.inventory, "Inventory CSV")->required();
  serve->add_option("--profiles", sv.profiles, "Profile directory (default: the inventory's directory)");
  serve->add_option("--model", sv.model, "Checkpoint enabling /api/predict");
  serve->add_option("--stats", sv.stats, "Raw dimension CSV to use instead of the bundled statistics");
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--port", sv.port, "Port (0 picks a free one)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const cli::Logger log(err, cli::parse_log_level(log_level));
    std::vector<std::string> argv{"hrgc"};
    argv.insert(argv.end(), args.begin(), args.end());
    const cli::Streams io{out, err, log, argv, seed, jobs};
    if (augment->parsed()) return cli::cmd_augment(aug, io);
    if (train->parsed()) return cli::cmd_train(tr, io);
    if (predict->parsed()) return cli::cmd_predict(pr, io);
    if (analyze->parsed()) return cli::cmd_analyze(an, io);
    if (network->parsed()) return cli::cmd_network(nw, io);
    if (vehicles->parsed()) return cli::cmd_vehicles(vh, io);
    if (exportg->parsed()) return cli::cmd_export(ex, io);
    if (serve->parsed()) return cli::cmd_serve(sv, io);
    return 1;
  } catch (const cli::UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

} // namespace hrgc

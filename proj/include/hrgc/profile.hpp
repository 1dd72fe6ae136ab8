#pragma once

// Longitudinal crossing profiles and IMU-GPS sensor sequences: data model,
// interpolation, resampling, and CSV ingestion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hrgc/csv.hpp"
#include "hrgc/error.hpp"

namespace hrgc {

/// Default resample spacing (m); the walking profiler samples at 1 cm.
inline constexpr double kDefaultSpacing = 0.01;

/// Stations within this distance beyond either end of a profile are clamped to the end.
inline constexpr double kStationTolerance = 1e-9;

/// Elevation as a function of station, sampled at strictly increasing stations.
/// Immutable after construction.
class Profile {
public:
  Profile(std::vector<double> stations, std::vector<double> elevations, std::string crossing_id = {})
      : stations_(std::move(stations)), elevations_(std::move(elevations)), crossing_id_(std::move(crossing_id)) {
    if (stations_.size() != elevations_.size())
      throw ArgumentError("profile: stations and elevations differ in length");
    if (stations_.size() < 2) throw ArgumentError("profile: at least two samples required");
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (!std::isfinite(stations_[i]) || !std::isfinite(elevations_[i]))
        throw ArgumentError("profile: non-finite value at index " + std::to_string(i));
      if (i > 0 && !(stations_[i] > stations_[i - 1]))
        throw ArgumentError("profile: stations not strictly increasing at index " + std::to_string(i));
    }
  }

  std::span<const double> stations() const noexcept { return stations_; }
  std::span<const double> elevations() const noexcept { return elevations_; }
  const std::string& crossing_id() const noexcept { return crossing_id_; }
  std::size_t size() const noexcept { return stations_.size(); }
  double first_station() const noexcept { return stations_.front(); }
  double last_station() const noexcept { return stations_.back(); }
  double length() const noexcept { return last_station() - first_station(); }

  Profile with_id(std::string id) const { return Profile(stations_, elevations_, std::move(id)); }

  friend bool operator==(const Profile&, const Profile&) = default;

private:
  std::vector<double> stations_;
  std::vector<double> elevations_;
  std::string crossing_id_;
};

/// Linear interpolation of the profile at `station`; exact at sample nodes.
inline double elevation_at(const Profile& profile, double station) {
  auto s = profile.stations();
  auto z = profile.elevations();
  if (station < s.front() - kStationTolerance || station > s.back() + kStationTolerance || std::isnan(station))
    throw RangeError("station " + csv::format_double(station) + " outside profile [" +
                     csv::format_double(s.front()) + ", " + csv::format_double(s.back()) + "]");
  if (station <= s.front()) return z.front();
  if (station >= s.back()) return z.back();
  auto it = std::upper_bound(s.begin(), s.end(), station);
  std::size_t hi = static_cast<std::size_t>(it - s.begin());
  std::size_t lo = hi - 1;
  if (s[lo] == station) return z[lo];
  double t = (station - s[lo]) / (s[hi] - s[lo]);
  return z[lo] + t * (z[hi] - z[lo]);
}

/// Resamples onto first + k*spacing; the last original station is appended when the grid misses it.
inline Profile resample(const Profile& profile, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ArgumentError("resample: spacing must be positive");
  const double first = profile.first_station();
  const double last = profile.last_station();
  const auto steps = static_cast<std::size_t>(std::floor((last - first) / spacing + 1e-9));
  std::vector<double> st;
  std::vector<double> el;
  st.reserve(steps + 2);
  el.reserve(steps + 2);
  for (std::size_t k = 0; k <= steps; ++k) {
    double s = first + static_cast<double>(k) * spacing;
    if (s > last) s = last;
    if (!st.empty() && !(s > st.back())) continue;
    st.push_back(s);
    el.push_back(elevation_at(profile, s));
  }
  if (last - st.back() > kStationTolerance) {
    st.push_back(last);
    el.push_back(profile.elevations().back());
  } else {
    // Land exactly on the original end station.
    st.back() = last;
    el.back() = profile.elevations().back();
  }
  if (st.size() < 2) {
    st = {first, last};
    el = {profile.elevations().front(), profile.elevations().back()};
  }
  return Profile(std::move(st), std::move(el), profile.crossing_id());
}

/// Keeps indices 0, factor, 2*factor, ...
template <typename T>
std::vector<T> downsample(std::span<const T> seq, std::size_t factor) {
  if (factor < 1) throw ArgumentError("downsample: factor must be >= 1");
  std::vector<T> out;
  out.reserve((seq.size() + factor - 1) / factor);
  for (std::size_t i = 0; i < seq.size(); i += factor) out.push_back(seq[i]);
  return out;
}

template <typename T>
std::vector<T> downsample(const std::vector<T>& seq, std::size_t factor) {
  return downsample(std::span<const T>(seq), factor);
}

// ---------------------------------------------------------------------------
// IMU-GPS sequences

inline constexpr std::size_t kImuChannels = 7;

/// Channel order of an IMU-GPS row.
enum class ImuChannel : std::size_t { AccelX, AccelY, AccelZ, Pitch, Roll, Speed, Altitude };

using ImuRow = std::array<double, kImuChannels>;

class ImuGpsSequence {
public:
  ImuGpsSequence(std::vector<double> timestamps, std::vector<ImuRow> rows, std::string crossing_id = {})
      : timestamps_(std::move(timestamps)), rows_(std::move(rows)), crossing_id_(std::move(crossing_id)) {
    if (timestamps_.size() != rows_.size())
      throw ArgumentError("imu sequence: timestamp count differs from row count");
    if (rows_.empty()) throw ArgumentError("imu sequence: empty");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!std::isfinite(timestamps_[i])) throw ArgumentError("imu sequence: non-finite timestamp");
      if (i > 0 && !(timestamps_[i] > timestamps_[i - 1]))
        throw ArgumentError("imu sequence: timestamps not strictly increasing at index " + std::to_string(i));
      for (double v : rows_[i])
        if (!std::isfinite(v)) throw ArgumentError("imu sequence: non-finite channel value at index " + std::to_string(i));
    }
  }

  std::span<const double> timestamps() const noexcept { return timestamps_; }
  std::span<const ImuRow> rows() const noexcept { return rows_; }
  const std::string& crossing_id() const noexcept { return crossing_id_; }
  std::size_t size() const noexcept { return rows_.size(); }
  double at(std::size_t row, ImuChannel ch) const { return rows_.at(row)[static_cast<std::size_t>(ch)]; }

  ImuGpsSequence with_id(std::string id) const { return ImuGpsSequence(timestamps_, rows_, std::move(id)); }

  friend bool operator==(const ImuGpsSequence&, const ImuGpsSequence&) = default;

private:
  std::vector<double> timestamps_;
  std::vector<ImuRow> rows_;
  std::string crossing_id_;
};

/// Sensor sequence with its ground-truth elevation sequence, aligned row for row.
struct PairedSample {
  ImuGpsSequence input;
  std::vector<double> target;

  PairedSample(ImuGpsSequence in, std::vector<double> tgt) : input(std::move(in)), target(std::move(tgt)) {
    if (input.size() != target.size())
      throw ShapeError("paired sample: input has " + std::to_string(input.size()) + " rows but target has " +
                       std::to_string(target.size()));
  }

  std::size_t size() const noexcept { return target.size(); }
  const std::string& crossing_id() const noexcept { return input.crossing_id(); }

  friend bool operator==(const PairedSample&, const PairedSample&) = default;
};

inline ImuGpsSequence downsample(const ImuGpsSequence& seq, std::size_t factor) {
  return ImuGpsSequence(downsample(seq.timestamps(), factor), downsample(seq.rows(), factor), seq.crossing_id());
}

inline PairedSample downsample(const PairedSample& sample, std::size_t factor) {
  return PairedSample(downsample(sample.input, factor), downsample(sample.target, factor));
}

/// Distance travelled at each row by trapezoidal integration of the speed channel.
inline std::vector<double> stations_from_speed(const ImuGpsSequence& seq) {
  std::vector<double> st(seq.size(), 0.0);
  auto t = seq.timestamps();
  for (std::size_t i = 1; i < seq.size(); ++i) {
    double v0 = seq.at(i - 1, ImuChannel::Speed);
    double v1 = seq.at(i, ImuChannel::Speed);
    st[i] = st[i - 1] + 0.5 * (v0 + v1) * (t[i] - t[i - 1]);
  }
  return st;
}

// ---------------------------------------------------------------------------
// CSV interfaces

inline const std::vector<std::string>& profile_csv_columns() {
  static const std::vector<std::string> cols{"station_m", "elevation_m"};
  return cols;
}

inline const std::vector<std::string>& imugps_csv_columns() {
  static const std::vector<std::string> cols{"time_s",      "accel_x_mps2", "accel_y_mps2", "accel_z_mps2",
                                             "pitch_deg",   "roll_deg",     "speed_mps",    "altitude_m"};
  return cols;
}

inline Profile parse_profile_csv(std::string_view text, const std::string& source = {}, std::string crossing_id = {}) {
  auto table = csv::parse(text, source);
  auto idx = csv::require_columns(table, profile_csv_columns(), source);
  std::vector<double> st;
  std::vector<double> el;
  st.reserve(table.rows.size());
  el.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    double s = csv::parse_double(row.cells[idx[0]], source, row.line, "station_m");
    double z = csv::parse_double(row.cells[idx[1]], source, row.line, "elevation_m");
    if (!st.empty() && !(s > st.back()))
      throw ParseError(source, row.line, "station_m", "stations must be strictly increasing");
    st.push_back(s);
    el.push_back(z);
  }
  if (st.size() < 2) throw ParseError(source, 0, "", "profile needs at least two rows");
  return Profile(std::move(st), std::move(el), std::move(crossing_id));
}

inline std::string serialize_profile_csv(const Profile& profile) {
  std::string out = "station_m,elevation_m\n";
  for (std::size_t i = 0; i < profile.size(); ++i)
    out += csv::format_double(profile.stations()[i]) + ',' + csv::format_double(profile.elevations()[i]) + '\n';
  return out;
}

inline ImuGpsSequence parse_imugps_csv(std::string_view text, const std::string& source = {},
                                       std::string crossing_id = {}) {
  auto table = csv::parse(text, source);
  const auto& cols = imugps_csv_columns();
  auto idx = csv::require_columns(table, cols, source);
  std::vector<double> ts;
  std::vector<ImuRow> rows;
  ts.reserve(table.rows.size());
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    double t = csv::parse_double(row.cells[idx[0]], source, row.line, cols[0]);
    if (!ts.empty() && !(t > ts.back()))
      throw ParseError(source, row.line, cols[0], "timestamps must be strictly increasing");
    ImuRow r{};
    for (std::size_t c = 0; c < kImuChannels; ++c)
      r[c] = csv::parse_double(row.cells[idx[c + 1]], source, row.line, cols[c + 1]);
    ts.push_back(t);
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError(source, 0, "", "sequence has no rows");
  return ImuGpsSequence(std::move(ts), std::move(rows), std::move(crossing_id));
}

inline std::string serialize_imugps_csv(const ImuGpsSequence& seq) {
  std::string out;
  const auto& cols = imugps_csv_columns();
  out += csv::join(cols) + '\n';
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out += csv::format_double(seq.timestamps()[i]);
    for (double v : seq.rows()[i]) out += ',' + csv::format_double(v);
    out += '\n';
  }
  return out;
}

/// Ground-truth target of a paired sample written as a profile over the speed-integrated stations,
/// falling back to the row index when the vehicle is stationary.
inline Profile target_as_profile(const PairedSample& sample) {
  auto st = stations_from_speed(sample.input);
  bool increasing = true;
  for (std::size_t i = 1; i < st.size(); ++i) increasing = increasing && st[i] > st[i - 1];
  if (!increasing)
    for (std::size_t i = 0; i < st.size(); ++i) st[i] = static_cast<double>(i);
  return Profile(std::move(st), sample.target, sample.crossing_id());
}

// ---------------------------------------------------------------------------
// File helpers and the paired-sample manifest

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing file " + path.string());
}

struct ManifestEntry {
  std::string crossing_id;
  std::string imu_path;
  std::string profile_path;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline std::vector<ManifestEntry> parse_manifest_csv(std::string_view text, const std::string& source = {}) {
  auto table = csv::parse(text, source);
  auto idx = csv::require_columns(table, {"crossing_id", "imu_path", "profile_path"}, source);
  std::vector<ManifestEntry> out;
  for (const auto& row : table.rows) {
    ManifestEntry e{row.cells[idx[0]], row.cells[idx[1]], row.cells[idx[2]]};
    if (e.imu_path.empty()) throw ParseError(source, row.line, "imu_path", "empty path");
    if (e.profile_path.empty()) throw ParseError(source, row.line, "profile_path", "empty path");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string serialize_manifest_csv(std::span<const ManifestEntry> entries) {
  std::string out = "crossing_id,imu_path,profile_path\n";
  for (const auto& e : entries) out += csv::join({e.crossing_id, e.imu_path, e.profile_path}) + '\n';
  return out;
}

/// Loads the paired samples named by a manifest; relative paths resolve against the manifest's directory.
/// The profile file's elevations become the target and must have one row per IMU row.
inline std::vector<PairedSample> load_paired_samples(const std::filesystem::path& manifest_path) {
  auto entries = parse_manifest_csv(read_text_file(manifest_path), manifest_path.string());
  const auto base = manifest_path.parent_path();
  std::vector<PairedSample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    auto imu_file = base / e.imu_path;
    auto prof_file = base / e.profile_path;
    auto imu = parse_imugps_csv(read_text_file(imu_file), imu_file.string(), e.crossing_id);
    auto prof = parse_profile_csv(read_text_file(prof_file), prof_file.string(), e.crossing_id);
    if (prof.size() != imu.size())
      throw ParseError(prof_file.string(), 0, "",
                       "profile has " + std::to_string(prof.size()) + " rows but IMU sequence has " +
                           std::to_string(imu.size()));
    std::vector<double> target(prof.elevations().begin(), prof.elevations().end());
    out.emplace_back(std::move(imu), std::move(target));
  }
  return out;
}

} // namespace hrgc

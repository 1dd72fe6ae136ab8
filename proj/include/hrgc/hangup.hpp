#pragma once

// Quasi-static hang-up simulation of a rigid-underside vehicle over a longitudinal profile.
//
// Geometry: the wheels are point contacts at the rear axle station r and front axle station
// f = r + wheelbase. The underside between the axles is the chord through (r, z(r)) and
// (f, z(f)) raised by the wheelbase clearance; overhang undersides are the same chord extended
// past the axle and raised by the overhang clearance. The signed clearance at a station s is
//
//     delta(s) = clearance + chord(s) - z(s)
//
// and the clearance at one vehicle position is its minimum over the body extent. The sweep moves
// the rear axle across every position where the whole vehicle lies on the profile.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hrgc/csv.hpp"
#include "hrgc/error.hpp"
#include "hrgc/profile.hpp"
#include "hrgc/vehicle.hpp"

namespace hrgc {

/// Level thresholds (m): 4 in and 2 in.
inline constexpr double kLevel1MinDelta = 0.1016;
inline constexpr double kLevel2MinDelta = 0.0508;
inline constexpr double kLevel3MinDelta = 0.0;

/// 1: delta >= 0.1016; 2: 0.0508 <= delta < 0.1016; 3: 0 <= delta < 0.0508; 4: delta < 0.
/// Boundary values go to the safer (lower) level.
inline int classify_level(double delta) {
  if (!std::isfinite(delta)) throw ArgumentError("classify_level: delta must be finite");
  if (delta >= kLevel1MinDelta) return 1;
  if (delta >= kLevel2MinDelta) return 2;
  if (delta >= kLevel3MinDelta) return 3;
  return 4;
}

struct HangupOptions {
  double spacing = kDefaultSpacing; // profile resample spacing (m)
  double sweep_step = 0.0;          // rear-axle step (m); 0 means `spacing`
  double step() const noexcept { return sweep_step > 0.0 ? sweep_step : spacing; }
};

enum class Direction { Forward, Reverse };

inline std::string_view to_string(Direction d) { return d == Direction::Forward ? "forward" : "reverse"; }

struct ClearancePoint {
  double delta = std::numeric_limits<double>::infinity();
  double interference_station = 0.0;
};

struct CurvePoint {
  double rear_axle_station;
  double delta;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct HangupResult {
  double delta_min = std::numeric_limits<double>::infinity();
  double worst_rear_axle_station = 0.0;
  double worst_interference_station = 0.0;
  std::vector<CurvePoint> clearance_curve; // travel direction given by `direction`
  Direction direction = Direction::Forward;
  int level = 0; // 0 until classified
  std::string vehicle_label;
  std::string crossing_id;
};

namespace detail {

/// Minimum of clearance + chord(s) - z(s) over s in [lo, hi], evaluated at the grid nodes inside
/// the interval and at both ends. Exact for the piecewise-linear profile.
inline void underside_min(const Profile& grid, double lo, double hi, double rear, double z_rear, double slope,
                          double clearance, ClearancePoint& best) {
  auto s = grid.stations();
  auto z = grid.elevations();
  auto consider = [&](double station, double elev) {
    double d = clearance + ((z_rear - elev) + slope * (station - rear));
    if (d < best.delta) {
      best.delta = d;
      best.interference_station = station;
    }
  };
  consider(lo, elevation_at(grid, lo));
  auto first = std::upper_bound(s.begin(), s.end(), lo);
  auto last = std::lower_bound(first, s.end(), hi);
  for (auto it = first; it != last; ++it) {
    auto i = static_cast<std::size_t>(it - s.begin());
    consider(s[i], z[i]);
  }
  consider(hi, elevation_at(grid, hi));
}

/// Clearance at one rear-axle position on an already resampled profile.
inline ClearancePoint clearance_on_grid(const Profile& grid, const VehicleGeometry& v, double rear) {
  const double front = rear + v.wheelbase;
  const double rear_end = v.rear_overhang ? rear - v.rear_overhang->length : rear;
  const double front_end = v.front_overhang ? front + v.front_overhang->length : front;
  if (rear_end < grid.first_station() - kStationTolerance || front_end > grid.last_station() + kStationTolerance)
    throw RangeError("vehicle '" + v.label + "' at rear axle station " + csv::format_double(rear) +
                     " extends beyond the profile [" + csv::format_double(grid.first_station()) + ", " +
                     csv::format_double(grid.last_station()) + "]");
  const double z_rear = elevation_at(grid, rear);
  const double z_front = elevation_at(grid, front);
  const double slope = (z_front - z_rear) / v.wheelbase;
  ClearancePoint best;
  if (v.rear_overhang) underside_min(grid, rear_end, rear, rear, z_rear, slope, v.rear_overhang->clearance, best);
  underside_min(grid, rear, front, rear, z_rear, slope, v.clearance_wheelbase, best);
  if (v.front_overhang) underside_min(grid, front, front_end, rear, z_rear, slope, v.front_overhang->clearance, best);
  return best;
}

inline Profile mirrored(const Profile& p) {
  std::vector<double> st(p.size()), el(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    st[i] = -p.stations()[p.size() - 1 - i];
    el[i] = p.elevations()[p.size() - 1 - i];
  }
  return Profile(std::move(st), std::move(el), p.crossing_id());
}

/// The vehicle seen from the other side: front and rear overhangs exchanged.
inline VehicleGeometry reversed(const VehicleGeometry& v) {
  VehicleGeometry r = v;
  std::swap(r.front_overhang, r.rear_overhang);
  return r;
}

/// Sweep in the +station direction over a resampled profile.
inline HangupResult sweep(const Profile& grid, const VehicleGeometry& v, double step) {
  const double rear_extent = v.rear_overhang ? v.rear_overhang->length : 0.0;
  const double front_extent = v.front_overhang ? v.front_overhang->length : 0.0;
  const double start = grid.first_station() + rear_extent;
  const double room = grid.last_station() - front_extent - v.wheelbase - start;
  if (room < -kStationTolerance)
    throw RangeError("vehicle '" + v.label + "' (" + csv::format_double(rear_extent + v.wheelbase + front_extent) +
                     " m) does not fit on profile of length " + csv::format_double(grid.length()) + " m");
  const auto n = static_cast<std::size_t>(std::floor(std::max(room, 0.0) / step + 1e-9));
  HangupResult res;
  res.clearance_curve.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double rear = start + static_cast<double>(k) * step;
    ClearancePoint p = clearance_on_grid(grid, v, rear);
    res.clearance_curve.push_back({rear, p.delta});
    if (p.delta < res.delta_min) {
      res.delta_min = p.delta;
      res.worst_rear_axle_station = rear;
      res.worst_interference_station = p.interference_station;
    }
  }
  return res;
}

} // namespace detail

/// Signed clearance and its arg-min station with the rear axle at `rear_axle_station`.
/// The profile is resampled at `options.spacing` first.
inline ClearancePoint clearance_at_position(const Profile& profile, const VehicleGeometry& vehicle,
                                            double rear_axle_station, const HangupOptions& options = {}) {
  vehicle.validate();
  return detail::clearance_on_grid(resample(profile, options.spacing), vehicle, rear_axle_station);
}

/// Minimum clearance over all traversal positions (level left unset). Vehicles with an overhang
/// are swept in both directions; the direction holding the minimum is reported, with stations
/// in the profile's own coordinates.
inline HangupResult min_clearance(const Profile& profile, const VehicleGeometry& vehicle,
                                  const HangupOptions& options = {}) {
  vehicle.validate();
  if (!(options.step() > 0.0)) throw ArgumentError("min_clearance: sweep step must be positive");
  const Profile grid = resample(profile, options.spacing);
  HangupResult best = detail::sweep(grid, vehicle, options.step());
  best.direction = Direction::Forward;
  if (vehicle.has_overhang()) {
    // Reverse travel: the same vehicle crossing the mirrored profile.
    HangupResult rev = detail::sweep(detail::mirrored(grid), vehicle, options.step());
    if (rev.delta_min < best.delta_min) {
      rev.worst_rear_axle_station = -rev.worst_rear_axle_station;
      rev.worst_interference_station = -rev.worst_interference_station;
      for (auto& p : rev.clearance_curve) p.rear_axle_station = -p.rear_axle_station;
      rev.direction = Direction::Reverse;
      best = std::move(rev);
    }
  }
  best.vehicle_label = vehicle.label;
  best.crossing_id = profile.crossing_id();
  return best;
}

inline HangupResult analyze_crossing(const Profile& profile, const VehicleGeometry& vehicle,
                                     const HangupOptions& options = {}) {
  HangupResult r = min_clearance(profile, vehicle, options);
  r.level = classify_level(r.delta_min);
  return r;
}

// ---------------------------------------------------------------------------
// Network analysis

struct CrossingProfile {
  std::string crossing_id;
  Profile profile;
};

struct CrossingOutcome {
  std::string crossing_id;
  VehicleType vehicle_type{};
  Scenario scenario{};
  std::optional<HangupResult> result;
  std::string error; // set when result is empty
};

struct CrossingWorst {
  std::string crossing_id;
  int level = 0;
  VehicleType vehicle_type{};
  double delta_min_m = 0.0;
};

using LevelCounts = std::array<std::size_t, 4>; // index = level - 1

struct NetworkSummary {
  Scenario scenario{};
  std::vector<VehicleType> types;
  std::vector<CrossingOutcome> outcomes; // crossing-major (sorted by id), then `types` order
  std::map<VehicleType, LevelCounts> counts;
  std::vector<CrossingWorst> worst; // one per crossing with at least one result

  LevelCounts worst_counts() const {
    LevelCounts c{};
    for (const auto& w : worst) ++c[static_cast<std::size_t>(w.level - 1)];
    return c;
  }

  std::vector<const CrossingOutcome*> failures() const {
    std::vector<const CrossingOutcome*> f;
    for (const auto& o : outcomes)
      if (!o.result) f.push_back(&o);
    return f;
  }
};

/// Runs every crossing against the design vehicle of every type. Failures are recorded per
/// outcome and do not stop the batch. Up to `jobs` threads evaluate crossings; results are
/// merged in crossing-id order, so output does not depend on `jobs`.
inline NetworkSummary analyze_network(std::span<const CrossingProfile> crossings, const DimensionStats& stats,
                                      Scenario scenario, std::span<const VehicleType> types,
                                      const HangupOptions& options = {}, unsigned jobs = 1) {
  if (crossings.empty()) throw ArgumentError("analyze_network: no crossings");
  std::vector<std::size_t> order(crossings.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return crossings[a].crossing_id < crossings[b].crossing_id; });

  std::vector<std::vector<CrossingOutcome>> slots(crossings.size());
  auto run_one = [&](std::size_t slot) {
    const auto& c = crossings[order[slot]];
    auto& out = slots[slot];
    for (auto t : types) {
      CrossingOutcome o{c.crossing_id, t, scenario, std::nullopt, {}};
      try {
        VehicleGeometry v = design_vehicle(stats, t, scenario);
        HangupResult r = analyze_crossing(c.profile, v, options);
        r.crossing_id = c.crossing_id;
        o.result = std::move(r);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      out.push_back(std::move(o));
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(crossings.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < slots.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) run_one(i);
      });
  }

  NetworkSummary summary;
  summary.scenario = scenario;
  summary.types.assign(types.begin(), types.end());
  for (auto t : types) summary.counts[t] = LevelCounts{};
  for (auto& slot : slots) {
    std::optional<CrossingWorst> worst;
    for (auto& o : slot) {
      if (o.result) {
        const int level = o.result->level;
        ++summary.counts[o.vehicle_type][static_cast<std::size_t>(level - 1)];
        if (!worst || level > worst->level || (level == worst->level && o.result->delta_min < worst->delta_min_m))
          worst = CrossingWorst{o.crossing_id, level, o.vehicle_type, o.result->delta_min};
      }
      summary.outcomes.push_back(std::move(o));
    }
    if (worst) summary.worst.push_back(*worst);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Batch results CSV

struct ResultRow {
  std::string crossing_id;
  std::string vehicle_type;
  std::string scenario;
  double delta_min_m = 0.0;
  double worst_station_m = 0.0;
  int level = 0;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Results are written with 6 decimals (micrometres).
inline constexpr int kResultDecimals = 6;

inline std::vector<ResultRow> result_rows(const NetworkSummary& summary) {
  std::vector<ResultRow> rows;
  for (const auto& o : summary.outcomes) {
    if (!o.result) continue;
    rows.push_back({o.crossing_id, std::string(slug(o.vehicle_type)), std::string(slug(o.scenario)),
                    o.result->delta_min, o.result->worst_interference_station, o.result->level});
  }
  return rows;
}

inline std::string serialize_results_csv(std::span<const ResultRow> rows) {
  std::string out = "crossing_id,vehicle_type,scenario,delta_min_m,worst_station_m,level\n";
  for (const auto& r : rows)
    out += csv::join({r.crossing_id, r.vehicle_type, r.scenario, csv::format_fixed(r.delta_min_m, kResultDecimals),
                      csv::format_fixed(r.worst_station_m, kResultDecimals), std::to_string(r.level)}) +
           '\n';
  return out;
}

inline std::vector<ResultRow> parse_results_csv(std::string_view text, const std::string& source = {}) {
  auto table = csv::parse(text, source);
  auto idx = csv::require_columns(
      table, {"crossing_id", "vehicle_type", "scenario", "delta_min_m", "worst_station_m", "level"}, source);
  std::vector<ResultRow> rows;
  for (const auto& row : table.rows) {
    ResultRow r;
    r.crossing_id = row.cells[idx[0]];
    if (r.crossing_id.empty()) throw ParseError(source, row.line, "crossing_id", "empty crossing id");
    r.vehicle_type = row.cells[idx[1]];
    r.scenario = row.cells[idx[2]];
    r.delta_min_m = csv::parse_double(row.cells[idx[3]], source, row.line, "delta_min_m");
    r.worst_station_m = csv::parse_double(row.cells[idx[4]], source, row.line, "worst_station_m");
    double level = csv::parse_double(row.cells[idx[5]], source, row.line, "level");
    if (level != 1 && level != 2 && level != 3 && level != 4)
      throw ParseError(source, row.line, "level", "level must be 1, 2, 3 or 4");
    r.level = static_cast<int>(level);
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace hrgc

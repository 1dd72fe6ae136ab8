#pragma once

// Low-clearance vehicle dimensions: percentile statistics, the bundled design-vehicle
// table, and construction of design vehicles for the three analysis scenarios.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrgc/csv.hpp"
#include "hrgc/error.hpp"

namespace hrgc {

enum class VehicleType {
  BellyDump,
  DropDeck,
  Firetruck,
  Flatbed,
  LowBoy,
  RecreationalVehicle,
  RearDump,
  SchoolBus,
  Tanker,
  Class9BoxTrailer,
  CarTruckWithTrailer,
  Class5Truck,
};

inline constexpr std::size_t kVehicleTypeCount = 12;

inline constexpr std::array<VehicleType, kVehicleTypeCount> kAllVehicleTypes{
    VehicleType::BellyDump,        VehicleType::DropDeck,  VehicleType::Firetruck,
    VehicleType::Flatbed,          VehicleType::LowBoy,    VehicleType::RecreationalVehicle,
    VehicleType::RearDump,         VehicleType::SchoolBus, VehicleType::Tanker,
    VehicleType::Class9BoxTrailer, VehicleType::CarTruckWithTrailer, VehicleType::Class5Truck,
};

namespace detail {
struct VehicleNames {
  std::string_view slug;
  std::string_view label;
};
inline constexpr std::array<VehicleNames, kVehicleTypeCount> kVehicleNames{{
    {"belly_dump", "Belly Dump"},
    {"drop_deck", "Drop Deck"},
    {"firetruck", "Firetruck"},
    {"flatbed", "Flatbed"},
    {"low_boy", "Low Boy"},
    {"recreational_vehicle", "Recreational Vehicle"},
    {"rear_dump", "Rear Dump"},
    {"school_bus", "School Bus"},
    {"tanker", "Tanker"},
    {"class9_box_trailer", "Class 9 box trailer"},
    {"car_truck_with_trailer", "Car/truck with trailer"},
    {"class5_truck", "Class 5 Truck"},
}};

// Lowercase, keep alphanumerics only: "Car/truck with trailer" -> "cartruckwithtrailer".
inline std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
} // namespace detail

inline std::string_view slug(VehicleType t) { return detail::kVehicleNames[static_cast<std::size_t>(t)].slug; }
inline std::string_view label(VehicleType t) { return detail::kVehicleNames[static_cast<std::size_t>(t)].label; }

/// Accepts the slug ("low_boy"), the table label ("Low Boy"), or any spelling that matches
/// after dropping case and punctuation. "Trailer with car or truck" is an alias.
inline std::optional<VehicleType> parse_vehicle_type(std::string_view text) {
  const std::string key = detail::squash(text);
  if (key.empty()) return std::nullopt;
  for (auto t : kAllVehicleTypes)
    if (detail::squash(slug(t)) == key || detail::squash(label(t)) == key) return t;
  if (key == "trailerwithcarortruck" || key == "cartruckwithtrailer") return VehicleType::CarTruckWithTrailer;
  if (key == "rv") return VehicleType::RecreationalVehicle;
  return std::nullopt;
}

enum class Scenario { Median, Percentile75_25, WorstCase };

inline constexpr std::array<Scenario, 3> kAllScenarios{Scenario::Median, Scenario::Percentile75_25, Scenario::WorstCase};

inline std::string_view slug(Scenario s) {
  switch (s) {
  case Scenario::Median: return "median";
  case Scenario::Percentile75_25: return "p75-25";
  case Scenario::WorstCase: return "worst";
  }
  return "median";
}

inline std::optional<Scenario> parse_scenario(std::string_view text) {
  const std::string key = detail::squash(text);
  if (key == "median" || key == "p50") return Scenario::Median;
  if (key == "p7525" || key == "percentile7525" || key == "7525") return Scenario::Percentile75_25;
  if (key == "worst" || key == "worstcase") return Scenario::WorstCase;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

/// Linear-interpolation percentile on (n-1) ranks: p=0 gives the minimum, p=100 the maximum.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw ArgumentError("percentile: empty input");
  if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("percentile: p must be in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  if (lo == hi) return v[lo];
  const double frac = rank - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

struct Overhang {
  double length = 0.0;
  double clearance = 0.0;
  friend bool operator==(const Overhang&, const Overhang&) = default;
};

/// Rigid underside consumed by the hang-up engine.
struct VehicleGeometry {
  double wheelbase = 0.0;
  double clearance_wheelbase = 0.0;
  std::optional<Overhang> front_overhang;
  std::optional<Overhang> rear_overhang;
  std::string label;

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(wheelbase)) throw ArgumentError("vehicle: wheelbase must be > 0");
    if (!positive(clearance_wheelbase)) throw ArgumentError("vehicle: wheelbase clearance must be > 0");
    for (const auto* o : {&front_overhang, &rear_overhang})
      if (*o && (!positive((*o)->length) || !positive((*o)->clearance)))
        throw ArgumentError("vehicle: overhang length and clearance must be > 0");
  }

  bool has_overhang() const noexcept { return front_overhang.has_value() || rear_overhang.has_value(); }

  friend bool operator==(const VehicleGeometry&, const VehicleGeometry&) = default;
};

// ---------------------------------------------------------------------------
// Statistics

struct LengthStats {
  double p50 = 0, p75 = 0, max = 0;
  friend bool operator==(const LengthStats&, const LengthStats&) = default;
};

struct ClearanceStats {
  double min = 0, p25 = 0, p50 = 0;
  friend bool operator==(const ClearanceStats&, const ClearanceStats&) = default;
};

struct OverhangStats {
  std::size_t count = 0;
  std::optional<double> mean_length;
  std::optional<LengthStats> length;
  std::optional<ClearanceStats> clearance;
  friend bool operator==(const OverhangStats&, const OverhangStats&) = default;
};

struct TypeStats {
  VehicleType type{};
  std::size_t count = 0;
  LengthStats wheelbase;
  ClearanceStats clearance_wheelbase;
  OverhangStats front_overhang;
  OverhangStats rear_overhang;
  friend bool operator==(const TypeStats&, const TypeStats&) = default;
};

struct DimensionStats {
  std::vector<TypeStats> types; // ordered by VehicleType
  std::vector<std::string> warnings;

  const TypeStats* find(VehicleType t) const {
    for (const auto& s : types)
      if (s.type == t) return &s;
    return nullptr;
  }

  const TypeStats& at(VehicleType t) const {
    if (const auto* s = find(t)) return *s;
    throw LookupError("no statistics for vehicle type '" + std::string(slug(t)) + "'");
  }
};

/// Throws when ordering or positivity of a type's statistics is violated.
inline void check_invariants(const TypeStats& s) {
  const std::string who = std::string(label(s.type));
  if (s.count < 1) throw ArgumentError(who + ": count must be >= 1");
  if (!(s.wheelbase.p50 <= s.wheelbase.p75 && s.wheelbase.p75 <= s.wheelbase.max))
    throw ArgumentError(who + ": wheelbase percentiles out of order");
  if (!(s.clearance_wheelbase.min <= s.clearance_wheelbase.p25 && s.clearance_wheelbase.p25 <= s.clearance_wheelbase.p50))
    throw ArgumentError(who + ": clearance percentiles out of order");
  if (!(s.wheelbase.p50 > 0 && s.clearance_wheelbase.min > 0)) throw ArgumentError(who + ": non-positive dimension");
}

/// One measured vehicle.
struct DimensionRecord {
  VehicleType vehicle_type{};
  double wheelbase = 0.0;
  double clearance_wheelbase = 0.0;
  std::optional<double> front_overhang_length;
  std::optional<double> clearance_front;
  std::optional<double> rear_overhang_length;
  std::optional<double> clearance_rear;
};

namespace detail {
inline LengthStats length_stats(std::span<const double> v) {
  return {percentile(v, 50), percentile(v, 75), percentile(v, 100)};
}
inline ClearanceStats clearance_stats(std::span<const double> v) {
  return {percentile(v, 0), percentile(v, 25), percentile(v, 50)};
}
inline OverhangStats overhang_stats(const std::vector<double>& lengths, const std::vector<double>& clearances) {
  OverhangStats o;
  o.count = lengths.size();
  if (!lengths.empty()) {
    double sum = 0;
    for (double v : lengths) sum += v;
    o.mean_length = sum / static_cast<double>(lengths.size());
    o.length = length_stats(lengths);
  }
  if (!clearances.empty()) o.clearance = clearance_stats(clearances);
  return o;
}
} // namespace detail

/// Per-type statistics over `records`. Requested types without records are skipped and
/// reported in `warnings`.
inline DimensionStats summarize_dimensions(std::span<const DimensionRecord> records,
                                           std::span<const VehicleType> types = kAllVehicleTypes) {
  DimensionStats stats;
  for (auto t : kAllVehicleTypes) {
    if (std::find(types.begin(), types.end(), t) == types.end()) continue;
    std::vector<double> wb, cw, fl, fc, rl, rc;
    for (const auto& r : records) {
      if (r.vehicle_type != t) continue;
      wb.push_back(r.wheelbase);
      cw.push_back(r.clearance_wheelbase);
      if (r.front_overhang_length) fl.push_back(*r.front_overhang_length);
      if (r.clearance_front) fc.push_back(*r.clearance_front);
      if (r.rear_overhang_length) rl.push_back(*r.rear_overhang_length);
      if (r.clearance_rear) rc.push_back(*r.clearance_rear);
    }
    if (wb.empty()) {
      stats.warnings.push_back("no records for vehicle type '" + std::string(slug(t)) + "'; skipped");
      continue;
    }
    TypeStats s;
    s.type = t;
    s.count = wb.size();
    s.wheelbase = detail::length_stats(wb);
    s.clearance_wheelbase = detail::clearance_stats(cw);
    s.front_overhang = detail::overhang_stats(fl, fc);
    s.rear_overhang = detail::overhang_stats(rl, rc);
    stats.types.push_back(s);
  }
  return stats;
}

/// Design-vehicle dimensions at the wheelbase as published for 12 low-clearance vehicle types
/// (wheelbase 50%/75%/max and ground clearance min/25%/50%, metres). Front overhang means of
/// 2.25 m are attached to the fire truck and school bus; overhang clearances are not available.
inline DimensionStats load_bundled_stats() {
  struct Row {
    VehicleType type;
    std::size_t count;
    double wb50, wb75, wbmax, cmin, c25, c50;
  };
  static constexpr std::array<Row, kVehicleTypeCount> kTable{{
      {VehicleType::BellyDump, 24, 10.06, 10.29, 11.13, 0.23, 0.25, 0.32},
      {VehicleType::DropDeck, 28, 9.75, 10.36, 11.28, 0.25, 0.3, 0.41},
      {VehicleType::Firetruck, 8, 5.41, 5.54, 5.97, 0.27, 0.32, 0.34},
      {VehicleType::Flatbed, 53, 10.97, 10.97, 11.89, 0.25, 0.38, 0.43},
      {VehicleType::LowBoy, 10, 10.36, 10.78, 11.89, 0.18, 0.21, 0.23},
      {VehicleType::RecreationalVehicle, 50, 5.89, 6.79, 7.87, 0.15, 0.23, 0.3},
      {VehicleType::RearDump, 27, 8.53, 8.84, 9.45, 0.36, 0.41, 0.46},
      {VehicleType::SchoolBus, 46, 7.01, 7.01, 7.16, 0.15, 0.23, 0.23},
      {VehicleType::Tanker, 22, 9.3, 10.61, 11.58, 0.28, 0.37, 0.41},
      {VehicleType::Class9BoxTrailer, 43, 10.97, 11.58, 12.5, 0.2, 0.32, 0.38},
      {VehicleType::CarTruckWithTrailer, 23, 6.05, 8.27, 11.63, 0.25, 0.28, 0.3},
      {VehicleType::Class5Truck, 4, 6.91, 7.01, 7.32, 0.33, 0.37, 0.38},
  }};
  DimensionStats stats;
  for (const auto& r : kTable) {
    TypeStats s;
    s.type = r.type;
    s.count = r.count;
    s.wheelbase = {r.wb50, r.wb75, r.wbmax};
    s.clearance_wheelbase = {r.cmin, r.c25, r.c50};
    if (r.type == VehicleType::Firetruck || r.type == VehicleType::SchoolBus) s.front_overhang.mean_length = 2.25;
    check_invariants(s);
    stats.types.push_back(s);
  }
  return stats;
}

/// Design vehicle for `type` under `scenario`. Overhangs are included only when both their
/// length and clearance statistics are available.
inline VehicleGeometry design_vehicle(const DimensionStats& stats, VehicleType type, Scenario scenario) {
  const TypeStats& s = stats.at(type);
  auto pick_len = [&](const LengthStats& l) {
    switch (scenario) {
    case Scenario::Median: return l.p50;
    case Scenario::Percentile75_25: return l.p75;
    case Scenario::WorstCase: return l.max;
    }
    return l.p50;
  };
  auto pick_clr = [&](const ClearanceStats& c) {
    switch (scenario) {
    case Scenario::Median: return c.p50;
    case Scenario::Percentile75_25: return c.p25;
    case Scenario::WorstCase: return c.min;
    }
    return c.p50;
  };
  auto overhang = [&](const OverhangStats& o) -> std::optional<Overhang> {
    if (!o.length || !o.clearance) return std::nullopt;
    return Overhang{pick_len(*o.length), pick_clr(*o.clearance)};
  };
  VehicleGeometry v;
  v.wheelbase = pick_len(s.wheelbase);
  v.clearance_wheelbase = pick_clr(s.clearance_wheelbase);
  v.front_overhang = overhang(s.front_overhang);
  v.rear_overhang = overhang(s.rear_overhang);
  v.label = std::string(slug(type));
  v.validate();
  return v;
}

// ---------------------------------------------------------------------------
// CSV interfaces

inline double unit_scale(std::string_view units) {
  const std::string u = detail::squash(units);
  if (u.empty() || u == "m") return 1.0;
  if (u == "ft") return 0.3048;
  if (u == "in") return 0.0254;
  return 0.0;
}

inline std::vector<DimensionRecord> parse_dimension_csv(std::string_view text, const std::string& source = {}) {
  auto table = csv::parse(text, source);
  auto req = csv::require_columns(table, {"vehicle_type", "wheelbase", "clearance_wheelbase"}, source);
  auto opt = [&](const char* name) { return table.find(name); };
  const auto i_fl = opt("front_overhang_length"), i_fc = opt("clearance_front"), i_rl = opt("rear_overhang_length"),
             i_rc = opt("clearance_rear"), i_units = opt("units");
  std::vector<DimensionRecord> out;
  for (const auto& row : table.rows) {
    DimensionRecord r;
    auto t = parse_vehicle_type(row.cells[req[0]]);
    if (!t) throw ParseError(source, row.line, "vehicle_type", "unknown vehicle type '" + row.cells[req[0]] + "'");
    r.vehicle_type = *t;
    double scale = 1.0;
    if (i_units) {
      scale = unit_scale(row.cells[*i_units]);
      if (scale == 0.0) throw ParseError(source, row.line, "units", "expected m, ft or in");
    }
    auto positive = [&](std::size_t idx, const char* col) {
      double v = csv::parse_double(row.cells[idx], source, row.line, col) * scale;
      if (!(v > 0.0)) throw ParseError(source, row.line, col, "must be > 0");
      return v;
    };
    auto optional = [&](std::optional<std::size_t> idx, const char* col) -> std::optional<double> {
      if (!idx || csv::trim(row.cells[*idx]).empty()) return std::nullopt;
      return positive(*idx, col);
    };
    r.wheelbase = positive(req[1], "wheelbase");
    r.clearance_wheelbase = positive(req[2], "clearance_wheelbase");
    r.front_overhang_length = optional(i_fl, "front_overhang_length");
    r.clearance_front = optional(i_fc, "clearance_front");
    r.rear_overhang_length = optional(i_rl, "rear_overhang_length");
    r.clearance_rear = optional(i_rc, "clearance_rear");
    out.push_back(r);
  }
  return out;
}

/// Statistics as CSV, one row per vehicle type, metres.
inline std::string serialize_stats_csv(const DimensionStats& stats) {
  std::string out = "vehicle_type,label,count,wheelbase_p50_m,wheelbase_p75_m,wheelbase_max_m,"
                    "clearance_min_m,clearance_p25_m,clearance_p50_m,front_overhang_mean_m,rear_overhang_mean_m\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
  for (const auto& s : stats.types) {
    out += csv::join({std::string(slug(s.type)), std::string(label(s.type)), std::to_string(s.count),
                      csv::format_double(s.wheelbase.p50), csv::format_double(s.wheelbase.p75),
                      csv::format_double(s.wheelbase.max), csv::format_double(s.clearance_wheelbase.min),
                      csv::format_double(s.clearance_wheelbase.p25), csv::format_double(s.clearance_wheelbase.p50),
                      opt(s.front_overhang.mean_length), opt(s.rear_overhang.mean_length)}) +
           '\n';
  }
  return out;
}

} // namespace hrgc

#pragma once

// Crossing inventory and GeoJSON risk-map export.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrgc/csv.hpp"
#include "hrgc/error.hpp"
#include "hrgc/hangup.hpp"
#include "hrgc/profile.hpp"

namespace hrgc {

struct CrossingRecord {
  std::string crossing_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string county, city, street, highway, railroad_division, railroad_subdivision;
  std::string profile_path;
  friend bool operator==(const CrossingRecord&, const CrossingRecord&) = default;
};

class Inventory {
public:
  Inventory() = default;
  explicit Inventory(std::vector<CrossingRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.crossing_id.empty()) throw ArgumentError("inventory: empty crossing id");
      if (!(r.latitude >= -90.0 && r.latitude <= 90.0)) throw ArgumentError("inventory: latitude out of range for " + r.crossing_id);
      if (!(r.longitude >= -180.0 && r.longitude <= 180.0))
        throw ArgumentError("inventory: longitude out of range for " + r.crossing_id);
      if (!index_.emplace(r.crossing_id, i).second) throw ArgumentError("inventory: duplicate crossing id " + r.crossing_id);
    }
  }

  std::span<const CrossingRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const CrossingRecord* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
  }

private:
  std::vector<CrossingRecord> records_;
  std::map<std::string, std::size_t> index_;
};

inline const std::vector<std::string>& inventory_csv_columns() {
  static const std::vector<std::string> cols{"crossing_id", "latitude",          "longitude",
                                             "county",      "city",              "street",
                                             "highway",     "railroad_division", "railroad_subdivision",
                                             "profile_path"};
  return cols;
}

/// Requires crossing_id, latitude and longitude; the remaining documented columns are optional.
inline Inventory parse_inventory_csv(std::string_view text, const std::string& source = {}) {
  auto table = csv::parse(text, source);
  auto req = csv::require_columns(table, {"crossing_id", "latitude", "longitude"}, source);
  const auto& cols = inventory_csv_columns();
  std::vector<std::optional<std::size_t>> opt;
  for (std::size_t c = 3; c < cols.size(); ++c) opt.push_back(table.find(cols[c]));

  std::vector<CrossingRecord> records;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    CrossingRecord r;
    r.crossing_id = row.cells[req[0]];
    if (r.crossing_id.empty()) throw ParseError(source, row.line, "crossing_id", "empty crossing id");
    if (!seen.insert(r.crossing_id).second)
      throw ParseError(source, row.line, "crossing_id", "duplicate crossing id '" + r.crossing_id + "'");
    r.latitude = csv::parse_double(row.cells[req[1]], source, row.line, "latitude");
    if (r.latitude < -90.0 || r.latitude > 90.0) throw ParseError(source, row.line, "latitude", "must be in [-90, 90]");
    r.longitude = csv::parse_double(row.cells[req[2]], source, row.line, "longitude");
    if (r.longitude < -180.0 || r.longitude > 180.0)
      throw ParseError(source, row.line, "longitude", "must be in [-180, 180]");
    std::string* fields[] = {&r.county, &r.city, &r.street, &r.highway, &r.railroad_division, &r.railroad_subdivision,
                             &r.profile_path};
    for (std::size_t k = 0; k < opt.size(); ++k)
      if (opt[k]) *fields[k] = row.cells[*opt[k]];
    records.push_back(std::move(r));
  }
  return Inventory(std::move(records));
}

/// Profiles for every inventory record. A record's profile_path is resolved against
/// `profile_dir`; without one, `<crossing_id>.csv` in that directory is used.
inline std::vector<CrossingProfile> load_profiles(const Inventory& inventory, const std::filesystem::path& profile_dir) {
  std::vector<CrossingProfile> out;
  for (const auto& r : inventory.records()) {
    std::filesystem::path path = r.profile_path.empty() ? std::filesystem::path(r.crossing_id + ".csv")
                                                        : std::filesystem::path(r.profile_path);
    if (path.is_relative()) path = profile_dir / path;
    out.push_back({r.crossing_id, parse_profile_csv(read_text_file(path), path.string(), r.crossing_id)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// GeoJSON

inline constexpr std::array<const char*, 4> kLevelColors{"#2ecc40", "#ffdc00", "#ff851b", "#ff4136"};

/// Map marker colour for a hang-up level: green, yellow, orange, red.
inline const char* level_color(int level) {
  if (level < 1 || level > 4) throw ArgumentError("level_color: level must be 1..4");
  return kLevelColors[static_cast<std::size_t>(level - 1)];
}

/// One mapped result: a crossing's level for a vehicle under a scenario.
struct RiskPoint {
  std::string crossing_id;
  std::string vehicle_label;
  std::string scenario;
  double delta_min_m = 0.0;
  int level = 0;
};

inline constexpr int kCoordinateDecimals = 6;

inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

inline std::vector<RiskPoint> risk_points(std::span<const ResultRow> rows) {
  std::vector<RiskPoint> pts;
  for (const auto& r : rows) pts.push_back({r.crossing_id, r.vehicle_type, r.scenario, r.delta_min_m, r.level});
  return pts;
}

inline std::vector<RiskPoint> risk_points(const NetworkSummary& summary) {
  return risk_points(result_rows(summary));
}

/// Per-crossing worst level across vehicle types, labelled with the governing vehicle.
inline std::vector<RiskPoint> worst_risk_points(const NetworkSummary& summary) {
  std::vector<RiskPoint> pts;
  for (const auto& w : summary.worst)
    pts.push_back({w.crossing_id, std::string(slug(w.vehicle_type)), std::string(slug(summary.scenario)), w.delta_min_m,
                   w.level});
  return pts;
}

/// Worst level per crossing from result rows (ties broken by smaller delta, then first seen).
inline std::vector<RiskPoint> worst_risk_points(std::span<const ResultRow> rows) {
  std::vector<RiskPoint> pts;
  std::map<std::string, std::size_t> at;
  for (const auto& r : rows) {
    auto [it, fresh] = at.emplace(r.crossing_id, pts.size());
    if (fresh) {
      pts.push_back({r.crossing_id, r.vehicle_type, r.scenario, r.delta_min_m, r.level});
      continue;
    }
    auto& p = pts[it->second];
    if (r.level > p.level || (r.level == p.level && r.delta_min_m < p.delta_min_m))
      p = {r.crossing_id, r.vehicle_type, r.scenario, r.delta_min_m, r.level};
  }
  return pts;
}

/// FeatureCollection with one Point feature per risk point, coordinates [longitude, latitude].
inline nlohmann::json export_geojson(const Inventory& inventory, std::span<const RiskPoint> points) {
  std::vector<std::string> missing;
  for (const auto& p : points)
    if (!inventory.find(p.crossing_id)) missing.push_back(p.crossing_id);
  if (!missing.empty()) {
    std::string msg = "results reference crossings missing from the inventory:";
    for (const auto& m : missing) msg += " " + m;
    throw ReferenceError(msg);
  }

  nlohmann::json features = nlohmann::json::array();
  for (const auto& p : points) {
    const CrossingRecord& rec = *inventory.find(p.crossing_id);
    nlohmann::json props = {
        {"crossing_id", p.crossing_id},
        {"vehicle_label", p.vehicle_label},
        {"scenario", p.scenario},
        {"delta_min_m", round_to(p.delta_min_m, kResultDecimals)},
        {"level", p.level},
        {"marker-color", level_color(p.level)},
    };
    const std::pair<const char*, const std::string*> extra[] = {
        {"county", &rec.county},     {"city", &rec.city},
        {"street", &rec.street},     {"highway", &rec.highway},
        {"railroad_division", &rec.railroad_division}, {"railroad_subdivision", &rec.railroad_subdivision}};
    for (const auto& [key, value] : extra)
      if (!value->empty()) props[key] = *value;
    features.push_back({
        {"type", "Feature"},
        {"geometry",
         {{"type", "Point"},
          {"coordinates",
           {round_to(rec.longitude, kCoordinateDecimals), round_to(rec.latitude, kCoordinateDecimals)}}}},
        {"properties", std::move(props)},
    });
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline std::string geojson_text(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

/// A Point feature read back from an exported layer.
struct GeoFeature {
  std::string crossing_id;
  double longitude = 0.0;
  double latitude = 0.0;
  int level = 0;
  std::string marker_color;
  nlohmann::json properties;
};

/// Reads a FeatureCollection produced by export_geojson. Structural problems raise ParseError
/// naming the feature index.
inline std::vector<GeoFeature> parse_geojson(std::string_view text, const std::string& source = "geojson") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, "", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array())
    throw ParseError(source, 0, "type", "not a FeatureCollection");
  std::vector<GeoFeature> out;
  std::size_t i = 0;
  for (const auto& f : doc["features"]) {
    ++i;
    try {
      const auto& g = f.at("geometry");
      if (g.at("type").get<std::string>() != "Point") throw ParseError(source, i, "geometry", "not a Point");
      const auto& c = g.at("coordinates");
      if (c.size() != 2) throw ParseError(source, i, "coordinates", "expected [longitude, latitude]");
      GeoFeature gf;
      gf.longitude = c.at(0).get<double>();
      gf.latitude = c.at(1).get<double>();
      gf.properties = f.at("properties");
      gf.crossing_id = gf.properties.at("crossing_id").get<std::string>();
      gf.level = gf.properties.at("level").get<int>();
      gf.marker_color = gf.properties.at("marker-color").get<std::string>();
      out.push_back(std::move(gf));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, i, "feature", e.what());
    }
  }
  return out;
}

/// Layers keyed by vehicle label, plus "worst" holding the per-crossing worst level.
inline std::map<std::string, nlohmann::json> export_layers(const Inventory& inventory, std::span<const ResultRow> rows) {
  std::map<std::string, std::vector<RiskPoint>> by_vehicle;
  for (const auto& p : risk_points(rows)) by_vehicle[p.vehicle_label].push_back(p);
  std::map<std::string, nlohmann::json> layers;
  for (const auto& [label, pts] : by_vehicle) layers[label] = export_geojson(inventory, pts);
  layers["worst"] = export_geojson(inventory, worst_risk_points(rows));
  return layers;
}

} // namespace hrgc

#pragma once

// JSON views of analysis results shared by the CLI and the HTTP service.

#include <span>
#include <string>

#include "json.hpp"

#include "hrgc/hangup.hpp"
#include "hrgc/vehicle.hpp"

namespace hrgc {

inline nlohmann::json level_counts_json(const LevelCounts& c) {
  return {{"1", c[0]}, {"2", c[1]}, {"3", c[2]}, {"4", c[3]}};
}

inline nlohmann::json level_criteria_json() {
  return nlohmann::json::array({
      {{"level", 1}, {"criteria", "delta >= 0.1016 m"}},
      {{"level", 2}, {"criteria", "0.0508 m <= delta < 0.1016 m"}},
      {{"level", 3}, {"criteria", "0 m <= delta < 0.0508 m"}},
      {{"level", 4}, {"criteria", "delta < 0 m"}},
  });
}

inline nlohmann::json to_json(const NetworkSummary& s) {
  nlohmann::json by_type = nlohmann::json::object();
  for (auto t : s.types) by_type[std::string(slug(t))] = level_counts_json(s.counts.at(t));
  nlohmann::json crossings = nlohmann::json::array();
  for (const auto& w : s.worst)
    crossings.push_back({{"crossing_id", w.crossing_id},
                         {"worst_level", w.level},
                         {"governing_vehicle_type", std::string(slug(w.vehicle_type))},
                         {"delta_min_m", w.delta_min_m}});
  nlohmann::json failures = nlohmann::json::array();
  for (const auto* f : s.failures())
    failures.push_back({{"crossing_id", f->crossing_id},
                        {"vehicle_type", std::string(slug(f->vehicle_type))},
                        {"error", f->error}});
  return {
      {"scenario", std::string(slug(s.scenario))},
      {"crossings_analyzed", s.worst.size()},
      {"level_counts_by_vehicle_type", std::move(by_type)},
      {"worst_level_counts", level_counts_json(s.worst_counts())},
      {"crossings", std::move(crossings)},
      {"failures", std::move(failures)},
  };
}

/// Levels x scenarios table of per-crossing worst-level counts, plus each scenario's detail.
inline nlohmann::json summary_table_json(std::span<const NetworkSummary> summaries) {
  nlohmann::json rows = nlohmann::json::array();
  for (int level = 1; level <= 4; ++level) {
    nlohmann::json row = level_criteria_json()[static_cast<std::size_t>(level - 1)];
    for (const auto& s : summaries) row[std::string(slug(s.scenario))] = s.worst_counts()[static_cast<std::size_t>(level - 1)];
    rows.push_back(std::move(row));
  }
  nlohmann::json detail = nlohmann::json::array();
  for (const auto& s : summaries) detail.push_back(to_json(s));
  return {{"table", std::move(rows)}, {"scenarios", std::move(detail)}};
}

inline nlohmann::json to_json(const VehicleGeometry& v) {
  nlohmann::json j = {{"label", v.label}, {"wheelbase", v.wheelbase}, {"clearance_wheelbase", v.clearance_wheelbase}};
  if (v.front_overhang) j["front_overhang"] = {{"length", v.front_overhang->length}, {"clearance", v.front_overhang->clearance}};
  if (v.rear_overhang) j["rear_overhang"] = {{"length", v.rear_overhang->length}, {"clearance", v.rear_overhang->clearance}};
  return j;
}

inline nlohmann::json to_json(const DimensionStats& stats) {
  nlohmann::json types = nlohmann::json::array();
  auto overhang = [](const OverhangStats& o) {
    nlohmann::json j = {{"count", o.count}};
    if (o.mean_length) j["mean_length"] = *o.mean_length;
    if (o.length) j["length"] = {{"p50", o.length->p50}, {"p75", o.length->p75}, {"max", o.length->max}};
    if (o.clearance) j["clearance"] = {{"min", o.clearance->min}, {"p25", o.clearance->p25}, {"p50", o.clearance->p50}};
    return j;
  };
  for (const auto& s : stats.types)
    types.push_back({
        {"vehicle_type", std::string(slug(s.type))},
        {"label", std::string(label(s.type))},
        {"count", s.count},
        {"wheelbase", {{"p50", s.wheelbase.p50}, {"p75", s.wheelbase.p75}, {"max", s.wheelbase.max}}},
        {"clearance_wheelbase",
         {{"min", s.clearance_wheelbase.min}, {"p25", s.clearance_wheelbase.p25}, {"p50", s.clearance_wheelbase.p50}}},
        {"front_overhang", overhang(s.front_overhang)},
        {"rear_overhang", overhang(s.rear_overhang)},
    });
  return {{"vehicle_types", std::move(types)}, {"warnings", stats.warnings}};
}

} // namespace hrgc

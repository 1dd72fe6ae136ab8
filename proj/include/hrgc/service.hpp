#pragma once

// HTTP JSON API over an immutable loaded dataset. Every handler is a pure function of the loaded
// data and the request, so the router below is exercised directly by tests and mounted unchanged
// on an httplib server.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "hrgc/geodata.hpp"
#include "hrgc/hangup.hpp"
#include "hrgc/neural/hybrid.hpp"
#include "hrgc/report.hpp"
#include "hrgc/vehicle.hpp"

namespace hrgc {

/// Points returned in a clearance curve; longer curves are thinned by a uniform stride.
inline constexpr std::size_t kMaxCurvePoints = 2000;

struct ServiceData {
  Inventory inventory;
  std::vector<CrossingProfile> profiles;
  DimensionStats stats = load_bundled_stats();
  std::optional<nn::HybridModel> model;
  HangupOptions options;
  unsigned jobs = 1;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Every `stride`-th point starting with the first, with stride chosen so at most `max_points` remain.
template <typename T>
std::vector<T> decimate(const std::vector<T>& points, std::size_t max_points) {
  if (max_points == 0) throw ArgumentError("decimate: max_points must be >= 1");
  if (points.size() <= max_points) return points;
  const std::size_t stride = (points.size() + max_points - 1) / max_points;
  std::vector<T> out;
  out.reserve(max_points);
  for (std::size_t i = 0; i < points.size(); i += stride) out.push_back(points[i]);
  return out;
}

inline nlohmann::json profile_points_json(const Profile& p) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < p.size(); ++i) pts.push_back({{"station_m", p.stations()[i]}, {"elevation_m", p.elevations()[i]}});
  return pts;
}

namespace detail {

/// Collects per-field validation messages for a 422 response.
class FieldErrors {
public:
  void add(const std::string& field, const std::string& message) {
    if (!fields_.contains(field)) fields_[field] = message;
  }
  bool empty() const { return fields_.empty(); }
  ApiResponse response() const { return {422, {{"error", "invalid request"}, {"fields", fields_}}}; }

private:
  nlohmann::json fields_ = nlohmann::json::object();
};

inline std::optional<double> number_field(const nlohmann::json& obj, const std::string& key, const std::string& field,
                                          FieldErrors& errors) {
  if (!obj.contains(key)) {
    errors.add(field, "required");
    return std::nullopt;
  }
  if (!obj[key].is_number()) {
    errors.add(field, "must be a number");
    return std::nullopt;
  }
  return obj[key].get<double>();
}

inline std::optional<Overhang> overhang_field(const nlohmann::json& v, const std::string& key, FieldErrors& errors) {
  if (!v.contains(key) || v[key].is_null()) return std::nullopt;
  const std::string field = "vehicle." + key;
  if (!v[key].is_object()) {
    errors.add(field, "must be an object with length and clearance");
    return std::nullopt;
  }
  auto len = number_field(v[key], "length", field + ".length", errors);
  auto clr = number_field(v[key], "clearance", field + ".clearance", errors);
  if (!len || !clr) return std::nullopt;
  return Overhang{*len, *clr};
}

inline std::optional<std::vector<std::pair<double, double>>> points_field(const nlohmann::json& pts,
                                                                         FieldErrors& errors) {
  if (!pts.is_array()) {
    errors.add("profile", "must be an array of {station_m, elevation_m}");
    return std::nullopt;
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string field = "profile[" + std::to_string(i) + "]";
    if (!pts[i].is_object()) {
      errors.add(field, "must be an object");
      return std::nullopt;
    }
    auto s = number_field(pts[i], "station_m", field + ".station_m", errors);
    auto z = number_field(pts[i], "elevation_m", field + ".elevation_m", errors);
    if (!s || !z) return std::nullopt;
    out.emplace_back(*s, *z);
  }
  return out;
}

inline std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    auto amp = q.find('&');
    auto part = q.substr(0, amp);
    auto eq = part.find('=');
    if (!part.empty())
      out[httplib::detail::decode_url(std::string(part.substr(0, eq)), true)] =
          eq == std::string_view::npos ? "" : httplib::detail::decode_url(std::string(part.substr(eq + 1)), true);
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

} // namespace detail

class Service {
public:
  /// Precomputes the network summary of every scenario; the service never mutates afterwards.
  explicit Service(ServiceData data) : data_(std::move(data)) {
    for (std::size_t i = 0; i < data_.profiles.size(); ++i) profile_index_.emplace(data_.profiles[i].crossing_id, i);
    if (!data_.profiles.empty())
      for (auto s : kAllScenarios)
        summaries_.emplace(s, analyze_network(data_.profiles, data_.stats, s, kAllVehicleTypes, data_.options, data_.jobs));
  }

  const ServiceData& data() const noexcept { return data_; }

  /// Routes one request. `target` is the request path, optionally followed by a query string.
  ApiResponse handle(std::string_view method, std::string_view target, std::string_view body = {}) const {
    const auto q = target.find('?');
    const std::string path = httplib::detail::decode_url(std::string(target.substr(0, q)), false);
    return route(method, path, q == std::string_view::npos ? std::map<std::string, std::string>{}
                                                           : detail::parse_query(target.substr(q + 1)),
                 body);
  }

  /// Routes a request whose path is already URL-decoded.
  ApiResponse route(std::string_view method, std::string_view path, const std::map<std::string, std::string>& query,
                    std::string_view body) const {
    if (method == "OPTIONS") return {204, nullptr};

    static const std::regex profile_route(R"(^/api/crossings/([^/]+)/profile$)");
    std::cmatch m;
    const std::string p(path);
    const bool get = method == "GET", post = method == "POST";
    try {
      if (p == "/api/crossings") return get ? crossings(query) : not_allowed();
      if (std::regex_match(p.c_str(), m, profile_route))
        return get ? crossing_profile(m[1].str()) : not_allowed();
      if (p == "/api/vehicles") return get ? ApiResponse{200, to_json(data_.stats)} : not_allowed();
      if (p == "/api/hangup") return post ? hangup(body) : not_allowed();
      if (p == "/api/predict") return post ? predict(body) : not_allowed();
      if (p == "/api/network/summary") return get ? network_summary(query) : not_allowed();
    } catch (const Error& e) {
      return {422, {{"error", e.what()}}};
    }
    return {404, {{"error", "no such endpoint: " + p}}};
  }

  /// Registers every endpoint plus permissive cross-origin headers.
  void mount(httplib::Server& server) const {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      ApiResponse r = route(req.method, req.path, query, req.body);
      res.status = r.status;
      if (r.status != 204)
        res.set_content(r.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n",
                        "application/json; charset=utf-8");
    };
    const char* any = R"(/api/.*)";
    server.Get(any, bridge);
    server.Post(any, bridge);
    server.Options(any, bridge);
  }

  const NetworkSummary* summary(Scenario s) const {
    auto it = summaries_.find(s);
    return it == summaries_.end() ? nullptr : &it->second;
  }

private:
  static ApiResponse not_allowed() { return {405, {{"error", "method not allowed"}}}; }

  static std::optional<Scenario> scenario_param(const std::map<std::string, std::string>& query,
                                                detail::FieldErrors& errors) {
    auto it = query.find("scenario");
    if (it == query.end() || it->second.empty()) return Scenario::Median;
    auto s = parse_scenario(it->second);
    if (!s) errors.add("scenario", "must be one of median, p75-25, worst");
    return s;
  }

  ApiResponse crossings(const std::map<std::string, std::string>& query) const {
    detail::FieldErrors errors;
    auto scenario = scenario_param(query, errors);
    if (!errors.empty()) return errors.response();

    std::map<Scenario, std::map<std::string, const CrossingWorst*>> worst;
    for (const auto& [s, summary] : summaries_)
      for (const auto& w : summary.worst) worst[s][w.crossing_id] = &w;

    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : data_.inventory.records()) {
      nlohmann::json c = {{"crossing_id", r.crossing_id}, {"latitude", r.latitude},   {"longitude", r.longitude},
                          {"county", r.county},           {"city", r.city},           {"street", r.street},
                          {"highway", r.highway},         {"railroad_division", r.railroad_division},
                          {"railroad_subdivision", r.railroad_subdivision}};
      nlohmann::json levels = nlohmann::json::object();
      for (auto s : kAllScenarios) {
        auto it = worst[s].find(r.crossing_id);
        levels[std::string(slug(s))] = it == worst[s].end() ? nlohmann::json(nullptr) : nlohmann::json(it->second->level);
      }
      c["levels_by_scenario"] = std::move(levels);
      auto it = worst[*scenario].find(r.crossing_id);
      if (it != worst[*scenario].end()) {
        c["worst_level"] = it->second->level;
        c["marker_color"] = level_color(it->second->level);
        c["governing_vehicle_type"] = std::string(slug(it->second->vehicle_type));
        c["delta_min_m"] = it->second->delta_min_m;
      } else {
        c["worst_level"] = nullptr;
      }
      list.push_back(std::move(c));
    }
    return {200, {{"scenario", std::string(slug(*scenario))}, {"crossings", std::move(list)}}};
  }

  ApiResponse crossing_profile(const std::string& id) const {
    auto it = profile_index_.find(id);
    if (it == profile_index_.end()) return {404, {{"error", "unknown crossing: " + id}}};
    const Profile& p = data_.profiles[it->second].profile;
    return {200, {{"crossing_id", id}, {"points", profile_points_json(p)}}};
  }

  ApiResponse network_summary(const std::map<std::string, std::string>& query) const {
    detail::FieldErrors errors;
    auto scenario = scenario_param(query, errors);
    if (!errors.empty()) return errors.response();
    const NetworkSummary* s = summary(*scenario);
    if (!s) return {404, {{"error", "no crossings loaded"}}};
    return {200, to_json(*s)};
  }

  static std::optional<nlohmann::json> parse_body(std::string_view body, detail::FieldErrors& errors) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
      errors.add("body", "not valid JSON");
      return std::nullopt;
    }
    if (!j.is_object()) {
      errors.add("body", "must be a JSON object");
      return std::nullopt;
    }
    return j;
  }

  ApiResponse hangup(std::string_view body) const {
    detail::FieldErrors errors;
    auto req = parse_body(body, errors);
    if (!req) return errors.response();
    const nlohmann::json& j = *req;

    // Profile source: exactly one of crossing_id / profile.
    const bool has_id = j.contains("crossing_id"), has_inline = j.contains("profile");
    std::optional<Profile> profile;
    if (has_id == has_inline) {
      errors.add("profile", "give exactly one of crossing_id or profile");
    } else if (has_id) {
      if (!j["crossing_id"].is_string()) {
        errors.add("crossing_id", "must be a string");
      } else {
        const std::string id = j["crossing_id"].get<std::string>();
        auto it = profile_index_.find(id);
        if (it == profile_index_.end()) return {404, {{"error", "unknown crossing: " + id}}};
        profile = data_.profiles[it->second].profile;
      }
    } else if (auto pts = detail::points_field(j["profile"], errors)) {
      std::vector<double> s, z;
      for (auto [a, b] : *pts) {
        s.push_back(a);
        z.push_back(b);
      }
      try {
        profile = Profile(std::move(s), std::move(z));
      } catch (const ArgumentError& e) {
        errors.add("profile", e.what());
      }
    }

    // Vehicle source: exactly one of {vehicle_type, scenario} / vehicle.
    const bool has_type = j.contains("vehicle_type") || j.contains("scenario"), has_geom = j.contains("vehicle");
    std::optional<VehicleGeometry> vehicle;
    if (has_type == has_geom) {
      errors.add("vehicle", "give exactly one of {vehicle_type, scenario} or vehicle");
    } else if (has_type) {
      std::optional<VehicleType> type;
      std::optional<Scenario> scenario;
      if (!j.contains("vehicle_type") || !j["vehicle_type"].is_string())
        errors.add("vehicle_type", "required string");
      else if (!(type = parse_vehicle_type(j["vehicle_type"].get<std::string>())))
        errors.add("vehicle_type", "unknown vehicle type");
      if (!j.contains("scenario") || !j["scenario"].is_string())
        errors.add("scenario", "required string");
      else if (!(scenario = parse_scenario(j["scenario"].get<std::string>())))
        errors.add("scenario", "must be one of median, p75-25, worst");
      if (type && scenario) {
        try {
          vehicle = design_vehicle(data_.stats, *type, *scenario);
        } catch (const LookupError& e) {
          errors.add("vehicle_type", e.what());
        }
      }
    } else if (!j["vehicle"].is_object()) {
      errors.add("vehicle", "must be an object");
    } else {
      const auto& v = j["vehicle"];
      VehicleGeometry g;
      auto w = detail::number_field(v, "wheelbase", "vehicle.wheelbase", errors);
      auto c = detail::number_field(v, "clearance_wheelbase", "vehicle.clearance_wheelbase", errors);
      g.front_overhang = detail::overhang_field(v, "front_overhang", errors);
      g.rear_overhang = detail::overhang_field(v, "rear_overhang", errors);
      if (v.contains("label")) {
        if (v["label"].is_string())
          g.label = v["label"].get<std::string>();
        else
          errors.add("vehicle.label", "must be a string");
      }
      if (w && c) {
        g.wheelbase = *w;
        g.clearance_wheelbase = *c;
        try {
          g.validate();
          vehicle = g;
        } catch (const ArgumentError& e) {
          errors.add("vehicle", e.what());
        }
      }
    }

    HangupOptions options = data_.options;
    if (j.contains("resample_spacing") && !j["resample_spacing"].is_null()) {
      if (!j["resample_spacing"].is_number() || !(j["resample_spacing"].get<double>() > 0.0))
        errors.add("resample_spacing", "must be a positive number");
      else
        options.spacing = j["resample_spacing"].get<double>();
    }
    if (!errors.empty()) return errors.response();

    HangupResult r;
    try {
      r = analyze_crossing(*profile, *vehicle, options);
    } catch (const RangeError& e) {
      errors.add("profile", e.what());
      return errors.response();
    }
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : decimate(r.clearance_curve, kMaxCurvePoints))
      curve.push_back({{"rear_axle_station_m", pt.rear_axle_station}, {"delta_m", pt.delta}});
    return {200,
            {{"crossing_id", has_id ? nlohmann::json(j["crossing_id"]) : nlohmann::json(nullptr)},
             {"delta_min_m", r.delta_min},
             {"level", r.level},
             {"marker_color", level_color(r.level)},
             {"worst_rear_axle_station_m", r.worst_rear_axle_station},
             {"worst_interference_station_m", r.worst_interference_station},
             {"direction", std::string(to_string(r.direction))},
             {"clearance_curve", std::move(curve)},
             {"clearance_curve_points_total", r.clearance_curve.size()},
             {"vehicle", to_json(*vehicle)}}};
  }

  ApiResponse predict(std::string_view body) const {
    if (!data_.model) return {409, {{"error", "no model checkpoint loaded"}}};
    detail::FieldErrors errors;
    auto req = parse_body(body, errors);
    if (!req) return errors.response();
    const auto& j = *req;
    if (!j.contains("rows") || !j["rows"].is_array() || j["rows"].empty()) {
      errors.add("rows", "required non-empty array of IMU-GPS rows");
      return errors.response();
    }
    const auto& cols = imugps_csv_columns();
    std::vector<double> ts;
    std::vector<ImuRow> rows;
    for (std::size_t i = 0; i < j["rows"].size(); ++i) {
      const auto& row = j["rows"][i];
      const std::string field = "rows[" + std::to_string(i) + "]";
      if (!row.is_object()) {
        errors.add(field, "must be an object");
        return errors.response();
      }
      auto t = detail::number_field(row, cols[0], field + "." + cols[0], errors);
      ImuRow r{};
      for (std::size_t c = 0; c < kImuChannels; ++c)
        if (auto v = detail::number_field(row, cols[c + 1], field + "." + cols[c + 1], errors)) r[c] = *v;
      if (!errors.empty()) return errors.response();
      ts.push_back(*t);
      rows.push_back(r);
    }
    std::string id = j.contains("crossing_id") && j["crossing_id"].is_string() ? j["crossing_id"].get<std::string>() : "";
    try {
      ImuGpsSequence seq(std::move(ts), std::move(rows), id);
      Profile p = nn::predict_profile(*data_.model, seq);
      return {200, {{"crossing_id", id}, {"points", profile_points_json(p)}}};
    } catch (const Error& e) {
      errors.add("rows", e.what());
      return errors.response();
    }
  }

  ServiceData data_;
  std::map<std::string, std::size_t> profile_index_;
  std::map<Scenario, NetworkSummary> summaries_;
};

} // namespace hrgc

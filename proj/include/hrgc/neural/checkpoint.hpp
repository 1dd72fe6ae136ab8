#pragma once

// Model checkpoint: a JSON document.
//
//   {
//     "format": "hrgc-hybrid-checkpoint",
//     "version": 1,
//     "architecture": { "input_channels", "d_model", "lstm_hidden", "num_heads", "ff_width",
//                       "num_blocks", "positional_encoding" },
//     "normalization": { "mean": [...], "stddev": [...] },      // base-64 float64 arrays
//     "parameters": { "<name>": { "shape": [rows, cols], "data": "<base-64>" }, ... }
//   }
//
// Arrays are little-endian IEEE-754 float64 in row-major order, base-64 encoded (RFC 4648,
// padded), so values round-trip bit-exactly.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hrgc/error.hpp"
#include "hrgc/neural/hybrid.hpp"

namespace hrgc::nn {

inline constexpr const char* kCheckpointFormat = "hrgc-hybrid-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace base64 {

inline constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t n = bytes[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw ParseError("checkpoint", 0, "", "base-64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        v[k] = value(c);
        if (v[k] < 0 || pad > 0) throw ParseError("checkpoint", 0, "", "invalid base-64 character");
      }
    }
    const std::uint32_t n = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                            (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

} // namespace base64

inline std::string encode_doubles(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64::encode(bytes);
}

inline std::vector<double> decode_doubles(std::string_view text) {
  auto bytes = base64::decode(text);
  if (bytes.size() % 8 != 0) throw ParseError("checkpoint", 0, "", "array byte length not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline nlohmann::json checkpoint_json(const HybridModel& model) {
  const auto& a = model.arch;
  nlohmann::json params_json = nlohmann::json::object();
  for (const auto& p : params(const_cast<HybridModel&>(model))) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(p.size()));
    for (Eigen::Index r = 0; r < p.rows; ++r)
      for (Eigen::Index c = 0; c < p.cols; ++c) row_major.push_back(p.at(r, c));
    params_json[p.name] = {{"shape", {p.rows, p.cols}}, {"data", encode_doubles(row_major)}};
  }
  return {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"architecture",
       {{"input_channels", a.input_channels},
        {"d_model", a.d_model},
        {"lstm_hidden", a.lstm_hidden},
        {"num_heads", a.num_heads},
        {"ff_width", a.ff_width},
        {"num_blocks", a.num_blocks},
        {"positional_encoding", a.positional_encoding}}},
      {"normalization", {{"mean", encode_doubles(model.norm.mean)}, {"stddev", encode_doubles(model.norm.stddev)}}},
      {"parameters", std::move(params_json)},
  };
}

inline std::string save_checkpoint(const HybridModel& model) { return checkpoint_json(model).dump(1) + "\n"; }

inline HybridModel load_checkpoint(std::string_view text, const std::string& source = "checkpoint") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, "", std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw ParseError(source, 0, "format", "not a model checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ParseError(source, 0, "version", "unsupported checkpoint version");
    const auto& ja = j.at("architecture");
    Architecture a;
    a.input_channels = ja.at("input_channels").get<int>();
    a.d_model = ja.at("d_model").get<int>();
    a.lstm_hidden = ja.at("lstm_hidden").get<int>();
    a.num_heads = ja.at("num_heads").get<int>();
    a.ff_width = ja.at("ff_width").get<int>();
    a.num_blocks = ja.at("num_blocks").get<int>();
    a.positional_encoding = ja.at("positional_encoding").get<bool>();
    HybridModel m(a);
    m.norm.mean = decode_doubles(j.at("normalization").at("mean").get<std::string>());
    m.norm.stddev = decode_doubles(j.at("normalization").at("stddev").get<std::string>());
    if (m.norm.mean.size() != static_cast<std::size_t>(a.input_channels) || m.norm.stddev.size() != m.norm.mean.size())
      throw ParseError(source, 0, "normalization", "channel count mismatch");
    const auto& jp = j.at("parameters");
    auto views = params(m);
    if (jp.size() != views.size()) throw ParseError(source, 0, "parameters", "parameter count mismatch");
    for (auto& p : views) {
      if (!jp.contains(p.name)) throw ParseError(source, 0, p.name, "missing parameter");
      const auto& e = jp.at(p.name);
      if (e.at("shape").at(0).get<Eigen::Index>() != p.rows || e.at("shape").at(1).get<Eigen::Index>() != p.cols)
        throw ParseError(source, 0, p.name, "shape mismatch");
      auto values = decode_doubles(e.at("data").get<std::string>());
      if (static_cast<Eigen::Index>(values.size()) != p.size()) throw ParseError(source, 0, p.name, "size mismatch");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < p.rows; ++r)
        for (Eigen::Index c = 0; c < p.cols; ++c) p.at(r, c) = values[k++];
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, "", std::string("malformed checkpoint: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(source, 0, "architecture", e.what());
  }
}

} // namespace hrgc::nn

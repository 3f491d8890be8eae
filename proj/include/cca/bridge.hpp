#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cca/error.hpp"
#include "cca/scene.hpp"
#include "cca/texture.hpp"

namespace cca {

// Client for the cca-bridge/1 wire protocol:
//   GET  /v1/health -> {"protocol":"cca-bridge/1"}
//   POST /v1/score  {"protocol","camouflage":{width,height,channels},"transformation":{...}}
//                   -> {"detections":[...],"ground_truth":[...]}

inline constexpr const char* kBridgeProtocol = "cca-bridge/1";

struct BridgeConfig {
  std::string endpoint = "http://127.0.0.1:8765";
  double timeout_seconds = 30.0;
  int retry_limit = 2;
  std::string protocol_version = kBridgeProtocol;

  void validate() const {
    if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::config, "bridge timeout must be positive");
    if (retry_limit < 0) throw Error(ErrorKind::config, "bridge retry_limit must be >= 0");
    if (endpoint.empty()) throw Error(ErrorKind::config, "bridge endpoint is empty");
  }
};

namespace wire {

inline nlohmann::json score_request(const CamouflagePattern& pattern, const Transformation& t) {
  return {{"protocol", kBridgeProtocol},
          {"camouflage", pattern_to_json(pattern)},
          {"transformation", transformation_to_json(t)}};
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ProtocolError(path.empty() ? "<root>" : path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ProtocolError(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_number()) throw ProtocolError(path.empty() ? key : path + "." + key, "expected a number");
  return v.get<double>();
}

inline long long integer(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_number_integer()) throw ProtocolError(path.empty() ? key : path + "." + key, "expected an integer");
  return v.get<long long>();
}

inline bool boolean(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_boolean()) throw ProtocolError(path.empty() ? key : path + "." + key, "expected a boolean");
  return v.get<bool>();
}

inline Box box(const nlohmann::json& obj, const std::string& path) {
  const auto& v = field(obj, "box", path);
  const std::string where = path + ".box";
  if (!v.is_array() || v.size() != 4) throw ProtocolError(where, "expected [x_min,y_min,x_max,y_max]");
  for (const auto& c : v)
    if (!c.is_number()) throw ProtocolError(where, "coordinates must be numbers");
  Box b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (!b.valid()) throw ProtocolError(where, "degenerate box");
  return b;
}

inline SceneScore parse_scene_score(const nlohmann::json& j) {
  SceneScore out;
  const auto& dets = field(j, "detections", "");
  if (!dets.is_array()) throw ProtocolError("detections", "expected an array");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string path = "detections[" + std::to_string(i) + "]";
    Detection d;
    d.confidence = number(dets[i], "confidence", path);
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw ProtocolError(path + ".confidence", "outside [0,1]");
    d.box = box(dets[i], path);
    d.is_camouflaged = boolean(dets[i], "is_camouflaged", path);
    out.detections.push_back(d);
  }
  const auto& gts = field(j, "ground_truth", "");
  if (!gts.is_array()) throw ProtocolError("ground_truth", "expected an array");
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const std::string path = "ground_truth[" + std::to_string(i) + "]";
    GroundTruth g;
    g.vehicle_id = static_cast<int>(integer(gts[i], "vehicle_id", path));
    g.box = box(gts[i], path);
    g.is_camouflaged = boolean(gts[i], "is_camouflaged", path);
    out.ground_truth.push_back(g);
  }
  out.no_detection = out.unpainted_confidences().empty();
  return out;
}

inline Transformation parse_transformation(const nlohmann::json& j) {
  const auto& t = field(j, "transformation", "");
  Transformation out;
  out.location_id = static_cast<int>(integer(t, "location_id", "transformation"));
  out.orientation_id = static_cast<int>(integer(t, "orientation_id", "transformation"));
  out.lighting = number(t, "lighting", "transformation");
  out.split = split_for_location(out.location_id);
  try {
    validate(out);
  } catch (const Error& e) {
    throw ProtocolError("transformation", e.what());
  }
  return out;
}

inline CamouflagePattern parse_camouflage(const nlohmann::json& j) {
  const auto& c = field(j, "camouflage", "");
  const auto w = integer(c, "width", "camouflage");
  const auto h = integer(c, "height", "camouflage");
  if (w < 1 || h < 1) throw ProtocolError("camouflage.width", "dimensions must be positive");
  const auto& ch = field(c, "channels", "camouflage");
  if (!ch.is_array()) throw ProtocolError("camouflage.channels", "expected an array");
  std::vector<double> channels;
  channels.reserve(ch.size());
  for (const auto& v : ch) {
    if (!v.is_number()) throw ProtocolError("camouflage.channels", "expected numbers");
    channels.push_back(v.get<double>());
  }
  try {
    return CamouflagePattern(static_cast<std::size_t>(w), static_cast<std::size_t>(h), std::move(channels));
  } catch (const Error& e) {
    throw ProtocolError("camouflage.channels", e.what());
  }
}

struct ScoreRequest {
  CamouflagePattern camouflage;
  Transformation transformation;
};

inline ScoreRequest parse_score_request(const nlohmann::json& j) {
  const auto& p = field(j, "protocol", "");
  if (!p.is_string() || p.get<std::string>() != kBridgeProtocol)
    throw ProtocolError("protocol", std::string("expected \"") + kBridgeProtocol + "\"");
  return {parse_camouflage(j), parse_transformation(j)};
}

inline nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError("<body>", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace wire

/// Scene scorer backed by a remote render+detect service. Each request opens
/// its own connection, so concurrent calls share no mutable state.
class BridgeScorer final : public SceneScorer {
 public:
  explicit BridgeScorer(BridgeConfig config) : config_(std::move(config)) { config_.validate(); }

  SceneScore score(const CamouflagePattern& pattern, const Transformation& t) const override {
    return remote_score(pattern, t);
  }
  Concurrency concurrency() const noexcept override { return Concurrency::concurrent; }

  SceneScore remote_score(const CamouflagePattern& pattern, const Transformation& t) const {
    const std::string body = wire::score_request(pattern, t).dump();
    const auto response = send([&](httplib::Client& cli) { return cli.Post("/v1/score", body, "application/json"); });
    return wire::parse_scene_score(wire::parse_body(response));
  }

  std::string healthcheck() const {
    const auto response = send([](httplib::Client& cli) { return cli.Get("/v1/health"); });
    const auto j = wire::parse_body(response);
    const auto& p = wire::field(j, "protocol", "");
    if (!p.is_string()) throw ProtocolError("protocol", "expected a string");
    const auto version = p.get<std::string>();
    if (version != config_.protocol_version)
      throw Error(ErrorKind::version, "service speaks " + version + ", client expects " + config_.protocol_version);
    return version;
  }

  const BridgeConfig& config() const noexcept { return config_; }

 private:
  template <typename Request>
  std::string send(Request&& request) const {
    const int attempts = config_.retry_limit + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      httplib::Client cli(config_.endpoint);
      if (!cli.is_valid()) throw Error(ErrorKind::config, "invalid bridge endpoint " + config_.endpoint);
      const auto sec = static_cast<time_t>(config_.timeout_seconds);
      const auto usec = static_cast<time_t>(std::round((config_.timeout_seconds - static_cast<double>(sec)) * 1e6));
      cli.set_connection_timeout(sec, usec);
      cli.set_read_timeout(sec, usec);
      cli.set_write_timeout(sec, usec);
      auto res = request(cli);
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) throw ServiceError(res->status, res->body.substr(0, 200));
      return res->body;
    }
    throw TransportError(attempts, config_.endpoint + ": " + last_error);
  }

  BridgeConfig config_;
};

}  // namespace cca

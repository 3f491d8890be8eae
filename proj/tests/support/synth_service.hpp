#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cca/bridge.hpp"
#include "cca/synthsim.hpp"

namespace cca::testing {

// In-process stand-in for the reference bridge service: hosts synth_score
// behind the cca-bridge/1 endpoints, with switchable failure behaviours.
class SynthService {
 public:
  enum class Behaviour { normal, wrong_version, missing_detections, server_error, bad_confidence, slow };

  explicit SynthService(SynthSceneSpec spec, Behaviour behaviour = Behaviour::normal)
      : spec_(std::move(spec)), behaviour_(behaviour) {
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      ++requests_;
      const char* version = behaviour_ == Behaviour::wrong_version ? "cca-bridge/2" : kBridgeProtocol;
      res.set_content(nlohmann::json{{"protocol", version}}.dump(), "application/json");
    });
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (behaviour_ == Behaviour::slow) std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      if (behaviour_ == Behaviour::server_error) {
        res.status = 500;
        res.set_content("detector crashed", "text/plain");
        return;
      }
      try {
        const auto request = wire::parse_score_request(nlohmann::json::parse(req.body));
        auto body = scene_score_to_json(synth_score(spec_, request.camouflage, request.transformation));
        if (behaviour_ == Behaviour::missing_detections) body.erase("detections");
        if (behaviour_ == Behaviour::bad_confidence) body["detections"][0]["confidence"] = 1.3;
        res.set_content(body.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~SynthService() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  SynthService(const SynthService&) = delete;
  SynthService& operator=(const SynthService&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }

 private:
  SynthSceneSpec spec_;
  Behaviour behaviour_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

// A local port with nothing listening on it.
inline int unused_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  return port;
}

}  // namespace cca::testing

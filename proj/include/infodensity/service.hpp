#pragma once

#include <memory>
#include <string>

#include "infodensity/engine.hpp"

namespace httplib {
class Server;
}

namespace infodensity {

/// HTTP front end over a shared ScoringEngine.
///
///   POST /v1/score       rollout group (rollouts.jsonl line) -> {"group_id", "breakdowns": [...]}
///   POST /v1/trajectory  {"question", "steps", "answer"}     -> {"entropies": [...]}
///   GET  /healthz        -> {"status": "ok", "judge_reachable": bool}
///
/// Schema violations answer 400 with {"error", "field"}; judge failures 502.
class ScoringService {
 public:
  explicit ScoringService(std::shared_ptr<const ScoringEngine> engine);
  ~ScoringService();
  ScoringService(const ScoringService&) = delete;
  ScoringService& operator=(const ScoringService&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the
  /// bound port. Throws std::runtime_error when the address is unavailable.
  int bind(const std::string& host, int port);

  /// Serves until stop() is called. In-flight requests complete first.
  void run();
  void stop();
  bool running() const;

 private:
  std::shared_ptr<const ScoringEngine> engine_;
  std::unique_ptr<httplib::Server> server_;
};

/// Runs the service until SIGINT/SIGTERM. Returns the process exit status.
int cmd_serve(const EngineConfig& cfg);

}  // namespace infodensity

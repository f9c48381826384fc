#include "infodensity/service.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <pthread.h>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>

#include "infodensity/log.hpp"

namespace infodensity {
namespace {

using Json = nlohmann::ordered_json;

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 const std::string& field = {}) {
  Json body = {{"error", message}};
  if (!field.empty()) body["field"] = field;
  reply(res, status, body);
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    reply_error(res, 400, fmt::format("request body is not valid JSON: {}", e.what()));
    return std::nullopt;
  }
}

// Runs a handler body, mapping the library's exception types onto statuses.
template <typename Fn>
void guarded(httplib::Response& res, const char* route, Fn&& fn) {
  try {
    fn();
  } catch (const SchemaError& e) {
    reply_error(res, 400, e.what(), e.field());
  } catch (const JudgeError& e) {
    log::error("judge_failure", {{"route", route}, {"error", e.what()}, {"attempts", e.attempts()}});
    reply_error(res, 502, e.what());
  } catch (const InvalidInput& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    log::error("request_failed", {{"route", route}, {"error", e.what()}});
    reply_error(res, 500, e.what());
  }
}

}  // namespace

ScoringService::ScoringService(std::shared_ptr<const ScoringEngine> engine)
    : engine_(std::move(engine)), server_(std::make_unique<httplib::Server>()) {
  if (!engine_) throw InvalidInput("scoring service needs an engine");

  server_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, "/v1/score", [&] {
      const auto body = parse_body(req, res);
      if (!body) return;
      const auto group = body->get<RolloutGroupRecord>();
      const auto start = std::chrono::steady_clock::now();
      const auto records = engine_->score(group);
      Json out = {{"group_id", group.group_id}, {"breakdowns", Json::array()}};
      for (const auto& r : records) out["breakdowns"].push_back(Json(r));
      log::info("score_request",
                {{"group_id", group.group_id},
                 {"traces", records.size()},
                 {"elapsed_ms", std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start)
                                    .count()}});
      reply(res, 200, out);
    });
  });

  server_->Post("/v1/trajectory", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, "/v1/trajectory", [&] {
      const auto body = parse_body(req, res);
      if (!body) return;
      if (!body->is_object()) throw SchemaError("", "request body must be a JSON object");
      TraceQuery q;
      for (const char* key : {"question", "answer"}) {
        if (!body->contains(key) || !(*body)[key].is_string() || (*body)[key].get<std::string>().empty()) {
          throw SchemaError(key, fmt::format("field '{}' must be a non-empty string", key));
        }
      }
      q.question = (*body)["question"].get<std::string>();
      q.answer = (*body)["answer"].get<std::string>();
      q.trace_id = body->value("trace_id", std::string("trajectory"));
      if (body->contains("steps")) {
        const auto& steps = (*body)["steps"];
        if (!steps.is_array()) throw SchemaError("steps", "field 'steps' must be an array of strings");
        for (const auto& s : steps) {
          if (!s.is_string()) throw SchemaError("steps", "field 'steps' must be an array of strings");
          q.steps.push_back(s.get<std::string>());
        }
      }
      const auto traj = engine_->trajectory(q);
      reply(res, 200, Json{{"trace_id", traj.trace_id}, {"entropies", traj.values}});
    });
  });

  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    bool reachable = false;
    try {
      reachable = engine_->judge().reachable();
    } catch (const std::exception& e) {
      log::warn("judge_health_check_failed", {{"error", e.what()}});
    }
    reply(res, 200, Json{{"status", "ok"}, {"judge_reachable", reachable}});
  });

  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        reply_error(res, 500, message);
      });
}

ScoringService::~ScoringService() { stop(); }

int ScoringService::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void ScoringService::run() {
  if (!server_->listen_after_bind()) {
    // listen_after_bind also returns false after a regular stop().
    log::debug("service_listen_returned");
  }
}

void ScoringService::stop() {
  if (server_) server_->stop();
}

bool ScoringService::running() const { return server_->is_running(); }

int cmd_serve(const EngineConfig& cfg) {
  // Block termination signals before any thread starts so only the watcher
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    auto engine = make_engine(cfg);
    ScoringService service(engine);
    const int port = service.bind(cfg.bind.host, cfg.bind.port);
    log::info("service_listening", {{"host", cfg.bind.host}, {"port", port}});

    std::atomic<bool> stopping{false};
    std::atomic<bool> finished{false};
    std::jthread watcher([&service, &stopping, &finished, signals] {
      int sig = 0;
      sigwait(&signals, &sig);
      if (stopping.exchange(true)) return;
      log::info("service_shutdown", {{"signal", sig}});
      // stop() is ignored until the accept loop is up, so keep asking.
      while (!finished) {
        service.stop();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    });
    service.run();
    finished = true;
    // If run() returned on its own, wake the watcher so it can be joined.
    if (!stopping.exchange(true)) pthread_kill(watcher.native_handle(), SIGTERM);
    return 0;
  } catch (const std::exception& e) {
    log::error("serve_failed", {{"error", e.what()}});
    return 1;
  }
}

}  // namespace infodensity

#include "infodensity/config.hpp"

#include <charconv>
#include <fstream>

#include <fmt/core.h>

namespace infodensity {
namespace {

using Json = nlohmann::ordered_json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

template <typename T>
void take(const Json& section, const char* key, T& target) {
  if (section.contains(key)) {
    try {
      target = section.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw InvalidInput(fmt::format("config key '{}': {}", key, e.what()));
    }
  }
}

void take_ms(const Json& section, const char* key, std::chrono::milliseconds& target) {
  if (section.contains(key)) {
    std::int64_t ms = 0;
    take(section, key, ms);
    target = std::chrono::milliseconds(ms);
  }
}

const Json& section_of(const Json& doc, const char* name) {
  static const Json empty = Json::object();
  if (!doc.contains(name)) return empty;
  const auto& s = doc.at(name);
  if (!s.is_object()) throw InvalidInput(fmt::format("config section '{}' must be an object", name));
  return s;
}

}  // namespace

BindAddress parse_bind(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw InvalidInput(fmt::format("bind address '{}' must look like host:port", text));
  }
  BindAddress out;
  out.host = std::string(text.substr(0, colon));
  if (out.host.empty()) out.host = "0.0.0.0";
  const auto port_text = text.substr(colon + 1);
  int port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size()) {
    throw InvalidInput(fmt::format("bind address '{}' has an invalid port", text));
  }
  out.port = port;
  return out;
}

void EngineConfig::validate() const {
  judge.validate();
  reward.validate();
  segmentation.validate();
  if (interp_n < 2) throw InvalidInput("analysis interp_n must be >= 2");
  if (bind.port < 1 || bind.port > 65535) {
    throw InvalidInput(fmt::format("port {} outside [1, 65535]", bind.port));
  }
}

void apply_config_json(EngineConfig& cfg, const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw InvalidInput("config document must be a JSON object");

  const auto& judge = section_of(doc, "judge");
  if (judge.contains("backend")) {
    std::string backend;
    take(judge, "backend", backend);
    cfg.judge.backend = parse_backend(backend);
  }
  take(judge, "endpoint_url", cfg.judge.endpoint_url);
  take(judge, "model_name", cfg.judge.model_name);
  take(judge, "top_k", cfg.judge.top_k);
  take_ms(judge, "request_timeout_ms", cfg.judge.request_timeout);
  take(judge, "max_parallel_requests", cfg.judge.max_parallel_requests);
  if (judge.contains("auth_token")) {
    std::string token;
    take(judge, "auth_token", token);
    cfg.judge.auth_token = token;
  }
  take(judge, "step_separator", cfg.judge.step_separator);
  take(judge, "max_retries", cfg.judge.max_retries);
  take_ms(judge, "retry_backoff_ms", cfg.judge.retry_backoff);
  if (judge.contains("mock_fixture")) {
    std::string fixture;
    take(judge, "mock_fixture", fixture);
    cfg.judge.mock_fixture = resolve(base_dir, fixture);
  }

  const auto& reward = section_of(doc, "reward");
  take(reward, "alpha", cfg.reward.alpha);
  take(reward, "lambda", cfg.reward.lambda);
  take(reward, "h0_floor", cfg.reward.h0_floor);
  take(reward, "clamp_auc", cfg.reward.clamp_auc);

  const auto& seg = section_of(doc, "segmentation");
  if (seg.contains("delimiter")) {
    std::string d;
    take(seg, "delimiter", d);
    cfg.segmentation.delimiter = parse_delimiter(d);
  }
  take(seg, "custom_regex", cfg.segmentation.custom_regex);
  take(seg, "min_step_chars", cfg.segmentation.min_step_chars);
  take(seg, "think_open", cfg.segmentation.think_open);
  take(seg, "think_close", cfg.segmentation.think_close);

  take(section_of(doc, "analysis"), "interp_n", cfg.interp_n);

  const auto& service = section_of(doc, "service");
  if (service.contains("bind")) {
    std::string bind;
    take(service, "bind", bind);
    cfg.bind = parse_bind(bind);
  }

  take(doc, "log_level", cfg.log_level);
  take(doc, "strict", cfg.strict);
}

void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file '{}'", path.string()));
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(fmt::format("config file '{}': {}", path.string(), e.what()));
  }
  apply_config_json(cfg, doc, path.parent_path());
}

Json describe(const EngineConfig& cfg) {
  const auto& j = cfg.judge;
  return Json{
      {"judge",
       {{"backend", j.backend == JudgeBackendKind::http ? "http" : "mock"},
        {"endpoint_url", j.endpoint_url},
        {"model_name", j.model_name},
        {"top_k", j.top_k},
        {"request_timeout_ms", j.request_timeout.count()},
        {"max_parallel_requests", j.max_parallel_requests},
        {"auth_token", j.auth_token ? "<redacted>" : ""},
        {"max_retries", j.max_retries},
        {"retry_backoff_ms", j.retry_backoff.count()},
        {"mock_fixture", j.mock_fixture.string()}}},
      {"reward",
       {{"alpha", cfg.reward.alpha},
        {"lambda", cfg.reward.lambda},
        {"h0_floor", cfg.reward.h0_floor},
        {"clamp_auc", cfg.reward.clamp_auc}}},
      {"segmentation",
       {{"delimiter", to_string(cfg.segmentation.delimiter)},
        {"min_step_chars", cfg.segmentation.min_step_chars}}},
      {"analysis", {{"interp_n", cfg.interp_n}}},
      {"service", {{"bind", fmt::format("{}:{}", cfg.bind.host, cfg.bind.port)}}},
      {"log_level", cfg.log_level},
      {"strict", cfg.strict}};
}

}  // namespace infodensity

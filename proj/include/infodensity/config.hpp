#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "infodensity/ingest.hpp"
#include "infodensity/judge.hpp"
#include "infodensity/reward.hpp"
#include "json.hpp"

namespace infodensity {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Parses "host:port" (or ":port", which binds 0.0.0.0).
BindAddress parse_bind(std::string_view text);

struct EngineConfig {
  JudgeConfig judge;
  RewardParams reward;
  SegmentationConfig segmentation;
  std::size_t interp_n = 20;
  BindAddress bind;
  std::string log_level = "info";
  bool strict = false;

  void validate() const;
};

/// Overlays the keys present in `doc` onto `cfg`. Relative paths are
/// resolved against `base_dir`. Layout:
///   {"judge": {"backend", "endpoint_url", "model_name", "top_k",
///              "request_timeout_ms", "max_parallel_requests", "auth_token",
///              "step_separator", "max_retries", "retry_backoff_ms",
///              "mock_fixture"},
///    "reward": {"alpha", "lambda", "h0_floor", "clamp_auc"},
///    "segmentation": {"delimiter", "custom_regex", "min_step_chars",
///                     "think_open", "think_close"},
///    "analysis": {"interp_n"}, "service": {"bind"},
///    "log_level", "strict"}
void apply_config_json(EngineConfig& cfg, const nlohmann::ordered_json& doc,
                       const std::filesystem::path& base_dir = {});

void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path);

/// Effective configuration for logging; the auth token is redacted.
nlohmann::ordered_json describe(const EngineConfig& cfg);

}  // namespace infodensity

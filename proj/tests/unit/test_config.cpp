#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "infodensity/config.hpp"
#include "infodensity/log.hpp"

using namespace infodensity;
namespace fs = std::filesystem;

TEST_SUITE("config") {
  TEST_CASE("bind addresses") {
    const auto b = parse_bind("127.0.0.1:9000");
    CHECK(b.host == "127.0.0.1");
    CHECK(b.port == 9000);
    const auto any = parse_bind(":8081");
    CHECK(any.host == "0.0.0.0");
    CHECK(any.port == 8081);
    CHECK_THROWS_AS(parse_bind("localhost"), InvalidInput);
    CHECK_THROWS_AS(parse_bind("localhost:http"), InvalidInput);
  }

  TEST_CASE("json overlay touches only the keys present") {
    EngineConfig cfg;
    const auto doc = nlohmann::ordered_json::parse(R"({
      "judge": {"backend": "http", "endpoint_url": "http://judge:8000/v1", "top_k": 20,
                "request_timeout_ms": 1500, "retry_backoff_ms": 10, "auth_token": "t"},
      "reward": {"alpha": 0.25},
      "segmentation": {"delimiter": "single_newline", "min_step_chars": 4},
      "analysis": {"interp_n": 50},
      "service": {"bind": "0.0.0.0:9100"},
      "log_level": "debug",
      "strict": true})");
    apply_config_json(cfg, doc);
    CHECK(cfg.judge.backend == JudgeBackendKind::http);
    CHECK(cfg.judge.endpoint_url == "http://judge:8000/v1");
    CHECK(cfg.judge.top_k == 20);
    CHECK(cfg.judge.request_timeout == std::chrono::milliseconds(1500));
    CHECK(cfg.judge.retry_backoff == std::chrono::milliseconds(10));
    CHECK(cfg.judge.auth_token == "t");
    CHECK(cfg.judge.max_parallel_requests == 8);
    CHECK(cfg.reward.alpha == 0.25);
    CHECK(cfg.reward.lambda == 0.05);
    CHECK(cfg.segmentation.delimiter == StepDelimiter::single_newline);
    CHECK(cfg.segmentation.min_step_chars == 4);
    CHECK(cfg.interp_n == 50);
    CHECK(cfg.bind.port == 9100);
    CHECK(cfg.log_level == "debug");
    CHECK(cfg.strict);
    CHECK_NOTHROW(cfg.validate());

    const auto described = describe(cfg);
    CHECK(described["judge"]["auth_token"] == "<redacted>");
  }

  TEST_CASE("bad values are rejected") {
    EngineConfig cfg;
    CHECK_THROWS_AS(apply_config_json(cfg, nlohmann::ordered_json::parse(R"({"reward": {"alpha": "high"}})")), InvalidInput);
    CHECK_THROWS_AS(apply_config_json(cfg, nlohmann::ordered_json::parse(R"({"judge": {"backend": "grpc"}})")), InvalidInput);
    CHECK_THROWS_AS(apply_config_json(cfg, nlohmann::ordered_json::parse(R"({"judge": 3})")), InvalidInput);
    CHECK_THROWS_AS(apply_config_json(cfg, nlohmann::ordered_json::parse("[]")), InvalidInput);

    cfg = EngineConfig{};
    cfg.judge.mock_fixture = "f.json";
    CHECK_NOTHROW(cfg.validate());
    cfg.reward.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.reward.alpha = 0.5;
    cfg.bind.port = 70000;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.bind.port = 8080;
    cfg.interp_n = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  }

  TEST_CASE("config file paths resolve against the file's directory") {
    const auto dir = fs::temp_directory_path() / "infodensity-config-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream out(dir / "config.json");
      out << R"({"judge": {"mock_fixture": "fixtures/judge.json"}})";
    }
    EngineConfig cfg;
    apply_config_file(cfg, dir / "config.json");
    CHECK(cfg.judge.mock_fixture == dir / "fixtures/judge.json");

    {
      std::ofstream out(dir / "abs.json");
      out << R"({"judge": {"mock_fixture": "/srv/judge.json"}})";
    }
    apply_config_file(cfg, dir / "abs.json");
    CHECK(cfg.judge.mock_fixture == fs::path("/srv/judge.json"));

    {
      std::ofstream out(dir / "broken.json");
      out << "{";
    }
    CHECK_THROWS_AS(apply_config_file(cfg, dir / "broken.json"), InvalidInput);
    CHECK_THROWS_AS(apply_config_file(cfg, dir / "missing.json"), InvalidInput);
    fs::remove_all(dir);
  }

  TEST_CASE("log levels") {
    CHECK_NOTHROW(log::set_level("warn"));
    CHECK_THROWS(log::set_level("loud"));
    log::set_level("info");
  }
}

// infodensity: score rollout groups, analyze labeled traces, or serve scoring
// over HTTP. Settings resolve as flags > INFODENSITY_* environment > config
// file > defaults.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "infodensity/config.hpp"
#include "infodensity/engine.hpp"
#include "infodensity/log.hpp"
#include "infodensity/records.hpp"
#include "infodensity/service.hpp"

#ifndef INFODENSITY_DATA_DIR
#define INFODENSITY_DATA_DIR "data"
#endif

namespace {

using infodensity::EngineConfig;

struct CommonOptions {
  std::optional<std::string> config;
  std::optional<std::string> log_level;
  std::optional<std::string> backend;
  std::optional<std::string> mock_fixture;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> auth_token;
  std::optional<int> max_parallel;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config, "JSON config file")->envname("INFODENSITY_CONFIG");
  cmd.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")
      ->envname("INFODENSITY_LOG_LEVEL");
  cmd.add_option("--judge-backend", o.backend, "http|mock")->envname("INFODENSITY_JUDGE_BACKEND");
  cmd.add_option("--mock-fixture", o.mock_fixture, "mock judge fixture (implies the mock backend)")
      ->envname("INFODENSITY_MOCK_FIXTURE");
  cmd.add_option("--endpoint", o.endpoint, "OpenAI-compatible judge base URL")
      ->envname("INFODENSITY_ENDPOINT");
  cmd.add_option("--model", o.model, "judge model name")->envname("INFODENSITY_MODEL");
  cmd.add_option("--auth-token", o.auth_token, "bearer token for the judge")
      ->envname("INFODENSITY_AUTH_TOKEN");
  cmd.add_option("--max-parallel", o.max_parallel, "max in-flight judge requests")
      ->envname("INFODENSITY_MAX_PARALLEL");
}

EngineConfig resolve(const CommonOptions& o) {
  EngineConfig cfg;
  if (o.config) infodensity::apply_config_file(cfg, *o.config);
  if (o.log_level) cfg.log_level = *o.log_level;
  if (o.backend) cfg.judge.backend = infodensity::parse_backend(*o.backend);
  if (o.endpoint) {
    cfg.judge.endpoint_url = *o.endpoint;
    if (!o.backend) cfg.judge.backend = infodensity::JudgeBackendKind::http;
  }
  if (o.mock_fixture) {
    cfg.judge.mock_fixture = *o.mock_fixture;
    if (!o.backend) cfg.judge.backend = infodensity::JudgeBackendKind::mock;
  }
  if (o.model) cfg.judge.model_name = *o.model;
  if (o.auth_token) cfg.judge.auth_token = *o.auth_token;
  if (o.max_parallel) cfg.judge.max_parallel_requests = *o.max_parallel;
  return cfg;
}

int run_mock_demo(const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                  EngineConfig cfg) {
  cfg.judge.backend = infodensity::JudgeBackendKind::mock;
  cfg.judge.mock_fixture = data_dir / "judge_fixture.json";
  std::filesystem::create_directories(out_dir);

  const auto rewards = out_dir / "rewards.jsonl";
  std::cout << "== score " << (data_dir / "rollouts.jsonl").string() << '\n';
  if (int rc = infodensity::cmd_score(cfg, data_dir / "rollouts.jsonl", rewards); rc != 0) return rc;
  for (const auto& r : infodensity::load_jsonl<infodensity::RewardRecord>(rewards, true).records) {
    const auto& b = r.breakdown;
    std::cout << fmt::format(
        "  {}/{}: H=[{:.4f}] auc={:.4f} r_mono={:.4f} r_quality={:.4f} r_length={:.4f} "
        "correct={} reward={:.6f}\n",
        r.group_id, b.trace_id, fmt::join(r.trajectory, ", "), b.auc, b.r_mono, b.r_quality,
        b.r_length, b.correct, b.final_reward);
  }
  std::cout << "== analyze " << (data_dir / "labeled.jsonl").string() << '\n';
  return infodensity::cmd_analyze(cfg, data_dir / "labeled.jsonl", out_dir / "analysis");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InfoDensity reward engine: entropy-trajectory scoring of reasoning traces"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* score = app.add_subcommand("score", "score rollouts.jsonl into rewards.jsonl");
  add_common(*score, common);
  std::string rollouts;
  std::string out;
  bool strict = false;
  std::optional<double> alpha;
  std::optional<double> lambda;
  score->add_option("--rollouts", rollouts, "input rollouts.jsonl")->required()
      ->envname("INFODENSITY_ROLLOUTS");
  score->add_option("--out", out, "output rewards.jsonl")->required()->envname("INFODENSITY_OUT");
  auto* strict_flag =
      score->add_flag("--strict", strict, "fail on malformed records")->envname("INFODENSITY_STRICT");
  score->add_option("--alpha", alpha, "AUC weight in the quality mix")->envname("INFODENSITY_ALPHA");
  score->add_option("--lambda", lambda, "length-scaling intensity")->envname("INFODENSITY_LAMBDA");

  auto* analyze = app.add_subcommand("analyze", "entropy-trajectory analysis of labeled traces");
  add_common(*analyze, common);
  std::string labeled;
  std::string out_dir;
  std::optional<std::size_t> interp_n;
  analyze->add_option("--labeled", labeled, "input labeled.jsonl")->required()
      ->envname("INFODENSITY_LABELED");
  analyze->add_option("--out-dir", out_dir, "output directory")->required()
      ->envname("INFODENSITY_OUT_DIR");
  analyze->add_option("--interp-n", interp_n, "normalized trajectory length")
      ->envname("INFODENSITY_INTERP_N");
  auto* analyze_strict = analyze->add_flag("--strict", strict, "fail on malformed records");

  auto* serve = app.add_subcommand("serve", "run the HTTP scoring service");
  add_common(*serve, common);
  std::optional<std::string> bind;
  serve->add_option("--bind", bind, "listen address host:port")->envname("INFODENSITY_BIND");

  auto* demo = app.add_subcommand("mock-demo", "run the bundled mock fixture end to end");
  add_common(*demo, common);
  std::string data_dir = INFODENSITY_DATA_DIR;
  std::string demo_out = "mock-demo-out";
  demo->add_option("--data-dir", data_dir, "directory holding the bundled fixture");
  demo->add_option("--out-dir", demo_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  EngineConfig cfg;
  try {
    cfg = resolve(common);
    if (alpha) cfg.reward.alpha = *alpha;
    if (lambda) cfg.reward.lambda = *lambda;
    if (strict_flag->count() > 0 || analyze_strict->count() > 0) cfg.strict = strict;
    if (interp_n) cfg.interp_n = *interp_n;
    if (bind) cfg.bind = infodensity::parse_bind(*bind);
    infodensity::log::set_level(cfg.log_level);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
  infodensity::log::debug("effective_config", infodensity::describe(cfg));

  if (score->parsed()) return infodensity::cmd_score(cfg, rollouts, out);
  if (analyze->parsed()) return infodensity::cmd_analyze(cfg, labeled, out_dir);
  if (serve->parsed()) return infodensity::cmd_serve(cfg);
  try {
    return run_mock_demo(data_dir, demo_out, cfg);
  } catch (const std::exception& e) {
    std::cerr << "mock-demo failed: " << e.what() << '\n';
    return 1;
  }
}

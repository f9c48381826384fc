#include "infodensity/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>

#include "infodensity/log.hpp"

namespace infodensity {
namespace {

using Json = nlohmann::ordered_json;

bool is_continuation_byte(unsigned char c) { return (c & 0xC0) == 0x80; }

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return !is_continuation_byte(static_cast<unsigned char>(c)); }));
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  for (char c : s) {
    if (out.empty() || !is_continuation_byte(static_cast<unsigned char>(c))) out.emplace_back();
    out.back().push_back(c);
  }
  return out;
}

[[noreturn]] void fixture_error(const std::string& message) {
  throw JudgeError(JudgeErrorKind::fixture, "mock fixture: " + message);
}

}  // namespace

void JudgeConfig::validate() const {
  if (top_k < 1) throw InvalidInput(fmt::format("judge top_k must be >= 1, got {}", top_k));
  if (max_parallel_requests < 1) {
    throw InvalidInput(
        fmt::format("max_parallel_requests must be >= 1, got {}", max_parallel_requests));
  }
  if (max_retries < 0) throw InvalidInput("max_retries must be >= 0");
  if (request_timeout.count() <= 0) throw InvalidInput("request_timeout must be positive");
  if (backend == JudgeBackendKind::http && endpoint_url.empty()) {
    throw InvalidInput("http judge backend needs an endpoint_url");
  }
  if (backend == JudgeBackendKind::mock && mock_fixture.empty()) {
    throw InvalidInput("mock judge backend needs a fixture path");
  }
}

JudgeBackendKind parse_backend(std::string_view name) {
  if (name == "http") return JudgeBackendKind::http;
  if (name == "mock") return JudgeBackendKind::mock;
  throw InvalidInput(fmt::format("unknown judge backend '{}'", name));
}

std::string build_continuation_prompt(const PromptContext& ctx, std::string_view separator) {
  std::string prompt = ctx.question;
  for (const auto& step : ctx.step_prefix) {
    prompt.append(separator);
    prompt.append(step);
  }
  prompt.append(separator);
  prompt.append(kContinuation);
  return prompt;
}

JudgeError::JudgeError(JudgeErrorKind kind, const std::string& message, int attempts)
    : std::runtime_error(message), kind_(kind), attempts_(attempts) {}

JudgeError JudgeError::annotated(std::string trace_id, std::size_t prefix_length) const {
  JudgeError e(kind_,
               fmt::format("trace '{}', prefix length {}: {}", trace_id, prefix_length, what()),
               attempts_);
  e.prefix_length_ = prefix_length;
  e.trace_id_ = std::move(trace_id);
  return e;
}

// ---------------------------------------------------------------------------
// Mock backend

std::string MockJudgeTable::context_key(const PromptContext& ctx) {
  // Length-prefixed fields, so no choice of step text can alias another context.
  std::string key;
  auto put = [&key](std::string_view field) {
    key.append(std::to_string(field.size())).push_back(':');
    key.append(field);
  };
  put(ctx.question);
  key.append(std::to_string(ctx.step_prefix.size())).push_back('#');
  for (const auto& s : ctx.step_prefix) put(s);
  put(ctx.answer);
  return key;
}

void MockJudgeTable::add(const PromptContext& ctx, std::vector<TokenDistribution> positions) {
  if (positions.empty()) fixture_error("context with no answer positions");
  for (const auto& d : positions) {
    if (d.tail_mass != 0.0) fixture_error("stored distributions must have tail_mass 0");
    try {
      validate(d);
    } catch (const InvalidInput& e) {
      fixture_error(e.what());
    }
  }
  auto key = context_key(ctx);
  const auto [it, inserted] = rows_.try_emplace(std::move(key), positions);
  if (!inserted && it->second != positions) {
    fixture_error(fmt::format("conflicting rows for question '{}' with {} prefix steps",
                              ctx.question, ctx.step_prefix.size()));
  }
}

const std::vector<TokenDistribution>* MockJudgeTable::find(const PromptContext& ctx) const {
  const auto it = rows_.find(context_key(ctx));
  return it == rows_.end() ? nullptr : &it->second;
}

MockJudgeTable MockJudgeTable::from_json(const Json& fixture) {
  if (!fixture.is_object()) fixture_error("top level must be an object");
  if (!fixture.contains("vocabulary") || !fixture["vocabulary"].is_array()) {
    fixture_error("missing 'vocabulary' array");
  }
  const auto vocabulary = fixture["vocabulary"].get<std::vector<std::string>>();
  const std::string tokenization = fixture.value("tokenization", std::string("whole"));
  if (tokenization != "whole" && tokenization != "chars") {
    fixture_error(fmt::format("unknown tokenization '{}'", tokenization));
  }
  if (!fixture.contains("contexts") || !fixture["contexts"].is_array()) {
    fixture_error("missing 'contexts' array");
  }

  MockJudgeTable table;
  std::size_t index = 0;
  for (const auto& entry : fixture["contexts"]) {
    try {
      PromptContext ctx;
      ctx.question = entry.at("question").get<std::string>();
      ctx.answer = entry.at("answer").get<std::string>();
      const auto steps = entry.value("steps", std::vector<std::string>{});
      std::vector<std::string> tokens;
      if (entry.contains("answer_tokens")) {
        tokens = entry["answer_tokens"].get<std::vector<std::string>>();
      } else if (tokenization == "chars") {
        tokens = utf8_chars(ctx.answer);
      } else {
        tokens = {ctx.answer};
      }
      const auto& rows = entry.at("rows");
      if (!rows.is_array() || rows.size() != steps.size() + 1) {
        fixture_error(fmt::format("context {}: need {} rows (one per prefix length)", index,
                                  steps.size() + 1));
      }
      for (std::size_t t = 0; t < rows.size(); ++t) {
        const auto& row = rows[t];
        if (!row.is_array() || row.size() != tokens.size()) {
          fixture_error(fmt::format("context {}, prefix {}: need {} answer positions", index, t,
                                    tokens.size()));
        }
        std::vector<TokenDistribution> positions;
        for (const auto& probs : row) {
          const auto p = probs.get<std::vector<double>>();
          if (p.size() != vocabulary.size()) {
            fixture_error(fmt::format("context {}, prefix {}: row width {} != vocabulary size {}",
                                      index, t, p.size(), vocabulary.size()));
          }
          TokenDistribution d;
          for (std::size_t v = 0; v < p.size(); ++v) d.entries.push_back({vocabulary[v], p[v]});
          positions.push_back(std::move(d));
        }
        ctx.step_prefix.assign(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(t));
        table.add(ctx, std::move(positions));
      }
    } catch (const Json::exception& e) {
      fixture_error(fmt::format("context {}: {}", index, e.what()));
    }
    ++index;
  }
  return table;
}

MockJudgeTable MockJudgeTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fixture_error(fmt::format("cannot open '{}'", path.string()));
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    fixture_error(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

AnswerPositionSet MockJudge::query(const PromptContext& ctx) const {
  const auto* rows = table_.find(ctx);
  if (rows == nullptr) {
    fixture_error(fmt::format("no entry for question '{}' with {} prefix steps", ctx.question,
                              ctx.step_prefix.size()));
  }
  return AnswerPositionSet{*rows};
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpJudge::HttpJudge(JudgeConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw JudgeError(JudgeErrorKind::configuration,
                     fmt::format("endpoint '{}' lacks a scheme", cfg_.endpoint_url));
  }
  const auto path_start = cfg_.endpoint_url.find('/', scheme_end + 3);
  host_ = cfg_.endpoint_url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "/v1" : cfg_.endpoint_url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

AnswerPositionSet HttpJudge::parse_completion(const Json& response, std::size_t answer_begin,
                                              std::size_t answer_end) {
  auto config_error = [](const std::string& message) {
    return JudgeError(JudgeErrorKind::configuration, "judge response: " + message);
  };
  if (!response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw config_error("no choices");
  }
  const auto& choice = response["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw config_error("backend returned no logprobs (is echo + logprobs supported?)");
  }
  const auto& lp = choice["logprobs"];
  if (!lp.contains("top_logprobs") || !lp.contains("text_offset") ||
      !lp["top_logprobs"].is_array() || !lp["text_offset"].is_array()) {
    throw config_error("logprobs lack top_logprobs or text_offset");
  }
  const auto& top = lp["top_logprobs"];
  const auto& offsets = lp["text_offset"];
  if (top.size() != offsets.size()) throw config_error("top_logprobs/text_offset length mismatch");

  AnswerPositionSet out;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto offset = offsets[i].get<std::size_t>();
    if (offset < answer_begin || offset >= answer_end) continue;
    if (!top[i].is_object()) throw config_error(fmt::format("no top_logprobs at token {}", i));
    TokenDistribution d;
    double mass = 0.0;
    for (auto it = top[i].begin(); it != top[i].end(); ++it) {
      const double p = std::exp(it->get<double>());
      d.entries.push_back({it.key(), p});
      mass += p;
    }
    if (mass > 1.0 + kSumTolerance) {
      throw config_error(fmt::format("top-k probabilities sum to {} at token {}", mass, i));
    }
    d.tail_mass = std::max(0.0, 1.0 - mass);
    out.positions.push_back(std::move(d));
  }
  if (out.positions.empty()) throw config_error("no tokens fall inside the answer span");
  return out;
}

AnswerPositionSet HttpJudge::query(const PromptContext& ctx) const {
  const auto prompt = build_continuation_prompt(ctx, cfg_.step_separator);
  const auto answer_begin = utf8_length(prompt);
  const auto answer_end = answer_begin + utf8_length(ctx.answer);

  Json body = {{"model", cfg_.model_name},
               {"prompt", prompt + ctx.answer},
               {"max_tokens", 1},
               {"temperature", 0},
               {"echo", true},
               {"logprobs", cfg_.top_k}};
  const auto payload = body.dump();
  const auto path = base_path_ + "/completions";

  httplib::Headers headers;
  if (cfg_.auth_token) headers.emplace("Authorization", "Bearer " + *cfg_.auth_token);

  const int max_attempts = cfg_.max_retries + 1;
  std::string last_failure;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(cfg_.retry_backoff * (1 << (attempt - 2)));
    }
    httplib::Client client(host_);
    client.set_connection_timeout(cfg_.request_timeout);
    client.set_read_timeout(cfg_.request_timeout);
    client.set_write_timeout(cfg_.request_timeout);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
    } else if (res->status >= 500 || res->status == 429) {
      last_failure = fmt::format("HTTP {}", res->status);
    } else if (res->status != 200) {
      throw JudgeError(JudgeErrorKind::configuration,
                       fmt::format("judge rejected request: HTTP {}: {}", res->status,
                                   res->body.substr(0, 200)),
                       attempt);
    } else {
      Json parsed;
      try {
        parsed = Json::parse(res->body);
      } catch (const Json::parse_error& e) {
        throw JudgeError(JudgeErrorKind::configuration,
                         fmt::format("judge response is not JSON: {}", e.what()), attempt);
      }
      try {
        return parse_completion(parsed, answer_begin, answer_end);
      } catch (const Json::exception& e) {
        throw JudgeError(JudgeErrorKind::configuration,
                         fmt::format("malformed judge response: {}", e.what()), attempt);
      }
    }
    log::debug("judge_retry", {{"attempt", attempt}, {"error", last_failure}});
  }
  throw JudgeError(JudgeErrorKind::transport,
                   fmt::format("judge at {}{} unreachable after {} attempts: {}", host_, path,
                               max_attempts, last_failure),
                   max_attempts);
}

bool HttpJudge::reachable() const {
  httplib::Client client(host_);
  const auto timeout = std::min(cfg_.request_timeout, std::chrono::milliseconds(2000));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  httplib::Headers headers;
  if (cfg_.auth_token) headers.emplace("Authorization", "Bearer " + *cfg_.auth_token);
  auto res = client.Get(base_path_ + "/models", headers);
  return res && res->status < 500;
}

// ---------------------------------------------------------------------------
// Request budget

RequestLimiter::RequestLimiter(std::size_t max_in_flight) : capacity_(max_in_flight) {
  if (capacity_ == 0) throw InvalidInput("request limiter needs a capacity >= 1");
}

void RequestLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return in_flight_ < capacity_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void RequestLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_one();
}

std::size_t RequestLimiter::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

// ---------------------------------------------------------------------------
// Judge client

Judge::Judge(std::shared_ptr<const JudgeBackend> backend, JudgeConfig cfg)
    : backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      limiter_(std::make_unique<RequestLimiter>(static_cast<std::size_t>(
          std::max(1, cfg_.max_parallel_requests)))) {
  if (!backend_) throw InvalidInput("judge needs a backend");
}

AnswerPositionSet Judge::query_answer_distributions(const PromptContext& ctx) const {
  RequestLimiter::Permit permit(*limiter_);
  return backend_->query(ctx);
}

EntropyTrajectory Judge::trajectory_for_trace(const TraceQuery& trace) const {
  return std::move(trajectories(std::span(&trace, 1)).front().trajectory);
}

std::vector<TrajectoryResult> Judge::trajectories(std::span<const TraceQuery> traces) const {
  struct Slot {
    std::size_t trace;
    std::size_t prefix;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (std::size_t t = 0; t <= traces[i].steps.size(); ++t) slots.push_back({i, t});
  }

  std::vector<double> entropies(slots.size(), 0.0);
  std::vector<std::chrono::microseconds> latency(slots.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, JudgeError>> first_error;

  auto record_error = [&](std::size_t slot, JudgeError error) {
    std::lock_guard lock(error_mutex);
    if (!first_error || slot < first_error->first) first_error.emplace(slot, std::move(error));
    failed = true;
  };

  auto worker = [&] {
    while (!failed) {
      const auto slot = next.fetch_add(1);
      if (slot >= slots.size()) return;
      const auto& q = traces[slots[slot].trace];
      PromptContext ctx{q.question,
                        {q.steps.begin(), q.steps.begin() +
                                              static_cast<std::ptrdiff_t>(slots[slot].prefix)},
                        q.answer};
      const auto start = std::chrono::steady_clock::now();
      try {
        const auto positions = query_answer_distributions(ctx);
        if (positions.positions.empty()) {
          throw JudgeError(JudgeErrorKind::configuration, "judge returned no answer positions");
        }
        entropies[slot] = answer_conditional_entropy(positions);
      } catch (const JudgeError& e) {
        record_error(slot, e.annotated(q.trace_id, slots[slot].prefix));
      } catch (const std::exception& e) {
        record_error(slot, JudgeError(JudgeErrorKind::configuration, e.what())
                               .annotated(q.trace_id, slots[slot].prefix));
      }
      latency[slot] = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
    }
  };

  const auto workers =
      std::min<std::size_t>(slots.size(), static_cast<std::size_t>(cfg_.max_parallel_requests));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) throw first_error->second;

  std::vector<TrajectoryResult> out(traces.size());
  std::vector<std::vector<double>> values(traces.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto i = slots[s].trace;
    values[i].push_back(entropies[s]);
    out[i].judge_time += latency[s];
    ++out[i].queries;
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out[i].trajectory = build_trajectory(traces[i].trace_id, std::move(values[i]));
  }
  return out;
}

std::shared_ptr<Judge> make_judge(const JudgeConfig& cfg) {
  cfg.validate();
  std::shared_ptr<const JudgeBackend> backend;
  if (cfg.backend == JudgeBackendKind::mock) {
    backend = std::make_shared<MockJudge>(MockJudgeTable::load(cfg.mock_fixture));
  } else {
    backend = std::make_shared<HttpJudge>(cfg);
  }
  return std::make_shared<Judge>(std::move(backend), cfg);
}

AnswerPositionSet query_answer_distributions(const JudgeConfig& cfg, const PromptContext& ctx) {
  return make_judge(cfg)->query_answer_distributions(ctx);
}

}  // namespace infodensity

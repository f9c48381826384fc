#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "infodensity/entropy.hpp"
#include "json.hpp"

namespace infodensity {

enum class JudgeBackendKind { http, mock };

struct JudgeConfig {
  JudgeBackendKind backend = JudgeBackendKind::mock;
  std::string endpoint_url;  // http: base URL, e.g. http://127.0.0.1:8000/v1
  std::string model_name;
  int top_k = 5;
  std::chrono::milliseconds request_timeout{30000};
  int max_parallel_requests = 8;
  std::optional<std::string> auth_token;
  std::string step_separator = "\n\n";
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{250};
  std::filesystem::path mock_fixture;

  void validate() const;
};

JudgeBackendKind parse_backend(std::string_view name);

struct PromptContext {
  std::string question;
  std::vector<std::string> step_prefix;
  std::string answer;
};

inline constexpr std::string_view kContinuation = "Therefore, the answer is \\boxed{";

/// Question, then the prefix steps, then the continuation cue, all joined by
/// `separator`. The answer itself is never part of the prompt; it is
/// teacher-forced after it.
std::string build_continuation_prompt(const PromptContext& ctx,
                                      std::string_view separator = "\n\n");

enum class JudgeErrorKind { transport, configuration, fixture };

class JudgeError : public std::runtime_error {
 public:
  JudgeError(JudgeErrorKind kind, const std::string& message, int attempts = 1);

  JudgeErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  std::optional<std::size_t> prefix_length() const { return prefix_length_; }
  const std::string& trace_id() const { return trace_id_; }

  /// Copy of this error annotated with the failing trace and prefix length.
  JudgeError annotated(std::string trace_id, std::size_t prefix_length) const;

 private:
  JudgeErrorKind kind_;
  int attempts_;
  std::optional<std::size_t> prefix_length_;
  std::string trace_id_;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  /// One distribution per teacher-forced answer token.
  virtual AnswerPositionSet query(const PromptContext& ctx) const = 0;
  virtual bool reachable() const = 0;
};

/// Deterministic judge backed by a table of stored distributions, keyed by
/// the exact (question, step prefix, answer) context.
///
/// Fixture format:
///   {"vocabulary": ["a", "b", ...],
///    "tokenization": "whole" | "chars",
///    "contexts": [{"question": "...", "answer": "...", "steps": [...],
///                  "answer_tokens": [...],            // optional override
///                  "rows": [[[p over vocabulary] x K] x (steps + 1)]}]}
/// rows[t] holds the K answer-position distributions for the prefix made of
/// the first t steps.
class MockJudgeTable {
 public:
  static MockJudgeTable from_json(const nlohmann::ordered_json& fixture);
  static MockJudgeTable load(const std::filesystem::path& path);

  /// Stores the distributions for one context. Every distribution must have
  /// tail_mass 0; re-adding a context with different rows is an error.
  void add(const PromptContext& ctx, std::vector<TokenDistribution> positions);
  const std::vector<TokenDistribution>* find(const PromptContext& ctx) const;
  std::size_t size() const { return rows_.size(); }

  static std::string context_key(const PromptContext& ctx);

 private:
  std::unordered_map<std::string, std::vector<TokenDistribution>> rows_;
};

class MockJudge final : public JudgeBackend {
 public:
  explicit MockJudge(MockJudgeTable table) : table_(std::move(table)) {}
  AnswerPositionSet query(const PromptContext& ctx) const override;
  bool reachable() const override { return true; }

 private:
  MockJudgeTable table_;
};

/// OpenAI-compatible /completions client. Sends prompt + answer with echo
/// and top-k logprobs, and reads back the distributions at the answer token
/// positions (located through the echoed text offsets).
class HttpJudge final : public JudgeBackend {
 public:
  explicit HttpJudge(JudgeConfig cfg);
  AnswerPositionSet query(const PromptContext& ctx) const override;
  bool reachable() const override;

  /// Converts a completions response into per-answer-token distributions.
  /// `answer_begin`/`answer_end` are character offsets into the echoed text.
  static AnswerPositionSet parse_completion(const nlohmann::ordered_json& response,
                                            std::size_t answer_begin, std::size_t answer_end);

 private:
  JudgeConfig cfg_;
  std::string host_;      // scheme://host:port
  std::string base_path_; // e.g. /v1
};

/// Bounds the number of in-flight judge requests across all callers.
class RequestLimiter {
 public:
  explicit RequestLimiter(std::size_t max_in_flight);

  class Permit {
   public:
    explicit Permit(RequestLimiter& owner) : owner_(&owner) { owner_->acquire(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { owner_->release(); }

   private:
    RequestLimiter* owner_;
  };

  std::size_t capacity() const { return capacity_; }
  std::size_t peak_in_flight() const;

 private:
  void acquire();
  void release();

  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
};

struct TraceQuery {
  std::string trace_id;
  std::string question;
  std::vector<std::string> steps;
  std::string answer;
};

struct TrajectoryResult {
  EntropyTrajectory trajectory;
  std::chrono::microseconds judge_time{0};  // summed over the trace's queries
  std::size_t queries = 0;
};

/// Shareable judge client: a backend plus the global request budget.
class Judge {
 public:
  Judge(std::shared_ptr<const JudgeBackend> backend, JudgeConfig cfg);

  AnswerPositionSet query_answer_distributions(const PromptContext& ctx) const;

  /// H_0..H_T for one trace; one query per prefix length 0..T.
  EntropyTrajectory trajectory_for_trace(const TraceQuery& trace) const;

  /// Trajectories for several traces, with all prefix queries sharing the
  /// request budget. Output order matches input order. Any failed query
  /// fails the whole batch with a JudgeError naming trace and prefix.
  std::vector<TrajectoryResult> trajectories(std::span<const TraceQuery> traces) const;

  bool reachable() const { return backend_->reachable(); }
  const JudgeConfig& config() const { return cfg_; }
  const RequestLimiter& limiter() const { return *limiter_; }

 private:
  std::shared_ptr<const JudgeBackend> backend_;
  JudgeConfig cfg_;
  std::unique_ptr<RequestLimiter> limiter_;
};

/// Builds the backend named by cfg.backend (loading the mock fixture when
/// needed).
std::shared_ptr<Judge> make_judge(const JudgeConfig& cfg);

/// One-shot query without a shared client.
AnswerPositionSet query_answer_distributions(const JudgeConfig& cfg, const PromptContext& ctx);

}  // namespace infodensity

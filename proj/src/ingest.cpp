#include "infodensity/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include <fmt/core.h>

#include "infodensity/entropy.hpp"
#include "infodensity/log.hpp"

namespace infodensity {
namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";
constexpr std::string_view kBoxOpen = "\\boxed{";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_literal(std::string_view text, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = text.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(text.substr(pos));
      return out;
    }
    out.push_back(text.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

std::vector<std::string_view> split_regex(std::string_view text, const std::string& pattern) {
  const std::regex re(pattern);
  std::vector<std::string_view> out;
  auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), re);
  std::size_t pos = 0;
  for (auto it = begin; it != std::cregex_iterator(); ++it) {
    const auto start = static_cast<std::size_t>(it->position(0));
    if (it->length(0) == 0) continue;
    out.push_back(text.substr(pos, start - pos));
    pos = start + static_cast<std::size_t>(it->length(0));
  }
  out.push_back(text.substr(pos));
  return out;
}

std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

void SegmentationConfig::validate() const {
  if (delimiter == StepDelimiter::custom_regex) {
    if (custom_regex.empty()) throw InvalidInput("custom_regex delimiter needs a pattern");
    try {
      std::regex probe(custom_regex);
    } catch (const std::regex_error& e) {
      throw InvalidInput(fmt::format("invalid step regex '{}': {}", custom_regex, e.what()));
    }
  }
}

StepDelimiter parse_delimiter(std::string_view name) {
  if (name == "blank_line") return StepDelimiter::blank_line;
  if (name == "single_newline") return StepDelimiter::single_newline;
  if (name == "custom_regex") return StepDelimiter::custom_regex;
  throw InvalidInput(fmt::format("unknown step delimiter '{}'", name));
}

std::string_view to_string(StepDelimiter d) {
  switch (d) {
    case StepDelimiter::blank_line:
      return "blank_line";
    case StepDelimiter::single_newline:
      return "single_newline";
    case StepDelimiter::custom_regex:
      return "custom_regex";
  }
  return "blank_line";
}

std::vector<std::string> segment_steps(std::string_view raw_text, const SegmentationConfig& cfg) {
  std::vector<std::string_view> pieces;
  switch (cfg.delimiter) {
    case StepDelimiter::blank_line:
      pieces = split_literal(raw_text, "\n\n");
      break;
    case StepDelimiter::single_newline:
      pieces = split_literal(raw_text, "\n");
      break;
    case StepDelimiter::custom_regex:
      pieces = split_regex(raw_text, cfg.custom_regex);
      break;
  }

  std::vector<std::string> steps;
  for (auto piece : pieces) {
    piece = trim(piece);
    if (piece.empty()) continue;
    if (!steps.empty() && piece.size() < cfg.min_step_chars) {
      steps.back().append(" ").append(piece);
    } else {
      steps.emplace_back(piece);
    }
  }
  return steps;
}

ReasoningRegions split_reasoning(std::string_view raw_text, const SegmentationConfig& cfg) {
  if (cfg.think_close.empty()) return {raw_text, raw_text};
  const auto close = raw_text.rfind(cfg.think_close);
  if (close == std::string_view::npos) return {raw_text, raw_text};

  std::size_t start = 0;
  if (!cfg.think_open.empty()) {
    // Chat templates often inject the opening marker into the prompt, so a
    // missing opener means the span starts at the beginning of the text.
    const auto open = raw_text.find(cfg.think_open);
    if (open != std::string_view::npos && open < close) start = open + cfg.think_open.size();
  }
  return {raw_text.substr(start, close - start), raw_text.substr(close + cfg.think_close.size())};
}

BoxedAnswer find_boxed_answer(std::string_view text) {
  BoxedAnswer result;
  auto pos = text.rfind(kBoxOpen);
  while (pos != std::string_view::npos) {
    const auto content_start = pos + kBoxOpen.size();
    int depth = 1;
    std::size_t i = content_start;
    for (; i < text.size(); ++i) {
      if (text[i] == '{') {
        ++depth;
      } else if (text[i] == '}') {
        if (--depth == 0) break;
      }
    }
    if (depth == 0) {
      result.answer = std::string(text.substr(content_start, i - content_start));
      return result;
    }
    result.unbalanced = true;
    if (pos == 0) break;
    pos = text.rfind(kBoxOpen, pos - 1);
  }
  return result;
}

std::optional<std::string> extract_boxed_answer(std::string_view text) {
  auto found = find_boxed_answer(text);
  if (found.unbalanced && !found.answer) {
    log::warn("unbalanced_boxed_answer", {{"chars", text.size()}});
  }
  return std::move(found.answer);
}

std::string normalize_answer(std::string_view s) {
  s = trim(s);
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = trim(s.substr(1, s.size() - 2));
  }
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (kWhitespace.find(c) != std::string_view::npos) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

bool check_correctness(const std::optional<std::string>& predicted, std::string_view ground_truth) {
  if (!predicted) return false;
  const auto a = normalize_answer(*predicted);
  const auto b = normalize_answer(ground_truth);
  if (a == b) return true;
  const auto x = parse_decimal(a);
  const auto y = parse_decimal(b);
  if (!x || !y) return false;
  return std::abs(*x - *y) <= 1e-9 * std::max(std::abs(*x), std::abs(*y));
}

TraceRecord parse_trace(std::string trace_id, std::string question, std::string raw_text,
                        std::uint64_t length_tokens, const SegmentationConfig& cfg) {
  TraceRecord record;
  record.trace_id = std::move(trace_id);
  record.question = std::move(question);
  record.raw_text = std::move(raw_text);
  record.length_tokens = length_tokens;

  const auto regions = split_reasoning(record.raw_text, cfg);
  record.steps = segment_steps(regions.steps, cfg);
  record.extracted_answer = extract_boxed_answer(regions.answer);
  if (!record.extracted_answer && regions.answer.size() != record.raw_text.size()) {
    record.extracted_answer = extract_boxed_answer(record.raw_text);
  }
  if (record.steps.empty()) {
    log::warn("trace_without_steps", {{"trace_id", record.trace_id}});
  }
  return record;
}

}  // namespace infodensity

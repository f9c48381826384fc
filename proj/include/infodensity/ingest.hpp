#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace infodensity {

enum class StepDelimiter { blank_line, single_newline, custom_regex };

struct SegmentationConfig {
  StepDelimiter delimiter = StepDelimiter::blank_line;
  std::string custom_regex;  // used when delimiter == custom_regex
  // Pieces shorter than this are merged into the preceding step.
  std::size_t min_step_chars = 0;
  // Thinking-span markers; text inside the span is the step region and the
  // text after the closing marker is the answer region.
  std::string think_open = "<think>";
  std::string think_close = "</think>";

  void validate() const;
};

StepDelimiter parse_delimiter(std::string_view name);
std::string_view to_string(StepDelimiter d);

/// Splits on the delimiter, trims every piece, drops empty pieces and merges
/// short pieces into their predecessor (joined by a single space).
std::vector<std::string> segment_steps(std::string_view raw_text, const SegmentationConfig& cfg);

struct ReasoningRegions {
  std::string_view steps;
  std::string_view answer;
};

/// Locates the step-bearing and answer-bearing parts of a raw trace using
/// the configured thinking markers. Without markers both regions are the
/// whole text.
ReasoningRegions split_reasoning(std::string_view raw_text, const SegmentationConfig& cfg);

struct BoxedAnswer {
  std::optional<std::string> answer;
  bool unbalanced = false;  // a \boxed{ was seen but no occurrence closed
};

/// Content of the last balanced \boxed{...} in the text.
BoxedAnswer find_boxed_answer(std::string_view text);

/// Same as find_boxed_answer, logging a parse warning for unbalanced boxes.
std::optional<std::string> extract_boxed_answer(std::string_view text);

/// Trims, strips surrounding '$' delimiters and collapses inner whitespace.
std::string normalize_answer(std::string_view s);

/// Normalized string equality, or numeric equality within 1e-9 relative
/// tolerance when both sides parse as finite decimals. No symbolic
/// evaluation: "0.5" and "1/2" do not match.
bool check_correctness(const std::optional<std::string>& predicted, std::string_view ground_truth);

struct TraceRecord {
  std::string trace_id;
  std::string question;
  std::string raw_text;
  std::vector<std::string> steps;
  std::optional<std::string> extracted_answer;
  std::uint64_t length_tokens = 0;
};

TraceRecord parse_trace(std::string trace_id, std::string question, std::string raw_text,
                        std::uint64_t length_tokens, const SegmentationConfig& cfg);

}  // namespace infodensity

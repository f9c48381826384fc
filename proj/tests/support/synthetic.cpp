#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

namespace synthetic {
namespace {

double spread_entropy(double q, std::size_t vocab) {
  // Heavy token with 1 - q, the other vocab - 1 tokens share q evenly.
  double h = 0.0;
  if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
  if (q > 0.0) h -= q * std::log(q / static_cast<double>(vocab - 1));
  return h;
}

}  // namespace

std::vector<double> distribution_with_entropy(double target, std::size_t vocab) {
  if (vocab < 2 || target < 0.0 || target > std::log(static_cast<double>(vocab))) {
    throw std::invalid_argument("entropy target out of range for vocabulary");
  }
  double lo = 0.0;
  double hi = static_cast<double>(vocab - 1) / static_cast<double>(vocab);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (spread_entropy(mid, vocab) < target ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  std::vector<double> p(vocab, q / static_cast<double>(vocab - 1));
  p[0] = 1.0 - q;
  return p;
}

Json empty_fixture(std::size_t vocab) {
  Json fixture = Json::object();
  Json v = Json::array();
  for (std::size_t i = 0; i < vocab; ++i) v.push_back(fmt::format("t{}", i));
  fixture["vocabulary"] = v;
  fixture["tokenization"] = "whole";
  fixture["contexts"] = Json::array();
  return fixture;
}

void add_context(Json& fixture, const std::string& question, const std::string& answer,
                 const std::vector<std::string>& steps, const std::vector<double>& entropies,
                 std::size_t answer_positions) {
  if (entropies.size() != steps.size() + 1) throw std::invalid_argument("need T + 1 entropies");
  const auto vocab = fixture["vocabulary"].size();
  Json rows = Json::array();
  for (double h : entropies) {
    Json row = Json::array();
    const auto p = distribution_with_entropy(h, vocab);
    for (std::size_t k = 0; k < answer_positions; ++k) row.push_back(p);
    rows.push_back(row);
  }
  Json ctx = {{"question", question}, {"answer", answer}, {"steps", steps}};
  if (answer_positions != 1) {
    Json tokens = Json::array();
    for (std::size_t k = 0; k < answer_positions; ++k) tokens.push_back(fmt::format("a{}", k));
    ctx["answer_tokens"] = tokens;
  }
  ctx["rows"] = rows;
  fixture["contexts"].push_back(ctx);
}

PlantedDataset make_planted_dataset(const PlantedSpec& spec) {
  std::mt19937 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> step_count(3, 6);
  std::uniform_real_distribution<double> jitter(0.95, 1.05);
  std::uniform_real_distribution<double> plateau_noise(-0.02, 0.02);

  PlantedDataset out;
  out.fixture = empty_fixture(spec.vocab);
  double fraction_sum = 0.0;
  std::size_t incorrect = 0;

  for (std::size_t q = 0; q < spec.questions; ++q) {
    const auto question = fmt::format("Synthetic question {}: compute the value.", q);
    const auto answer = fmt::format("{}", 10 + q);
    const double h0 = spec.h0 * jitter(rng);

    for (bool correct : {true, false}) {
      const std::size_t steps = step_count(rng);
      const auto trace_id = fmt::format("q{}-{}", q, correct ? "correct" : "incorrect");
      std::vector<double> h{h0};
      std::size_t first_error = steps;
      if (!correct) {
        first_error = std::uniform_int_distribution<std::size_t>(1, steps - 2)(rng);
      }
      for (std::size_t t = 1; t <= steps; ++t) {
        if (t <= first_error) {
          h.push_back(h.back() * spec.decay * jitter(rng));
        } else {
          // Stalls from the first-error step on: H_{e+1}, ... hover around H_e.
          h.push_back(h[first_error] * (1.0 + plateau_noise(rng)));
        }
      }

      infodensity::LabeledRecord rec;
      rec.trace_id = trace_id;
      rec.question = question;
      rec.ground_truth = answer;
      rec.trace_correct = correct;
      rec.source_dataset = q % 2 == 0 ? "synthetic-a" : "synthetic-b";
      for (std::size_t t = 0; t < steps; ++t) {
        rec.steps.push_back(fmt::format("{} step {}: derive intermediate quantity {}.", trace_id, t, t));
        rec.step_labels.push_back(!correct && t >= first_error ? infodensity::StepLabel::incorrect
                                                               : infodensity::StepLabel::correct);
      }
      if (!correct) {
        fraction_sum += static_cast<double>(first_error) / static_cast<double>(steps - 1);
        ++incorrect;
      }
      add_context(out.fixture, question, answer, rec.steps, h);
      out.records.push_back(std::move(rec));
      out.planted.push_back(std::move(h));
    }
  }
  out.planted_error_fraction = incorrect == 0 ? 0.0 : fraction_sum / static_cast<double>(incorrect);
  return out;
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_demo_bundle(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  auto planted = make_planted_dataset({.questions = 6, .seed = 11});
  Json fixture = planted.fixture;

  // One rollout group: a clean derivation and one that goes wrong midway.
  const std::string question = "What is 6 * 7?";
  const std::string truth = "42";
  const std::string good =
      "6 * 7 means six groups of seven.\n\nSix sevens are 35 + 7.\n\n"
      "35 + 7 = 42, so the answer is \\boxed{42}.";
  const std::string bad =
      "Multiply 6 by 7.\n\n6 * 7 = 48.\n\nSo the answer is \\boxed{48}.";
  add_context(fixture, question, truth,
              {"6 * 7 means six groups of seven.", "Six sevens are 35 + 7.",
               "35 + 7 = 42, so the answer is \\boxed{42}."},
              {2.0, 1.2, 0.5, 0.05});
  add_context(fixture, question, truth,
              {"Multiply 6 by 7.", "6 * 7 = 48.", "So the answer is \\boxed{48}."},
              {2.0, 1.3, 1.4, 1.35});
  write_json(dir / "judge_fixture.json", fixture);

  infodensity::RolloutGroupRecord group;
  group.group_id = "demo-0";
  group.question = question;
  group.ground_truth = truth;
  group.traces.push_back({"demo-0-a", good, 40, std::nullopt, Json::object()});
  group.traces.push_back({"demo-0-b", bad, 28, std::nullopt, Json::object()});
  infodensity::save_jsonl(dir / "rollouts.jsonl", std::vector{group});
  infodensity::save_jsonl(dir / "labeled.jsonl", planted.records);

  write_json(dir / "config.json",
             Json{{"judge", {{"backend", "mock"}, {"mock_fixture", "judge_fixture.json"}}},
                  {"reward", {{"alpha", 0.5}, {"lambda", 0.05}}}});
}

}  // namespace synthetic

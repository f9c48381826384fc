#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "infodensity/records.hpp"

namespace synthetic {

using infodensity::Json;

/// Probabilities over `vocab` tokens whose entropy is `target` nats (one
/// heavy token, the remaining mass spread evenly). Found by bisection.
std::vector<double> distribution_with_entropy(double target, std::size_t vocab);

struct PlantedSpec {
  std::size_t questions = 10;  // one correct and one incorrect trace each
  double h0 = 2.0;
  double decay = 0.5;
  std::size_t vocab = 16;
  std::uint32_t seed = 7;
};

struct PlantedDataset {
  Json fixture;                                  // mock judge fixture
  std::vector<infodensity::LabeledRecord> records;
  std::vector<std::vector<double>> planted;      // target H_0..H_T per record
  double planted_error_fraction = 0.0;           // mean of e / (T - 1)
};

/// Correct traces decay geometrically; incorrect traces decay until a
/// planted first-error step and then plateau.
PlantedDataset make_planted_dataset(const PlantedSpec& spec);

/// Appends one context to a fixture: a trace whose prefixes produce the
/// given per-prefix entropies at every answer position.
void add_context(Json& fixture, const std::string& question, const std::string& answer,
                 const std::vector<std::string>& steps, const std::vector<double>& entropies,
                 std::size_t answer_positions = 1);

Json empty_fixture(std::size_t vocab);

void write_json(const std::filesystem::path& path, const Json& doc);

/// The bundled demo: judge_fixture.json, rollouts.jsonl, labeled.jsonl and
/// config.json written into `dir`.
void write_demo_bundle(const std::filesystem::path& dir);

}  // namespace synthetic

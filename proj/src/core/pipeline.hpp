#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/quality.hpp"
#include "core/template_db.hpp"

namespace tell {

enum class ParaphraseMode { Off, Mock, Live };

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t count = 1000;
  std::vector<int> types;           // empty: every type
  std::map<int, double> weights;    // empty: uniform
  std::optional<double> fraction;   // seeded per-type subset of the result
  unsigned jobs = 0;
  ParaphraseMode paraphrase = ParaphraseMode::Off;
  FilterConfig filter;
};

struct GenResult {
  std::vector<TmwpSample> samples;
  FilterReport report;  // every index examined, in index order
  std::size_t indices_used = 0;
  std::map<int, std::size_t> per_type;
  Json summary() const;
};

std::string sample_id(std::uint64_t seed, std::size_t index);

// Draws samples index by index from per-index streams, so the output does not
// depend on `jobs`. Paraphrase uses `call` unless the mode is Off. Stops once
// `count` samples are accepted. Any sample failing its re-check is a hard
// error (Internal).
GenResult generate_corpus(const GenConfig& cfg, const TemplateDb& db, const LlmCall* call);

// Re-instantiates the template problem a generated sample came from.
TemplateProblem source_problem(const TmwpSample& s, const TemplateDb& db);

struct StageResult {
  std::vector<TmwpSample> samples;  // accepted, input order
  FilterReport report;
};

// Paraphrases generated samples; with `enrich`, rewrites each sample's
// solution into numbered steps instead and keeps the old one as
// original_solution.
StageResult paraphrase_corpus(std::span<const TmwpSample> in, const TemplateDb& db, const LlmCall& call, bool enrich,
                              unsigned jobs);

// Consistency for samples that carry a binding, then leakage, then dedup.
StageResult filter_corpus(std::span<const TmwpSample> in, const TemplateDb& db, const FilterConfig& cfg);

// Seeded per-type subset keeping input order.
std::vector<TmwpSample> proportional_subset(std::span<const TmwpSample> in, double fraction, std::uint64_t seed);

}  // namespace tell

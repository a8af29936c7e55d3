#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/llm.hpp"
#include "core/template_db.hpp"

namespace tell {

struct ParaphraseExemplar {
  Json input;
  Json output;
};

// The two exemplars shipped with the prompt assets.
const std::vector<ParaphraseExemplar>& builtin_exemplars();
std::vector<ParaphraseExemplar> parse_exemplars(const Json& doc);

// {question, table_for_pd, choices, answer, solution}
Json problem_to_prompt_json(const TemplateProblem& p);

// ValidationError unless exactly two exemplars are given.
std::string build_paraphrase_prompt(const TemplateProblem& p, std::span<const ParaphraseExemplar> examples);

struct ParsedReply {
  std::string question;
  std::string solution;
  std::optional<Json> table_for_pd;
  std::optional<std::vector<std::string>> choices;
  std::string answer;
};

// UnparseableReply when no object with question, solution and answer exists.
ParsedReply parse_llm_output(std::string_view raw);

struct ParaphraseResult {
  TemplateProblem source;
  std::string question;
  std::string solution;
  std::optional<std::string> table_title;
  TableSpec table;
  std::optional<std::vector<std::string>> choices;
  AnswerValue answer;
  std::string answer_raw;
  std::string raw_reply;
};

// Missing table or choices fall back to the source's. The stated answer is
// read in the source answer's form; unreadable values stay text.
ParaphraseResult apply_reply(const TemplateProblem& source, const ParsedReply& reply, std::string raw);

inline constexpr double kParaphraseTemperature = 0.7;
inline constexpr double kEnrichTemperature = 0.0;

struct LlmCall {
  LlmProvider* provider = nullptr;
  RetryPolicy policy;
  ReplyCache* cache = nullptr;
  std::optional<std::uint64_t> seed;
  std::vector<ParaphraseExemplar> exemplars = builtin_exemplars();
};

// One re-ask when the reply cannot be parsed, then UnparseableReply.
ParaphraseResult paraphrase_problem(const TemplateProblem& p, const LlmCall& call, const std::string& sample_id = {});

// A fresh sample carrying the paraphrased fields; `base` is left as is.
TmwpSample paraphrased_sample(const ParaphraseResult& r, const TmwpSample& base);

std::string build_enrichment_prompt(const std::string& question, const TableSpec& table, const std::string& s0);
// At least two numbered steps and a terminal answer line, one retry, then
// StructureError. ValidationError for an empty s0.
std::string enrich_solution(const std::string& question, const TableSpec& table, const std::string& s0,
                            const LlmCall& call, const std::string& sample_id = {});

}  // namespace tell

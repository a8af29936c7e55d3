#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/paraphrase.hpp"

namespace tell {

// Casefolded tokens: runs of letters and digits (bytes >= 0x80 count as
// letters), and every other non-space character on its own.
std::vector<std::string> bleu_tokens(std::string_view text);

// Sentence BLEU, no smoothing, brevity penalty when the candidate is the
// shorter side. EmptyText when either side has no tokens.
double bleu(std::string_view candidate, std::string_view reference, int order = 4);

// Tokenized text with its n-gram counts, reused across many comparisons.
class BleuDoc {
 public:
  BleuDoc(std::string_view text, int order);
  std::size_t length() const { return length_; }
  const std::string& text() const { return text_; }

 private:
  friend double bleu(const BleuDoc& candidate, const BleuDoc& reference);
  friend std::optional<double> bleu_above(const BleuDoc& candidate, const BleuDoc& reference, double threshold);
  std::string text_;
  std::size_t length_ = 0;
  int order_ = 4;
  std::vector<std::unordered_map<std::string, std::uint32_t>> grams_;
};

double bleu(const BleuDoc& candidate, const BleuDoc& reference);
// The score when it can exceed `threshold`; nullopt when length or unigram
// bounds already rule that out.
std::optional<double> bleu_above(const BleuDoc& candidate, const BleuDoc& reference, double threshold);

enum class Verdict { Accepted, RejectedConsistency, RejectedLeakage, RejectedDuplicate };
std::string to_string(Verdict v);

struct SampleVerdict {
  std::string id;
  Verdict verdict = Verdict::Accepted;
  std::string reason;
  std::optional<double> max_bleu;
  std::optional<std::size_t> matched_index;  // into the reference set or the corpus
  std::string matched_text;
};

struct FilterReport {
  std::vector<SampleVerdict> verdicts;

  std::size_t count(Verdict v) const;
  std::size_t size() const { return verdicts.size(); }
  double rate(Verdict v) const;
  Json to_json(bool include_accepted = false) const;
  std::string summary() const;
};

struct FilterConfig {
  double delta = 0.95;
  int bleu_order = 4;
  std::optional<double> dedup_threshold;
  std::vector<std::string> reference_set;
  unsigned jobs = 0;  // 0: hardware concurrency

  void validate() const;
};

// Empty when consistent, else why not. Checks the stated answer, the
// solution's terminal line and the multiset of numeric table cells against
// the source problem.
std::string consistency_problem(std::string_view stated_answer, std::string_view solution, const TableSpec& table,
                                const TemplateProblem& source);
SampleVerdict consistency_check(const ParaphraseResult& r, const std::string& id = {});

// Rejects samples whose question scores above delta against any reference
// question. Sample order does not affect any verdict.
FilterReport leakage_filter(std::span<const TmwpSample> samples, const FilterConfig& cfg);

// First-wins scan against earlier accepted questions.
FilterReport dedup(std::span<const TmwpSample> samples, double threshold, int order = 4);

// Reads question texts from a corpus file (any split) or plain lines.
std::vector<std::string> load_reference_questions(const std::string& path);

}  // namespace tell

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/sample.hpp"

namespace tell {

// Canonical comparison form. Numeric answers compare as exact rationals,
// everything else as casefolded text.
struct NormalizedAnswer {
  std::optional<Rational> number;
  std::string text;

  bool operator==(const NormalizedAnswer& o) const;
  // Re-normalizing this string yields the same form.
  std::string canonical() const;
};

NormalizedAnswer normalize_answer(std::string_view raw, const AnswerValue& expected);
// True when `raw` names the same answer as `expected` after normalization.
bool answers_equal(std::string_view raw, const AnswerValue& expected);

struct Prediction {
  std::string sample_id;
  std::string predicted_answer;
};

// Extracts a terminal "The answer is" value first when present; letter
// choices ("B", "(b)") resolve against the gold choice list.
bool exact_match(const Prediction& pred, const TmwpSample& gold);

struct ScoreCell {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
  ScoreCell overall;
  std::map<std::string, ScoreCell> question_type;
  std::map<std::string, ScoreCell> answer_type;
  std::map<std::string, ScoreCell> grade;
  // Keyed by template type id; samples without one go under "-".
  std::map<std::string, ScoreCell> template_type;
  std::vector<std::string> unparseable_gold;
};

// Missing predictions count as wrong. Throws DuplicatePrediction and
// UnknownSampleId.
EvalReport evaluate(std::span<const Prediction> preds, std::span<const TmwpSample> corpus);

Json report_to_json(const EvalReport& r);
std::string render_report(const EvalReport& r);

// Line-delimited {"id", "prediction"} records.
std::vector<Prediction> read_predictions(const std::string& path);
std::vector<Prediction> parse_predictions(std::string_view jsonl);

}  // namespace tell

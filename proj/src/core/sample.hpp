#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core/numeric.hpp"

namespace tell {

using Json = nlohmann::ordered_json;

enum class QuestionKind { FreeText, MultipleChoice };
enum class AnswerType { Int, Dec, Extr, Bool, Oth };
enum class Split { Train, Valid, Test, Generated };
enum class Provenance { Ingested, Template, Paraphrased };
enum class TableLayout { KeyValue, Frequency, PriceList, StemLeaf, TwoWayCount };

std::string to_string(QuestionKind k);
std::string to_string(AnswerType t);
std::string to_string(Split s);
std::string to_string(Provenance p);
std::string to_string(TableLayout l);

// Short labels used in reports: FREE/MC and INT/DEC/EXTR/BOOL/OTH.
std::string short_label(QuestionKind k);
std::string short_label(AnswerType t);

std::optional<TableLayout> parse_layout(std::string_view s);

// A table cell keeps its text verbatim; numeric cells also carry the parsed
// exact value ("12", "1.25" and "$1.25" are numeric, "0 2 5" is not).
struct Cell {
  std::string text;
  std::optional<Decimal> number;

  static Cell parse(std::string text);
  static Cell of_int(std::int64_t v);
  static Cell of_decimal(const Decimal& d, bool currency);

  bool operator==(const Cell& o) const { return text == o.text; }
};

struct TableSpec {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  TableLayout layout = TableLayout::KeyValue;

  bool operator==(const TableSpec& o) const = default;
};

struct IntVal {
  std::int64_t value;
  bool operator==(const IntVal&) const = default;
};
struct DecVal {
  Decimal value;
  bool operator==(const DecVal&) const = default;
};
struct TextVal {
  std::string value;
  bool operator==(const TextVal&) const = default;
};
struct BoolTextVal {
  std::string value;
  bool operator==(const BoolTextVal&) const = default;
};
struct FractionVal {
  std::int64_t num;
  std::int64_t den;
  bool operator==(const FractionVal&) const = default;
};

using AnswerValue = std::variant<IntVal, DecVal, TextVal, BoolTextVal, FractionVal>;

// Canonical answer-field text: "3", "2.75", "1/5" ("1" for 1/1), label text.
std::string answer_text(const AnswerValue& a);
// Exact numeric value for numeric variants.
std::optional<Rational> answer_number(const AnswerValue& a);
FractionVal make_fraction(const Rational& r);

struct TmwpSample {
  std::string id;
  std::string question;
  std::optional<std::string> table_title;
  TableSpec table;
  std::string table_text;
  std::optional<std::vector<std::string>> choices;
  AnswerValue answer = IntVal{0};
  std::optional<std::string> unit;
  std::string solution;
  std::optional<std::string> original_solution;
  QuestionKind kind = QuestionKind::FreeText;
  AnswerType answer_type = AnswerType::Int;
  int grade = 1;
  Split split = Split::Generated;
  std::optional<int> template_type;
  Provenance provenance = Provenance::Ingested;
  // Placeholder values the sample was instantiated from, when generated.
  std::optional<Json> binding;

  bool operator==(const TmwpSample& o) const = default;
};

std::string grade_bucket(int grade);

// Throws Error(InvariantViolation) naming the offending field.
void validate_table(const TableSpec& t);
void validate_sample(const TmwpSample& s);

TmwpSample parse_sample(const Json& record);
Json serialize_sample(const TmwpSample& s);

std::string render_table_text(const TableSpec& t);
Json table_to_pd(const TableSpec& t);
// `layout` absent means infer from content.
TableSpec table_from_pd(const Json& pd, std::optional<TableLayout> layout = std::nullopt);
TableLayout infer_layout(const std::vector<std::string>& columns, const std::vector<std::vector<Cell>>& rows);
// Key used for distinct-table counting: columns, rows and layout; title ignored.
std::string table_key(const TableSpec& t);
// Every numeric token found in the table cells, in row-major order.
std::vector<Rational> numeric_tokens(const TableSpec& t);

struct SplitCounts {
  std::size_t questions = 0;
  std::size_t free_text = 0;
  std::size_t multiple_choice = 0;
  std::size_t tables = 0;
  std::size_t solutions = 0;
  bool operator==(const SplitCounts&) const = default;
};

struct SplitStats {
  std::map<Split, SplitCounts> per_split;
  SplitCounts total;
  bool operator==(const SplitStats&) const = default;
};

SplitStats compute_stats(std::span<const TmwpSample> corpus);
Json stats_to_json(const SplitStats& s);
std::string render_stats(const SplitStats& s);

// Line-delimited corpus files. Parse errors name the 1-based line.
std::vector<TmwpSample> read_corpus(const std::string& path);
void write_corpus(const std::string& path, std::span<const TmwpSample> corpus);
std::string corpus_to_jsonl(std::span<const TmwpSample> corpus);

// Reads a TabMWP problems file (an object keyed by problem id) or a
// line-delimited file of records.
std::vector<TmwpSample> ingest_tabmwp(const std::string& path);

}  // namespace tell

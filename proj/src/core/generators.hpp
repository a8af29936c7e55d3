#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core/sample.hpp"

namespace tell {

// ---------------------------------------------------------------------------
// Question families. Each built-in question type maps onto exactly one
// family instance:
//   stem-leaf   types 1-11   counting with exact boundary semantics, min, max
//   trading     types 12-17  total cost / money left for 1-3 purchased items
//   comparison  types 18-19  which of two rows has more / less in a column
//   probability types 20-21  joint cell probability, category fraction
//   stats       types 22-25  mean, median, mode, average
// ---------------------------------------------------------------------------

enum class StemLeafPredicate {
  CountValue,         // == v
  RangeClosedClosed,  // a <= x <= b
  RangeClosedOpen,    // a <= x <  b
  RangeOpenOpen,      // a <  x <  b
  RangeOpenClosed,    // a <  x <= b
  BelowStrict,        // x <  t
  BelowWeak,          // x <= t
  AboveWeak,          // x >= t
  AboveStrict,        // x >  t
  Min,
  Max,
};

enum class TradingMode { Total, Remaining };
enum class Direction { More, Less };
enum class ProbabilityMode { JointCell, CategoryFraction };
enum class Stat { Mean, Median, Mode, Average };

struct StemLeafFamily {
  StemLeafPredicate predicate;
  bool operator==(const StemLeafFamily&) const = default;
};
struct TradingFamily {
  TradingMode mode;
  int item_count;
  bool operator==(const TradingFamily&) const = default;
};
struct ComparisonFamily {
  Direction direction;
  bool operator==(const ComparisonFamily&) const = default;
};
struct ProbabilityFamily {
  ProbabilityMode mode;
  bool operator==(const ProbabilityFamily&) const = default;
};
struct StatsFamily {
  Stat stat;
  bool operator==(const StatsFamily&) const = default;
};

using GeneratorFamily = std::variant<StemLeafFamily, TradingFamily, ComparisonFamily, ProbabilityFamily, StatsFamily>;

std::string family_kind(const GeneratorFamily& f);
// Oracle selector name, e.g. "stem_leaf.above_weak", "trading.remaining".
std::string answer_rule_name(const GeneratorFamily& f);
// Parses an oracle selector. Trading selectors take item_count from `family`.
// Throws SchemaError when the selector is unknown or belongs to another family.
GeneratorFamily parse_answer_rule(const std::string& rule, const GeneratorFamily& family);
Json family_to_json(const GeneratorFamily& f);
GeneratorFamily family_from_json(const Json& j);

// Roles each family reads from a binding, beyond the table.
std::vector<std::string> family_scalar_roles(const GeneratorFamily& f);

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

struct StemLeafPlot {
  std::vector<std::int64_t> stems;
  std::vector<std::vector<int>> leaves;
};

void validate_plot(const StemLeafPlot& p);
std::vector<std::int64_t> stem_leaf_values(const StemLeafPlot& p);
std::size_t count_matching(const StemLeafPlot& p, StemLeafPredicate pred, std::int64_t a, std::int64_t b = 0);
bool matches(StemLeafPredicate pred, std::int64_t x, std::int64_t a, std::int64_t b);
std::int64_t stem_leaf_extreme(const StemLeafPlot& p, bool want_max);

struct PricedItem {
  std::string item;
  Decimal price;
};

Decimal trading_total(std::span<const PricedItem> prices, std::span<const std::int64_t> quantities);
Decimal trading_remaining(const Decimal& budget, std::span<const PricedItem> prices,
                          std::span<const std::int64_t> quantities);

struct ComparisonResult {
  std::string answer;
  std::vector<std::string> choices;
};
ComparisonResult compare_rows(const TableSpec& t, const std::string& column, const std::string& row1,
                              const std::string& row2, Direction direction);

FractionVal joint_probability(const TableSpec& t, const std::string& row, const std::string& col);
FractionVal category_fraction(const TableSpec& t, const std::string& category);

AnswerValue stat_value(std::span<const std::int64_t> values, Stat stat);

// ---------------------------------------------------------------------------
// Family evaluation and illustrative solutions
// ---------------------------------------------------------------------------

// Everything an oracle may need, gathered from a binding and its table.
struct FamilyInputs {
  TableSpec table;
  StemLeafPlot plot;
  std::int64_t bound_a = 0;  // count value / threshold / range start
  std::int64_t bound_b = 0;  // range end
  std::vector<PricedItem> purchases;
  std::vector<std::int64_t> quantities;
  std::optional<Decimal> budget;
  std::string row1, row2, column;  // comparison; probability uses row1/column
  std::string category;
  std::vector<std::int64_t> values;
};

AnswerValue evaluate(const GeneratorFamily& f, const FamilyInputs& in);

// Text the solution steps can reference as {@name}.
std::map<std::string, std::string> solution_fields(const GeneratorFamily& f, const FamilyInputs& in,
                                                   const AnswerValue& answer);
std::vector<std::string> derived_field_names(const GeneratorFamily& f);
std::vector<std::string> default_solution_steps(const GeneratorFamily& f);

// Numbered steps followed by a single terminal line "The answer is X."
// `substitute` resolves {name} placeholders; {@name} resolve to solution_fields.
std::string render_solution(const GeneratorFamily& f, const FamilyInputs& in, const AnswerValue& answer,
                            std::span<const std::string> steps,
                            const std::map<std::string, std::string>& placeholder_text = {});
std::string render_solution(const GeneratorFamily& f, const FamilyInputs& in);

std::string terminal_line(const AnswerValue& answer);
// Value after "The answer is" on the last such line, trailing period removed.
std::optional<std::string> extract_terminal_answer(std::string_view solution);
std::size_t count_numbered_steps(std::string_view solution);

// Replaces {name} and {@name} markers. Unknown markers are left in place.
std::string substitute(std::string_view pattern, const std::map<std::string, std::string>& plain,
                       const std::map<std::string, std::string>& derived);
// Marker names referenced by a pattern; derived ones come back with a leading '@'.
std::vector<std::string> pattern_markers(std::string_view pattern);
bool has_residual_marker(std::string_view text);

}  // namespace tell

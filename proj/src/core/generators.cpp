#include "core/generators.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace tell {

namespace {

struct PredicateName {
  StemLeafPredicate pred;
  const char* name;
};

constexpr PredicateName kPredicates[] = {
    {StemLeafPredicate::CountValue, "count_value"},
    {StemLeafPredicate::RangeClosedClosed, "range_closed_closed"},
    {StemLeafPredicate::RangeClosedOpen, "range_closed_open"},
    {StemLeafPredicate::RangeOpenOpen, "range_open_open"},
    {StemLeafPredicate::RangeOpenClosed, "range_open_closed"},
    {StemLeafPredicate::BelowStrict, "below_strict"},
    {StemLeafPredicate::BelowWeak, "below_weak"},
    {StemLeafPredicate::AboveWeak, "above_weak"},
    {StemLeafPredicate::AboveStrict, "above_strict"},
    {StemLeafPredicate::Min, "min"},
    {StemLeafPredicate::Max, "max"},
};

const char* predicate_name(StemLeafPredicate p) {
  for (const auto& e : kPredicates)
    if (e.pred == p) return e.name;
  return "count_value";
}

const char* stat_name(Stat s) {
  switch (s) {
    case Stat::Mean: return "mean";
    case Stat::Median: return "median";
    case Stat::Mode: return "mode";
    case Stat::Average: return "average";
  }
  return "mean";
}

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg, "family"); }

bool is_range(StemLeafPredicate p) {
  return p == StemLeafPredicate::RangeClosedClosed || p == StemLeafPredicate::RangeClosedOpen ||
         p == StemLeafPredicate::RangeOpenOpen || p == StemLeafPredicate::RangeOpenClosed;
}

bool is_threshold(StemLeafPredicate p) {
  return p == StemLeafPredicate::BelowStrict || p == StemLeafPredicate::BelowWeak ||
         p == StemLeafPredicate::AboveWeak || p == StemLeafPredicate::AboveStrict;
}

template <class T>
std::string join(const std::vector<T>& xs, const std::string& sep) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << sep;
    out << xs[i];
  }
  return out.str();
}

AnswerValue numeric_answer(const Rational& r) {
  if (r.is_integer()) return IntVal{r.num()};
  for (int scale = 1; scale <= 6; ++scale) {
    Rational scaled = r * Rational(pow10(scale));
    if (scaled.is_integer()) return DecVal{Decimal{scaled.num(), scale}};
  }
  throw Error(ErrorCode::ValidationError, "value " + r.to_string() + " is not a terminating decimal");
}

std::optional<std::size_t> column_index(const TableSpec& t, const std::string& column) {
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    if (t.columns[j] == column) return j;
  return std::nullopt;
}

std::optional<std::size_t> row_index(const TableSpec& t, const std::string& label) {
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (!t.rows[i].empty() && t.rows[i][0].text == label) return i;
  return std::nullopt;
}

Rational cell_number(const Cell& c) {
  if (!c.number) throw Error(ErrorCode::TypeMismatch, "cell '" + c.text + "' is not numeric", "table");
  return c.number->value();
}

std::string ordinal(std::size_t n) {
  std::string suffix = "th";
  if (n % 100 < 11 || n % 100 > 13) {
    if (n % 10 == 1) suffix = "st";
    if (n % 10 == 2) suffix = "nd";
    if (n % 10 == 3) suffix = "rd";
  }
  return std::to_string(n) + suffix;
}

std::string times(std::size_t n) { return n == 1 ? "1 time" : std::to_string(n) + " times"; }

std::string display_answer(const GeneratorFamily& f, const AnswerValue& a) {
  if (std::holds_alternative<TradingFamily>(f)) {
    if (auto* d = std::get_if<DecVal>(&a)) return d->value.to_currency();
  }
  return answer_text(a);
}

bool is_ident_char(char c, bool first) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (!first && std::isdigit(static_cast<unsigned char>(c)));
}

// Parses "{name}" or "{@name}" starting at pattern[i] == '{'. Returns the
// inner text and the index one past '}', or nullopt when not a marker.
std::optional<std::pair<std::string, std::size_t>> marker_at(std::string_view p, std::size_t i) {
  std::size_t j = i + 1;
  std::string inner;
  if (j < p.size() && p[j] == '@') {
    inner += '@';
    ++j;
  }
  std::size_t start = j;
  while (j < p.size() && is_ident_char(p[j], j == start)) inner += p[j++];
  if (j == start || j >= p.size() || p[j] != '}') return std::nullopt;
  return std::make_pair(inner, j + 1);
}

}  // namespace

std::string family_kind(const GeneratorFamily& f) {
  switch (f.index()) {
    case 0: return "stem_leaf";
    case 1: return "trading";
    case 2: return "comparison";
    case 3: return "probability";
    default: return "stats";
  }
}

std::string answer_rule_name(const GeneratorFamily& f) {
  std::string kind = family_kind(f);
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) return kind + "." + predicate_name(v.predicate);
        if constexpr (std::is_same_v<T, TradingFamily>) return kind + (v.mode == TradingMode::Total ? ".total" : ".remaining");
        if constexpr (std::is_same_v<T, ComparisonFamily>) return kind + (v.direction == Direction::More ? ".more" : ".less");
        if constexpr (std::is_same_v<T, ProbabilityFamily>)
          return kind + (v.mode == ProbabilityMode::JointCell ? ".joint_cell" : ".category_fraction");
        if constexpr (std::is_same_v<T, StatsFamily>) return kind + "." + stat_name(v.stat);
      },
      f);
}

GeneratorFamily parse_answer_rule(const std::string& rule, const GeneratorFamily& family) {
  auto dot = rule.find('.');
  if (dot == std::string::npos) schema("answer_rule '" + rule + "' must look like '<family>.<oracle>'");
  std::string kind = rule.substr(0, dot);
  std::string op = rule.substr(dot + 1);
  if (kind != family_kind(family)) {
    schema("answer_rule '" + rule + "' selects a " + kind + " oracle for a " + family_kind(family) + " template");
  }
  Json j = family_to_json(family);
  if (kind == "stem_leaf") {
    j["predicate"] = op;
  } else if (kind == "trading") {
    j["mode"] = op;
  } else if (kind == "comparison") {
    j["direction"] = op;
  } else if (kind == "probability") {
    j["mode"] = op;
  } else {
    j["stat"] = op;
  }
  return family_from_json(j);
}

Json family_to_json(const GeneratorFamily& f) {
  Json j = Json::object();
  j["kind"] = family_kind(f);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) j["predicate"] = predicate_name(v.predicate);
        if constexpr (std::is_same_v<T, TradingFamily>) {
          j["mode"] = v.mode == TradingMode::Total ? "total" : "remaining";
          j["item_count"] = v.item_count;
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) j["direction"] = v.direction == Direction::More ? "more" : "less";
        if constexpr (std::is_same_v<T, ProbabilityFamily>)
          j["mode"] = v.mode == ProbabilityMode::JointCell ? "joint_cell" : "category_fraction";
        if constexpr (std::is_same_v<T, StatsFamily>) j["stat"] = stat_name(v.stat);
      },
      f);
  return j;
}

GeneratorFamily family_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) schema("family needs a 'kind'");
  auto field = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) schema(std::string("family is missing '") + key + "'");
    return j[key].get<std::string>();
  };
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "stem_leaf") {
    std::string p = field("predicate");
    for (const auto& e : kPredicates)
      if (p == e.name) return StemLeafFamily{e.pred};
    schema("unknown stem_leaf predicate '" + p + "'");
  }
  if (kind == "trading") {
    std::string m = field("mode");
    if (m != "total" && m != "remaining") schema("unknown trading mode '" + m + "'");
    if (!j.contains("item_count") || !j["item_count"].is_number_integer()) schema("trading family needs item_count");
    int n = j["item_count"].get<int>();
    if (n < 1 || n > 3) schema("trading item_count must be 1, 2 or 3");
    return TradingFamily{m == "total" ? TradingMode::Total : TradingMode::Remaining, n};
  }
  if (kind == "comparison") {
    std::string d = field("direction");
    if (d != "more" && d != "less") schema("unknown comparison direction '" + d + "'");
    return ComparisonFamily{d == "more" ? Direction::More : Direction::Less};
  }
  if (kind == "probability") {
    std::string m = field("mode");
    if (m == "joint_cell") return ProbabilityFamily{ProbabilityMode::JointCell};
    if (m == "category_fraction") return ProbabilityFamily{ProbabilityMode::CategoryFraction};
    schema("unknown probability mode '" + m + "'");
  }
  if (kind == "stats") {
    std::string s = field("stat");
    for (Stat st : {Stat::Mean, Stat::Median, Stat::Mode, Stat::Average})
      if (s == stat_name(st)) return StatsFamily{st};
    schema("unknown stat '" + s + "'");
  }
  schema("unknown family '" + kind + "'");
}

std::vector<std::string> family_scalar_roles(const GeneratorFamily& f) {
  return std::visit(
      [](const auto& v) -> std::vector<std::string> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) {
          std::vector<std::string> r{"stem_start", "leaves"};
          if (v.predicate == StemLeafPredicate::CountValue) r.push_back("value");
          if (is_range(v.predicate)) {
            r.push_back("range_start");
            r.push_back("range_end");
          }
          if (is_threshold(v.predicate)) r.push_back("threshold");
          return r;
        }
        if constexpr (std::is_same_v<T, TradingFamily>) {
          std::vector<std::string> r{"items", "prices", "picks", "quantities"};
          if (v.mode == TradingMode::Remaining) r.push_back("budget");
          return r;
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) return {"row1", "row2", "column"};
        if constexpr (std::is_same_v<T, ProbabilityFamily>) {
          if (v.mode == ProbabilityMode::JointCell) return {"row", "col"};
          return {"category"};
        }
        if constexpr (std::is_same_v<T, StatsFamily>) return {"values"};
      },
      f);
}

// ---------------------------------------------------------------------------

void validate_plot(const StemLeafPlot& p) {
  if (p.stems.size() != p.leaves.size()) throw Error(ErrorCode::LengthMismatch, "one leaf list per stem is required");
  for (std::size_t i = 0; i < p.stems.size(); ++i) {
    if (p.stems[i] < 0) throw Error(ErrorCode::InvariantViolation, "negative stem");
    if (i > 0 && p.stems[i] <= p.stems[i - 1]) throw Error(ErrorCode::InvariantViolation, "stems must be strictly increasing");
    int prev = 0;
    for (int leaf : p.leaves[i]) {
      if (leaf < 0 || leaf > 9) throw Error(ErrorCode::InvariantViolation, "leaf outside 0-9");
      if (leaf < prev) throw Error(ErrorCode::InvariantViolation, "leaves must be sorted");
      prev = leaf;
    }
  }
}

std::vector<std::int64_t> stem_leaf_values(const StemLeafPlot& p) {
  validate_plot(p);
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < p.stems.size(); ++i)
    for (int leaf : p.leaves[i]) out.push_back(p.stems[i] * 10 + leaf);
  return out;
}

bool matches(StemLeafPredicate pred, std::int64_t x, std::int64_t a, std::int64_t b) {
  switch (pred) {
    case StemLeafPredicate::CountValue: return x == a;
    case StemLeafPredicate::RangeClosedClosed: return a <= x && x <= b;
    case StemLeafPredicate::RangeClosedOpen: return a <= x && x < b;
    case StemLeafPredicate::RangeOpenOpen: return a < x && x < b;
    case StemLeafPredicate::RangeOpenClosed: return a < x && x <= b;
    case StemLeafPredicate::BelowStrict: return x < a;
    case StemLeafPredicate::BelowWeak: return x <= a;
    case StemLeafPredicate::AboveWeak: return x >= a;
    case StemLeafPredicate::AboveStrict: return x > a;
    case StemLeafPredicate::Min:
    case StemLeafPredicate::Max: return false;
  }
  return false;
}

std::size_t count_matching(const StemLeafPlot& p, StemLeafPredicate pred, std::int64_t a, std::int64_t b) {
  if (pred == StemLeafPredicate::Min || pred == StemLeafPredicate::Max) {
    throw Error(ErrorCode::InvalidArgument, "min/max are not counting predicates");
  }
  auto values = stem_leaf_values(p);
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](std::int64_t x) { return matches(pred, x, a, b); }));
}

std::int64_t stem_leaf_extreme(const StemLeafPlot& p, bool want_max) {
  auto values = stem_leaf_values(p);
  if (values.empty()) throw Error(ErrorCode::EmptyPlot, "the stem-and-leaf plot has no leaves");
  return want_max ? *std::max_element(values.begin(), values.end()) : *std::min_element(values.begin(), values.end());
}

Decimal trading_total(std::span<const PricedItem> prices, std::span<const std::int64_t> quantities) {
  if (prices.size() != quantities.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(prices.size()) + " prices but " +
                                               std::to_string(quantities.size()) + " quantities");
  }
  if (prices.empty() || prices.size() > 3) throw Error(ErrorCode::LengthMismatch, "between 1 and 3 items are required");
  std::int64_t cents = 0;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (quantities[i] <= 0) throw Error(ErrorCode::InvalidArgument, "quantities must be positive");
    if (prices[i].price.scale > 2) throw Error(ErrorCode::InvalidArgument, "prices must have at most two decimals");
    cents += prices[i].price.rescaled(2).units * quantities[i];
  }
  return Decimal{cents, 2};
}

Decimal trading_remaining(const Decimal& budget, std::span<const PricedItem> prices,
                          std::span<const std::int64_t> quantities) {
  Decimal total = trading_total(prices, quantities);
  if (budget.scale > 2) throw Error(ErrorCode::InvalidArgument, "budget must have at most two decimals");
  std::int64_t left = budget.rescaled(2).units - total.units;
  if (left < 0) {
    throw Error(ErrorCode::NegativeRemainder,
                "budget " + budget.to_currency() + " is less than the total " + total.to_currency());
  }
  return Decimal{left, 2};
}

ComparisonResult compare_rows(const TableSpec& t, const std::string& column, const std::string& row1,
                              const std::string& row2, Direction direction) {
  auto c = column_index(t, column);
  if (!c || *c == 0) throw Error(ErrorCode::MissingRow, "no value column '" + column + "'", "column");
  auto r1 = row_index(t, row1);
  auto r2 = row_index(t, row2);
  if (!r1) throw Error(ErrorCode::MissingRow, "no row '" + row1 + "'", "row1");
  if (!r2) throw Error(ErrorCode::MissingRow, "no row '" + row2 + "'", "row2");
  Rational v1 = cell_number(t.rows[*r1][*c]);
  Rational v2 = cell_number(t.rows[*r2][*c]);
  if (v1 == v2) throw Error(ErrorCode::TieValues, row1 + " and " + row2 + " have the same value for " + column);
  bool first = direction == Direction::More ? v1 > v2 : v1 < v2;
  return ComparisonResult{first ? row1 : row2, {row1, row2}};
}

FractionVal joint_probability(const TableSpec& t, const std::string& row, const std::string& col) {
  auto c = column_index(t, col);
  auto r = row_index(t, row);
  if (!r) throw Error(ErrorCode::MissingRow, "no row '" + row + "'", "row");
  if (!c || *c == 0) throw Error(ErrorCode::MissingRow, "no column '" + col + "'", "col");
  Rational total(0);
  for (const auto& rr : t.rows) {
    for (std::size_t j = 1; j < rr.size(); ++j) {
      Rational v = cell_number(rr[j]);
      if (v < Rational(0) || !v.is_integer()) throw Error(ErrorCode::InvalidArgument, "counts must be non-negative integers");
      total = total + v;
    }
  }
  if (total == Rational(0)) throw Error(ErrorCode::ZeroTotal, "the table counts sum to zero");
  return make_fraction(cell_number(t.rows[*r][*c]) / total);
}

FractionVal category_fraction(const TableSpec& t, const std::string& category) {
  if (t.columns.size() < 2) throw Error(ErrorCode::InvalidArgument, "frequency table needs a count column");
  Rational total(0);
  std::optional<Rational> hit;
  for (const auto& row : t.rows) {
    Rational v = cell_number(row[1]);
    if (v < Rational(0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be non-negative");
    total = total + v;
    if (row[0].text == category) hit = v;
  }
  if (!hit) throw Error(ErrorCode::MissingCategory, "no category '" + category + "'", "category");
  if (total == Rational(0)) throw Error(ErrorCode::ZeroTotal, "the frequencies sum to zero");
  return make_fraction(*hit / total);
}

AnswerValue stat_value(std::span<const std::int64_t> values, Stat stat) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "statistics need at least one value");
  std::vector<std::int64_t> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<std::int64_t>(sorted.size());
  switch (stat) {
    case Stat::Mean:
    case Stat::Average: {
      std::int64_t sum = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0});
      return numeric_answer(Rational(sum, n));
    }
    case Stat::Median: {
      if (n % 2 == 1) return IntVal{sorted[static_cast<std::size_t>(n / 2)]};
      std::int64_t lo = sorted[static_cast<std::size_t>(n / 2 - 1)];
      std::int64_t hi = sorted[static_cast<std::size_t>(n / 2)];
      return numeric_answer(Rational(lo + hi, 2));
    }
    case Stat::Mode: {
      std::map<std::int64_t, std::size_t> freq;
      for (auto v : sorted) ++freq[v];
      std::size_t best = 0;
      for (const auto& [v, c] : freq) best = std::max(best, c);
      std::vector<std::int64_t> modes;
      for (const auto& [v, c] : freq)
        if (c == best) modes.push_back(v);
      if (modes.size() != 1) throw Error(ErrorCode::AmbiguousMode, "no unique mode among " + join(sorted, ", "));
      return IntVal{modes.front()};
    }
  }
  throw Error(ErrorCode::Internal, "unhandled statistic");
}

// ---------------------------------------------------------------------------

AnswerValue evaluate(const GeneratorFamily& f, const FamilyInputs& in) {
  return std::visit(
      [&](const auto& v) -> AnswerValue {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) {
          if (v.predicate == StemLeafPredicate::Min) return IntVal{stem_leaf_extreme(in.plot, false)};
          if (v.predicate == StemLeafPredicate::Max) return IntVal{stem_leaf_extreme(in.plot, true)};
          return IntVal{static_cast<std::int64_t>(count_matching(in.plot, v.predicate, in.bound_a, in.bound_b))};
        }
        if constexpr (std::is_same_v<T, TradingFamily>) {
          if (v.mode == TradingMode::Total) return DecVal{trading_total(in.purchases, in.quantities)};
          if (!in.budget) throw Error(ErrorCode::MissingField, "remaining-money oracle needs a budget", "budget");
          return DecVal{trading_remaining(*in.budget, in.purchases, in.quantities)};
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) {
          return TextVal{compare_rows(in.table, in.column, in.row1, in.row2, v.direction).answer};
        }
        if constexpr (std::is_same_v<T, ProbabilityFamily>) {
          if (v.mode == ProbabilityMode::JointCell) return joint_probability(in.table, in.row1, in.column);
          return category_fraction(in.table, in.category);
        }
        if constexpr (std::is_same_v<T, StatsFamily>) return stat_value(in.values, v.stat);
      },
      f);
}

std::vector<std::string> derived_field_names(const GeneratorFamily& f) {
  switch (f.index()) {
    case 0: return {"plot_rows", "values", "n", "condition", "matching", "matching_count", "extreme_reason", "answer"};
    case 1: return {"price_lines", "cost_lines", "sum_expr", "total", "budget", "remaining_expr", "answer"};
    case 2: return {"column", "row1", "row2", "value1", "value2", "compare_sentence", "answer"};
    case 3: return {"target", "cell", "total", "total_expr", "fraction_expr", "answer"};
    default:
      return {"values", "n", "sorted", "sum_expr", "mean_expr", "median_expr", "frequency_list", "mode_sentence", "answer"};
  }
}

std::vector<std::string> default_solution_steps(const GeneratorFamily& f) {
  return std::visit(
      [](const auto& v) -> std::vector<std::string> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) {
          std::vector<std::string> steps{
              "Read the stem-and-leaf plot. Each stem is the tens digit and each leaf is the ones digit of one number.",
              "List the numbers row by row: {@plot_rows}. There are {@n} numbers in total.",
          };
          if (v.predicate == StemLeafPredicate::Min || v.predicate == StemLeafPredicate::Max) {
            steps.push_back("{@extreme_reason}");
          } else {
            steps.push_back("Keep only the numbers that are {@condition}: {@matching}.");
            steps.push_back("Count the numbers that were kept: {@matching_count}.");
          }
          return steps;
        }
        if constexpr (std::is_same_v<T, TradingFamily>) {
          std::vector<std::string> steps{
              "Find the price of each item in the table: {@price_lines}.",
              "Multiply each price by the number bought: {@cost_lines}.",
              "Add the costs to get the total: {@sum_expr}.",
          };
          if (v.mode == TradingMode::Remaining) steps.push_back("Subtract the total from the money available: {@remaining_expr}.");
          return steps;
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) {
          return {"Look at the {@column} column of the table.", "{@row1} has {@value1} and {@row2} has {@value2}.",
                  "{@compare_sentence}"};
        }
        if constexpr (std::is_same_v<T, ProbabilityFamily>) {
          if (v.mode == ProbabilityMode::JointCell) {
            return {"Find the count in the cell for {@target}: {@cell}.",
                    "Add every count in the table to get the total: {@total_expr}.",
                    "Divide the cell by the total and simplify: {@fraction_expr}."};
          }
          return {"Find the frequency of {@target}: {@cell}.",
                  "Add all the frequencies to get the total: {@total_expr}.",
                  "Divide the frequency by the total and simplify: {@fraction_expr}."};
        }
        if constexpr (std::is_same_v<T, StatsFamily>) {
          switch (v.stat) {
            case Stat::Mean:
            case Stat::Average:
              return {"Read the numbers from the table: {@values}.", "Add them: {@sum_expr}.",
                      "Divide the sum by the count of numbers, {@n}: {@mean_expr}."};
            case Stat::Median:
              return {"Read the numbers from the table: {@values}.",
                      "Sort them from least to greatest: {@sorted}.", "{@median_expr}"};
            case Stat::Mode:
              return {"Read the numbers from the table: {@values}.",
                      "Sort them from least to greatest: {@sorted}.",
                      "Count how many times each number appears: {@frequency_list}.", "{@mode_sentence}"};
          }
        }
        return {};
      },
      f);
}

std::map<std::string, std::string> solution_fields(const GeneratorFamily& f, const FamilyInputs& in,
                                                   const AnswerValue& answer) {
  std::map<std::string, std::string> out;
  out["answer"] = display_answer(f, answer);

  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) {
          std::vector<std::string> rows;
          std::vector<std::int64_t> values;
          for (std::size_t i = 0; i < in.plot.stems.size(); ++i) {
            std::int64_t stem = in.plot.stems[i];
            const auto& leaves = in.plot.leaves[i];
            if (leaves.empty()) {
              rows.push_back("stem " + std::to_string(stem) + " has no leaves");
              continue;
            }
            std::vector<std::int64_t> row_values;
            for (int leaf : leaves) row_values.push_back(stem * 10 + leaf);
            values.insert(values.end(), row_values.begin(), row_values.end());
            rows.push_back("stem " + std::to_string(stem) + " with leaves " + join(leaves, ", ") + " gives " +
                           join(row_values, ", "));
          }
          out["plot_rows"] = join(rows, "; ");
          out["values"] = values.empty() ? "none" : join(values, ", ");
          out["n"] = std::to_string(values.size());

          const std::string a = std::to_string(in.bound_a);
          const std::string b = std::to_string(in.bound_b);
          std::string cond;
          switch (v.predicate) {
            case StemLeafPredicate::CountValue: cond = "equal to " + a; break;
            case StemLeafPredicate::RangeClosedClosed:
              cond = "at least " + a + " and at most " + b + ", so both " + a + " and " + b + " are included";
              break;
            case StemLeafPredicate::RangeClosedOpen:
              cond = "at least " + a + " but fewer than " + b + ", so " + a + " is included and " + b + " is not";
              break;
            case StemLeafPredicate::RangeOpenOpen:
              cond = "greater than " + a + " but fewer than " + b + ", so neither " + a + " nor " + b + " is included";
              break;
            case StemLeafPredicate::RangeOpenClosed:
              cond = "greater than " + a + " and at most " + b + ", so " + a + " is not included and " + b + " is";
              break;
            case StemLeafPredicate::BelowStrict: cond = "fewer than " + a + ", so " + a + " itself is not included"; break;
            case StemLeafPredicate::BelowWeak: cond = "at most " + a + ", so " + a + " itself is included"; break;
            case StemLeafPredicate::AboveWeak: cond = "at least " + a + ", so " + a + " itself is included"; break;
            case StemLeafPredicate::AboveStrict: cond = "greater than " + a + ", so " + a + " itself is not included"; break;
            case StemLeafPredicate::Min: cond = "the smallest"; break;
            case StemLeafPredicate::Max: cond = "the largest"; break;
          }
          out["condition"] = cond;

          std::vector<std::int64_t> kept;
          for (auto x : values)
            if (matches(v.predicate, x, in.bound_a, in.bound_b)) kept.push_back(x);
          out["matching"] = kept.empty() ? "there are none" : join(kept, ", ");
          out["matching_count"] = std::to_string(kept.size());

          std::string reason;
          if (!values.empty()) {
            bool want_max = v.predicate == StemLeafPredicate::Max;
            std::optional<std::size_t> at;
            for (std::size_t i = 0; i < in.plot.stems.size(); ++i) {
              if (in.plot.leaves[i].empty()) continue;
              if (!at || want_max) at = i;
              if (!want_max) break;
            }
            std::int64_t stem = in.plot.stems[*at];
            int leaf = want_max ? in.plot.leaves[*at].back() : in.plot.leaves[*at].front();
            reason = std::string(want_max ? "The last" : "The first") + " stem with any leaves is " + std::to_string(stem) +
                     " and its " + (want_max ? "largest" : "smallest") + " leaf is " + std::to_string(leaf) + ", so the " +
                     (want_max ? "largest" : "smallest") + " number is " + std::to_string(stem * 10 + leaf) + ".";
          } else {
            reason = "The plot has no leaves.";
          }
          out["extreme_reason"] = reason;
        }
        if constexpr (std::is_same_v<T, TradingFamily>) {
          std::vector<std::string> prices, costs, cost_values;
          std::int64_t total = 0;
          for (std::size_t i = 0; i < in.purchases.size() && i < in.quantities.size(); ++i) {
            const auto& p = in.purchases[i];
            Decimal cost{p.price.rescaled(2).units * in.quantities[i], 2};
            total += cost.units;
            prices.push_back(p.item + ": " + p.price.to_currency());
            costs.push_back(std::to_string(in.quantities[i]) + " × " + p.price.to_currency() + " = " + cost.to_currency());
            cost_values.push_back(cost.to_currency());
          }
          Decimal total_dec{total, 2};
          out["price_lines"] = join(prices, "; ");
          out["cost_lines"] = join(costs, "; ");
          out["sum_expr"] = cost_values.size() == 1 ? total_dec.to_currency()
                                                    : join(cost_values, " + ") + " = " + total_dec.to_currency();
          out["total"] = total_dec.to_currency();
          if (in.budget) {
            Decimal left{in.budget->rescaled(2).units - total, 2};
            out["budget"] = in.budget->to_currency();
            out["remaining_expr"] = in.budget->to_currency() + " - " + total_dec.to_currency() + " = " + left.to_currency();
          } else {
            out["budget"] = "";
            out["remaining_expr"] = "";
          }
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) {
          out["column"] = in.column;
          out["row1"] = in.row1;
          out["row2"] = in.row2;
          auto c = column_index(in.table, in.column);
          auto r1 = row_index(in.table, in.row1);
          auto r2 = row_index(in.table, in.row2);
          std::string v1 = (c && r1) ? in.table.rows[*r1][*c].text : "";
          std::string v2 = (c && r2) ? in.table.rows[*r2][*c].text : "";
          out["value1"] = v1;
          out["value2"] = v2;
          const std::string winner = answer_text(answer);
          const std::string& win_v = winner == in.row1 ? v1 : v2;
          const std::string& lose_v = winner == in.row1 ? v2 : v1;
          bool more = v.direction == Direction::More;
          out["compare_sentence"] = win_v + " is " + (more ? "greater" : "less") + " than " + lose_v + ", so " + winner +
                                    " has " + (more ? "more" : "less") + " value for " + in.column + ".";
        }
        if constexpr (std::is_same_v<T, ProbabilityFamily>) {
          std::vector<std::string> terms;
          Rational total(0);
          std::string cell;
          bool joint = v.mode == ProbabilityMode::JointCell;
          auto c = joint ? column_index(in.table, in.column) : std::optional<std::size_t>(1);
          const std::string& label = joint ? in.row1 : in.category;
          for (const auto& row : in.table.rows) {
            for (std::size_t j = 1; j < row.size(); ++j) {
              if (!joint && j != 1) continue;
              terms.push_back(row[j].text);
              if (row[j].number) total = total + row[j].number->value();
              if (row[0].text == label && c && j == *c) cell = row[j].text;
            }
          }
          out["target"] = joint ? in.row1 + " and " + in.column : in.category;
          out["cell"] = cell;
          out["total"] = total.to_string();
          out["total_expr"] = terms.size() == 1 ? total.to_string() : join(terms, " + ") + " = " + total.to_string();
          std::string raw = cell + "/" + total.to_string();
          std::string reduced = answer_text(answer);
          out["fraction_expr"] = raw == reduced ? raw : raw + " = " + reduced;
        }
        if constexpr (std::is_same_v<T, StatsFamily>) {
          std::vector<std::int64_t> sorted = in.values;
          std::sort(sorted.begin(), sorted.end());
          std::int64_t sum = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0});
          std::size_t n = sorted.size();
          out["values"] = join(in.values, ", ");
          out["n"] = std::to_string(n);
          out["sorted"] = join(sorted, ", ");
          out["sum_expr"] = join(in.values, " + ") + " = " + std::to_string(sum);
          std::string mean_text;
          if (n) {
            Rational mean(sum, static_cast<std::int64_t>(n));
            try {
              mean_text = answer_text(numeric_answer(mean));
            } catch (const Error&) {
              mean_text = mean.to_string();
            }
          }
          out["mean_expr"] = "(" + join(in.values, " + ") + ") / " + std::to_string(n) + " = " + mean_text;
          if (n % 2 == 1) {
            out["median_expr"] = "There are " + std::to_string(n) + " numbers, so the median is the middle one, the " +
                                 ordinal(n / 2 + 1) + " number: " + std::to_string(sorted[n / 2]) + ".";
          } else if (n > 0) {
            std::int64_t lo = sorted[n / 2 - 1], hi = sorted[n / 2];
            out["median_expr"] = "There are " + std::to_string(n) +
                                 " numbers, so the median is the mean of the two middle numbers, the " + ordinal(n / 2) +
                                 " and " + ordinal(n / 2 + 1) + ": (" + std::to_string(lo) + " + " + std::to_string(hi) +
                                 ") / 2 = " + answer_text(numeric_answer(Rational(lo + hi, 2))) + ".";
          }
          std::map<std::int64_t, std::size_t> freq;
          for (auto x : sorted) ++freq[x];
          std::vector<std::string> fl;
          std::size_t best = 0;
          for (const auto& [x, c] : freq) {
            fl.push_back(std::to_string(x) + " appears " + times(c));
            best = std::max(best, c);
          }
          out["frequency_list"] = join(fl, ", ");
          std::vector<std::int64_t> modes;
          for (const auto& [x, c] : freq)
            if (c == best) modes.push_back(x);
          out["mode_sentence"] = modes.size() == 1 ? std::to_string(modes[0]) + " appears the most times, so the mode is " +
                                                         std::to_string(modes[0]) + "."
                                                   : "No single number appears the most times.";
        }
      },
      f);
  return out;
}

std::string terminal_line(const AnswerValue& answer) { return "The answer is " + answer_text(answer) + "."; }

std::string render_solution(const GeneratorFamily& f, const FamilyInputs& in, const AnswerValue& answer,
                            std::span<const std::string> steps,
                            const std::map<std::string, std::string>& placeholder_text) {
  auto derived = solution_fields(f, in, answer);
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out += std::to_string(i + 1) + ". " + substitute(steps[i], placeholder_text, derived) + "\n";
  }
  out += terminal_line(answer);
  return out;
}

std::string render_solution(const GeneratorFamily& f, const FamilyInputs& in) {
  AnswerValue a = evaluate(f, in);
  auto steps = default_solution_steps(f);
  return render_solution(f, in, a, steps);
}

std::optional<std::string> extract_terminal_answer(std::string_view solution) {
  static constexpr std::string_view kLead = "the answer is";
  std::string lowered(solution);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto pos = lowered.rfind(kLead);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t start = pos + kLead.size();
  std::size_t end = solution.find('\n', start);
  std::string value(solution.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
  auto b = value.find_first_not_of(" \t\r:");
  if (b == std::string::npos) return std::nullopt;
  value = value.substr(b);
  while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
  if (!value.empty() && value.back() == '.') value.pop_back();
  while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
  if (value.empty()) return std::nullopt;
  return value;
}

std::size_t count_numbered_steps(std::string_view solution) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= solution.size()) {
    std::size_t end = solution.find('\n', pos);
    std::string_view line = solution.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (line.size() >= i + 4) {
      std::string head(line.substr(i, 4));
      for (auto& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (head == "step") {
        i += 4;
        while (i < line.size() && line[i] == ' ') ++i;
      }
    }
    std::size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')' || line[digits] == ':')) ++count;
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return count;
}

std::string substitute(std::string_view pattern, const std::map<std::string, std::string>& plain,
                       const std::map<std::string, std::string>& derived) {
  std::string out;
  out.reserve(pattern.size());
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      if (auto m = marker_at(pattern, i)) {
        const auto& [inner, next] = *m;
        const auto& table = inner.front() == '@' ? derived : plain;
        auto key = inner.front() == '@' ? inner.substr(1) : inner;
        if (auto it = table.find(key); it != table.end()) {
          out += it->second;
          i = next;
          continue;
        }
      }
    }
    out += pattern[i++];
  }
  return out;
}

std::vector<std::string> pattern_markers(std::string_view pattern) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '{') continue;
    if (auto m = marker_at(pattern, i)) out.push_back(m->first);
  }
  return out;
}

bool has_residual_marker(std::string_view text) { return !pattern_markers(text).empty(); }

}  // namespace tell

#include "core/recheck.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace tell {

namespace {

Rational number_at(const TableSpec& t, std::size_t row, std::size_t col) {
  auto r = Rational::parse(t.rows.at(row).at(col).text);
  if (!r) throw Error(ErrorCode::TypeMismatch, "cell '" + t.rows[row][col].text + "' is not a number", "table");
  return *r;
}

std::string param(const ProblemTemplate& t, const Json& binding, const char* role) {
  const Json& v = binding.at(t.roles.at(role).get<std::string>());
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::int64_t int_param(const ProblemTemplate& t, const Json& binding, const char* role) {
  return binding.at(t.roles.at(role).get<std::string>()).get<std::int64_t>();
}

std::size_t find_row(const TableSpec& t, const std::string& label) {
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i][0].text == label) return i;
  throw Error(ErrorCode::MissingRow, "no row '" + label + "'");
}

std::size_t find_col(const TableSpec& t, const std::string& label) {
  for (std::size_t j = 1; j < t.columns.size(); ++j)
    if (t.columns[j] == label) return j;
  throw Error(ErrorCode::MissingRow, "no column '" + label + "'");
}

AnswerValue as_number_answer(const Rational& r) {
  if (r.is_integer()) return IntVal{r.num()};
  for (int scale = 1; scale <= 6; ++scale) {
    if ((r * Rational(pow10(scale))).is_integer()) return DecVal{Decimal::from_rational(r, scale)};
  }
  throw Error(ErrorCode::ValidationError, "non-terminating value " + r.to_string());
}

AnswerValue stem_leaf(const ProblemTemplate& t, const TmwpSample& s, StemLeafPredicate pred) {
  std::vector<std::int64_t> values;
  for (const auto& row : s.table.rows) {
    std::int64_t stem = std::stoll(row[0].text);
    std::istringstream leaves(row[1].text);
    std::string leaf;
    while (leaves >> leaf) values.push_back(stem * 10 + std::stoll(leaf));
  }
  const Json& b = *s.binding;
  if (pred == StemLeafPredicate::Min || pred == StemLeafPredicate::Max) {
    if (values.empty()) throw Error(ErrorCode::EmptyPlot, "no values");
    std::int64_t best = values.front();
    for (auto v : values) best = pred == StemLeafPredicate::Min ? std::min(best, v) : std::max(best, v);
    return IntVal{best};
  }
  std::int64_t a = 0, hi = 0;
  if (t.roles.contains("value")) a = int_param(t, b, "value");
  if (t.roles.contains("threshold")) a = int_param(t, b, "threshold");
  if (t.roles.contains("range_start")) a = int_param(t, b, "range_start");
  if (t.roles.contains("range_end")) hi = int_param(t, b, "range_end");
  std::int64_t n = 0;
  for (auto v : values) {
    bool keep = false;
    switch (pred) {
      case StemLeafPredicate::CountValue: keep = v == a; break;
      case StemLeafPredicate::RangeClosedClosed: keep = !(v < a) && !(v > hi); break;
      case StemLeafPredicate::RangeClosedOpen: keep = !(v < a) && v < hi; break;
      case StemLeafPredicate::RangeOpenOpen: keep = v > a && v < hi; break;
      case StemLeafPredicate::RangeOpenClosed: keep = v > a && !(v > hi); break;
      case StemLeafPredicate::BelowStrict: keep = v < a; break;
      case StemLeafPredicate::BelowWeak: keep = !(v > a); break;
      case StemLeafPredicate::AboveWeak: keep = !(v < a); break;
      case StemLeafPredicate::AboveStrict: keep = v > a; break;
      default: break;
    }
    n += keep ? 1 : 0;
  }
  return IntVal{n};
}

AnswerValue trading(const ProblemTemplate& t, const TmwpSample& s, TradingMode mode) {
  const Json& b = *s.binding;
  const auto& picks = t.roles.at("picks");
  const auto& qty = t.roles.at("quantities");
  // Whole cents, summed one purchase at a time.
  std::int64_t cents = 0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    std::string label = b.at(picks[i].get<std::string>()).get<std::string>();
    Rational price = number_at(s.table, find_row(s.table, label), 1);
    std::int64_t q = b.at(qty[i].get<std::string>()).get<std::int64_t>();
    for (std::int64_t k = 0; k < q; ++k) cents += (price * Rational(100)).num();
  }
  if (mode == TradingMode::Remaining) {
    auto budget = Rational::parse(param(t, b, "budget"));
    if (!budget) throw Error(ErrorCode::TypeMismatch, "budget is not a number");
    cents = (*budget * Rational(100)).num() - cents;
    if (cents < 0) throw Error(ErrorCode::NegativeRemainder, "budget too small");
  }
  return DecVal{Decimal{cents, 2}};
}

AnswerValue comparison(const ProblemTemplate& t, const TmwpSample& s, Direction d) {
  const Json& b = *s.binding;
  std::string r1 = param(t, b, "row1"), r2 = param(t, b, "row2");
  std::size_t c = find_col(s.table, param(t, b, "column"));
  Rational v1 = number_at(s.table, find_row(s.table, r1), c);
  Rational v2 = number_at(s.table, find_row(s.table, r2), c);
  if (v1 == v2) throw Error(ErrorCode::TieValues, "tie");
  bool first = d == Direction::More ? v2 < v1 : v1 < v2;
  return TextVal{first ? r1 : r2};
}

AnswerValue probability(const ProblemTemplate& t, const TmwpSample& s, ProbabilityMode mode) {
  const Json& b = *s.binding;
  std::int64_t total = 0, hit = 0;
  if (mode == ProbabilityMode::JointCell) {
    std::string row = param(t, b, "row"), col = param(t, b, "col");
    for (std::size_t i = 0; i < s.table.rows.size(); ++i) {
      for (std::size_t j = 1; j < s.table.columns.size(); ++j) {
        std::int64_t v = number_at(s.table, i, j).num();
        total += v;
        if (s.table.rows[i][0].text == row && s.table.columns[j] == col) hit = v;
      }
    }
  } else {
    std::string cat = param(t, b, "category");
    for (std::size_t i = 0; i < s.table.rows.size(); ++i) {
      std::int64_t v = number_at(s.table, i, 1).num();
      total += v;
      if (s.table.rows[i][0].text == cat) hit = v;
    }
  }
  if (total == 0) throw Error(ErrorCode::ZeroTotal, "zero total");
  std::int64_t g = std::gcd(hit, total);
  if (g == 0) g = 1;
  return FractionVal{hit / g, total / g};
}

AnswerValue stats(const TmwpSample& s, Stat stat) {
  std::vector<std::int64_t> v;
  for (std::size_t i = 0; i < s.table.rows.size(); ++i) v.push_back(number_at(s.table, i, 1).num());
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "no values");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<std::int64_t>(v.size());
  switch (stat) {
    case Stat::Mean:
    case Stat::Average: {
      std::int64_t sum = 0;
      for (auto x : v) sum += x;
      return as_number_answer(Rational(sum, n));
    }
    case Stat::Median: {
      auto mid = static_cast<std::size_t>(n / 2);
      if (n % 2) return IntVal{v[mid]};
      return as_number_answer(Rational(v[mid - 1] + v[mid], 2));
    }
    case Stat::Mode: {
      std::int64_t best = 0, best_run = 0;
      bool tied = false;
      for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        auto run = static_cast<std::int64_t>(j - i);
        if (run > best_run) {
          best_run = run;
          best = v[i];
          tied = false;
        } else if (run == best_run) {
          tied = true;
        }
        i = j;
      }
      if (tied) throw Error(ErrorCode::AmbiguousMode, "tied mode");
      return IntVal{best};
    }
  }
  throw Error(ErrorCode::Internal, "unhandled statistic");
}

}  // namespace

AnswerValue recheck_answer(const ProblemTemplate& t, const TmwpSample& s) {
  if (!s.binding) throw Error(ErrorCode::MissingField, "sample " + s.id + " carries no binding", "template_binding");
  return std::visit(
      [&](const auto& f) -> AnswerValue {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) return stem_leaf(t, s, f.predicate);
        if constexpr (std::is_same_v<T, TradingFamily>) return trading(t, s, f.mode);
        if constexpr (std::is_same_v<T, ComparisonFamily>) return comparison(t, s, f.direction);
        if constexpr (std::is_same_v<T, ProbabilityFamily>) return probability(t, s, f.mode);
        if constexpr (std::is_same_v<T, StatsFamily>) return stats(s, f.stat);
      },
      t.family);
}

std::string audit_generated(const ProblemTemplate& t, const TmwpSample& s) {
  try {
    validate_sample(s);
    AnswerValue expect = recheck_answer(t, s);
    if (!(expect == s.answer)) {
      return "re-check gives " + answer_text(expect) + " but the sample says " + answer_text(s.answer);
    }
    auto terminal = extract_terminal_answer(s.solution);
    if (!terminal || *terminal != answer_text(s.answer)) return "solution terminal line does not state the answer";
    if (has_residual_marker(s.question) || has_residual_marker(s.solution)) return "unresolved placeholder";
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace tell

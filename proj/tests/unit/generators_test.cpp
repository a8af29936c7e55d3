#include <doctest.h>

#include "../oracles/brute_force.hpp"
#include "core/generators.hpp"
#include "core/recheck.hpp"
#include "support.hpp"

using namespace tell;

namespace {

StemLeafPlot plot_64_72() { return StemLeafPlot{{6, 7}, {{4, 6, 6}, {0, 2}}}; }

Decimal dec(const char* s) { return *Decimal::parse(s); }

TableSpec grid(std::vector<std::string> columns, std::vector<std::vector<std::string>> rows, TableLayout layout) {
  TableSpec t;
  t.columns = std::move(columns);
  t.layout = layout;
  for (auto& r : rows) {
    std::vector<Cell> cells;
    for (auto& c : r) cells.push_back(Cell::parse(c));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace

TEST_CASE("stem-leaf values") {
  CHECK(stem_leaf_values(plot_64_72()) == std::vector<std::int64_t>{64, 66, 66, 70, 72});
  CHECK(stem_leaf_values(StemLeafPlot{{1, 2}, {{}, {}}}).empty());
  CHECK(stem_leaf_values(StemLeafPlot{{0}, {{3}}}) == std::vector<std::int64_t>{3});
}

TEST_CASE("stem-leaf counting boundaries") {
  auto p = plot_64_72();
  CHECK(count_matching(p, StemLeafPredicate::AboveWeak, 66) == 4);
  CHECK(count_matching(p, StemLeafPredicate::AboveStrict, 66) == 2);
  CHECK(count_matching(p, StemLeafPredicate::BelowStrict, 66) == 1);
  CHECK(count_matching(p, StemLeafPredicate::BelowWeak, 66) == 3);
  CHECK(count_matching(p, StemLeafPredicate::CountValue, 65) == 0);
  CHECK(count_matching(p, StemLeafPredicate::CountValue, 66) == 2);
  CHECK(count_matching(p, StemLeafPredicate::RangeClosedClosed, 64, 72) == 5);
  CHECK(count_matching(p, StemLeafPredicate::RangeClosedOpen, 64, 72) == 4);
  CHECK(count_matching(p, StemLeafPredicate::RangeOpenOpen, 64, 72) == 3);
  CHECK(count_matching(p, StemLeafPredicate::RangeOpenClosed, 64, 72) == 4);
}

TEST_CASE("stem-leaf extremes") {
  CHECK(stem_leaf_extreme(plot_64_72(), false) == 64);
  CHECK(stem_leaf_extreme(plot_64_72(), true) == 72);
  CHECK(stem_leaf_extreme(StemLeafPlot{{0}, {{3}}}, true) == 3);
  CHECK(stem_leaf_extreme(StemLeafPlot{{0}, {{3}}}, false) == 3);
  CHECK(error_of([] { stem_leaf_extreme(StemLeafPlot{{1}, {{}}}, true); }) == ErrorCode::EmptyPlot);
}

TEST_CASE("trading totals and remainders") {
  std::vector<PricedItem> pen{{"pen", dec("1.25")}};
  std::vector<std::int64_t> one{1};
  CHECK(trading_total(pen, one).to_string() == "1.25");

  std::vector<PricedItem> two{{"pencil", dec("0.50")}, {"pen", dec("1.25")}};
  std::vector<std::int64_t> q{2, 1};
  CHECK(trading_total(two, q).to_string() == "2.25");
  CHECK(error_of([&] { trading_total(two, one); }) == ErrorCode::LengthMismatch);

  CHECK(trading_remaining(dec("5.00"), two, q).to_string() == "2.75");
  CHECK(trading_remaining(dec("2.25"), two, q).to_string() == "0.00");
  CHECK(error_of([&] { trading_remaining(dec("2.00"), two, q); }) == ErrorCode::NegativeRemainder);
}

TEST_CASE("row comparison") {
  auto t = grid({"Location", "May"}, {{"North", "7"}, {"South", "3"}}, TableLayout::KeyValue);
  auto more = compare_rows(t, "May", "North", "South", Direction::More);
  CHECK(more.answer == "North");
  CHECK(more.choices == std::vector<std::string>{"North", "South"});
  CHECK(compare_rows(t, "May", "North", "South", Direction::Less).answer == "South");

  auto tie = grid({"Location", "May"}, {{"North", "3"}, {"South", "3"}}, TableLayout::KeyValue);
  CHECK(error_of([&] { compare_rows(tie, "May", "North", "South", Direction::More); }) == ErrorCode::TieValues);
  CHECK(error_of([&] { compare_rows(t, "May", "North", "West", Direction::More); }) == ErrorCode::MissingRow);
}

TEST_CASE("probabilities") {
  auto whole = grid({"", "A"}, {{"x", "4"}}, TableLayout::TwoWayCount);
  CHECK(joint_probability(whole, "x", "A") == FractionVal{1, 1});

  auto t = grid({"", "A", "B"}, {{"x", "1", "2"}, {"y", "3", "4"}}, TableLayout::TwoWayCount);
  CHECK(joint_probability(t, "x", "B") == FractionVal{1, 5});
  auto z = grid({"", "A", "B"}, {{"x", "0", "2"}, {"y", "3", "5"}}, TableLayout::TwoWayCount);
  CHECK(joint_probability(z, "x", "A") == FractionVal{0, 1});
  auto empty = grid({"", "A"}, {{"x", "0"}}, TableLayout::TwoWayCount);
  CHECK(error_of([&] { joint_probability(empty, "x", "A"); }) == ErrorCode::ZeroTotal);

  auto f = grid({"Category", "Frequency"}, {{"A", "2"}, {"B", "2"}}, TableLayout::Frequency);
  CHECK(category_fraction(f, "A") == FractionVal{1, 2});
  auto single = grid({"Category", "Frequency"}, {{"A", "6"}}, TableLayout::Frequency);
  CHECK(category_fraction(single, "A") == FractionVal{1, 1});
  CHECK(error_of([&] { category_fraction(f, "C"); }) == ErrorCode::MissingCategory);
}

TEST_CASE("statistics") {
  std::vector<std::int64_t> fives{5, 5, 5};
  CHECK(answer_text(stat_value(fives, Stat::Mean)) == "5");
  std::vector<std::int64_t> v{1, 3, 3, 7};
  CHECK(answer_text(stat_value(v, Stat::Median)) == "3");
  CHECK(answer_text(stat_value(v, Stat::Mode)) == "3");
  std::vector<std::int64_t> even{1, 2, 4, 9};
  CHECK(answer_text(stat_value(even, Stat::Median)) == "3");
  std::vector<std::int64_t> half{1, 2, 5, 9};
  CHECK(answer_text(stat_value(half, Stat::Median)) == "3.5");
  std::vector<std::int64_t> tied{1, 1, 2, 2};
  CHECK(error_of([&] { stat_value(tied, Stat::Mode); }) == ErrorCode::AmbiguousMode);
}

TEST_CASE("terminal line helpers") {
  CHECK(terminal_line(IntVal{3}) == "The answer is 3.");
  CHECK(extract_terminal_answer("1. a\n2. b\nThe answer is 2.75.") == "2.75");
  CHECK_FALSE(extract_terminal_answer("no answer here"));
  CHECK(count_numbered_steps("1. a\n2. b\nThe answer is 1.") == 2);
}

TEST_CASE("marker substitution") {
  std::map<std::string, std::string> plain{{"name", "Ann"}};
  std::map<std::string, std::string> derived{{"total", "12"}};
  CHECK(substitute("{name} pays {@total}.", plain, derived) == "Ann pays 12.");
  CHECK(substitute("{who}", plain, derived) == "{who}");
  CHECK(pattern_markers("{a} and {@b}") == std::vector<std::string>{"a", "@b"});
  CHECK(has_residual_marker("left {over}"));
  CHECK_FALSE(has_residual_marker("all done"));
}

TEST_CASE("family oracles agree with brute force on every type") {
  for (const auto& t : builtin_template_db().templates) {
    for (std::uint64_t i = 0; i < 400; ++i) {
      TmwpSample s = generated(t.type_id, 2024, i);
      INFO("type " << t.type_id << " index " << i);
      CHECK(oracle::disagreement(t, s) == "");
      CHECK(answer_text(recheck_answer(t, s)) == answer_text(s.answer));
    }
  }
}

#include <doctest.h>

#include "core/numeric.hpp"
#include "core/sample.hpp"
#include "support.hpp"

using namespace tell;

namespace {

Json minimal_record() {
  return Json{{"id", "1"},
              {"question", "Is it sunny?"},
              {"choices", {"yes", "no"}},
              {"answer", "yes"},
              {"table_for_pd", {{"Day", {"Mon"}}, {"Weather", {"sunny"}}}},
              {"solution", "It says sunny. The answer is yes."},
              {"ques_type", "multi_choice"},
              {"ans_type", "boolean_text"},
              {"grade", 2},
              {"split", "train"}};
}

}  // namespace

TEST_CASE("rational parsing and arithmetic") {
  CHECK(Rational::parse("$2.75") == Rational(11, 4));
  CHECK(Rational::parse("1,234") == Rational(1234));
  CHECK(Rational::parse(" 2/4 ") == Rational(1, 2));
  CHECK(Rational::parse("-$1.50") == Rational(-3, 2));
  CHECK(Rational::parse("2.750") == Rational(11, 4));
  CHECK_FALSE(Rational::parse("abc"));
  CHECK_FALSE(Rational::parse("1/0"));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK(Rational(6, -4).den() == 2);
  CHECK(Rational(6, -4).num() == -3);
}

TEST_CASE("decimal keeps its scale") {
  auto d = Decimal::parse("4.00");
  REQUIRE(d);
  CHECK(d->to_string() == "4.00");
  CHECK(d->to_currency() == "$4.00");
  CHECK(Decimal{275, 2}.rescaled(4).units == 27500);
  CHECK_THROWS(Decimal{275, 2}.rescaled(1));
}

TEST_CASE("minimal multiple-choice record is valid") {
  TmwpSample s = parse_sample(minimal_record());
  CHECK(s.kind == QuestionKind::MultipleChoice);
  CHECK(std::holds_alternative<BoolTextVal>(s.answer));
  CHECK(s.split == Split::Train);
}

TEST_CASE("free-text record with choices violates the invariant") {
  Json r = minimal_record();
  r["ques_type"] = "free_text";
  CHECK(error_of([&] { parse_sample(r); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("missing and mistyped fields name the field") {
  Json r = minimal_record();
  r.erase("question");
  try {
    parse_sample(r);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingField);
    CHECK(e.field() == "question");
  }
  r = minimal_record();
  r["grade"] = "two";
  CHECK(error_of([&] { parse_sample(r); }) == ErrorCode::TypeMismatch);
}

TEST_CASE("fractions must be in lowest terms") {
  TmwpSample s = generated(20, 3);
  s.answer = FractionVal{2, 4};
  CHECK(error_of([&] { serialize_sample(s); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("serialization round-trips generated samples of every type") {
  for (const auto& t : builtin_template_db().templates) {
    for (int i = 0; i < 20; ++i) {
      TmwpSample s = generated(t.type_id, 11, static_cast<std::uint64_t>(i));
      Json once = serialize_sample(s);
      TmwpSample back = parse_sample(once);
      CHECK(back == s);
      CHECK(serialize_sample(back).dump() == once.dump());
    }
  }
}

TEST_CASE("stem-leaf sample has a two-column table_for_pd") {
  Json j = serialize_sample(generated(8, 5));
  CHECK(j["table_for_pd"].size() == 2);
  CHECK(j["layout"] == "stem-leaf");
}

TEST_CASE("table text layout") {
  TableSpec one{{"x"}, {{Cell::parse("5")}}, TableLayout::KeyValue};
  CHECK(render_table_text(one) == "x\n5");

  TableSpec plot{{"Stem", "Leaf"},
                 {{Cell::parse("6"), Cell::parse("4 6 6")}, {Cell::parse("7"), Cell::parse("0 2")}},
                 TableLayout::StemLeaf};
  std::string text = render_table_text(plot);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(render_table_text(plot) == text);
}

TEST_CASE("numeric tokens of a table") {
  TableSpec t{{"Item", "Price"},
              {{Cell::parse("pen"), Cell::parse("$1.25")}, {Cell::parse("cap"), Cell::parse("3")}},
              TableLayout::PriceList};
  auto tokens = numeric_tokens(t);
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0] == Rational(5, 4));
  CHECK(tokens[1] == Rational(3));
}

TEST_CASE("stats") {
  CHECK(compute_stats({}) == SplitStats{});

  TmwpSample a = parse_sample(minimal_record());
  TmwpSample b = a;
  b.id = "2";
  b.split = Split::Test;
  b.solution.clear();
  std::vector<TmwpSample> corpus{a, b};
  SplitStats st = compute_stats(corpus);
  CHECK(st.total.questions == 2);
  CHECK(st.total.tables == 1);
  CHECK(st.total.solutions == 1);
  CHECK(st.total.multiple_choice == 2);
  CHECK(st.per_split[Split::Train].questions == 1);
  CHECK(st.per_split[Split::Test].questions == 1);
}

TEST_CASE("corpus files name the bad line") {
  auto dir = scratch_dir("corpus");
  std::string good = serialize_sample(parse_sample(minimal_record())).dump();
  write_file(dir / "bad.jsonl", good + "\n" + good + "\n{not json\n");
  try {
    read_corpus((dir / "bad.jsonl").string());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  write_file(dir / "empty.jsonl", "");
  CHECK(read_corpus((dir / "empty.jsonl").string()).empty());
  fs::remove_all(dir);
}

TEST_CASE("TabMWP problem files are read as objects keyed by id") {
  auto dir = scratch_dir("ingest");
  Json raw = minimal_record();
  raw.erase("id");
  raw["split"] = "dev";
  raw["ans_type"] = "boolean_text";
  Json file{{"17", raw}};
  write_file(dir / "problems_dev.json", file.dump());
  auto samples = ingest_tabmwp((dir / "problems_dev.json").string());
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].id == "17");
  CHECK(samples[0].split == Split::Valid);
  fs::remove_all(dir);
}

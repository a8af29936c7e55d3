#include <doctest.h>

#include <set>

#include "core/generators.hpp"
#include "core/recheck.hpp"
#include "support.hpp"

using namespace tell;

namespace {

Json type_json(int type_id) { return template_to_json(builtin(type_id)); }

Json db_with(Json templates, Json pools = Json::object()) {
  return Json{{"schema_version", kTemplateSchemaVersion}, {"pools", pools}, {"templates", templates}};
}

}  // namespace

TEST_CASE("built-in database holds types 1 to 25") {
  const auto& db = builtin_template_db();
  REQUIRE(db.templates.size() == 25);
  std::set<int> ids;
  for (const auto& t : db.templates) ids.insert(t.type_id);
  CHECK(ids.size() == 25);
  CHECK(*ids.begin() == 1);
  CHECK(*ids.rbegin() == 25);
  CHECK(db.next_type_id() == 26);
}

TEST_CASE("built-in templates survive a JSON round trip") {
  const auto& db = builtin_template_db();
  TemplateDb again = parse_template_db(db_to_json(db));
  CHECK(db_to_json(again).dump() == db_to_json(db).dump());
}

TEST_CASE("question using an undeclared placeholder") {
  Json t = type_json(8);
  Json kept = Json::array();
  for (const auto& c : t["constraints"])
    if (c["placeholder"] != "threshold") kept.push_back(c);
  t["constraints"] = kept;
  t["roles"].erase("threshold");
  t["family"] = Json{{"kind", "stem_leaf"}, {"predicate", "min"}};
  t.erase("answer_rule");
  auto code = error_of([&] { parse_template_db(db_with(Json::array({t})), &builtin_template_db().pools); });
  CHECK(code == ErrorCode::UndeclaredPlaceholder);
}

TEST_CASE("two templates sharing a type id") {
  Json t = type_json(22);
  CHECK(error_of([&] { parse_template_db(db_with(Json::array({t, t})), &builtin_template_db().pools); }) ==
        ErrorCode::DuplicateTypeId);
  TemplateDb db = builtin_template_db();
  TemplateDb extra = parse_template_db(db_with(Json::array({t})), &db.pools);
  CHECK(error_of([&] { merge_template_db(db, extra); }) == ErrorCode::DuplicateTypeId);
}

TEST_CASE("unknown family is a schema error") {
  Json t = type_json(22);
  t["family"] = Json{{"kind", "geometry"}};
  CHECK(error_of([&] { parse_template_db(db_with(Json::array({t})), &builtin_template_db().pools); }) ==
        ErrorCode::SchemaError);
}

TEST_CASE("template selection") {
  const auto& db = builtin_template_db();

  TemplateDb single;
  single.templates.push_back(builtin(7));
  Rng r0(1);
  for (int i = 0; i < 50; ++i) CHECK(select_template(single, r0).type_id == 7);

  CHECK(error_of([&] { select_template(TemplateDb{}, r0); }) == ErrorCode::EmptyDb);

  std::map<int, double> only_one{{1, 1.0}};
  for (int t = 2; t <= 25; ++t) only_one[t] = 0.0;
  Rng r1(2);
  for (int i = 0; i < 1000; ++i) CHECK(select_template(db, r1, &only_one).type_id == 1);

  std::map<int, int> freq;
  Rng r2(3);
  for (int i = 0; i < 250000; ++i) ++freq[select_template(db, r2).type_id];
  for (int t = 1; t <= 25; ++t) {
    CHECK(freq[t] > 9500);
    CHECK(freq[t] < 10500);
  }
}

TEST_CASE("single-value integer range") {
  Json t = type_json(22);
  t["constraints"].push_back(Json{{"placeholder", "k"}, {"domain", {{"kind", "int_range"}, {"lo", 1}, {"hi", 1}}}});
  TemplateDb db = parse_template_db(db_with(Json::array({t})), &builtin_template_db().pools);
  Rng rng(4);
  CHECK(sample_bindings(db.templates[0], builtin_template_db().pools, rng)["k"] == 1);
}

TEST_CASE("range relation holds over 10k draws") {
  Json t = type_json(2);
  for (auto& c : t["constraints"]) {
    if (c["placeholder"] == "range_start" || c["placeholder"] == "range_end") {
      c["domain"]["lo"] = 60;
      c["domain"]["hi"] = 79;
      c.erase("relations");
    }
    if (c["placeholder"] == "range_end") c["relations"] = Json::array({{{"kind", "less"}, {"left", "range_start"}, {"right", "range_end"}}});
  }
  TemplateDb db = parse_template_db(db_with(Json::array({t})), &builtin_template_db().pools);
  const auto& pools = builtin_template_db().pools;
  int ok = 0;
  for (int i = 0; i < 10000; ++i) {
    Rng rng = Rng::stream(5, static_cast<std::uint64_t>(i));
    Binding b = sample_bindings(db.templates[0], pools, rng);
    int a = b["range_start"], z = b["range_end"];
    ok += (60 <= a && a < z && z <= 79);
  }
  CHECK(ok == 10000);
}

TEST_CASE("three distinct picks from a two-entry pool") {
  Json t = type_json(22);
  for (auto& c : t["constraints"])
    if (c["placeholder"] == "labels") c["domain"] = {{"kind", "category_pool"}, {"pool", "two"}, {"distinct", true}, {"count", 3}};
  Json pools{{"two", {"Ann", "Bo"}}};
  TemplateDb db = parse_template_db(db_with(Json::array({t}), pools), &builtin_template_db().pools);
  Pools all = builtin_template_db().pools;
  all["two"] = db.pools.at("two");
  Rng rng(6);
  CHECK(error_of([&] { sample_bindings(db.templates[0], all, rng, 50); }) == ErrorCode::ConstraintUnsatisfiable);
}

// 66, 66, 70 and 72 are all at least 66.
TEST_CASE("type 8 counts values at least the threshold") {
  Binding b{{"title", "Test scores"},
            {"stem_start", 6},
            {"stem_rows", 2},
            {"leaves", {{4, 6, 6}, {0, 2}}},
            {"threshold", 66}};
  TemplateProblem p = instantiate(builtin(8), b);
  CHECK(answer_text(p.answer) == "4");
  CHECK(p.question == "How many numbers are at least 66?");
  CHECK(count_numbered_steps(p.solution) == 4);
  CHECK(p.solution.substr(p.solution.rfind('\n') + 1) == "The answer is 4.");
}

TEST_CASE("type 22 mean of a constant list") {
  Binding b{{"title", "Cookies baked"},
            {"value_header", "Cookies"},
            {"n", 3},
            {"labels", {"Ann", "Bo", "Cy"}},
            {"values", {5, 5, 5}}};
  TemplateProblem p = instantiate(builtin(22), b);
  CHECK(answer_text(p.answer) == "5");
  auto at = p.solution.find("(5 + 5 + 5) / 3 = 5");
  REQUIRE(at != std::string::npos);
  CHECK(at < p.solution.find("The answer is 5."));
}

TEST_CASE("type 15 money left") {
  Binding b{{"name", "Ali"},
            {"gender", "he"},
            {"table_size", 4},
            {"items", {"pencil", "eraser", "ruler", "notebook"}},
            {"prices", {"0.50", "0.75", "1.20", "2.10"}},
            {"product", "pencil"},
            {"products", "pencils"},
            {"number", 2},
            {"budget", "5.00"}};
  TemplateProblem p = instantiate(builtin(15), b);
  CHECK(answer_text(p.answer) == "4.00");
  CHECK(p.question == "Ali has $5.00. How much money will Ali have left if he buys 2 pencils?");
}

TEST_CASE("instantiation is deterministic and leaves no markers") {
  for (const auto& t : builtin_template_db().templates) {
    for (std::uint64_t i = 0; i < 40; ++i) {
      TemplateProblem a = instance(t.type_id, 99, i);
      TemplateProblem b = instance(t.type_id, 99, i);
      CHECK(a.question == b.question);
      CHECK(a.solution == b.solution);
      CHECK(a.binding.dump() == b.binding.dump());
      CHECK_FALSE(has_residual_marker(a.question));
      CHECK_FALSE(has_residual_marker(a.solution));
      CHECK(count_numbered_steps(a.solution) >= 3);
      CHECK(audit_generated(t, to_sample(a, "x", 5)).empty());
    }
  }
}

TEST_CASE("answer rule disagreeing with the family oracle") {
  ProblemTemplate t = builtin(10);
  t.answer_rule = "stem_leaf.max";
  Binding b{{"title", "Test scores"}, {"stem_start", 6}, {"stem_rows", 2}, {"leaves", {{4, 6, 6}, {0, 2}}}};
  CHECK(error_of([&] { instantiate(t, b); }) == ErrorCode::OracleMismatch);
}

TEST_CASE("residual markers are reported") {
  ProblemTemplate t = builtin(22);
  t.solution = {"Add {@nothing_here} up."};
  Rng rng(8);
  Binding b = sample_bindings(t, builtin_template_db().pools, rng);
  CHECK(error_of([&] { instantiate(t, b); }) == ErrorCode::UndeclaredPlaceholder);
}

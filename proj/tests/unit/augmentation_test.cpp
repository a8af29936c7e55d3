#include <doctest.h>

#include "core/augmentation.hpp"
#include "support.hpp"

using namespace tell;

namespace {

std::string reply_around(const Json& t) {
  return "Here is a template for the new question type.\n```json\n" + t.dump(2) + "\n```\nIt reuses the same table.";
}

Json as_candidate(int type_id) {
  Json j = template_to_json(builtin(type_id));
  j.erase("type_id");
  return j;
}

}  // namespace

TEST_CASE("augmentation prompt") {
  std::string a = build_augmentation_prompt(builtin(22), "median");
  CHECK(a == build_augmentation_prompt(builtin(22), "median"));
  CHECK(a.find("median") != std::string::npos);
  CHECK(a.find(builtin(22).question) != std::string::npos);
  CHECK(a.find("\"type_id\": 22") == std::string::npos);
  CHECK(error_of([] { build_augmentation_prompt(builtin(22), "  "); }) == ErrorCode::ValidationError);
}

TEST_CASE("parsing candidate templates") {
  const auto& db = builtin_template_db();
  ProblemTemplate t = parse_augmented_template(reply_around(as_candidate(23)), db);
  CHECK(t.type_id == 26);
  CHECK(t.question == builtin(23).question);

  CHECK(error_of([&] { parse_augmented_template("I think a median template would be nice.", db); }) ==
        ErrorCode::NoTemplateFound);
  CHECK(error_of([&] { parse_augmented_template("```python\ndef median(xs):\n    return sorted(xs)[len(xs)//2]\n```", db); }) ==
        ErrorCode::NoTemplateFound);

  Json unknown = as_candidate(23);
  unknown["family"] = Json{{"kind", "calculus"}};
  CHECK(error_of([&] { parse_augmented_template(reply_around(unknown), db); }) == ErrorCode::SchemaError);
}

TEST_CASE("admission of candidates") {
  const auto& db = builtin_template_db();
  ProblemTemplate same = parse_augmented_template(reply_around(as_candidate(24)), db);
  AdmissionReport ok = admit_template(same, db.pools);
  CHECK(ok.admitted);
  CHECK(ok.trials == 100);
  CHECK(ok.agreed == 100);

  Json mutated = as_candidate(10);
  mutated["answer_rule"] = "stem_leaf.max";
  AdmissionReport bad = admit_template(parse_augmented_template(reply_around(mutated), db), db.pools);
  CHECK_FALSE(bad.admitted);
  CHECK(bad.oracle_mismatch > 0);

  Json stuck = as_candidate(2);
  for (auto& c : stuck["constraints"])
    if (c["placeholder"] == "range_end") c["relations"].push_back({{"kind", "less"}, {"left", "range_end"}, {"right", "range_start"}});
  AdmissionReport never = admit_template(parse_augmented_template(reply_around(stuck), db), db.pools, 5);
  CHECK_FALSE(never.admitted);
  CHECK(never.constraint_unsatisfiable == 5);
}

TEST_CASE("augment end to end with the echo mock") {
  const auto& db = builtin_template_db();
  MockProvider echo(MockMode::Echo, 0);
  LlmCall call;
  call.provider = &echo;
  AugmentOutcome out = augment(builtin(24), "mode of the numbers", db, call);
  REQUIRE(out.candidate);
  CHECK(out.admission.admitted);

  auto dir = scratch_dir("augment");
  std::string path = (dir / "user.json").string();
  append_user_template(path, *out.candidate);
  CHECK(error_of([&] { append_user_template(path, *out.candidate); }) == ErrorCode::DuplicateTypeId);
  TemplateDb merged = db;
  merge_template_db(merged, load_template_db(path, &db.pools));
  CHECK(merged.templates.size() == 26);
  CHECK(merged.next_type_id() == 27);
  fs::remove_all(dir);
}

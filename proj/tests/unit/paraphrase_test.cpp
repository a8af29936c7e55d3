#include <doctest.h>

#include <deque>

#include "core/json_scan.hpp"
#include "core/paraphrase.hpp"
#include "core/quality.hpp"
#include "support.hpp"

using namespace tell;

namespace {

// Replays canned replies or failures in order; counts calls.
class ScriptedProvider : public LlmProvider {
 public:
  struct Step {
    std::optional<FailureKind> failure;
    std::string reply;
  };
  explicit ScriptedProvider(std::deque<Step> steps) : steps_(std::move(steps)) {}
  std::string complete(const std::string& prompt, const Decoding& d) override {
    ++calls;
    last_prompt = prompt;
    last_decoding = d;
    if (steps_.empty()) return "nothing left";
    Step s = steps_.front();
    if (steps_.size() > 1) steps_.pop_front();
    if (s.failure) throw ProviderError(*s.failure, "scripted");
    return s.reply;
  }
  std::string model_id() const override { return "scripted"; }

  int calls = 0;
  std::string last_prompt;
  Decoding last_decoding;

 private:
  std::deque<Step> steps_;
};

RetryPolicy recording(std::vector<long>& slept) {
  RetryPolicy p;
  p.sleep = [&slept](std::chrono::milliseconds d) { slept.push_back(static_cast<long>(d.count())); };
  return p;
}

}  // namespace

TEST_CASE("json objects are found inside prose") {
  auto j = find_json_object("Sure! {\"a\": \"}{\", \"b\": 2} and then {\"c\": 3}");
  REQUIRE(j);
  CHECK((*j)["b"] == 2);
  std::size_t at = 0;
  auto k = find_json_object("x {broken} {\"c\": 3}", 0, &at);
  REQUIRE(k);
  CHECK((*k)["c"] == 3);
  CHECK(at == 11);
  CHECK_FALSE(find_json_object("no braces"));
}

TEST_CASE("retry backs off on retryable failures only") {
  std::vector<long> slept;
  ScriptedProvider p({{FailureKind::RateLimited, ""}, {FailureKind::Timeout, ""}, {FailureKind::ServerError, ""}, {std::nullopt, "ok"}});
  CHECK(complete_with_retry(p, "hi", {}, recording(slept)) == "ok");
  CHECK(p.calls == 4);
  CHECK(slept == std::vector<long>{500, 1000, 2000});

  slept.clear();
  ScriptedProvider always({{FailureKind::ServerError, ""}});
  RetryPolicy policy = recording(slept);
  policy.max_attempts = 7;
  CHECK(error_of([&] { complete_with_retry(always, "hi", {}, policy); }) == ErrorCode::ProviderFailure);
  CHECK(always.calls == 7);
  CHECK(slept == std::vector<long>{500, 1000, 2000, 4000, 8000, 16000});

  slept.clear();
  ScriptedProvider malformed({{FailureKind::MalformedReply, ""}});
  CHECK(error_of([&] { complete_with_retry(malformed, "hi", {}, recording(slept)); }) == ErrorCode::ProviderFailure);
  CHECK(malformed.calls == 1);
  CHECK(slept.empty());
}

TEST_CASE("reply cache survives a reload") {
  auto dir = scratch_dir("cache");
  std::string path = (dir / "replies.jsonl").string();
  std::vector<long> slept;
  ScriptedProvider p({{std::nullopt, "first"}});
  {
    ReplyCache cache(path);
    CHECK(cached_completion(p, &cache, "s1", "prompt", {}, recording(slept)) == "first");
    CHECK(cached_completion(p, &cache, "s1", "prompt", {}, recording(slept)) == "first");
    CHECK(p.calls == 1);
  }
  ReplyCache again(path);
  CHECK(again.size() == 1);
  CHECK(cached_completion(p, &again, "s1", "prompt", {}, recording(slept)) == "first");
  CHECK(p.calls == 1);
  Decoding hot;
  hot.temperature = 0.7;
  CHECK(ReplyCache::key(p, "prompt", hot) != ReplyCache::key(p, "prompt", {}));
  CHECK(ReplyCache::key(p, "prompt", {}, 1) != ReplyCache::key(p, "prompt", {}, 0));
  fs::remove_all(dir);
}

TEST_CASE("paraphrase prompt") {
  TemplateProblem p = instance(15, 9);
  std::string a = build_paraphrase_prompt(p, builtin_exemplars());
  CHECK(a == build_paraphrase_prompt(p, builtin_exemplars()));
  CHECK(a.find("keep the original problem, data, and solution logic unchanged") != std::string::npos);
  CHECK(a.find("Here are two examples:") != std::string::npos);
  CHECK(a.find(problem_to_prompt_json(p).dump(1)) != std::string::npos);
  std::vector<ParaphraseExemplar> one(builtin_exemplars().begin(), builtin_exemplars().begin() + 1);
  CHECK(error_of([&] { build_paraphrase_prompt(p, one); }) == ErrorCode::ValidationError);
}

TEST_CASE("reply parsing") {
  std::string raw =
      "Here you go:\n```json\n{\"question\": \"Q?\", \"table_for_pd\": {\"A\": [\"1\"]}, \"choices\": null, "
      "\"answer\": \"4.00\", \"solution\": \"1. a\\n2. b\\nThe answer is 4.00.\"}\n```\nLet me know if you need more.";
  ParsedReply r = parse_llm_output(raw);
  CHECK(r.question == "Q?");
  CHECK(r.answer == "4.00");
  REQUIRE(r.table_for_pd);
  CHECK(r.solution.find("The answer is 4.00.") != std::string::npos);

  ParsedReply steps = parse_llm_output("{\"question\": \"Q\", \"answer\": 3, \"solution\": [\"1. x\", \"The answer is 3.\"]}");
  CHECK(steps.answer == "3");
  CHECK(steps.solution == "1. x\nThe answer is 3.");
  CHECK_FALSE(steps.table_for_pd);

  CHECK(error_of([] { parse_llm_output("I rewrote it but forgot the JSON."); }) == ErrorCode::UnparseableReply);
}

TEST_CASE("missing table falls back to the source") {
  TemplateProblem src = instance(13, 2);
  ParsedReply reply = parse_llm_output("{\"question\": \"New?\", \"answer\": \"" + answer_text(src.answer) +
                                       "\", \"solution\": \"The answer is " + answer_text(src.answer) + ".\"}");
  ParaphraseResult r = apply_reply(src, reply, "raw");
  CHECK(r.table == src.table);
  CHECK(r.question == "New?");
  CHECK(r.answer == src.answer);
}

TEST_CASE("echo and background mocks") {
  MockProvider echo(MockMode::Echo, 1);
  LlmCall call;
  call.provider = &echo;
  for (int type : {1, 12, 15, 18, 20, 21, 24}) {
    TemplateProblem p = instance(type, 5);
    ParaphraseResult r = paraphrase_problem(p, call);
    CHECK(r.question == p.question);
    CHECK(r.solution == p.solution);
    CHECK(r.table == p.table);
    CHECK(r.answer == p.answer);
    CHECK(consistency_check(r).verdict == Verdict::Accepted);
  }

  MockProvider background(MockMode::Background, 1);
  call.provider = &background;
  TemplateProblem p = instance(15, 6);
  ParaphraseResult r = paraphrase_problem(p, call);
  CHECK(r.question.size() > p.question.size());
  CHECK(r.question.substr(r.question.size() - p.question.size()) == p.question);
  CHECK(r.answer == p.answer);
  CHECK(consistency_check(r).verdict == Verdict::Accepted);
  CHECK(paraphrase_problem(p, call).question == r.question);
}

TEST_CASE("corrupt-answer mock fails consistency") {
  MockProvider corrupt(MockMode::CorruptAnswer, 1);
  LlmCall call;
  call.provider = &corrupt;
  for (const auto& t : builtin_template_db().templates) {
    ParaphraseResult r = paraphrase_problem(instance(t.type_id, 8), call);
    CHECK(consistency_check(r).verdict == Verdict::RejectedConsistency);
  }
}

TEST_CASE("prose twice is unparseable") {
  ScriptedProvider prose({{std::nullopt, "Sorry, I cannot help with that."}});
  LlmCall call;
  call.provider = &prose;
  CHECK(error_of([&] { paraphrase_problem(instance(22, 1), call); }) == ErrorCode::UnparseableReply);
  CHECK(prose.calls == 2);
  CHECK(prose.last_decoding.temperature == doctest::Approx(kParaphraseTemperature));
}

TEST_CASE("consistency catches planted mutations") {
  TemplateProblem src = instance(8, 3);
  std::string a = answer_text(src.answer);
  std::string bumped = std::to_string(std::stoll(a) + 1);
  CHECK(consistency_problem(a, src.solution, src.table, src).empty());
  std::string bad_line = src.solution.substr(0, src.solution.rfind('\n') + 1) + "The answer is " + bumped + ".";
  CHECK_FALSE(consistency_problem(a, bad_line, src.table, src).empty());
  CHECK_FALSE(consistency_problem(bumped, src.solution, src.table, src).empty());
  TableSpec edited = src.table;
  edited.rows[0][1] = Cell::parse("9");
  CHECK_FALSE(consistency_problem(a, src.solution, edited, src).empty());

  TemplateProblem money = instance(15, 3);
  money.answer = DecVal{{275, 2}};
  money.solution = "1. a\n2. b\nThe answer is 2.75.";
  CHECK(consistency_problem("2.750", money.solution, money.table, money).empty());
}

TEST_CASE("step-split enrichment") {
  MockProvider split(MockMode::StepSplit, 0);
  LlmCall call;
  call.provider = &split;
  TemplateProblem p = instance(22, 2);
  std::string out = enrich_solution(p.question, p.table, "Add the numbers to get 30. Divide 30 by 5 to get 6.", call);
  CHECK(count_numbered_steps(out) == 2);
  CHECK(out.substr(out.rfind('\n') + 1) == "The answer is 6.");

  CHECK(error_of([&] { enrich_solution(p.question, p.table, "  ", call); }) == ErrorCode::ValidationError);

  ScriptedProvider flat({{std::nullopt, "1. Add them.\n2. Divide."}});
  call.provider = &flat;
  CHECK(error_of([&] { enrich_solution(p.question, p.table, "Add. Divide.", call); }) == ErrorCode::StructureError);
  CHECK(flat.calls == 2);
  CHECK(flat.last_decoding.temperature == 0.0);
}

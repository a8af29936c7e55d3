#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "../oracles/fixtures.hpp"
#include "core/pipeline.hpp"
#include "core/quality.hpp"
#include "support.hpp"

using namespace tell;

namespace {

using oracle::lines_of;
using oracle::plant;

TmwpSample with_question(TmwpSample s, std::string q, std::string id) {
  s.question = std::move(q);
  s.id = std::move(id);
  return s;
}

std::vector<TmwpSample> template_corpus(std::size_t n, std::uint64_t seed) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.count = n;
  return generate_corpus(cfg, builtin_template_db(), nullptr).samples;
}

}  // namespace

TEST_CASE("bleu tokenizer") {
  CHECK(bleu_tokens("The cat's $2.75!") ==
        std::vector<std::string>{"the", "cat", "'", "s", "$", "2", ".", "75", "!"});
  CHECK(bleu_tokens("  ").empty());
  CHECK(bleu_tokens("Café") == std::vector<std::string>{"caf\xc3\xa9"});
}

TEST_CASE("bleu matches the reference fixture") {
  Json fx = Json::parse(read_file(data_path("bleu_fixture.json")));
  REQUIRE(fx["pairs"].size() == 50);
  for (const auto& p : fx["pairs"]) {
    double got = bleu(p["candidate"].get<std::string>(), p["reference"].get<std::string>(), p["order"].get<int>());
    INFO(p["candidate"].get<std::string>() << " | " << p["reference"].get<std::string>());
    CHECK(std::abs(got - p["expected"].get<double>()) <= 1e-9);
  }
}

TEST_CASE("bleu edge cases") {
  CHECK(bleu("the cat sat on the mat", "the cat sat on the mat") == 1.0);
  CHECK(bleu("alpha beta gamma", "delta epsilon zeta") == 0.0);
  CHECK(error_of([] { bleu("", "x"); }) == ErrorCode::EmptyText);
  CHECK(error_of([] { bleu("x", " \n"); }) == ErrorCode::EmptyText);
  // No 4-grams in a three-token candidate, and no smoothing.
  CHECK(bleu("the cat sat", "the cat sat down") == 0.0);
  double v = bleu("the cat sat", "the cat sat down", 2);
  CHECK(v > 0.0);
  CHECK(v < 1.0);
}

TEST_CASE("pruned bleu agrees with the full score") {
  auto refs = lines_of(data_path("test_questions.txt"));
  auto corpus = template_corpus(300, 4);
  for (double threshold : {0.3, 0.6, 0.95}) {
    for (const auto& s : corpus) {
      BleuDoc c(s.question, 4);
      for (const auto& r : refs) {
        BleuDoc d(r, 4);
        double full = bleu(c, d);
        auto fast = bleu_above(c, d, threshold);
        if (full > threshold) {
          REQUIRE(fast);
          CHECK(*fast == full);
        }
      }
    }
  }
}

TEST_CASE("leakage filter basics") {
  auto corpus = template_corpus(20, 6);
  FilterConfig cfg;
  FilterReport none = leakage_filter(corpus, cfg);
  CHECK(none.count(Verdict::Accepted) == 20);

  cfg.reference_set = lines_of(data_path("test_questions.txt"));
  corpus.push_back(with_question(corpus[0], cfg.reference_set[3], "verbatim"));
  FilterReport r = leakage_filter(corpus, cfg);
  CHECK(r.verdicts.back().verdict == Verdict::RejectedLeakage);
  CHECK(*r.verdicts.back().max_bleu == 1.0);
  CHECK(*r.verdicts.back().matched_index == 3);

  FilterConfig bad;
  bad.delta = 0.0;
  CHECK(error_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("leakage filter rejects exactly the plants") {
  FilterConfig cfg;
  cfg.reference_set = lines_of(data_path("test_questions.txt"));
  auto corpus = template_corpus(100, 8);
  std::set<std::string> planted;
  for (int k = 0; k < 10; ++k) {
    std::string id = "plant-" + std::to_string(k);
    auto q = plant(cfg.reference_set[static_cast<std::size_t>(k) * 2]);
    CHECK(q != cfg.reference_set[static_cast<std::size_t>(k) * 2]);
    corpus.insert(corpus.begin() + k * 9, with_question(corpus[0], q, id));
    planted.insert(id);
  }
  FilterReport r = leakage_filter(corpus, cfg);
  std::set<std::string> rejected;
  for (const auto& v : r.verdicts)
    if (v.verdict == Verdict::RejectedLeakage) rejected.insert(v.id);
  CHECK(rejected == planted);

  std::vector<TmwpSample> reversed(corpus.rbegin(), corpus.rend());
  FilterReport back = leakage_filter(reversed, cfg);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    CHECK(back.verdicts[corpus.size() - 1 - i].verdict == r.verdicts[i].verdict);
}

TEST_CASE("dedup") {
  auto one = template_corpus(1, 2);
  std::vector<TmwpSample> same;
  for (int i = 0; i < 5; ++i) same.push_back(with_question(one[0], "What is the mode of the numbers?", std::to_string(i)));
  FilterReport r = dedup(same, 0.95);
  CHECK(r.verdicts[0].verdict == Verdict::Accepted);
  for (int i = 1; i < 5; ++i) CHECK(r.verdicts[static_cast<std::size_t>(i)].verdict == Verdict::RejectedDuplicate);

  std::vector<TmwpSample> distinct;
  for (int i = 0; i < 5; ++i) distinct.push_back(with_question(one[0], "question number " + std::to_string(i) + " here", std::to_string(i)));
  CHECK(dedup(distinct, 1.0).count(Verdict::Accepted) == 5);
}

TEST_CASE("dedup equals a brute-force all-pairs scan") {
  auto corpus = template_corpus(1000, 12);
  MockProvider bg(MockMode::Background, 3);
  LlmCall call;
  call.provider = &bg;
  auto para = paraphrase_corpus(corpus, builtin_template_db(), call, false, 0).samples;
  for (const auto* set : {&corpus, &para}) {
    FilterReport r = dedup(*set, 0.95);
    std::vector<BleuDoc> docs;
    for (const auto& s : *set) docs.emplace_back(s.question, 4);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < set->size(); ++i) {
      bool dup = false;
      for (auto k : kept)
        if (bleu(docs[i], docs[k]) > 0.95) {
          dup = true;
          break;
        }
      if (!dup) kept.push_back(i);
      CHECK((r.verdicts[i].verdict == Verdict::RejectedDuplicate) == dup);
    }
  }
}

TEST_CASE("reference questions load from several formats") {
  auto dir = scratch_dir("refs");
  write_file(dir / "plain.txt", "one question?\n\ntwo question?\n");
  CHECK(load_reference_questions((dir / "plain.txt").string()).size() == 2);
  write_file(dir / "problems.json", R"({"1": {"question": "a?"}, "2": {"question": "b?"}})");
  CHECK(load_reference_questions((dir / "problems.json").string()) == std::vector<std::string>{"a?", "b?"});
  write_file(dir / "c.jsonl", "{\"question\": \"x?\"}\n{\"question\": \"y?\"}\n");
  CHECK(load_reference_questions((dir / "c.jsonl").string()).size() == 2);
  fs::remove_all(dir);
}

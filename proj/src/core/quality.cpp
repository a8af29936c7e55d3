#include "core/quality.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/evaluation.hpp"
#include "core/generators.hpp"
#include "core/parallel.hpp"

namespace tell {

namespace {

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

double score(const std::vector<std::uint64_t>& matches, const std::vector<std::uint64_t>& totals, std::size_t c,
             std::size_t r) {
  double log_sum = 0.0;
  for (std::size_t n = 0; n < matches.size(); ++n) {
    if (totals[n] == 0 || matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
  }
  double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(matches.size()));
}

// Bounds below use a small slack so float rounding never prunes a pair that
// the full computation would score above the threshold.
constexpr double kSlack = 1e-9;

}  // namespace

std::vector<std::string> bleu_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (word_byte(c)) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
      continue;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
    if (!std::isspace(c)) out.emplace_back(1, ch);
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

BleuDoc::BleuDoc(std::string_view text, int order) : text_(text), order_(order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "BLEU order must be at least 1");
  auto toks = bleu_tokens(text);
  if (toks.empty()) throw Error(ErrorCode::EmptyText, "text has no tokens");
  length_ = toks.size();
  grams_.resize(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n) {
    auto& m = grams_[static_cast<std::size_t>(n - 1)];
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
      std::string key = toks[i];
      for (int k = 1; k < n; ++k) {
        key += '\x1f';
        key += toks[i + static_cast<std::size_t>(k)];
      }
      ++m[key];
    }
  }
}

namespace {

std::uint64_t clipped(const std::unordered_map<std::string, std::uint32_t>& cand,
                      const std::unordered_map<std::string, std::uint32_t>& ref) {
  std::uint64_t hits = 0;
  for (const auto& [g, k] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) hits += std::min(k, it->second);
  }
  return hits;
}

}  // namespace

double bleu(const BleuDoc& c, const BleuDoc& r) {
  if (c.order_ != r.order_) throw Error(ErrorCode::InvalidArgument, "BLEU documents built with different orders");
  std::vector<std::uint64_t> matches, totals;
  for (int n = 1; n <= c.order_; ++n) {
    auto idx = static_cast<std::size_t>(n - 1);
    matches.push_back(clipped(c.grams_[idx], r.grams_[idx]));
    totals.push_back(c.length_ >= static_cast<std::size_t>(n) ? c.length_ - static_cast<std::size_t>(n) + 1 : 0);
  }
  return score(matches, totals, c.length_, r.length_);
}

std::optional<double> bleu_above(const BleuDoc& c, const BleuDoc& r, double threshold) {
  const double cl = static_cast<double>(c.length_), rl = static_cast<double>(r.length_);
  // Brevity penalty alone caps the score.
  if (rl >= cl * (1.0 - std::log(threshold)) * (1.0 + kSlack)) return std::nullopt;
  // Unigram precision caps the geometric mean.
  double p1_floor = std::pow(threshold, c.order_) * (1.0 - kSlack);
  if (rl < cl * p1_floor) return std::nullopt;
  double p1 = static_cast<double>(clipped(c.grams_[0], r.grams_[0])) / cl;
  if (p1 <= p1_floor) return std::nullopt;
  return bleu(c, r);
}

double bleu(std::string_view candidate, std::string_view reference, int order) {
  return bleu(BleuDoc(candidate, order), BleuDoc(reference, order));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::RejectedConsistency: return "rejected_consistency";
    case Verdict::RejectedLeakage: return "rejected_leakage";
    case Verdict::RejectedDuplicate: return "rejected_duplicate";
  }
  return "accepted";
}

std::size_t FilterReport::count(Verdict v) const {
  return static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [&](const SampleVerdict& s) { return s.verdict == v; }));
}

double FilterReport::rate(Verdict v) const {
  return verdicts.empty() ? 0.0 : static_cast<double>(count(v)) / static_cast<double>(verdicts.size());
}

Json FilterReport::to_json(bool include_accepted) const {
  Json j;
  j["total"] = verdicts.size();
  Json counts = Json::object(), rates = Json::object();
  for (auto v : {Verdict::Accepted, Verdict::RejectedConsistency, Verdict::RejectedLeakage, Verdict::RejectedDuplicate}) {
    counts[to_string(v)] = count(v);
    rates[to_string(v)] = rate(v);
  }
  j["counts"] = counts;
  j["rates"] = rates;
  Json list = Json::array();
  for (const auto& s : verdicts) {
    if (s.verdict == Verdict::Accepted && !include_accepted) continue;
    Json e{{"id", s.id}, {"verdict", to_string(s.verdict)}};
    if (!s.reason.empty()) e["reason"] = s.reason;
    if (s.max_bleu) e["max_bleu"] = *s.max_bleu;
    if (s.matched_index) e["matched_index"] = *s.matched_index;
    if (!s.matched_text.empty()) e["matched_reference"] = s.matched_text;
    list.push_back(std::move(e));
  }
  j["verdicts"] = std::move(list);
  return j;
}

std::string FilterReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu samples: %zu accepted, %zu inconsistent, %zu leaked, %zu duplicate",
                verdicts.size(), count(Verdict::Accepted), count(Verdict::RejectedConsistency),
                count(Verdict::RejectedLeakage), count(Verdict::RejectedDuplicate));
  return buf;
}

void FilterConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must be in (0, 1]");
  if (bleu_order < 1) throw Error(ErrorCode::InvalidArgument, "bleu order must be at least 1");
  if (dedup_threshold && !(*dedup_threshold > 0.0 && *dedup_threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "dedup threshold must be in (0, 1]");
}

std::string consistency_problem(std::string_view stated_answer, std::string_view solution, const TableSpec& table,
                                const TemplateProblem& source) {
  if (!answers_equal(stated_answer, source.answer)) {
    return "stated answer '" + std::string(stated_answer) + "' differs from " + answer_text(source.answer);
  }
  auto terminal = extract_terminal_answer(solution);
  if (!terminal) return "solution has no terminal answer line";
  if (!answers_equal(*terminal, source.answer)) {
    return "solution concludes '" + *terminal + "' instead of " + answer_text(source.answer);
  }
  auto numbers = [](const TableSpec& t) {
    auto v = numeric_tokens(t);
    std::sort(v.begin(), v.end());
    return v;
  };
  if (numbers(table) != numbers(source.table)) return "numeric table cells changed";
  return {};
}

SampleVerdict consistency_check(const ParaphraseResult& r, const std::string& id) {
  SampleVerdict v;
  v.id = id;
  v.reason = consistency_problem(r.answer_raw, r.solution, r.table, r.source);
  if (!v.reason.empty()) v.verdict = Verdict::RejectedConsistency;
  return v;
}

FilterReport leakage_filter(std::span<const TmwpSample> samples, const FilterConfig& cfg) {
  cfg.validate();
  std::vector<BleuDoc> refs;
  refs.reserve(cfg.reference_set.size());
  for (const auto& q : cfg.reference_set) {
    auto toks = bleu_tokens(q);
    if (!toks.empty()) refs.emplace_back(q, cfg.bleu_order);
  }
  FilterReport report;
  report.verdicts.resize(samples.size());
  parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    auto& v = report.verdicts[i];
    v.id = samples[i].id;
    if (refs.empty()) return;
    BleuDoc doc(samples[i].question, cfg.bleu_order);
    for (std::size_t k = 0; k < refs.size(); ++k) {
      auto s = bleu_above(doc, refs[k], cfg.delta);
      if (s && *s > cfg.delta && (!v.max_bleu || *s > *v.max_bleu)) {
        v.max_bleu = *s;
        v.matched_index = k;
      }
    }
    if (v.max_bleu) {
      v.verdict = Verdict::RejectedLeakage;
      v.matched_text = refs[*v.matched_index].text();
    }
  });
  return report;
}

FilterReport dedup(std::span<const TmwpSample> samples, double threshold, int order) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "dedup threshold must be in (0, 1]");
  FilterReport report;
  std::vector<std::pair<std::size_t, BleuDoc>> kept;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SampleVerdict v;
    v.id = samples[i].id;
    BleuDoc doc(samples[i].question, order);
    for (const auto& [k, earlier] : kept) {
      auto s = bleu_above(doc, earlier, threshold);
      if (s && *s > threshold) {
        v.verdict = Verdict::RejectedDuplicate;
        v.max_bleu = *s;
        v.matched_index = k;
        v.matched_text = samples[k].id;
        break;
      }
    }
    if (v.verdict == Verdict::Accepted) kept.emplace_back(i, std::move(doc));
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

std::vector<std::string> load_reference_questions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::vector<std::string> out;
  // A single JSON document keyed by problem id.
  Json whole = Json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object()) {
    for (const auto& [k, v] : whole.items())
      if (v.is_object() && v.contains("question") && v["question"].is_string()) out.push_back(v["question"]);
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("question") && j["question"].is_string()) {
      out.push_back(j["question"]);
    } else {
      while (!line.empty() && line.back() == '\r') line.pop_back();
      out.push_back(line);
    }
  }
  return out;
}

}  // namespace tell

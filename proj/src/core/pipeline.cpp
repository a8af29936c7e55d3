#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "core/parallel.hpp"
#include "core/recheck.hpp"

namespace tell {

namespace {

struct Drawn {
  TmwpSample sample;
  SampleVerdict verdict;
};

std::map<int, double> effective_weights(const GenConfig& cfg, const TemplateDb& db) {
  std::map<int, double> w;
  if (cfg.types.empty()) return cfg.weights;
  for (int t : cfg.types) {
    if (!db.find(t)) throw Error(ErrorCode::InvalidArgument, "no template type " + std::to_string(t));
    auto it = cfg.weights.find(t);
    w[t] = it == cfg.weights.end() ? 1.0 : it->second;
  }
  return w;
}

Drawn draw(const GenConfig& cfg, const TemplateDb& db, const std::map<int, double>* weights, const LlmCall* call,
           std::size_t index) {
  Rng rng = Rng::stream(cfg.seed, index);
  const ProblemTemplate& t = select_template(db, rng, weights);
  Binding b = sample_bindings(t, db.pools, rng);
  TemplateProblem p = instantiate(t, b);
  int grade = static_cast<int>(rng.uniform_int(t.grade_lo, t.grade_hi));
  Drawn d;
  d.sample = to_sample(p, sample_id(cfg.seed, index), grade);
  d.verdict.id = d.sample.id;
  if (auto why = audit_generated(t, d.sample); !why.empty()) {
    throw Error(ErrorCode::Internal, d.sample.id + " (type " + std::to_string(t.type_id) + ") failed its re-check: " + why);
  }
  if (cfg.paraphrase != ParaphraseMode::Off && call) {
    try {
      ParaphraseResult r = paraphrase_problem(p, *call, d.sample.id);
      d.verdict = consistency_check(r, d.sample.id);
      d.sample = paraphrased_sample(r, d.sample);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableReply) throw;
      d.verdict.verdict = Verdict::RejectedConsistency;
      d.verdict.reason = e.what();
    }
  }
  return d;
}

}  // namespace

std::string sample_id(std::uint64_t seed, std::size_t index) {
  return "gen-" + std::to_string(seed) + "-" + std::to_string(index);
}

Json GenResult::summary() const {
  Json types = Json::object();
  for (const auto& [t, n] : per_type) types[std::to_string(t)] = n;
  Json j = report.to_json();
  j.erase("verdicts");
  return Json{{"emitted", samples.size()}, {"indices_used", indices_used}, {"per_type", types}, {"filters", j}};
}

GenResult generate_corpus(const GenConfig& cfg, const TemplateDb& db, const LlmCall* call) {
  if (cfg.count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
  cfg.filter.validate();
  if (cfg.paraphrase != ParaphraseMode::Off && (!call || !call->provider))
    throw Error(ErrorCode::InvalidArgument, "paraphrase needs a provider");
  auto weight_map = effective_weights(cfg, db);
  const std::map<int, double>* weights = weight_map.empty() ? nullptr : &weight_map;

  std::vector<BleuDoc> kept_docs;
  GenResult out;
  std::size_t next = 0;
  while (out.samples.size() < cfg.count) {
    std::size_t want = cfg.count - out.samples.size();
    std::size_t batch = want + want / 10 + 16;
    std::vector<Drawn> drawn(batch);
    parallel_for(batch, cfg.jobs, [&](std::size_t k) { drawn[k] = draw(cfg, db, weights, call, next + k); });

    std::vector<TmwpSample> candidates;
    for (const auto& d : drawn) candidates.push_back(d.sample);
    FilterReport leak = leakage_filter(candidates, cfg.filter);

    for (std::size_t k = 0; k < batch && out.samples.size() < cfg.count; ++k) {
      SampleVerdict v = drawn[k].verdict;
      if (v.verdict == Verdict::Accepted && leak.verdicts[k].verdict != Verdict::Accepted) v = leak.verdicts[k];
      if (v.verdict == Verdict::Accepted && cfg.filter.dedup_threshold) {
        BleuDoc doc(drawn[k].sample.question, cfg.filter.bleu_order);
        for (std::size_t e = 0; e < kept_docs.size(); ++e) {
          auto s = bleu_above(doc, kept_docs[e], *cfg.filter.dedup_threshold);
          if (s && *s > *cfg.filter.dedup_threshold) {
            v.verdict = Verdict::RejectedDuplicate;
            v.max_bleu = *s;
            v.matched_index = e;
            v.matched_text = out.samples[e].id;
            break;
          }
        }
        if (v.verdict == Verdict::Accepted) kept_docs.push_back(std::move(doc));
      }
      if (v.verdict == Verdict::Accepted) {
        ++out.per_type[*drawn[k].sample.template_type];
        out.samples.push_back(std::move(drawn[k].sample));
      }
      out.report.verdicts.push_back(std::move(v));
      ++out.indices_used;
    }
    next += batch;
    if (out.indices_used > 20 * cfg.count + 1000 && out.samples.size() * 20 < out.indices_used) {
      throw Error(ErrorCode::ValidationError, "filters reject almost every sample; stopping after " +
                                                  std::to_string(out.indices_used) + " draws");
    }
  }
  if (cfg.fraction) {
    out.samples = proportional_subset(out.samples, *cfg.fraction, cfg.seed);
    out.per_type.clear();
    for (const auto& s : out.samples) ++out.per_type[*s.template_type];
  }
  return out;
}

TemplateProblem source_problem(const TmwpSample& s, const TemplateDb& db) {
  if (!s.template_type || !s.binding) {
    throw Error(ErrorCode::MissingField, "sample " + s.id + " has no template type or binding", "template_binding");
  }
  const ProblemTemplate* t = db.find(*s.template_type);
  if (!t) throw Error(ErrorCode::InvalidArgument, "sample " + s.id + " names unknown type " + std::to_string(*s.template_type));
  return instantiate(*t, *s.binding);
}

StageResult paraphrase_corpus(std::span<const TmwpSample> in, const TemplateDb& db, const LlmCall& call, bool enrich,
                              unsigned jobs) {
  std::vector<TmwpSample> out(in.size());
  std::vector<SampleVerdict> verdicts(in.size());
  parallel_for(in.size(), jobs, [&](std::size_t i) {
    const TmwpSample& s = in[i];
    verdicts[i].id = s.id;
    try {
      if (enrich) {
        out[i] = s;
        out[i].solution = enrich_solution(s.question, s.table, s.solution, call, s.id);
        out[i].original_solution = s.solution;
        return;
      }
      ParaphraseResult r = paraphrase_problem(source_problem(s, db), call, s.id);
      verdicts[i] = consistency_check(r, s.id);
      out[i] = paraphrased_sample(r, s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableReply && e.code() != ErrorCode::StructureError) throw;
      verdicts[i].verdict = Verdict::RejectedConsistency;
      verdicts[i].reason = e.what();
    }
  });
  StageResult r;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (verdicts[i].verdict == Verdict::Accepted) r.samples.push_back(std::move(out[i]));
  r.report.verdicts = std::move(verdicts);
  return r;
}

StageResult filter_corpus(std::span<const TmwpSample> in, const TemplateDb& db, const FilterConfig& cfg) {
  cfg.validate();
  std::vector<SampleVerdict> verdicts(in.size());
  parallel_for(in.size(), cfg.jobs, [&](std::size_t i) {
    const TmwpSample& s = in[i];
    verdicts[i].id = s.id;
    if (!s.binding || !s.template_type) return;
    auto why = consistency_problem(answer_text(s.answer), s.solution, s.table, source_problem(s, db));
    if (!why.empty()) {
      verdicts[i].verdict = Verdict::RejectedConsistency;
      verdicts[i].reason = why;
    }
  });
  FilterReport leak = leakage_filter(in, cfg);
  for (std::size_t i = 0; i < in.size(); ++i)
    if (verdicts[i].verdict == Verdict::Accepted) verdicts[i] = leak.verdicts[i];

  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (verdicts[i].verdict == Verdict::Accepted) survivors.push_back(i);
  if (cfg.dedup_threshold) {
    std::vector<TmwpSample> pool;
    for (auto i : survivors) pool.push_back(in[i]);
    FilterReport dup = dedup(pool, *cfg.dedup_threshold, cfg.bleu_order);
    for (std::size_t k = 0; k < survivors.size(); ++k) {
      if (dup.verdicts[k].verdict == Verdict::Accepted) continue;
      auto& v = verdicts[survivors[k]] = dup.verdicts[k];
      v.matched_index = survivors[*v.matched_index];
    }
  }
  StageResult r;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (verdicts[i].verdict == Verdict::Accepted) r.samples.push_back(in[i]);
  r.report.verdicts = std::move(verdicts);
  return r;
}

std::vector<TmwpSample> proportional_subset(std::span<const TmwpSample> in, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fraction must be in (0, 1]");
  std::map<int, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < in.size(); ++i) by_type[in[i].template_type.value_or(0)].push_back(i);
  Rng rng(splitmix64(seed ^ 0x5ca1ab1eULL));
  std::vector<std::size_t> keep;
  for (auto& [type, idx] : by_type) {
    // Partial Fisher-Yates with the hand-rolled draws, then the first k.
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<TmwpSample> out;
  for (auto i : keep) out.push_back(in[i]);
  return out;
}

}  // namespace tell

#include "tell/tell.h"

#include <array>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "core/augmentation.hpp"
#include "core/evaluation.hpp"
#include "core/pipeline.hpp"

using namespace tell;

struct tell_context {
  TemplateDb db = builtin_template_db();
  std::string last_error;
};

struct tell_corpus {
  std::vector<TmwpSample> samples;
};

namespace {

int status_of(ErrorCode c) { return static_cast<int>(c) + 1; }

template <class Fn>
int guarded(tell_context* ctx, Fn&& fn) {
  if (!ctx) return TELL_E_INVALID_ARGUMENT;
  ctx->last_error.clear();
  try {
    fn();
    return TELL_OK;
  } catch (const Error& e) {
    ctx->last_error = e.what();
    return status_of(e.code());
  } catch (const Json::exception& e) {
    ctx->last_error = std::string("ParseError: ") + e.what();
    return TELL_E_PARSE_ERROR;
  } catch (const std::filesystem::filesystem_error& e) {
    ctx->last_error = std::string("IoError: ") + e.what();
    return TELL_E_IO_ERROR;
  } catch (const std::exception& e) {
    ctx->last_error = std::string("Internal: ") + e.what();
    return TELL_E_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

std::string need_path(const char* p, const char* what) {
  if (!p || !*p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " path is required");
  return p;
}

Json parse_options(const char* options_json) {
  if (!options_json || !*options_json) return Json::object();
  Json o = Json::parse(options_json, nullptr, false);
  if (o.is_discarded() || !o.is_object()) throw Error(ErrorCode::ParseError, "options must be a JSON object");
  return o;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::vector<std::string> expand_inputs(const char* const* paths, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string p = need_path(paths[i], "input");
    if (std::filesystem::is_directory(p)) {
      bool any = false;
      for (const char* name : {"problems_train.json", "problems_dev.json", "problems_test.json"}) {
        auto f = std::filesystem::path(p) / name;
        if (std::filesystem::exists(f)) {
          out.push_back(f.string());
          any = true;
        }
      }
      if (!any) throw Error(ErrorCode::IoError, "directory '" + p + "' holds no problems_{train,dev,test}.json");
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<TmwpSample> read_inputs(const char* const* paths, std::size_t n) {
  std::vector<TmwpSample> all;
  for (const auto& p : expand_inputs(paths, n)) {
    auto part = ingest_tabmwp(p);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

struct ProviderSetup {
  ParaphraseMode mode = ParaphraseMode::Off;
  std::unique_ptr<LlmProvider> provider;
  std::unique_ptr<ReplyCache> cache;
  LlmCall call;
};

ProviderSetup make_provider(const Json& o, const std::string& mode_text) {
  ProviderSetup s;
  std::uint64_t seed = o.value("seed", std::uint64_t{0});
  if (mode_text == "off") return s;
  if (mode_text == "live") {
    Json p = o.value("provider", Json::object());
    HttpProviderConfig cfg;
    cfg.endpoint = p.value("endpoint", std::string("https://api.openai.com/v1"));
    cfg.api_key = p.value("api_key", std::string());
    cfg.model = p.value("model", std::string());
    cfg.timeout_seconds = p.value("timeout", 60);
    if (cfg.api_key.empty()) throw Error(ErrorCode::InvalidArgument, "live mode needs provider credentials (api_key)");
    s.provider = make_http_provider(cfg);
    s.mode = ParaphraseMode::Live;
  } else if (mode_text == "mock" || mode_text.rfind("mock:", 0) == 0) {
    std::string name = mode_text == "mock" ? "echo" : mode_text.substr(5);
    auto m = parse_mock_mode(name);
    if (!m) throw Error(ErrorCode::InvalidArgument, "unknown mock mode '" + name + "'");
    s.provider = std::make_unique<MockProvider>(*m, seed);
    s.mode = ParaphraseMode::Mock;
  } else {
    throw Error(ErrorCode::InvalidArgument, "paraphrase mode must be off, mock:<mode> or live, not '" + mode_text + "'");
  }
  if (o.contains("cache") && o["cache"].is_string()) s.cache = std::make_unique<ReplyCache>(o["cache"].get<std::string>());
  s.call.provider = s.provider.get();
  s.call.cache = s.cache.get();
  s.call.policy.max_attempts = o.value("retries", 5);
  if (o.contains("seed")) s.call.seed = seed;
  if (o.contains("exemplars") && o["exemplars"].is_string()) {
    std::ifstream in(o["exemplars"].get<std::string>());
    if (!in) throw Error(ErrorCode::IoError, "cannot open exemplars '" + o["exemplars"].get<std::string>() + "'");
    s.call.exemplars = parse_exemplars(Json::parse(in));
  }
  return s;
}

FilterConfig filter_config(const Json& o) {
  FilterConfig f;
  f.delta = o.value("delta", 0.95);
  f.bleu_order = o.value("bleu_order", 4);
  if (o.contains("dedup") && o["dedup"].is_number()) f.dedup_threshold = o["dedup"].get<double>();
  if (o.contains("reference") && o["reference"].is_string())
    f.reference_set = load_reference_questions(o["reference"].get<std::string>());
  f.jobs = o.value("jobs", 0u);
  f.validate();
  return f;
}

void write_report(const char* report_path, const Json& summary, const FilterReport& report) {
  if (!report_path || !*report_path) return;
  Json j = summary;
  j["report"] = report.to_json();
  write_text(report_path, j.dump(1) + "\n");
}

}  // namespace

extern "C" {

const char* tell_version(void) { return "0.1.0"; }

const char* tell_status_name(int status) {
  if (status == TELL_OK) return "OK";
  if (status < 1 || status > TELL_E_INTERNAL) return "Unknown";
  static const auto names = [] {
    std::array<std::string, TELL_E_INTERNAL + 1> a;
    for (int i = 1; i <= TELL_E_INTERNAL; ++i) a[i] = std::string(error_code_name(static_cast<ErrorCode>(i - 1)));
    return a;
  }();
  return names[static_cast<std::size_t>(status)].c_str();
}

tell_context* tell_context_new(void) {
  try {
    return new tell_context();
  } catch (...) {
    return nullptr;
  }
}

void tell_context_free(tell_context* ctx) { delete ctx; }

const char* tell_last_error(const tell_context* ctx) { return ctx ? ctx->last_error.c_str() : "no context"; }

void tell_string_free(char* s) { std::free(s); }

int tell_load_templates(tell_context* ctx, const char* path) {
  return guarded(ctx, [&] {
    TemplateDb extra = load_template_db(need_path(path, "template"), &ctx->db.pools);
    merge_template_db(ctx->db, extra);
  });
}

int tell_template_count(const tell_context* ctx, size_t* out) {
  if (!ctx || !out) return TELL_E_INVALID_ARGUMENT;
  *out = ctx->db.templates.size();
  return TELL_OK;
}

int tell_export_templates(tell_context* ctx, const char* out_path) {
  return guarded(ctx, [&] { write_text(need_path(out_path, "output"), db_to_json(ctx->db).dump(1) + "\n"); });
}

int tell_templates_json(tell_context* ctx, char** out_json) {
  return guarded(ctx, [&] { give(out_json, db_to_json(ctx->db).dump(1)); });
}

int tell_ingest(tell_context* ctx, const char* const* paths, size_t n_paths, const char* out_path, char** summary_json) {
  return guarded(ctx, [&] {
    auto samples = read_inputs(paths, n_paths);
    for (const auto& s : samples) validate_sample(s);
    write_corpus(need_path(out_path, "output"), samples);
    give(summary_json, Json{{"samples", samples.size()}, {"stats", stats_to_json(compute_stats(samples))}}.dump());
  });
}

int tell_stats(tell_context* ctx, const char* const* paths, size_t n_paths, char** report_text, char** report_json) {
  return guarded(ctx, [&] {
    auto stats = compute_stats(read_inputs(paths, n_paths));
    give(report_text, render_stats(stats));
    give(report_json, stats_to_json(stats).dump(1));
  });
}

int tell_generate(tell_context* ctx, const char* options_json, const char* out_path, const char* report_path,
                  char** summary_json) {
  return guarded(ctx, [&] {
    Json o = parse_options(options_json);
    GenConfig cfg;
    cfg.seed = o.value("seed", std::uint64_t{1});
    auto count = o.value("count", std::int64_t{1000});
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
    cfg.count = static_cast<std::size_t>(count);
    if (o.contains("types")) cfg.types = o["types"].get<std::vector<int>>();
    if (o.contains("weights")) {
      for (const auto& [k, v] : o["weights"].items()) cfg.weights[std::stoi(k)] = v.get<double>();
    }
    if (o.contains("fraction") && o["fraction"].is_number()) cfg.fraction = o["fraction"].get<double>();
    cfg.jobs = o.value("jobs", 0u);
    cfg.filter = filter_config(o);
    ProviderSetup p = make_provider(o, o.value("paraphrase", std::string("off")));
    cfg.paraphrase = p.mode;
    GenResult r = generate_corpus(cfg, ctx->db, p.provider ? &p.call : nullptr);
    write_corpus(need_path(out_path, "output"), r.samples);
    Json summary = r.summary();
    summary["seed"] = cfg.seed;
    write_report(report_path, summary, r.report);
    give(summary_json, summary.dump());
  });
}

int tell_paraphrase(tell_context* ctx, const char* options_json, const char* in_path, const char* out_path,
                    const char* report_path, char** summary_json) {
  return guarded(ctx, [&] {
    Json o = parse_options(options_json);
    ProviderSetup p = make_provider(o, o.value("paraphrase", std::string("mock:echo")));
    if (!p.provider) throw Error(ErrorCode::InvalidArgument, "paraphrase needs a provider (mock:<mode> or live)");
    auto in = read_corpus(need_path(in_path, "input"));
    StageResult r = paraphrase_corpus(in, ctx->db, p.call, o.value("enrich", false), o.value("jobs", 4u));
    write_corpus(need_path(out_path, "output"), r.samples);
    Json summary{{"input", in.size()}, {"emitted", r.samples.size()}};
    write_report(report_path, summary, r.report);
    give(summary_json, summary.dump());
  });
}

int tell_filter(tell_context* ctx, const char* options_json, const char* in_path, const char* out_path,
                const char* report_path, char** summary_json) {
  return guarded(ctx, [&] {
    Json o = parse_options(options_json);
    auto in = read_corpus(need_path(in_path, "input"));
    StageResult r = filter_corpus(in, ctx->db, filter_config(o));
    write_corpus(need_path(out_path, "output"), r.samples);
    Json summary{{"input", in.size()}, {"emitted", r.samples.size()}, {"summary", r.report.summary()}};
    write_report(report_path, summary, r.report);
    give(summary_json, summary.dump());
  });
}

int tell_evaluate(tell_context* ctx, const char* predictions_path, const char* corpus_path, char** report_json,
                  char** report_text) {
  return guarded(ctx, [&] {
    auto preds = read_predictions(need_path(predictions_path, "predictions"));
    auto corpus = read_corpus(need_path(corpus_path, "corpus"));
    EvalReport r = evaluate(preds, corpus);
    give(report_json, report_to_json(r).dump(1));
    give(report_text, render_report(r));
  });
}

int tell_augment(tell_context* ctx, const char* options_json, char** outcome_json) {
  return guarded(ctx, [&] {
    Json o = parse_options(options_json);
    int demo_type = o.value("demo_type", 22);
    const ProblemTemplate* demo = ctx->db.find(demo_type);
    if (!demo) throw Error(ErrorCode::InvalidArgument, "no template type " + std::to_string(demo_type));
    ProviderSetup p = make_provider(o, o.value("provider_mode", std::string("mock:echo")));
    if (!p.provider) throw Error(ErrorCode::InvalidArgument, "augment needs a provider (mock:<mode> or live)");
    AugmentOutcome a = augment(*demo, o.value("target", std::string()), ctx->db, p.call, o.value("trials", kAdmissionTrials),
                               o.value("seed", std::uint64_t{0}));
    Json j{{"prompt", a.prompt}, {"raw_reply", a.raw_reply}, {"parse_error", a.parse_error}};
    j["candidate"] = a.candidate ? template_to_json(*a.candidate) : Json();
    j["admission"] = a.admission.to_json();
    j["appended_to"] = Json();
    if (a.candidate && a.admission.admitted && o.contains("user_db") && o["user_db"].is_string()) {
      append_user_template(o["user_db"].get<std::string>(), *a.candidate);
      j["appended_to"] = o["user_db"];
    }
    give(outcome_json, j.dump(1));
  });
}

int tell_bleu(tell_context* ctx, const char* candidate, const char* reference, int order, double* out) {
  return guarded(ctx, [&] {
    if (!candidate || !reference || !out) throw Error(ErrorCode::InvalidArgument, "null argument");
    *out = bleu(candidate, reference, order);
  });
}

int tell_exact_match(tell_context* ctx, const char* raw, const char* sample_json, int* out) {
  return guarded(ctx, [&] {
    if (!raw || !sample_json || !out) throw Error(ErrorCode::InvalidArgument, "null argument");
    TmwpSample gold = parse_sample(Json::parse(sample_json));
    *out = exact_match(Prediction{gold.id, raw}, gold) ? 1 : 0;
  });
}

int tell_corpus_read(tell_context* ctx, const char* path, tell_corpus** out) {
  return guarded(ctx, [&] {
    if (!out) throw Error(ErrorCode::InvalidArgument, "null output");
    auto c = std::make_unique<tell_corpus>();
    c->samples = read_corpus(need_path(path, "corpus"));
    *out = c.release();
  });
}

size_t tell_corpus_size(const tell_corpus* corpus) { return corpus ? corpus->samples.size() : 0; }

int tell_corpus_sample_json(tell_context* ctx, const tell_corpus* corpus, size_t index, char** out_json) {
  return guarded(ctx, [&] {
    if (!corpus || index >= corpus->samples.size()) throw Error(ErrorCode::InvalidArgument, "sample index out of range");
    give(out_json, serialize_sample(corpus->samples[index]).dump());
  });
}

void tell_corpus_free(tell_corpus* corpus) { delete corpus; }

}  // extern "C"

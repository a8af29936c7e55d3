#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tell/tell.h"

namespace {

using Json = nlohmann::ordered_json;

struct Context {
  tell_context* ctx = tell_context_new();
  ~Context() { tell_context_free(ctx); }
};

// Owns a string handed back by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { tell_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int fail(const Context& c, int status) {
  std::cerr << "tell: " << tell_last_error(c.ctx) << "\n";
  return status == 0 ? 1 : (status > 100 ? 100 : status);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep))
    if (!part.empty()) out.push_back(part);
  return out;
}

// Settings layer: config file, then flags, then TELL_* environment.
struct Settings {
  std::string config_path;
  std::vector<std::string> template_files;

  std::optional<std::uint64_t> seed;
  std::optional<long long> count;
  std::string types, weights;
  std::optional<double> fraction, delta, dedup;
  std::optional<unsigned> jobs;
  std::optional<int> retries, trials, demo_type, timeout;
  std::string paraphrase, reference, cache, endpoint, model, exemplars, target, user_db;
  bool enrich = false;

  Json build() const {
    Json o = Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
      o = Json::parse(in, nullptr, false);
      if (o.is_discarded() || !o.is_object()) throw std::runtime_error("config '" + config_path + "' is not a JSON object");
    }
    if (seed) o["seed"] = *seed;
    if (count) o["count"] = *count;
    if (!types.empty()) {
      Json t = Json::array();
      for (const auto& x : split(types, ',')) {
        if (x.empty() || x.find_first_not_of("0123456789") != std::string::npos)
          throw std::runtime_error("--types takes comma-separated type ids, not '" + types + "'");
        t.push_back(std::stoi(x));
      }
      o["types"] = t;
    }
    if (!weights.empty()) {
      Json w = Json::object();
      for (const auto& x : split(weights, ',')) {
        auto eq = x.find('=');
        if (eq == std::string::npos) throw std::runtime_error("weights look like 22=2,23=1");
        w[x.substr(0, eq)] = std::stod(x.substr(eq + 1));
      }
      o["weights"] = w;
    }
    if (fraction) o["fraction"] = *fraction;
    if (delta) o["delta"] = *delta;
    if (dedup) o["dedup"] = *dedup;
    if (jobs) o["jobs"] = *jobs;
    if (retries) o["retries"] = *retries;
    if (trials) o["trials"] = *trials;
    if (demo_type) o["demo_type"] = *demo_type;
    if (!paraphrase.empty()) o["paraphrase"] = paraphrase;
    if (!reference.empty()) o["reference"] = reference;
    if (!cache.empty()) o["cache"] = cache;
    if (!exemplars.empty()) o["exemplars"] = exemplars;
    if (!target.empty()) o["target"] = target;
    if (!user_db.empty()) o["user_db"] = user_db;
    if (enrich) o["enrich"] = true;
    Json provider = o.value("provider", Json::object());
    if (!endpoint.empty()) provider["endpoint"] = endpoint;
    if (!model.empty()) provider["model"] = model;
    if (timeout) provider["timeout"] = *timeout;

    auto env = [](const char* name) -> std::optional<std::string> {
      const char* v = std::getenv(name);
      if (!v || !*v) return std::nullopt;
      return std::string(v);
    };
    if (auto v = env("TELL_SEED")) o["seed"] = std::stoull(*v);
    if (auto v = env("TELL_COUNT")) o["count"] = std::stoll(*v);
    if (auto v = env("TELL_JOBS")) o["jobs"] = static_cast<unsigned>(std::stoul(*v));
    if (auto v = env("TELL_DELTA")) o["delta"] = std::stod(*v);
    if (auto v = env("TELL_DEDUP")) o["dedup"] = std::stod(*v);
    if (auto v = env("TELL_FRACTION")) o["fraction"] = std::stod(*v);
    if (auto v = env("TELL_PARAPHRASE")) o["paraphrase"] = *v;
    if (auto v = env("TELL_REFERENCE")) o["reference"] = *v;
    if (auto v = env("TELL_CACHE")) o["cache"] = *v;
    if (auto v = env("TELL_RETRIES")) o["retries"] = std::stoi(*v);
    if (auto v = env("TELL_ENDPOINT")) provider["endpoint"] = *v;
    if (auto v = env("TELL_MODEL")) provider["model"] = *v;
    if (auto v = env("TELL_TIMEOUT")) provider["timeout"] = std::stoi(*v);
    if (auto v = env("TELL_API_KEY")) provider["api_key"] = *v;
    if (!provider.empty()) o["provider"] = provider;
    return o;
  }

  std::vector<std::string> templates() const {
    std::vector<std::string> all = template_files;
    if (const char* v = std::getenv("TELL_TEMPLATES"))
      for (const auto& p : split(v, ':')) all.push_back(p);
    return all;
  }
};

std::vector<const char*> c_strs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

void print_summary(const Owned& summary) {
  Json j = Json::parse(summary.str(), nullptr, false);
  std::cout << (j.is_discarded() ? summary.str() : j.dump(1)) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular math word problem generation and evaluation"};
  app.set_version_flag("--version", std::string(tell_version()));
  app.require_subcommand(1);
  Settings s;
  app.add_option("--config", s.config_path, "JSON file of default options")->check(CLI::ExistingFile);
  app.add_option("--templates", s.template_files, "Extra template database file (repeatable)");

  auto add_filter_flags = [&](CLI::App* c) {
    c->add_option("--delta", s.delta, "Leakage BLEU threshold in (0, 1]");
    c->add_option("--dedup", s.dedup, "Drop questions scoring above this BLEU against earlier ones");
    c->add_option("--reference", s.reference, "Test questions for the leakage filter");
  };
  auto add_provider_flags = [&](CLI::App* c) {
    c->add_option("--cache", s.cache, "Reply cache file");
    c->add_option("--retries", s.retries, "Provider attempts per call");
    c->add_option("--endpoint", s.endpoint, "Chat completions base URL");
    c->add_option("--model", s.model, "Model name");
    c->add_option("--timeout", s.timeout, "Request timeout in seconds");
  };

  std::vector<std::string> inputs;
  std::string out_path, in_path, report_path, preds_path, corpus_path;
  bool as_json = false;

  auto* ingest = app.add_subcommand("ingest", "Convert TabMWP problem files to a corpus");
  ingest->add_option("inputs", inputs, "Problem files or a directory")->required();
  ingest->add_option("-o,--out", out_path, "Corpus output")->required();

  auto* gen = app.add_subcommand("gen", "Generate problems from the template database");
  gen->add_option("-o,--out", out_path, "Corpus output")->required();
  gen->add_option("--report", report_path, "Filter report output");
  gen->add_option("--count", s.count, "Samples to emit");
  gen->add_option("--seed", s.seed, "Master seed");
  gen->add_option("--types", s.types, "Comma-separated type ids");
  gen->add_option("--weights", s.weights, "Type weights, e.g. 22=2,23=1");
  gen->add_option("--fraction", s.fraction, "Emit a seeded per-type subset of this size");
  gen->add_option("--jobs", s.jobs, "Worker threads");
  gen->add_option("--paraphrase", s.paraphrase, "off, mock:<echo|background|corrupt-answer|step-split> or live");
  gen->add_option("--exemplars", s.exemplars, "Paraphrase exemplar file");
  add_filter_flags(gen);
  add_provider_flags(gen);

  auto* para = app.add_subcommand("paraphrase", "Paraphrase generated problems or enrich solutions");
  para->add_option("-i,--in", in_path, "Corpus input")->required();
  para->add_option("-o,--out", out_path, "Corpus output")->required();
  para->add_option("--report", report_path, "Report output");
  para->add_option("--mode", s.paraphrase, "mock:<mode> or live");
  para->add_flag("--enrich", s.enrich, "Rewrite solutions into numbered steps");
  para->add_option("--jobs", s.jobs, "Concurrent provider calls");
  para->add_option("--seed", s.seed, "Decoding seed");
  para->add_option("--exemplars", s.exemplars, "Paraphrase exemplar file");
  add_provider_flags(para);

  auto* filter = app.add_subcommand("filter", "Consistency, leakage and duplicate filters");
  filter->add_option("-i,--in", in_path, "Corpus input")->required();
  filter->add_option("-o,--out", out_path, "Accepted corpus output")->required();
  filter->add_option("--report", report_path, "Report output");
  filter->add_option("--jobs", s.jobs, "Worker threads");
  add_filter_flags(filter);

  auto* stats = app.add_subcommand("stats", "Corpus statistics by split");
  stats->add_option("inputs", inputs, "Corpus or problem files, or a directory")->required();
  stats->add_flag("--json", as_json, "Print JSON");

  auto* eval = app.add_subcommand("eval", "Exact-match accuracy of predictions");
  eval->add_option("--predictions", preds_path, "JSONL of {id, prediction}")->required();
  eval->add_option("--corpus", corpus_path, "Gold corpus")->required();
  eval->add_option("--report", report_path, "JSON report output");
  eval->add_flag("--json", as_json, "Print JSON");

  auto* exp = app.add_subcommand("export-templates", "Write the template database");
  exp->add_option("-o,--out", out_path, "Output file")->required();

  auto* aug = app.add_subcommand("augment", "Ask a provider for a new template type and vet it");
  aug->add_option("--demo", s.demo_type, "Demonstration type id");
  aug->add_option("--target", s.target, "Description of the new task")->required();
  aug->add_option("--mode", s.paraphrase, "mock:<mode> or live");
  aug->add_option("--trials", s.trials, "Admission trials");
  aug->add_option("--seed", s.seed, "Trial seed");
  aug->add_option("--user-db", s.user_db, "Append the admitted template to this file");
  aug->add_option("--out", out_path, "Outcome JSON output");
  add_provider_flags(aug);

  CLI11_PARSE(app, argc, argv);

  Context c;
  if (!c.ctx) {
    std::cerr << "tell: out of memory\n";
    return 1;
  }
  Json opts;
  try {
    opts = s.build();
  } catch (const std::exception& e) {
    std::cerr << "tell: " << e.what() << "\n";
    return 2;
  }
  for (const auto& path : s.templates()) {
    if (int st = tell_load_templates(c.ctx, path.c_str())) return fail(c, st);
  }
  auto report = [&]() { return report_path.empty() ? nullptr : report_path.c_str(); };

  if (*ingest) {
    auto paths = c_strs(inputs);
    Owned summary;
    if (int st = tell_ingest(c.ctx, paths.data(), paths.size(), out_path.c_str(), &summary.p)) return fail(c, st);
    print_summary(summary);
  } else if (*gen) {
    Owned summary;
    if (int st = tell_generate(c.ctx, opts.dump().c_str(), out_path.c_str(), report(), &summary.p)) return fail(c, st);
    print_summary(summary);
  } else if (*para) {
    if (!opts.contains("paraphrase")) opts["paraphrase"] = "mock:echo";
    Owned summary;
    if (int st = tell_paraphrase(c.ctx, opts.dump().c_str(), in_path.c_str(), out_path.c_str(), report(), &summary.p))
      return fail(c, st);
    print_summary(summary);
  } else if (*filter) {
    Owned summary;
    if (int st = tell_filter(c.ctx, opts.dump().c_str(), in_path.c_str(), out_path.c_str(), report(), &summary.p))
      return fail(c, st);
    print_summary(summary);
  } else if (*stats) {
    auto paths = c_strs(inputs);
    Owned text, json;
    if (int st = tell_stats(c.ctx, paths.data(), paths.size(), &text.p, &json.p)) return fail(c, st);
    std::cout << (as_json ? json.str() + "\n" : text.str());
  } else if (*eval) {
    Owned json, text;
    if (int st = tell_evaluate(c.ctx, preds_path.c_str(), corpus_path.c_str(), &json.p, &text.p)) return fail(c, st);
    if (!report_path.empty()) {
      std::ofstream out(report_path, std::ios::binary);
      out << json.str() << "\n";
      if (!out) {
        std::cerr << "tell: cannot write '" << report_path << "'\n";
        return 1;
      }
    }
    std::cout << (as_json ? json.str() + "\n" : text.str());
  } else if (*exp) {
    if (int st = tell_export_templates(c.ctx, out_path.c_str())) return fail(c, st);
    std::size_t n = 0;
    tell_template_count(c.ctx, &n);
    std::cout << "wrote " << n << " templates to " << out_path << "\n";
  } else if (*aug) {
    if (opts.contains("paraphrase")) opts["provider_mode"] = opts["paraphrase"];
    Owned outcome;
    if (int st = tell_augment(c.ctx, opts.dump().c_str(), &outcome.p)) return fail(c, st);
    Json j = Json::parse(outcome.str());
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      out << j.dump(1) << "\n";
    }
    if (!j["parse_error"].get<std::string>().empty()) {
      std::cout << "no template: " << j["parse_error"].get<std::string>() << "\n";
    } else {
      const Json& a = j["admission"];
      std::cout << "candidate type " << j["candidate"]["type_id"] << ": " << a["agreed"] << "/" << a["trials"]
                << " trials passed, " << (a["admitted"].get<bool>() ? "admitted" : "rejected");
      if (!a["first_failure"].get<std::string>().empty()) std::cout << " (" << a["first_failure"].get<std::string>() << ")";
      std::cout << "\n";
      if (!j["appended_to"].is_null()) std::cout << "appended to " << j["appended_to"].get<std::string>() << "\n";
    }
  }
  return 0;
}

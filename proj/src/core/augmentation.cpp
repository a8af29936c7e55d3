#include "core/augmentation.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "core/assets.hpp"
#include "core/json_scan.hpp"
#include "core/recheck.hpp"

namespace tell {

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

bool looks_like_code(std::string_view raw) {
  static const std::regex code(R"((^|\n)\s*(def \w+\(|import \w|from [\w.]+ import |class \w+[:(]|```(python|py)\b))");
  return std::regex_search(raw.begin(), raw.end(), code);
}

void fill(std::string& text, std::string_view slot, const std::string& value) {
  for (auto at = text.find(slot); at != std::string::npos; at = text.find(slot, at + value.size()))
    text.replace(at, slot.size(), value);
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

std::string build_augmentation_prompt(const ProblemTemplate& demo, const std::string& target) {
  if (blank(target)) throw Error(ErrorCode::ValidationError, "target task description is empty", "target");
  Json body = template_to_json(demo);
  body.erase("type_id");
  std::string task1 = demo.name.empty() ? answer_rule_name(demo.family) : demo.name;
  std::string prompt = rstrip(std::string(assets::augmentation_prompt()));
  fill(prompt, "<Demonstration for Task 1>", body.dump(1));
  fill(prompt, "<Task 1>", task1);
  fill(prompt, "<Task 2>", target);
  return prompt + "\n\n" + rstrip(std::string(assets::augmentation_format())) + "\n";
}

ProblemTemplate parse_augmented_template(std::string_view raw, const TemplateDb& db) {
  if (looks_like_code(raw)) throw Error(ErrorCode::NoTemplateFound, "reply contains program code, not a template");
  std::size_t from = 0, at = 0;
  while (auto obj = find_json_object(raw, from, &at)) {
    if (obj->contains("family") && obj->contains("question")) {
      Json j = *obj;
      j["type_id"] = db.next_type_id();
      ProblemTemplate t = template_from_json(j);
      validate_template(t, db.pools);
      return t;
    }
    from = at + 1;
  }
  throw Error(ErrorCode::NoTemplateFound, "reply holds no template object");
}

Json AdmissionReport::to_json() const {
  return Json{{"trials", trials},
              {"agreed", agreed},
              {"agreement_rate", agreement_rate()},
              {"constraint_unsatisfiable", constraint_unsatisfiable},
              {"oracle_mismatch", oracle_mismatch},
              {"unresolved_placeholder", unresolved_placeholder},
              {"recheck_failed", recheck_failed},
              {"other_failures", other_failures},
              {"first_failure", first_failure},
              {"admitted", admitted}};
}

AdmissionReport admit_template(const ProblemTemplate& candidate, const Pools& pools, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "admission needs at least one trial");
  AdmissionReport r;
  r.trials = trials;
  auto note = [&](const std::string& why) {
    if (r.first_failure.empty()) r.first_failure = why;
  };
  for (int i = 0; i < trials; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    try {
      Binding b = sample_bindings(candidate, pools, rng);
      TemplateProblem p = instantiate(candidate, b);
      TmwpSample s = to_sample(p, "trial-" + std::to_string(i), candidate.grade_lo);
      if (auto why = audit_generated(candidate, s); !why.empty()) {
        ++r.recheck_failed;
        note(why);
        continue;
      }
      ++r.agreed;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::ConstraintUnsatisfiable: ++r.constraint_unsatisfiable; break;
        case ErrorCode::OracleMismatch: ++r.oracle_mismatch; break;
        case ErrorCode::UndeclaredPlaceholder: ++r.unresolved_placeholder; break;
        default: ++r.other_failures; break;
      }
      note(e.what());
    }
  }
  r.admitted = r.agreed == r.trials;
  return r;
}

AugmentOutcome augment(const ProblemTemplate& demo, const std::string& target, const TemplateDb& db,
                       const LlmCall& call, int trials, std::uint64_t seed) {
  if (!call.provider) throw Error(ErrorCode::InvalidArgument, "no provider configured");
  AugmentOutcome out;
  out.prompt = build_augmentation_prompt(demo, target);
  Decoding d;
  d.temperature = 0.0;
  d.max_tokens = 4096;
  d.seed = call.seed;
  out.raw_reply = cached_completion(*call.provider, call.cache, "augment:" + target, out.prompt, d, call.policy);
  try {
    out.candidate = parse_augmented_template(out.raw_reply, db);
  } catch (const Error& e) {
    out.parse_error = e.what();
    return out;
  }
  out.admission = admit_template(*out.candidate, db.pools, trials, seed);
  return out;
}

void append_user_template(const std::string& path, const ProblemTemplate& t) {
  Json doc{{"schema_version", kTemplateSchemaVersion}, {"pools", Json::object()}, {"templates", Json::array()}};
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    doc = Json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, "'" + path + "' is not a template file");
    if (!doc.contains("templates")) doc["templates"] = Json::array();
  }
  for (const auto& e : doc["templates"]) {
    if (e.value("type_id", 0) == t.type_id)
      throw Error(ErrorCode::DuplicateTypeId, "type " + std::to_string(t.type_id) + " already in '" + path + "'");
  }
  doc["templates"].push_back(template_to_json(t));
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp + "'");
    out << doc.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tell

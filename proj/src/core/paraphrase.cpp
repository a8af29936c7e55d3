#include "core/paraphrase.hpp"

#include "core/assets.hpp"
#include "core/json_scan.hpp"

namespace tell {

namespace {

void fill(std::string& text, std::string_view slot, const std::string& value) {
  auto at = text.find(slot);
  if (at == std::string::npos) throw Error(ErrorCode::Internal, "prompt asset lacks slot " + std::string(slot));
  text.replace(at, slot.size(), value);
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string text_field(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    // A solution given as a list of lines.
    std::string out;
    for (const auto& line : v) {
      if (!out.empty()) out += '\n';
      out += line.is_string() ? line.get<std::string>() : line.dump();
    }
    return out;
  }
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw Error(ErrorCode::UnparseableReply, std::string("reply field '") + key + "' is not text");
}

AnswerValue read_answer(const std::string& raw, const AnswerValue& like) {
  auto num = Rational::parse(raw);
  return std::visit(
      [&](const auto& a) -> AnswerValue {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, IntVal>) {
          if (num && num->is_integer()) return IntVal{num->num()};
        } else if constexpr (std::is_same_v<T, DecVal>) {
          if (num) {
            for (int scale = a.value.scale; scale <= 6; ++scale)
              if ((*num * Rational(pow10(scale))).is_integer()) return DecVal{Decimal::from_rational(*num, scale)};
          }
        } else if constexpr (std::is_same_v<T, FractionVal>) {
          if (num) return make_fraction(*num);
        } else if constexpr (std::is_same_v<T, BoolTextVal>) {
          return BoolTextVal{raw};
        }
        return TextVal{raw};
      },
      like);
}

Decoding paraphrase_decoding(const LlmCall& call) {
  Decoding d;
  d.temperature = kParaphraseTemperature;
  d.max_tokens = 1500;
  d.seed = call.seed;
  return d;
}

}  // namespace

std::vector<ParaphraseExemplar> parse_exemplars(const Json& doc) {
  std::vector<ParaphraseExemplar> out;
  for (const auto& e : doc.at("examples")) out.push_back({e.at("input"), e.at("output")});
  return out;
}

const std::vector<ParaphraseExemplar>& builtin_exemplars() {
  static const std::vector<ParaphraseExemplar> ex =
      parse_exemplars(Json::parse(std::string(assets::paraphrase_exemplars())));
  return ex;
}

Json problem_to_prompt_json(const TemplateProblem& p) {
  Json j;
  j["question"] = p.question;
  j["table_for_pd"] = table_to_pd(p.table);
  j["choices"] = p.choices ? Json(*p.choices) : Json();
  j["answer"] = answer_text(p.answer);
  j["solution"] = p.solution;
  return j;
}

std::string build_paraphrase_prompt(const TemplateProblem& p, std::span<const ParaphraseExemplar> examples) {
  if (examples.size() != 2) {
    throw Error(ErrorCode::ValidationError,
                "the paraphrase prompt takes exactly 2 exemplars, got " + std::to_string(examples.size()));
  }
  std::string shots;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i) shots += "\n\n";
    shots += "Example " + std::to_string(i + 1) + ":\nInput:\n" + examples[i].input.dump(1) + "\nOutput:\n" +
             examples[i].output.dump(1);
  }
  std::string prompt = rstrip(std::string(assets::paraphrase_prompt()));
  fill(prompt, "<Two In-context Examples>", shots);
  fill(prompt, "<Template-based Problem>", problem_to_prompt_json(p).dump(1));
  return prompt + "\n\n" + rstrip(std::string(assets::paraphrase_format())) + "\n";
}

ParsedReply parse_llm_output(std::string_view raw) {
  std::size_t from = 0, at = 0;
  while (auto obj = find_json_object(raw, from, &at)) {
    const Json& j = *obj;
    if (j.contains("question") && j.contains("solution") && j.contains("answer") && !j["answer"].is_null()) {
      ParsedReply r;
      r.question = text_field(j, "question");
      r.solution = text_field(j, "solution");
      r.answer = text_field(j, "answer");
      if (j.contains("table_for_pd") && j["table_for_pd"].is_object()) r.table_for_pd = j["table_for_pd"];
      if (j.contains("choices") && j["choices"].is_array()) {
        std::vector<std::string> c;
        for (const auto& v : j["choices"]) c.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        r.choices = std::move(c);
      }
      return r;
    }
    from = at + 1;
  }
  throw Error(ErrorCode::UnparseableReply, "reply holds no object with question, solution and answer");
}

ParaphraseResult apply_reply(const TemplateProblem& source, const ParsedReply& reply, std::string raw) {
  ParaphraseResult r;
  r.source = source;
  r.question = reply.question;
  r.solution = reply.solution;
  r.table_title = source.table_title;
  if (reply.table_for_pd) {
    try {
      r.table = table_from_pd(*reply.table_for_pd, source.table.layout);
      validate_table(r.table);
    } catch (const Error& e) {
      throw Error(ErrorCode::UnparseableReply, std::string("reply table unusable: ") + e.what());
    }
  } else {
    r.table = source.table;
  }
  r.choices = reply.choices && source.choices ? reply.choices : source.choices;
  r.answer_raw = reply.answer;
  r.answer = read_answer(reply.answer, source.answer);
  r.raw_reply = std::move(raw);
  return r;
}

ParaphraseResult paraphrase_problem(const TemplateProblem& p, const LlmCall& call, const std::string& sample_id) {
  if (!call.provider) throw Error(ErrorCode::InvalidArgument, "no provider configured");
  std::string prompt = build_paraphrase_prompt(p, call.exemplars);
  Decoding d = paraphrase_decoding(call);
  std::string last_problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string raw;
    try {
      raw = cached_completion(*call.provider, call.cache, sample_id, prompt, d, call.policy, attempt);
    } catch (const ProviderError& e) {
      if (e.kind() != FailureKind::MalformedReply) throw;
      last_problem = e.what();
      continue;
    }
    try {
      return apply_reply(p, parse_llm_output(raw), raw);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableReply) throw;
      last_problem = e.what();
    }
  }
  throw Error(ErrorCode::UnparseableReply, "after one re-ask: " + last_problem);
}

TmwpSample paraphrased_sample(const ParaphraseResult& r, const TmwpSample& base) {
  TmwpSample s = base;
  s.question = r.question;
  s.solution = r.solution;
  s.table_title = r.table_title;
  s.table = r.table;
  s.table_text = render_table_text(r.table);
  s.choices = r.choices;
  s.answer = r.answer;
  s.kind = r.choices ? QuestionKind::MultipleChoice : QuestionKind::FreeText;
  s.answer_type = answer_type_for(r.answer, r.choices.has_value());
  s.provenance = Provenance::Paraphrased;
  return s;
}

std::string build_enrichment_prompt(const std::string& question, const TableSpec& table, const std::string& s0) {
  std::string prompt = rstrip(std::string(assets::enrichment_prompt()));
  fill(prompt, "<Question>", question);
  fill(prompt, "<Table>", render_table_text(table));
  fill(prompt, "<Original Solution>", s0);
  return prompt + "\n";
}

std::string enrich_solution(const std::string& question, const TableSpec& table, const std::string& s0,
                            const LlmCall& call, const std::string& sample_id) {
  if (s0.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::ValidationError, "original solution is empty", "solution");
  }
  if (!call.provider) throw Error(ErrorCode::InvalidArgument, "no provider configured");
  std::string prompt = build_enrichment_prompt(question, table, s0);
  Decoding d;
  d.temperature = kEnrichTemperature;
  d.seed = call.seed;
  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = rstrip(cached_completion(*call.provider, call.cache, sample_id, prompt, d, call.policy, attempt));
    std::size_t steps = count_numbered_steps(reply);
    if (steps >= 2 && extract_terminal_answer(reply)) return reply;
    problem = steps < 2 ? "fewer than two numbered steps" : "no terminal answer line";
  }
  throw Error(ErrorCode::StructureError, "enriched solution has " + problem + " after one retry");
}

}  // namespace tell

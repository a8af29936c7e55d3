#include "core/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"
#include "core/generators.hpp"

namespace tell {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Trim, drop terminal periods, collapse inner whitespace.
std::string strip(std::string_view raw) {
  std::string s(raw);
  for (;;) {
    while (!s.empty() && is_space(s.back())) s.pop_back();
    if (!s.empty() && s.back() == '.') {
      s.pop_back();
      continue;
    }
    break;
  }
  std::string out;
  bool gap = false;
  for (char c : s) {
    if (is_space(c)) {
      gap = !out.empty();
      continue;
    }
    if (gap) out += ' ';
    gap = false;
    out += c;
  }
  return out;
}

std::string casefold(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// "b", "(b)", "b)" -> 1
std::optional<std::size_t> choice_letter(const std::string& s) {
  std::string t = s;
  if (t.size() == 3 && t.front() == '(' && t.back() == ')') t = t.substr(1, 1);
  if (t.size() == 2 && t.back() == ')') t = t.substr(0, 1);
  if (t.size() != 1 || t[0] < 'a' || t[0] > 'z') return std::nullopt;
  return static_cast<std::size_t>(t[0] - 'a');
}

void tally(std::map<std::string, ScoreCell>& axis, const std::string& key, bool ok) {
  auto& c = axis[key];
  ++c.total;
  if (ok) ++c.correct;
}

Json cell_json(const ScoreCell& c) {
  return Json{{"correct", c.correct}, {"total", c.total}, {"accuracy", std::round(c.accuracy() * 100.0) / 100.0}};
}

Json axis_json(const std::map<std::string, ScoreCell>& axis) {
  Json j = Json::object();
  for (const auto& [k, c] : axis) j[k] = cell_json(c);
  return j;
}

std::string pct(const ScoreCell& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", c.accuracy());
  return buf;
}

}  // namespace

bool NormalizedAnswer::operator==(const NormalizedAnswer& o) const {
  if (number && o.number) return *number == *o.number;
  if (number || o.number) return false;
  return text == o.text;
}

std::string NormalizedAnswer::canonical() const { return number ? number->to_string() : text; }

NormalizedAnswer normalize_answer(std::string_view raw, const AnswerValue& expected) {
  NormalizedAnswer out;
  std::string s = strip(raw);
  if (answer_number(expected)) {
    if (auto r = Rational::parse(s)) {
      out.number = *r;
      return out;
    }
  }
  out.text = casefold(s);
  return out;
}

bool answers_equal(std::string_view raw, const AnswerValue& expected) {
  return normalize_answer(raw, expected) == normalize_answer(answer_text(expected), expected);
}

bool exact_match(const Prediction& pred, const TmwpSample& gold) {
  if (pred.sample_id != gold.id) {
    throw Error(ErrorCode::IdMismatch, "prediction for '" + pred.sample_id + "' scored against '" + gold.id + "'");
  }
  std::string text = pred.predicted_answer;
  if (auto terminal = extract_terminal_answer(text)) text = *terminal;
  if (gold.choices) {
    std::string key = casefold(strip(text));
    auto letter = choice_letter(key);
    bool literal = std::any_of(gold.choices->begin(), gold.choices->end(),
                               [&](const std::string& c) { return casefold(strip(c)) == key; });
    if (letter && !literal && *letter < gold.choices->size()) text = (*gold.choices)[*letter];
  }
  return answers_equal(text, gold.answer);
}

EvalReport evaluate(std::span<const Prediction> preds, std::span<const TmwpSample> corpus) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus[i].id, i);
  std::vector<const Prediction*> by_sample(corpus.size(), nullptr);
  for (const auto& p : preds) {
    auto it = index.find(p.sample_id);
    if (it == index.end()) throw Error(ErrorCode::UnknownSampleId, "no sample '" + p.sample_id + "' in corpus");
    if (by_sample[it->second]) throw Error(ErrorCode::DuplicatePrediction, "second prediction for '" + p.sample_id + "'");
    by_sample[it->second] = &p;
  }

  EvalReport r;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    if (answer_number(s.answer) && !Rational::parse(strip(answer_text(s.answer)))) r.unparseable_gold.push_back(s.id);
    bool ok = by_sample[i] && exact_match(*by_sample[i], s);
    ++r.overall.total;
    if (ok) ++r.overall.correct;
    tally(r.question_type, short_label(s.kind), ok);
    tally(r.answer_type, short_label(s.answer_type), ok);
    tally(r.grade, grade_bucket(s.grade), ok);
    tally(r.template_type, s.template_type ? std::to_string(*s.template_type) : "-", ok);
  }
  return r;
}

Json report_to_json(const EvalReport& r) {
  Json j;
  j["overall"] = cell_json(r.overall);
  j["question_type"] = axis_json(r.question_type);
  j["answer_type"] = axis_json(r.answer_type);
  j["grade"] = axis_json(r.grade);
  j["template_type"] = axis_json(r.template_type);
  j["unparseable_gold"] = r.unparseable_gold;
  return j;
}

std::string render_report(const EvalReport& r) {
  // One row in the layout of the usual benchmark breakdown, then per type.
  static const std::vector<std::pair<const char*, std::vector<std::string>>> groups = {
      {"question_type", {"FREE", "MC"}},
      {"answer_type", {"INT", "DEC", "EXTR", "BOOL", "OTH"}},
      {"grade", {"1-6", "7-8"}},
  };
  std::vector<std::string> head{"Total"}, vals{pct(r.overall)};
  for (const auto& [axis, keys] : groups) {
    const auto& m = std::string(axis) == "question_type" ? r.question_type
                    : std::string(axis) == "answer_type" ? r.answer_type
                                                         : r.grade;
    for (const auto& k : keys) {
      head.push_back(k);
      auto it = m.find(k);
      vals.push_back(it == m.end() ? "-" : pct(it->second));
    }
  }
  std::ostringstream os;
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::string c = cells[i];
      if (c.size() < 7) c.insert(0, 7 - c.size(), ' ');
      os << (i ? " " : "") << c;
    }
    os << '\n';
  };
  row(head);
  row(vals);
  os << '\n' << "  Type   Correct   Total  Accuracy\n";
  std::vector<std::pair<std::string, ScoreCell>> types(r.template_type.begin(), r.template_type.end());
  std::sort(types.begin(), types.end(), [](const auto& a, const auto& b) {
    auto num = [](const std::string& k) { return k == "-" ? 1 << 30 : std::stoi(k); };
    return num(a.first) < num(b.first);
  });
  for (const auto& [k, c] : types) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%6s %9zu %7zu %9s\n", k.c_str(), c.correct, c.total, pct(c).c_str());
    os << buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "\noverall %zu/%zu = %s\n", r.overall.correct, r.overall.total, pct(r.overall).c_str());
  os << buf;
  return os.str();
}

std::vector<Prediction> parse_predictions(std::string_view jsonl) {
  std::vector<Prediction> out;
  std::size_t lineno = 0, pos = 0;
  while (pos <= jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (strip(line).empty()) {
      if (end == jsonl.size()) break;
      continue;
    }
    try {
      Json j = Json::parse(line);
      if (!j.is_object() || !j.contains("id") || !j.contains("prediction")) {
        throw Error(ErrorCode::MissingField, "record needs 'id' and 'prediction'");
      }
      const Json& p = j["prediction"];
      const Json& id = j["id"];
      out.push_back({id.is_string() ? id.get<std::string>() : id.dump(), p.is_string() ? p.get<std::string>() : p.dump()});
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what(), e.field());
    }
    if (end == jsonl.size()) break;
  }
  return out;
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_predictions(ss.str());
}

}  // namespace tell

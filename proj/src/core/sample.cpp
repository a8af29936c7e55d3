#include "core/sample.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"

namespace tell {

namespace {

[[noreturn]] void violation(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvariantViolation, field + ": " + what, field);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_nonneg_int(const Cell& c) {
  return c.number && c.number->scale == 0 && c.number->units >= 0;
}

bool is_currency(const Cell& c) {
  if (!c.number || c.number->units < 0) return false;
  std::string t = trimmed(c.text);
  if (!t.empty() && t.front() == '$') t.erase(t.begin());
  auto dot = t.find('.');
  return dot != std::string::npos && t.size() - dot - 1 == 2;
}

// Returns an empty string when the stem-leaf shape holds, else a reason.
std::string stem_leaf_problem(const std::vector<std::string>& columns, const std::vector<std::vector<Cell>>& rows) {
  if (columns.size() != 2) return "stem-leaf table needs exactly 2 columns";
  std::optional<std::int64_t> prev;
  for (const auto& row : rows) {
    if (row.size() != 2) return "row width";
    const Cell& stem = row[0];
    if (!is_nonneg_int(stem)) return "stem '" + stem.text + "' is not a non-negative integer";
    if (prev && stem.number->units <= *prev) return "stems must be strictly increasing";
    prev = stem.number->units;
    int last = -1;
    for (const auto& tok : split_ws(row[1].text)) {
      if (tok.size() != 1 || !std::isdigit(static_cast<unsigned char>(tok[0]))) {
        return "leaf '" + tok + "' is not a single digit";
      }
      int d = tok[0] - '0';
      if (d < last) return "leaves must be sorted";
      last = d;
    }
  }
  return {};
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<AnswerType> kAnswerTypes[] = {
    {AnswerType::Int, "integer_number"},   {AnswerType::Dec, "decimal_number"},
    {AnswerType::Extr, "extractive_text"}, {AnswerType::Bool, "boolean_text"},
    {AnswerType::Oth, "other_text"},
};

constexpr EnumName<TableLayout> kLayouts[] = {
    {TableLayout::KeyValue, "key-value"},   {TableLayout::Frequency, "frequency"},
    {TableLayout::PriceList, "price-list"}, {TableLayout::StemLeaf, "stem-leaf"},
    {TableLayout::TwoWayCount, "two-way-count"},
};

const Json& require(const Json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) {
    throw Error(ErrorCode::MissingField, std::string("missing field '") + key + "'", key);
  }
  return *it;
}

std::string require_string(const Json& rec, const char* key) {
  const Json& v = require(rec, key);
  if (!v.is_string()) throw Error(ErrorCode::TypeMismatch, std::string("field '") + key + "' must be a string", key);
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::TypeMismatch, std::string("field '") + key + "' must be a string", key);
  return it->get<std::string>();
}

std::string scalar_text(const Json& v, const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return v.dump();
  throw Error(ErrorCode::TypeMismatch, std::string("field '") + field + "' must be text or a number", field);
}

AnswerValue parse_answer(const std::string& text, AnswerType type, const std::optional<std::string>& form) {
  auto mismatch = [&](const std::string& why) -> Error {
    return Error(ErrorCode::TypeMismatch, "answer '" + text + "' " + why, "answer");
  };
  std::string f;
  if (form) {
    f = *form;
  } else {
    switch (type) {
      case AnswerType::Int: f = "int"; break;
      case AnswerType::Dec: f = text.find('/') != std::string::npos ? "fraction" : "decimal"; break;
      case AnswerType::Bool: f = "bool"; break;
      default: f = "text"; break;
    }
  }
  if (f == "int") {
    auto r = Rational::parse(text);
    if (!r || !r->is_integer()) throw mismatch("is not an integer");
    return IntVal{r->num()};
  }
  if (f == "decimal") {
    std::string t = trimmed(text);
    t.erase(std::remove(t.begin(), t.end(), ','), t.end());
    if (!t.empty() && t.front() == '$') t.erase(t.begin());
    auto d = Decimal::parse(t);
    if (!d) throw mismatch("is not a decimal number");
    return DecVal{*d};
  }
  if (f == "fraction") {
    auto r = Rational::parse(text);
    if (!r) throw mismatch("is not a fraction");
    if (r->num() < 0) throw mismatch("is a negative fraction");
    return make_fraction(*r);
  }
  if (f == "bool") return BoolTextVal{text};
  if (f == "text") return TextVal{text};
  throw Error(ErrorCode::TypeMismatch, "unknown answer_form '" + f + "'", "answer_form");
}

std::string answer_form(const AnswerValue& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntVal>) return "int";
        if constexpr (std::is_same_v<T, DecVal>) return "decimal";
        if constexpr (std::is_same_v<T, FractionVal>) return "fraction";
        if constexpr (std::is_same_v<T, BoolTextVal>) return "bool";
        return "text";
      },
      a);
}

}  // namespace

std::string to_string(QuestionKind k) { return k == QuestionKind::FreeText ? "free_text" : "multi_choice"; }

std::string to_string(AnswerType t) {
  for (const auto& e : kAnswerTypes)
    if (e.value == t) return e.name;
  return "other_text";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    case Split::Generated: return "generated";
  }
  return "generated";
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Ingested: return "ingested";
    case Provenance::Template: return "template";
    case Provenance::Paraphrased: return "paraphrased";
  }
  return "ingested";
}

std::string to_string(TableLayout l) {
  for (const auto& e : kLayouts)
    if (e.value == l) return e.name;
  return "key-value";
}

std::string short_label(QuestionKind k) { return k == QuestionKind::FreeText ? "FREE" : "MC"; }

std::string short_label(AnswerType t) {
  switch (t) {
    case AnswerType::Int: return "INT";
    case AnswerType::Dec: return "DEC";
    case AnswerType::Extr: return "EXTR";
    case AnswerType::Bool: return "BOOL";
    case AnswerType::Oth: return "OTH";
  }
  return "OTH";
}

std::optional<TableLayout> parse_layout(std::string_view s) {
  for (const auto& e : kLayouts)
    if (s == e.name) return e.value;
  return std::nullopt;
}

Cell Cell::parse(std::string text) {
  Cell c{std::move(text), std::nullopt};
  std::string t = trimmed(c.text);
  if (!t.empty() && t.front() == '$') t.erase(t.begin());
  t.erase(std::remove(t.begin(), t.end(), ','), t.end());
  c.number = Decimal::parse(t);
  return c;
}

Cell Cell::of_int(std::int64_t v) { return Cell{std::to_string(v), Decimal{v, 0}}; }

Cell Cell::of_decimal(const Decimal& d, bool currency) {
  return Cell{currency ? d.to_currency() : d.to_string(), d};
}

std::string answer_text(const AnswerValue& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntVal>) return std::to_string(v.value);
        if constexpr (std::is_same_v<T, DecVal>) return v.value.to_string();
        if constexpr (std::is_same_v<T, FractionVal>) {
          if (v.den == 1) return std::to_string(v.num);
          return std::to_string(v.num) + "/" + std::to_string(v.den);
        }
        if constexpr (std::is_same_v<T, TextVal> || std::is_same_v<T, BoolTextVal>) return v.value;
      },
      a);
}

std::optional<Rational> answer_number(const AnswerValue& a) {
  if (auto* i = std::get_if<IntVal>(&a)) return Rational(i->value);
  if (auto* d = std::get_if<DecVal>(&a)) return d->value.value();
  if (auto* f = std::get_if<FractionVal>(&a)) {
    if (f->den <= 0) return std::nullopt;
    return Rational(f->num, f->den);
  }
  return std::nullopt;
}

FractionVal make_fraction(const Rational& r) { return FractionVal{r.num(), r.den()}; }

std::string grade_bucket(int grade) { return grade <= 6 ? "1-6" : "7-8"; }

void validate_table(const TableSpec& t) {
  if (t.columns.empty()) violation("table", "table has no columns");
  if (t.rows.empty()) violation("table", "table has no rows");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != t.columns.size()) {
      violation("table", "row " + std::to_string(i) + " has " + std::to_string(t.rows[i].size()) +
                             " cells, expected " + std::to_string(t.columns.size()));
    }
  }
  switch (t.layout) {
    case TableLayout::StemLeaf: {
      auto why = stem_leaf_problem(t.columns, t.rows);
      if (!why.empty()) violation("table", why);
      break;
    }
    case TableLayout::PriceList:
      if (t.columns.size() != 2) violation("table", "price list needs exactly 2 columns");
      for (const auto& row : t.rows)
        if (!is_currency(row[1])) violation("table", "price '" + row[1].text + "' is not a two-decimal amount");
      break;
    case TableLayout::Frequency:
      if (t.columns.size() != 2) violation("table", "frequency table needs exactly 2 columns");
      for (const auto& row : t.rows)
        if (!is_nonneg_int(row[1])) violation("table", "frequency '" + row[1].text + "' is not a count");
      break;
    case TableLayout::TwoWayCount:
      if (t.columns.size() < 2) violation("table", "two-way table needs a label column and counts");
      for (const auto& row : t.rows)
        for (std::size_t j = 1; j < row.size(); ++j)
          if (!is_nonneg_int(row[j])) violation("table", "count '" + row[j].text + "' is not a count");
      break;
    case TableLayout::KeyValue:
      break;
  }
}

void validate_sample(const TmwpSample& s) {
  if (s.id.empty()) violation("id", "empty id");
  if (s.question.empty()) violation("question", "empty question");
  validate_table(s.table);
  if (s.table_text != render_table_text(s.table)) violation("table", "table text is not the rendering of the table");

  const bool mc = s.kind == QuestionKind::MultipleChoice;
  if (mc != (s.choices.has_value() && !s.choices->empty())) {
    violation("choices", mc ? "multiple-choice sample without choices" : "free-text sample with choices");
  }
  bool free_type = s.answer_type == AnswerType::Int || s.answer_type == AnswerType::Dec;
  if (free_type == mc) violation("ans_type", to_string(s.answer_type) + " does not match " + to_string(s.kind));

  const std::string text = answer_text(s.answer);
  if (mc && std::find(s.choices->begin(), s.choices->end(), text) == s.choices->end()) {
    violation("answer", "answer '" + text + "' is not one of the choices");
  }

  bool ok = std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntVal>) return s.answer_type == AnswerType::Int;
        if constexpr (std::is_same_v<T, DecVal> || std::is_same_v<T, FractionVal>) return s.answer_type == AnswerType::Dec;
        if constexpr (std::is_same_v<T, BoolTextVal>) return s.answer_type == AnswerType::Bool;
        if constexpr (std::is_same_v<T, TextVal>) return s.answer_type == AnswerType::Extr || s.answer_type == AnswerType::Oth;
      },
      s.answer);
  if (!ok) violation("ans_type", to_string(s.answer_type) + " contradicts the answer value");

  if (auto* f = std::get_if<FractionVal>(&s.answer)) {
    if (f->den < 1 || f->num < 0) violation("answer", "fraction needs a non-negative numerator and positive denominator");
    if (std::gcd(f->num, f->den) != 1) {
      violation("answer", "fraction " + std::to_string(f->num) + "/" + std::to_string(f->den) + " is not in lowest terms");
    }
  }
  if (auto* d = std::get_if<DecVal>(&s.answer)) {
    if (d->value.scale < 0) violation("answer", "negative decimal scale");
  }
  if (s.grade < 1 || s.grade > 8) violation("grade", "grade " + std::to_string(s.grade) + " outside [1, 8]");
  if (s.template_type && *s.template_type < 1) violation("template_type", "template type must be positive");
}

std::string render_table_text(const TableSpec& t) {
  std::vector<std::size_t> width(t.columns.size(), 0);
  for (std::size_t j = 0; j < t.columns.size(); ++j) width[j] = t.columns[j].size();
  for (const auto& row : t.rows)
    for (std::size_t j = 0; j < row.size() && j < width.size(); ++j) width[j] = std::max(width[j], row[j].text.size());

  auto line = [&](auto cell_text, std::size_t n) {
    std::string out;
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) out += " | ";
      std::string c = cell_text(j);
      out += c;
      if (j + 1 < n) out.append(width[j] - std::min(width[j], c.size()), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
  };

  std::string out = line([&](std::size_t j) { return t.columns[j]; }, t.columns.size());
  for (const auto& row : t.rows) {
    out += '\n';
    out += line([&](std::size_t j) { return row[j].text; }, row.size());
  }
  return out;
}

Json table_to_pd(const TableSpec& t) {
  Json pd = Json::object();
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    Json col = Json::array();
    for (const auto& row : t.rows) col.push_back(row[j].text);
    pd[t.columns[j]] = std::move(col);
  }
  return pd;
}

TableLayout infer_layout(const std::vector<std::string>& columns, const std::vector<std::vector<Cell>>& rows) {
  auto all_rows = [&](auto pred) {
    return std::all_of(rows.begin(), rows.end(), pred);
  };
  if (columns.size() == 2) {
    if (lower(trimmed(columns[0])) == "stem" && lower(trimmed(columns[1])).rfind("leaf", 0) == 0 &&
        stem_leaf_problem(columns, rows).empty()) {
      return TableLayout::StemLeaf;
    }
    if (!rows.empty() && all_rows([](const auto& r) { return r.size() == 2 && trimmed(r[1].text).rfind('$', 0) == 0 && is_currency(r[1]); })) {
      return TableLayout::PriceList;
    }
    if (lower(trimmed(columns[1])) == "frequency" && all_rows([](const auto& r) { return r.size() == 2 && is_nonneg_int(r[1]); })) {
      return TableLayout::Frequency;
    }
  }
  if (columns.size() >= 2 && trimmed(columns[0]).empty() && !rows.empty() &&
      all_rows([&](const auto& r) {
        if (r.size() != columns.size()) return false;
        for (std::size_t j = 1; j < r.size(); ++j)
          if (!is_nonneg_int(r[j])) return false;
        return true;
      })) {
    return TableLayout::TwoWayCount;
  }
  return TableLayout::KeyValue;
}

TableSpec table_from_pd(const Json& pd, std::optional<TableLayout> layout) {
  if (!pd.is_object()) throw Error(ErrorCode::TypeMismatch, "table_for_pd must be an object of columns", "table_for_pd");
  TableSpec t;
  std::size_t n_rows = 0;
  bool first = true;
  for (auto it = pd.begin(); it != pd.end(); ++it) {
    if (!it.value().is_array()) {
      throw Error(ErrorCode::TypeMismatch, "table_for_pd column '" + it.key() + "' must be a list", "table_for_pd");
    }
    if (first) {
      n_rows = it.value().size();
      t.rows.assign(n_rows, {});
      first = false;
    } else if (it.value().size() != n_rows) {
      violation("table_for_pd", "column '" + it.key() + "' has a different length");
    }
    t.columns.push_back(it.key());
    for (std::size_t i = 0; i < n_rows; ++i) t.rows[i].push_back(Cell::parse(scalar_text(it.value()[i], "table_for_pd")));
  }
  t.layout = layout ? *layout : infer_layout(t.columns, t.rows);
  return t;
}

std::string table_key(const TableSpec& t) {
  std::string key = to_string(t.layout);
  key += '\x1e';
  for (const auto& c : t.columns) {
    key += c;
    key += '\x1f';
  }
  for (const auto& row : t.rows) {
    key += '\x1e';
    for (const auto& c : row) {
      key += c.text;
      key += '\x1f';
    }
  }
  return key;
}

std::vector<Rational> numeric_tokens(const TableSpec& t) {
  std::vector<Rational> out;
  for (const auto& row : t.rows) {
    for (const auto& cell : row) {
      if (cell.number) {
        out.push_back(cell.number->value());
        continue;
      }
      for (const auto& tok : split_ws(cell.text)) {
        if (auto r = Rational::parse(tok); r && tok.find('/') == std::string::npos) out.push_back(*r);
      }
    }
  }
  return out;
}

TmwpSample parse_sample(const Json& rec) {
  if (!rec.is_object()) throw Error(ErrorCode::TypeMismatch, "record must be an object", "record");
  TmwpSample s;
  s.id = scalar_text(require(rec, "id"), "id");
  s.question = require_string(rec, "question");
  s.table_title = optional_string(rec, "table_title");
  s.unit = optional_string(rec, "unit");

  std::optional<TableLayout> layout;
  if (auto l = optional_string(rec, "layout")) {
    layout = parse_layout(*l);
    if (!layout) throw Error(ErrorCode::TypeMismatch, "unknown layout '" + *l + "'", "layout");
  }
  s.table = table_from_pd(require(rec, "table_for_pd"), layout);
  s.table_text = render_table_text(s.table);

  std::string qt = require_string(rec, "ques_type");
  if (qt == "free_text") {
    s.kind = QuestionKind::FreeText;
  } else if (qt == "multi_choice") {
    s.kind = QuestionKind::MultipleChoice;
  } else {
    throw Error(ErrorCode::TypeMismatch, "unknown ques_type '" + qt + "'", "ques_type");
  }

  std::string at = require_string(rec, "ans_type");
  bool found = false;
  for (const auto& e : kAnswerTypes) {
    if (at == e.name) {
      s.answer_type = e.value;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::TypeMismatch, "unknown ans_type '" + at + "'", "ans_type");

  if (auto it = rec.find("choices"); it != rec.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorCode::TypeMismatch, "choices must be a list", "choices");
    std::vector<std::string> choices;
    for (const auto& c : *it) choices.push_back(scalar_text(c, "choices"));
    s.choices = std::move(choices);
  }

  s.answer = parse_answer(scalar_text(require(rec, "answer"), "answer"), s.answer_type, optional_string(rec, "answer_form"));

  if (auto sol = optional_string(rec, "solution")) s.solution = *sol;
  s.original_solution = optional_string(rec, "original_solution");

  const Json& grade = require(rec, "grade");
  if (!grade.is_number_integer()) throw Error(ErrorCode::TypeMismatch, "grade must be an integer", "grade");
  s.grade = grade.get<int>();

  std::string split = require_string(rec, "split");
  if (split == "train") {
    s.split = Split::Train;
  } else if (split == "valid" || split == "dev") {
    s.split = Split::Valid;
  } else if (split == "test") {
    s.split = Split::Test;
  } else if (split == "generated") {
    s.split = Split::Generated;
  } else {
    throw Error(ErrorCode::TypeMismatch, "unknown split '" + split + "'", "split");
  }

  if (auto it = rec.find("template_type"); it != rec.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw Error(ErrorCode::TypeMismatch, "template_type must be an integer", "template_type");
    s.template_type = it->get<int>();
  }
  if (auto p = optional_string(rec, "provenance")) {
    if (*p == "ingested") {
      s.provenance = Provenance::Ingested;
    } else if (*p == "template") {
      s.provenance = Provenance::Template;
    } else if (*p == "paraphrased") {
      s.provenance = Provenance::Paraphrased;
    } else {
      throw Error(ErrorCode::TypeMismatch, "unknown provenance '" + *p + "'", "provenance");
    }
  }
  if (auto it = rec.find("template_binding"); it != rec.end() && !it->is_null()) s.binding = *it;

  validate_sample(s);
  return s;
}

Json serialize_sample(const TmwpSample& s) {
  validate_sample(s);
  Json j = Json::object();
  j["id"] = s.id;
  j["question"] = s.question;
  j["choices"] = s.choices ? Json(*s.choices) : Json(nullptr);
  j["answer"] = answer_text(s.answer);
  j["unit"] = s.unit ? Json(*s.unit) : Json(nullptr);
  j["table_title"] = s.table_title ? Json(*s.table_title) : Json(nullptr);
  j["table"] = s.table_text;
  j["table_for_pd"] = table_to_pd(s.table);
  j["row_num"] = s.table.rows.size() + 1;
  j["column_num"] = s.table.columns.size();
  j["solution"] = s.solution;
  j["ques_type"] = to_string(s.kind);
  j["ans_type"] = to_string(s.answer_type);
  j["grade"] = s.grade;
  j["split"] = to_string(s.split);
  j["layout"] = to_string(s.table.layout);
  j["answer_form"] = answer_form(s.answer);
  j["template_type"] = s.template_type ? Json(*s.template_type) : Json(nullptr);
  j["provenance"] = to_string(s.provenance);
  j["original_solution"] = s.original_solution ? Json(*s.original_solution) : Json(nullptr);
  j["template_binding"] = s.binding ? *s.binding : Json(nullptr);
  return j;
}

SplitStats compute_stats(std::span<const TmwpSample> corpus) {
  SplitStats st;
  std::map<Split, std::unordered_set<std::string>> tables, solutions;
  std::unordered_set<std::string> all_tables, all_solutions;
  for (const auto& s : corpus) {
    auto& c = st.per_split[s.split];
    ++c.questions;
    if (s.kind == QuestionKind::FreeText) {
      ++c.free_text;
    } else {
      ++c.multiple_choice;
    }
    auto key = table_key(s.table);
    tables[s.split].insert(key);
    all_tables.insert(std::move(key));
    if (!trimmed(s.solution).empty()) {
      solutions[s.split].insert(s.solution);
      all_solutions.insert(s.solution);
    }
  }
  for (auto& [split, c] : st.per_split) {
    c.tables = tables[split].size();
    c.solutions = solutions[split].size();
    st.total.questions += c.questions;
    st.total.free_text += c.free_text;
    st.total.multiple_choice += c.multiple_choice;
  }
  st.total.tables = all_tables.size();
  st.total.solutions = all_solutions.size();
  return st;
}

Json stats_to_json(const SplitStats& s) {
  auto counts = [](const SplitCounts& c) {
    Json j = Json::object();
    j["questions"] = c.questions;
    j["free_text"] = c.free_text;
    j["multiple_choice"] = c.multiple_choice;
    j["tables"] = c.tables;
    j["solutions"] = c.solutions;
    return j;
  };
  Json j = Json::object();
  Json splits = Json::object();
  for (const auto& [split, c] : s.per_split) splits[to_string(split)] = counts(c);
  j["splits"] = std::move(splits);
  j["total"] = counts(s.total);
  return j;
}

std::string render_stats(const SplitStats& s) {
  std::vector<std::pair<std::string, SplitCounts>> cols;
  for (const auto& [split, c] : s.per_split) {
    std::string name = to_string(split);
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    cols.emplace_back(name, c);
  }
  cols.emplace_back("Total", s.total);

  const std::pair<const char*, std::size_t SplitCounts::*> rows[] = {
      {"#Question", &SplitCounts::questions}, {"#Free-text", &SplitCounts::free_text},
      {"#MCQ", &SplitCounts::multiple_choice}, {"#Table", &SplitCounts::tables},
      {"#Solution", &SplitCounts::solutions},
  };
  std::ostringstream out;
  out << std::left << std::setw(12) << "";
  for (const auto& [name, c] : cols) out << std::right << std::setw(11) << name;
  out << '\n';
  for (const auto& [label, member] : rows) {
    out << std::left << std::setw(12) << label;
    for (const auto& [name, c] : cols) out << std::right << std::setw(11) << c.*member;
    out << '\n';
  }
  return out.str();
}

std::vector<TmwpSample> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<TmwpSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    try {
      out.push_back(parse_sample(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(lineno) + ": line " + std::to_string(lineno) + ": " + e.what(), e.field());
    }
  }
  return out;
}

std::string corpus_to_jsonl(std::span<const TmwpSample> corpus) {
  std::string out;
  for (const auto& s : corpus) {
    out += serialize_sample(s).dump(-1, ' ', false, Json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string& path, std::span<const TmwpSample> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << corpus_to_jsonl(corpus);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::vector<TmwpSample> ingest_tabmwp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};

  // A single object keyed by problem id; otherwise fall back to one record per line.
  Json doc;
  bool whole = false;
  try {
    doc = Json::parse(text);
    whole = doc.is_object() && !doc.contains("question");
  } catch (const Json::parse_error&) {
    whole = false;
  }
  std::vector<TmwpSample> out;
  if (whole) {
    out.reserve(doc.size());
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      Json rec = it.value();
      if (!rec.contains("id")) rec["id"] = it.key();
      try {
        out.push_back(parse_sample(rec));
      } catch (const Error& e) {
        throw Error(e.code(), path + ": problem '" + it.key() + "': " + e.what(), e.field());
      }
    }
    return out;
  }
  return read_corpus(path);
}

}  // namespace tell

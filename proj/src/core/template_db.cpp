#include "core/template_db.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "core/assets.hpp"
#include "core/error.hpp"

namespace tell {

namespace {

[[noreturn]] void schema(const std::string& msg, const std::string& field = {}) {
  throw Error(ErrorCode::SchemaError, msg, field);
}

const Json& need(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema(where + " is missing '" + key + "'", key);
  return j.at(key);
}

std::string need_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_string()) schema(where + ": '" + key + "' must be a string", key);
  return v.get<std::string>();
}

std::int64_t need_int(const Json& j, const char* key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_number_integer()) schema(where + ": '" + key + "' must be an integer", key);
  return v.get<std::int64_t>();
}

Decimal need_decimal(const Json& j, const char* key, int scale, const std::string& where) {
  const Json& v = need(j, key, where);
  std::optional<Decimal> d;
  if (v.is_string()) d = Decimal::parse(v.get<std::string>());
  if (v.is_number_integer()) d = Decimal{v.get<std::int64_t>(), 0};
  if (!d) schema(where + ": '" + key + "' must be a decimal", key);
  if (d->scale > scale) schema(where + ": '" + key + "' has more decimals than the declared scale", key);
  return d->rescaled(scale);
}

const char* domain_kind_name(Domain::Kind k) {
  switch (k) {
    case Domain::Kind::IntRange: return "int_range";
    case Domain::Kind::DecRange: return "dec_range";
    case Domain::Kind::CategoryPool: return "category_pool";
    case Domain::Kind::DigitList: return "digit_list";
    case Domain::Kind::Choice: return "choice";
    case Domain::Kind::Lookup: return "lookup";
  }
  return "int_range";
}

// Keys of each relation that name placeholders. Arrays of names are allowed.
const std::map<std::string, std::vector<std::string>>& relation_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"less", {"left", "right"}},
      {"distinct", {"of"}},
      {"within_plot", {"value", "stem_start", "leaves"}},
      {"in_plot", {"value", "stem_start", "leaves"}},
      {"plot_nonempty", {"leaves"}},
      {"budget_covers", {"budget", "items", "prices", "picks", "quantities"}},
      {"unique_mode", {"values"}},
      {"mean_scale", {"values"}},
      {"no_tie", {"labels", "column_labels", "cells", "row1", "row2", "column"}},
      {"positive_total", {"cells"}},
  };
  return keys;
}

std::vector<std::string> names_in(const Json& v) {
  std::vector<std::string> out;
  if (v.is_string()) out.push_back(v.get<std::string>());
  if (v.is_array())
    for (const auto& e : v)
      if (e.is_string()) out.push_back(e.get<std::string>());
  return out;
}

CountSpec parse_count(const Json& v, const std::string& where) {
  CountSpec c;
  auto add = [&](const Json& e) {
    if (e.is_number_integer()) {
      c.literal *= e.get<std::int64_t>();
    } else if (e.is_string()) {
      c.refs.push_back(e.get<std::string>());
    } else {
      schema(where + ": count must be an integer, a placeholder name or a list of them", "count");
    }
  };
  if (v.is_array()) {
    for (const auto& e : v) add(e);
  } else {
    add(v);
  }
  if (c.literal < 0) schema(where + ": negative count", "count");
  return c;
}

Json count_to_json(const CountSpec& c) {
  if (c.refs.empty()) return c.literal;
  if (c.refs.size() == 1 && c.literal == 1) return c.refs.front();
  Json arr = Json::array();
  if (c.literal != 1) arr.push_back(c.literal);
  for (const auto& r : c.refs) arr.push_back(r);
  return arr;
}

Domain parse_domain(const Json& j, const std::string& where) {
  Domain d;
  const std::string kind = need_string(j, "kind", where);
  if (j.contains("count") && !j["count"].is_null()) d.count = parse_count(j["count"], where);
  if (kind == "int_range") {
    d.kind = Domain::Kind::IntRange;
    d.lo = need_int(j, "lo", where);
    d.hi = need_int(j, "hi", where);
  } else if (kind == "dec_range") {
    d.kind = Domain::Kind::DecRange;
    d.scale = static_cast<int>(need_int(j, "scale", where));
    if (d.scale < 0 || d.scale > 6) schema(where + ": scale must be in [0, 6]", "scale");
    d.lo = need_decimal(j, "lo", d.scale, where).units;
    d.hi = need_decimal(j, "hi", d.scale, where).units;
  } else if (kind == "category_pool") {
    d.kind = Domain::Kind::CategoryPool;
    d.pool = need_string(j, "pool", where);
    d.distinct = j.value("distinct", true);
  } else if (kind == "digit_list") {
    d.kind = Domain::Kind::DigitList;
    d.min_len = static_cast<int>(need_int(j, "min_len", where));
    d.max_len = static_cast<int>(need_int(j, "max_len", where));
    d.sorted = j.value("sorted", true);
    if (d.min_len < 0) schema(where + ": min_len must be non-negative", "min_len");
  } else if (kind == "choice") {
    d.kind = Domain::Kind::Choice;
    d.from = need_string(j, "from", where);
  } else if (kind == "lookup") {
    d.kind = Domain::Kind::Lookup;
    d.source = need_string(j, "source", where);
    d.pool = need_string(j, "pool", where);
    d.attribute = need_string(j, "attribute", where);
  } else {
    schema(where + ": unknown domain kind '" + kind + "'", "domain");
  }
  if ((d.kind == Domain::Kind::IntRange || d.kind == Domain::Kind::DecRange) && d.lo > d.hi) {
    schema(where + ": lo exceeds hi", "domain");
  }
  if (d.kind == Domain::Kind::DigitList && d.min_len > d.max_len) schema(where + ": min_len exceeds max_len", "domain");
  return d;
}

Json domain_to_json(const Domain& d) {
  Json j = Json::object();
  j["kind"] = domain_kind_name(d.kind);
  switch (d.kind) {
    case Domain::Kind::IntRange:
      j["lo"] = d.lo;
      j["hi"] = d.hi;
      break;
    case Domain::Kind::DecRange:
      j["lo"] = Decimal{d.lo, d.scale}.to_string();
      j["hi"] = Decimal{d.hi, d.scale}.to_string();
      j["scale"] = d.scale;
      break;
    case Domain::Kind::CategoryPool:
      j["pool"] = d.pool;
      j["distinct"] = d.distinct;
      break;
    case Domain::Kind::DigitList:
      j["min_len"] = d.min_len;
      j["max_len"] = d.max_len;
      j["sorted"] = d.sorted;
      break;
    case Domain::Kind::Choice:
      j["from"] = d.from;
      break;
    case Domain::Kind::Lookup:
      j["source"] = d.source;
      j["pool"] = d.pool;
      j["attribute"] = d.attribute;
      break;
  }
  if (d.count) j["count"] = count_to_json(*d.count);
  return j;
}

std::string value_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_array()) {
    std::string out;
    bool nested = !v.empty() && v.front().is_array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += nested ? "; " : ", ";
      out += value_text(v[i]);
    }
    return out;
  }
  return v.dump();
}

std::int64_t as_int(const Binding& b, const std::string& name) {
  const Json& v = b.at(name);
  if (!v.is_number_integer()) throw Error(ErrorCode::TypeMismatch, "'" + name + "' is not an integer", name);
  return v.get<std::int64_t>();
}

std::vector<std::int64_t> as_int_list(const Json& v, const std::string& name) {
  if (!v.is_array()) throw Error(ErrorCode::TypeMismatch, "'" + name + "' is not a list", name);
  std::vector<std::int64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw Error(ErrorCode::TypeMismatch, "'" + name + "' holds a non-integer", name);
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

Decimal as_decimal(const Json& v, const std::string& name) {
  std::optional<Decimal> d;
  if (v.is_string()) d = Decimal::parse(v.get<std::string>());
  if (v.is_number_integer()) d = Decimal{v.get<std::int64_t>(), 0};
  if (!d) throw Error(ErrorCode::TypeMismatch, "'" + name + "' is not a decimal", name);
  return *d;
}

StemLeafPlot plot_from(const Binding& b, const std::string& stem_start, const std::string& leaves) {
  StemLeafPlot p;
  std::int64_t s = as_int(b, stem_start);
  for (const auto& row : b.at(leaves)) {
    p.stems.push_back(s++);
    std::vector<int> ls;
    for (auto v : as_int_list(row, leaves)) ls.push_back(static_cast<int>(v));
    p.leaves.push_back(std::move(ls));
  }
  return p;
}

std::string arg(const Relation& r, const char* key) { return r.args.at(key).get<std::string>(); }

bool relation_holds(const Relation& r, const Binding& b) {
  const std::string& k = r.kind;
  if (k == "less") return as_int(b, arg(r, "left")) < as_int(b, arg(r, "right"));
  if (k == "distinct") {
    auto names = names_in(r.args.at("of"));
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j)
        if (b.at(names[i]) == b.at(names[j])) return false;
    return true;
  }
  if (k == "within_plot" || k == "in_plot") {
    auto plot = plot_from(b, arg(r, "stem_start"), arg(r, "leaves"));
    std::int64_t x = as_int(b, arg(r, "value"));
    if (plot.stems.empty()) return false;
    if (k == "within_plot") return x >= plot.stems.front() * 10 && x <= plot.stems.back() * 10 + 9;
    auto values = stem_leaf_values(plot);
    return std::find(values.begin(), values.end(), x) != values.end();
  }
  if (k == "plot_nonempty") {
    for (const auto& row : b.at(arg(r, "leaves")))
      if (!row.empty()) return true;
    return false;
  }
  if (k == "budget_covers") {
    const Json& items = b.at(arg(r, "items"));
    const Json& prices = b.at(arg(r, "prices"));
    auto picks = names_in(r.args.at("picks"));
    auto qty = names_in(r.args.at("quantities"));
    if (picks.size() != qty.size()) return false;
    Rational total(0);
    for (std::size_t i = 0; i < picks.size(); ++i) {
      const Json& label = b.at(picks[i]);
      auto it = std::find(items.begin(), items.end(), label);
      if (it == items.end()) return false;
      auto idx = static_cast<std::size_t>(it - items.begin());
      total = total + as_decimal(prices.at(idx), arg(r, "prices")).value() * Rational(as_int(b, qty[i]));
    }
    return as_decimal(b.at(arg(r, "budget")), arg(r, "budget")).value() >= total;
  }
  if (k == "unique_mode") {
    auto values = as_int_list(b.at(arg(r, "values")), arg(r, "values"));
    std::map<std::int64_t, int> freq;
    for (auto v : values) ++freq[v];
    int best = 0, ties = 0;
    for (const auto& [v, c] : freq) {
      if (c > best) {
        best = c;
        ties = 1;
      } else if (c == best) {
        ++ties;
      }
    }
    return ties == 1;
  }
  if (k == "mean_scale") {
    auto values = as_int_list(b.at(arg(r, "values")), arg(r, "values"));
    if (values.empty()) return false;
    int scale = r.args.value("scale", 0);
    std::int64_t sum = 0;
    for (auto v : values) sum += v;
    Rational scaled = Rational(sum, static_cast<std::int64_t>(values.size())) * Rational(pow10(scale));
    return scaled.is_integer();
  }
  if (k == "no_tie") {
    const Json& labels = b.at(arg(r, "labels"));
    const Json& cols = b.at(arg(r, "column_labels"));
    auto cells = as_int_list(b.at(arg(r, "cells")), arg(r, "cells"));
    auto find = [](const Json& arr, const Json& v) -> std::optional<std::size_t> {
      auto it = std::find(arr.begin(), arr.end(), v);
      if (it == arr.end()) return std::nullopt;
      return static_cast<std::size_t>(it - arr.begin());
    };
    auto r1 = find(labels, b.at(arg(r, "row1")));
    auto r2 = find(labels, b.at(arg(r, "row2")));
    auto c = find(cols, b.at(arg(r, "column")));
    if (!r1 || !r2 || !c) return false;
    std::size_t w = cols.size();
    return cells.at(*r1 * w + *c) != cells.at(*r2 * w + *c);
  }
  if (k == "positive_total") {
    std::int64_t sum = 0;
    for (auto v : as_int_list(b.at(arg(r, "cells")), arg(r, "cells"))) sum += v;
    return sum > 0;
  }
  schema("unknown relation '" + k + "'");
}

// Placeholder names a template reads, mapped to where they were seen.
std::vector<std::pair<std::string, std::string>> referenced_names(const ProblemTemplate& t) {
  std::vector<std::pair<std::string, std::string>> out;
  auto from_pattern = [&](const std::string& text, const std::string& where) {
    for (const auto& m : pattern_markers(text))
      if (m.front() != '@') out.emplace_back(m, where);
  };
  from_pattern(t.preamble, "preamble");
  from_pattern(t.question, "question");
  if (t.table.title) from_pattern(*t.table.title, "table.title");
  for (const auto& c : t.table.columns) from_pattern(c, "table.columns");
  if (t.choices)
    for (const auto& c : *t.choices) from_pattern(c, "choices");
  for (const auto& s : t.solution) from_pattern(s, "solution");
  for (auto it = t.table.source.begin(); it != t.table.source.end(); ++it)
    for (const auto& n : names_in(it.value())) out.emplace_back(n, "table.source");
  for (auto it = t.roles.begin(); it != t.roles.end(); ++it)
    for (const auto& n : names_in(it.value())) out.emplace_back(n, "roles." + it.key());
  for (const auto& c : t.constraints) {
    for (const auto& rel : c.relations) {
      auto keys = relation_keys().find(rel.kind);
      if (keys == relation_keys().end()) continue;
      for (const auto& key : keys->second)
        if (rel.args.contains(key))
          for (const auto& n : names_in(rel.args[key])) out.emplace_back(n, "relation " + rel.kind);
    }
  }
  return out;
}

std::string role_name(const ProblemTemplate& t, const char* role) {
  if (!t.roles.contains(role) || !t.roles[role].is_string()) {
    throw Error(ErrorCode::SchemaError, "template " + std::to_string(t.type_id) + " has no role '" + role + "'", role);
  }
  return t.roles[role].get<std::string>();
}

std::vector<std::string> role_names(const ProblemTemplate& t, const char* role) {
  if (!t.roles.contains(role)) {
    throw Error(ErrorCode::SchemaError, "template " + std::to_string(t.type_id) + " has no role '" + role + "'", role);
  }
  return names_in(t.roles[role]);
}

std::string source_name(const TablePattern& p, const char* key) {
  if (!p.source.contains(key) || !p.source[key].is_string()) {
    throw Error(ErrorCode::SchemaError, std::string("table source needs '") + key + "'", key);
  }
  return p.source[key].get<std::string>();
}

Cell value_cell(const Json& v, bool currency) {
  if (v.is_number_integer()) return Cell::of_int(v.get<std::int64_t>());
  if (v.is_string()) {
    if (currency) {
      if (auto d = Decimal::parse(v.get<std::string>())) return Cell::of_decimal(*d, true);
    }
    return Cell::parse(v.get<std::string>());
  }
  return Cell::parse(value_text(v));
}

const PoolEntry* pool_entry(const Pools& pools, const std::string& pool, const std::string& value) {
  auto it = pools.find(pool);
  if (it == pools.end()) return nullptr;
  for (const auto& e : it->second)
    if (e.value == value) return &e;
  return nullptr;
}

std::int64_t resolve_count(const CountSpec& c, const Binding& b) {
  std::int64_t n = c.literal;
  for (const auto& r : c.refs) {
    const Json& v = b.at(r);
    if (v.is_number_integer()) {
      n *= v.get<std::int64_t>();
    } else if (v.is_array()) {
      n *= static_cast<std::int64_t>(v.size());
    } else {
      throw Error(ErrorCode::TypeMismatch, "count reference '" + r + "' is not an integer", r);
    }
  }
  return n;
}

Json sample_value(const ConstraintSpec& c, const Pools& pools, const Binding& b, Rng& rng) {
  const Domain& d = c.domain;
  const bool listed = d.count.has_value();
  const std::int64_t n = listed ? resolve_count(*d.count, b) : 1;
  auto many = [&](auto draw) {
    if (!listed) return Json(draw());
    Json arr = Json::array();
    for (std::int64_t i = 0; i < n; ++i) arr.push_back(draw());
    return arr;
  };
  switch (d.kind) {
    case Domain::Kind::IntRange:
      return many([&] { return Json(rng.uniform_int(d.lo, d.hi)); });
    case Domain::Kind::DecRange:
      return many([&] { return Json(Decimal{rng.uniform_int(d.lo, d.hi), d.scale}.to_string()); });
    case Domain::Kind::CategoryPool: {
      const auto& pool = pools.at(d.pool);
      if (pool.empty() || (d.distinct && static_cast<std::size_t>(n) > pool.size())) {
        throw Error(ErrorCode::ConstraintUnsatisfiable,
                    "'" + c.placeholder + "' needs " + std::to_string(n) + " distinct entries from pool '" + d.pool +
                        "' of size " + std::to_string(pool.size()),
                    c.placeholder);
      }
      if (!d.distinct) return many([&] { return Json(pool[rng.index(pool.size())].value); });
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      Json arr = Json::array();
      for (std::int64_t i = 0; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(i) + rng.index(idx.size() - static_cast<std::size_t>(i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        arr.push_back(pool[idx[static_cast<std::size_t>(i)]].value);
      }
      return listed ? arr : arr.front();
    }
    case Domain::Kind::DigitList:
      return many([&] {
        auto len = rng.uniform_int(d.min_len, d.max_len);
        std::vector<std::int64_t> digits;
        for (std::int64_t i = 0; i < len; ++i) digits.push_back(rng.uniform_int(0, 9));
        if (d.sorted) std::sort(digits.begin(), digits.end());
        return Json(digits);
      });
    case Domain::Kind::Choice: {
      const Json& from = b.at(d.from);
      if (!from.is_array() || from.empty()) {
        throw Error(ErrorCode::ConstraintUnsatisfiable, "'" + d.from + "' offers nothing to choose from", c.placeholder);
      }
      return many([&] { return from[rng.index(from.size())]; });
    }
    case Domain::Kind::Lookup: {
      auto look = [&](const Json& key) -> Json {
        const PoolEntry* e = pool_entry(pools, d.pool, value_text(key));
        if (!e) {
          throw Error(ErrorCode::SchemaError, "no entry '" + value_text(key) + "' in pool '" + d.pool + "'", c.placeholder);
        }
        auto a = e->attributes.find(d.attribute);
        if (a == e->attributes.end()) {
          throw Error(ErrorCode::SchemaError,
                      "pool '" + d.pool + "' entry '" + e->value + "' has no attribute '" + d.attribute + "'",
                      c.placeholder);
        }
        return a->second;
      };
      const Json& key = b.at(d.source);
      if (key.is_array()) {
        Json arr = Json::array();
        for (const auto& k : key) arr.push_back(look(k));
        return arr;
      }
      return look(key);
    }
  }
  throw Error(ErrorCode::Internal, "unhandled domain");
}

}  // namespace

// ---------------------------------------------------------------------------

const ProblemTemplate* TemplateDb::find(int type_id) const {
  for (const auto& t : templates)
    if (t.type_id == type_id) return &t;
  return nullptr;
}

int TemplateDb::next_type_id() const {
  int next = 26;
  for (const auto& t : templates) next = std::max(next, t.type_id + 1);
  return next;
}

Pools parse_pools(const Json& j) {
  Pools out;
  if (j.is_null()) return out;
  if (!j.is_object()) schema("'pools' must be an object of lists", "pools");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) schema("pool '" + it.key() + "' must be a list", "pools");
    auto& entries = out[it.key()];
    for (const auto& e : it.value()) {
      PoolEntry pe;
      if (e.is_string()) {
        pe.value = e.get<std::string>();
      } else if (e.is_object() && e.contains("value") && e["value"].is_string()) {
        pe.value = e["value"].get<std::string>();
        for (auto a = e.begin(); a != e.end(); ++a) {
          if (a.key() == "value") continue;
          if (!a.value().is_string()) schema("pool '" + it.key() + "' attribute '" + a.key() + "' must be text", "pools");
          pe.attributes[a.key()] = a.value().get<std::string>();
        }
      } else {
        schema("pool '" + it.key() + "' entries must be text or objects with a 'value'", "pools");
      }
      entries.push_back(std::move(pe));
    }
  }
  return out;
}

Json pools_to_json(const Pools& p) {
  Json j = Json::object();
  for (const auto& [name, entries] : p) {
    Json arr = Json::array();
    for (const auto& e : entries) {
      if (e.attributes.empty()) {
        arr.push_back(e.value);
        continue;
      }
      Json o = Json::object();
      o["value"] = e.value;
      for (const auto& [k, v] : e.attributes) o[k] = v;
      arr.push_back(std::move(o));
    }
    j[name] = std::move(arr);
  }
  return j;
}

ProblemTemplate template_from_json(const Json& j) {
  if (!j.is_object()) schema("template entry must be an object");
  ProblemTemplate t;
  t.type_id = static_cast<int>(need_int(j, "type_id", "template"));
  const std::string where = "template " + std::to_string(t.type_id);
  if (t.type_id < 1) schema(where + ": type_id must be positive", "type_id");
  t.name = j.value("name", std::string{});
  t.family = family_from_json(need(j, "family", where));
  t.answer_rule = j.contains("answer_rule") ? need_string(j, "answer_rule", where) : answer_rule_name(t.family);
  parse_answer_rule(t.answer_rule, t.family);
  t.roles = need(j, "roles", where);
  if (!t.roles.is_object()) schema(where + ": 'roles' must be an object", "roles");
  t.preamble = j.value("preamble", std::string{});
  t.question = need_string(j, "question", where);

  const Json& table = need(j, "table", where);
  auto layout = parse_layout(need_string(table, "layout", where + " table"));
  if (!layout) schema(where + ": unknown table layout", "table.layout");
  t.table.layout = *layout;
  if (table.contains("title") && table["title"].is_string()) t.table.title = table["title"].get<std::string>();
  for (const auto& c : need(table, "columns", where + " table")) {
    if (!c.is_string()) schema(where + ": table columns must be text", "table.columns");
    t.table.columns.push_back(c.get<std::string>());
  }
  t.table.source = need(table, "source", where + " table");
  if (!t.table.source.is_object()) schema(where + ": table source must be an object", "table.source");

  if (j.contains("solution") && !j["solution"].is_null()) {
    for (const auto& s : j["solution"]) {
      if (!s.is_string()) schema(where + ": solution steps must be text", "solution");
      t.solution.push_back(s.get<std::string>());
    }
  }
  if (t.solution.empty()) t.solution = default_solution_steps(t.family);

  for (const auto& c : need(j, "constraints", where)) {
    ConstraintSpec cs;
    cs.placeholder = need_string(c, "placeholder", where + " constraint");
    const std::string cw = where + " constraint '" + cs.placeholder + "'";
    cs.domain = parse_domain(need(c, "domain", cw), cw);
    if (c.contains("relations")) {
      for (const auto& r : c["relations"]) {
        Relation rel;
        rel.kind = need_string(r, "kind", cw + " relation");
        rel.args = r;
        cs.relations.push_back(std::move(rel));
      }
    }
    t.constraints.push_back(std::move(cs));
  }
  if (j.contains("choices") && !j["choices"].is_null()) {
    std::vector<std::string> choices;
    for (const auto& c : j["choices"]) {
      if (!c.is_string()) schema(where + ": choices must be text patterns", "choices");
      choices.push_back(c.get<std::string>());
    }
    t.choices = std::move(choices);
  }
  if (j.contains("grade_range")) {
    const Json& g = j["grade_range"];
    if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer()) {
      schema(where + ": grade_range must be [lo, hi]", "grade_range");
    }
    t.grade_lo = g[0].get<int>();
    t.grade_hi = g[1].get<int>();
  }
  return t;
}

Json template_to_json(const ProblemTemplate& t) {
  Json j = Json::object();
  j["type_id"] = t.type_id;
  j["name"] = t.name;
  j["family"] = family_to_json(t.family);
  j["answer_rule"] = t.answer_rule;
  j["roles"] = t.roles;
  if (!t.preamble.empty()) j["preamble"] = t.preamble;
  j["question"] = t.question;
  Json table = Json::object();
  table["layout"] = to_string(t.table.layout);
  table["title"] = t.table.title ? Json(*t.table.title) : Json(nullptr);
  table["columns"] = t.table.columns;
  table["source"] = t.table.source;
  j["table"] = std::move(table);
  j["solution"] = t.solution;
  Json cs = Json::array();
  for (const auto& c : t.constraints) {
    Json o = Json::object();
    o["placeholder"] = c.placeholder;
    o["domain"] = domain_to_json(c.domain);
    if (!c.relations.empty()) {
      Json rels = Json::array();
      for (const auto& r : c.relations) rels.push_back(r.args);
      o["relations"] = std::move(rels);
    }
    cs.push_back(std::move(o));
  }
  j["constraints"] = std::move(cs);
  if (t.choices) j["choices"] = *t.choices;
  j["grade_range"] = Json::array({t.grade_lo, t.grade_hi});
  return j;
}

void validate_template(const ProblemTemplate& t, const Pools& pools) {
  const std::string where = "template " + std::to_string(t.type_id);
  if (t.grade_lo < 1 || t.grade_hi > 8 || t.grade_lo > t.grade_hi) {
    schema(where + ": grade_range must lie within [1, 8]", "grade_range");
  }
  parse_answer_rule(t.answer_rule, t.family);

  std::set<std::string> declared;
  for (const auto& c : t.constraints) {
    const std::string cw = where + " constraint '" + c.placeholder + "'";
    auto need_earlier = [&](const std::string& ref) {
      if (!declared.count(ref)) {
        throw Error(ErrorCode::UndeclaredPlaceholder, cw + " refers to '" + ref + "' before it is declared", ref);
      }
    };
    if (c.domain.count)
      for (const auto& r : c.domain.count->refs) need_earlier(r);
    if (c.domain.kind == Domain::Kind::Choice) need_earlier(c.domain.from);
    if (c.domain.kind == Domain::Kind::Lookup) need_earlier(c.domain.source);
    if ((c.domain.kind == Domain::Kind::CategoryPool || c.domain.kind == Domain::Kind::Lookup) &&
        !pools.count(c.domain.pool)) {
      schema(cw + " uses unknown pool '" + c.domain.pool + "'", c.placeholder);
    }
    for (const auto& rel : c.relations) {
      auto keys = relation_keys().find(rel.kind);
      if (keys == relation_keys().end()) schema(cw + ": unknown relation '" + rel.kind + "'", c.placeholder);
      for (const auto& key : keys->second) {
        if (!rel.args.contains(key)) schema(cw + ": relation " + rel.kind + " needs '" + key + "'", c.placeholder);
      }
    }
    if (!declared.insert(c.placeholder).second) {
      schema(where + ": placeholder '" + c.placeholder + "' is declared more than once", c.placeholder);
    }
  }

  for (const auto& [name, seen_in] : referenced_names(t)) {
    if (!declared.count(name)) {
      throw Error(ErrorCode::UndeclaredPlaceholder, where + ": '" + name + "' used in " + seen_in + " is not declared",
                  name);
    }
  }
  auto derived = derived_field_names(t.family);
  for (const auto& step : t.solution) {
    for (const auto& m : pattern_markers(step)) {
      if (m.front() == '@' && std::find(derived.begin(), derived.end(), m.substr(1)) == derived.end()) {
        throw Error(ErrorCode::UndeclaredPlaceholder, where + ": solution field '" + m + "' does not exist", m);
      }
    }
  }
  for (const auto& role : family_scalar_roles(t.family)) {
    if (!t.roles.contains(role)) schema(where + ": " + family_kind(t.family) + " templates need role '" + role + "'", role);
  }
  if (auto* tr = std::get_if<TradingFamily>(&t.family)) {
    if (role_names(t, "picks").size() != static_cast<std::size_t>(tr->item_count) ||
        role_names(t, "quantities").size() != static_cast<std::size_t>(tr->item_count)) {
      schema(where + ": picks and quantities must list item_count placeholders", "roles");
    }
  }

  const auto& src = t.table.source;
  switch (t.table.layout) {
    case TableLayout::StemLeaf:
      source_name(t.table, "stem_start");
      source_name(t.table, "leaves");
      if (t.table.columns.size() != 2) schema(where + ": stem-leaf tables have 2 columns", "table.columns");
      break;
    case TableLayout::PriceList:
    case TableLayout::Frequency:
      source_name(t.table, "labels");
      source_name(t.table, "values");
      if (t.table.columns.size() != 2) schema(where + ": this layout has 2 columns", "table.columns");
      break;
    case TableLayout::KeyValue:
    case TableLayout::TwoWayCount:
      source_name(t.table, "labels");
      if (src.contains("cells")) {
        source_name(t.table, "column_labels");
        source_name(t.table, "cells");
        if (t.table.columns.size() != 1) schema(where + ": grid tables declare only the corner header", "table.columns");
      } else {
        source_name(t.table, "values");
        if (t.table.layout == TableLayout::TwoWayCount) schema(where + ": two-way tables need cells", "table.source");
        if (t.table.columns.size() != 2) schema(where + ": this layout has 2 columns", "table.columns");
      }
      break;
  }
}

TemplateDb parse_template_db(const Json& doc, const Pools* base) {
  if (!doc.is_object()) schema("template database must be an object");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != kTemplateSchemaVersion) {
    schema("unsupported template schema_version (expected " + std::to_string(kTemplateSchemaVersion) + ")",
           "schema_version");
  }
  TemplateDb db;
  db.pools = parse_pools(doc.contains("pools") ? doc["pools"] : Json());
  Pools visible = base ? *base : Pools{};
  for (const auto& [name, entries] : db.pools) visible[name] = entries;

  std::set<int> seen;
  for (const auto& entry : need(doc, "templates", "template database")) {
    ProblemTemplate t = template_from_json(entry);
    if (!seen.insert(t.type_id).second) {
      throw Error(ErrorCode::DuplicateTypeId, "type_id " + std::to_string(t.type_id) + " appears twice", "type_id");
    }
    validate_template(t, visible);
    db.templates.push_back(std::move(t));
  }
  return db;
}

TemplateDb load_template_db(const std::string& path, const Pools* base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'", "path");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what(), "path");
  }
  return parse_template_db(doc, base);
}

const std::string& builtin_template_json() {
  static const std::string text(assets::builtin_templates());
  return text;
}

const TemplateDb& builtin_template_db() {
  static const TemplateDb db = parse_template_db(Json::parse(builtin_template_json()));
  return db;
}

void merge_template_db(TemplateDb& into, const TemplateDb& extra) {
  for (const auto& t : extra.templates) {
    if (into.find(t.type_id)) {
      throw Error(ErrorCode::DuplicateTypeId, "type_id " + std::to_string(t.type_id) + " is already loaded", "type_id");
    }
  }
  for (const auto& [name, entries] : extra.pools) into.pools[name] = entries;
  into.templates.insert(into.templates.end(), extra.templates.begin(), extra.templates.end());
}

Json db_to_json(const TemplateDb& db) {
  Json j = Json::object();
  j["schema_version"] = kTemplateSchemaVersion;
  j["pools"] = pools_to_json(db.pools);
  Json ts = Json::array();
  for (const auto& t : db.templates) ts.push_back(template_to_json(t));
  j["templates"] = std::move(ts);
  return j;
}

// ---------------------------------------------------------------------------

const ProblemTemplate& select_template(const TemplateDb& db, Rng& rng, const std::map<int, double>* weights) {
  if (db.templates.empty()) throw Error(ErrorCode::EmptyDb, "the template database is empty");
  if (!weights) return db.templates[rng.index(db.templates.size())];
  std::vector<double> w;
  double total = 0;
  for (const auto& t : db.templates) {
    auto it = weights->find(t.type_id);
    double x = it == weights->end() ? 0.0 : it->second;
    if (x < 0) throw Error(ErrorCode::InvalidArgument, "negative weight for type " + std::to_string(t.type_id));
    w.push_back(x);
    total += x;
  }
  if (total <= 0) throw Error(ErrorCode::EmptyDb, "no template has a positive weight");
  return db.templates[rng.weighted(w)];
}

std::string failed_relation(const ProblemTemplate& t, const Binding& b) {
  for (const auto& c : t.constraints) {
    if (!b.contains(c.placeholder)) return "missing " + c.placeholder;
    for (const auto& r : c.relations)
      if (!relation_holds(r, b)) return r.kind + " on " + c.placeholder;
  }
  return {};
}

Binding sample_bindings(const ProblemTemplate& t, const Pools& pools, Rng& rng, int max_attempts) {
  std::string last;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Binding b = Json::object();
    for (const auto& c : t.constraints) b[c.placeholder] = sample_value(c, pools, b, rng);
    last = failed_relation(t, b);
    if (last.empty()) return b;
  }
  throw Error(ErrorCode::ConstraintUnsatisfiable,
              "template " + std::to_string(t.type_id) + ": no binding after " + std::to_string(max_attempts) +
                  " attempts (last failure: " + last + ")");
}

std::map<std::string, std::string> placeholder_text(const Binding& b) {
  std::map<std::string, std::string> out;
  for (auto it = b.begin(); it != b.end(); ++it) out[it.key()] = value_text(it.value());
  return out;
}

TableSpec build_table(const ProblemTemplate& t, const Binding& b) {
  const auto text = placeholder_text(b);
  const std::map<std::string, std::string> none;
  TableSpec table;
  table.layout = t.table.layout;
  for (const auto& c : t.table.columns) table.columns.push_back(substitute(c, text, none));

  if (t.table.layout == TableLayout::StemLeaf) {
    auto plot = plot_from(b, source_name(t.table, "stem_start"), source_name(t.table, "leaves"));
    for (std::size_t i = 0; i < plot.stems.size(); ++i) {
      std::string leaves;
      for (int leaf : plot.leaves[i]) {
        if (!leaves.empty()) leaves += ' ';
        leaves += static_cast<char>('0' + leaf);
      }
      table.rows.push_back({Cell::of_int(plot.stems[i]), Cell::parse(leaves)});
    }
    return table;
  }

  const Json& labels = b.at(source_name(t.table, "labels"));
  if (!labels.is_array()) throw Error(ErrorCode::TypeMismatch, "table labels must be a list", "labels");
  const bool currency = t.table.layout == TableLayout::PriceList;
  if (t.table.source.contains("cells")) {
    const Json& cols = b.at(source_name(t.table, "column_labels"));
    const Json& cells = b.at(source_name(t.table, "cells"));
    if (!cols.is_array() || !cells.is_array() || cells.size() != labels.size() * cols.size()) {
      throw Error(ErrorCode::LengthMismatch, "grid cells do not match rows x columns", "cells");
    }
    for (const auto& c : cols) table.columns.push_back(value_text(c));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::vector<Cell> row{Cell{value_text(labels[i]), std::nullopt}};
      for (std::size_t j = 0; j < cols.size(); ++j) row.push_back(value_cell(cells[i * cols.size() + j], false));
      table.rows.push_back(std::move(row));
    }
    return table;
  }
  const Json& values = b.at(source_name(t.table, "values"));
  if (!values.is_array() || values.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "table labels and values differ in length", "values");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table.rows.push_back({Cell{value_text(labels[i]), std::nullopt}, value_cell(values[i], currency)});
  }
  return table;
}

FamilyInputs family_inputs(const ProblemTemplate& t, const Binding& b, const TableSpec& table) {
  FamilyInputs in;
  in.table = table;
  auto text_of = [&](const char* role) { return value_text(b.at(role_name(t, role))); };
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StemLeafFamily>) {
          in.plot = plot_from(b, role_name(t, "stem_start"), role_name(t, "leaves"));
          if (f.predicate == StemLeafPredicate::CountValue) in.bound_a = as_int(b, role_name(t, "value"));
          if (t.roles.contains("threshold")) in.bound_a = as_int(b, role_name(t, "threshold"));
          if (t.roles.contains("range_start")) in.bound_a = as_int(b, role_name(t, "range_start"));
          if (t.roles.contains("range_end")) in.bound_b = as_int(b, role_name(t, "range_end"));
        }
        if constexpr (std::is_same_v<T, TradingFamily>) {
          auto picks = role_names(t, "picks");
          auto qty = role_names(t, "quantities");
          for (std::size_t i = 0; i < picks.size(); ++i) {
            std::string label = value_text(b.at(picks[i]));
            auto row = std::find_if(table.rows.begin(), table.rows.end(),
                                    [&](const auto& r) { return r[0].text == label; });
            if (row == table.rows.end()) throw Error(ErrorCode::MissingRow, "no price for '" + label + "'", picks[i]);
            if (!(*row)[1].number) throw Error(ErrorCode::TypeMismatch, "price of '" + label + "' is not numeric");
            in.purchases.push_back(PricedItem{label, *(*row)[1].number});
          }
          for (std::size_t i = 0; i < qty.size(); ++i) in.quantities.push_back(as_int(b, qty[i]));
          if (t.roles.contains("budget")) in.budget = as_decimal(b.at(role_name(t, "budget")), "budget");
        }
        if constexpr (std::is_same_v<T, ComparisonFamily>) {
          in.row1 = text_of("row1");
          in.row2 = text_of("row2");
          in.column = text_of("column");
        }
        if constexpr (std::is_same_v<T, ProbabilityFamily>) {
          if (f.mode == ProbabilityMode::JointCell) {
            in.row1 = text_of("row");
            in.column = text_of("col");
          } else {
            in.category = text_of("category");
          }
        }
        if constexpr (std::is_same_v<T, StatsFamily>) {
          in.values = as_int_list(b.at(role_name(t, "values")), role_name(t, "values"));
        }
      },
      t.family);
  return in;
}

TemplateProblem instantiate(const ProblemTemplate& t, const Binding& b) {
  const std::string where = "template " + std::to_string(t.type_id);
  for (const auto& c : t.constraints) {
    if (!b.contains(c.placeholder)) {
      throw Error(ErrorCode::MissingField, where + ": binding lacks '" + c.placeholder + "'", c.placeholder);
    }
  }
  if (auto bad = failed_relation(t, b); !bad.empty()) {
    throw Error(ErrorCode::ValidationError, where + ": binding violates " + bad);
  }

  TemplateProblem p;
  p.type_id = t.type_id;
  p.binding = b;
  p.table = build_table(t, b);
  validate_table(p.table);

  FamilyInputs in = family_inputs(t, b, p.table);
  GeneratorFamily rule = parse_answer_rule(t.answer_rule, t.family);
  AnswerValue a_star = evaluate(rule, in);
  AnswerValue oracle = evaluate(t.family, in);
  if (!(a_star == oracle)) {
    throw Error(ErrorCode::OracleMismatch, where + ": answer rule " + t.answer_rule + " gives " + answer_text(a_star) +
                                               " but the " + answer_rule_name(t.family) + " oracle gives " +
                                               answer_text(oracle));
  }
  p.answer = a_star;

  const auto text = placeholder_text(b);
  const std::map<std::string, std::string> none;
  std::string question = substitute(t.question, text, none);
  if (!t.preamble.empty()) question = substitute(t.preamble, text, none) + " " + question;
  p.question = question;
  if (t.table.title) p.table_title = substitute(*t.table.title, text, none);
  if (t.choices) {
    std::vector<std::string> choices;
    for (const auto& c : *t.choices) choices.push_back(substitute(c, text, none));
    p.choices = std::move(choices);
    if (std::find(p.choices->begin(), p.choices->end(), answer_text(a_star)) == p.choices->end()) {
      throw Error(ErrorCode::ValidationError, where + ": answer '" + answer_text(a_star) + "' is not among the choices");
    }
  }
  p.solution = render_solution(t.family, in, a_star, t.solution, text);

  auto residual = [&](const std::string& s, const char* field) {
    if (has_residual_marker(s)) {
      throw Error(ErrorCode::UndeclaredPlaceholder, where + ": unresolved placeholder in " + field + ": " + s, field);
    }
  };
  residual(p.question, "question");
  residual(p.solution, "solution");
  if (p.table_title) residual(*p.table_title, "table_title");
  for (const auto& c : p.table.columns) residual(c, "table");
  if (p.choices)
    for (const auto& c : *p.choices) residual(c, "choices");
  return p;
}

AnswerType answer_type_for(const AnswerValue& a, bool multiple_choice) {
  if (std::holds_alternative<IntVal>(a)) return AnswerType::Int;
  if (std::holds_alternative<DecVal>(a) || std::holds_alternative<FractionVal>(a)) return AnswerType::Dec;
  if (std::holds_alternative<BoolTextVal>(a)) return AnswerType::Bool;
  return multiple_choice ? AnswerType::Extr : AnswerType::Oth;
}

TmwpSample to_sample(const TemplateProblem& p, std::string id, int grade) {
  TmwpSample s;
  s.id = std::move(id);
  s.question = p.question;
  s.table_title = p.table_title;
  s.table = p.table;
  s.table_text = render_table_text(p.table);
  s.choices = p.choices;
  s.answer = p.answer;
  s.solution = p.solution;
  s.kind = p.choices ? QuestionKind::MultipleChoice : QuestionKind::FreeText;
  s.answer_type = answer_type_for(p.answer, p.choices.has_value());
  s.grade = grade;
  s.split = Split::Generated;
  s.template_type = p.type_id;
  s.provenance = Provenance::Template;
  s.binding = p.binding;
  return s;
}

}  // namespace tell

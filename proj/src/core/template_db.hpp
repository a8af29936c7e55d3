#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/generators.hpp"
#include "core/rng.hpp"
#include "core/sample.hpp"

namespace tell {

inline constexpr int kTemplateSchemaVersion = 1;
inline constexpr int kBindingAttempts = 1000;

struct PoolEntry {
  std::string value;
  std::map<std::string, std::string> attributes;
};
using Pools = std::map<std::string, std::vector<PoolEntry>>;

// A count is either a literal, a product of literals and earlier placeholders,
// or absent (scalar placeholder).
struct CountSpec {
  std::vector<std::string> refs;
  std::int64_t literal = 1;
};

struct Domain {
  enum class Kind { IntRange, DecRange, CategoryPool, DigitList, Choice, Lookup };
  Kind kind = Kind::IntRange;
  std::int64_t lo = 0, hi = 0;  // int_range; dec_range in units of 10^-scale
  int scale = 0;
  std::optional<CountSpec> count;
  std::string pool;  // category_pool, lookup
  bool distinct = true;
  int min_len = 0, max_len = 0;  // digit_list
  bool sorted = true;
  std::string from;  // choice
  std::string source, attribute;  // lookup
};

struct Relation {
  std::string kind;
  Json args;  // the relation object as written
};

struct ConstraintSpec {
  std::string placeholder;
  Domain domain;
  std::vector<Relation> relations;
};

struct TablePattern {
  TableLayout layout = TableLayout::KeyValue;
  std::optional<std::string> title;
  std::vector<std::string> columns;
  Json source;
};

struct ProblemTemplate {
  int type_id = 0;
  std::string name;
  GeneratorFamily family;
  std::string answer_rule;
  Json roles;
  std::string preamble;
  std::string question;
  TablePattern table;
  std::vector<std::string> solution;
  std::vector<ConstraintSpec> constraints;
  std::optional<std::vector<std::string>> choices;
  int grade_lo = 1, grade_hi = 8;
};

// Placeholder name -> value. Integers are numbers, decimals are strings at
// their declared scale, labels are strings, lists are arrays.
using Binding = Json;

struct TemplateDb {
  std::vector<ProblemTemplate> templates;
  Pools pools;

  const ProblemTemplate* find(int type_id) const;
  int next_type_id() const;
};

Pools parse_pools(const Json& j);
Json pools_to_json(const Pools& p);

ProblemTemplate template_from_json(const Json& j);
Json template_to_json(const ProblemTemplate& t);
// Throws UndeclaredPlaceholder / SchemaError.
void validate_template(const ProblemTemplate& t, const Pools& pools);

// `base` supplies pools a user file may reference without redefining.
TemplateDb parse_template_db(const Json& doc, const Pools* base = nullptr);
TemplateDb load_template_db(const std::string& path, const Pools* base = nullptr);
const TemplateDb& builtin_template_db();
const std::string& builtin_template_json();
// Adds `extra`'s templates and pools to `into`; DuplicateTypeId on clashes.
void merge_template_db(TemplateDb& into, const TemplateDb& extra);
Json db_to_json(const TemplateDb& db);

// Uniform without weights; otherwise proportional, unlisted types weigh 0.
const ProblemTemplate& select_template(const TemplateDb& db, Rng& rng,
                                       const std::map<int, double>* weights = nullptr);

Binding sample_bindings(const ProblemTemplate& t, const Pools& pools, Rng& rng, int max_attempts = kBindingAttempts);
// Empty string when every relation holds, else the first failing relation.
std::string failed_relation(const ProblemTemplate& t, const Binding& b);

struct TemplateProblem {
  std::string question;
  std::optional<std::string> table_title;
  TableSpec table;
  AnswerValue answer;
  std::string solution;
  std::optional<std::vector<std::string>> choices;
  int type_id = 0;
  Binding binding;
};

TableSpec build_table(const ProblemTemplate& t, const Binding& b);
FamilyInputs family_inputs(const ProblemTemplate& t, const Binding& b, const TableSpec& table);
std::map<std::string, std::string> placeholder_text(const Binding& b);
TemplateProblem instantiate(const ProblemTemplate& t, const Binding& b);

AnswerType answer_type_for(const AnswerValue& a, bool multiple_choice);
TmwpSample to_sample(const TemplateProblem& p, std::string id, int grade);

}  // namespace tell

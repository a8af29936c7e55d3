#pragma once

#include <optional>
#include <string>

#include "core/paraphrase.hpp"
#include "core/template_db.hpp"

namespace tell {

inline constexpr int kAdmissionTrials = 100;

// ValidationError on a blank target description.
std::string build_augmentation_prompt(const ProblemTemplate& demo, const std::string& target);

// First template object in the reply, numbered with the database's next free
// type id. Replies that contain program code, or no template object, raise
// NoTemplateFound.
ProblemTemplate parse_augmented_template(std::string_view raw, const TemplateDb& db);

struct AdmissionReport {
  int trials = 0;
  int agreed = 0;
  int constraint_unsatisfiable = 0;
  int oracle_mismatch = 0;
  int unresolved_placeholder = 0;
  int recheck_failed = 0;
  int other_failures = 0;
  std::string first_failure;
  bool admitted = false;

  double agreement_rate() const { return trials ? static_cast<double>(agreed) / trials : 0.0; }
  Json to_json() const;
};

// Instantiates `trials` samples from per-trial seeded streams; admitted only
// when every one passes.
AdmissionReport admit_template(const ProblemTemplate& candidate, const Pools& pools, int trials = kAdmissionTrials,
                               std::uint64_t seed = 0);

struct AugmentOutcome {
  std::string prompt;
  std::string raw_reply;
  std::optional<ProblemTemplate> candidate;
  std::string parse_error;
  AdmissionReport admission;
};

AugmentOutcome augment(const ProblemTemplate& demo, const std::string& target, const TemplateDb& db,
                       const LlmCall& call, int trials = kAdmissionTrials, std::uint64_t seed = 0);

// Adds `t` to a user template file, creating it when missing. DuplicateTypeId
// when the file already holds that id.
void append_user_template(const std::string& path, const ProblemTemplate& t);

}  // namespace tell

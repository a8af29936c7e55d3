#pragma once

#include <string>

#include "core/template_db.hpp"

namespace tell {

// Recomputes a generated sample's answer by brute force over its rendered
// table, without the family oracles. Question parameters come from the
// sample's binding.
AnswerValue recheck_answer(const ProblemTemplate& t, const TmwpSample& s);

// Empty when the sample passes schema validation, the brute-force re-check
// and the terminal-line check; otherwise the first problem found.
std::string audit_generated(const ProblemTemplate& t, const TmwpSample& s);

}  // namespace tell

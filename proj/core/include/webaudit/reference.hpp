#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"
#include "webaudit/risk_engine.hpp"

namespace webaudit::reference {

// Bundled audits of login/session implementations produced by five LLM code
// assistants, captured against the default checklist. They drive the named
// testbed presets and serve as regression and demo fixtures.
inline constexpr std::string_view kLabels[] = {"ChatGPT", "DeepSeek", "Claude",
                                               "Gemini", "Grok"};

bool is_label(std::string_view label);  // case-insensitive

// Observation value recorded for one parameter of one reference audit,
// as a value token ("Yes", "No", "NA", or categorical text).
std::string value_token(std::string_view label, std::string_view parameter_id);

// Full observation set for one audit, in default-checklist order. Each
// observation's source matches the parameter's evaluation mode.
std::vector<Observation> observations(std::string_view label);

AuditProfile profile(std::string_view label, const Checklist& checklist);

// All five profiles in kLabels order.
std::vector<AuditProfile> all_profiles(const Checklist& checklist);

}  // namespace webaudit::reference

#pragma once

#include <array>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"

namespace webaudit {

struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Compliance : unsigned char { Compliant, NonCompliant };

// Boolean parameters: the desired polarity value complies, everything else
// (including NA and Unknown) does not. Categorical parameters: any concrete
// observed variant counts as fulfilled; No/NA/Unknown do not.
// Throws AuditError for a categorical value on a Boolean parameter.
Compliance judge_compliance(const ParameterSpec& spec, const ObservationValue& value);

struct ComplianceRecord {
  std::string parameter_id;
  Observation observation;   // the winning observation after merge
  Compliance compliance = Compliance::NonCompliant;
  std::string rationale;
};

struct AuditProfile {
  std::string target_label;
  std::string checklist_version;
  std::vector<ComplianceRecord> records;  // checklist order, one per parameter

  const ComplianceRecord* find(std::string_view parameter_id) const;
};

struct CoverageSummary {
  struct Cell {
    int fulfilled = 0;
    int total = 0;
  };
  std::map<Category, Cell> per_category;

  int fulfilled_total() const;
  int parameter_total() const;
};

// Non-compliant parameter counts per risk level.
struct RiskProfile {
  std::array<int, 6> counts{};  // indexed by rank(RiskLevel) - 1

  int& at(RiskLevel level) { return counts[static_cast<size_t>(rank(level) - 1)]; }
  int at(RiskLevel level) const { return counts[static_cast<size_t>(rank(level) - 1)]; }
  int total() const;
  // Non-compliant parameters at or above the given level.
  int at_or_above(RiskLevel level) const;
};

// Merges observations from all sources into one record per checklist
// parameter. Precedence: Dynamic > Static > Manual. Parameters without any
// observation get a synthesized Unknown ("not observed"). Throws AuditError
// on unknown parameter ids, duplicate observations from the same source for
// one parameter, or a categorical value on a Boolean parameter.
AuditProfile build_profile(std::string target_label,
                           std::span<const Observation> observations,
                           const Checklist& checklist);

// Fulfilled/total per category; totals come from the checklist partition.
CoverageSummary coverage_summary(const AuditProfile& profile, const Checklist& checklist);

// Cross-tabulates non-compliant parameters by their checklist risk level.
RiskProfile risk_profile(const AuditProfile& profile, const Checklist& checklist);

struct ProfileComparison {
  std::string checklist_version;
  std::vector<std::string> labels;

  struct Row {
    std::string parameter_id;
    Category category = Category::AuthenticationSecurity;
    std::string name;
    std::vector<ObservationValue> values;     // one per label
    std::vector<Compliance> compliance;       // one per label
  };
  std::vector<Row> rows;  // checklist order

  std::vector<CoverageSummary> coverage;   // one per label
  std::vector<RiskProfile> risk;           // one per label
};

// Side-by-side comparison of several profiles built against the same
// checklist version. Throws AuditError when versions differ or no profile is
// given.
ProfileComparison compare_profiles(std::span<const AuditProfile> profiles,
                                   const Checklist& checklist);

}  // namespace webaudit

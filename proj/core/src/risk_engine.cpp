#include "webaudit/risk_engine.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace webaudit {

Compliance judge_compliance(const ParameterSpec& spec, const ObservationValue& value) {
  if (spec.kind == ParameterKind::Boolean && value.is_categorical()) {
    throw AuditError("categorical value '" + value.text() + "' on Boolean parameter " +
                     spec.id);
  }
  switch (value.kind()) {
    case ValueKind::Unknown:
    case ValueKind::NotApplicable:
      return Compliance::NonCompliant;
    case ValueKind::Yes:
      return spec.polarity == Polarity::DesiredYes ? Compliance::Compliant
                                                   : Compliance::NonCompliant;
    case ValueKind::No:
      return spec.polarity == Polarity::DesiredNo ? Compliance::Compliant
                                                  : Compliance::NonCompliant;
    case ValueKind::Categorical:
      // A concrete variant means the control exists in some form.
      return Compliance::Compliant;
  }
  return Compliance::NonCompliant;
}

const ComplianceRecord* AuditProfile::find(std::string_view parameter_id) const {
  for (const auto& r : records) {
    if (r.parameter_id == parameter_id) return &r;
  }
  return nullptr;
}

int CoverageSummary::fulfilled_total() const {
  int n = 0;
  for (const auto& [cat, cell] : per_category) n += cell.fulfilled;
  return n;
}

int CoverageSummary::parameter_total() const {
  int n = 0;
  for (const auto& [cat, cell] : per_category) n += cell.total;
  return n;
}

int RiskProfile::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

int RiskProfile::at_or_above(RiskLevel level) const {
  int n = 0;
  for (int r = rank(level); r <= rank(RiskLevel::Extreme); ++r) {
    n += counts[static_cast<size_t>(r - 1)];
  }
  return n;
}

namespace {

int precedence(Source s) {
  switch (s) {
    case Source::Dynamic: return 3;
    case Source::Static: return 2;
    case Source::Manual: return 1;
  }
  return 0;
}

std::string describe(const ParameterSpec& spec, const Observation& obs, Compliance c) {
  std::string out;
  switch (obs.source) {
    case Source::Dynamic: out = "dynamic observation "; break;
    case Source::Static: out = "static analysis "; break;
    case Source::Manual: out = "manual attestation "; break;
  }
  out += obs.value.to_string();
  out += c == Compliance::Compliant ? " fulfils " : " fails ";
  out += "the parameter";
  if (spec.polarity == Polarity::DesiredNo) out += " (desired answer is No)";
  if (obs.value.kind() == ValueKind::NotApplicable) out += "; dependent feature absent";
  if (obs.value.is_unknown()) {
    out += obs.note.empty() ? "; not decided" : "; " + obs.note;
  }
  return out;
}

}  // namespace

AuditProfile build_profile(std::string target_label,
                           std::span<const Observation> observations,
                           const Checklist& checklist) {
  // parameter id -> source -> observation
  std::map<std::string, std::map<int, const Observation*>> by_param;
  for (const Observation& obs : observations) {
    const ParameterSpec* spec = checklist.find(obs.parameter_id);
    if (!spec) throw AuditError("observation for unknown parameter: " + obs.parameter_id);
    if (spec->kind == ParameterKind::Boolean && obs.value.is_categorical()) {
      throw AuditError("categorical value '" + obs.value.text() +
                       "' on Boolean parameter " + obs.parameter_id);
    }
    auto& slots = by_param[obs.parameter_id];
    int prec = precedence(obs.source);
    if (slots.count(prec)) {
      throw AuditError("duplicate " + std::string(to_token(obs.source)) +
                       " observation for parameter " + obs.parameter_id);
    }
    slots[prec] = &obs;
  }

  AuditProfile profile;
  profile.target_label = std::move(target_label);
  profile.checklist_version = checklist.version;
  profile.records.reserve(checklist.parameters.size());

  for (const ParameterSpec& spec : checklist.parameters) {
    ComplianceRecord rec;
    rec.parameter_id = spec.id;
    auto it = by_param.find(spec.id);
    if (it == by_param.end()) {
      Observation missing;
      missing.parameter_id = spec.id;
      missing.value = ObservationValue::unknown();
      missing.source = spec.mode == EvalMode::Static ? Source::Static
                       : spec.mode == EvalMode::Manual ? Source::Manual
                                                       : Source::Dynamic;
      missing.note = "not observed";
      rec.observation = std::move(missing);
    } else {
      // Highest precedence wins.
      rec.observation = *it->second.rbegin()->second;
    }
    rec.compliance = judge_compliance(spec, rec.observation.value);
    rec.rationale = describe(spec, rec.observation, rec.compliance);
    profile.records.push_back(std::move(rec));
  }
  return profile;
}

CoverageSummary coverage_summary(const AuditProfile& profile, const Checklist& checklist) {
  if (profile.checklist_version != checklist.version) {
    throw AuditError("profile was built against checklist version '" +
                     profile.checklist_version + "', not '" + checklist.version + "'");
  }
  CoverageSummary summary;
  for (Category c : kAllCategories) summary.per_category[c] = {};
  for (const auto& rec : profile.records) {
    const ParameterSpec* spec = checklist.find(rec.parameter_id);
    if (!spec) throw AuditError("record for unknown parameter: " + rec.parameter_id);
    auto& cell = summary.per_category[spec->category];
    cell.total++;
    if (rec.compliance == Compliance::Compliant) cell.fulfilled++;
  }
  return summary;
}

RiskProfile risk_profile(const AuditProfile& profile, const Checklist& checklist) {
  if (profile.checklist_version != checklist.version) {
    throw AuditError("profile was built against checklist version '" +
                     profile.checklist_version + "', not '" + checklist.version + "'");
  }
  RiskProfile rp;
  for (const auto& rec : profile.records) {
    const ParameterSpec* spec = checklist.find(rec.parameter_id);
    if (!spec) throw AuditError("record for unknown parameter: " + rec.parameter_id);
    if (rec.compliance == Compliance::NonCompliant) rp.at(spec->risk)++;
  }
  return rp;
}

ProfileComparison compare_profiles(std::span<const AuditProfile> profiles,
                                   const Checklist& checklist) {
  if (profiles.empty()) throw AuditError("no profiles to compare");
  for (const auto& p : profiles) {
    if (p.checklist_version != checklist.version) {
      throw AuditError("profile '" + p.target_label +
                       "' was built against checklist version '" + p.checklist_version +
                       "', not '" + checklist.version + "'");
    }
  }
  ProfileComparison cmp;
  cmp.checklist_version = checklist.version;
  for (const auto& p : profiles) cmp.labels.push_back(p.target_label);

  for (const ParameterSpec& spec : checklist.parameters) {
    ProfileComparison::Row row;
    row.parameter_id = spec.id;
    row.category = spec.category;
    row.name = spec.name;
    for (const auto& p : profiles) {
      const ComplianceRecord* rec = p.find(spec.id);
      if (!rec) throw AuditError("profile '" + p.target_label + "' lacks parameter " + spec.id);
      row.values.push_back(rec->observation.value);
      row.compliance.push_back(rec->compliance);
    }
    cmp.rows.push_back(std::move(row));
  }
  for (const auto& p : profiles) {
    cmp.coverage.push_back(coverage_summary(p, checklist));
    cmp.risk.push_back(risk_profile(p, checklist));
  }
  return cmp;
}

}  // namespace webaudit

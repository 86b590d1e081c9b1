#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"
#include "webaudit/risk_engine.hpp"

namespace webaudit {

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One audited target inside a document: the judged profile and its derived
// summaries. The summaries are stored redundantly so that readers without
// the library can consume them; loading re-derives and cross-checks them.
struct TargetAudit {
  AuditProfile profile;
  CoverageSummary coverage;
  RiskProfile risk;
};

// Self-contained audit result: carries the full checklist it was judged
// against, so a document can be re-scored years later without external
// state.
struct AuditDocument {
  std::string tool = "webaudit";
  std::string format_version = "1";
  std::string generated_at;  // ISO-8601 UTC
  Checklist checklist;
  std::vector<TargetAudit> targets;

  const TargetAudit* find(std::string_view label) const;
};

// Builds a document from judged profiles, deriving the embedded summaries.
// Profiles must match the checklist version.
AuditDocument make_document(const Checklist& checklist,
                            std::span<const AuditProfile> profiles);

// Canonical JSON: keys sorted, parameters in checklist order, two-space
// indentation. Emitting the same document twice yields identical bytes, and
// parse_document(emit_json(d)) reproduces d.
std::string emit_json(const AuditDocument& doc);

// Parses and re-scores. Throws ReportError when the text is not valid JSON,
// the schema is off, the embedded checklist is inconsistent, or any stored
// compliance/summary disagrees with what the embedded observations yield.
AuditDocument parse_document(const std::string& text);

std::string serialize_probe_report(const ProbeReport& report);
ProbeReport parse_probe_report(const std::string& text);

enum class MatrixFormat { Csv, Markdown };

// Row-per-parameter value matrix. CSV: quoted fields, header plus one line
// per parameter. Markdown: parameter and category columns, then one column
// per target. Observation values appear verbatim.
std::string emit_compliance_matrix(const ProfileComparison& cmp, MatrixFormat format);

// Markdown table of per-category "fulfilled/total" cells, one column per
// labeled summary. An empty list yields only the header.
std::string emit_coverage_table(
    const std::vector<std::pair<std::string, CoverageSummary>>& summaries);

struct RadarChart {
  std::string svg;
  std::string sidecar_json;  // {"level": ..., "counts": {label: n, ...}}
};

// Chart of non-compliance counts at one risk level, one axis per target.
// Three or more targets make a radar polygon; one or two fall back to bars.
RadarChart emit_radar(
    const std::vector<std::pair<std::string, RiskProfile>>& profiles,
    RiskLevel level);

}  // namespace webaudit

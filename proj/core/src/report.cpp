#include "webaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace webaudit {

namespace {

using nlohmann::json;

const char* kind_token(ValueKind k) {
  switch (k) {
    case ValueKind::Yes: return "yes";
    case ValueKind::No: return "no";
    case ValueKind::NotApplicable: return "na";
    case ValueKind::Unknown: return "unknown";
    case ValueKind::Categorical: return "categorical";
  }
  return "?";
}

json value_to_json(const ObservationValue& v) {
  json j;
  j["kind"] = kind_token(v.kind());
  if (v.is_categorical()) j["text"] = v.text();
  return j;
}

ObservationValue value_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "yes") return ObservationValue::yes();
  if (kind == "no") return ObservationValue::no();
  if (kind == "na") return ObservationValue::not_applicable();
  if (kind == "unknown") return ObservationValue::unknown();
  if (kind == "categorical")
    return ObservationValue::categorical(j.at("text").get<std::string>());
  throw ReportError("unknown value kind: " + kind);
}

json observation_to_json(const Observation& o) {
  json j;
  j["parameter_id"] = o.parameter_id;
  j["value"] = value_to_json(o.value);
  j["source"] = std::string(to_token(o.source));
  j["captured_at"] = o.captured_at;
  j["note"] = o.note;
  json ev = json::array();
  for (const auto& e : o.evidence)
    ev.push_back(json{{"request", e.request}, {"response", e.response}});
  j["evidence"] = std::move(ev);
  return j;
}

Observation observation_from_json(const json& j) {
  Observation o;
  o.parameter_id = j.at("parameter_id").get<std::string>();
  o.value = value_from_json(j.at("value"));
  auto source = parse_source(j.at("source").get<std::string>());
  if (!source) throw ReportError("unknown observation source");
  o.source = *source;
  o.captured_at = j.at("captured_at").get<std::string>();
  o.note = j.at("note").get<std::string>();
  for (const auto& e : j.at("evidence"))
    o.evidence.push_back({e.at("request").get<std::string>(),
                          e.at("response").get<std::string>()});
  try {
    validate_observation(o);
  } catch (const ObservationError& e) {
    throw ReportError(std::string("invalid observation: ") + e.what());
  }
  return o;
}

const char* compliance_token(Compliance c) {
  return c == Compliance::Compliant ? "C" : "NC";
}

Compliance compliance_from_token(const std::string& s) {
  if (s == "C") return Compliance::Compliant;
  if (s == "NC") return Compliance::NonCompliant;
  throw ReportError("unknown compliance token: " + s);
}

json coverage_to_json(const CoverageSummary& c) {
  json per;
  for (const auto& [cat, cell] : c.per_category) {
    per[std::string(to_token(cat))] =
        json{{"fulfilled", cell.fulfilled}, {"total", cell.total}};
  }
  return json{{"per_category", std::move(per)}};
}

CoverageSummary coverage_from_json(const json& j) {
  CoverageSummary c;
  for (const auto& [key, cell] : j.at("per_category").items()) {
    auto cat = parse_category(key);
    if (!cat) throw ReportError("unknown category in coverage: " + key);
    c.per_category[*cat] = {cell.at("fulfilled").get<int>(),
                            cell.at("total").get<int>()};
  }
  return c;
}

json risk_to_json(const RiskProfile& r) {
  json counts;
  for (RiskLevel level : {RiskLevel::VeryLow, RiskLevel::Low, RiskLevel::Medium,
                          RiskLevel::High, RiskLevel::VeryHigh, RiskLevel::Extreme})
    counts[std::string(to_token(level))] = r.at(level);
  return json{{"counts", std::move(counts)}};
}

RiskProfile risk_from_json(const json& j) {
  RiskProfile r;
  for (const auto& [key, count] : j.at("counts").items()) {
    auto level = parse_risk_level(key);
    if (!level) throw ReportError("unknown risk level in profile: " + key);
    r.at(*level) = count.get<int>();
  }
  return r;
}

bool coverage_equal(const CoverageSummary& a, const CoverageSummary& b) {
  if (a.per_category.size() != b.per_category.size()) return false;
  for (const auto& [cat, cell] : a.per_category) {
    auto it = b.per_category.find(cat);
    if (it == b.per_category.end()) return false;
    if (it->second.fulfilled != cell.fulfilled || it->second.total != cell.total)
      return false;
  }
  return true;
}

// Re-judges every record of a parsed or constructed profile and verifies
// the stored verdicts; the checklist stays the single scoring authority.
void verify_target(const Checklist& checklist, const TargetAudit& target) {
  const AuditProfile& p = target.profile;
  if (p.checklist_version != checklist.version)
    throw ReportError("profile " + p.target_label + " was built against checklist " +
                      p.checklist_version + ", document carries " + checklist.version);
  if (p.records.size() != checklist.parameters.size())
    throw ReportError("profile " + p.target_label + " holds " +
                      std::to_string(p.records.size()) + " records, checklist has " +
                      std::to_string(checklist.parameters.size()));
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    const auto& record = p.records[i];
    const auto& spec = checklist.parameters[i];
    if (record.parameter_id != spec.id)
      throw ReportError("record " + std::to_string(i) + " of " + p.target_label +
                        " is out of checklist order");
    if (record.observation.parameter_id != record.parameter_id)
      throw ReportError("record and observation disagree on the parameter id for " +
                        record.parameter_id);
    Compliance fresh;
    try {
      fresh = judge_compliance(spec, record.observation.value);
    } catch (const AuditError& e) {
      throw ReportError(std::string("record for ") + record.parameter_id +
                        " cannot be scored: " + e.what());
    }
    if (fresh != record.compliance)
      throw ReportError("stored compliance for " + record.parameter_id + " of " +
                        p.target_label + " contradicts re-scoring");
  }
  if (!coverage_equal(coverage_summary(p, checklist), target.coverage))
    throw ReportError("embedded coverage summary for " + p.target_label +
                      " diverges from re-scoring");
  if (risk_profile(p, checklist).counts != target.risk.counts)
    throw ReportError("embedded risk profile for " + p.target_label +
                      " diverges from re-scoring");
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else out.push_back(c);
  }
  return out;
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#9c755f"};

}  // namespace

const TargetAudit* AuditDocument::find(std::string_view label) const {
  for (const auto& t : targets) {
    if (t.profile.target_label == label) return &t;
  }
  return nullptr;
}

AuditDocument make_document(const Checklist& checklist,
                            std::span<const AuditProfile> profiles) {
  validate_checklist(checklist);
  AuditDocument doc;
  doc.generated_at = now_iso8601();
  doc.checklist = checklist;
  for (const auto& p : profiles) {
    TargetAudit t;
    t.profile = p;
    t.coverage = coverage_summary(p, checklist);
    t.risk = risk_profile(p, checklist);
    verify_target(checklist, t);
    doc.targets.push_back(std::move(t));
  }
  return doc;
}

std::string emit_json(const AuditDocument& doc) {
  json j;
  j["tool"] = doc.tool;
  j["format_version"] = doc.format_version;
  j["generated_at"] = doc.generated_at;
  j["checklist"] = serialize_checklist(doc.checklist);
  json targets = json::array();
  for (const auto& t : doc.targets) {
    json records = json::array();
    for (const auto& r : t.profile.records) {
      records.push_back(json{{"parameter_id", r.parameter_id},
                             {"observation", observation_to_json(r.observation)},
                             {"compliance", compliance_token(r.compliance)},
                             {"rationale", r.rationale}});
    }
    targets.push_back(json{{"label", t.profile.target_label},
                           {"checklist_version", t.profile.checklist_version},
                           {"records", std::move(records)},
                           {"coverage", coverage_to_json(t.coverage)},
                           {"risk", risk_to_json(t.risk)}});
  }
  j["targets"] = std::move(targets);
  return j.dump(2) + "\n";
}

AuditDocument parse_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ReportError(std::string("document is not valid JSON: ") + e.what());
  }
  try {
    AuditDocument doc;
    doc.tool = j.at("tool").get<std::string>();
    if (doc.tool != "webaudit")
      throw ReportError("not a webaudit document (tool field: " + doc.tool + ")");
    doc.format_version = j.at("format_version").get<std::string>();
    if (doc.format_version != "1")
      throw ReportError("unsupported document format version " + doc.format_version);
    doc.generated_at = j.at("generated_at").get<std::string>();
    try {
      doc.checklist = parse_checklist(j.at("checklist").get<std::string>());
    } catch (const ChecklistError& e) {
      throw ReportError(std::string("embedded checklist is invalid: ") + e.what());
    }
    for (const auto& tj : j.at("targets")) {
      TargetAudit t;
      t.profile.target_label = tj.at("label").get<std::string>();
      t.profile.checklist_version = tj.at("checklist_version").get<std::string>();
      for (const auto& rj : tj.at("records")) {
        ComplianceRecord r;
        r.parameter_id = rj.at("parameter_id").get<std::string>();
        r.observation = observation_from_json(rj.at("observation"));
        r.compliance = compliance_from_token(rj.at("compliance").get<std::string>());
        r.rationale = rj.at("rationale").get<std::string>();
        t.profile.records.push_back(std::move(r));
      }
      t.coverage = coverage_from_json(tj.at("coverage"));
      t.risk = risk_from_json(tj.at("risk"));
      verify_target(doc.checklist, t);
      doc.targets.push_back(std::move(t));
    }
    return doc;
  } catch (const json::exception& e) {
    throw ReportError(std::string("document schema mismatch: ") + e.what());
  }
}

std::string serialize_probe_report(const ProbeReport& report) {
  json j;
  j["tool"] = "webaudit";
  j["format_version"] = "1";
  j["target_label"] = report.target_label;
  j["mode"] = std::string(to_token(report.mode));
  json obs = json::array();
  for (const auto& o : report.observations) obs.push_back(observation_to_json(o));
  j["observations"] = std::move(obs);
  json skipped = json::array();
  for (const auto& s : report.skipped)
    skipped.push_back(json{{"parameter_id", s.parameter_id}, {"reason", s.reason}});
  j["skipped"] = std::move(skipped);
  return j.dump(2) + "\n";
}

ProbeReport parse_probe_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ReportError(std::string("probe report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("tool").get<std::string>() != "webaudit")
      throw ReportError("not a webaudit probe report");
    ProbeReport report;
    report.target_label = j.at("target_label").get<std::string>();
    auto mode = parse_source(j.at("mode").get<std::string>());
    if (!mode) throw ReportError("unknown probe report mode");
    report.mode = *mode;
    for (const auto& oj : j.at("observations"))
      report.observations.push_back(observation_from_json(oj));
    for (const auto& sj : j.at("skipped"))
      report.skipped.push_back({sj.at("parameter_id").get<std::string>(),
                                sj.at("reason").get<std::string>()});
    return report;
  } catch (const json::exception& e) {
    throw ReportError(std::string("probe report schema mismatch: ") + e.what());
  }
}

std::string emit_compliance_matrix(const ProfileComparison& cmp,
                                   MatrixFormat format) {
  std::ostringstream out;
  if (format == MatrixFormat::Csv) {
    out << csv_quote("parameter") << "," << csv_quote("category") << ","
        << csv_quote("name");
    for (const auto& label : cmp.labels) out << "," << csv_quote(label);
    out << "\n";
    for (const auto& row : cmp.rows) {
      out << csv_quote(row.parameter_id) << ","
          << csv_quote(std::string(display_name(row.category))) << ","
          << csv_quote(row.name);
      for (const auto& v : row.values) out << "," << csv_quote(v.to_string());
      out << "\n";
    }
    return out.str();
  }
  out << "| Parameter | Category | Name |";
  for (const auto& label : cmp.labels) out << " " << md_escape(label) << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < cmp.labels.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& row : cmp.rows) {
    out << "| " << md_escape(row.parameter_id) << " | "
        << md_escape(std::string(display_name(row.category))) << " | "
        << md_escape(row.name) << " |";
    for (const auto& v : row.values) out << " " << md_escape(v.to_string()) << " |";
    out << "\n";
  }
  return out.str();
}

std::string emit_coverage_table(
    const std::vector<std::pair<std::string, CoverageSummary>>& summaries) {
  std::ostringstream out;
  out << "| Category |";
  for (const auto& [label, summary] : summaries) out << " " << md_escape(label) << " |";
  out << "\n| --- |";
  for (std::size_t i = 0; i < summaries.size(); ++i) out << " --- |";
  out << "\n";
  if (summaries.empty()) return out.str();
  for (Category cat : kAllCategories) {
    out << "| " << display_name(cat) << " |";
    for (const auto& [label, summary] : summaries) {
      auto it = summary.per_category.find(cat);
      if (it == summary.per_category.end()) {
        out << " 0/0 |";
      } else {
        out << " " << it->second.fulfilled << "/" << it->second.total << " |";
      }
    }
    out << "\n";
  }
  return out.str();
}

RadarChart emit_radar(
    const std::vector<std::pair<std::string, RiskProfile>>& profiles,
    RiskLevel level) {
  RadarChart chart;
  std::vector<int> counts;
  counts.reserve(profiles.size());
  int max_count = 0;
  for (const auto& [label, rp] : profiles) {
    counts.push_back(rp.at(level));
    max_count = std::max(max_count, rp.at(level));
  }
  int scale_max = std::max(max_count, 1);

  json sidecar;
  sidecar["level"] = std::string(to_token(level));
  json c;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    c[profiles[i].first] = counts[i];
  sidecar["counts"] = std::move(c);
  chart.sidecar_json = sidecar.dump(2) + "\n";

  const std::string title =
      std::string(display_name(level)) + " risk: non-compliant parameters";
  std::ostringstream svg;
  const int width = 560, height = 560;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "  <rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  svg << "  <text x=\"" << width / 2
      << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\">"
      << xml_escape(title) << "</text>\n";

  const std::size_t n = profiles.size();
  if (n >= 3) {
    const double cx = width / 2.0, cy = height / 2.0 + 10, radius = 200.0;
    const double pi = 3.14159265358979323846;
    auto point = [&](std::size_t i, double r) {
      double angle = -pi / 2 + 2 * pi * static_cast<double>(i) / static_cast<double>(n);
      return std::pair<double, double>(cx + r * std::cos(angle),
                                       cy + r * std::sin(angle));
    };
    for (int ring = 1; ring <= 4; ++ring) {
      svg << "  <circle cx=\"" << fixed1(cx) << "\" cy=\"" << fixed1(cy)
          << "\" r=\"" << fixed1(radius * ring / 4.0)
          << "\" fill=\"none\" stroke=\"#d0d0d0\"/>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto [x, y] = point(i, radius);
      svg << "  <line x1=\"" << fixed1(cx) << "\" y1=\"" << fixed1(cy)
          << "\" x2=\"" << fixed1(x) << "\" y2=\"" << fixed1(y)
          << "\" stroke=\"#b0b0b0\"/>\n";
      auto [lx, ly] = point(i, radius + 24);
      svg << "  <text x=\"" << fixed1(lx) << "\" y=\"" << fixed1(ly)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"14\">"
          << xml_escape(profiles[i].first) << " (" << counts[i] << ")</text>\n";
    }
    svg << "  <text x=\"" << fixed1(cx + 6) << "\" y=\"" << fixed1(cy - radius - 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#707070\">"
        << scale_max << "</text>\n";
    std::string points;
    for (std::size_t i = 0; i < n; ++i) {
      double r = radius * counts[i] / scale_max;
      auto [x, y] = point(i, r);
      if (!points.empty()) points += " ";
      points += fixed1(x) + "," + fixed1(y);
    }
    svg << "  <polygon points=\"" << points
        << "\" fill=\"#4e79a7\" fill-opacity=\"0.35\" stroke=\"#4e79a7\" "
           "stroke-width=\"2\"/>\n";
  } else {
    const double plot_left = 100, plot_bottom = 480, plot_height = 380;
    const double slot = (width - 2 * plot_left) / std::max<std::size_t>(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      double h = plot_height * counts[i] / scale_max;
      double x = plot_left + slot * i + slot / 2 - 40;
      svg << "  <rect x=\"" << fixed1(x) << "\" y=\"" << fixed1(plot_bottom - h)
          << "\" width=\"80\" height=\"" << fixed1(h) << "\" fill=\""
          << kPalette[i % 8] << "\"/>\n";
      svg << "  <text x=\"" << fixed1(x + 40) << "\" y=\""
          << fixed1(plot_bottom - h - 8)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"14\">"
          << counts[i] << "</text>\n";
      svg << "  <text x=\"" << fixed1(x + 40) << "\" y=\"" << fixed1(plot_bottom + 22)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"14\">"
          << xml_escape(profiles[i].first) << "</text>\n";
    }
    svg << "  <line x1=\"" << fixed1(plot_left - 20) << "\" y1=\""
        << fixed1(plot_bottom) << "\" x2=\"" << fixed1(width - plot_left + 20)
        << "\" y2=\"" << fixed1(plot_bottom) << "\" stroke=\"#404040\"/>\n";
  }
  svg << "</svg>\n";
  chart.svg = svg.str();
  return chart;
}

}  // namespace webaudit

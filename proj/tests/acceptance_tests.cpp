// Acceptance gate: end-to-end checks against frozen expectations, one
// verdict line per criterion. Exits non-zero when any criterion fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flip_suite.hpp"
#include "webaudit/checklist.hpp"
#include "webaudit/reference.hpp"
#include "webaudit/report.hpp"
#include "webaudit/risk_engine.hpp"
#include "webaudit/static_analyzer.hpp"
#include "webaudit/testbed.hpp"

using namespace webaudit;
using Clock = std::chrono::steady_clock;

namespace {

int g_failed = 0;

void verdict(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": "
            << detail << "\n";
  if (!ok) ++g_failed;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct FrozenRisk {
  const char* id;
  Likelihood likelihood;
  Impact impact;
  RiskLevel level;
};

const FrozenRisk kFrozenRisk[] = {
    {"auth_lockout", Likelihood::AlmostCertain, Impact::Significant, RiskLevel::VeryHigh},
    {"auth_captcha", Likelihood::AlmostCertain, Impact::Significant, RiskLevel::VeryHigh},
    {"auth_lockout_notice", Likelihood::Moderate, Impact::Insignificant, RiskLevel::Low},
    {"auth_pw_complexity", Likelihood::Moderate, Impact::Significant, RiskLevel::Medium},
    {"auth_pw_expiration", Likelihood::Moderate, Impact::Insignificant, RiskLevel::Low},
    {"auth_pw_reuse", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"auth_mfa_enabled", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"auth_mfa_type", Likelihood::Moderate, Impact::Insignificant, RiskLevel::Low},
    {"auth_backup_codes", Likelihood::Moderate, Impact::Significant, RiskLevel::Medium},
    {"auth_rate_limit", Likelihood::AlmostCertain, Impact::Minor, RiskLevel::High},
    {"auth_rate_limit_response", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"input_email_verification", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"input_parameterized_queries", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"input_special_chars_escaped", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"input_js_execution", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"input_html_injection", Likelihood::Moderate, Impact::Major, RiskLevel::High},
    {"input_post_only_login", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"input_cors_policy", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"input_csrf_token_present", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"input_csrf_validation", Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},
    {"input_hpp_handling", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"sess_creation", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"sess_cookie_secure", Likelihood::AlmostCertain, Impact::Major, RiskLevel::Extreme},
    {"sess_cookie_httponly", Likelihood::AlmostCertain, Impact::Major, RiskLevel::Extreme},
    {"sess_cookie_samesite", Likelihood::AlmostCertain, Impact::Major, RiskLevel::Extreme},
    {"sess_timeout", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"sess_regenerated", Likelihood::Moderate, Impact::Severe, RiskLevel::VeryHigh},
    {"sess_fixation_protection", Likelihood::AlmostCertain, Impact::Major, RiskLevel::Extreme},
    {"sess_id_in_cookies_only", Likelihood::Moderate, Impact::Severe, RiskLevel::VeryHigh},
    {"store_hash_algorithm", Likelihood::Unlikely, Impact::Severe, RiskLevel::High},
    {"store_salted_hashes", Likelihood::Unlikely, Impact::Severe, RiskLevel::High},
    {"err_reveals_username", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"err_reveals_pw_rules", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"err_failed_login_logged", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"err_unusual_flagged", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"err_logs_secure", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_csp_present", Likelihood::Unlikely, Impact::Insignificant, RiskLevel::VeryLow},
    {"hdr_csp_blocks_inline", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_csp_blocks_data_uris", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_csp_restricts_external", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_x_frame_options", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_x_content_type_options", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_hsts_present", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_hsts_max_age", Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},
    {"hdr_referrer_policy_set", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_referrer_policy_strict", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_permissions_policy", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
    {"hdr_device_features_restricted", Likelihood::Moderate, Impact::Minor, RiskLevel::Medium},
};

void criterion_1_risk_rows() {
  auto start = Clock::now();
  int matched = 0;
  std::string first_miss;
  for (const FrozenRisk& row : kFrozenRisk) {
    if (risk_level(row.likelihood, row.impact) == row.level) {
      ++matched;
    } else if (first_miss.empty()) {
      first_miss = row.id;
    }
  }
  double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "risk level matches " << matched << "/48 frozen rows in "
         << elapsed << "s";
  if (!first_miss.empty()) detail << " (first miss: " << first_miss << ")";
  verdict(1, matched == 48 && elapsed < 1.0, detail.str());
}

// Frozen per-category coverage cells, label order ChatGPT, DeepSeek, Claude,
// Gemini, Grok.
const std::map<Category, std::array<std::string, 5>> kFrozenCoverage = {
    {Category::AuthenticationSecurity, {"1/11", "0/11", "0/11", "2/11", "3/11"}},
    {Category::InputValidation, {"5/10", "3/10", "8/10", "3/10", "5/10"}},
    {Category::SessionSecurity, {"7/8", "4/8", "3/8", "8/8", "7/8"}},
    {Category::SecureStorage, {"2/2", "2/2", "0/2", "2/2", "2/2"}},
    {Category::ErrorHandling, {"2/5", "2/5", "2/5", "1/5", "3/5"}},
    {Category::HttpSecurityHeaders, {"0/12", "0/12", "0/12", "0/12", "0/12"}},
};

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  for (size_t i = 1; i + 1 < line.size(); ++i) {
    if (line[i] == '|') {
      cells.push_back(current);
      current.clear();
    } else {
      current += line[i];
    }
  }
  cells.push_back(current);
  for (std::string& c : cells) {
    size_t b = c.find_first_not_of(' ');
    size_t e = c.find_last_not_of(' ');
    c = (b == std::string::npos) ? "" : c.substr(b, e - b + 1);
  }
  return cells;
}

void criterion_2_coverage_cells(const Checklist& checklist) {
  auto start = Clock::now();
  std::vector<AuditProfile> profiles = reference::all_profiles(checklist);
  std::vector<std::pair<std::string, CoverageSummary>> summaries;
  for (const AuditProfile& p : profiles) {
    summaries.emplace_back(p.target_label, coverage_summary(p, checklist));
  }
  std::string table = emit_coverage_table(summaries);

  std::map<std::string, std::vector<std::string>> emitted;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("| ", 0) != 0 || line.find("---") != std::string::npos ||
        line.find("| Category |") == 0) {
      continue;
    }
    std::vector<std::string> cells = split_cells(line);
    if (cells.size() == 6) emitted[cells[0]] = {cells.begin() + 1, cells.end()};
  }

  int matched = 0;
  std::string first_miss;
  for (const auto& [category, expected] : kFrozenCoverage) {
    const std::string display{display_name(category)};
    auto it = emitted.find(display);
    for (size_t i = 0; i < expected.size(); ++i) {
      if (it != emitted.end() && i < it->second.size() &&
          it->second[i] == expected[i]) {
        ++matched;
      } else if (first_miss.empty()) {
        first_miss = display + " column " + std::to_string(i);
      }
    }
  }
  double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "coverage table matches " << matched
         << "/30 frozen cells in " << elapsed << "s";
  if (!first_miss.empty()) detail << " (first miss: " << first_miss << ")";
  verdict(2, matched == 30 && elapsed < 1.0, detail.str());
}

void criterion_3_extreme_counts(const Checklist& checklist) {
  const std::array<int, 5> expected = {0, 3, 4, 0, 0};
  int matched = 0;
  std::ostringstream seen;
  std::vector<AuditProfile> profiles = reference::all_profiles(checklist);
  for (size_t i = 0; i < profiles.size(); ++i) {
    RiskProfile risk = risk_profile(profiles[i], checklist);
    int extreme = risk.at(RiskLevel::Extreme);
    if (extreme == expected[i]) ++matched;
    seen << (i ? ", " : "") << profiles[i].target_label << "=" << extreme;
  }
  verdict(3, matched == 5, "extreme-risk counts {" + seen.str() + "}");
}

void criterion_4_monotonicity() {
  bool ok = true;
  for (int l = 1; l <= 5 && ok; ++l) {
    for (int i = 1; i <= 5 && ok; ++i) {
      int here = rank(risk_level(static_cast<Likelihood>(l), static_cast<Impact>(i)));
      if (l < 5 &&
          rank(risk_level(static_cast<Likelihood>(l + 1), static_cast<Impact>(i))) < here) {
        ok = false;
      }
      if (i < 5 &&
          rank(risk_level(static_cast<Likelihood>(l), static_cast<Impact>(i + 1))) < here) {
        ok = false;
      }
    }
  }
  verdict(4, ok, "risk level is monotone over all 25 likelihood-impact cells");
}

void criterion_5_flip_suite(const Checklist& checklist) {
  using namespace fliptest;
  auto start = Clock::now();
  int flipped = 0;
  std::string first_miss;
  try {
    const std::string hardened_text = serialize_testbed_config(preset("hardened"));
    std::map<std::string, Observation> compliant = scan_hardened(checklist);
    for (const FlipCase& testcase : flip_cases()) {
      const ParameterSpec* spec = checklist.find(testcase.parameter_id);
      bool ok = spec != nullptr && compliant.count(testcase.parameter_id) == 1;
      if (ok) {
        ok = judge_compliance(*spec, compliant[testcase.parameter_id].value) ==
             Compliance::Compliant;
      }
      if (ok) {
        Observation bad = observe_vulnerable(hardened_text, testcase);
        ok = judge_compliance(*spec, bad.value) == Compliance::NonCompliant;
      }
      if (ok) {
        ++flipped;
      } else if (first_miss.empty()) {
        first_miss = testcase.parameter_id;
      }
    }
  } catch (const std::exception& e) {
    if (first_miss.empty()) first_miss = e.what();
  }
  double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << flipped << "/" << flip_cases().size()
         << " probed behaviors flip both directions in " << elapsed << "s";
  if (!first_miss.empty()) detail << " (first miss: " << first_miss << ")";
  verdict(5, flipped == static_cast<int>(flip_cases().size()) &&
                 flip_cases().size() >= 25 && elapsed < 180.0,
          detail.str());
}

void criterion_6_corpus(const Checklist& checklist) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(WEBAUDIT_TEST_DATA_DIR) / "php_corpus";
  int total = 0;
  int matched = 0;
  std::string first_miss;
  std::set<std::string> files;
  try {
    std::ifstream in(dir / "labels.txt");
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> labels;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      size_t a = line.find('|');
      size_t b = line.find('|', a + 1);
      labels[line.substr(0, a)].emplace_back(line.substr(a + 1, b - a - 1),
                                             line.substr(b + 1));
    }
    for (const auto& [file, expectations] : labels) {
      files.insert(file);
      std::ifstream src(dir / file);
      std::ostringstream buf;
      buf << src.rdbuf();
      CodeCorpus corpus = CodeCorpus::from_files({{file, buf.str()}});
      ProbeReport report = run_static(corpus, checklist);
      for (const auto& [param, expected] : expectations) {
        ++total;
        bool found = false;
        for (const Observation& obs : report.observations) {
          if (obs.parameter_id != param) continue;
          found = obs.value.to_string() == expected;
          break;
        }
        if (found) {
          ++matched;
        } else if (first_miss.empty()) {
          first_miss = file + " " + param;
        }
      }
    }
  } catch (const std::exception& e) {
    if (first_miss.empty()) first_miss = e.what();
  }
  std::ostringstream detail;
  detail << "corpus classification matches " << matched << "/" << total
         << " labels across " << files.size() << " snippets";
  if (!first_miss.empty()) detail << " (first miss: " << first_miss << ")";
  verdict(6, total >= 12 && files.size() >= 12 && matched == total, detail.str());
}

ObservationValue random_value(std::mt19937& rng, const ParameterSpec& spec) {
  std::uniform_int_distribution<int> d(0, 3);
  if (spec.kind == ParameterKind::Categorical) {
    if (!spec.accepted_values.empty() && d(rng) != 0) {
      std::uniform_int_distribution<size_t> pick(0, spec.accepted_values.size() - 1);
      return ObservationValue::categorical(spec.accepted_values[pick(rng)]);
    }
    switch (d(rng)) {
      case 0: return ObservationValue::categorical("86400");
      case 1: return ObservationValue::no();
      case 2: return ObservationValue::not_applicable();
      default: return ObservationValue::unknown();
    }
  }
  switch (d(rng)) {
    case 0: return ObservationValue::yes();
    case 1: return ObservationValue::no();
    case 2: return ObservationValue::not_applicable();
    default: return ObservationValue::unknown();
  }
}

void criterion_7_round_trips(const Checklist& checklist) {
  std::mt19937 rng(48484848);
  std::uniform_int_distribution<int> skip(0, 3);
  int identical = 0;
  int stable = 0;
  const int kDocs = 100;
  std::string first_miss;
  for (int doc_index = 0; doc_index < kDocs; ++doc_index) {
    std::vector<Observation> observations;
    for (const ParameterSpec& spec : checklist.parameters) {
      if (skip(rng) == 0) continue;
      Observation obs;
      obs.parameter_id = spec.id;
      obs.value = random_value(rng, spec);
      obs.source = spec.mode == EvalMode::Static   ? Source::Static
                   : spec.mode == EvalMode::Manual ? Source::Manual
                                                   : Source::Dynamic;
      obs.captured_at = "2026-08-16T00:00:00Z";
      obs.evidence.push_back({"exchange " + std::to_string(doc_index),
                              "value " + obs.value.to_string()});
      observations.push_back(std::move(obs));
    }
    AuditProfile profile = build_profile(
        "target-" + std::to_string(doc_index), observations, checklist);
    AuditDocument doc = make_document(checklist, {&profile, 1});
    std::string text = emit_json(doc);
    if (emit_json(doc) == text) ++stable;
    try {
      if (emit_json(parse_document(text)) == text) {
        ++identical;
      } else if (first_miss.empty()) {
        first_miss = "doc " + std::to_string(doc_index) + " re-emits differently";
      }
    } catch (const std::exception& e) {
      if (first_miss.empty()) {
        first_miss = "doc " + std::to_string(doc_index) + ": " + e.what();
      }
    }
  }
  std::ostringstream detail;
  detail << identical << "/" << kDocs << " randomized documents parse back "
         << "byte-identically, " << stable << "/" << kDocs << " emit stably";
  if (!first_miss.empty()) detail << " (first miss: " << first_miss << ")";
  verdict(7, identical == kDocs && stable == kDocs, detail.str());
}

int run_cli(const std::string& binary, const std::string& args) {
  std::string command = "\"" + binary + "\" " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

void criterion_8_ci_gate(const Checklist& checklist) {
  const char* binary = std::getenv("WEBAUDIT_BIN");
  if (!binary || !*binary) {
    verdict(8, false, "WEBAUDIT_BIN is not set; cannot drive the command line");
    return;
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  std::map<std::string, int> expected = {{"Claude", 1}, {"Grok", 0}};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& [label, want] : expected) {
    AuditProfile profile = reference::profile(label, checklist);
    AuditDocument doc = make_document(checklist, {&profile, 1});
    fs::path file = dir / ("webaudit-gate-" + profile.target_label + ".json");
    std::ofstream out(file);
    out << emit_json(doc);
    out.close();
    int got = run_cli(binary, "score --document " + file.string() +
                                  " --fail-on Extreme");
    if (got != want) ok = false;
    detail << (label == "Claude" ? "" : ", ") << label << " exits " << got
           << " (want " << want << ")";
  }
  verdict(8, ok, detail.str());
}

}  // namespace

int main() {
  const Checklist checklist = default_checklist();
  criterion_1_risk_rows();
  criterion_2_coverage_cells(checklist);
  criterion_3_extreme_counts(checklist);
  criterion_4_monotonicity();
  criterion_5_flip_suite(checklist);
  criterion_6_corpus(checklist);
  criterion_7_round_trips(checklist);
  criterion_8_ci_gate(checklist);
  if (g_failed != 0) {
    std::cout << g_failed << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all 8 criteria hold\n";
  return 0;
}

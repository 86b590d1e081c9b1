// webaudit: audit a web application's login and session security against
// the built-in 48-parameter checklist, from live probes, code review,
// or recorded observations, and render the judged results.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"
#include "webaudit/reference.hpp"
#include "webaudit/report.hpp"
#include "webaudit/risk_engine.hpp"
#include "webaudit/scanner.hpp"
#include "webaudit/static_analyzer.hpp"
#include "webaudit/target_config.hpp"
#include "webaudit/testbed.hpp"

namespace {

using namespace webaudit;

// Flag misuse detected after CLI11 parsing; maps to exit 2 like any other
// usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
  } else {
    write_file(out_path, content);
  }
}

// --checklist flag wins, then WEBAUDIT_CHECKLIST, then the built-in list.
Checklist resolve_checklist(const std::string& flag_path) {
  if (!flag_path.empty()) return load_checklist_file(flag_path);
  if (const char* env = std::getenv("WEBAUDIT_CHECKLIST"); env && *env) {
    return load_checklist_file(env);
  }
  return default_checklist();
}

RiskLevel parse_level_or_throw(const std::string& text) {
  auto level = parse_risk_level(text);
  if (!level) throw UsageError("unknown risk level: " + text);
  return *level;
}

struct ChecklistOpts {
  std::string file;
  std::string out;
  bool validate = false;
};

int run_checklist(const ChecklistOpts& opt) {
  Checklist list = resolve_checklist(opt.file);
  validate_checklist(list);
  if (opt.validate) {
    std::cout << "checklist OK: version " << list.version << ", "
              << list.parameters.size() << " parameters\n";
    return 0;
  }
  emit(opt.out, serialize_checklist(list));
  return 0;
}

struct ScanOpts {
  std::string target;
  std::string checklist;
  std::string label;
  std::string out;
  std::string sql_errors;
  std::string captcha_markers;
  std::string nonce_patterns;
  int parallel = 4;
  bool destructive = false;
};

int run_scan_cmd(const ScanOpts& opt) {
  Checklist list = resolve_checklist(opt.checklist);
  TargetConfig cfg = load_target_config_file(opt.target);
  if (!opt.label.empty()) cfg.label = opt.label;
  if (opt.destructive) cfg.destructive_allowed = true;

  ProbeSignatures sig = ProbeSignatures::defaults();
  if (!opt.sql_errors.empty())
    sig.sql_errors = ProbeSignatures::parse_lines(read_file(opt.sql_errors));
  if (!opt.captcha_markers.empty())
    sig.captcha_markers = ProbeSignatures::parse_lines(read_file(opt.captcha_markers));
  if (!opt.nonce_patterns.empty())
    sig.nonce_patterns = ProbeSignatures::parse_lines(read_file(opt.nonce_patterns));

  Scanner scanner(cfg, sig, opt.parallel);
  ProbeReport report = scanner.run_scan(list);
  emit(opt.out, serialize_probe_report(report));
  std::cerr << "scanned " << cfg.base_url << ": " << report.observations.size()
            << " observations, " << report.skipped.size() << " skipped\n";
  return 0;
}

struct AnalyzeOpts {
  std::string code_dir;
  std::string rules;
  std::string checklist;
  std::string label = "static-corpus";
  std::string out;
};

int run_analyze(const AnalyzeOpts& opt) {
  Checklist list = resolve_checklist(opt.checklist);
  CodeCorpus corpus = CodeCorpus::from_directory(opt.code_dir);
  std::vector<PatternRule> extra;
  if (!opt.rules.empty()) extra = load_rules_file(opt.rules);
  ProbeReport report = run_static(corpus, list, extra, opt.label);
  emit(opt.out, serialize_probe_report(report));
  std::cerr << "analyzed " << corpus.files().size() << " files: "
            << report.observations.size() << " observations\n";
  return 0;
}

struct ScoreOpts {
  std::vector<std::string> probe_reports;
  std::vector<std::string> attestations;
  std::vector<std::string> references;
  std::string document;
  std::string checklist;
  std::string label;
  std::string out;
  std::string fail_on;
};

// "id|value|note" with the note optional.
Observation parse_attestation(const std::string& text) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : text) {
    if (c == '|') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  if (fields.size() < 2 || fields.size() > 3) {
    throw UsageError("attestation must be id|value or id|value|note: " + text);
  }
  auto value = ObservationValue::from_string(fields[1]);
  if (!value) throw UsageError("attestation has an empty value: " + text);
  Observation obs;
  obs.parameter_id = fields[0];
  obs.value = *value;
  obs.source = Source::Manual;
  obs.captured_at = now_iso8601();
  obs.note = fields.size() == 3 ? fields[2] : "operator attestation";
  return obs;
}

int run_score(const ScoreOpts& opt) {
  std::optional<AuditDocument> loaded;
  if (!opt.document.empty()) loaded = parse_document(read_file(opt.document));

  Checklist list =
      (!opt.checklist.empty() || !loaded)
          ? resolve_checklist(opt.checklist)
          : loaded->checklist;

  std::vector<AuditProfile> profiles;
  if (loaded) {
    for (const auto& target : loaded->targets) profiles.push_back(target.profile);
  }

  std::vector<Observation> scored;
  std::string scored_label = opt.label;
  for (const auto& path : opt.probe_reports) {
    ProbeReport report = parse_probe_report(read_file(path));
    if (scored_label.empty()) scored_label = report.target_label;
    scored.insert(scored.end(), report.observations.begin(),
                  report.observations.end());
  }
  for (const auto& text : opt.attestations) {
    scored.push_back(parse_attestation(text));
  }
  if (!scored.empty()) {
    if (scored_label.empty()) {
      throw UsageError("attestation-only scoring needs --label");
    }
    profiles.push_back(build_profile(scored_label, scored, list));
  }
  for (const auto& name : opt.references) {
    profiles.push_back(reference::profile(name, list));
  }
  if (profiles.empty()) {
    throw UsageError(
        "nothing to score: give --probe-report, --attest, --reference, or "
        "--document");
  }

  AuditDocument doc = make_document(list, profiles);
  emit(opt.out, emit_json(doc));

  if (!opt.fail_on.empty()) {
    RiskLevel gate = parse_level_or_throw(opt.fail_on);
    bool tripped = false;
    for (const auto& target : doc.targets) {
      int n = target.risk.at_or_above(gate);
      if (n > 0) {
        std::cerr << "gate: " << target.profile.target_label << " has " << n
                  << " non-compliant parameter" << (n == 1 ? "" : "s")
                  << " at or above " << display_name(gate) << "\n";
        tripped = true;
      }
    }
    if (tripped) return 1;
  }
  return 0;
}

struct ReportOpts {
  std::string document;
  std::string out_dir = ".";
};

std::string level_slug(RiskLevel level) {
  std::string slug{to_token(level)};
  for (char& c : slug) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return slug;
}

int run_report(const ReportOpts& opt) {
  AuditDocument doc = parse_document(read_file(opt.document));
  std::vector<AuditProfile> profiles;
  std::vector<std::pair<std::string, CoverageSummary>> coverage;
  std::vector<std::pair<std::string, RiskProfile>> risk;
  for (const auto& target : doc.targets) {
    profiles.push_back(target.profile);
    coverage.emplace_back(target.profile.target_label, target.coverage);
    risk.emplace_back(target.profile.target_label, target.risk);
  }
  ProfileComparison cmp = compare_profiles(profiles, doc.checklist);

  std::filesystem::create_directories(opt.out_dir);
  auto path = [&](const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };
  write_file(path("matrix.csv"), emit_compliance_matrix(cmp, MatrixFormat::Csv));
  write_file(path("matrix.md"), emit_compliance_matrix(cmp, MatrixFormat::Markdown));
  write_file(path("coverage.md"), emit_coverage_table(coverage));
  std::cout << "matrix.csv\nmatrix.md\ncoverage.md\n";
  for (RiskLevel level : {RiskLevel::VeryLow, RiskLevel::Low, RiskLevel::Medium,
                          RiskLevel::High, RiskLevel::VeryHigh, RiskLevel::Extreme}) {
    RadarChart chart = emit_radar(risk, level);
    std::string base = "radar-" + level_slug(level);
    write_file(path(base + ".svg"), chart.svg);
    write_file(path(base + ".json"), chart.sidecar_json);
    std::cout << base << ".svg\n" << base << ".json\n";
  }
  return 0;
}

struct TestbedOpts {
  std::string preset_name;
  std::string config_file;
  std::string emit_target;
  int port = -1;
};

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int run_testbed(const TestbedOpts& opt) {
  if (opt.preset_name.empty() == opt.config_file.empty()) {
    throw UsageError("give exactly one of --preset or --config");
  }
  TestbedConfig cfg = opt.config_file.empty()
                          ? preset(opt.preset_name)
                          : load_testbed_config_file(opt.config_file);
  if (opt.port >= 0) cfg.listen_port = opt.port;

  Testbed bed(cfg);
  std::cout << "listening on " << bed.base_url() << "\n"
            << "account: " << bed.account_username() << " / "
            << bed.account_password() << "\n";
  if (cfg.mfa != MfaMode::Off) {
    std::cout << "mfa code: " << bed.mfa_code() << "\n";
  }
  std::cout << "reset endpoint: POST /_testbed/reset\n"
            << "mail sink: GET /_testbed/mail\n"
            << std::flush;
  if (!opt.emit_target.empty()) {
    write_file(opt.emit_target, serialize_target_config(bed.target_config()));
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::cout << "shutting down\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security compliance auditor for web application logins"};
  app.require_subcommand(1);
  int rc = 0;

  ChecklistOpts checklist_opt;
  auto* checklist_cmd =
      app.add_subcommand("checklist", "Print or validate the audit checklist");
  checklist_cmd->add_option("--file", checklist_opt.file,
                            "Checklist file (default: WEBAUDIT_CHECKLIST or built-in)");
  checklist_cmd->add_flag("--validate", checklist_opt.validate,
                          "Validate and report instead of printing");
  checklist_cmd->add_option("--out", checklist_opt.out, "Write to file instead of stdout");
  checklist_cmd->callback([&] { rc = run_checklist(checklist_opt); });

  ScanOpts scan_opt;
  auto* scan_cmd = app.add_subcommand("scan", "Probe a live target over HTTP");
  scan_cmd->add_option("--target", scan_opt.target, "Target config file")->required();
  scan_cmd->add_option("--checklist", scan_opt.checklist, "Checklist file");
  scan_cmd->add_option("--label", scan_opt.label, "Override the target label");
  scan_cmd->add_option("--out", scan_opt.out, "Probe report output file");
  scan_cmd->add_option("--parallel", scan_opt.parallel, "Concurrent read-only probes")
      ->check(CLI::Range(1, 32));
  scan_cmd->add_flag("--destructive", scan_opt.destructive,
                     "Allow state-mutating probes (lockout, rate limit, registration)");
  scan_cmd->add_option("--sql-errors", scan_opt.sql_errors,
                       "SQL error signature list, one pattern per line");
  scan_cmd->add_option("--captcha-markers", scan_opt.captcha_markers,
                       "CAPTCHA marker list, one pattern per line");
  scan_cmd->add_option("--nonce-patterns", scan_opt.nonce_patterns,
                       "Nonce regex list, one pattern per line");
  scan_cmd->callback([&] { rc = run_scan_cmd(scan_opt); });

  AnalyzeOpts analyze_opt;
  auto* analyze_cmd = app.add_subcommand("analyze", "Review source code patterns");
  analyze_cmd->add_option("--code", analyze_opt.code_dir, "Source directory")->required();
  analyze_cmd->add_option("--rules", analyze_opt.rules, "Extra pattern rules file");
  analyze_cmd->add_option("--checklist", analyze_opt.checklist, "Checklist file");
  analyze_cmd->add_option("--label", analyze_opt.label, "Target label");
  analyze_cmd->add_option("--out", analyze_opt.out, "Probe report output file");
  analyze_cmd->callback([&] { rc = run_analyze(analyze_opt); });

  ScoreOpts score_opt;
  auto* score_cmd =
      app.add_subcommand("score", "Merge observations, judge compliance, emit a document");
  score_cmd->add_option("--probe-report", score_opt.probe_reports,
                        "Probe report file (repeatable; merged into one target)");
  score_cmd->add_option("--attest", score_opt.attestations,
                        "Manual observation as id|value|note (repeatable)");
  score_cmd->add_option("--reference", score_opt.references,
                        "Add a bundled reference audit as a target (repeatable)");
  score_cmd->add_option("--document", score_opt.document,
                        "Existing audit document to re-score and extend");
  score_cmd->add_option("--checklist", score_opt.checklist, "Checklist file");
  score_cmd->add_option("--label", score_opt.label, "Label for the merged target");
  score_cmd->add_option("--out", score_opt.out, "Document output file");
  score_cmd->add_option("--fail-on", score_opt.fail_on,
                        "Exit 1 when any target has a non-compliant parameter at or "
                        "above this risk level");
  score_cmd->callback([&] { rc = run_score(score_opt); });

  ReportOpts report_opt;
  auto* report_cmd =
      app.add_subcommand("report", "Render tables and charts from a document");
  report_cmd->add_option("--document", report_opt.document, "Audit document file")
      ->required();
  report_cmd->add_option("--out-dir", report_opt.out_dir, "Output directory");
  report_cmd->callback([&] { rc = run_report(report_opt); });

  TestbedOpts testbed_opt;
  auto* testbed_cmd =
      app.add_subcommand("testbed", "Run the toggleable fixture application");
  testbed_cmd->add_option("--preset", testbed_opt.preset_name,
                          "hardened, vulnerable, chatgpt, deepseek, claude, gemini, grok");
  testbed_cmd->add_option("--config", testbed_opt.config_file, "Testbed config file");
  testbed_cmd->add_option("--port", testbed_opt.port, "Listen port (default: ephemeral)");
  testbed_cmd->add_option("--emit-target", testbed_opt.emit_target,
                          "Write a matching scanner target config");
  testbed_cmd->callback([&] { rc = run_testbed(testbed_opt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "webaudit: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "webaudit: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

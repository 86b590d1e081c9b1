#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"

namespace webaudit {

class AnalyzerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CodeFile {
  std::string path;
  std::string content;
};

// A set of source files to review. Only PHP-family files take part in the
// pattern analysis; anything else is carried along for inventory purposes.
class CodeCorpus {
 public:
  static CodeCorpus from_directory(const std::string& dir);
  static CodeCorpus from_files(std::vector<CodeFile> files);

  const std::vector<CodeFile>& files() const { return files_; }
  std::vector<const CodeFile*> code_files() const;
  bool empty() const { return files_.empty(); }

 private:
  std::vector<CodeFile> files_;
};

// One line-oriented review rule.
//
// `pattern` is a case-insensitive regular expression applied to every line
// of every code file. When `context` is non-empty the same line must match
// it as well. Rules that share a parameter_id are tried in listed order and
// the first one that matches anywhere decides the parameter with
// `verdict_on_match`. If none of them match, the first rule of the group
// with a verdict_on_absence other than "-" decides it instead.
//
// Verdicts are "Yes", "No", "NA", "Unknown", any other text (recorded as a
// categorical value), or "-" for no verdict.
//
// Text form: id|parameter_id|pattern|context|verdict_on_match|verdict_on_absence
// with backslash escaping for literal pipes inside fields.
struct PatternRule {
  std::string id;
  std::string parameter_id;
  std::string pattern;
  std::string context;
  std::string verdict_on_match;
  std::string verdict_on_absence;
};

// Built-in rules for the parameters that are evaluated from code review by
// default: query construction, hash algorithm, salting, and failed-login
// logging.
std::vector<PatternRule> default_rules();

std::vector<PatternRule> parse_rules(const std::string& text);
std::string serialize_rules(const std::vector<PatternRule>& rules);
std::vector<PatternRule> load_rules_file(const std::string& path);

// Runs rules against the corpus and returns one observation per distinct
// parameter_id, in first-appearance order.
std::vector<Observation> apply_rules(const CodeCorpus& corpus,
                                     const std::vector<PatternRule>& rules);

std::vector<Observation> analyze_password_storage(const CodeCorpus& corpus);
std::vector<Observation> analyze_sql_construction(const CodeCorpus& corpus);
std::vector<Observation> analyze_output_escaping(const CodeCorpus& corpus);
std::vector<Observation> analyze_session_and_logging(const CodeCorpus& corpus);

// Full code review: the four analyzers above, with any parameter covered by
// `extra_rules` re-decided by those rules instead. Emits ten observations:
// the four code-reviewed parameters plus advisory readings of output
// escaping, session cookie flags, and login-time id regeneration that a
// live probe can later override.
ProbeReport run_static(const CodeCorpus& corpus, const Checklist& checklist,
                       const std::vector<PatternRule>& extra_rules = {},
                       const std::string& target_label = "static-corpus");

}  // namespace webaudit

#include "webaudit/static_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace webaudit {

namespace {

namespace fs = std::filesystem;

bool is_code_path(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".php" || ext == ".inc" || ext == ".phtml";
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string clip(std::string s, std::size_t n = 200) {
  if (s.size() > n) s = s.substr(0, n) + "...";
  return s;
}

std::vector<std::string> split_lines(const std::string& content) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : content) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

Observation static_obs(std::string id, ObservationValue value,
                       std::vector<EvidencePair> ev, std::string note = {}) {
  Observation o;
  o.parameter_id = std::move(id);
  o.value = std::move(value);
  o.evidence = std::move(ev);
  o.source = Source::Static;
  o.captured_at = now_iso8601();
  o.note = std::move(note);
  validate_observation(o);
  return o;
}

ObservationValue verdict_value(const std::string& token) {
  auto v = ObservationValue::from_string(token);
  if (!v) throw AnalyzerError("empty verdict token");
  return *v;
}

struct LineHit {
  const CodeFile* file;
  std::size_t line_no;
  std::string line;
};

}  // namespace

CodeCorpus CodeCorpus::from_directory(const std::string& dir) {
  fs::path root(dir);
  if (!fs::exists(root) || !fs::is_directory(root))
    throw AnalyzerError("code directory not found: " + dir);
  std::vector<CodeFile> files;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    files.push_back({fs::relative(p, root).generic_string(), buf.str()});
  }
  if (files.empty()) throw AnalyzerError("code directory is empty: " + dir);
  return from_files(std::move(files));
}

CodeCorpus CodeCorpus::from_files(std::vector<CodeFile> files) {
  if (files.empty()) throw AnalyzerError("code corpus has no files");
  CodeCorpus c;
  c.files_ = std::move(files);
  return c;
}

std::vector<const CodeFile*> CodeCorpus::code_files() const {
  std::vector<const CodeFile*> out;
  for (const auto& f : files_) {
    if (is_code_path(fs::path(f.path))) out.push_back(&f);
  }
  return out;
}

std::vector<PatternRule> default_rules() {
  return {
      {"sql-interpolated", "input_parameterized_queries",
       "\"(SELECT|INSERT|UPDATE|DELETE)[^\"]*\\$\\w+", "", "No", "-"},
      {"sql-concatenated", "input_parameterized_queries",
       "['\"]\\s*\\.\\s*\\$\\w+|\\$\\w+\\s*\\.\\s*['\"]",
       "SELECT|INSERT|UPDATE|DELETE|WHERE|FROM", "No", "-"},
      {"sql-prepared", "input_parameterized_queries",
       "prepare\\s*\\(", "\\?|:[a-z_]+", "Yes", "-"},
      {"sql-bound", "input_parameterized_queries",
       "bind_param\\s*\\(|bindParam\\s*\\(|bindValue\\s*\\(", "", "Yes", "NA"},

      {"hash-fast-unsalted", "store_hash_algorithm",
       "\\b(md5|sha1)\\s*\\(", "pass|pwd", "No", "-"},
      {"hash-argon", "store_hash_algorithm", "PASSWORD_ARGON2", "", "Argon2", "-"},
      {"hash-pbkdf2", "store_hash_algorithm", "hash_pbkdf2\\s*\\(", "", "PBKDF2",
       "-"},
      {"hash-bcrypt", "store_hash_algorithm",
       "password_hash\\s*\\(|PASSWORD_BCRYPT|PASSWORD_DEFAULT", "", "bcrypt", "-"},
      {"hash-plaintext", "store_hash_algorithm",
       "VALUES[^;]*\\$(password|pass|pwd)\\b", "INSERT", "No", "NA"},

      {"salt-explicit", "store_salted_hashes",
       "\\b(md5|sha1|hash)\\s*\\([^)]*salt", "", "Yes", "-"},
      {"salt-automatic", "store_salted_hashes", "password_hash\\s*\\(", "", "Yes",
       "-"},
      {"salt-pbkdf2", "store_salted_hashes", "hash_pbkdf2\\s*\\(", "", "Yes", "-"},
      {"salt-missing", "store_salted_hashes",
       "\\b(md5|sha1)\\s*\\(\\s*\\$(password|pass|pwd)", "", "No", "NA"},

      {"login-logged", "err_failed_login_logged",
       "(error_log|syslog|->\\s*log|log_message|logger)\\s*\\(",
       "fail|invalid|attempt|login", "Yes", "No"},
  };
}

std::vector<PatternRule> parse_rules(const std::string& text) {
  std::vector<PatternRule> rules;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields(1);
    bool escaped = false;
    for (char c : line) {
      if (escaped) {
        fields.back().push_back(c);
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '|') {
        fields.emplace_back();
      } else {
        fields.back().push_back(c);
      }
    }
    if (fields.size() != 6)
      throw AnalyzerError("rules line " + std::to_string(line_no) + ": expected 6 fields, got " +
                          std::to_string(fields.size()));
    PatternRule r{trim(fields[0]), trim(fields[1]), trim(fields[2]),
                  trim(fields[3]), trim(fields[4]), trim(fields[5])};
    if (r.id.empty() || r.parameter_id.empty() || r.pattern.empty() ||
        r.verdict_on_match.empty() || r.verdict_on_absence.empty())
      throw AnalyzerError("rules line " + std::to_string(line_no) +
                          ": id, parameter_id, pattern, and verdicts are required");
    try {
      std::regex probe(r.pattern, std::regex::icase);
      if (!r.context.empty() && r.context != "-")
        std::regex context_probe(r.context, std::regex::icase);
    } catch (const std::regex_error& e) {
      throw AnalyzerError("rules line " + std::to_string(line_no) +
                          ": bad regular expression: " + e.what());
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::string serialize_rules(const std::vector<PatternRule>& rules) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '|' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  };
  std::string out;
  for (const auto& r : rules) {
    out += escape(r.id) + "|" + escape(r.parameter_id) + "|" + escape(r.pattern) +
           "|" + escape(r.context) + "|" + escape(r.verdict_on_match) + "|" +
           escape(r.verdict_on_absence) + "\n";
  }
  return out;
}

std::vector<PatternRule> load_rules_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalyzerError("cannot open rules file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str());
}

std::vector<Observation> apply_rules(const CodeCorpus& corpus,
                                     const std::vector<PatternRule>& rules) {
  std::vector<std::string> param_order;
  std::map<std::string, std::vector<const PatternRule*>> grouped;
  for (const auto& r : rules) {
    if (!grouped.count(r.parameter_id)) param_order.push_back(r.parameter_id);
    grouped[r.parameter_id].push_back(&r);
  }

  auto code = corpus.code_files();
  std::map<const PatternRule*, std::optional<LineHit>> hits;
  for (const auto& r : rules) {
    std::regex pattern(r.pattern, std::regex::icase);
    std::optional<std::regex> context;
    if (!r.context.empty() && r.context != "-")
      context.emplace(r.context, std::regex::icase);
    std::optional<LineHit> hit;
    for (const CodeFile* f : code) {
      auto lines = split_lines(f->content);
      for (std::size_t i = 0; i < lines.size() && !hit; ++i) {
        if (!std::regex_search(lines[i], pattern)) continue;
        if (context && !std::regex_search(lines[i], *context)) continue;
        hit = LineHit{f, i + 1, lines[i]};
      }
      if (hit) break;
    }
    hits[&r] = hit;
  }

  std::vector<Observation> out;
  for (const auto& param : param_order) {
    const auto& group = grouped[param];
    const PatternRule* matched = nullptr;
    for (const PatternRule* r : group) {
      if (hits[r]) {
        matched = r;
        break;
      }
    }
    if (matched) {
      const LineHit& h = *hits[matched];
      out.push_back(static_obs(
          param, verdict_value(matched->verdict_on_match),
          {EvidencePair{h.file->path + ":" + std::to_string(h.line_no),
                        clip(trim(h.line))}},
          "rule " + matched->id));
      continue;
    }
    const PatternRule* absence = nullptr;
    for (const PatternRule* r : group) {
      if (r->verdict_on_absence != "-") {
        absence = r;
        break;
      }
    }
    if (absence) {
      out.push_back(static_obs(param, verdict_value(absence->verdict_on_absence),
                               {},
                               "no pattern matched; defaulted by rule " +
                                   absence->id));
    } else {
      out.push_back(static_obs(param, ObservationValue::unknown(), {},
                               "no pattern matched and no default verdict"));
    }
  }
  return out;
}

namespace {

std::vector<PatternRule> rules_for(const std::string& parameter_id) {
  std::vector<PatternRule> out;
  for (auto& r : default_rules()) {
    if (r.parameter_id == parameter_id) out.push_back(std::move(r));
  }
  return out;
}

std::vector<PatternRule> rules_for(std::initializer_list<const char*> ids) {
  std::vector<PatternRule> out;
  for (const char* id : ids) {
    auto part = rules_for(id);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// First line in the corpus matching `re`, if any.
std::optional<LineHit> find_line(const std::vector<const CodeFile*>& code,
                                 const std::regex& re) {
  for (const CodeFile* f : code) {
    auto lines = split_lines(f->content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (std::regex_search(lines[i], re))
        return LineHit{f, i + 1, lines[i]};
    }
  }
  return std::nullopt;
}

EvidencePair hit_evidence(const LineHit& h) {
  return {h.file->path + ":" + std::to_string(h.line_no), clip(trim(h.line))};
}

Observation cookie_flag_obs(const std::vector<const CodeFile*>& code,
                            const std::string& parameter_id,
                            const std::string& array_key,
                            const std::string& ini_key) {
  const std::regex on("['\"]" + array_key + "['\"]\\s*=>\\s*(true|1)\\b|" +
                          "ini_set\\s*\\(\\s*['\"]" + ini_key +
                          "['\"]\\s*,\\s*['\"]?(1|true)",
                      std::regex::icase);
  const std::regex off("['\"]" + array_key + "['\"]\\s*=>\\s*(false|0)\\b|" +
                           "ini_set\\s*\\(\\s*['\"]" + ini_key +
                           "['\"]\\s*,\\s*['\"]?(0|false)",
                       std::regex::icase);
  if (auto h = find_line(code, on))
    return static_obs(parameter_id, ObservationValue::yes(), {hit_evidence(*h)});
  if (auto h = find_line(code, off))
    return static_obs(parameter_id, ObservationValue::no(), {hit_evidence(*h)});
  return static_obs(parameter_id, ObservationValue::unknown(), {},
                    "no cookie policy directive in code");
}

}  // namespace

std::vector<Observation> analyze_password_storage(const CodeCorpus& corpus) {
  return apply_rules(corpus,
                     rules_for({"store_hash_algorithm", "store_salted_hashes"}));
}

std::vector<Observation> analyze_sql_construction(const CodeCorpus& corpus) {
  return apply_rules(corpus, rules_for("input_parameterized_queries"));
}

std::vector<Observation> analyze_output_escaping(const CodeCorpus& corpus) {
  auto code = corpus.code_files();
  static const std::regex assign_re("\\$(\\w+)\\s*=\\s*(.+)$");
  static const std::regex superglobal_re("\\$_(GET|POST|REQUEST)\\b");
  static const std::regex escape_re("htmlspecialchars|htmlentities",
                                    std::regex::icase);
  static const std::regex echo_re("^\\s*(echo|print)\\b(.*)$");
  static const std::regex var_re("\\$(\\w+)");

  std::optional<LineHit> raw_hit;
  std::optional<LineHit> escaped_hit;
  for (const CodeFile* f : code) {
    std::set<std::string> tainted;
    std::set<std::string> sanitized;
    auto lines = split_lines(f->content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string& line = lines[i];
      std::smatch m;
      if (std::regex_search(line, m, assign_re) &&
          std::regex_search(m[2].str(), superglobal_re)) {
        if (std::regex_search(m[2].str(), escape_re))
          sanitized.insert(m[1].str());
        else
          tainted.insert(m[1].str());
        continue;
      }
      if (!std::regex_search(line, m, echo_re)) continue;
      const std::string expr = m[2].str();
      bool touches_input = std::regex_search(expr, superglobal_re);
      bool touches_sanitized = false;
      auto begin = std::sregex_iterator(expr.begin(), expr.end(), var_re);
      for (auto it = begin; it != std::sregex_iterator{}; ++it) {
        const std::string var = (*it)[1].str();
        if (tainted.count(var)) touches_input = true;
        if (sanitized.count(var)) touches_sanitized = true;
      }
      if (touches_input) {
        if (std::regex_search(line, escape_re)) {
          if (!escaped_hit) escaped_hit = LineHit{f, i + 1, line};
        } else if (!raw_hit) {
          raw_hit = LineHit{f, i + 1, line};
        }
      } else if (touches_sanitized && !escaped_hit) {
        escaped_hit = LineHit{f, i + 1, line};
      }
    }
  }

  std::vector<Observation> out;
  if (raw_hit) {
    auto ev = hit_evidence(*raw_hit);
    out.push_back(static_obs("input_js_execution", ObservationValue::yes(), {ev},
                             "request input echoed without encoding"));
    out.push_back(static_obs("input_html_injection", ObservationValue::yes(),
                             {ev}, "request input echoed without encoding"));
  } else if (escaped_hit) {
    auto ev = hit_evidence(*escaped_hit);
    out.push_back(static_obs("input_js_execution", ObservationValue::no(), {ev},
                             "reflected input is HTML-encoded"));
    out.push_back(static_obs("input_html_injection", ObservationValue::no(), {ev},
                             "reflected input is HTML-encoded"));
  } else {
    out.push_back(static_obs("input_js_execution", ObservationValue::unknown(),
                             {}, "no reflection of request input found"));
    out.push_back(static_obs("input_html_injection", ObservationValue::unknown(),
                             {}, "no reflection of request input found"));
  }
  return out;
}

std::vector<Observation> analyze_session_and_logging(const CodeCorpus& corpus) {
  auto code = corpus.code_files();
  std::vector<Observation> out =
      apply_rules(corpus, rules_for("err_failed_login_logged"));

  out.push_back(cookie_flag_obs(code, "sess_cookie_secure", "secure",
                                "session\\.cookie_secure"));
  out.push_back(cookie_flag_obs(code, "sess_cookie_httponly", "httponly",
                                "session\\.cookie_httponly"));
  {
    static const std::regex strict(
        "['\"]samesite['\"]\\s*=>\\s*['\"](Strict|Lax)['\"]|"
        "ini_set\\s*\\(\\s*['\"]session\\.cookie_samesite['\"]\\s*,\\s*['\"](Strict|Lax)",
        std::regex::icase);
    static const std::regex none(
        "['\"]samesite['\"]\\s*=>\\s*['\"]None['\"]|"
        "ini_set\\s*\\(\\s*['\"]session\\.cookie_samesite['\"]\\s*,\\s*['\"]None",
        std::regex::icase);
    if (auto h = find_line(code, strict))
      out.push_back(static_obs("sess_cookie_samesite", ObservationValue::yes(),
                               {hit_evidence(*h)}));
    else if (auto h2 = find_line(code, none))
      out.push_back(static_obs("sess_cookie_samesite", ObservationValue::no(),
                               {hit_evidence(*h2)},
                               "SameSite explicitly disabled"));
    else
      out.push_back(static_obs("sess_cookie_samesite", ObservationValue::unknown(),
                               {}, "no cookie policy directive in code"));
  }
  {
    static const std::regex regen("session_regenerate_id\\s*\\(");
    static const std::regex start("session_start\\s*\\(");
    if (auto h = find_line(code, regen)) {
      out.push_back(static_obs("sess_regenerated", ObservationValue::yes(),
                               {hit_evidence(*h)}));
    } else if (auto h2 = find_line(code, start)) {
      out.push_back(static_obs("sess_regenerated", ObservationValue::no(),
                               {hit_evidence(*h2)},
                               "sessions in use but the id is never regenerated"));
    } else {
      out.push_back(static_obs("sess_regenerated", ObservationValue::unknown(),
                               {}, "no session handling found in code"));
    }
  }
  return out;
}

ProbeReport run_static(const CodeCorpus& corpus, const Checklist& checklist,
                       const std::vector<PatternRule>& extra_rules,
                       const std::string& target_label) {
  for (const auto& r : extra_rules) {
    if (!checklist.find(r.parameter_id))
      throw AnalyzerError("rule " + r.id + " names unknown parameter " +
                          r.parameter_id);
  }

  ProbeReport report;
  report.target_label = target_label;
  report.mode = Source::Static;

  if (corpus.code_files().empty()) {
    for (const auto* spec : checklist.by_mode(EvalMode::Static)) {
      report.observations.push_back(
          static_obs(spec->id, ObservationValue::not_applicable(), {},
                     "corpus contains no analyzable code"));
    }
    return report;
  }

  std::vector<Observation> obs;
  auto append = [&](std::vector<Observation> batch) {
    obs.insert(obs.end(), std::make_move_iterator(batch.begin()),
               std::make_move_iterator(batch.end()));
  };
  append(analyze_sql_construction(corpus));
  append(analyze_password_storage(corpus));
  append(analyze_output_escaping(corpus));
  append(analyze_session_and_logging(corpus));

  if (!extra_rules.empty()) {
    auto overrides = apply_rules(corpus, extra_rules);
    for (auto& o : overrides) {
      auto it = std::find_if(obs.begin(), obs.end(), [&](const Observation& e) {
        return e.parameter_id == o.parameter_id;
      });
      if (it != obs.end())
        *it = std::move(o);
      else
        obs.push_back(std::move(o));
    }
  }

  std::stable_sort(obs.begin(), obs.end(),
                   [&](const Observation& a, const Observation& b) {
                     return checklist.index_of(a.parameter_id) <
                            checklist.index_of(b.parameter_id);
                   });
  report.observations = std::move(obs);
  return report;
}

}  // namespace webaudit

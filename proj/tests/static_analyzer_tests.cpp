#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/static_analyzer.hpp"

using namespace webaudit;

namespace {

std::string corpus_dir() { return std::string(WEBAUDIT_TEST_DATA_DIR) + "/php_corpus"; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Label {
  std::string file;
  std::string parameter_id;
  std::string expected;
};

std::vector<Label> load_labels() {
  std::vector<Label> out;
  std::istringstream in(slurp(corpus_dir() + "/labels.txt"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    size_t a = line.find('|');
    size_t b = line.find('|', a + 1);
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    out.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
  }
  return out;
}

const Observation* find_obs(const ProbeReport& report, const std::string& id) {
  for (const auto& o : report.observations) {
    if (o.parameter_id == id) return &o;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("every labeled corpus snippet classifies exactly as labeled") {
  const Checklist& list = default_checklist();
  std::vector<Label> labels = load_labels();
  REQUIRE(labels.size() >= 12);

  std::set<std::string> files;
  for (const auto& l : labels) files.insert(l.file);
  REQUIRE(files.size() >= 12);

  std::map<std::string, ProbeReport> reports;
  for (const auto& file : files) {
    CodeCorpus corpus =
        CodeCorpus::from_files({{file, slurp(corpus_dir() + "/" + file)}});
    reports.emplace(file, run_static(corpus, list));
  }

  for (const auto& label : labels) {
    CAPTURE(label.file);
    CAPTURE(label.parameter_id);
    const Observation* obs = find_obs(reports.at(label.file), label.parameter_id);
    REQUIRE(obs != nullptr);
    CHECK(obs->value.to_string() == label.expected);
  }
}

TEST_CASE("analysis of the whole corpus directory carries file evidence") {
  const Checklist& list = default_checklist();
  CodeCorpus corpus = CodeCorpus::from_directory(corpus_dir());
  CHECK(corpus.files().size() >= 15);
  CHECK(corpus.code_files().size() >= 15);

  ProbeReport report = run_static(corpus, list);
  CHECK(report.mode == Source::Static);
  for (const auto& o : report.observations) {
    if (o.value.decided()) {
      CAPTURE(o.parameter_id);
      REQUIRE(!o.evidence.empty());
      // Static evidence cites file:line.
      CHECK(o.evidence[0].request.find(".php:") != std::string::npos);
    }
  }
}

TEST_CASE("built-in rules cover exactly the code-reviewed parameters") {
  const Checklist& list = default_checklist();
  std::set<std::string> rule_params;
  for (const auto& r : default_rules()) rule_params.insert(r.parameter_id);

  std::set<std::string> static_params;
  for (const auto* spec : list.by_mode(EvalMode::Static)) static_params.insert(spec->id);

  CHECK(rule_params == static_params);
}

TEST_CASE("a corpus without analyzable code reports the static parameters as NA") {
  const Checklist& list = default_checklist();
  CodeCorpus corpus = CodeCorpus::from_files(
      {{"README.md", "# notes\n"}, {"styles.css", "body { color: red; }\n"}});
  ProbeReport report = run_static(corpus, list);
  REQUIRE(report.observations.size() == 4);
  for (const auto& o : report.observations) {
    CAPTURE(o.parameter_id);
    CHECK(o.value == ObservationValue::not_applicable());
  }
}

TEST_CASE("rules written by hand override the built-in verdict") {
  const Checklist& list = default_checklist();
  CodeCorpus corpus = CodeCorpus::from_files(
      {{"store.php",
        "<?php\n$hash = sodium_crypto_pwhash_str($password, OPSLIMIT, MEMLIMIT);\n"}});

  ProbeReport plain = run_static(corpus, list);
  const Observation* before = find_obs(plain, "store_hash_algorithm");
  REQUIRE(before != nullptr);
  CHECK(before->value == ObservationValue::not_applicable());

  std::vector<PatternRule> extra = {{"hash-sodium", "store_hash_algorithm",
                                     "sodium_crypto_pwhash", "", "Argon2", "-"}};
  ProbeReport overridden = run_static(corpus, list, extra);
  const Observation* after = find_obs(overridden, "store_hash_algorithm");
  REQUIRE(after != nullptr);
  CHECK(after->value == ObservationValue::categorical("Argon2"));
}

TEST_CASE("extra rules may decide parameters outside the default set") {
  const Checklist& list = default_checklist();
  CodeCorpus corpus = CodeCorpus::from_files(
      {{"cors.php", "<?php\nheader('Access-Control-Allow-Origin: https://app.example');\n"}});
  std::vector<PatternRule> extra = {{"cors-pinned", "input_cors_policy",
                                     "Access-Control-Allow-Origin", "https?://", "Yes",
                                     "No"}};
  ProbeReport report = run_static(corpus, list, extra);
  const Observation* obs = find_obs(report, "input_cors_policy");
  REQUIRE(obs != nullptr);
  CHECK(obs->value == ObservationValue::yes());
}

TEST_CASE("rules naming unknown parameters are rejected") {
  const Checklist& list = default_checklist();
  CodeCorpus corpus = CodeCorpus::from_files({{"a.php", "<?php echo 1;\n"}});
  std::vector<PatternRule> extra = {{"r", "not_a_parameter", "x", "", "Yes", "-"}};
  CHECK_THROWS_AS(run_static(corpus, list, extra), AnalyzerError);
}

TEST_CASE("rule groups fire in listed order, first match wins") {
  CodeCorpus corpus = CodeCorpus::from_files(
      {{"mixed.php", "<?php\n$a = md5($password);\n$b = password_hash($p, PASSWORD_BCRYPT);\n"}});
  std::vector<Observation> obs = analyze_password_storage(corpus);
  const Observation* hash = nullptr;
  for (const auto& o : obs) {
    if (o.parameter_id == "store_hash_algorithm") hash = &o;
  }
  REQUIRE(hash != nullptr);
  // The fast-hash rule precedes the bcrypt rule, so the weak usage decides.
  CHECK(hash->value == ObservationValue::no());
}

TEST_CASE("rule files round-trip including escaped pipes") {
  std::vector<PatternRule> rules = {
      {"r1", "input_parameterized_queries", "SELECT\\s+\\*", "", "No", "-"},
      {"r2", "store_hash_algorithm", "foo\\|bar", "ctx\\|more", "with|pipe", "NA"},
  };
  std::string text = serialize_rules(rules);
  std::vector<PatternRule> parsed = parse_rules(text);
  REQUIRE(parsed.size() == 2);
  for (size_t i = 0; i < rules.size(); ++i) {
    CHECK(parsed[i].id == rules[i].id);
    CHECK(parsed[i].parameter_id == rules[i].parameter_id);
    CHECK(parsed[i].pattern == rules[i].pattern);
    CHECK(parsed[i].context == rules[i].context);
    CHECK(parsed[i].verdict_on_match == rules[i].verdict_on_match);
    CHECK(parsed[i].verdict_on_absence == rules[i].verdict_on_absence);
  }
  CHECK(serialize_rules(parsed) == text);
}

TEST_CASE("malformed rule lines are rejected with their line number") {
  CHECK_THROWS_AS(parse_rules("too|few|fields\n"), AnalyzerError);
  CHECK_THROWS_AS(parse_rules("id|param|[invalid(regex|ctx|Yes|-\n"), AnalyzerError);
  CHECK_THROWS_WITH_AS(parse_rules("# fine\nid|param||ctx|Yes|-\n"),
                       doctest::Contains("line 2"), AnalyzerError);
}

TEST_CASE("default rules parse as valid regular expressions") {
  std::string text = serialize_rules(default_rules());
  std::vector<PatternRule> parsed = parse_rules(text);
  CHECK(parsed.size() == default_rules().size());
}

TEST_CASE("loading a missing corpus directory fails loudly") {
  CHECK_THROWS_AS(CodeCorpus::from_directory("/no/such/dir"), AnalyzerError);
}

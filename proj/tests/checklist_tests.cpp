#include <doctest.h>

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"

using namespace webaudit;

namespace {

struct FrozenRow {
  const char* id;
  Likelihood likelihood;
  Impact impact;
  RiskLevel risk;
};

// Independently worked-out likelihood/impact/risk for each parameter,
// kept as data so a regression in the checklist or the matrix cannot
// silently agree with itself.
const FrozenRow kFrozenRisk[] = {
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

}  // namespace

TEST_CASE("risk matrix maps boundary products onto the six levels") {
  struct Pair {
    Likelihood l;
    Impact i;
    RiskLevel expected;
  };
  const Pair pairs[] = {
      {Likelihood::Rare, Impact::Insignificant, RiskLevel::VeryLow},       // 1
      {Likelihood::Rare, Impact::Minor, RiskLevel::VeryLow},               // 2
      {Likelihood::Rare, Impact::Significant, RiskLevel::Low},             // 3
      {Likelihood::Unlikely, Impact::Minor, RiskLevel::Low},               // 4
      {Likelihood::Rare, Impact::Severe, RiskLevel::Low},                  // 5
      {Likelihood::Unlikely, Impact::Significant, RiskLevel::Medium},      // 6
      {Likelihood::Unlikely, Impact::Major, RiskLevel::Medium},            // 8
      {Likelihood::Moderate, Impact::Significant, RiskLevel::Medium},      // 9
      {Likelihood::Unlikely, Impact::Severe, RiskLevel::High},             // 10
      {Likelihood::Moderate, Impact::Major, RiskLevel::High},              // 12
      {Likelihood::Moderate, Impact::Severe, RiskLevel::VeryHigh},         // 15
      {Likelihood::Likely, Impact::Major, RiskLevel::VeryHigh},            // 16
      {Likelihood::Likely, Impact::Severe, RiskLevel::Extreme},            // 20
      {Likelihood::AlmostCertain, Impact::Severe, RiskLevel::Extreme},     // 25
  };
  for (const Pair& p : pairs) {
    CAPTURE(ordinal(p.l));
    CAPTURE(ordinal(p.i));
    CHECK(risk_level(p.l, p.i) == p.expected);
  }
}

TEST_CASE("risk matrix is monotone over all 25 cells") {
  const Likelihood ls[] = {Likelihood::Rare, Likelihood::Unlikely, Likelihood::Moderate,
                           Likelihood::Likely, Likelihood::AlmostCertain};
  const Impact is[] = {Impact::Insignificant, Impact::Minor, Impact::Significant,
                       Impact::Major, Impact::Severe};
  for (int li = 0; li < 5; ++li) {
    for (int ii = 0; ii < 5; ++ii) {
      RiskLevel here = risk_level(ls[li], is[ii]);
      if (li + 1 < 5) CHECK(rank(risk_level(ls[li + 1], is[ii])) >= rank(here));
      if (ii + 1 < 5) CHECK(rank(risk_level(ls[li], is[ii + 1])) >= rank(here));
    }
  }
}

TEST_CASE("default checklist carries the frozen likelihood/impact/risk rows") {
  const Checklist& list = default_checklist();
  REQUIRE(list.parameters.size() == 48);
  REQUIRE(std::size(kFrozenRisk) == 48);
  for (size_t i = 0; i < list.parameters.size(); ++i) {
    const ParameterSpec& p = list.parameters[i];
    const FrozenRow& row = kFrozenRisk[i];
    CAPTURE(p.id);
    CHECK(p.id == row.id);
    CHECK(p.likelihood == row.likelihood);
    CHECK(p.impact == row.impact);
    CHECK(p.risk == row.risk);
    CHECK(risk_level(row.likelihood, row.impact) == row.risk);
  }
}

TEST_CASE("default checklist partitions categories and modes as documented") {
  const Checklist& list = default_checklist();
  validate_checklist(list);

  std::map<Category, int> per_category;
  for (const auto& p : list.parameters) ++per_category[p.category];
  CHECK(per_category[Category::AuthenticationSecurity] == 11);
  CHECK(per_category[Category::InputValidation] == 10);
  CHECK(per_category[Category::SessionSecurity] == 8);
  CHECK(per_category[Category::SecureStorage] == 2);
  CHECK(per_category[Category::ErrorHandling] == 5);
  CHECK(per_category[Category::HttpSecurityHeaders] == 12);
  for (Category c : kAllCategories) {
    CHECK(per_category[c] == expected_parameter_count(c));
  }

  std::set<std::string> static_ids;
  for (const auto* p : list.by_mode(EvalMode::Static)) static_ids.insert(p->id);
  CHECK(static_ids == std::set<std::string>{"input_parameterized_queries",
                                            "store_hash_algorithm",
                                            "store_salted_hashes",
                                            "err_failed_login_logged"});

  std::set<std::string> manual_ids;
  for (const auto* p : list.by_mode(EvalMode::Manual)) manual_ids.insert(p->id);
  CHECK(manual_ids == std::set<std::string>{"auth_lockout_notice", "auth_pw_expiration",
                                            "auth_pw_reuse", "auth_backup_codes",
                                            "input_cors_policy", "err_unusual_flagged",
                                            "err_logs_secure"});

  CHECK(list.by_mode(EvalMode::Dynamic).size() == 37);
}

TEST_CASE("exactly the four weakness-style parameters want a No answer") {
  const Checklist& list = default_checklist();
  std::set<std::string> desired_no;
  for (const auto& p : list.parameters) {
    if (p.polarity == Polarity::DesiredNo) desired_no.insert(p.id);
  }
  CHECK(desired_no == std::set<std::string>{"input_js_execution", "input_html_injection",
                                            "err_reveals_username", "err_reveals_pw_rules"});
}

TEST_CASE("categorical parameters declare their vocabulary") {
  const Checklist& list = default_checklist();
  std::set<std::string> categorical;
  for (const auto& p : list.parameters) {
    if (p.kind == ParameterKind::Categorical) {
      categorical.insert(p.id);
      // The max-age value is an open vocabulary (any number of seconds);
      // every other categorical parameter enumerates its variants.
      if (p.id != "hdr_hsts_max_age") CHECK(!p.accepted_values.empty());
    }
  }
  CHECK(categorical == std::set<std::string>{"auth_pw_complexity", "auth_mfa_type",
                                             "auth_rate_limit_response",
                                             "input_hpp_handling", "store_hash_algorithm",
                                             "hdr_hsts_max_age"});
}

TEST_CASE("checklist text form round-trips") {
  const Checklist& list = default_checklist();
  std::string text = serialize_checklist(list);
  Checklist parsed = parse_checklist(text);
  CHECK(parsed.version == list.version);
  REQUIRE(parsed.parameters.size() == list.parameters.size());
  CHECK(serialize_checklist(parsed) == text);
}

TEST_CASE("checklist lookup helpers") {
  const Checklist& list = default_checklist();
  REQUIRE(list.find("sess_cookie_secure") != nullptr);
  CHECK(list.find("sess_cookie_secure")->category == Category::SessionSecurity);
  CHECK(list.find("no_such_parameter") == nullptr);
  CHECK(list.index_of("auth_lockout") == 0);
  CHECK(list.index_of("no_such_parameter") == -1);
  CHECK(list.by_category(Category::SecureStorage).size() == 2);
}

TEST_CASE("checklist validation rejects inconsistent content") {
  Checklist list = default_checklist();

  SUBCASE("duplicate id") {
    list.parameters[1].id = list.parameters[0].id;
    CHECK_THROWS_AS(validate_checklist(list), ChecklistConsistencyError);
  }
  SUBCASE("risk that contradicts the matrix") {
    list.parameters[0].risk = RiskLevel::VeryLow;
    CHECK_THROWS_AS(validate_checklist(list), ChecklistConsistencyError);
  }
  SUBCASE("category count off by one") {
    list.parameters.pop_back();
    CHECK_THROWS_AS(validate_checklist(list), ChecklistConsistencyError);
  }
}

TEST_CASE("checklist parser reports malformed rows") {
  CHECK_THROWS_AS(parse_checklist("only|three|fields"), ChecklistParseError);
  CHECK_THROWS_AS(
      parse_checklist("x|AuthenticationSecurity|s|n|NotALikelihood|Minor|Dynamic|"
                      "DesiredYes|Boolean|"),
      ChecklistParseError);
}

TEST_CASE("parser accepts omitted risk fields and derives them") {
  std::string text = serialize_checklist(default_checklist());
  std::string stripped;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') line = line.substr(0, line.rfind('|'));
    stripped += line + "\n";
  }
  Checklist parsed = parse_checklist(stripped);
  REQUIRE(parsed.parameters.size() == 48);
  for (size_t i = 0; i < parsed.parameters.size(); ++i) {
    CHECK(parsed.parameters[i].risk == default_checklist().parameters[i].risk);
  }
}

TEST_CASE("parser rejects an empty document") {
  CHECK_THROWS_AS(parse_checklist("# just a comment\n"), ChecklistParseError);
}

TEST_CASE("enum tokens parse case-insensitively in both spellings") {
  CHECK(parse_likelihood("almost certain") == Likelihood::AlmostCertain);
  CHECK(parse_likelihood("AlmostCertain") == Likelihood::AlmostCertain);
  CHECK(parse_impact("insignificant") == Impact::Insignificant);
  CHECK(parse_risk_level("very high") == RiskLevel::VeryHigh);
  CHECK(parse_risk_level("VeryHigh") == RiskLevel::VeryHigh);
  CHECK(parse_category("HTTP Security Headers") == Category::HttpSecurityHeaders);
  CHECK(!parse_likelihood("sometimes").has_value());
}

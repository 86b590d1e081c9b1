#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"
#include "webaudit/reference.hpp"
#include "webaudit/risk_engine.hpp"

using namespace webaudit;

namespace {

Observation make_obs(std::string id, ObservationValue value, Source source) {
  Observation o;
  o.parameter_id = std::move(id);
  o.value = std::move(value);
  o.source = source;
  o.captured_at = "2026-01-01T00:00:00Z";
  o.evidence.push_back({"test exchange", "test response"});
  return o;
}

// Per-category fulfilled counts as printed in the bundled audits, in
// kLabels order.
struct CoverageRow {
  Category category;
  int expected[5];
};
const CoverageRow kExpectedCoverage[] = {
    {Category::AuthenticationSecurity, {1, 0, 0, 2, 3}},
    {Category::InputValidation, {5, 3, 8, 3, 5}},
    {Category::SessionSecurity, {7, 4, 3, 8, 7}},
    {Category::SecureStorage, {2, 2, 0, 2, 2}},
    {Category::ErrorHandling, {2, 2, 2, 1, 3}},
    {Category::HttpSecurityHeaders, {0, 0, 0, 0, 0}},
};

const int kExpectedExtreme[5] = {0, 3, 4, 0, 0};

}  // namespace

TEST_CASE("boolean parameters comply only on their desired polarity") {
  const Checklist& list = default_checklist();
  const ParameterSpec& wants_yes = *list.find("auth_lockout");
  CHECK(judge_compliance(wants_yes, ObservationValue::yes()) == Compliance::Compliant);
  CHECK(judge_compliance(wants_yes, ObservationValue::no()) == Compliance::NonCompliant);
  CHECK(judge_compliance(wants_yes, ObservationValue::not_applicable()) ==
        Compliance::NonCompliant);
  CHECK(judge_compliance(wants_yes, ObservationValue::unknown()) ==
        Compliance::NonCompliant);

  const ParameterSpec& wants_no = *list.find("input_js_execution");
  CHECK(judge_compliance(wants_no, ObservationValue::no()) == Compliance::Compliant);
  CHECK(judge_compliance(wants_no, ObservationValue::yes()) == Compliance::NonCompliant);
  CHECK(judge_compliance(wants_no, ObservationValue::not_applicable()) ==
        Compliance::NonCompliant);
  CHECK(judge_compliance(wants_no, ObservationValue::unknown()) ==
        Compliance::NonCompliant);
}

TEST_CASE("categorical parameters treat any concrete variant as fulfilled") {
  const ParameterSpec& spec = *default_checklist().find("store_hash_algorithm");
  CHECK(judge_compliance(spec, ObservationValue::categorical("bcrypt")) ==
        Compliance::Compliant);
  CHECK(judge_compliance(spec, ObservationValue::categorical("scrypt")) ==
        Compliance::Compliant);
  CHECK(judge_compliance(spec, ObservationValue::yes()) == Compliance::Compliant);
  CHECK(judge_compliance(spec, ObservationValue::no()) == Compliance::NonCompliant);
  CHECK(judge_compliance(spec, ObservationValue::not_applicable()) ==
        Compliance::NonCompliant);
  CHECK(judge_compliance(spec, ObservationValue::unknown()) == Compliance::NonCompliant);
}

TEST_CASE("a categorical value against a boolean parameter is a hard error") {
  const ParameterSpec& spec = *default_checklist().find("auth_lockout");
  CHECK_THROWS_AS(judge_compliance(spec, ObservationValue::categorical("sort of")),
                  AuditError);
}

TEST_CASE("judging is total over every parameter and well-formed value") {
  const Checklist& list = default_checklist();
  const ObservationValue values[] = {
      ObservationValue::yes(), ObservationValue::no(),
      ObservationValue::not_applicable(), ObservationValue::unknown(),
      ObservationValue::categorical("anything")};
  for (const auto& spec : list.parameters) {
    for (const auto& v : values) {
      if (spec.kind == ParameterKind::Boolean && v.is_categorical()) {
        CHECK_THROWS_AS(judge_compliance(spec, v), AuditError);
      } else {
        Compliance c = judge_compliance(spec, v);
        CHECK((c == Compliance::Compliant || c == Compliance::NonCompliant));
      }
    }
  }
}

TEST_CASE("build_profile prefers live probes over code review over attestations") {
  const Checklist& list = default_checklist();
  std::vector<Observation> obs = {
      make_obs("auth_lockout", ObservationValue::no(), Source::Manual),
      make_obs("auth_lockout", ObservationValue::yes(), Source::Static),
      make_obs("auth_lockout", ObservationValue::no(), Source::Dynamic),
      make_obs("store_hash_algorithm", ObservationValue::categorical("bcrypt"),
               Source::Manual),
      make_obs("store_hash_algorithm", ObservationValue::categorical("Argon2"),
               Source::Static),
  };
  AuditProfile profile = build_profile("t", obs, list);
  REQUIRE(profile.records.size() == 48);
  const ComplianceRecord* lockout = profile.find("auth_lockout");
  REQUIRE(lockout != nullptr);
  CHECK(lockout->observation.source == Source::Dynamic);
  CHECK(lockout->observation.value == ObservationValue::no());
  CHECK(lockout->compliance == Compliance::NonCompliant);

  const ComplianceRecord* hash = profile.find("store_hash_algorithm");
  REQUIRE(hash != nullptr);
  CHECK(hash->observation.source == Source::Static);
  CHECK(hash->observation.value.text() == "Argon2");
}

TEST_CASE("build_profile synthesizes Unknown for unobserved parameters") {
  const Checklist& list = default_checklist();
  std::vector<Observation> obs = {
      make_obs("auth_lockout", ObservationValue::yes(), Source::Dynamic)};
  AuditProfile profile = build_profile("t", obs, list);
  REQUIRE(profile.records.size() == 48);
  CHECK(profile.records.size() == list.parameters.size());
  for (size_t i = 0; i < profile.records.size(); ++i) {
    CHECK(profile.records[i].parameter_id == list.parameters[i].id);
  }
  const ComplianceRecord* missing = profile.find("sess_timeout");
  REQUIRE(missing != nullptr);
  CHECK(missing->observation.value.is_unknown());
  CHECK(missing->observation.note == "not observed");
  CHECK(missing->compliance == Compliance::NonCompliant);
}

TEST_CASE("build_profile rejects bad observation sets") {
  const Checklist& list = default_checklist();

  SUBCASE("unknown parameter id") {
    std::vector<Observation> obs = {
        make_obs("no_such_parameter", ObservationValue::yes(), Source::Dynamic)};
    CHECK_THROWS_AS(build_profile("t", obs, list), AuditError);
  }
  SUBCASE("two observations from one source for one parameter") {
    std::vector<Observation> obs = {
        make_obs("auth_lockout", ObservationValue::yes(), Source::Dynamic),
        make_obs("auth_lockout", ObservationValue::no(), Source::Dynamic)};
    CHECK_THROWS_AS(build_profile("t", obs, list), AuditError);
  }
  SUBCASE("categorical value on a boolean parameter") {
    std::vector<Observation> obs = {
        make_obs("auth_lockout", ObservationValue::categorical("maybe"),
                 Source::Dynamic)};
    CHECK_THROWS_AS(build_profile("t", obs, list), AuditError);
  }
}

TEST_CASE("bundled audits reproduce the published per-category coverage") {
  const Checklist& list = default_checklist();
  for (size_t j = 0; j < std::size(reference::kLabels); ++j) {
    AuditProfile profile = reference::profile(reference::kLabels[j], list);
    CoverageSummary cov = coverage_summary(profile, list);
    CHECK(cov.parameter_total() == 48);
    for (const CoverageRow& row : kExpectedCoverage) {
      CAPTURE(reference::kLabels[j]);
      CAPTURE(to_token(row.category));
      REQUIRE(cov.per_category.count(row.category) == 1);
      CHECK(cov.per_category.at(row.category).fulfilled == row.expected[j]);
      CHECK(cov.per_category.at(row.category).total ==
            expected_parameter_count(row.category));
    }
  }
}

TEST_CASE("bundled audits reproduce the extreme-risk cross-tabulation") {
  const Checklist& list = default_checklist();
  for (size_t j = 0; j < std::size(reference::kLabels); ++j) {
    AuditProfile profile = reference::profile(reference::kLabels[j], list);
    RiskProfile risk = risk_profile(profile, list);
    CAPTURE(reference::kLabels[j]);
    CHECK(risk.at(RiskLevel::Extreme) == kExpectedExtreme[j]);
  }
}

TEST_CASE("the four extreme gaps in the worst audit are the session protections") {
  const Checklist& list = default_checklist();
  AuditProfile profile = reference::profile("Claude", list);
  std::set<std::string> extreme_nc;
  for (const auto& rec : profile.records) {
    const ParameterSpec* spec = list.find(rec.parameter_id);
    if (rec.compliance == Compliance::NonCompliant && spec->risk == RiskLevel::Extreme) {
      extreme_nc.insert(rec.parameter_id);
    }
  }
  CHECK(extreme_nc == std::set<std::string>{"sess_cookie_secure", "sess_cookie_httponly",
                                            "sess_cookie_samesite",
                                            "sess_fixation_protection"});
}

TEST_CASE("non-compliance counts and coverage conserve the parameter total") {
  const Checklist& list = default_checklist();
  for (const auto& profile : reference::all_profiles(list)) {
    CoverageSummary cov = coverage_summary(profile, list);
    RiskProfile risk = risk_profile(profile, list);
    CHECK(cov.fulfilled_total() + risk.total() == 48);
  }
}

TEST_CASE("at_or_above accumulates from the top of the scale") {
  RiskProfile rp;
  rp.at(RiskLevel::Low) = 2;
  rp.at(RiskLevel::High) = 1;
  rp.at(RiskLevel::Extreme) = 3;
  CHECK(rp.total() == 6);
  CHECK(rp.at_or_above(RiskLevel::Extreme) == 3);
  CHECK(rp.at_or_above(RiskLevel::VeryHigh) == 3);
  CHECK(rp.at_or_above(RiskLevel::High) == 4);
  CHECK(rp.at_or_above(RiskLevel::VeryLow) == 6);
}

TEST_CASE("compare_profiles lines up targets in checklist order") {
  const Checklist& list = default_checklist();
  std::vector<AuditProfile> profiles = reference::all_profiles(list);
  ProfileComparison cmp = compare_profiles(profiles, list);
  CHECK(cmp.labels == std::vector<std::string>{"ChatGPT", "DeepSeek", "Claude",
                                               "Gemini", "Grok"});
  REQUIRE(cmp.rows.size() == 48);
  REQUIRE(cmp.coverage.size() == 5);
  REQUIRE(cmp.risk.size() == 5);
  for (size_t i = 0; i < cmp.rows.size(); ++i) {
    CHECK(cmp.rows[i].parameter_id == list.parameters[i].id);
    CHECK(cmp.rows[i].values.size() == 5);
    CHECK(cmp.rows[i].compliance.size() == 5);
  }
}

TEST_CASE("compare_profiles rejects mismatched or empty input") {
  const Checklist& list = default_checklist();
  CHECK_THROWS_AS(compare_profiles({}, list), AuditError);

  std::vector<AuditProfile> profiles = reference::all_profiles(list);
  profiles[1].checklist_version = "other";
  CHECK_THROWS_AS(compare_profiles(profiles, list), AuditError);
}

TEST_CASE("reference labels resolve case-insensitively") {
  CHECK(reference::is_label("claude"));
  CHECK(reference::is_label("GROK"));
  CHECK(!reference::is_label("copilot"));
  CHECK(reference::value_token("deepseek", "sess_cookie_secure") == "No");
  CHECK(reference::value_token("Grok", "auth_rate_limit_response") == "Error Code");
}

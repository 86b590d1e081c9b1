#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "flip_suite.hpp"
#include "webaudit/checklist.hpp"
#include "webaudit/risk_engine.hpp"
#include "webaudit/testbed.hpp"

using namespace webaudit;
using namespace webaudit::fliptest;

TEST_CASE("the flip table covers every dynamically probed parameter once") {
  const Checklist checklist = default_checklist();
  std::set<std::string> covered;
  for (const FlipCase& c : flip_cases()) {
    CHECK(covered.insert(c.parameter_id).second);
  }
  std::set<std::string> dynamic_ids;
  for (const auto* spec : checklist.by_mode(EvalMode::Dynamic)) {
    dynamic_ids.insert(spec->id);
  }
  CHECK(covered == dynamic_ids);
}

TEST_CASE("each probed behavior flips with its controlling feature") {
  const Checklist checklist = default_checklist();
  const std::string hardened_text = serialize_testbed_config(preset("hardened"));

  std::map<std::string, Observation> compliant = scan_hardened(checklist);

  for (const FlipCase& testcase : flip_cases()) {
    CAPTURE(testcase.parameter_id);
    const ParameterSpec* spec = checklist.find(testcase.parameter_id);
    REQUIRE(spec != nullptr);

    REQUIRE(compliant.count(testcase.parameter_id) == 1);
    const Observation& good = compliant[testcase.parameter_id];
    CHECK(judge_compliance(*spec, good.value) == Compliance::Compliant);

    Observation bad = observe_vulnerable(hardened_text, testcase);
    CAPTURE(bad.value.to_string());
    CHECK(judge_compliance(*spec, bad.value) == Compliance::NonCompliant);
    CHECK(bad.value != good.value);
  }
}

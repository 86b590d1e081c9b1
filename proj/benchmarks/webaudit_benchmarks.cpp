#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/reference.hpp"
#include "webaudit/report.hpp"
#include "webaudit/risk_engine.hpp"
#include "webaudit/static_analyzer.hpp"

using namespace webaudit;

namespace {

void bm_risk_matrix(benchmark::State& state) {
  for (auto _ : state) {
    for (int l = 1; l <= 5; ++l) {
      for (int i = 1; i <= 5; ++i) {
        benchmark::DoNotOptimize(
            risk_level(static_cast<Likelihood>(l), static_cast<Impact>(i)));
      }
    }
  }
  state.SetItemsProcessed(state.iterations() * 25);
}
BENCHMARK(bm_risk_matrix);

void bm_build_profile(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  std::vector<Observation> observations = reference::observations("Claude");
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_profile("Claude", observations, checklist));
  }
  state.SetItemsProcessed(state.iterations() * observations.size());
}
BENCHMARK(bm_build_profile);

void bm_score_profile(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  AuditProfile profile = reference::profile("Claude", checklist);
  for (auto _ : state) {
    benchmark::DoNotOptimize(coverage_summary(profile, checklist));
    benchmark::DoNotOptimize(risk_profile(profile, checklist));
  }
}
BENCHMARK(bm_score_profile);

const char* const kLoginSnippet = R"php(<?php
$pdo = new PDO($dsn, $db_user, $db_pass);
$stmt = $pdo->prepare('SELECT id, password_hash FROM users WHERE username = ?');
$stmt->execute([$_POST['username']]);
$row = $stmt->fetch();
if ($row && password_verify($_POST['password'], $row['password_hash'])) {
    error_log('login ok for user ' . $row['id']);
} else {
    error_log('Failed login attempt');
}
$hash = password_hash($_POST['password'], PASSWORD_BCRYPT);
)php";

void bm_static_analysis(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  std::vector<CodeFile> files;
  for (int i = 0; i < 20; ++i) {
    files.push_back({"login_" + std::to_string(i) + ".php", kLoginSnippet});
  }
  CodeCorpus corpus = CodeCorpus::from_files(std::move(files));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_static(corpus, checklist));
  }
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(bm_static_analysis);

void bm_emit_json(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  std::vector<AuditProfile> profiles = reference::all_profiles(checklist);
  AuditDocument doc = make_document(checklist, profiles);
  const size_t size = emit_json(doc).size();
  for (auto _ : state) {
    std::string text = emit_json(doc);
    benchmark::DoNotOptimize(text);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(size));
}
BENCHMARK(bm_emit_json);

void bm_parse_document(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  std::vector<AuditProfile> profiles = reference::all_profiles(checklist);
  const std::string text = emit_json(make_document(checklist, profiles));
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_document(text));
  }
  state.SetBytesProcessed(state.iterations() * text.size());
}
BENCHMARK(bm_parse_document);

void bm_emit_matrix_csv(benchmark::State& state) {
  const Checklist& checklist = default_checklist();
  std::vector<AuditProfile> profiles = reference::all_profiles(checklist);
  ProfileComparison comparison = compare_profiles(profiles, checklist);
  for (auto _ : state) {
    benchmark::DoNotOptimize(emit_compliance_matrix(comparison, MatrixFormat::Csv));
  }
}
BENCHMARK(bm_emit_matrix_csv);

}  // namespace

BENCHMARK_MAIN();

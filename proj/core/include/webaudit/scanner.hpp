#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "webaudit/checklist.hpp"
#include "webaudit/observation.hpp"
#include "webaudit/target_config.hpp"

namespace webaudit {

struct ScanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pattern lists the probes match against response bodies. One pattern per
// line in file form; matching is case-insensitive substring except
// nonce_patterns, which are regexes stripped before body comparison.
struct ProbeSignatures {
  std::vector<std::string> sql_errors;
  std::vector<std::string> captcha_markers;
  std::vector<std::string> nonce_patterns;

  static ProbeSignatures defaults();
  static std::vector<std::string> parse_lines(std::string_view text);
};

// --- Passive checks (pure functions over already-captured responses) ---

// Case-insensitive header lookup is applied internally; pass headers as
// received. Emits the twelve header-policy observations. A missing header
// family scores No for the whole family (a absent CSP blocks nothing).
std::vector<Observation> check_security_headers(
    const std::multimap<std::string, std::string>& response_headers);

// Emits session-creation plus the three cookie-flag observations for the
// session cookie found among the given Set-Cookie lines. No session cookie:
// creation No, flags NotApplicable.
std::vector<Observation> check_cookie_flags(
    const std::vector<std::string>& set_cookie_headers);

// --- Active probes ---

// Each probe performs its own HTTP exchanges against the configured target
// and returns observations with request/response evidence. Probes marked
// destructive refuse to run (ScanError) unless destructive_allowed is set.
class Scanner {
 public:
  explicit Scanner(TargetConfig config,
                   ProbeSignatures signatures = ProbeSignatures::defaults(),
                   int parallelism = 1);
  ~Scanner();

  Scanner(const Scanner&) = delete;
  Scanner& operator=(const Scanner&) = delete;

  // Full dynamic evaluation: baseline fetch (fails fast when the target is
  // unreachable), passive checks, read-only probes, then state-mutating
  // probes in a fixed order (password policy, email verification, rate
  // limit, lockout last). Every Dynamic-mode parameter of the checklist ends
  // up exactly once in observations or skipped.
  ProbeReport run_scan(const Checklist& checklist);

  // Individual probes, public for targeted testing.
  Observation probe_login_method();
  std::vector<Observation> probe_session_cookies();      // creation + flags
  std::vector<Observation> probe_security_headers();     // baseline fetch + check
  std::vector<Observation> probe_bruteforce_lockout();   // destructive
  std::vector<Observation> probe_rate_limit();           // destructive
  std::vector<Observation> probe_session_lifecycle();
  std::vector<Observation> probe_csrf();
  std::vector<Observation> probe_xss_reflection();
  Observation probe_sqli_error();
  Observation probe_hpp();
  std::vector<Observation> probe_user_enumeration();
  Observation probe_password_policy();                   // destructive
  std::vector<Observation> probe_mfa_and_email_verification();

  const TargetConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace webaudit

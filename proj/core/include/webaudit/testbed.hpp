#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "webaudit/target_config.hpp"

namespace webaudit {

struct TestbedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RateLimitStyle { ErrorCode, Captcha, Lockout };
enum class PasswordPolicy { None, LengthOnly, LengthLettersNumbers, Full };
enum class MfaMode { Off, Totp };
enum class CsrfMode { Off, EmitOnly, Enforced };
enum class HppBehavior { FirstWins, LastWins, Concatenated, Rejected };

// Feature switches for the fixture application. Every dynamically probed
// checklist parameter is controlled by exactly one of these (see
// dynamic_parameter_toggles()), so integration tests can flip behaviors one
// at a time.
struct TestbedConfig {
  int listen_port = 0;  // 0 = pick an ephemeral port

  // Authentication hardening
  int lockout_threshold = 0;   // failed attempts before lockout, 0 = off
  int captcha_after_n = 0;     // failures before a challenge appears, 0 = off
  int rate_limit_per_second = 0;  // login attempts per second, 0 = off
  RateLimitStyle rate_limit_response = RateLimitStyle::ErrorCode;
  PasswordPolicy password_policy = PasswordPolicy::None;
  MfaMode mfa = MfaMode::Off;
  bool email_verification = false;

  // Sessions
  bool sessions_enabled = true;
  bool cookie_secure = false;
  bool cookie_httponly = false;
  bool cookie_samesite = false;
  double session_timeout_minutes = 0;  // 0 = never expires
  bool regenerate_on_login = false;
  bool fixation_protection = false;
  bool session_in_url = false;

  // Input handling
  CsrfMode csrf = CsrfMode::Off;
  bool output_escaping = false;
  bool sql_parameterized = false;
  bool get_login_enabled = true;
  bool echo_enabled = true;
  HppBehavior hpp_behavior = HppBehavior::LastWins;

  // Error behavior
  bool enumeration_messages = false;
  bool reveal_password_rules = false;
  bool failed_login_logging = false;

  // Response headers
  bool hdr_csp = false;
  bool hdr_csp_block_inline = false;
  bool hdr_csp_block_data = false;
  bool hdr_csp_restrict_external = false;
  bool hdr_x_frame_options = false;
  bool hdr_x_content_type_options = false;
  bool hdr_hsts = false;
  bool hdr_hsts_max_age = false;
  bool hdr_referrer_policy = false;
  bool hdr_referrer_policy_strict = false;
  bool hdr_permissions_policy = false;
  bool hdr_device_features_restricted = false;

  // Throws TestbedError on contradictory settings (session features or
  // second factors without sessions).
  void validate() const;
};

// Named configurations: "hardened" and "vulnerable" extremes plus
// "chatgpt", "deepseek", "claude", "gemini", "grok" reproducing the bundled
// reference audits' dynamically observable behaviors. Unknown name throws.
TestbedConfig preset(const std::string& name);

TestbedConfig parse_testbed_config(std::string_view text);
TestbedConfig load_testbed_config_file(const std::string& path);
std::string serialize_testbed_config(const TestbedConfig& config);

// Which TestbedConfig field governs each dynamically probed checklist
// parameter. Keys are exactly the Dynamic-mode parameter ids.
const std::map<std::string, std::string>& dynamic_parameter_toggles();

// In-process fixture web application. The constructor binds and serves on a
// background thread; the destructor stops it. State lives in memory only.
//
// Stable inspection endpoints: POST /_testbed/reset wipes accounts (except
// the seeded one), sessions, counters, and mail; GET /_testbed/mail lists
// captured messages as JSON.
class Testbed {
 public:
  explicit Testbed(TestbedConfig config);
  ~Testbed();
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  int port() const;
  std::string base_url() const;
  const TestbedConfig& config() const;

  // Fixed second-factor code accepted when mfa is on; printed by the CLI at
  // startup so a human can complete the challenge too.
  std::string mfa_code() const;

  // Seeded account credentials.
  std::string account_username() const;
  std::string account_password() const;

  // Scan configuration pointed at this instance, destructive probes
  // included.
  TargetConfig target_config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace webaudit

#include "webaudit/testbed.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "webaudit/observation.hpp"
#include "webaudit/reference.hpp"

namespace webaudit {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kSeedUser = "alice";
constexpr const char* kSeedPassword = "Correct-Horse9!Stable";
constexpr const char* kSeedEmail = "alice@example.test";
constexpr const char* kMfaCode = "424242";
constexpr const char* kCookieName = "sid";

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

bool parse_bool(const std::string& raw, const std::string& key) {
  std::string v = to_lower(raw);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw TestbedError("invalid boolean for " + key + ": " + raw);
}

int parse_int(const std::string& raw, const std::string& key) {
  try {
    size_t used = 0;
    int v = std::stoi(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw TestbedError("invalid integer for " + key + ": " + raw);
  }
}

double parse_double(const std::string& raw, const std::string& key) {
  try {
    size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw TestbedError("invalid number for " + key + ": " + raw);
  }
}

struct EnumToken {
  const char* token;
  int value;
};

const EnumToken kRateStyleTokens[] = {
    {"error-code", static_cast<int>(RateLimitStyle::ErrorCode)},
    {"captcha", static_cast<int>(RateLimitStyle::Captcha)},
    {"lockout", static_cast<int>(RateLimitStyle::Lockout)},
};
const EnumToken kPolicyTokens[] = {
    {"none", static_cast<int>(PasswordPolicy::None)},
    {"length-only", static_cast<int>(PasswordPolicy::LengthOnly)},
    {"length-letters-numbers", static_cast<int>(PasswordPolicy::LengthLettersNumbers)},
    {"full", static_cast<int>(PasswordPolicy::Full)},
};
const EnumToken kMfaTokens[] = {
    {"off", static_cast<int>(MfaMode::Off)},
    {"totp", static_cast<int>(MfaMode::Totp)},
};
const EnumToken kCsrfTokens[] = {
    {"off", static_cast<int>(CsrfMode::Off)},
    {"emit-only", static_cast<int>(CsrfMode::EmitOnly)},
    {"enforced", static_cast<int>(CsrfMode::Enforced)},
};
const EnumToken kHppTokens[] = {
    {"first-wins", static_cast<int>(HppBehavior::FirstWins)},
    {"last-wins", static_cast<int>(HppBehavior::LastWins)},
    {"concatenated", static_cast<int>(HppBehavior::Concatenated)},
    {"rejected", static_cast<int>(HppBehavior::Rejected)},
};

template <size_t N>
int parse_enum(const EnumToken (&table)[N], const std::string& raw,
               const std::string& key) {
  std::string v = to_lower(raw);
  for (const auto& t : table) {
    if (v == t.token) return t.value;
  }
  throw TestbedError("invalid value for " + key + ": " + raw);
}

template <size_t N>
const char* enum_token(const EnumToken (&table)[N], int value) {
  for (const auto& t : table) {
    if (t.value == value) return t.token;
  }
  return "?";
}

std::string format_minutes(double minutes) {
  std::ostringstream out;
  out << minutes;
  return out.str();
}

}  // namespace

void TestbedConfig::validate() const {
  if (listen_port < 0 || listen_port > 65535)
    throw TestbedError("listen_port out of range");
  if (lockout_threshold < 0 || captcha_after_n < 0 || rate_limit_per_second < 0)
    throw TestbedError("counters must be non-negative");
  if (session_timeout_minutes < 0)
    throw TestbedError("session_timeout_minutes must be non-negative");
  if (!sessions_enabled) {
    if (mfa != MfaMode::Off)
      throw TestbedError("a second factor needs sessions_enabled");
    if (csrf != CsrfMode::Off)
      throw TestbedError("per-session request tokens need sessions_enabled");
    if (captcha_after_n > 0)
      throw TestbedError("the failure challenge is tracked per session and "
                         "needs sessions_enabled");
    if (cookie_secure || cookie_httponly || cookie_samesite)
      throw TestbedError("cookie flags need sessions_enabled");
    if (session_timeout_minutes > 0 || regenerate_on_login ||
        fixation_protection || session_in_url)
      throw TestbedError("session lifecycle settings need sessions_enabled");
  }
}

namespace {

TestbedConfig hardened_preset() {
  TestbedConfig c;
  c.lockout_threshold = 5;
  c.captcha_after_n = 2;
  c.rate_limit_per_second = 3;
  c.rate_limit_response = RateLimitStyle::ErrorCode;
  c.password_policy = PasswordPolicy::Full;
  c.mfa = MfaMode::Totp;
  c.email_verification = true;
  c.sessions_enabled = true;
  c.cookie_secure = true;
  c.cookie_httponly = true;
  c.cookie_samesite = true;
  c.session_timeout_minutes = 0.025;
  c.regenerate_on_login = true;
  c.fixation_protection = true;
  c.session_in_url = false;
  c.csrf = CsrfMode::Enforced;
  c.output_escaping = true;
  c.sql_parameterized = true;
  c.get_login_enabled = false;
  c.echo_enabled = true;
  c.hpp_behavior = HppBehavior::Rejected;
  c.enumeration_messages = false;
  c.reveal_password_rules = false;
  c.failed_login_logging = true;
  c.hdr_csp = true;
  c.hdr_csp_block_inline = true;
  c.hdr_csp_block_data = true;
  c.hdr_csp_restrict_external = true;
  c.hdr_x_frame_options = true;
  c.hdr_x_content_type_options = true;
  c.hdr_hsts = true;
  c.hdr_hsts_max_age = true;
  c.hdr_referrer_policy = true;
  c.hdr_referrer_policy_strict = true;
  c.hdr_permissions_policy = true;
  c.hdr_device_features_restricted = true;
  return c;
}

TestbedConfig vulnerable_preset() {
  TestbedConfig c;
  c.sessions_enabled = true;
  c.session_in_url = true;
  c.get_login_enabled = true;
  c.echo_enabled = false;
  c.enumeration_messages = true;
  c.reveal_password_rules = true;
  return c;
}

// Reproduces the behaviors the bundled reference audits observed, so a scan
// of the preset yields the same dynamic observation values as the stored
// audit of the same name.
TestbedConfig reference_preset(std::string_view label) {
  TestbedConfig c;
  auto tok = [&](const char* id) { return reference::value_token(label, id); };
  auto is_yes = [&](const char* id) { return tok(id) == "Yes"; };

  c.lockout_threshold = is_yes("auth_lockout") ? 3 : 0;
  c.captcha_after_n = is_yes("auth_captcha") ? 2 : 0;
  const std::string policy = tok("auth_pw_complexity");
  if (policy == "Only Length") {
    c.password_policy = PasswordPolicy::LengthOnly;
  } else if (policy == "Length+letters+numbers") {
    c.password_policy = PasswordPolicy::LengthLettersNumbers;
  } else if (policy == "Full") {
    c.password_policy = PasswordPolicy::Full;
  } else {
    c.password_policy = PasswordPolicy::None;
  }
  c.mfa = is_yes("auth_mfa_enabled") ? MfaMode::Totp : MfaMode::Off;
  c.rate_limit_per_second = is_yes("auth_rate_limit") ? 3 : 0;
  const std::string style = tok("auth_rate_limit_response");
  if (style == "CAPTCHA") {
    c.rate_limit_response = RateLimitStyle::Captcha;
  } else if (style == "Lockout") {
    c.rate_limit_response = RateLimitStyle::Lockout;
  } else {
    c.rate_limit_response = RateLimitStyle::ErrorCode;
  }
  c.email_verification = is_yes("input_email_verification");

  c.sql_parameterized = is_yes("input_special_chars_escaped");
  c.output_escaping = tok("input_js_execution") == "No";
  c.get_login_enabled = tok("input_post_only_login") == "No";
  if (!is_yes("input_csrf_token_present")) {
    c.csrf = CsrfMode::Off;
  } else {
    c.csrf = is_yes("input_csrf_validation") ? CsrfMode::Enforced
                                             : CsrfMode::EmitOnly;
  }
  const std::string hpp = tok("input_hpp_handling");
  if (hpp == "NA") {
    c.echo_enabled = false;
  } else {
    c.echo_enabled = true;
    if (hpp == "first-wins") c.hpp_behavior = HppBehavior::FirstWins;
    else if (hpp == "concatenated") c.hpp_behavior = HppBehavior::Concatenated;
    else if (hpp == "rejected") c.hpp_behavior = HppBehavior::Rejected;
    else c.hpp_behavior = HppBehavior::LastWins;
  }

  c.sessions_enabled = is_yes("sess_creation");
  c.cookie_secure = is_yes("sess_cookie_secure");
  c.cookie_httponly = is_yes("sess_cookie_httponly");
  c.cookie_samesite = is_yes("sess_cookie_samesite");
  c.session_timeout_minutes = is_yes("sess_timeout") ? 0.025 : 0;
  c.regenerate_on_login = is_yes("sess_regenerated");
  c.fixation_protection = is_yes("sess_fixation_protection");
  c.session_in_url = tok("sess_id_in_cookies_only") == "No";

  c.enumeration_messages = is_yes("err_reveals_username");
  c.reveal_password_rules = is_yes("err_reveals_pw_rules");
  c.failed_login_logging = is_yes("err_failed_login_logged");

  c.hdr_csp = is_yes("hdr_csp_present");
  c.hdr_csp_block_inline = is_yes("hdr_csp_blocks_inline");
  c.hdr_csp_block_data = is_yes("hdr_csp_blocks_data_uris");
  c.hdr_csp_restrict_external = is_yes("hdr_csp_restricts_external");
  c.hdr_x_frame_options = is_yes("hdr_x_frame_options");
  c.hdr_x_content_type_options = is_yes("hdr_x_content_type_options");
  c.hdr_hsts = is_yes("hdr_hsts_present");
  c.hdr_hsts_max_age = tok("hdr_hsts_max_age") != "No";
  c.hdr_referrer_policy = is_yes("hdr_referrer_policy_set");
  c.hdr_referrer_policy_strict = is_yes("hdr_referrer_policy_strict");
  c.hdr_permissions_policy = is_yes("hdr_permissions_policy");
  c.hdr_device_features_restricted = is_yes("hdr_device_features_restricted");
  return c;
}

}  // namespace

TestbedConfig preset(const std::string& name) {
  std::string low = to_lower(trim(name));
  if (low == "hardened") return hardened_preset();
  if (low == "vulnerable") return vulnerable_preset();
  for (std::string_view label : reference::kLabels) {
    if (low == to_lower(std::string(label))) return reference_preset(label);
  }
  throw TestbedError("unknown preset: " + name);
}

TestbedConfig parse_testbed_config(std::string_view text) {
  TestbedConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw TestbedError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));

    if (key == "listen_port") c.listen_port = parse_int(value, key);
    else if (key == "lockout_threshold") c.lockout_threshold = parse_int(value, key);
    else if (key == "captcha_after_n") c.captcha_after_n = parse_int(value, key);
    else if (key == "rate_limit_per_second") c.rate_limit_per_second = parse_int(value, key);
    else if (key == "rate_limit_response")
      c.rate_limit_response = static_cast<RateLimitStyle>(parse_enum(kRateStyleTokens, value, key));
    else if (key == "password_policy")
      c.password_policy = static_cast<PasswordPolicy>(parse_enum(kPolicyTokens, value, key));
    else if (key == "mfa") c.mfa = static_cast<MfaMode>(parse_enum(kMfaTokens, value, key));
    else if (key == "email_verification") c.email_verification = parse_bool(value, key);
    else if (key == "sessions_enabled") c.sessions_enabled = parse_bool(value, key);
    else if (key == "cookie_secure") c.cookie_secure = parse_bool(value, key);
    else if (key == "cookie_httponly") c.cookie_httponly = parse_bool(value, key);
    else if (key == "cookie_samesite") c.cookie_samesite = parse_bool(value, key);
    else if (key == "session_timeout_minutes") c.session_timeout_minutes = parse_double(value, key);
    else if (key == "regenerate_on_login") c.regenerate_on_login = parse_bool(value, key);
    else if (key == "fixation_protection") c.fixation_protection = parse_bool(value, key);
    else if (key == "session_in_url") c.session_in_url = parse_bool(value, key);
    else if (key == "csrf") c.csrf = static_cast<CsrfMode>(parse_enum(kCsrfTokens, value, key));
    else if (key == "output_escaping") c.output_escaping = parse_bool(value, key);
    else if (key == "sql_parameterized") c.sql_parameterized = parse_bool(value, key);
    else if (key == "get_login_enabled") c.get_login_enabled = parse_bool(value, key);
    else if (key == "echo_enabled") c.echo_enabled = parse_bool(value, key);
    else if (key == "hpp_behavior")
      c.hpp_behavior = static_cast<HppBehavior>(parse_enum(kHppTokens, value, key));
    else if (key == "enumeration_messages") c.enumeration_messages = parse_bool(value, key);
    else if (key == "reveal_password_rules") c.reveal_password_rules = parse_bool(value, key);
    else if (key == "failed_login_logging") c.failed_login_logging = parse_bool(value, key);
    else if (key == "hdr_csp") c.hdr_csp = parse_bool(value, key);
    else if (key == "hdr_csp_block_inline") c.hdr_csp_block_inline = parse_bool(value, key);
    else if (key == "hdr_csp_block_data") c.hdr_csp_block_data = parse_bool(value, key);
    else if (key == "hdr_csp_restrict_external") c.hdr_csp_restrict_external = parse_bool(value, key);
    else if (key == "hdr_x_frame_options") c.hdr_x_frame_options = parse_bool(value, key);
    else if (key == "hdr_x_content_type_options") c.hdr_x_content_type_options = parse_bool(value, key);
    else if (key == "hdr_hsts") c.hdr_hsts = parse_bool(value, key);
    else if (key == "hdr_hsts_max_age") c.hdr_hsts_max_age = parse_bool(value, key);
    else if (key == "hdr_referrer_policy") c.hdr_referrer_policy = parse_bool(value, key);
    else if (key == "hdr_referrer_policy_strict") c.hdr_referrer_policy_strict = parse_bool(value, key);
    else if (key == "hdr_permissions_policy") c.hdr_permissions_policy = parse_bool(value, key);
    else if (key == "hdr_device_features_restricted") c.hdr_device_features_restricted = parse_bool(value, key);
    else throw TestbedError("line " + std::to_string(line_no) + ": unknown key " + key);
  }
  c.validate();
  return c;
}

TestbedConfig load_testbed_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TestbedError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_testbed_config(buf.str());
}

std::string serialize_testbed_config(const TestbedConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "listen_port = " << c.listen_port << "\n";
  out << "lockout_threshold = " << c.lockout_threshold << "\n";
  out << "captcha_after_n = " << c.captcha_after_n << "\n";
  out << "rate_limit_per_second = " << c.rate_limit_per_second << "\n";
  out << "rate_limit_response = "
      << enum_token(kRateStyleTokens, static_cast<int>(c.rate_limit_response)) << "\n";
  out << "password_policy = "
      << enum_token(kPolicyTokens, static_cast<int>(c.password_policy)) << "\n";
  out << "mfa = " << enum_token(kMfaTokens, static_cast<int>(c.mfa)) << "\n";
  out << "email_verification = " << b(c.email_verification) << "\n";
  out << "sessions_enabled = " << b(c.sessions_enabled) << "\n";
  out << "cookie_secure = " << b(c.cookie_secure) << "\n";
  out << "cookie_httponly = " << b(c.cookie_httponly) << "\n";
  out << "cookie_samesite = " << b(c.cookie_samesite) << "\n";
  out << "session_timeout_minutes = " << format_minutes(c.session_timeout_minutes) << "\n";
  out << "regenerate_on_login = " << b(c.regenerate_on_login) << "\n";
  out << "fixation_protection = " << b(c.fixation_protection) << "\n";
  out << "session_in_url = " << b(c.session_in_url) << "\n";
  out << "csrf = " << enum_token(kCsrfTokens, static_cast<int>(c.csrf)) << "\n";
  out << "output_escaping = " << b(c.output_escaping) << "\n";
  out << "sql_parameterized = " << b(c.sql_parameterized) << "\n";
  out << "get_login_enabled = " << b(c.get_login_enabled) << "\n";
  out << "echo_enabled = " << b(c.echo_enabled) << "\n";
  out << "hpp_behavior = "
      << enum_token(kHppTokens, static_cast<int>(c.hpp_behavior)) << "\n";
  out << "enumeration_messages = " << b(c.enumeration_messages) << "\n";
  out << "reveal_password_rules = " << b(c.reveal_password_rules) << "\n";
  out << "failed_login_logging = " << b(c.failed_login_logging) << "\n";
  out << "hdr_csp = " << b(c.hdr_csp) << "\n";
  out << "hdr_csp_block_inline = " << b(c.hdr_csp_block_inline) << "\n";
  out << "hdr_csp_block_data = " << b(c.hdr_csp_block_data) << "\n";
  out << "hdr_csp_restrict_external = " << b(c.hdr_csp_restrict_external) << "\n";
  out << "hdr_x_frame_options = " << b(c.hdr_x_frame_options) << "\n";
  out << "hdr_x_content_type_options = " << b(c.hdr_x_content_type_options) << "\n";
  out << "hdr_hsts = " << b(c.hdr_hsts) << "\n";
  out << "hdr_hsts_max_age = " << b(c.hdr_hsts_max_age) << "\n";
  out << "hdr_referrer_policy = " << b(c.hdr_referrer_policy) << "\n";
  out << "hdr_referrer_policy_strict = " << b(c.hdr_referrer_policy_strict) << "\n";
  out << "hdr_permissions_policy = " << b(c.hdr_permissions_policy) << "\n";
  out << "hdr_device_features_restricted = " << b(c.hdr_device_features_restricted) << "\n";
  return out.str();
}

const std::map<std::string, std::string>& dynamic_parameter_toggles() {
  static const std::map<std::string, std::string> toggles = {
      {"auth_lockout", "lockout_threshold"},
      {"auth_captcha", "captcha_after_n"},
      {"auth_pw_complexity", "password_policy"},
      {"auth_mfa_enabled", "mfa"},
      {"auth_mfa_type", "mfa"},
      {"auth_rate_limit", "rate_limit_per_second"},
      {"auth_rate_limit_response", "rate_limit_response"},
      {"input_email_verification", "email_verification"},
      {"input_special_chars_escaped", "sql_parameterized"},
      {"input_js_execution", "output_escaping"},
      {"input_html_injection", "output_escaping"},
      {"input_post_only_login", "get_login_enabled"},
      {"input_csrf_token_present", "csrf"},
      {"input_csrf_validation", "csrf"},
      {"input_hpp_handling", "hpp_behavior"},
      {"sess_creation", "sessions_enabled"},
      {"sess_cookie_secure", "cookie_secure"},
      {"sess_cookie_httponly", "cookie_httponly"},
      {"sess_cookie_samesite", "cookie_samesite"},
      {"sess_timeout", "session_timeout_minutes"},
      {"sess_regenerated", "regenerate_on_login"},
      {"sess_fixation_protection", "fixation_protection"},
      {"sess_id_in_cookies_only", "session_in_url"},
      {"err_reveals_username", "enumeration_messages"},
      {"err_reveals_pw_rules", "reveal_password_rules"},
      {"hdr_csp_present", "hdr_csp"},
      {"hdr_csp_blocks_inline", "hdr_csp_block_inline"},
      {"hdr_csp_blocks_data_uris", "hdr_csp_block_data"},
      {"hdr_csp_restricts_external", "hdr_csp_restrict_external"},
      {"hdr_x_frame_options", "hdr_x_frame_options"},
      {"hdr_x_content_type_options", "hdr_x_content_type_options"},
      {"hdr_hsts_present", "hdr_hsts"},
      {"hdr_hsts_max_age", "hdr_hsts_max_age"},
      {"hdr_referrer_policy_set", "hdr_referrer_policy"},
      {"hdr_referrer_policy_strict", "hdr_referrer_policy_strict"},
      {"hdr_permissions_policy", "hdr_permissions_policy"},
      {"hdr_device_features_restricted", "hdr_device_features_restricted"},
  };
  return toggles;
}

namespace {

struct Account {
  std::string password;
  std::string email;
  bool verified = true;
  int failed = 0;
  bool locked = false;
  std::string bio;
};

struct SessionState {
  std::string user;
  bool authenticated = false;
  std::string pending_user;
  std::string csrf_token;
  int failed_attempts = 0;  // drives the per-client challenge
  Clock::time_point last_seen{};
};

struct MailEntry {
  std::string recipient;
  std::string subject;
  std::string body;
  std::string captured_at;
};

}  // namespace

struct Testbed::Impl {
  TestbedConfig cfg;
  httplib::Server server;
  std::thread runner;
  int port = 0;

  std::mutex mu;
  std::map<std::string, Account> accounts;
  std::map<std::string, SessionState> sessions;
  std::map<std::string, std::string> verify_tokens;  // token -> username
  std::vector<MailEntry> mail;
  std::deque<Clock::time_point> login_window;
  std::vector<std::string> security_log;
  std::mt19937_64 rng{std::random_device{}()};

  explicit Impl(TestbedConfig c) : cfg(std::move(c)) {}

  ~Impl() {
    server.stop();
    if (runner.joinable()) runner.join();
  }

  std::string random_id() {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (int i = 0; i < 32; ++i) out.push_back(hex[rng() & 0xF]);
    return out;
  }

  void seed() {
    accounts.clear();
    sessions.clear();
    verify_tokens.clear();
    mail.clear();
    login_window.clear();
    security_log.clear();
    Account alice;
    alice.password = kSeedPassword;
    alice.email = kSeedEmail;
    alice.verified = true;
    accounts[kSeedUser] = alice;
  }

  // --- headers ---

  void apply_security_headers(httplib::Response& res) {
    if (cfg.hdr_csp) {
      std::string script = "'self'";
      if (!cfg.hdr_csp_block_inline) script += " 'unsafe-inline'";
      if (!cfg.hdr_csp_block_data) script += " data:";
      if (!cfg.hdr_csp_restrict_external) script += " *";
      res.set_header("Content-Security-Policy",
                     "default-src 'self'; script-src " + script);
    }
    if (cfg.hdr_x_frame_options) res.set_header("X-Frame-Options", "DENY");
    if (cfg.hdr_x_content_type_options)
      res.set_header("X-Content-Type-Options", "nosniff");
    if (cfg.hdr_hsts) {
      res.set_header("Strict-Transport-Security",
                     cfg.hdr_hsts_max_age ? "max-age=31536000; includeSubDomains"
                                          : "includeSubDomains");
    }
    if (cfg.hdr_referrer_policy) {
      res.set_header("Referrer-Policy", cfg.hdr_referrer_policy_strict
                                            ? "strict-origin-when-cross-origin"
                                            : "unsafe-url");
    }
    if (cfg.hdr_permissions_policy) {
      res.set_header("Permissions-Policy",
                     cfg.hdr_device_features_restricted
                         ? "camera=(), microphone=(), geolocation=()"
                         : "interest-cohort=()");
    }
  }

  // --- sessions ---

  struct SessionRef {
    std::string id;
    SessionState* state = nullptr;
  };

  std::string request_sid(const httplib::Request& req) const {
    std::string header = req.get_header_value("Cookie");
    std::istringstream in(header);
    std::string piece;
    while (std::getline(in, piece, ';')) {
      std::string entry = trim(piece);
      size_t eq = entry.find('=');
      if (eq == std::string::npos) continue;
      if (trim(entry.substr(0, eq)) == kCookieName)
        return trim(entry.substr(eq + 1));
    }
    if (cfg.session_in_url && req.has_param(kCookieName))
      return req.get_param_value(kCookieName);
    return {};
  }

  bool expired(const SessionState& s, Clock::time_point now) const {
    if (cfg.session_timeout_minutes <= 0) return false;
    auto budget = std::chrono::milliseconds(
        static_cast<long long>(cfg.session_timeout_minutes * 60000.0));
    return now - s.last_seen > budget;
  }

  void set_session_cookie(httplib::Response& res, const std::string& sid) {
    std::string line = std::string(kCookieName) + "=" + sid + "; Path=/";
    if (cfg.cookie_secure) line += "; Secure";
    if (cfg.cookie_httponly) line += "; HttpOnly";
    if (cfg.cookie_samesite) line += "; SameSite=Strict";
    res.set_header("Set-Cookie", line);
  }

  // Looks up the presented session, expiring it if stale. Without strict
  // fixation protection an unrecognized id is adopted as-is; with it, a
  // fresh id is always issued instead.
  SessionRef ensure_session(const httplib::Request& req, httplib::Response& res) {
    if (!cfg.sessions_enabled) return {};
    auto now = Clock::now();
    std::string sid = request_sid(req);
    if (!sid.empty()) {
      auto it = sessions.find(sid);
      if (it != sessions.end()) {
        if (expired(it->second, now)) {
          sessions.erase(it);
        } else {
          it->second.last_seen = now;
          return {sid, &it->second};
        }
      } else if (!cfg.fixation_protection) {
        SessionState& st = sessions[sid];
        st.csrf_token = random_id();
        st.last_seen = now;
        return {sid, &st};
      }
    }
    std::string fresh = random_id();
    SessionState& st = sessions[fresh];
    st.csrf_token = random_id();
    st.last_seen = now;
    set_session_cookie(res, fresh);
    return {fresh, &st};
  }

  void finish_login(const httplib::Request& req, httplib::Response& res,
                    SessionRef sess, const std::string& user) {
    std::string final_sid = sess.id;
    if (cfg.sessions_enabled && sess.state) {
      std::string presented = request_sid(req);
      if (cfg.regenerate_on_login) {
        sessions.erase(sess.id);
        final_sid = random_id();
        SessionState& ns = sessions[final_sid];
        ns.user = user;
        ns.authenticated = true;
        ns.csrf_token = random_id();
        ns.last_seen = Clock::now();
        set_session_cookie(res, final_sid);
        sess = {final_sid, &ns};
      } else {
        sess.state->user = user;
        sess.state->authenticated = true;
        sess.state->pending_user.clear();
        sess.state->last_seen = Clock::now();
      }
      // Without strict protection the id the client walked in with keeps
      // working after authentication, even when a new one was also issued.
      if (!cfg.fixation_protection && !presented.empty() &&
          presented != final_sid) {
        SessionState& legacy = sessions[presented];
        legacy.user = user;
        legacy.authenticated = true;
        legacy.csrf_token = sess.state->csrf_token;
        legacy.last_seen = Clock::now();
      }
    }
    std::string location = "/profile";
    if (cfg.sessions_enabled && cfg.session_in_url)
      location += std::string("?") + kCookieName + "=" + final_sid;
    res.status = 302;
    res.set_header("Location", location);
    res.set_content("<p>Welcome back, " + html_escape(user) + "!</p>",
                    "text/html; charset=utf-8");
  }

  // --- shared responses ---

  void page(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "text/html; charset=utf-8");
  }

  std::string captcha_markup() const {
    return "<div class=\"g-recaptcha\" data-sitekey=\"testbed\"></div>";
  }

  bool rate_limited_now() {
    if (cfg.rate_limit_per_second <= 0) return false;
    auto now = Clock::now();
    while (!login_window.empty() &&
           now - login_window.front() > std::chrono::seconds(1))
      login_window.pop_front();
    return static_cast<int>(login_window.size()) >= cfg.rate_limit_per_second;
  }

  void respond_rate_limited(httplib::Response& res) {
    switch (cfg.rate_limit_response) {
      case RateLimitStyle::Captcha:
        page(res, 429,
             "<p>Too many requests. Complete the challenge to continue.</p>" +
                 captcha_markup());
        return;
      case RateLimitStyle::Lockout:
        page(res, 429,
             "<p>Too many requests. The account has been temporarily locked.</p>");
        return;
      case RateLimitStyle::ErrorCode:
        break;
    }
    page(res, 429, "<p>Too many requests. Please slow down and try again.</p>");
  }

  bool policy_accepts(const std::string& password) const {
    auto has = [&](auto pred) {
      return std::any_of(password.begin(), password.end(), [&](unsigned char ch) {
        return pred(ch);
      });
    };
    switch (cfg.password_policy) {
      case PasswordPolicy::None:
        return true;
      case PasswordPolicy::LengthOnly:
        return password.size() >= 12;
      case PasswordPolicy::LengthLettersNumbers:
        return password.size() >= 12 &&
               has([](unsigned char ch) { return std::isalpha(ch); }) &&
               has([](unsigned char ch) { return std::isdigit(ch); });
      case PasswordPolicy::Full:
        return password.size() >= 12 &&
               has([](unsigned char ch) { return std::isupper(ch); }) &&
               has([](unsigned char ch) { return std::islower(ch); }) &&
               has([](unsigned char ch) { return std::isdigit(ch); }) &&
               has([](unsigned char ch) { return !std::isalnum(ch); });
    }
    return true;
  }

  std::string policy_text() const {
    switch (cfg.password_policy) {
      case PasswordPolicy::LengthOnly:
        return "Password must be at least 12 characters long.";
      case PasswordPolicy::LengthLettersNumbers:
        return "Password must be at least 12 characters long and contain "
               "letters and numbers.";
      case PasswordPolicy::Full:
        return "Password must be at least 12 characters long and contain "
               "uppercase and lowercase letters, numbers, and special "
               "characters.";
      case PasswordPolicy::None:
        break;
    }
    return "Password rejected.";
  }

  void log_failed_login(const std::string& user) {
    if (cfg.failed_login_logging)
      security_log.push_back("failed login for " + user + " at " + now_iso8601());
  }

  // --- request handlers (all called with mu held) ---

  void handle_login_attempt(const httplib::Request& req, httplib::Response& res) {
    if (rate_limited_now()) {
      respond_rate_limited(res);
      return;
    }
    if (cfg.rate_limit_per_second > 0) login_window.push_back(Clock::now());
    SessionRef sess = ensure_session(req, res);
    std::string user = req.get_param_value("username");
    std::string pass = req.get_param_value("password");

    bool tautology =
        !cfg.sql_parameterized && (pass.find("' OR '") != std::string::npos ||
                                   user.find("' OR '") != std::string::npos);

    // The challenge counter is per client session, so every failure from
    // the same client looks the same regardless of which account it named.
    auto session_challenge = [&]() {
      if (cfg.captcha_after_n <= 0 || !sess.state) return false;
      ++sess.state->failed_attempts;
      return sess.state->failed_attempts >= cfg.captcha_after_n;
    };

    auto it = accounts.find(user);
    if (it == accounts.end() && !tautology) {
      log_failed_login(user);
      std::string body = cfg.enumeration_messages
                             ? "<p>No account found with that username.</p>"
                             : "<p>Invalid username or password.</p>";
      if (session_challenge()) body += captcha_markup();
      page(res, 401, body);
      return;
    }
    std::string resolved = it == accounts.end() ? kSeedUser : it->first;
    Account& acct = accounts[resolved];
    if (acct.locked) {
      page(res, 423,
           "<p>Account locked due to too many failed login attempts.</p>");
      return;
    }
    if (!tautology && pass != acct.password) {
      ++acct.failed;
      log_failed_login(resolved);
      bool challenge = session_challenge();
      if (cfg.lockout_threshold > 0 && acct.failed >= cfg.lockout_threshold) {
        acct.locked = true;
        std::string body =
            "<p>Account locked due to too many failed login attempts.</p>";
        if (challenge) body += captcha_markup();
        page(res, 423, body);
        return;
      }
      std::string body = cfg.enumeration_messages
                             ? "<p>Incorrect password for this account.</p>"
                             : "<p>Invalid username or password.</p>";
      if (challenge) body += captcha_markup();
      page(res, 401, body);
      return;
    }
    if (!acct.verified) {
      page(res, 403, "<p>Please verify your email before logging in.</p>");
      return;
    }
    acct.failed = 0;
    if (cfg.mfa == MfaMode::Totp) {
      if (sess.state) sess.state->pending_user = resolved;
      page(res, 200,
           "<h1>Second step</h1>"
           "<form method=\"post\" action=\"/login/mfa\">"
           "<label>Enter the 6-digit code from your authenticator app</label>"
           "<input type=\"text\" name=\"code\">"
           "<input type=\"submit\" value=\"Continue\">"
           "</form>");
      return;
    }
    finish_login(req, res, sess, resolved);
  }

  void handle_login_get(const httplib::Request& req, httplib::Response& res) {
    if (cfg.get_login_enabled && req.has_param("username") &&
        req.has_param("password")) {
      handle_login_attempt(req, res);
      return;
    }
    ensure_session(req, res);
    page(res, 200,
         "<h1>Sign in</h1>"
         "<form method=\"post\" action=\"/login\">"
         "<label>Username</label><input type=\"text\" name=\"username\">"
         "<label>Password</label><input type=\"password\" name=\"password\">"
         "<input type=\"submit\" value=\"Sign in\">"
         "</form>");
  }

  void handle_mfa(const httplib::Request& req, httplib::Response& res) {
    SessionRef sess = ensure_session(req, res);
    if (!sess.state || sess.state->pending_user.empty()) {
      page(res, 400, "<p>No pending sign-in for this session.</p>");
      return;
    }
    if (req.get_param_value("code") != kMfaCode) {
      page(res, 401, "<p>Invalid verification code.</p>");
      return;
    }
    std::string user = sess.state->pending_user;
    sess.state->pending_user.clear();
    finish_login(req, res, sess, user);
  }

  void handle_register(const httplib::Request& req, httplib::Response& res) {
    std::string user = req.get_param_value("username");
    std::string email = req.get_param_value("email");
    std::string pass = req.get_param_value("password");
    if (user.empty()) {
      page(res, 400, "<p>Registration failed.</p>");
      return;
    }
    if (accounts.count(user)) {
      page(res, 400, "<p>That username is already taken.</p>");
      return;
    }
    if (!policy_accepts(pass)) {
      page(res, 400, cfg.reveal_password_rules
                         ? "<p>" + policy_text() + "</p>"
                         : "<p>Registration failed.</p>");
      return;
    }
    Account acct;
    acct.password = pass;
    acct.email = email;
    acct.verified = !cfg.email_verification;
    accounts[user] = acct;
    if (cfg.email_verification) {
      std::string token = random_id();
      verify_tokens[token] = user;
      mail.push_back({email, "Verify your account",
                      "Hello " + user + ", open /verify?token=" + token +
                          " to activate your account.",
                      now_iso8601()});
      page(res, 200,
           "<p>Registration successful. Check your inbox for a verification "
           "link.</p>");
      return;
    }
    page(res, 200, "<p>Registration successful.</p>");
  }

  void handle_verify(const httplib::Request& req, httplib::Response& res) {
    std::string token = req.get_param_value("token");
    auto it = verify_tokens.find(token);
    if (it == verify_tokens.end()) {
      page(res, 400, "<p>Unknown or expired verification token.</p>");
      return;
    }
    auto acct = accounts.find(it->second);
    if (acct != accounts.end()) acct->second.verified = true;
    verify_tokens.erase(it);
    page(res, 200, "<p>Email verified. You can now sign in.</p>");
  }

  void handle_profile_get(const httplib::Request& req, httplib::Response& res) {
    SessionRef sess = ensure_session(req, res);
    if (!sess.state || !sess.state->authenticated) {
      res.status = 302;
      res.set_header("Location", "/login");
      res.set_content("<p>Please sign in first.</p>", "text/html; charset=utf-8");
      return;
    }
    const Account& acct = accounts[sess.state->user];
    std::string body = "<h1>Your profile</h1><p>Signed in as " +
                       html_escape(sess.state->user) + ".</p>";
    body += "<p>Bio: " +
            (cfg.output_escaping ? html_escape(acct.bio) : acct.bio) + "</p>";
    body += "<form method=\"post\" action=\"/profile\">";
    if (cfg.csrf != CsrfMode::Off) {
      body += "<input type=\"hidden\" name=\"csrf_token\" value=\"" +
              html_escape(sess.state->csrf_token) + "\">";
    }
    body += "<label>Bio</label><input type=\"text\" name=\"bio\" value=\"" +
            html_escape(acct.bio) + "\">";
    body += "<input type=\"submit\" value=\"Save\"></form>";
    body += "<p><a href=\"/logout\">Sign out</a></p>";
    page(res, 200, body);
  }

  void handle_profile_post(const httplib::Request& req, httplib::Response& res) {
    SessionRef sess = ensure_session(req, res);
    if (!sess.state || !sess.state->authenticated) {
      res.status = 302;
      res.set_header("Location", "/login");
      res.set_content("<p>Please sign in first.</p>", "text/html; charset=utf-8");
      return;
    }
    if (cfg.csrf == CsrfMode::Enforced &&
        req.get_param_value("csrf_token") != sess.state->csrf_token) {
      page(res, 403, "<p>Request blocked: the request token did not match.</p>");
      return;
    }
    accounts[sess.state->user].bio = req.get_param_value("bio");
    page(res, 200, "<p>Profile updated.</p>");
  }

  void handle_search(const httplib::Request& req, httplib::Response& res) {
    std::string q = req.get_param_value("q");
    std::string shown = cfg.output_escaping ? html_escape(q) : q;
    if (!cfg.sql_parameterized &&
        (q.find('\'') != std::string::npos || q.find('"') != std::string::npos)) {
      page(res, 200,
           "<h1>Search</h1><p>You have an error in your SQL syntax; check the "
           "manual that corresponds to your MySQL server version for the "
           "right syntax to use near '" +
               shown + "' at line 1</p>");
      return;
    }
    page(res, 200, "<h1>Search</h1><p>Results for " + shown +
                       "</p><p>No matching records.</p>");
  }

  void handle_echo(const httplib::Request& req, httplib::Response& res) {
    size_t n = req.get_param_value_count("p");
    if (cfg.hpp_behavior == HppBehavior::Rejected && n > 1) {
      page(res, 400, "<p>Duplicate parameters are not allowed.</p>");
      return;
    }
    std::string value;
    if (n == 1) {
      value = req.get_param_value("p");
    } else if (n > 1) {
      switch (cfg.hpp_behavior) {
        case HppBehavior::FirstWins:
          value = req.get_param_value("p", 0);
          break;
        case HppBehavior::Concatenated:
          for (size_t i = 0; i < n; ++i) {
            if (i) value += ", ";
            value += req.get_param_value("p", i);
          }
          break;
        case HppBehavior::LastWins:
        case HppBehavior::Rejected:
          value = req.get_param_value("p", n - 1);
          break;
      }
    }
    page(res, 200, "<p>Echo: " + html_escape(value) + "</p>");
  }

  void handle_logout(const httplib::Request& req, httplib::Response& res) {
    std::string sid = request_sid(req);
    if (!sid.empty()) sessions.erase(sid);
    if (cfg.sessions_enabled) {
      res.set_header("Set-Cookie", std::string(kCookieName) +
                                       "=deleted; Path=/; Max-Age=0");
    }
    res.status = 302;
    res.set_header("Location", "/login");
    res.set_content("<p>Signed out.</p>", "text/html; charset=utf-8");
  }

  void handle_home(const httplib::Request& req, httplib::Response& res) {
    ensure_session(req, res);
    page(res, 200,
         "<h1>Acme Notes</h1><p>A small demonstration application.</p>"
         "<nav><a href=\"/login\">Sign in</a> "
         "<a href=\"/register\">Register</a> "
         "<a href=\"/search?q=\">Search</a></nav>");
  }

  void handle_mail(httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : mail) {
      out.push_back({{"recipient", m.recipient},
                     {"subject", m.subject},
                     {"body", m.body},
                     {"captured_at", m.captured_at}});
    }
    res.status = 200;
    res.set_content(out.dump(2) + "\n", "application/json");
  }

  void install_routes() {
    auto locked = [this](void (Impl::*fn)(const httplib::Request&,
                                          httplib::Response&)) {
      return [this, fn](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard<std::mutex> guard(mu);
        (this->*fn)(req, res);
      };
    };

    server.Get("/", locked(&Impl::handle_home));
    server.Get("/login", locked(&Impl::handle_login_get));
    server.Post("/login", locked(&Impl::handle_login_attempt));
    server.Post("/login/mfa", locked(&Impl::handle_mfa));
    server.Get("/register", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard<std::mutex> guard(mu);
      page(res, 200,
           "<h1>Register</h1>"
           "<form method=\"post\" action=\"/register\">"
           "<label>Username</label><input type=\"text\" name=\"username\">"
           "<label>Email</label><input type=\"text\" name=\"email\">"
           "<label>Password</label><input type=\"password\" name=\"password\">"
           "<input type=\"submit\" value=\"Register\">"
           "</form>");
    });
    server.Post("/register", locked(&Impl::handle_register));
    server.Get("/verify", locked(&Impl::handle_verify));
    server.Get("/profile", locked(&Impl::handle_profile_get));
    server.Post("/profile", locked(&Impl::handle_profile_post));
    server.Get("/search", locked(&Impl::handle_search));
    if (cfg.echo_enabled) server.Get("/echo", locked(&Impl::handle_echo));
    server.Get("/logout", locked(&Impl::handle_logout));
    server.Post("/logout", locked(&Impl::handle_logout));
    server.Get("/_testbed/mail", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard<std::mutex> guard(mu);
      handle_mail(res);
    });
    server.Post("/_testbed/reset", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard<std::mutex> guard(mu);
      seed();
      page(res, 200, "<p>State reset.</p>");
    });

    server.set_post_routing_handler(
        [this](const httplib::Request&, httplib::Response& res) {
          apply_security_headers(res);
        });
  }
};

Testbed::Testbed(TestbedConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->cfg.validate();
  impl_->seed();
  impl_->install_routes();

  if (impl_->cfg.listen_port > 0) {
    if (!impl_->server.bind_to_port("127.0.0.1", impl_->cfg.listen_port))
      throw TestbedError("cannot bind to port " +
                         std::to_string(impl_->cfg.listen_port));
    impl_->port = impl_->cfg.listen_port;
  } else {
    int p = impl_->server.bind_to_any_port("127.0.0.1");
    if (p <= 0) throw TestbedError("cannot bind to an ephemeral port");
    impl_->port = p;
  }

  Impl* impl = impl_.get();
  impl_->runner = std::thread([impl] { impl->server.listen_after_bind(); });
  for (int i = 0; i < 500 && !impl_->server.is_running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  if (!impl_->server.is_running())
    throw TestbedError("the fixture server did not start");
}

Testbed::~Testbed() = default;

int Testbed::port() const { return impl_->port; }

std::string Testbed::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

const TestbedConfig& Testbed::config() const { return impl_->cfg; }

std::string Testbed::mfa_code() const { return kMfaCode; }

std::string Testbed::account_username() const { return kSeedUser; }

std::string Testbed::account_password() const { return kSeedPassword; }

TargetConfig Testbed::target_config() const {
  const TestbedConfig& cfg = impl_->cfg;
  TargetConfig t;
  t.base_url = base_url();
  t.label = "testbed";
  t.search_path = "/search?q";
  t.echo_path = "/echo?p";
  t.mail_sink_path = "/_testbed/mail";
  t.valid_username = kSeedUser;
  t.valid_password = kSeedPassword;
  t.invalid_username = "intruder";
  t.invalid_password = "wrong-password-123!";
  t.nonexistent_username = "mallory_nobody";
  t.mfa_code = kMfaCode;
  t.max_failed_attempts = cfg.lockout_threshold > 0 ? cfg.lockout_threshold + 1 : 4;
  t.burst_size = cfg.rate_limit_per_second > 0
                     ? std::max(8, cfg.rate_limit_per_second * 2 + 4)
                     : 8;
  if (cfg.session_timeout_minutes > 0) {
    t.session_timeout_budget = std::chrono::milliseconds(
        static_cast<long long>(cfg.session_timeout_minutes * 60000.0) + 1000);
  } else {
    t.session_timeout_budget = std::chrono::milliseconds(2500);
  }
  t.destructive_allowed = true;
  return t;
}

}  // namespace webaudit

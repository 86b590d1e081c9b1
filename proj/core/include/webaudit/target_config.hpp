#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

namespace webaudit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a scan needs to know about a live target: endpoints, test
// credentials, form field names, and probe budgets. Loaded from a
// line-oriented "key = value" document ('#' starts a comment).
struct TargetConfig {
  std::string base_url;  // http:// or https://, no trailing slash

  std::string login_path = "/login";
  std::string register_path = "/register";
  std::string logout_path = "/logout";
  std::string profile_path = "/profile";   // authenticated page
  std::string form_path = "/profile";      // state-changing authenticated form
  std::string search_path;                 // reflecting input surface, empty = none
  std::string echo_path;                   // parameter-reflecting endpoint, empty = none
  std::string mail_sink_path;              // captured-mail endpoint, empty = none

  std::string username_field = "username";
  std::string password_field = "password";
  std::string email_field = "email";

  std::string valid_username;
  std::string valid_password;
  std::string invalid_username;
  std::string invalid_password;
  std::string nonexistent_username;
  std::string mfa_code;  // second-factor code for the test account, empty = none

  int burst_size = 10;
  int max_failed_attempts = 6;
  std::chrono::milliseconds session_timeout_budget{3000};
  std::chrono::milliseconds request_timeout{5000};
  bool destructive_allowed = false;

  std::string label;  // report label; defaults to the host part of base_url

  // Throws ConfigError on a malformed base_url, missing credentials, or
  // non-positive budgets.
  void validate() const;
  std::string host() const;
  std::string effective_label() const;
};

// Durations accept "1500ms", "3s", "2m" or a bare millisecond count.
std::chrono::milliseconds parse_duration(std::string_view text);

TargetConfig parse_target_config(std::string_view text);
TargetConfig load_target_config_file(const std::string& path);
std::string serialize_target_config(const TargetConfig& config);

}  // namespace webaudit

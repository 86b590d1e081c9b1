#include "webaudit/target_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace webaudit {

namespace {

std::string strip(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v, const std::string& key) {
  std::string k;
  for (char c : v) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (k == "true" || k == "yes" || k == "on" || k == "1") return true;
  if (k == "false" || k == "no" || k == "off" || k == "0") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t idx = 0;
    int n = std::stoi(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

}  // namespace

std::chrono::milliseconds parse_duration(std::string_view text) {
  std::string t = strip(text);
  if (t.empty()) throw ConfigError("empty duration");
  size_t idx = 0;
  long long n;
  try {
    n = std::stoll(t, &idx);
  } catch (const std::exception&) {
    throw ConfigError("bad duration: '" + t + "'");
  }
  std::string unit = strip(t.substr(idx));
  if (n < 0) throw ConfigError("negative duration: '" + t + "'");
  if (unit.empty() || unit == "ms") return std::chrono::milliseconds(n);
  if (unit == "s") return std::chrono::milliseconds(n * 1000);
  if (unit == "m") return std::chrono::milliseconds(n * 60'000);
  throw ConfigError("bad duration unit: '" + t + "'");
}

void TargetConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw ConfigError("base_url must start with http:// or https://");
  }
  if (host().empty()) throw ConfigError("base_url has no host");
  if (valid_username.empty() || valid_password.empty()) {
    throw ConfigError("valid_username/valid_password are required");
  }
  if (nonexistent_username.empty()) throw ConfigError("nonexistent_username is required");
  if (burst_size <= 0) throw ConfigError("burst_size must be positive");
  if (max_failed_attempts <= 0) throw ConfigError("max_failed_attempts must be positive");
  if (session_timeout_budget.count() <= 0) throw ConfigError("session_timeout_budget must be positive");
  if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
}

std::string TargetConfig::host() const {
  size_t scheme = base_url.find("://");
  if (scheme == std::string::npos) return {};
  std::string rest = base_url.substr(scheme + 3);
  size_t slash = rest.find('/');
  if (slash != std::string::npos) rest = rest.substr(0, slash);
  return rest;
}

std::string TargetConfig::effective_label() const {
  return label.empty() ? host() : label;
}

TargetConfig parse_target_config(std::string_view text) {
  TargetConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip(line);
    if (body.empty() || body[0] == '#') continue;
    size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = strip(body.substr(0, eq));
    std::string value = strip(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }

  auto take = [&](const char* key, std::string& into) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      into = it->second;
      kv.erase(it);
    }
  };

  take("base_url", cfg.base_url);
  take("login_path", cfg.login_path);
  take("register_path", cfg.register_path);
  take("logout_path", cfg.logout_path);
  take("profile_path", cfg.profile_path);
  take("form_path", cfg.form_path);
  take("search_path", cfg.search_path);
  take("echo_path", cfg.echo_path);
  take("mail_sink_path", cfg.mail_sink_path);
  take("username_field", cfg.username_field);
  take("password_field", cfg.password_field);
  take("email_field", cfg.email_field);
  take("valid_username", cfg.valid_username);
  take("valid_password", cfg.valid_password);
  take("invalid_username", cfg.invalid_username);
  take("invalid_password", cfg.invalid_password);
  take("nonexistent_username", cfg.nonexistent_username);
  take("mfa_code", cfg.mfa_code);
  take("label", cfg.label);

  if (auto it = kv.find("burst_size"); it != kv.end()) {
    cfg.burst_size = parse_int(it->second, "burst_size");
    kv.erase(it);
  }
  if (auto it = kv.find("max_failed_attempts"); it != kv.end()) {
    cfg.max_failed_attempts = parse_int(it->second, "max_failed_attempts");
    kv.erase(it);
  }
  if (auto it = kv.find("session_timeout_budget"); it != kv.end()) {
    cfg.session_timeout_budget = parse_duration(it->second);
    kv.erase(it);
  }
  if (auto it = kv.find("request_timeout"); it != kv.end()) {
    cfg.request_timeout = parse_duration(it->second);
    kv.erase(it);
  }
  if (auto it = kv.find("destructive_allowed"); it != kv.end()) {
    cfg.destructive_allowed = parse_bool(it->second, "destructive_allowed");
    kv.erase(it);
  }
  if (!kv.empty()) {
    throw ConfigError("unknown key: '" + kv.begin()->first + "'");
  }
  cfg.validate();
  return cfg;
}

TargetConfig load_target_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open target config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_target_config(buf.str());
}

std::string serialize_target_config(const TargetConfig& config) {
  std::ostringstream out;
  out << "# webaudit target\n";
  out << "base_url = " << config.base_url << "\n";
  out << "label = " << config.effective_label() << "\n";
  out << "login_path = " << config.login_path << "\n";
  out << "register_path = " << config.register_path << "\n";
  out << "logout_path = " << config.logout_path << "\n";
  out << "profile_path = " << config.profile_path << "\n";
  out << "form_path = " << config.form_path << "\n";
  if (!config.search_path.empty()) out << "search_path = " << config.search_path << "\n";
  if (!config.echo_path.empty()) out << "echo_path = " << config.echo_path << "\n";
  if (!config.mail_sink_path.empty())
    out << "mail_sink_path = " << config.mail_sink_path << "\n";
  out << "username_field = " << config.username_field << "\n";
  out << "password_field = " << config.password_field << "\n";
  out << "email_field = " << config.email_field << "\n";
  out << "valid_username = " << config.valid_username << "\n";
  out << "valid_password = " << config.valid_password << "\n";
  out << "invalid_username = " << config.invalid_username << "\n";
  out << "invalid_password = " << config.invalid_password << "\n";
  out << "nonexistent_username = " << config.nonexistent_username << "\n";
  if (!config.mfa_code.empty()) out << "mfa_code = " << config.mfa_code << "\n";
  out << "burst_size = " << config.burst_size << "\n";
  out << "max_failed_attempts = " << config.max_failed_attempts << "\n";
  out << "session_timeout_budget = " << config.session_timeout_budget.count() << "ms\n";
  out << "request_timeout = " << config.request_timeout.count() << "ms\n";
  out << "destructive_allowed = " << (config.destructive_allowed ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace webaudit

#include "webaudit/checklist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace webaudit {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string strip(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Normalized key for level parsing: lowercase, spaces/underscores/dashes removed.
std::string level_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

int ordinal(Likelihood l) { return static_cast<int>(l); }
int ordinal(Impact i) { return static_cast<int>(i); }
int rank(RiskLevel r) { return static_cast<int>(r); }

std::string_view to_token(Likelihood l) {
  switch (l) {
    case Likelihood::Rare: return "Rare";
    case Likelihood::Unlikely: return "Unlikely";
    case Likelihood::Moderate: return "Moderate";
    case Likelihood::Likely: return "Likely";
    case Likelihood::AlmostCertain: return "AlmostCertain";
  }
  return "?";
}

std::string_view to_token(Impact i) {
  switch (i) {
    case Impact::Insignificant: return "Insignificant";
    case Impact::Minor: return "Minor";
    case Impact::Significant: return "Significant";
    case Impact::Major: return "Major";
    case Impact::Severe: return "Severe";
  }
  return "?";
}

std::string_view to_token(RiskLevel r) {
  switch (r) {
    case RiskLevel::VeryLow: return "VeryLow";
    case RiskLevel::Low: return "Low";
    case RiskLevel::Medium: return "Medium";
    case RiskLevel::High: return "High";
    case RiskLevel::VeryHigh: return "VeryHigh";
    case RiskLevel::Extreme: return "Extreme";
  }
  return "?";
}

std::string_view to_token(Category c) {
  switch (c) {
    case Category::AuthenticationSecurity: return "AuthenticationSecurity";
    case Category::InputValidation: return "InputValidation";
    case Category::SessionSecurity: return "SessionSecurity";
    case Category::SecureStorage: return "SecureStorage";
    case Category::ErrorHandling: return "ErrorHandling";
    case Category::HttpSecurityHeaders: return "HttpSecurityHeaders";
  }
  return "?";
}

std::string_view to_token(Polarity p) {
  return p == Polarity::DesiredYes ? "DesiredYes" : "DesiredNo";
}

std::string_view to_token(ParameterKind k) {
  return k == ParameterKind::Boolean ? "Boolean" : "Categorical";
}

std::string_view to_token(EvalMode m) {
  switch (m) {
    case EvalMode::Dynamic: return "Dynamic";
    case EvalMode::Static: return "Static";
    case EvalMode::Manual: return "Manual";
  }
  return "?";
}

std::string_view display_name(Likelihood l) {
  return l == Likelihood::AlmostCertain ? "Almost Certain" : to_token(l);
}

std::string_view display_name(Impact i) { return to_token(i); }

std::string_view display_name(RiskLevel r) {
  switch (r) {
    case RiskLevel::VeryLow: return "Very Low";
    case RiskLevel::VeryHigh: return "Very High";
    default: return to_token(r);
  }
}

std::string_view display_name(Category c) {
  switch (c) {
    case Category::AuthenticationSecurity: return "Authentication Security";
    case Category::InputValidation:
      return "Input Validation & Protection Against Injection Attacks";
    case Category::SessionSecurity: return "Session Security";
    case Category::SecureStorage: return "Secure Storage";
    case Category::ErrorHandling: return "Error Handling & Information Disclosure";
    case Category::HttpSecurityHeaders: return "HTTP Security Headers";
  }
  return "?";
}

std::optional<Likelihood> parse_likelihood(std::string_view s) {
  std::string k = level_key(s);
  if (k == "rare") return Likelihood::Rare;
  if (k == "unlikely") return Likelihood::Unlikely;
  if (k == "moderate") return Likelihood::Moderate;
  if (k == "likely") return Likelihood::Likely;
  if (k == "almostcertain") return Likelihood::AlmostCertain;
  return std::nullopt;
}

std::optional<Impact> parse_impact(std::string_view s) {
  std::string k = level_key(s);
  if (k == "insignificant") return Impact::Insignificant;
  if (k == "minor") return Impact::Minor;
  if (k == "significant") return Impact::Significant;
  if (k == "major") return Impact::Major;
  if (k == "severe") return Impact::Severe;
  return std::nullopt;
}

std::optional<RiskLevel> parse_risk_level(std::string_view s) {
  std::string k = level_key(s);
  if (k == "verylow") return RiskLevel::VeryLow;
  if (k == "low") return RiskLevel::Low;
  if (k == "medium") return RiskLevel::Medium;
  if (k == "high") return RiskLevel::High;
  if (k == "veryhigh") return RiskLevel::VeryHigh;
  if (k == "extreme") return RiskLevel::Extreme;
  return std::nullopt;
}

std::optional<Category> parse_category(std::string_view s) {
  std::string k = level_key(s);
  for (Category c : kAllCategories) {
    if (k == level_key(to_token(c)) || k == level_key(display_name(c))) return c;
  }
  // Long-form name of InputValidation without the ampersand.
  if (k.find("inputvalidation") != std::string::npos) return Category::InputValidation;
  if (k.find("errorhandling") != std::string::npos) return Category::ErrorHandling;
  return std::nullopt;
}

std::optional<Polarity> parse_polarity(std::string_view s) {
  std::string k = level_key(s);
  if (k == "desiredyes") return Polarity::DesiredYes;
  if (k == "desiredno") return Polarity::DesiredNo;
  return std::nullopt;
}

std::optional<ParameterKind> parse_parameter_kind(std::string_view s) {
  std::string k = level_key(s);
  if (k == "boolean") return ParameterKind::Boolean;
  if (k == "categorical") return ParameterKind::Categorical;
  return std::nullopt;
}

std::optional<EvalMode> parse_eval_mode(std::string_view s) {
  std::string k = level_key(s);
  if (k == "dynamic") return EvalMode::Dynamic;
  if (k == "static") return EvalMode::Static;
  if (k == "manual") return EvalMode::Manual;
  return std::nullopt;
}

int expected_parameter_count(Category c) {
  switch (c) {
    case Category::AuthenticationSecurity: return 11;
    case Category::InputValidation: return 10;
    case Category::SessionSecurity: return 8;
    case Category::SecureStorage: return 2;
    case Category::ErrorHandling: return 5;
    case Category::HttpSecurityHeaders: return 12;
  }
  return 0;
}

RiskLevel risk_level(Likelihood likelihood, Impact impact) {
  int p = ordinal(likelihood) * ordinal(impact);
  if (p >= 20) return RiskLevel::Extreme;
  if (p >= 13) return RiskLevel::VeryHigh;
  if (p >= 10) return RiskLevel::High;
  if (p >= 6) return RiskLevel::Medium;
  if (p >= 3) return RiskLevel::Low;
  return RiskLevel::VeryLow;
}

const ParameterSpec* Checklist::find(std::string_view id) const {
  for (const auto& p : parameters) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

int Checklist::index_of(std::string_view id) const {
  for (size_t i = 0; i < parameters.size(); ++i) {
    if (parameters[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<const ParameterSpec*> Checklist::by_mode(EvalMode mode) const {
  std::vector<const ParameterSpec*> out;
  for (const auto& p : parameters) {
    if (p.mode == mode) out.push_back(&p);
  }
  return out;
}

std::vector<const ParameterSpec*> Checklist::by_category(Category category) const {
  std::vector<const ParameterSpec*> out;
  for (const auto& p : parameters) {
    if (p.category == category) out.push_back(&p);
  }
  return out;
}

namespace {

struct Row {
  const char* id;
  Category cat;
  const char* subcat;
  const char* name;
  Likelihood l;
  Impact i;
  EvalMode mode;
  Polarity pol;
  ParameterKind kind;
  const char* accepted;  // comma separated, empty for Boolean
};

using enum Category;
using enum EvalMode;
constexpr Polarity kYes = Polarity::DesiredYes;
constexpr Polarity kNo = Polarity::DesiredNo;
constexpr ParameterKind kBool = ParameterKind::Boolean;
constexpr ParameterKind kCat = ParameterKind::Categorical;
constexpr Likelihood L1 = Likelihood::Rare;
constexpr Likelihood L2 = Likelihood::Unlikely;
constexpr Likelihood L3 = Likelihood::Moderate;
constexpr Likelihood L4 = Likelihood::Likely;
constexpr Likelihood L5 = Likelihood::AlmostCertain;
constexpr Impact I1 = Impact::Insignificant;
constexpr Impact I2 = Impact::Minor;
constexpr Impact I3 = Impact::Significant;
constexpr Impact I4 = Impact::Major;
constexpr Impact I5 = Impact::Severe;

const Row kRows[] = {
    // Authentication Security
    {"auth_lockout", AuthenticationSecurity, "Brute Force Protection",
     "Lockout after max failed login attempts", L5, I3, Dynamic, kYes, kBool, ""},
    {"auth_captcha", AuthenticationSecurity, "Brute Force Protection",
     "CAPTCHA triggered after failed attempts", L5, I3, Dynamic, kYes, kBool, ""},
    {"auth_lockout_notice", AuthenticationSecurity, "Brute Force Protection",
     "Account lockout notification sent", L3, I1, Manual, kYes, kBool, ""},
    {"auth_pw_complexity", AuthenticationSecurity, "Password Policy",
     "Password complexity (Uppercase, Lowercase, Numbers, Symbols, Length)", L3, I3,
     Dynamic, kYes, kCat, "Only Length,Length+letters+numbers,Full"},
    {"auth_pw_expiration", AuthenticationSecurity, "Password Policy",
     "Password expiration", L3, I1, Manual, kYes, kBool, ""},
    {"auth_pw_reuse", AuthenticationSecurity, "Password Policy",
     "Password reuse restriction (last N passwords disallowed)", L2, I2, Manual, kYes,
     kBool, ""},
    {"auth_mfa_enabled", AuthenticationSecurity, "MFA", "MFA Enabled", L4, I4, Dynamic,
     kYes, kBool, ""},
    {"auth_mfa_type", AuthenticationSecurity, "MFA",
     "Type of MFA (TOTP, OTP, Push Notification)", L3, I1, Dynamic, kYes, kCat,
     "TOTP,OTP,Push Notification"},
    {"auth_backup_codes", AuthenticationSecurity, "MFA", "Backup codes available", L3,
     I3, Manual, kYes, kBool, ""},
    {"auth_rate_limit", AuthenticationSecurity, "Rate Limiting",
     "Max login attempts per second/IP", L5, I2, Dynamic, kYes, kBool, ""},
    {"auth_rate_limit_response", AuthenticationSecurity, "Rate Limiting",
     "Response after rate limit exceeded (Error code, CAPTCHA, Lockout)", L2, I1,
     Dynamic, kYes, kCat, "Error Code,CAPTCHA,Lockout"},

    // Input Validation & Protection Against Injection Attacks
    {"input_email_verification", InputValidation, "Email Validation",
     "Email Verification", L2, I1, Dynamic, kYes, kBool, ""},
    {"input_parameterized_queries", InputValidation, "SQL Injection Protection",
     "Parameterized Queries Used", L4, I4, Static, kYes, kBool, ""},
    {"input_special_chars_escaped", InputValidation, "SQL Injection Protection",
     "Special characters properly escaped", L4, I4, Dynamic, kYes, kBool, ""},
    {"input_js_execution", InputValidation, "XSS Protection",
     "JavaScript execution inside input fields", L4, I4, Dynamic, kNo, kBool, ""},
    {"input_html_injection", InputValidation, "XSS Protection",
     "HTML tag injection possible (<script>alert(1)</script>)", L3, I4, Dynamic, kNo,
     kBool, ""},
    {"input_post_only_login", InputValidation, "XSS Protection",
     "Login API uses the POST method only", L2, I2, Dynamic, kYes, kBool, ""},
    {"input_cors_policy", InputValidation, "XSS Protection",
     "CORS policy configured properly", L2, I2, Manual, kYes, kBool, ""},
    {"input_csrf_token_present", InputValidation, "XSS Protection",
     "CSRF token present in requests", L4, I4, Dynamic, kYes, kBool, ""},
    {"input_csrf_validation", InputValidation, "XSS Protection",
     "CSRF token validation enforced", L4, I4, Dynamic, kYes, kBool, ""},
    {"input_hpp_handling", InputValidation, "HPP Protection",
     "Handling of multiple identical parameters (e.g., ?user=admin&user=guest)", L2, I2,
     Dynamic, kYes, kCat, "first-wins,last-wins,concatenated,rejected"},

    // Session Security
    {"sess_creation", SessionSecurity, "Secure Cookies", "Session creation enabled", L2,
     I1, Dynamic, kYes, kBool, ""},
    {"sess_cookie_secure", SessionSecurity, "Secure Cookies",
     "Session cookie has a Secure flag", L5, I4, Dynamic, kYes, kBool, ""},
    {"sess_cookie_httponly", SessionSecurity, "Secure Cookies",
     "Session cookie has a HttpOnly flag", L5, I4, Dynamic, kYes, kBool, ""},
    {"sess_cookie_samesite", SessionSecurity, "Secure Cookies",
     "Session cookie has SameSite flag", L5, I4, Dynamic, kYes, kBool, ""},
    {"sess_timeout", SessionSecurity, "Session Expiry",
     "Session timeout duration (minutes)", L2, I2, Dynamic, kYes, kBool, ""},
    {"sess_regenerated", SessionSecurity, "Session Hijacking Protection",
     "Session ID regenerated after login", L3, I5, Dynamic, kYes, kBool, ""},
    {"sess_fixation_protection", SessionSecurity, "Session Hijacking Protection",
     "Session Fixation Protection", L5, I4, Dynamic, kYes, kBool, ""},
    {"sess_id_in_cookies_only", SessionSecurity, "Session Hijacking Protection",
     "Session ID stored only in cookies, not in URLs", L3, I5, Dynamic, kYes, kBool,
     ""},

    // Secure Storage
    {"store_hash_algorithm", SecureStorage, "Password Hashing",
     "Hashing Algorithm Used (bcrypt, Argon2, PBKDF2, NA)", L2, I5, Static, kYes, kCat,
     "bcrypt,Argon2,PBKDF2"},
    {"store_salted_hashes", SecureStorage, "Password Hashing", "Salted hashes used", L2,
     I5, Static, kYes, kBool, ""},

    // Error Handling & Information Disclosure
    {"err_reveals_username", ErrorHandling, "Generic Error Messages",
     "Does the error message reveal if the username exists?", L2, I1, Dynamic, kNo,
     kBool, ""},
    {"err_reveals_pw_rules", ErrorHandling, "Generic Error Messages",
     "Does the error message reveal password complexity rules?", L2, I1, Dynamic, kNo,
     kBool, ""},
    {"err_failed_login_logged", ErrorHandling, "Logging & Monitoring",
     "Failed login attempts logged", L2, I1, Static, kYes, kBool, ""},
    {"err_unusual_flagged", ErrorHandling, "Logging & Monitoring",
     "Unusual login attempts flagged", L2, I1, Manual, kYes, kBool, ""},
    {"err_logs_secure", ErrorHandling, "Logging & Monitoring", "Logs stored securely",
     L3, I2, Manual, kYes, kBool, ""},

    // HTTP Security Headers
    {"hdr_csp_present", HttpSecurityHeaders, "CSP Protection", "CSP header present", L2,
     I1, Dynamic, kYes, kBool, ""},
    {"hdr_csp_blocks_inline", HttpSecurityHeaders, "CSP Protection",
     "CSP policy blocks inline scripts", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_csp_blocks_data_uris", HttpSecurityHeaders, "CSP Protection",
     "CSP blocks data URIs for scripts", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_csp_restricts_external", HttpSecurityHeaders, "CSP Protection",
     "CSP restricts external script sources", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_x_frame_options", HttpSecurityHeaders, "Clickjacking Protection",
     "X-Frame-Options set", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_x_content_type_options", HttpSecurityHeaders, "MIME Type Sniffing Protection",
     "X-Content-Type-Options set to nosniff", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_hsts_present", HttpSecurityHeaders, "HSTS",
     "Strict-Transport-Security header present", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_hsts_max_age", HttpSecurityHeaders, "HSTS", "HSTS max-age value (seconds)",
     L2, I2, Dynamic, kYes, kCat, ""},
    {"hdr_referrer_policy_set", HttpSecurityHeaders, "Referrer Policy Protection",
     "Referrer-Policy header set", L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_referrer_policy_strict", HttpSecurityHeaders, "Referrer Policy Protection",
     "Referrer-Policy set to \"no-referrer\" or \"strict-origin-when-cross-origin\"",
     L3, I2, Dynamic, kYes, kBool, ""},
    {"hdr_permissions_policy", HttpSecurityHeaders,
     "Feature Policy & Permissions Policy", "Permissions-Policy header present", L3, I2,
     Dynamic, kYes, kBool, ""},
    {"hdr_device_features_restricted", HttpSecurityHeaders,
     "Feature Policy & Permissions Policy",
     "Restrictions on camera, microphone, geolocation access set", L3, I2, Dynamic,
     kYes, kBool, ""},
};

std::vector<std::string> split_accepted(std::string_view csv) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= csv.size() && !csv.empty()) {
    size_t comma = csv.find(',', pos);
    std::string_view piece =
        comma == std::string_view::npos ? csv.substr(pos) : csv.substr(pos, comma - pos);
    std::string v = strip(piece);
    if (!v.empty()) out.push_back(std::move(v));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

Checklist build_default() {
  Checklist c;
  c.version = "1.0";
  for (const Row& r : kRows) {
    ParameterSpec p;
    p.id = r.id;
    p.category = r.cat;
    p.subcategory = r.subcat;
    p.name = r.name;
    p.likelihood = r.l;
    p.impact = r.i;
    p.risk = risk_level(r.l, r.i);
    p.mode = r.mode;
    p.polarity = r.pol;
    p.kind = r.kind;
    p.accepted_values = split_accepted(r.accepted);
    c.parameters.push_back(std::move(p));
  }
  validate_checklist(c);
  return c;
}

}  // namespace

const Checklist& default_checklist() {
  static const Checklist instance = build_default();
  return instance;
}

void validate_checklist(const Checklist& checklist) {
  std::map<std::string, int> seen;
  std::map<Category, int> counts;
  for (const auto& p : checklist.parameters) {
    if (p.id.empty()) throw ChecklistConsistencyError("parameter with empty id");
    if (++seen[p.id] > 1)
      throw ChecklistConsistencyError("duplicate parameter id: " + p.id);
    RiskLevel derived = risk_level(p.likelihood, p.impact);
    if (p.risk != derived) {
      throw ChecklistConsistencyError(
          "stored risk for " + p.id + " is " + std::string(to_token(p.risk)) +
          " but likelihood/impact derive " + std::string(to_token(derived)));
    }
    counts[p.category]++;
  }
  for (Category c : kAllCategories) {
    int want = expected_parameter_count(c);
    int got = counts.count(c) ? counts[c] : 0;
    if (got != want) {
      throw ChecklistConsistencyError(
          std::string(to_token(c)) + " holds " + std::to_string(got) +
          " parameters, expected " + std::to_string(want));
    }
  }
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t bar = line.find('|', pos);
    if (bar == std::string_view::npos) {
      out.push_back(strip(line.substr(pos)));
      break;
    }
    out.push_back(strip(line.substr(pos, bar - pos)));
    pos = bar + 1;
  }
  return out;
}

}  // namespace

Checklist parse_checklist(std::string_view text) {
  Checklist c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      // "# version: X" pins the checklist version.
      std::string lowered = to_lower(body);
      size_t v = lowered.find("version:");
      if (v != std::string::npos) c.version = strip(body.substr(v + 8));
      continue;
    }
    any_content = true;
    std::vector<std::string> f = split_fields(body);
    if (f.size() != 10 && f.size() != 11) {
      throw ChecklistParseError("line " + std::to_string(lineno) + ": expected 10 or 11 fields, got " +
                                std::to_string(f.size()));
    }
    ParameterSpec p;
    p.id = f[0];
    auto cat = parse_category(f[1]);
    if (!cat) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown category '" + f[1] + "'");
    p.category = *cat;
    p.subcategory = f[2];
    p.name = f[3];
    auto l = parse_likelihood(f[4]);
    if (!l) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown likelihood '" + f[4] + "'");
    p.likelihood = *l;
    auto i = parse_impact(f[5]);
    if (!i) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown impact '" + f[5] + "'");
    p.impact = *i;
    auto m = parse_eval_mode(f[6]);
    if (!m) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown mode '" + f[6] + "'");
    p.mode = *m;
    auto pol = parse_polarity(f[7]);
    if (!pol) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown polarity '" + f[7] + "'");
    p.polarity = *pol;
    auto k = parse_parameter_kind(f[8]);
    if (!k) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown kind '" + f[8] + "'");
    p.kind = *k;
    p.accepted_values = split_accepted(f[9]);
    if (f.size() == 11 && !f[10].empty()) {
      auto r = parse_risk_level(f[10]);
      if (!r) throw ChecklistParseError("line " + std::to_string(lineno) + ": unknown risk level '" + f[10] + "'");
      p.risk = *r;
    } else {
      p.risk = risk_level(p.likelihood, p.impact);
    }
    c.parameters.push_back(std::move(p));
  }
  if (!any_content) throw ChecklistParseError("checklist document holds no parameter rows");
  if (c.version.empty()) c.version = "custom";
  validate_checklist(c);
  return c;
}

Checklist load_checklist_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ChecklistParseError("cannot open checklist file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checklist(buf.str());
}

std::string serialize_checklist(const Checklist& checklist) {
  std::ostringstream out;
  out << "# webaudit checklist\n";
  out << "# version: " << checklist.version << "\n";
  out << "# id|category|subcategory|name|likelihood|impact|mode|polarity|kind|accepted_values|risk\n";
  for (const auto& p : checklist.parameters) {
    out << p.id << '|' << to_token(p.category) << '|' << p.subcategory << '|' << p.name
        << '|' << to_token(p.likelihood) << '|' << to_token(p.impact) << '|'
        << to_token(p.mode) << '|' << to_token(p.polarity) << '|' << to_token(p.kind)
        << '|';
    for (size_t i = 0; i < p.accepted_values.size(); ++i) {
      if (i) out << ',';
      out << p.accepted_values[i];
    }
    out << '|' << to_token(p.risk) << '\n';
  }
  return out.str();
}

}  // namespace webaudit

#include "webaudit/scanner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace webaudit {

namespace {

using Clock = std::chrono::steady_clock;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

const std::string* match_any_ci(const std::string& haystack,
                                const std::vector<std::string>& needles) {
  const std::string low = lower(haystack);
  for (const auto& n : needles) {
    if (!n.empty() && low.find(lower(n)) != std::string::npos) return &n;
  }
  return nullptr;
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(c);
  }
  return out;
}

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string random_hex(std::size_t digits) {
  static std::atomic<unsigned> counter{0};
  thread_local std::mt19937_64 rng(std::random_device{}() + counter.fetch_add(1));
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digits);
  for (std::size_t i = 0; i < digits; ++i) out.push_back(hex[rng() & 0xF]);
  return out;
}

struct HttpResult {
  int status = 0;
  std::multimap<std::string, std::string> headers;
  std::string body;
  std::vector<std::string> set_cookies;

  std::string header(const std::string& name) const {
    for (const auto& [k, v] : headers) {
      if (lower(k) == lower(name)) return v;
    }
    return {};
  }
  bool ok() const { return status >= 200 && status < 300; }
  bool redirect() const { return status >= 300 && status < 400; }
};

// Splits a configured surface such as "/search?q" into its path and the
// query parameter name the probe should use.
std::pair<std::string, std::string> split_surface(const std::string& surface,
                                                  const std::string& fallback_param) {
  auto pos = surface.find('?');
  if (pos == std::string::npos) return {surface, fallback_param};
  std::string param = surface.substr(pos + 1);
  if (param.empty()) param = fallback_param;
  return {surface.substr(0, pos), param};
}

std::pair<std::string, std::string> split_origin(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  std::size_t path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

// One HTTP conversation with its own cookie jar. Redirects are never
// followed automatically; probes inspect them.
class HttpSession {
 public:
  explicit HttpSession(const TargetConfig& cfg) {
    auto [origin, prefix] = split_origin(cfg.base_url);
    prefix_ = prefix;
    client_ = std::make_unique<httplib::Client>(origin);
    client_->set_follow_location(false);
    const auto ms = cfg.request_timeout;
    client_->set_connection_timeout(std::chrono::milliseconds(ms));
    client_->set_read_timeout(std::chrono::milliseconds(ms));
    client_->set_write_timeout(std::chrono::milliseconds(ms));
  }

  std::optional<HttpResult> get(const std::string& path) {
    auto res = client_->Get((prefix_ + path).c_str(), request_headers());
    return capture(res);
  }

  std::optional<HttpResult> post_form(
      const std::string& path,
      const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string body;
    for (const auto& [k, v] : fields) {
      if (!body.empty()) body.push_back('&');
      body += url_encode(k) + "=" + url_encode(v);
    }
    auto res = client_->Post((prefix_ + path).c_str(), request_headers(), body,
                             "application/x-www-form-urlencoded");
    return capture(res);
  }

  void set_cookie(const std::string& name, const std::string& value) {
    jar_[name] = value;
  }

  const std::map<std::string, std::string>& cookies() const { return jar_; }

  // Name of the cookie most likely to carry the session id, if any.
  std::string session_cookie_name() const {
    for (const auto& [name, value] : jar_) {
      const std::string low = lower(name);
      if (low == "sid" || low == "sessid" || low.find("sess") != std::string::npos)
        return name;
    }
    return jar_.empty() ? std::string{} : jar_.begin()->first;
  }

  std::string cookie_value(const std::string& name) const {
    auto it = jar_.find(name);
    return it == jar_.end() ? std::string{} : it->second;
  }

 private:
  httplib::Headers request_headers() const {
    httplib::Headers h;
    if (!jar_.empty()) {
      std::string line;
      for (const auto& [k, v] : jar_) {
        if (!line.empty()) line += "; ";
        line += k + "=" + v;
      }
      h.emplace("Cookie", line);
    }
    return h;
  }

  std::optional<HttpResult> capture(const httplib::Result& res) {
    if (!res) return std::nullopt;
    HttpResult out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) {
      out.headers.emplace(k, v);
      if (lower(k) == "set-cookie") {
        out.set_cookies.push_back(v);
        auto eq = v.find('=');
        auto semi = v.find(';');
        if (eq != std::string::npos && (semi == std::string::npos || eq < semi)) {
          std::string name = v.substr(0, eq);
          std::string value = v.substr(eq + 1, semi == std::string::npos
                                                    ? std::string::npos
                                                    : semi - eq - 1);
          jar_[name] = value;
        }
      }
    }
    return out;
  }

  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
  std::map<std::string, std::string> jar_;
};

enum class LoginOutcome {
  Success,
  MfaChallenge,
  Invalid,
  Locked,
  RateLimited,
  VerifyEmail,
  TransportError,
};

struct LoginAttempt {
  LoginOutcome outcome = LoginOutcome::TransportError;
  std::optional<HttpResult> response;
  std::vector<std::string> set_cookies;
};

const std::vector<std::string> kRateMarkers = {"too many requests", "rate limit",
                                               "slow down"};
const std::vector<std::string> kLockMarkers = {"locked", "lockout",
                                               "too many failed"};
const std::vector<std::string> kVerifyMarkers = {"verify your email",
                                                 "email verification",
                                                 "not verified", "verify email"};
const std::vector<std::string> kMfaMarkers = {"authenticator", "one-time",
                                              "second factor", "verification code",
                                              "totp", "2fa", "mfa"};
const std::vector<std::string> kFailMarkers = {"invalid", "incorrect", "wrong",
                                               "failed", "not found", "no account",
                                               "try again", "denied"};

LoginOutcome classify_login(const HttpResult& r) {
  if (r.status == 429 || match_any_ci(r.body, kRateMarkers))
    return LoginOutcome::RateLimited;
  if (r.status == 423 || match_any_ci(r.body, kLockMarkers))
    return LoginOutcome::Locked;
  if (match_any_ci(r.body, kVerifyMarkers)) return LoginOutcome::VerifyEmail;
  if (match_any_ci(r.body, kMfaMarkers)) return LoginOutcome::MfaChallenge;
  if (r.status >= 200 && r.status < 400) {
    if (match_any_ci(r.body, kFailMarkers)) return LoginOutcome::Invalid;
    return LoginOutcome::Success;
  }
  return LoginOutcome::Invalid;
}

const char* outcome_name(LoginOutcome o) {
  switch (o) {
    case LoginOutcome::Success: return "success";
    case LoginOutcome::MfaChallenge: return "second-factor challenge";
    case LoginOutcome::Invalid: return "credentials rejected";
    case LoginOutcome::Locked: return "account locked";
    case LoginOutcome::RateLimited: return "rate limited";
    case LoginOutcome::VerifyEmail: return "email verification required";
    case LoginOutcome::TransportError: return "transport error";
  }
  return "unknown";
}

std::string extract_form_action(const std::string& body) {
  static const std::regex re("<form\\b[^>]*\\baction=\"([^\"]*)\"",
                             std::regex::icase);
  std::smatch m;
  if (std::regex_search(body, m, re)) return m[1].str();
  return {};
}

struct HiddenField {
  std::string name;
  std::string value;
};

std::vector<HiddenField> extract_hidden_fields(const std::string& block) {
  std::vector<HiddenField> out;
  static const std::regex input_re("<input\\b[^>]*>", std::regex::icase);
  static const std::regex name_re("\\bname=\"([^\"]*)\"", std::regex::icase);
  static const std::regex value_re("\\bvalue=\"([^\"]*)\"", std::regex::icase);
  static const std::regex type_re("\\btype=\"([^\"]*)\"", std::regex::icase);
  auto begin = std::sregex_iterator(block.begin(), block.end(), input_re);
  for (auto it = begin; it != std::sregex_iterator{}; ++it) {
    const std::string tag = it->str();
    std::smatch tm;
    if (!std::regex_search(tag, tm, type_re) || lower(tm[1].str()) != "hidden")
      continue;
    std::smatch nm, vm;
    if (!std::regex_search(tag, nm, name_re)) continue;
    HiddenField f;
    f.name = nm[1].str();
    if (std::regex_search(tag, vm, value_re)) f.value = vm[1].str();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

struct Scanner::Impl {
  TargetConfig cfg;
  ProbeSignatures sig;
  int parallelism;
  std::vector<std::string> secrets;
  std::mutex pace_mu;
  Clock::time_point last_login{};

  Impl(TargetConfig c, ProbeSignatures s, int par)
      : cfg(std::move(c)), sig(std::move(s)), parallelism(std::max(1, par)) {
    cfg.validate();
    for (const std::string* v : {&cfg.valid_username, &cfg.valid_password,
                                 &cfg.invalid_username, &cfg.invalid_password,
                                 &cfg.mfa_code}) {
      if (!v->empty()) secrets.push_back(*v);
    }
  }

  std::string redact(std::string s) const {
    for (const auto& secret : secrets) {
      std::size_t pos = 0;
      while ((pos = s.find(secret, pos)) != std::string::npos) {
        s.replace(pos, secret.size(), "[redacted]");
        pos += 10;
      }
    }
    return s;
  }

  std::string summarize(const std::optional<HttpResult>& r) const {
    if (!r) return "no response (transport error)";
    std::string out = "HTTP " + std::to_string(r->status);
    std::string loc = r->header("Location");
    if (!loc.empty()) out += " -> " + redact(loc);
    std::string body = collapse_ws(redact(r->body));
    if (body.size() > 160) body = body.substr(0, 160) + "...";
    if (!body.empty()) out += "; " + body;
    return out;
  }

  EvidencePair evidence(const std::string& request_summary,
                        const std::optional<HttpResult>& r) const {
    return EvidencePair{redact(request_summary), summarize(r)};
  }

  Observation obs(std::string id, ObservationValue value,
                  std::vector<EvidencePair> ev, std::string note = {}) const {
    Observation o;
    o.parameter_id = std::move(id);
    o.value = std::move(value);
    o.evidence = std::move(ev);
    o.source = Source::Dynamic;
    o.captured_at = now_iso8601();
    o.note = std::move(note);
    validate_observation(o);
    return o;
  }

  Observation unknown(std::string id, std::string note) const {
    return obs(std::move(id), ObservationValue::unknown(), {}, std::move(note));
  }

  // Keeps login attempts at least 400ms apart across all probes so a
  // polite scan does not trip the target's own rate limiting.
  void pace() {
    std::lock_guard<std::mutex> lock(pace_mu);
    auto now = Clock::now();
    auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(now - last_login);
    if (last_login.time_since_epoch().count() != 0 && gap < std::chrono::milliseconds(400))
      std::this_thread::sleep_for(std::chrono::milliseconds(400) - gap);
    last_login = Clock::now();
  }

  std::optional<HttpResult> raw_login_post(HttpSession& s, const std::string& user,
                                           const std::string& pass) {
    return s.post_form(cfg.login_path, {{cfg.username_field, user},
                                        {cfg.password_field, pass}});
  }

  LoginAttempt attempt_login(HttpSession& s, const std::string& user,
                             const std::string& pass, bool complete_mfa) {
    pace();
    LoginAttempt a;
    a.response = raw_login_post(s, user, pass);
    if (!a.response) return a;
    a.set_cookies = a.response->set_cookies;
    a.outcome = classify_login(*a.response);
    if (a.outcome == LoginOutcome::MfaChallenge && complete_mfa &&
        !cfg.mfa_code.empty()) {
      std::string action = extract_form_action(a.response->body);
      if (action.empty()) action = cfg.login_path + "/mfa";
      auto r2 = s.post_form(action, {{"code", cfg.mfa_code}});
      if (r2) {
        for (const auto& c : r2->set_cookies) a.set_cookies.push_back(c);
        a.outcome = classify_login(*r2);
        a.response = r2;
      } else {
        a.outcome = LoginOutcome::TransportError;
      }
    }
    return a;
  }

  bool is_authenticated(HttpSession& s) {
    auto r = s.get(cfg.profile_path);
    return r && r->ok();
  }

  // --- probes ---

  std::vector<Observation> security_headers() {
    HttpSession s(cfg);
    auto r = s.get("/");
    if (!r) throw ScanError("target unreachable: GET " + cfg.base_url + " failed");
    return check_security_headers(r->headers);
  }

  std::vector<Observation> session_cookies() {
    HttpSession s(cfg);
    auto pre = s.get(cfg.login_path);
    auto la = attempt_login(s, cfg.valid_username, cfg.valid_password, true);
    std::vector<std::string> lines = la.set_cookies;
    if (lines.empty() && pre) lines = pre->set_cookies;
    return check_cookie_flags(lines);
  }

  std::vector<Observation> login_method() {
    HttpSession g(cfg);
    std::string query = cfg.login_path + "?" + url_encode(cfg.username_field) +
                        "=" + url_encode(cfg.valid_username) + "&" +
                        url_encode(cfg.password_field) + "=" +
                        url_encode(cfg.valid_password);
    auto r = g.get(query);
    std::string get_summary =
        "GET " + cfg.login_path + " with credentials in the query string";
    bool get_authenticates = false;
    if (r) {
      auto outcome = classify_login(*r);
      get_authenticates = outcome == LoginOutcome::MfaChallenge ||
                          (outcome == LoginOutcome::Success && is_authenticated(g));
    }
    if (get_authenticates) {
      return {obs("input_post_only_login", ObservationValue::no(),
                  {evidence(get_summary, r)},
                  "credentials submitted via GET were accepted")};
    }
    HttpSession p(cfg);
    auto la = attempt_login(p, cfg.valid_username, cfg.valid_password, true);
    if (la.outcome == LoginOutcome::Success) {
      return {obs("input_post_only_login", ObservationValue::yes(),
                  {evidence(get_summary, r),
                   evidence("POST " + cfg.login_path + " with the same credentials",
                            la.response)})};
    }
    return {unknown("input_post_only_login",
                    "POST login failed (" + std::string(outcome_name(la.outcome)) +
                        "); HTTP method restriction undecidable")};
  }

  std::vector<Observation> bruteforce_lockout() {
    HttpSession s(cfg);
    bool lockout_announced = false;
    bool captcha_seen = false;
    std::optional<HttpResult> last_failure;
    int attempts = 0;
    int retries = 0;
    for (int i = 0; i < cfg.max_failed_attempts; ++i) {
      auto la = attempt_login(s, cfg.valid_username, cfg.invalid_password, false);
      if (!la.response) break;
      ++attempts;
      last_failure = la.response;
      if (match_any_ci(la.response->body, sig.captcha_markers)) captcha_seen = true;
      if (la.outcome == LoginOutcome::Locked) {
        lockout_announced = true;
        break;
      }
      if (la.outcome == LoginOutcome::RateLimited && retries < 3) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1100));
        ++retries;
        --i;
        --attempts;
      }
    }
    std::string failures_summary =
        "POST " + cfg.login_path + " x" + std::to_string(attempts) +
        " with a wrong password for a valid account";
    HttpSession fresh(cfg);
    auto final_attempt =
        attempt_login(fresh, cfg.valid_username, cfg.valid_password, true);
    if (final_attempt.response &&
        match_any_ci(final_attempt.response->body, sig.captcha_markers))
      captcha_seen = true;

    std::vector<Observation> out;
    std::string valid_summary =
        "POST " + cfg.login_path + " with correct credentials after the failures";
    if (lockout_announced || final_attempt.outcome == LoginOutcome::Locked) {
      out.push_back(obs("auth_lockout", ObservationValue::yes(),
                        {evidence(failures_summary, last_failure),
                         evidence(valid_summary, final_attempt.response)}));
    } else if (final_attempt.outcome == LoginOutcome::Success) {
      out.push_back(obs("auth_lockout", ObservationValue::no(),
                        {evidence(failures_summary, last_failure),
                         evidence(valid_summary, final_attempt.response)},
                        "correct credentials still accepted after " +
                            std::to_string(attempts) + " failures"));
    } else {
      out.push_back(unknown("auth_lockout",
                            "post-failure login ended as " +
                                std::string(outcome_name(final_attempt.outcome)) +
                                "; lockout state undecidable"));
    }
    if (captcha_seen) {
      out.push_back(obs("auth_captcha", ObservationValue::yes(),
                        {evidence(failures_summary, last_failure)}));
    } else if (last_failure) {
      out.push_back(obs("auth_captcha", ObservationValue::no(),
                        {evidence(failures_summary, last_failure)},
                        "no challenge markers in any failure response"));
    } else {
      out.push_back(unknown("auth_captcha", "no failure responses captured"));
    }
    return out;
  }

  std::vector<Observation> rate_limit() {
    HttpSession s(cfg);
    std::optional<HttpResult> first_limited;
    std::optional<HttpResult> last;
    for (int i = 0; i < cfg.burst_size; ++i) {
      auto r = raw_login_post(s, cfg.nonexistent_username, cfg.invalid_password);
      if (!r) continue;
      last = r;
      if (classify_login(*r) == LoginOutcome::RateLimited && !first_limited) {
        first_limited = r;
        break;
      }
    }
    std::string burst_summary = "POST " + cfg.login_path + " burst of " +
                                std::to_string(cfg.burst_size) +
                                " attempts for a nonexistent account";
    std::vector<Observation> out;
    if (first_limited) {
      out.push_back(obs("auth_rate_limit", ObservationValue::yes(),
                        {evidence(burst_summary, first_limited)}));
      std::string kind = "Error Code";
      if (match_any_ci(first_limited->body, sig.captcha_markers)) kind = "CAPTCHA";
      else if (match_any_ci(first_limited->body, kLockMarkers)) kind = "Lockout";
      out.push_back(obs("auth_rate_limit_response",
                        ObservationValue::categorical(kind),
                        {evidence(burst_summary, first_limited)}));
    } else if (last) {
      out.push_back(obs("auth_rate_limit", ObservationValue::no(),
                        {evidence(burst_summary, last)},
                        "burst completed without throttling"));
      out.push_back(obs("auth_rate_limit_response",
                        ObservationValue::not_applicable(), {},
                        "no rate limiting observed"));
    } else {
      out.push_back(unknown("auth_rate_limit", "burst produced no responses"));
      out.push_back(unknown("auth_rate_limit_response",
                            "burst produced no responses"));
    }
    return out;
  }

  std::vector<Observation> session_lifecycle() {
    std::vector<Observation> out;
    HttpSession s(cfg);
    auto pre_page = s.get(cfg.login_path);
    (void)pre_page;
    std::string sid_name = s.session_cookie_name();
    std::string pre_value = sid_name.empty() ? "" : s.cookie_value(sid_name);
    auto la = attempt_login(s, cfg.valid_username, cfg.valid_password, true);
    if (la.outcome != LoginOutcome::Success) {
      std::string why = "login failed (" + std::string(outcome_name(la.outcome)) +
                        "); session lifecycle unobservable";
      for (const char* id : {"sess_regenerated", "sess_fixation_protection",
                             "sess_id_in_cookies_only", "sess_timeout"})
        out.push_back(unknown(id, why));
      return out;
    }
    if (sid_name.empty()) sid_name = s.session_cookie_name();
    std::string post_value = sid_name.empty() ? "" : s.cookie_value(sid_name);
    std::string login_summary = "POST " + cfg.login_path + " with valid credentials";

    if (post_value.empty()) {
      for (const char* id : {"sess_regenerated", "sess_fixation_protection",
                             "sess_id_in_cookies_only", "sess_timeout"})
        out.push_back(obs(id, ObservationValue::not_applicable(), {},
                          "no session cookie issued"));
      return out;
    }

    if (pre_value.empty()) {
      out.push_back(obs("sess_regenerated", ObservationValue::yes(),
                        {evidence(login_summary, la.response)},
                        "no pre-login session existed; a fresh id was issued at login"));
    } else if (pre_value != post_value) {
      out.push_back(obs("sess_regenerated", ObservationValue::yes(),
                        {evidence(login_summary, la.response)},
                        "session id changed at login"));
    } else {
      out.push_back(obs("sess_regenerated", ObservationValue::no(),
                        {evidence(login_summary, la.response)},
                        "pre-login session id survived authentication"));
    }

    // Fixation: plant an attacker-chosen id, log in with it present, then
    // check whether that planted id now grants access.
    {
      std::string attacker_value = "fixation" + random_hex(12);
      HttpSession victim(cfg);
      victim.set_cookie(sid_name, attacker_value);
      auto vla = attempt_login(victim, cfg.valid_username, cfg.valid_password, true);
      if (vla.outcome == LoginOutcome::Success) {
        HttpSession attacker(cfg);
        attacker.set_cookie(sid_name, attacker_value);
        auto ar = attacker.get(cfg.profile_path);
        std::string fix_summary = "GET " + cfg.profile_path +
                                  " using only the attacker-chosen session id";
        if (ar && ar->ok()) {
          out.push_back(obs("sess_fixation_protection", ObservationValue::no(),
                            {evidence(fix_summary, ar)},
                            "a pre-set session id became authenticated"));
        } else if (ar) {
          out.push_back(obs("sess_fixation_protection", ObservationValue::yes(),
                            {evidence(fix_summary, ar)},
                            "the pre-set session id stayed unauthenticated"));
        } else {
          out.push_back(unknown("sess_fixation_protection",
                                "transport error during fixation check"));
        }
      } else {
        out.push_back(unknown("sess_fixation_protection",
                              "login with a planted session id failed (" +
                                  std::string(outcome_name(vla.outcome)) + ")"));
      }
    }

    // Session id exposure: look for the live id inside redirect targets and
    // URLs of the authenticated page.
    {
      auto page = s.get(cfg.profile_path);
      std::vector<std::string> urls;
      if (la.response) {
        std::string loc = la.response->header("Location");
        if (!loc.empty()) urls.push_back(loc);
      }
      if (page) {
        static const std::regex url_re("(?:href|src|action)=\"([^\"]*)\"",
                                       std::regex::icase);
        auto begin = std::sregex_iterator(page->body.begin(), page->body.end(), url_re);
        for (auto it = begin; it != std::sregex_iterator{}; ++it)
          urls.push_back((*it)[1].str());
      }
      std::string leaked;
      for (const auto& u : urls) {
        if (u.find(post_value) != std::string::npos) {
          leaked = u;
          break;
        }
      }
      std::string summary = "inspect redirect target and page URLs after login";
      if (!leaked.empty()) {
        std::string masked = leaked;
        auto pos = masked.find(post_value);
        masked.replace(pos, post_value.size(), "[session-id]");
        out.push_back(obs("sess_id_in_cookies_only", ObservationValue::no(),
                          {EvidencePair{summary, "session id found in URL: " + masked}}));
      } else {
        out.push_back(obs("sess_id_in_cookies_only", ObservationValue::yes(),
                          {evidence(summary, page)},
                          "session id appeared in no URL"));
      }
    }

    // Idle timeout: wait the configured budget, then retry with the same id.
    {
      if (cfg.session_timeout_budget > std::chrono::minutes(2)) {
        out.push_back(unknown("sess_timeout",
                              "timeout budget exceeds the probe allowance"));
      } else {
        std::this_thread::sleep_for(cfg.session_timeout_budget);
        auto r = s.get(cfg.profile_path);
        std::string summary = "GET " + cfg.profile_path + " after " +
                              std::to_string(cfg.session_timeout_budget.count()) +
                              "ms of inactivity";
        if (!r) {
          out.push_back(unknown("sess_timeout", "transport error after idle wait"));
        } else if (r->ok()) {
          out.push_back(obs("sess_timeout", ObservationValue::no(),
                            {evidence(summary, r)},
                            "session still valid after the idle budget"));
        } else {
          out.push_back(obs("sess_timeout", ObservationValue::yes(),
                            {evidence(summary, r)},
                            "session rejected after the idle budget"));
        }
      }
    }
    return out;
  }

  std::vector<Observation> csrf() {
    HttpSession s(cfg);
    auto la = attempt_login(s, cfg.valid_username, cfg.valid_password, true);
    if (la.outcome != LoginOutcome::Success) {
      std::string why = "login failed (" + std::string(outcome_name(la.outcome)) +
                        "); form inspection impossible";
      return {unknown("input_csrf_token_present", why),
              unknown("input_csrf_validation", why)};
    }
    auto page = s.get(cfg.form_path);
    std::string page_summary = "GET " + cfg.form_path + " (state-changing form)";
    if (!page || !page->ok()) {
      std::string why = "form page unavailable";
      return {unknown("input_csrf_token_present", why),
              unknown("input_csrf_validation", why)};
    }
    auto hidden = extract_hidden_fields(page->body);
    const HiddenField* token = nullptr;
    for (const auto& f : hidden) {
      const std::string low = lower(f.name);
      if (low.find("csrf") != std::string::npos ||
          low.find("token") != std::string::npos) {
        token = &f;
        break;
      }
    }
    std::vector<Observation> out;
    if (!token) {
      out.push_back(obs("input_csrf_token_present", ObservationValue::no(),
                        {evidence(page_summary, page)},
                        "no anti-forgery field in the form"));
      out.push_back(obs("input_csrf_validation", ObservationValue::not_applicable(),
                        {}, "no token to validate"));
      return out;
    }
    out.push_back(obs("input_csrf_token_present", ObservationValue::yes(),
                      {evidence(page_summary, page)}));

    std::string action = extract_form_action(page->body);
    if (action.empty()) action = cfg.form_path;
    std::vector<std::pair<std::string, std::string>> fields;
    for (const auto& f : hidden) fields.emplace_back(f.name, f.value);
    static const std::regex text_re(
        "<input\\b[^>]*\\btype=\"text\"[^>]*\\bname=\"([^\"]*)\"[^>]*>|"
        "<input\\b[^>]*\\bname=\"([^\"]*)\"[^>]*\\btype=\"text\"[^>]*>|"
        "<textarea\\b[^>]*\\bname=\"([^\"]*)\"",
        std::regex::icase);
    auto begin = std::sregex_iterator(page->body.begin(), page->body.end(), text_re);
    for (auto it = begin; it != std::sregex_iterator{}; ++it) {
      for (int g = 1; g <= 3; ++g) {
        if ((*it)[g].matched) fields.emplace_back((*it)[g].str(), "probe value");
      }
    }
    auto intact = s.post_form(action, fields);
    std::string intact_summary = "POST " + action + " with the issued token";
    if (!intact || intact->status >= 400) {
      out.push_back(unknown("input_csrf_validation",
                            "submission with a valid token was not accepted; "
                            "enforcement undecidable"));
      return out;
    }
    auto tampered_fields = fields;
    for (auto& [k, v] : tampered_fields) {
      if (k == token->name) v += "x";
    }
    auto tampered = s.post_form(action, tampered_fields);
    std::string tampered_summary = "POST " + action + " with a corrupted token";
    if (!tampered) {
      out.push_back(unknown("input_csrf_validation",
                            "transport error during the tampered submission"));
    } else if (tampered->status >= 400) {
      out.push_back(obs("input_csrf_validation", ObservationValue::yes(),
                        {evidence(intact_summary, intact),
                         evidence(tampered_summary, tampered)}));
    } else {
      out.push_back(obs("input_csrf_validation", ObservationValue::no(),
                        {evidence(intact_summary, intact),
                         evidence(tampered_summary, tampered)},
                        "the corrupted token was accepted"));
    }
    return out;
  }

  std::vector<Observation> xss_reflection() {
    if (cfg.search_path.empty()) {
      std::string why = "no reflecting input surface configured";
      return {unknown("input_js_execution", why),
              unknown("input_html_injection", why)};
    }
    auto [path, param] = split_surface(cfg.search_path, "q");
    std::string marker = random_hex(10);
    std::string script_payload = "<script>alert('wa" + marker + "')</script>";
    std::string tag_payload = "<b>wa" + marker + "</b>";
    HttpSession s(cfg);
    auto r1 = s.get(path + "?" + param + "=" + url_encode(script_payload));
    auto r2 = s.get(path + "?" + param + "=" + url_encode(tag_payload));
    std::vector<Observation> out;
    std::string req1 = "GET " + path + " with a script payload carrying a unique marker";
    if (!r1) {
      out.push_back(unknown("input_js_execution", "transport error on reflection probe"));
    } else if (r1->body.find(script_payload) != std::string::npos) {
      out.push_back(obs("input_js_execution", ObservationValue::yes(),
                        {evidence(req1, r1)},
                        "script tag reflected verbatim"));
    } else {
      out.push_back(obs("input_js_execution", ObservationValue::no(),
                        {evidence(req1, r1)},
                        "script payload was encoded or stripped"));
    }
    std::string req2 = "GET " + path + " with an HTML tag payload carrying a unique marker";
    if (!r2) {
      out.push_back(unknown("input_html_injection", "transport error on reflection probe"));
    } else if (r2->body.find(tag_payload) != std::string::npos) {
      out.push_back(obs("input_html_injection", ObservationValue::yes(),
                        {evidence(req2, r2)},
                        "markup reflected verbatim"));
    } else {
      out.push_back(obs("input_html_injection", ObservationValue::no(),
                        {evidence(req2, r2)},
                        "markup was encoded or stripped"));
    }
    return out;
  }

  std::vector<Observation> sqli_error() {
    std::vector<EvidencePair> ev;
    HttpSession s(cfg);
    if (!cfg.search_path.empty()) {
      auto [path, param] = split_surface(cfg.search_path, "q");
      for (const std::string payload : {"'", "\"", "1' OR '1'='1"}) {
        auto r = s.get(path + "?" + param + "=" + url_encode(payload));
        std::string summary = "GET " + path + " with a quote-bearing payload";
        if (r) {
          if (const std::string* hit = match_any_ci(r->body, sig.sql_errors)) {
            return {obs("input_special_chars_escaped", ObservationValue::no(),
                        {evidence(summary, r)},
                        "database error signature surfaced: " + *hit)};
          }
          ev.push_back(evidence(summary, r));
        }
      }
    }
    HttpSession t(cfg);
    pace();
    auto r = raw_login_post(t, cfg.valid_username, "' OR '1'='1");
    std::string summary = "POST " + cfg.login_path + " with a tautology password";
    if (r) {
      if (const std::string* hit = match_any_ci(r->body, sig.sql_errors)) {
        return {obs("input_special_chars_escaped", ObservationValue::no(),
                    {evidence(summary, r)},
                    "database error signature surfaced: " + *hit)};
      }
      if (classify_login(*r) == LoginOutcome::Success) {
        return {obs("input_special_chars_escaped", ObservationValue::no(),
                    {evidence(summary, r)},
                    "a tautology password authenticated")};
      }
      ev.push_back(evidence(summary, r));
    }
    if (ev.empty())
      return {unknown("input_special_chars_escaped",
                      "no injection surface produced a response")};
    return {obs("input_special_chars_escaped", ObservationValue::yes(),
                std::move(ev),
                "quote payloads neither errored nor altered authentication")};
  }

  std::vector<Observation> hpp() {
    if (cfg.echo_path.empty()) {
      return {unknown("input_hpp_handling",
                      "no parameter-echoing endpoint configured")};
    }
    auto [path, param] = split_surface(cfg.echo_path, "p");
    std::string v1 = "first" + random_hex(8);
    std::string v2 = "last" + random_hex(8);
    HttpSession s(cfg);
    auto r = s.get(path + "?" + param + "=" + v1 + "&" + param + "=" + v2);
    std::string summary = "GET " + path + " with the same parameter twice";
    if (!r) return {unknown("input_hpp_handling", "transport error on duplicate-parameter probe")};
    if (r->status == 404 || r->status == 405 || r->status == 410) {
      return {obs("input_hpp_handling", ObservationValue::not_applicable(),
                  {evidence(summary, r)},
                  "the configured echo endpoint does not exist on this target")};
    }
    if (r->status >= 400) {
      return {obs("input_hpp_handling", ObservationValue::categorical("rejected"),
                  {evidence(summary, r)})};
    }
    bool has1 = r->body.find(v1) != std::string::npos;
    bool has2 = r->body.find(v2) != std::string::npos;
    if (has1 && has2)
      return {obs("input_hpp_handling", ObservationValue::categorical("concatenated"),
                  {evidence(summary, r)})};
    if (has1)
      return {obs("input_hpp_handling", ObservationValue::categorical("first-wins"),
                  {evidence(summary, r)})};
    if (has2)
      return {obs("input_hpp_handling", ObservationValue::categorical("last-wins"),
                  {evidence(summary, r)})};
    return {unknown("input_hpp_handling",
                    "neither duplicate value was echoed; handling undecidable")};
  }

  std::string normalize_for_diff(const std::string& body) const {
    std::string s = body;
    for (const auto& pattern : sig.nonce_patterns) {
      try {
        s = std::regex_replace(s, std::regex(pattern, std::regex::icase), "");
      } catch (const std::regex_error&) {
      }
    }
    for (const std::string* name : {&cfg.valid_username, &cfg.nonexistent_username}) {
      if (name->empty()) continue;
      std::size_t pos = 0;
      while ((pos = s.find(*name, pos)) != std::string::npos)
        s.replace(pos, name->size(), "<user>");
    }
    return collapse_ws(s);
  }

  std::vector<Observation> user_enumeration(bool allow_registration) {
    HttpSession a(cfg);
    pace();
    auto ra = raw_login_post(a, cfg.valid_username, cfg.invalid_password);
    HttpSession b(cfg);
    pace();
    auto rb = raw_login_post(b, cfg.nonexistent_username, cfg.invalid_password);
    std::vector<Observation> out;
    std::string summary =
        "POST " + cfg.login_path +
        " once for an existing and once for a nonexistent account";
    if (!ra || !rb) {
      out.push_back(unknown("err_reveals_username",
                            "transport error during the paired login attempts"));
    } else {
      bool differs = ra->status != rb->status ||
                     normalize_for_diff(ra->body) != normalize_for_diff(rb->body);
      if (differs) {
        out.push_back(obs("err_reveals_username", ObservationValue::yes(),
                          {evidence(summary + " (existing)", ra),
                           evidence(summary + " (nonexistent)", rb)},
                          "responses distinguish the two accounts"));
      } else {
        out.push_back(obs("err_reveals_username", ObservationValue::no(),
                          {evidence(summary + " (existing)", ra),
                           evidence(summary + " (nonexistent)", rb)},
                          "responses are indistinguishable after nonce removal"));
      }
    }

    const std::vector<std::string> rule_markers = {
        "password must", "at least",  "minimum",   "uppercase",
        "lowercase",     "characters", "special character", "digit"};
    std::optional<HttpResult> rule_response;
    std::string rule_summary;
    if (allow_registration && !cfg.register_path.empty()) {
      HttpSession reg(cfg);
      std::string user = "wa_probe_" + random_hex(8);
      auto rr = reg.post_form(cfg.register_path,
                              {{cfg.username_field, user},
                               {cfg.email_field, user + "@probe.invalid"},
                               {cfg.password_field, "x"}});
      rule_summary = "POST " + cfg.register_path + " with a deliberately weak password";
      rule_response = rr;
    } else if (ra) {
      rule_summary = "inspect the failed-login response for policy text";
      rule_response = ra;
    }
    if (!rule_response) {
      out.push_back(unknown("err_reveals_pw_rules",
                            "no response available to inspect for policy text"));
    } else if (const std::string* hit =
                   match_any_ci(rule_response->body, rule_markers)) {
      out.push_back(obs("err_reveals_pw_rules", ObservationValue::yes(),
                        {evidence(rule_summary, rule_response)},
                        "policy text surfaced: " + *hit));
    } else {
      out.push_back(obs("err_reveals_pw_rules", ObservationValue::no(),
                        {evidence(rule_summary, rule_response)},
                        "no password policy text in the error output"));
    }
    return out;
  }

  std::vector<Observation> password_policy() {
    if (cfg.register_path.empty()) {
      return {unknown("auth_pw_complexity", "no registration endpoint configured")};
    }
    struct Rung {
      const char* password;
      ObservationValue verdict;
      const char* label;
    };
    const Rung ladder[] = {
        {"Z9!", ObservationValue::no(), "trivially short password"},
        {"aaaaaaaaaaaa", ObservationValue::categorical("Only Length"),
         "long single-class password"},
        {"abcdef123456", ObservationValue::categorical("Length+letters+numbers"),
         "long letters-and-digits password"},
        {"Str0ng!Passw0rd#", ObservationValue::categorical("Full"),
         "long mixed-class password with symbols"},
    };
    HttpSession s(cfg);
    std::vector<EvidencePair> rejected_ev;
    for (const auto& rung : ladder) {
      std::string user = "wa_policy_" + random_hex(8);
      auto r = s.post_form(cfg.register_path,
                           {{cfg.username_field, user},
                            {cfg.email_field, user + "@probe.invalid"},
                            {cfg.password_field, rung.password}});
      std::string summary = std::string("POST ") + cfg.register_path + " with a " +
                            rung.label;
      if (!r) return {unknown("auth_pw_complexity", "transport error during registration")};
      bool password_rejected =
          r->status >= 400 || contains_ci(r->body, "password");
      if (!password_rejected) {
        return {obs("auth_pw_complexity", rung.verdict, {evidence(summary, r)},
                    std::string("weakest accepted rung: ") + rung.label)};
      }
      rejected_ev.push_back(evidence(summary, r));
    }
    return {obs("auth_pw_complexity", ObservationValue::unknown(),
                std::move(rejected_ev),
                "every rung of the password ladder was rejected")};
  }

  std::vector<Observation> mfa_probe() {
    HttpSession s(cfg);
    auto la = attempt_login(s, cfg.valid_username, cfg.valid_password, false);
    std::string summary = "POST " + cfg.login_path + " with valid credentials";
    std::vector<Observation> out;
    if (la.outcome == LoginOutcome::MfaChallenge) {
      out.push_back(obs("auth_mfa_enabled", ObservationValue::yes(),
                        {evidence(summary, la.response)}));
      const std::string body = la.response ? la.response->body : "";
      std::string kind;
      if (contains_ci(body, "authenticator") || contains_ci(body, "totp"))
        kind = "TOTP";
      else if (contains_ci(body, "sms") || contains_ci(body, "text message") ||
               contains_ci(body, "emailed"))
        kind = "OTP";
      else if (contains_ci(body, "push"))
        kind = "Push Notification";
      if (!kind.empty()) {
        out.push_back(obs("auth_mfa_type", ObservationValue::categorical(kind),
                          {evidence(summary, la.response)}));
      } else {
        out.push_back(unknown("auth_mfa_type",
                              "challenge present but its mechanism is unstated"));
      }
    } else if (la.outcome == LoginOutcome::Success) {
      out.push_back(obs("auth_mfa_enabled", ObservationValue::no(),
                        {evidence(summary, la.response)},
                        "login completed without a second factor"));
      out.push_back(obs("auth_mfa_type", ObservationValue::not_applicable(), {},
                        "no second factor requested"));
    } else {
      std::string why = "login ended as " + std::string(outcome_name(la.outcome));
      out.push_back(unknown("auth_mfa_enabled", why));
      out.push_back(unknown("auth_mfa_type", why));
    }
    return out;
  }

  std::vector<Observation> email_verification() {
    if (cfg.register_path.empty()) {
      return {unknown("input_email_verification",
                      "no registration endpoint configured")};
    }
    HttpSession s(cfg);
    std::string user = "wa_mail_" + random_hex(8);
    std::string email = user + "@probe.invalid";
    auto rr = s.post_form(cfg.register_path,
                          {{cfg.username_field, user},
                           {cfg.email_field, email},
                           {cfg.password_field, "Str0ng!Passw0rd#"}});
    std::string reg_summary = "POST " + cfg.register_path + " for a throwaway account";
    if (!rr || rr->status >= 400) {
      return {unknown("input_email_verification",
                      "throwaway registration was rejected")};
    }
    HttpSession fresh(cfg);
    auto la = attempt_login(fresh, user, "Str0ng!Passw0rd#", false);
    std::string login_summary = "POST " + cfg.login_path + " as the unverified account";
    if (la.outcome == LoginOutcome::VerifyEmail) {
      return {obs("input_email_verification", ObservationValue::yes(),
                  {evidence(reg_summary, rr), evidence(login_summary, la.response)})};
    }
    if (la.outcome == LoginOutcome::Success ||
        la.outcome == LoginOutcome::MfaChallenge) {
      return {obs("input_email_verification", ObservationValue::no(),
                  {evidence(reg_summary, rr), evidence(login_summary, la.response)},
                  "the account worked without confirming its address")};
    }
    if (!cfg.mail_sink_path.empty()) {
      auto mail = s.get(cfg.mail_sink_path);
      if (mail && contains_ci(mail->body, email) &&
          contains_ci(mail->body, "verify")) {
        return {obs("input_email_verification", ObservationValue::yes(),
                    {evidence(reg_summary, rr),
                     evidence("GET " + cfg.mail_sink_path, mail)},
                    "a verification message was issued and login stayed blocked")};
      }
    }
    return {unknown("input_email_verification",
                    "login ended as " + std::string(outcome_name(la.outcome)) +
                        " and no verification flow was identified")};
  }
};

Scanner::Scanner(TargetConfig config, ProbeSignatures signatures, int parallelism)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(signatures),
                                   parallelism)) {}

Scanner::~Scanner() = default;

const TargetConfig& Scanner::config() const { return impl_->cfg; }

std::vector<Observation> Scanner::probe_security_headers() {
  return impl_->security_headers();
}
std::vector<Observation> Scanner::probe_session_cookies() {
  return impl_->session_cookies();
}
Observation Scanner::probe_login_method() {
  return impl_->login_method().front();
}
std::vector<Observation> Scanner::probe_bruteforce_lockout() {
  return impl_->bruteforce_lockout();
}
std::vector<Observation> Scanner::probe_rate_limit() { return impl_->rate_limit(); }
std::vector<Observation> Scanner::probe_session_lifecycle() {
  return impl_->session_lifecycle();
}
std::vector<Observation> Scanner::probe_csrf() { return impl_->csrf(); }
std::vector<Observation> Scanner::probe_xss_reflection() {
  return impl_->xss_reflection();
}
Observation Scanner::probe_sqli_error() { return impl_->sqli_error().front(); }
Observation Scanner::probe_hpp() { return impl_->hpp().front(); }
std::vector<Observation> Scanner::probe_user_enumeration() {
  return impl_->user_enumeration(impl_->cfg.destructive_allowed);
}
Observation Scanner::probe_password_policy() {
  return impl_->password_policy().front();
}
std::vector<Observation> Scanner::probe_mfa_and_email_verification() {
  auto out = impl_->mfa_probe();
  if (impl_->cfg.destructive_allowed) {
    auto mail = impl_->email_verification();
    out.insert(out.end(), mail.begin(), mail.end());
  }
  return out;
}

ProbeReport Scanner::run_scan(const Checklist& checklist) {
  auto& impl = *impl_;
  ProbeReport report;
  report.target_label = impl.cfg.effective_label();
  report.mode = Source::Dynamic;

  std::vector<Observation> observations = impl.security_headers();

  using Job = std::function<std::vector<Observation>()>;
  std::vector<Job> jobs = {
      [&] { return impl.xss_reflection(); },
      [&] { return impl.hpp(); },
      [&] { return impl.sqli_error(); },
      [&] { return impl.user_enumeration(impl.cfg.destructive_allowed); },
      [&] { return impl.login_method(); },
      [&] { return impl.session_cookies(); },
      [&] { return impl.mfa_probe(); },
      [&] { return impl.csrf(); },
      [&] { return impl.session_lifecycle(); },
  };

  if (impl.parallelism <= 1) {
    for (auto& job : jobs) {
      auto batch = job();
      observations.insert(observations.end(), batch.begin(), batch.end());
    }
  } else {
    std::vector<std::vector<Observation>> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) break;
        try {
          results[i] = jobs[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    int threads = std::min<int>(impl.parallelism, static_cast<int>(jobs.size()));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& batch : results)
      observations.insert(observations.end(), batch.begin(), batch.end());
  }

  if (impl.cfg.destructive_allowed) {
    auto append = [&](std::vector<Observation> batch) {
      observations.insert(observations.end(),
                          std::make_move_iterator(batch.begin()),
                          std::make_move_iterator(batch.end()));
    };
    append(impl.password_policy());
    append(impl.email_verification());
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    append(impl.rate_limit());
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    append(impl.bruteforce_lockout());
  } else {
    static const char* kGated[] = {
        "auth_lockout",    "auth_captcha",           "auth_pw_complexity",
        "auth_rate_limit", "auth_rate_limit_response", "input_email_verification",
    };
    for (const char* id : kGated)
      report.skipped.push_back(
          {id, "destructive probes disabled (destructive_allowed=false)"});
  }

  std::set<std::string> skipped_ids;
  for (const auto& s : report.skipped) skipped_ids.insert(s.parameter_id);
  std::map<std::string, int> seen;
  for (const auto& o : observations) ++seen[o.parameter_id];
  for (const auto& spec : checklist.by_mode(EvalMode::Dynamic)) {
    int n = seen.count(spec->id) ? seen[spec->id] : 0;
    bool skipped = skipped_ids.count(spec->id) > 0;
    if (n + (skipped ? 1 : 0) != 1)
      throw ScanError("probe coverage fault for parameter " + spec->id);
  }
  for (const auto& o : observations) {
    if (!checklist.find(o.parameter_id))
      throw ScanError("probe emitted unknown parameter " + o.parameter_id);
  }

  std::stable_sort(observations.begin(), observations.end(),
                   [&](const Observation& a, const Observation& b) {
                     return checklist.index_of(a.parameter_id) <
                            checklist.index_of(b.parameter_id);
                   });
  report.observations = std::move(observations);
  return report;
}

}  // namespace webaudit

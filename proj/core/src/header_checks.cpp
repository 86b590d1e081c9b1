#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "webaudit/observation.hpp"
#include "webaudit/scanner.hpp"

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

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(strip(s.substr(pos)));
      break;
    }
    out.push_back(strip(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct CspDirective {
  std::string name;                  // lowercase
  std::vector<std::string> sources;  // original case
};

// Serialized CSP splits on ';' into directives; the first token names the
// directive, the rest are source expressions.
std::vector<CspDirective> parse_csp(std::string_view policy) {
  std::vector<CspDirective> out;
  for (const std::string& piece : split(policy, ';')) {
    if (piece.empty()) continue;
    std::vector<std::string> toks = whitespace_tokens(piece);
    if (toks.empty()) continue;
    CspDirective d;
    d.name = to_lower(toks[0]);
    d.sources.assign(toks.begin() + 1, toks.end());
    out.push_back(std::move(d));
  }
  return out;
}

const CspDirective* find_directive(const std::vector<CspDirective>& dirs,
                                   std::string_view name) {
  for (const auto& d : dirs) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

bool has_source(const CspDirective& d, std::string_view wanted) {
  for (const auto& s : d.sources) {
    if (to_lower(s) == wanted) return true;
  }
  return false;
}

// First matching header value, case-insensitive name.
std::optional<std::string> header_value(
    const std::multimap<std::string, std::string>& headers, std::string_view name) {
  std::string want = to_lower(name);
  for (const auto& [k, v] : headers) {
    if (to_lower(k) == want) return v;
  }
  return std::nullopt;
}

Observation header_obs(std::string id, ObservationValue value, std::string request,
                       std::string response) {
  Observation obs;
  obs.parameter_id = std::move(id);
  obs.value = std::move(value);
  obs.evidence.push_back({std::move(request), std::move(response)});
  obs.source = Source::Dynamic;
  obs.captured_at = now_iso8601();
  return obs;
}

// Permissions-Policy entries look like "camera=()", "geolocation=(self)" or
// "fullscreen=*". A feature counts as restricted when its allowlist is empty
// or self-only.
bool feature_restricted(std::string_view policy, std::string_view feature) {
  for (const std::string& entry : split(policy, ',')) {
    size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = to_lower(strip(entry.substr(0, eq)));
    if (name != feature) continue;
    std::string allow = to_lower(strip(entry.substr(eq + 1)));
    if (allow == "()" || allow == "(self)" || allow == "(\"self\")" || allow == "('self')") {
      return true;
    }
    return false;
  }
  return false;
}

}  // namespace

std::vector<Observation> check_security_headers(
    const std::multimap<std::string, std::string>& response_headers) {
  std::vector<Observation> out;
  const std::string request = "GET base_url (response headers)";
  auto absent = [](std::string_view name) {
    return std::string(name) + ": (absent)";
  };
  auto quoted = [](std::string_view name, const std::string& v) {
    return std::string(name) + ": " + v;
  };

  // Content-Security-Policy family.
  std::optional<std::string> csp = header_value(response_headers, "Content-Security-Policy");
  out.push_back(header_obs("hdr_csp_present",
                           csp ? ObservationValue::yes() : ObservationValue::no(), request,
                           csp ? quoted("Content-Security-Policy", *csp)
                               : absent("Content-Security-Policy")));
  {
    bool blocks_inline = false;
    bool blocks_data = false;
    bool restricts_external = false;
    if (csp) {
      auto dirs = parse_csp(*csp);
      const CspDirective* script = find_directive(dirs, "script-src");
      const CspDirective* effective = script ? script : find_directive(dirs, "default-src");
      if (effective) {
        blocks_inline = !has_source(*effective, "'unsafe-inline'");
        blocks_data = !has_source(*effective, "data:");
      }
      // The dedicated script-src directive must exist and not be wildcarded.
      restricts_external = script && !has_source(*script, "*");
    }
    std::string detail = csp ? quoted("Content-Security-Policy", *csp)
                             : absent("Content-Security-Policy");
    out.push_back(header_obs("hdr_csp_blocks_inline",
                             blocks_inline ? ObservationValue::yes() : ObservationValue::no(),
                             request, detail));
    out.push_back(header_obs("hdr_csp_blocks_data_uris",
                             blocks_data ? ObservationValue::yes() : ObservationValue::no(),
                             request, detail));
    out.push_back(header_obs("hdr_csp_restricts_external",
                             restricts_external ? ObservationValue::yes() : ObservationValue::no(),
                             request, detail));
  }

  std::optional<std::string> xfo = header_value(response_headers, "X-Frame-Options");
  out.push_back(header_obs("hdr_x_frame_options",
                           xfo ? ObservationValue::yes() : ObservationValue::no(), request,
                           xfo ? quoted("X-Frame-Options", *xfo) : absent("X-Frame-Options")));

  std::optional<std::string> xcto = header_value(response_headers, "X-Content-Type-Options");
  bool nosniff = xcto && to_lower(strip(*xcto)) == "nosniff";
  out.push_back(header_obs("hdr_x_content_type_options",
                           nosniff ? ObservationValue::yes() : ObservationValue::no(), request,
                           xcto ? quoted("X-Content-Type-Options", *xcto)
                                : absent("X-Content-Type-Options")));

  std::optional<std::string> hsts = header_value(response_headers, "Strict-Transport-Security");
  out.push_back(header_obs("hdr_hsts_present",
                           hsts ? ObservationValue::yes() : ObservationValue::no(), request,
                           hsts ? quoted("Strict-Transport-Security", *hsts)
                                : absent("Strict-Transport-Security")));
  {
    // max-age surfaces as a categorical value: the configured seconds.
    ObservationValue v = ObservationValue::no();
    if (hsts) {
      for (const std::string& piece : split(*hsts, ';')) {
        std::string low = to_lower(piece);
        if (low.rfind("max-age=", 0) == 0) {
          std::string digits = strip(piece.substr(8));
          if (!digits.empty() &&
              std::all_of(digits.begin(), digits.end(),
                          [](unsigned char c) { return std::isdigit(c); })) {
            v = ObservationValue::categorical(digits);
          }
          break;
        }
      }
    }
    out.push_back(header_obs("hdr_hsts_max_age", v, request,
                             hsts ? quoted("Strict-Transport-Security", *hsts)
                                  : absent("Strict-Transport-Security")));
  }

  std::optional<std::string> rp = header_value(response_headers, "Referrer-Policy");
  out.push_back(header_obs("hdr_referrer_policy_set",
                           rp ? ObservationValue::yes() : ObservationValue::no(), request,
                           rp ? quoted("Referrer-Policy", *rp) : absent("Referrer-Policy")));
  {
    // A policy list applies its last recognized token.
    bool strict = false;
    if (rp) {
      std::vector<std::string> policies = split(*rp, ',');
      for (auto it = policies.rbegin(); it != policies.rend(); ++it) {
        std::string low = to_lower(*it);
        if (low.empty()) continue;
        strict = low == "no-referrer" || low == "strict-origin-when-cross-origin";
        break;
      }
    }
    out.push_back(header_obs("hdr_referrer_policy_strict",
                             strict ? ObservationValue::yes() : ObservationValue::no(), request,
                             rp ? quoted("Referrer-Policy", *rp) : absent("Referrer-Policy")));
  }

  std::optional<std::string> pp = header_value(response_headers, "Permissions-Policy");
  out.push_back(header_obs("hdr_permissions_policy",
                           pp ? ObservationValue::yes() : ObservationValue::no(), request,
                           pp ? quoted("Permissions-Policy", *pp) : absent("Permissions-Policy")));
  {
    bool restricted = pp && feature_restricted(*pp, "camera") &&
                      feature_restricted(*pp, "microphone") &&
                      feature_restricted(*pp, "geolocation");
    out.push_back(header_obs("hdr_device_features_restricted",
                             restricted ? ObservationValue::yes() : ObservationValue::no(),
                             request,
                             pp ? quoted("Permissions-Policy", *pp)
                                : absent("Permissions-Policy")));
  }

  return out;
}

namespace {

struct CookieParts {
  std::string name;
  std::string value;
  std::map<std::string, std::string> attributes;  // lowercase attr -> value
};

CookieParts parse_set_cookie(std::string_view line) {
  CookieParts c;
  std::vector<std::string> pieces = split(line, ';');
  if (!pieces.empty()) {
    size_t eq = pieces[0].find('=');
    if (eq != std::string::npos) {
      c.name = strip(pieces[0].substr(0, eq));
      c.value = strip(pieces[0].substr(eq + 1));
    } else {
      c.name = strip(pieces[0]);
    }
  }
  for (size_t i = 1; i < pieces.size(); ++i) {
    size_t eq = pieces[i].find('=');
    if (eq == std::string::npos) {
      c.attributes[to_lower(strip(pieces[i]))] = "";
    } else {
      c.attributes[to_lower(strip(pieces[i].substr(0, eq)))] = strip(pieces[i].substr(eq + 1));
    }
  }
  return c;
}

bool looks_like_session_cookie(const std::string& name) {
  std::string low = to_lower(name);
  return low == "sid" || low == "sessid" || low.find("sess") != std::string::npos;
}

}  // namespace

std::vector<Observation> check_cookie_flags(
    const std::vector<std::string>& set_cookie_headers) {
  std::vector<Observation> out;
  const std::string request = "session-establishing exchange (Set-Cookie headers)";

  const std::string* chosen_line = nullptr;
  CookieParts chosen;
  for (const std::string& line : set_cookie_headers) {
    CookieParts c = parse_set_cookie(line);
    if (c.name.empty()) continue;
    if (!chosen_line || (looks_like_session_cookie(c.name) &&
                         !looks_like_session_cookie(chosen.name))) {
      chosen_line = &line;
      chosen = c;
    }
  }

  Observation creation;
  creation.parameter_id = "sess_creation";
  creation.source = Source::Dynamic;
  creation.captured_at = now_iso8601();
  if (!chosen_line) {
    creation.value = ObservationValue::no();
    creation.evidence.push_back({request, "no Set-Cookie header observed"});
    out.push_back(creation);
    for (const char* id :
         {"sess_cookie_secure", "sess_cookie_httponly", "sess_cookie_samesite"}) {
      Observation obs;
      obs.parameter_id = id;
      obs.value = ObservationValue::not_applicable();
      obs.source = Source::Dynamic;
      obs.captured_at = now_iso8601();
      obs.note = "no session cookie to inspect";
      obs.evidence.push_back({request, "no Set-Cookie header observed"});
      out.push_back(std::move(obs));
    }
    return out;
  }

  // Cookie values are session material; evidence keeps the name and
  // attributes but masks the value.
  std::string masked = *chosen_line;
  if (!chosen.value.empty()) {
    size_t pos = masked.find(chosen.value);
    if (pos != std::string::npos) masked.replace(pos, chosen.value.size(), "[masked]");
  }

  creation.value = ObservationValue::yes();
  creation.evidence.push_back({request, "Set-Cookie: " + masked});
  out.push_back(creation);

  auto flag_obs = [&](const char* id, const char* attr) {
    Observation obs;
    obs.parameter_id = id;
    obs.value = chosen.attributes.count(attr) ? ObservationValue::yes() : ObservationValue::no();
    obs.source = Source::Dynamic;
    obs.captured_at = now_iso8601();
    obs.evidence.push_back({request, "Set-Cookie: " + masked});
    out.push_back(std::move(obs));
  };
  flag_obs("sess_cookie_secure", "secure");
  flag_obs("sess_cookie_httponly", "httponly");
  flag_obs("sess_cookie_samesite", "samesite");
  return out;
}

ProbeSignatures ProbeSignatures::defaults() {
  ProbeSignatures s;
  s.sql_errors = {
      "you have an error in your sql syntax",
      "sql syntax",
      "mysql_fetch",
      "mysqli",
      "sqlstate[",
      "ora-01756",
      "ora-00933",
      "sqlite3::",
      "sqlite error",
      "pg_query",
      "unclosed quotation mark",
      "syntax error at or near",
      "unterminated quoted string",
  };
  s.captcha_markers = {
      "captcha",
      "g-recaptcha",
      "h-captcha",
      "cf-turnstile",
  };
  s.nonce_patterns = {
      R"([0-9a-fA-F]{16,})",
      R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2})",
      R"(value="[^"]{8,}")",
  };
  return s;
}

std::vector<std::string> ProbeSignatures::parse_lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string body = strip(line);
    if (body.empty() || body[0] == '#') continue;
    out.push_back(std::move(body));
  }
  return out;
}

}  // namespace webaudit

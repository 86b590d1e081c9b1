#include "webaudit/reference.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace webaudit::reference {

namespace {

struct RowValues {
  const char* parameter_id;
  // Column order follows kLabels: ChatGPT, DeepSeek, Claude, Gemini, Grok.
  const char* v[5];
};

const RowValues kTable[] = {
    {"auth_lockout", {"No", "No", "No", "Yes", "No"}},
    {"auth_captcha", {"No", "No", "No", "No", "No"}},
    {"auth_lockout_notice", {"No", "NA", "No", "No", "No"}},
    {"auth_pw_complexity",
     {"Only Length", "No", "No", "Only Length", "Length+letters+numbers"}},
    {"auth_pw_expiration", {"No", "No", "No", "No", "No"}},
    {"auth_pw_reuse", {"No", "No", "No", "No", "No"}},
    {"auth_mfa_enabled", {"No", "No", "No", "No", "No"}},
    {"auth_mfa_type", {"NA", "NA", "NA", "NA", "NA"}},
    {"auth_backup_codes", {"NA", "NA", "NA", "NA", "NA"}},
    {"auth_rate_limit", {"No", "No", "No", "No", "Yes"}},
    {"auth_rate_limit_response", {"NA", "NA", "NA", "NA", "Error Code"}},

    {"input_email_verification", {"No", "No", "Yes", "No", "No"}},
    {"input_parameterized_queries", {"Yes", "Yes", "Yes", "Yes", "Yes"}},
    {"input_special_chars_escaped", {"Yes", "Yes", "Yes", "Yes", "Yes"}},
    {"input_js_execution", {"No", "Yes", "No", "Yes", "No"}},
    {"input_html_injection", {"No", "Yes", "No", "Yes", "No"}},
    {"input_post_only_login", {"Yes", "Yes", "Yes", "Yes", "Yes"}},
    {"input_cors_policy", {"No", "No", "No", "No", "No"}},
    {"input_csrf_token_present", {"No", "No", "Yes", "No", "No"}},
    {"input_csrf_validation", {"NA", "NA", "Yes", "NA", "NA"}},
    {"input_hpp_handling", {"NA", "NA", "NA", "NA", "NA"}},

    {"sess_creation", {"Yes", "Yes", "Yes", "Yes", "Yes"}},
    {"sess_cookie_secure", {"Yes", "No", "No", "Yes", "Yes"}},
    {"sess_cookie_httponly", {"Yes", "No", "No", "Yes", "Yes"}},
    {"sess_cookie_samesite", {"Yes", "No", "No", "Yes", "Yes"}},
    {"sess_timeout", {"No", "No", "No", "Yes", "No"}},
    {"sess_regenerated", {"Yes", "Yes", "Yes", "Yes", "Yes"}},
    {"sess_fixation_protection", {"Yes", "Yes", "No", "Yes", "Yes"}},
    {"sess_id_in_cookies_only", {"Yes", "Yes", "Yes", "Yes", "Yes"}},

    {"store_hash_algorithm", {"bcrypt", "bcrypt", "NA", "Argon2", "bcrypt"}},
    {"store_salted_hashes", {"Yes", "Yes", "NA", "Yes", "Yes"}},

    {"err_reveals_username", {"No", "No", "No", "Yes", "No"}},
    {"err_reveals_pw_rules", {"No", "No", "No", "Yes", "No"}},
    {"err_failed_login_logged", {"No", "No", "No", "Yes", "Yes"}},
    {"err_unusual_flagged", {"No", "No", "No", "No", "No"}},
    {"err_logs_secure", {"No", "No", "No", "No", "No"}},

    {"hdr_csp_present", {"No", "No", "No", "No", "No"}},
    {"hdr_csp_blocks_inline", {"No", "No", "No", "No", "No"}},
    {"hdr_csp_blocks_data_uris", {"No", "No", "No", "No", "No"}},
    {"hdr_csp_restricts_external", {"No", "No", "No", "No", "No"}},
    {"hdr_x_frame_options", {"No", "No", "No", "No", "No"}},
    {"hdr_x_content_type_options", {"No", "No", "No", "No", "No"}},
    {"hdr_hsts_present", {"No", "No", "No", "No", "No"}},
    {"hdr_hsts_max_age", {"No", "No", "No", "No", "No"}},
    {"hdr_referrer_policy_set", {"No", "No", "No", "No", "No"}},
    {"hdr_referrer_policy_strict", {"No", "No", "No", "No", "No"}},
    {"hdr_permissions_policy", {"No", "No", "No", "No", "No"}},
    {"hdr_device_features_restricted", {"No", "No", "No", "No", "No"}},
};

int label_index(std::string_view label) {
  auto eq = [](std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(a[i])) !=
          std::tolower(static_cast<unsigned char>(b[i])))
        return false;
    }
    return true;
  };
  for (size_t i = 0; i < std::size(kLabels); ++i) {
    if (eq(label, kLabels[i])) return static_cast<int>(i);
  }
  return -1;
}

Source source_for(EvalMode mode) {
  switch (mode) {
    case EvalMode::Dynamic: return Source::Dynamic;
    case EvalMode::Static: return Source::Static;
    case EvalMode::Manual: return Source::Manual;
  }
  return Source::Manual;
}

}  // namespace

bool is_label(std::string_view label) { return label_index(label) >= 0; }

std::string value_token(std::string_view label, std::string_view parameter_id) {
  int col = label_index(label);
  if (col < 0) throw std::invalid_argument("unknown reference audit: " + std::string(label));
  for (const RowValues& row : kTable) {
    if (parameter_id == row.parameter_id) return row.v[col];
  }
  throw std::invalid_argument("unknown parameter id: " + std::string(parameter_id));
}

std::vector<Observation> observations(std::string_view label) {
  int col = label_index(label);
  if (col < 0) throw std::invalid_argument("unknown reference audit: " + std::string(label));
  const Checklist& cl = default_checklist();
  std::vector<Observation> out;
  out.reserve(cl.parameters.size());
  for (const ParameterSpec& spec : cl.parameters) {
    Observation obs;
    obs.parameter_id = spec.id;
    obs.value = *ObservationValue::from_string(value_token(label, spec.id));
    obs.source = source_for(spec.mode);
    obs.captured_at = "2025-06-01T00:00:00Z";
    obs.note = "bundled reference audit";
    if (obs.value.decided()) {
      obs.evidence.push_back(
          {"reference audit of " + std::string(label),
           "recorded value: " + obs.value.to_string()});
    }
    out.push_back(std::move(obs));
  }
  return out;
}

AuditProfile profile(std::string_view label, const Checklist& checklist) {
  int col = label_index(label);
  if (col < 0) throw std::invalid_argument("unknown reference audit: " + std::string(label));
  std::vector<Observation> obs = observations(label);
  return build_profile(std::string(kLabels[static_cast<size_t>(col)]), obs, checklist);
}

std::vector<AuditProfile> all_profiles(const Checklist& checklist) {
  std::vector<AuditProfile> out;
  for (std::string_view label : kLabels) out.push_back(profile(label, checklist));
  return out;
}

}  // namespace webaudit::reference

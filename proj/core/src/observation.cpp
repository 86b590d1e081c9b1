#include "webaudit/observation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace webaudit {

namespace {

std::string lowered(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

ObservationValue ObservationValue::categorical(std::string text) {
  if (text.empty()) throw ObservationError("categorical observation value must not be empty");
  ObservationValue v(ValueKind::Categorical);
  v.text_ = std::move(text);
  return v;
}

std::string ObservationValue::to_string() const {
  switch (kind_) {
    case ValueKind::Yes: return "Yes";
    case ValueKind::No: return "No";
    case ValueKind::NotApplicable: return "NA";
    case ValueKind::Unknown: return "Unknown";
    case ValueKind::Categorical: return text_;
  }
  return "Unknown";
}

std::optional<ObservationValue> ObservationValue::from_string(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string k = lowered(s);
  if (k == "yes") return yes();
  if (k == "no") return no();
  if (k == "na" || k == "notapplicable" || k == "n/a") return not_applicable();
  if (k == "unknown") return unknown();
  return categorical(std::string(s));
}

std::string_view to_token(Source s) {
  switch (s) {
    case Source::Dynamic: return "Dynamic";
    case Source::Static: return "Static";
    case Source::Manual: return "Manual";
  }
  return "?";
}

std::optional<Source> parse_source(std::string_view s) {
  std::string k = lowered(s);
  if (k == "dynamic") return Source::Dynamic;
  if (k == "static") return Source::Static;
  if (k == "manual") return Source::Manual;
  return std::nullopt;
}

void validate_observation(const Observation& obs) {
  if (obs.parameter_id.empty()) throw ObservationError("observation without parameter id");
  if (obs.source == Source::Dynamic && obs.value.decided() &&
      obs.value.kind() != ValueKind::NotApplicable && obs.evidence.empty()) {
    throw ObservationError("decided dynamic observation for " + obs.parameter_id +
                           " carries no evidence");
  }
  if (obs.value.is_unknown() && obs.note.empty() && obs.evidence.empty()) {
    throw ObservationError("unknown observation for " + obs.parameter_id +
                           " gives no reason");
  }
}

std::string now_iso8601() {
  using std::chrono::system_clock;
  std::time_t t = system_clock::to_time_t(system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[72];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace webaudit

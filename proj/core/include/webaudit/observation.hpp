#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webaudit {

enum class ValueKind : unsigned char { Yes, No, NotApplicable, Unknown, Categorical };

// Outcome of evaluating one checklist parameter. Yes/No answer Boolean
// parameters; NotApplicable means the dependent feature is absent; Unknown
// means the evaluation could not decide; Categorical carries the concrete
// variant observed (e.g. "bcrypt", "Only Length").
class ObservationValue {
 public:
  ObservationValue() = default;

  static ObservationValue yes() { return ObservationValue(ValueKind::Yes); }
  static ObservationValue no() { return ObservationValue(ValueKind::No); }
  static ObservationValue not_applicable() { return ObservationValue(ValueKind::NotApplicable); }
  static ObservationValue unknown() { return ObservationValue(ValueKind::Unknown); }
  static ObservationValue categorical(std::string text);

  ValueKind kind() const { return kind_; }
  const std::string& text() const { return text_; }

  bool is_yes() const { return kind_ == ValueKind::Yes; }
  bool is_no() const { return kind_ == ValueKind::No; }
  bool is_unknown() const { return kind_ == ValueKind::Unknown; }
  bool is_categorical() const { return kind_ == ValueKind::Categorical; }
  // A value the evaluation actually settled on (everything but Unknown).
  bool decided() const { return kind_ != ValueKind::Unknown; }

  // "Yes", "No", "NA", "Unknown", or the categorical text.
  std::string to_string() const;
  // Inverse of to_string. The four reserved tokens map to their kinds
  // (case-insensitively); anything else is categorical. Empty -> nullopt.
  static std::optional<ObservationValue> from_string(std::string_view s);

  bool operator==(const ObservationValue&) const = default;

 private:
  explicit ObservationValue(ValueKind k) : kind_(k) {}
  ValueKind kind_ = ValueKind::Unknown;
  std::string text_;
};

enum class Source : unsigned char { Dynamic, Static, Manual };

std::string_view to_token(Source s);
std::optional<Source> parse_source(std::string_view s);

// One probe exchange backing an observation: a request summary and the
// relevant response excerpt. Static analysis stores file:line in `request`
// and the matched snippet in `response`.
struct EvidencePair {
  std::string request;
  std::string response;

  bool operator==(const EvidencePair&) const = default;
};

struct Observation {
  std::string parameter_id;
  ObservationValue value;
  std::vector<EvidencePair> evidence;
  Source source = Source::Dynamic;
  std::string captured_at;  // ISO-8601 UTC
  std::string note;         // short context, e.g. why a value is Unknown

  bool operator==(const Observation&) const = default;
};

struct SkippedParameter {
  std::string parameter_id;
  std::string reason;

  bool operator==(const SkippedParameter&) const = default;
};

// Output of one evaluation engine run (dynamic scan or static analysis).
struct ProbeReport {
  std::string target_label;
  Source mode = Source::Dynamic;
  std::vector<Observation> observations;
  std::vector<SkippedParameter> skipped;
};

struct ObservationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Enforces evidence discipline: a decided dynamic observation must carry at
// least one evidence pair; Unknown must carry a note or evidence explaining
// itself.
void validate_observation(const Observation& obs);

// Current time as ISO-8601 UTC ("2026-08-16T12:34:56Z").
std::string now_iso8601();

}  // namespace webaudit

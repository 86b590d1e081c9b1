#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webaudit {

// Likelihood and impact carry the ordinal used by the risk matrix.
enum class Likelihood : std::uint8_t {
  Rare = 1,
  Unlikely = 2,
  Moderate = 3,
  Likely = 4,
  AlmostCertain = 5,
};

enum class Impact : std::uint8_t {
  Insignificant = 1,
  Minor = 2,
  Significant = 3,
  Major = 4,
  Severe = 5,
};

enum class RiskLevel : std::uint8_t {
  VeryLow = 1,
  Low = 2,
  Medium = 3,
  High = 4,
  VeryHigh = 5,
  Extreme = 6,
};

enum class Category : std::uint8_t {
  AuthenticationSecurity,
  InputValidation,
  SessionSecurity,
  SecureStorage,
  ErrorHandling,
  HttpSecurityHeaders,
};

inline constexpr Category kAllCategories[] = {
    Category::AuthenticationSecurity, Category::InputValidation,
    Category::SessionSecurity,        Category::SecureStorage,
    Category::ErrorHandling,          Category::HttpSecurityHeaders,
};

// DesiredNo marks parameters that describe a weakness: observing "No" is the
// compliant outcome (e.g. "HTML tag injection possible").
enum class Polarity : std::uint8_t { DesiredYes, DesiredNo };

enum class ParameterKind : std::uint8_t { Boolean, Categorical };

// How a parameter is primarily evaluated.
enum class EvalMode : std::uint8_t { Dynamic, Static, Manual };

int ordinal(Likelihood l);
int ordinal(Impact i);
int rank(RiskLevel r);

std::string_view to_token(Likelihood l);
std::string_view to_token(Impact i);
std::string_view to_token(RiskLevel r);
std::string_view to_token(Category c);
std::string_view to_token(Polarity p);
std::string_view to_token(ParameterKind k);
std::string_view to_token(EvalMode m);

// Human-facing names ("Very High", "Authentication Security", ...).
std::string_view display_name(Likelihood l);
std::string_view display_name(Impact i);
std::string_view display_name(RiskLevel r);
std::string_view display_name(Category c);

// Case-insensitive; accepts both token and display spellings.
std::optional<Likelihood> parse_likelihood(std::string_view s);
std::optional<Impact> parse_impact(std::string_view s);
std::optional<RiskLevel> parse_risk_level(std::string_view s);
std::optional<Category> parse_category(std::string_view s);
std::optional<Polarity> parse_polarity(std::string_view s);
std::optional<ParameterKind> parse_parameter_kind(std::string_view s);
std::optional<EvalMode> parse_eval_mode(std::string_view s);

// Number of parameters each category must hold in a valid checklist.
int expected_parameter_count(Category c);

// Maps a likelihood/impact pair onto the six-level risk scale. Monotone in
// both arguments.
RiskLevel risk_level(Likelihood likelihood, Impact impact);

struct ParameterSpec {
  std::string id;
  Category category = Category::AuthenticationSecurity;
  std::string subcategory;
  std::string name;
  Likelihood likelihood = Likelihood::Rare;
  Impact impact = Impact::Insignificant;
  RiskLevel risk = RiskLevel::VeryLow;
  EvalMode mode = EvalMode::Dynamic;
  Polarity polarity = Polarity::DesiredYes;
  ParameterKind kind = ParameterKind::Boolean;
  // For Categorical parameters: the known observation values. Judging counts
  // any concrete categorical value as fulfilled, so this is documentation of
  // the vocabulary, not a filter.
  std::vector<std::string> accepted_values;
};

struct Checklist {
  std::string version;
  std::vector<ParameterSpec> parameters;

  const ParameterSpec* find(std::string_view id) const;
  // Position of a parameter in checklist order, or -1.
  int index_of(std::string_view id) const;
  std::vector<const ParameterSpec*> by_mode(EvalMode mode) const;
  std::vector<const ParameterSpec*> by_category(Category category) const;
};

struct ChecklistError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Malformed row / field.
struct ChecklistParseError : ChecklistError {
  using ChecklistError::ChecklistError;
};
// Well-formed but inconsistent content (bad risk claim, duplicate id,
// category count mismatch).
struct ChecklistConsistencyError : ChecklistError {
  using ChecklistError::ChecklistError;
};

// The built-in 48-parameter audit checklist for web-application login and
// session security.
const Checklist& default_checklist();

// Throws ChecklistConsistencyError when ids collide, a stored risk does not
// match risk_level(likelihood, impact), or a category's parameter count does
// not match expected_parameter_count.
void validate_checklist(const Checklist& checklist);

// Line-oriented pipe-separated format; '#' starts a comment. Fields:
//   id|category|subcategory|name|likelihood|impact|mode|polarity|kind|accepted_values[|risk]
// The trailing risk field is optional on input and always written on output.
Checklist parse_checklist(std::string_view text);
Checklist load_checklist_file(const std::string& path);
std::string serialize_checklist(const Checklist& checklist);

}  // namespace webaudit

#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace latcorr {

/// A value in [0, 1]. Construction rejects anything else (including NaN).
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw std::domain_error("probability outside [0, 1]: " + std::to_string(value));
    }
  }

  constexpr double value() const noexcept { return value_; }
  constexpr explicit operator double() const noexcept { return value_; }

  friend constexpr auto operator<=>(const Probability&, const Probability&) = default;

 private:
  double value_ = 0.0;
};

/// Pairwise bridge case. The first letter names the variable whose threshold comes
/// first in the bridge function (e.g. TC: truncated first, TB: truncated then binary).
enum class CaseKind : unsigned char { CC = 0, BC = 1, BB = 2, TC = 3, TT = 4, TB = 5 };

inline constexpr CaseKind kAllCases[] = {CaseKind::CC, CaseKind::BC, CaseKind::BB,
                                         CaseKind::TC, CaseKind::TT, CaseKind::TB};

/// Number of thresholds the bridge function of `c` takes.
constexpr int threshold_count(CaseKind c) noexcept {
  switch (c) {
    case CaseKind::CC:
      return 0;
    case CaseKind::BC:
    case CaseKind::TC:
      return 1;
    case CaseKind::BB:
    case CaseKind::TT:
    case CaseKind::TB:
      return 2;
  }
  return 0;
}

/// Lower-case tag ("cc", "bc", ...), used for file names and CSV output.
std::string to_string(CaseKind c);

/// Parses "cc".."tb" (case-insensitive). Throws std::invalid_argument otherwise.
CaseKind parse_case_kind(const std::string& s);

enum class VariableType : unsigned char { continuous, binary, truncated };

std::string to_string(VariableType t);
VariableType parse_variable_type(const std::string& s);

}  // namespace latcorr

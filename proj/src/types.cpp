#include "latcorr/types.hpp"

#include <algorithm>
#include <cctype>

namespace latcorr {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

}  // namespace

std::string to_string(CaseKind c) {
  switch (c) {
    case CaseKind::CC:
      return "cc";
    case CaseKind::BC:
      return "bc";
    case CaseKind::BB:
      return "bb";
    case CaseKind::TC:
      return "tc";
    case CaseKind::TT:
      return "tt";
    case CaseKind::TB:
      return "tb";
  }
  return "?";
}

CaseKind parse_case_kind(const std::string& s) {
  const std::string t = lower(s);
  for (const CaseKind c : kAllCases) {
    if (to_string(c) == t) return c;
  }
  throw std::invalid_argument("unknown case kind '" + s + "'");
}

std::string to_string(VariableType t) {
  switch (t) {
    case VariableType::continuous:
      return "continuous";
    case VariableType::binary:
      return "binary";
    case VariableType::truncated:
      return "truncated";
  }
  return "?";
}

VariableType parse_variable_type(const std::string& s) {
  const std::string t = lower(s);
  if (t == "continuous") return VariableType::continuous;
  if (t == "binary") return VariableType::binary;
  if (t == "truncated") return VariableType::truncated;
  throw std::invalid_argument("unknown variable type '" + s + "'");
}

}  // namespace latcorr

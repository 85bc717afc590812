#pragma once

#include <stdexcept>
#include <string>

namespace stbc {

enum class ErrorCode {
  DimensionMismatch,
  LengthMismatch,
  RankDeficient,
  AllSubsetsSingular,
  UnsupportedSize,
  UnknownCode,
  NotQam,
  Underdetermined,
  ZeroChannel,
  InsufficientData,
  InvalidConfig,
  GuardViolation,
  Parse,
  Io,
  NonFinite,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::AllSubsetsSingular: return "AllSubsetsSingular";
    case ErrorCode::UnsupportedSize: return "UnsupportedSize";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::NotQam: return "NotQam";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::ZeroChannel: return "ZeroChannel";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::GuardViolation: return "GuardViolation";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stbc

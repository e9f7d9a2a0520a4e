#pragma once

#include <stdexcept>
#include <string>

namespace dirlap {

enum class ErrorCode {
  ParseError,
  InvalidWeight,
  IndexError,
  IsolatedVertex,
  NotSymmetric,
  NotSDD,
  NotEulerian,
  NotConnected,
  NotStrictlyRCDD,
  BadCertificate,
  BadParameter,
  BadScaling,
  BadQuery,
  DimError,
  Singular,
  NoConvergence,
  CertificateFailed,
  NoMixing,
  TooLarge,
  Nonterminating,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

  // true for errors caused by invalid inputs (as opposed to a computation
  // that ran but did not reach its target)
  bool is_validation() const {
    switch (code_) {
      case ErrorCode::NoConvergence:
      case ErrorCode::CertificateFailed:
      case ErrorCode::NoMixing:
      case ErrorCode::Nonterminating:
        return false;
      default:
        return true;
    }
  }

private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotSDD: return "NotSDD";
    case ErrorCode::NotEulerian: return "NotEulerian";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::NotStrictlyRCDD: return "NotStrictlyRCDD";
    case ErrorCode::BadCertificate: return "BadCertificate";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::BadScaling: return "BadScaling";
    case ErrorCode::BadQuery: return "BadQuery";
    case ErrorCode::DimError: return "DimError";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CertificateFailed: return "CertificateFailed";
    case ErrorCode::NoMixing: return "NoMixing";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Nonterminating: return "Nonterminating";
  }
  return "Unknown";
}

}  // namespace dirlap

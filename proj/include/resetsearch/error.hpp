#pragma once

#include <stdexcept>
#include <string>

namespace resetsearch {

enum class ErrorCode {
  InvalidParameter,
  AtomAtOrigin,
  OneSided,
  NoClosedForm,
  MissingTail,
  GridTooCoarse,
  DomainTooSmall,
  KindMismatch,
  SingularSystem,
  InadmissiblePhi,
  InfiniteSample,
  NonFinite,
  BoxExhausted,
  ParseError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::AtomAtOrigin: return "AtomAtOrigin";
    case ErrorCode::OneSided: return "OneSided";
    case ErrorCode::NoClosedForm: return "NoClosedForm";
    case ErrorCode::MissingTail: return "MissingTail";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InadmissiblePhi: return "InadmissiblePhi";
    case ErrorCode::InfiniteSample: return "InfiniteSample";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BoxExhausted: return "BoxExhausted";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace resetsearch

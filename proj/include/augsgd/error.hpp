#ifndef AUGSGD_ERROR_HPP
#define AUGSGD_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace augsgd {

enum class ErrorCode {
  // graph-core
  CycleDetected,
  LoopEdge,
  ParallelEdge,
  DanglingActivation,
  InputOutputOverlap,
  UnknownVertexInEdge,
  DuplicateVertex,
  BoundaryMismatch,
  EmptyLayer,
  // propagation
  DimensionMismatch,
  StaleRecord,
  UncheckedActivation,
  // augmentation
  InvalidExponent,
  InvalidAugmentation,
  InfiniteRho,
  NoAdequateRadius,
  // optimizer
  DivergentSquareSum,
  NonDivergentSum,
  NonFiniteGradient,
  BoundednessViolation,
  // harness
  InvalidConfig,
  MalformedCsv,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::LoopEdge: return "LoopEdge";
    case ErrorCode::ParallelEdge: return "ParallelEdge";
    case ErrorCode::DanglingActivation: return "DanglingActivation";
    case ErrorCode::InputOutputOverlap: return "InputOutputOverlap";
    case ErrorCode::UnknownVertexInEdge: return "UnknownVertexInEdge";
    case ErrorCode::DuplicateVertex: return "DuplicateVertex";
    case ErrorCode::BoundaryMismatch: return "BoundaryMismatch";
    case ErrorCode::EmptyLayer: return "EmptyLayer";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::StaleRecord: return "StaleRecord";
    case ErrorCode::UncheckedActivation: return "UncheckedActivation";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::InvalidAugmentation: return "InvalidAugmentation";
    case ErrorCode::InfiniteRho: return "InfiniteRho";
    case ErrorCode::NoAdequateRadius: return "NoAdequateRadius";
    case ErrorCode::DivergentSquareSum: return "DivergentSquareSum";
    case ErrorCode::NonDivergentSum: return "NonDivergentSum";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::BoundednessViolation: return "BoundednessViolation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace augsgd

#endif  // AUGSGD_ERROR_HPP

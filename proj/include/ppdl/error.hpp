#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppdl {

enum class Errc {
  // number_theory
  ZeroOperand,
  BadModulus,
  NotInvertible,
  BadArgument,
  // paillier
  InvalidGenerator,
  InvalidPrimes,
  PlaintextTooLarge,
  InvalidRandomizer,
  KeyMismatch,
  CorruptCiphertext,
  KeyParseError,
  // images and datasets
  ModulusTooSmall,
  EmptyClass,
  BadImage,
  BadRatios,
  ManifestParseError,
  IoError,
  // classifier
  ShapeError,
  NumericalDivergence,
  WeightsParseError,
  // metrics
  LabelMismatch,
  EmptyEvaluation,
  IncomparableReports,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ppdl

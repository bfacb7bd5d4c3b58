#include "ppdl/error.hpp"

namespace ppdl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroOperand: return "ZeroOperand";
    case Errc::BadModulus: return "BadModulus";
    case Errc::NotInvertible: return "NotInvertible";
    case Errc::BadArgument: return "BadArgument";
    case Errc::InvalidGenerator: return "InvalidGenerator";
    case Errc::InvalidPrimes: return "InvalidPrimes";
    case Errc::PlaintextTooLarge: return "PlaintextTooLarge";
    case Errc::InvalidRandomizer: return "InvalidRandomizer";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::CorruptCiphertext: return "CorruptCiphertext";
    case Errc::KeyParseError: return "KeyParseError";
    case Errc::ModulusTooSmall: return "ModulusTooSmall";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::BadImage: return "BadImage";
    case Errc::BadRatios: return "BadRatios";
    case Errc::ManifestParseError: return "ManifestParseError";
    case Errc::IoError: return "IoError";
    case Errc::ShapeError: return "ShapeError";
    case Errc::NumericalDivergence: return "NumericalDivergence";
    case Errc::WeightsParseError: return "WeightsParseError";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::IncomparableReports: return "IncomparableReports";
  }
  return "Unknown";
}

}  // namespace ppdl

#pragma once

#include <stdexcept>
#include <string>

namespace iatforge {

enum class Errc {
  malformed_header,
  out_of_bounds,
  cyclic,
  inconsistent_counts,
  capacity_exhausted,
  version_mismatch,
  index_out_of_range,
  length_mismatch,
  degenerate_input,
  bad_magic,
  unsupported_version,
  corrupt_payload,
  both_empty,
  empty_base,
  empty_vector,
  incompatible_registry,
  invalid_config,
  io_error,
};

const char* errc_name(Errc code);

/// Toolkit-wide exception; code() identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_header:     return "MalformedHeader";
    case Errc::out_of_bounds:        return "OutOfBounds";
    case Errc::cyclic:               return "Cyclic";
    case Errc::inconsistent_counts:  return "InconsistentCounts";
    case Errc::capacity_exhausted:   return "CapacityExhausted";
    case Errc::version_mismatch:     return "VersionMismatch";
    case Errc::index_out_of_range:   return "IndexOutOfRange";
    case Errc::length_mismatch:      return "LengthMismatch";
    case Errc::degenerate_input:     return "DegenerateInput";
    case Errc::bad_magic:            return "BadMagic";
    case Errc::unsupported_version:  return "UnsupportedVersion";
    case Errc::corrupt_payload:      return "CorruptPayload";
    case Errc::both_empty:           return "BothEmpty";
    case Errc::empty_base:           return "EmptyBase";
    case Errc::empty_vector:         return "EmptyVector";
    case Errc::incompatible_registry:return "IncompatibleRegistry";
    case Errc::invalid_config:       return "InvalidConfig";
    case Errc::io_error:             return "IoError";
  }
  return "UnknownError";
}

}  // namespace iatforge

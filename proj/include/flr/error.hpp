#pragma once

#include <stdexcept>
#include <string>

namespace flr {

/// Failure categories raised by the library. The CLI maps each to an exit code.
enum class ErrorKind {
  dimension,
  invariant,
  numerical,
  rank,
  parameter,
  insufficient_data,
  degenerate_spectrum,
  near_degeneracy,
  data_format,
  io,
  usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::invariant: return "invariant error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::rank: return "rank error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::degenerate_spectrum: return "degenerate spectrum";
    case ErrorKind::near_degeneracy: return "near degeneracy";
    case ErrorKind::data_format: return "data format error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::usage: return "usage error";
  }
  return "error";
}

}  // namespace flr

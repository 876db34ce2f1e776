#pragma once

#include <stdexcept>
#include <string>

namespace stride {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonFinite,
  BadMagic,
  DimOverflow,
  Truncated,
  UnsupportedDtype,
  ManifestMismatch,
  Io,
  NotPositiveDefinite,
  Numerical,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::BadMagic: return "bad magic";
    case ErrorKind::DimOverflow: return "dimension overflow";
    case ErrorKind::Truncated: return "truncated payload";
    case ErrorKind::UnsupportedDtype: return "unsupported dtype";
    case ErrorKind::ManifestMismatch: return "manifest mismatch";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::NotPositiveDefinite: return "not positive definite";
    case ErrorKind::Numerical: return "numerical failure";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// File-format and manifest problems, as opposed to argument or numeric errors.
  bool is_data_format() const noexcept {
    switch (kind_) {
      case ErrorKind::BadMagic:
      case ErrorKind::DimOverflow:
      case ErrorKind::Truncated:
      case ErrorKind::UnsupportedDtype:
      case ErrorKind::ManifestMismatch:
      case ErrorKind::Io:
        return true;
      default:
        return false;
    }
  }

  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::NonFinite || kind_ == ErrorKind::NotPositiveDefinite ||
           kind_ == ErrorKind::Numerical;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace stride

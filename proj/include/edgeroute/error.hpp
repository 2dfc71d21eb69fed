#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeroute {

enum class ErrorKind {
  Io,
  Format,
  Dimension,
  Split,
  Lookup,
  Training,
  Sample,
  Degenerate,
  Report,
  Config,
  Usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Split: return "split";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Training: return "training";
    case ErrorKind::Sample: return "sample";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Report: return "report";
    case ErrorKind::Config: return "config";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace edgeroute

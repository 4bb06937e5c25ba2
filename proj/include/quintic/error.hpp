#pragma once

#include <stdexcept>
#include <string>

namespace quintic {

enum class ErrorKind {
  InvalidArgument,
  UnderResolved,
  BlowUp,
  Tolerance,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::UnderResolved: return "under-resolved";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::Tolerance: return "tolerance";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::InvalidArgument, message);
}

}  // namespace quintic

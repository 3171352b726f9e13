#pragma once

#include <stdexcept>
#include <string>

namespace blurmeter {

enum class ErrorKind {
  InvalidArgument,
  InsufficientStructure,  // image has no usable gradients
  InvalidKernel,          // kernel projection found no positive mass
  NonFinite,              // NaN/Inf appeared in an iterate
  Io,
  Parse,
  NoData,                 // nothing left after filtering
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& what,
                    ErrorKind kind = ErrorKind::InvalidArgument) {
  if (!cond) throw Error(kind, what);
}

}  // namespace blurmeter

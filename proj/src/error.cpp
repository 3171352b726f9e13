#include "blurmeter/error.hpp"

namespace blurmeter {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InsufficientStructure: return "insufficient structure";
    case ErrorKind::InvalidKernel: return "invalid kernel";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::NoData: return "no data";
  }
  return "unknown";
}

}  // namespace blurmeter

#include "mcse/error.h"

namespace mcse {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kIo:
      return "io";
    case Errc::kFormat:
      return "format";
    case Errc::kShape:
      return "shape";
    case Errc::kInvalidArgument:
      return "invalid_argument";
    case Errc::kDegenerate:
      return "degenerate";
    case Errc::kNumeric:
      return "numeric";
  }
  return "unknown";
}

}  // namespace mcse

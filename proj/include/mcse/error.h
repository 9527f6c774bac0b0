#ifndef MCSE_ERROR_H_
#define MCSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace mcse {

// Failure categories surfaced to callers and to the CLI error line.
enum class Errc {
  kIo,
  kFormat,
  kShape,
  kInvalidArgument,
  kDegenerate,
  kNumeric,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace mcse

#endif  // MCSE_ERROR_H_

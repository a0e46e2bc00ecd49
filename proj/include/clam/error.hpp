#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clam {

// Every failure the library reports derives from Error. The kind is what the
// CLI maps onto exit codes.
enum class ErrorKind {
  Dimension,
  Numeric,
  Config,
  Label,
  DegenerateBag,
  Format,
  Split,
  Sampler,
  Training,
  Evaluation,
  Metric,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the binary readers. Carries the byte offset at which decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& what)
      : Error(ErrorKind::Format, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Raised by fit() when the loss stops being finite.
class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& what)
      : Error(ErrorKind::Training, "epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace clam

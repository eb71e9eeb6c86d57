#pragma once

#include <stdexcept>
#include <string>

namespace coco {

// Base class for every error raised by the library. The CLI maps these to
// exit status 3 (runtime error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by a pipeline stage; carries the stage name so callers can report
// which step halted.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace coco

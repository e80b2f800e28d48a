#pragma once

#include <stdexcept>
#include <string>

namespace pcd {

/// Base of every error raised by the library. Each failure mode named in the
/// module contracts gets its own subtype so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PCD_DEFINE_ERROR(Name)                  \
  class Name : public Error {                   \
   public:                                      \
    explicit Name(const std::string& what_arg)  \
        : Error(#Name ": " + what_arg) {}       \
  };

// minilang
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error("ParseError at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};
PCD_DEFINE_ERROR(InvalidTarget)

// slicing
PCD_DEFINE_ERROR(CriterionNotExecuted)
PCD_DEFINE_ERROR(NoFailingTests)

// spectra
PCD_DEFINE_ERROR(EmptySuite)
PCD_DEFINE_ERROR(NonFiniteScore)
PCD_DEFINE_ERROR(DatasetFormatError)

// context
PCD_DEFINE_ERROR(NotSymmetric)
PCD_DEFINE_ERROR(NoConvergence)
PCD_DEFINE_ERROR(DegenerateData)
PCD_DEFINE_ERROR(InsufficientContext)

// neuralcore
PCD_DEFINE_ERROR(ShapeMismatch)
PCD_DEFINE_ERROR(NonFiniteGradient)
PCD_DEFINE_ERROR(CheckpointError)

// diffusion
PCD_DEFINE_ERROR(InvalidRange)
PCD_DEFINE_ERROR(TimestepOutOfRange)
PCD_DEFINE_ERROR(EmptyBatch)
PCD_DEFINE_ERROR(InvalidOrder)

// augment
PCD_DEFINE_ERROR(NonFinite)

// dlfl
PCD_DEFINE_ERROR(SingleClassDataset)

// eval
PCD_DEFINE_ERROR(MissingFaults)
PCD_DEFINE_ERROR(ZeroBaseline)

// cli
PCD_DEFINE_ERROR(TemplateError)
PCD_DEFINE_ERROR(IoError)
PCD_DEFINE_ERROR(ConfigError)

#undef PCD_DEFINE_ERROR

}  // namespace pcd

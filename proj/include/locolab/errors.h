#ifndef LOCOLAB_ERRORS_H_
#define LOCOLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace locolab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LOCOLAB_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

LOCOLAB_DEFINE_ERROR(DimMismatch);
LOCOLAB_DEFINE_ERROR(NonFiniteState);
LOCOLAB_DEFINE_ERROR(InvalidRange);
LOCOLAB_DEFINE_ERROR(InvalidDifficulty);
LOCOLAB_DEFINE_ERROR(NonSmoothActivation);
LOCOLAB_DEFINE_ERROR(UnreachableFootTarget);
LOCOLAB_DEFINE_ERROR(SchemaVersionMismatch);
LOCOLAB_DEFINE_ERROR(EmptyBatch);
LOCOLAB_DEFINE_ERROR(EmptyDataset);
LOCOLAB_DEFINE_ERROR(NonFiniteLoss);
LOCOLAB_DEFINE_ERROR(FrozenTeacherViolation);
LOCOLAB_DEFINE_ERROR(BundleMismatch);
LOCOLAB_DEFINE_ERROR(InsufficientSamples);
LOCOLAB_DEFINE_ERROR(ConfigError);
LOCOLAB_DEFINE_ERROR(IoError);

#undef LOCOLAB_DEFINE_ERROR

// Parse failure with the offending line (1-based, 0 if unknown) and field.
class ParseError : public Error {
 public:
  ParseError(int line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field +
              "': " + what),
        line_(line),
        field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace locolab

#endif  // LOCOLAB_ERRORS_H_

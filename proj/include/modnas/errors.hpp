#pragma once

#include <stdexcept>
#include <string>

namespace modnas {

/// Coarse failure class. The CLI maps these onto process exit codes.
enum class ErrorClass { usage = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }
  int exit_code() const noexcept { return static_cast<int>(class_); }

 private:
  ErrorClass class_;
};

#define MODNAS_DEFINE_ERROR(Name, Class)                                         \
  class Name : public Error {                                                    \
   public:                                                                       \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {}   \
  }

MODNAS_DEFINE_ERROR(UsageError, usage);
MODNAS_DEFINE_ERROR(ParameterError, usage);
MODNAS_DEFINE_ERROR(UnsupportedError, usage);
MODNAS_DEFINE_ERROR(ShapeError, data);
MODNAS_DEFINE_ERROR(IndexError, data);
MODNAS_DEFINE_ERROR(StateError, data);
MODNAS_DEFINE_ERROR(CapacityError, data);
MODNAS_DEFINE_ERROR(RecipeError, data);
MODNAS_DEFINE_ERROR(BenchmarkError, data);
MODNAS_DEFINE_ERROR(SchemaError, data);
MODNAS_DEFINE_ERROR(IoError, data);
MODNAS_DEFINE_ERROR(NumericError, numeric);
MODNAS_DEFINE_ERROR(EvaluationError, numeric);
MODNAS_DEFINE_ERROR(TrainingError, numeric);
MODNAS_DEFINE_ERROR(PretrainingError, numeric);

#undef MODNAS_DEFINE_ERROR

/// Throws ShapeError unless `actual == expected`.
void check_size(std::size_t actual, std::size_t expected, const char* what);

/// Emits a warning line on stderr unless warnings are silenced.
void log_warning(const std::string& message);
void set_warnings_enabled(bool enabled);
bool warnings_enabled();

}  // namespace modnas

#pragma once

#include <stdexcept>
#include <string>

namespace rbc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RBC_DECLARE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

RBC_DECLARE_ERROR(ConfigError);
RBC_DECLARE_ERROR(SymmetryError);
RBC_DECLARE_ERROR(SingularModeError);
RBC_DECLARE_ERROR(ParameterError);
RBC_DECLARE_ERROR(StepSizeError);
RBC_DECLARE_ERROR(DivergenceError);
RBC_DECLARE_ERROR(StateError);
RBC_DECLARE_ERROR(InputError);
RBC_DECLARE_ERROR(LocalizationError);
RBC_DECLARE_ERROR(FitError);
RBC_DECLARE_ERROR(DomainError);
RBC_DECLARE_ERROR(IoError);

#undef RBC_DECLARE_ERROR

// Numerical failure inside a multi-stage solver; stage() names the stage.
class NumericalError : public Error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Raised by run() when a step fails; carries the simulation time.
class RunError : public Error {
 public:
  RunError(double t, const std::string& what)
      : Error("t=" + std::to_string(t) + ": " + what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

}  // namespace rbc

#pragma once

#include <stdexcept>
#include <string>

namespace qglat {

// Recoverable numerical conditions. Grid drivers catch these to drop a
// lambda sample and retry from the reserve grid; anything escaping to the
// CLI maps to exit code 4.
enum class ErrorCode {
  IntegrationFailure,   // ODE step-size underflow
  WindowExhausted,      // eigenvalue scan window too small
  NearEigenvalue,       // characteristic function below eps_den
  InadmissibleLambda,   // lambda rejected by the admissibility guards
  IllConditioned,       // linear system condition estimate above kappa_max
  IncompleteFrontier,   // propagation touched an absent coefficient
  UninformativeLambda,  // all corner-relation terms below eps_den
  MaskMismatch,         // sample families on different retained grids
  ResampleRequest,      // too few lambda samples survived a k-step
  InsufficientGrid,     // oracle cannot serve the requested grid
};

const char* error_code_name(ErrorCode code);

class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed configs, files, or arguments. CLI maps these to exit code 3.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qglat

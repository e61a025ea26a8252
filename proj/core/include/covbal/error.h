#ifndef COVBAL_ERROR_H_
#define COVBAL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace covbal {

// Machine-readable failure categories shared by every module. The CLI
// reports ErrorCodeName() in its JSON error payload.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidNetwork,
  kOverflow,
  kInfeasible,
  kInfeasibleAssignment,
  kMissingPotentials,
  kEmptyTreatment,
  kCellOverflow,
  kKappaOutOfRange,
  kNotTwoCovariates,
  kQTooLarge,
  kWrongSelectionSize,
  kTooLarge,
  kInfeasibleSizes,
  kMissingColumn,
  kDuplicateId,
  kBadGroupValue,
  kParseError,
  kUnknownId,
  kObjectiveMismatch,
  kCertificateFailure,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace covbal

#endif  // COVBAL_ERROR_H_

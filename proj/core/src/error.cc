#include "covbal/error.h"

namespace covbal {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidNetwork: return "InvalidNetwork";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kInfeasibleAssignment: return "InfeasibleAssignment";
    case ErrorCode::kMissingPotentials: return "MissingPotentials";
    case ErrorCode::kEmptyTreatment: return "EmptyTreatment";
    case ErrorCode::kCellOverflow: return "CellOverflow";
    case ErrorCode::kKappaOutOfRange: return "KappaOutOfRange";
    case ErrorCode::kNotTwoCovariates: return "NotTwoCovariates";
    case ErrorCode::kQTooLarge: return "QTooLarge";
    case ErrorCode::kWrongSelectionSize: return "WrongSelectionSize";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInfeasibleSizes: return "InfeasibleSizes";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kBadGroupValue: return "BadGroupValue";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kObjectiveMismatch: return "ObjectiveMismatch";
    case ErrorCode::kCertificateFailure: return "CertificateFailure";
  }
  return "Unknown";
}

}  // namespace covbal

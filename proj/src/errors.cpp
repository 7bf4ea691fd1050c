#include "dbevo/errors.hpp"

namespace dbevo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedStatement: return "UnsupportedStatement";
    case ErrorCode::UnresolvedInCheckedContext: return "UnresolvedInCheckedContext";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::NotSourceBearing: return "NotSourceBearing";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::IllegalOnReferencedEntity: return "IllegalOnReferencedEntity";
    case ErrorCode::ContradictsModel: return "ContradictsModel";
    case ErrorCode::NoSqlForm: return "NoSqlForm";
    case ErrorCode::NoSchemeForOperator: return "NoSchemeForOperator";
    case ErrorCode::InvalidOperator: return "InvalidOperator";
    case ErrorCode::AlreadyDecided: return "AlreadyDecided";
    case ErrorCode::UnknownRecommendation: return "UnknownRecommendation";
    case ErrorCode::UnknownReference: return "UnknownReference";
    case ErrorCode::UnresolvedHumanDecision: return "UnresolvedHumanDecision";
    case ErrorCode::PendingDecisions: return "PendingDecisions";
    case ErrorCode::MissingDefinition: return "MissingDefinition";
    case ErrorCode::ContradictoryOperators: return "ContradictoryOperators";
    case ErrorCode::CorruptSessionFile: return "CorruptSessionFile";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownOperator: return "UnknownOperator";
  }
  return "Unknown";
}

}  // namespace dbevo

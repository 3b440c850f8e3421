#include "bpekit/errors.hpp"

namespace bpekit {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCorpusEmpty: return "CorpusEmpty";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kDuplicateSpecial: return "DuplicateSpecial";
    case ErrorCode::kModelInvalid: return "ModelInvalid";
    case ErrorCode::kIdOutOfRange: return "IdOutOfRange";
    case ErrorCode::kInvalidConversation: return "InvalidConversation";
    case ErrorCode::kGrammarError: return "GrammarError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kSourceExhausted: return "SourceExhausted";
    case ErrorCode::kInvalidRank: return "InvalidRank";
    case ErrorCode::kEmptyEncoding: return "EmptyEncoding";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDivideByZero: return "DivideByZero";
  }
  return "Error";
}

}  // namespace bpekit

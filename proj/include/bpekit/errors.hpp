#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bpekit {

enum class ErrorCode {
  kCorpusEmpty,
  kConfigInvalid,
  kDuplicateSpecial,
  kModelInvalid,
  kIdOutOfRange,
  kInvalidConversation,
  kGrammarError,
  kIoError,
  kSchemaError,
  kSourceExhausted,
  kInvalidRank,
  kEmptyEncoding,
  kEmptyCorpus,
  kDivideByZero,
};

std::string_view error_name(ErrorCode code);

// Every domain failure raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class GrammarError : public Error {
 public:
  GrammarError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::kGrammarError,
              "at byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace bpekit

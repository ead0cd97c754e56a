#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tuplex {

enum class ErrorCode {
  kMalformedJson,
  kSpanOutOfBounds,
  kSpanTextMismatch,
  kMissingSlot,
  kDuplicateId,
  kEmptySentence,
  kTooFewSentences,
  kDegenerateConfig,
  kInconsistentDim,
  kCountMismatch,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kNonFinite,
  kInvalidArgument,
  kDimensionMismatch,
  kAlignmentFailure,
  kEmptyBatch,
  kMissingEmbeddings,
  kNoPositivePairs,
  kBadCheckpoint,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception. The sentence id
// is filled in whenever the failure can be attributed to one sentence.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string sentence_id = {});

  ErrorCode code() const { return code_; }
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  ErrorCode code_;
  std::string sentence_id_;
};

}  // namespace tuplex

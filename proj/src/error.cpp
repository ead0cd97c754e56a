#include "tuplex/error.hpp"

namespace tuplex {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson: return "malformed_json";
    case ErrorCode::kSpanOutOfBounds: return "span_out_of_bounds";
    case ErrorCode::kSpanTextMismatch: return "span_text_mismatch";
    case ErrorCode::kMissingSlot: return "missing_slot";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kEmptySentence: return "empty_sentence";
    case ErrorCode::kTooFewSentences: return "too_few_sentences";
    case ErrorCode::kDegenerateConfig: return "degenerate_config";
    case ErrorCode::kInconsistentDim: return "inconsistent_dim";
    case ErrorCode::kCountMismatch: return "count_mismatch";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kAlignmentFailure: return "alignment_failure";
    case ErrorCode::kEmptyBatch: return "empty_batch";
    case ErrorCode::kMissingEmbeddings: return "missing_embeddings";
    case ErrorCode::kNoPositivePairs: return "no_positive_pairs";
    case ErrorCode::kBadCheckpoint: return "bad_checkpoint";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string sentence_id)
    : std::runtime_error(sentence_id.empty() ? message : message + " (sentence " + sentence_id + ")"),
      code_(code),
      sentence_id_(std::move(sentence_id)) {}

}  // namespace tuplex

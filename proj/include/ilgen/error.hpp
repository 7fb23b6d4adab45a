#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ilgen {

enum class Errc {
  zero_vector,
  non_finite,
  dimension_mismatch,
  length_mismatch,
  duplicate_id,
  unknown_id,
  invalid_judgment,
  empty_input,
  empty_set,
  query_set_mismatch,
  no_positive,
  no_negative,
  empty_negatives,
  index_out_of_range,
  too_few_classes,
  invalid_plan,
  decode_error,
  too_small,
  missing_image,
  non_finite_loss,
  client_error,
  too_few_categories,
  empty_category,
  degenerate_mask,
  pipeline_aborted,
  format_error,
  io_error,
  config_error,
  invalid_argument,
};

constexpr std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::zero_vector: return "ZeroVector";
    case Errc::non_finite: return "NonFinite";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::unknown_id: return "UnknownId";
    case Errc::invalid_judgment: return "InvalidJudgment";
    case Errc::empty_input: return "EmptyInput";
    case Errc::empty_set: return "EmptySet";
    case Errc::query_set_mismatch: return "QuerySetMismatch";
    case Errc::no_positive: return "NoPositive";
    case Errc::no_negative: return "NoNegative";
    case Errc::empty_negatives: return "EmptyNegatives";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::too_few_classes: return "TooFewClasses";
    case Errc::invalid_plan: return "InvalidPlan";
    case Errc::decode_error: return "DecodeError";
    case Errc::too_small: return "TooSmall";
    case Errc::missing_image: return "MissingImage";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::client_error: return "ClientError";
    case Errc::too_few_categories: return "TooFewCategories";
    case Errc::empty_category: return "EmptyCategory";
    case Errc::degenerate_mask: return "DegenerateMask";
    case Errc::pipeline_aborted: return "PipelineAborted";
    case Errc::format_error: return "FormatError";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by generation clients. `stage()` names the pipeline stage that failed.
class ClientError : public Error {
 public:
  ClientError(std::string stage, const std::string& message)
      : Error(Errc::client_error, "[" + stage + "] " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

inline void require(bool cond, Errc code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace ilgen

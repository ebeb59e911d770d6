#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sknn {

enum class ErrorCode {
  // model
  UnlabelledElement,
  EmptyDataset,
  UnknownVertex,
  FormatVersionMismatch,
  CorruptModel,
  // metrics
  MissingLabels,
  SchemaMismatch,
  NumericFeatureUnsupported,
  InvalidMetricSpec,
  // decoder
  NoFeasiblePath,
  UnclassifiableSequence,
  InstanceTooLarge,
  FingerprintMismatch,
  MissingVertexClass,
  // induction
  ClusterCountExceedsElements,
  EmptySubgraphSet,
  InvalidClusteringConfig,
  // data
  MalformedLine,
  EmptyCorpus,
  MalformedRecord,
  NonFiniteCoordinate,
  DegenerateSplit,
  WindowAlreadyApplied,
  Io,
  // harness
  ShapeMismatch,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The pipeline stage is filled in by
/// the experiment runner when an error crosses a stage boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace sknn

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sknn/data.hpp"
#include "sknn/decoder.hpp"
#include "sknn/induction.hpp"
#include "sknn/metrics.hpp"
#include "sknn/model_io.hpp"

namespace sknn {

// --- evaluation -------------------------------------------------------------

struct LabelStats {
  std::string label;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision = 0.0;  // 0 when nothing was predicted
  double recall = 0.0;     // 0 when the label never occurs in gold
};

struct Report {
  // Items are tokens for labelling and whole sequences for classification.
  std::size_t total = 0;
  std::size_t correct = 0;
  double token_accuracy = 0.0;  // correct / total
  // Labelling: fraction of sequences labelled entirely right.
  // Classification: fraction of sequences given the right class.
  std::optional<double> sequence_accuracy;
  // CoNLL chunk F1, present when every label is O or B-/I- prefixed.
  std::optional<double> chunk_f1;
  std::vector<LabelStats> per_label;  // sorted by label name
  // confusion[g][p]: items with gold names[g] predicted as names[p].
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> confusion;

  double wall_seconds = 0.0;
  std::uint64_t ndist_evaluations = 0;
  // |seq| * |reachable vertices| summed over decoded sequences.
  std::uint64_t ndist_expected = 0;
  std::size_t infeasible = 0;  // sequences with no start-to-end path
};

/// Throws ShapeMismatch unless pred and gold have the same shape.
Report evaluate_labelling(const std::vector<std::vector<std::string>>& pred,
                          const std::vector<std::vector<std::string>>& gold);
Report evaluate_classification(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

/// conlleval-style chunk F1 over IOB tags.
double chunk_f1(const std::vector<std::vector<std::string>>& pred,
                const std::vector<std::vector<std::string>>& gold);

// --- experiments ------------------------------------------------------------

enum class Task : std::uint8_t { Labelling, Classification };
enum class DataFormat : std::uint8_t { Conll, Points, SyntheticText, SyntheticTrajectories };

std::optional<DataFormat> parse_format(std::string_view s) noexcept;
std::string_view to_string(DataFormat f) noexcept;

struct ExperimentConfig {
  Task task = Task::Labelling;
  DataFormat format = DataFormat::Conll;
  std::filesystem::path train;
  std::filesystem::path test;         // empty: split `train` instead
  std::size_t train_sequences = 0;    // leading sequences kept; 0 keeps all
  std::size_t test_sequences = 0;
  double test_fraction = 0.2;
  std::vector<MetricSpec> metrics{MetricSpec{}};
  std::vector<std::uint32_t> windows{0};
  NeighbourQuery query;
  std::uint64_t seed = 0;
  std::uint32_t resample = 32;        // trajectories only; 0 disables
  std::optional<ClusteringConfig> clustering;
  TrajectorySpec trajectories;        // SyntheticTrajectories
  std::size_t test_per_class = 5;     // SyntheticTrajectories
  TaggedTextSpec text;                // SyntheticText
  std::filesystem::path manifest;     // empty: no manifest file
  std::size_t threads = 0;            // 0: SKNN_THREADS, else hardware

  void validate() const;
  /// Canonical JSON of every field that affects results (not the manifest
  /// path or thread count); its SHA-256 is the config digest.
  std::string canonical() const;
};

/// Reads the TOML-like format described in docs/config.md. Relative data
/// paths are resolved against `base_dir`. Throws InvalidConfig.
ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct GridCell {
  std::string metric;
  std::uint32_t window = 0;
  std::string model_digest;
  Report report;
};

struct ExperimentResult {
  std::string config_digest;
  std::string train_digest;
  std::string test_digest;
  std::vector<GridCell> cells;  // metric-major, in config order
  /// JSON lines: one "run" record, then one "cell" record per grid cell.
  /// Timing is left out so reruns are byte-identical.
  std::vector<std::string> manifest;
};

/// ingest -> window -> fit metric -> build or induce -> decode -> evaluate,
/// once per (metric, window) cell. Errors carry the stage they came from.
/// Writes cfg.manifest when set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Metric-by-window accuracy table followed by per-cell details.
void print_report(std::ostream& out, const ExperimentResult& result);
void print_report(std::ostream& out, const Report& report);

// --- shared pipeline pieces (used by the command-line tool) ------------------

/// Worker count from SKNN_THREADS, else the hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Labels every sequence with a pool of `threads` workers. Infeasible
/// sequences are predicted as "<none>" throughout.
struct LabelledOutput {
  std::vector<std::vector<std::string>> labels;
  std::uint64_t ndist_evaluations = 0;
  std::uint64_t ndist_expected = 0;
  std::size_t infeasible = 0;
};
LabelledOutput label_all(const Decoder& decoder, const Dataset& data, std::size_t threads);

struct ClassifiedOutput {
  std::vector<std::string> classes;  // "<none>" for unclassifiable sequences
  std::uint64_t ndist_evaluations = 0;
  std::uint64_t ndist_expected = 0;
  std::size_t infeasible = 0;
};
ClassifiedOutput classify_all(const Decoder& decoder, const Dataset& data, std::size_t threads);

/// Applies the preprocessing a bundle was trained with (resampling, window).
Dataset prepare_input(const ModelBundle& bundle, const Dataset& raw);

}  // namespace sknn

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sknn/bytes.hpp"
#include "sknn/types.hpp"

namespace sknn {

enum class Kernel : std::uint8_t { NormalizedEuclidean, Overlap, WeightedOverlap, Mvdm };
enum class Weighting : std::uint8_t { InformationGain, InformationGainRatio };

/// Per-feature value comparison used by the additive kernels. Overrides let
/// one feature be compared by MVDM while the rest use Overlap (or the reverse).
enum class FeatureTerm : std::uint8_t { Overlap, Mvdm };

struct MetricSpec {
  Kernel kernel = Kernel::Overlap;
  std::optional<Weighting> weighting;  // present iff kernel == WeightedOverlap
  double smoothing = 0.0;              // add-alpha for MVDM probability tables
  std::map<std::string, FeatureTerm> overrides;

  /// Accepts "overlap", "mvdm", "normalized-euclidean" (or "euclidean"),
  /// "weighted-overlap:ig", "weighted-overlap:igr" (also "ig", "igr").
  static MetricSpec parse(std::string_view text);
  std::string name() const;
  void validate() const;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

struct NeighbourQuery {
  std::uint32_t k = 1;
  // Weights the r-th nearest distance by 1/r instead of uniformly.
  bool rank_weighting = false;
};

/// How a feature is turned into something the kernels can compare.
enum class Encoding : std::uint8_t {
  Exact,   // interned value code; -1 for values unseen in training
  Binned,  // quantile-bin index of a numeric value
  ZScore,  // (x - mean) / stddev, 0 for padded window slots
};

/// What a feature contributes to the accumulated distance.
enum class Term : std::uint8_t {
  Mismatch,     // coefficient * [a != b]
  Mvdm,         // coefficient * sum_l |P(l|a) - P(l|b)|
  SquaredDiff,  // coefficient * (za - zb)^2
};

struct FeatureState {
  Encoding encoding = Encoding::Exact;
  Term term = Term::Mismatch;
  double coefficient = 1.0;
  Vocabulary vocab;               // Exact
  std::vector<double> bin_edges;  // Binned
  double mean = 0.0;              // ZScore
  double stddev = 1.0;            // ZScore
  std::optional<std::size_t> pad_flag;
  // Mvdm: one row of `stride` label probabilities per code.
  std::vector<double> probs;

  std::size_t code_count() const;
  friend bool operator==(const FeatureState&, const FeatureState&) = default;
};

/// Element in kernel-ready form: one code per discrete feature, one z-score
/// per numeric feature (unused slots are zero).
struct EncodedElement {
  std::vector<std::int32_t> codes;
  std::vector<double> reals;
};

/// A distance function together with everything it learned from training
/// data. Immutable after fitting; all members are safe to call concurrently.
///
/// Distances (F = arity, w = per-feature weights, 1 unless IG/IGR-weighted):
///   overlap / weighted overlap:  sum_f w_f [a_f != b_f] / sum_f w_f
///   MVDM:                        sum_f sum_l |P(l|a_f) - P(l|b_f)| / (2F)
///   normalized Euclidean:        sqrt(sum_f (z(a_f) - z(b_f))^2 / F)
/// Discrete features inside the Euclidean kernel contribute [a_f != b_f].
class FittedMetric {
 public:
  FittedMetric() = default;

  const MetricSpec& spec() const { return spec_; }
  const Schema& schema() const { return schema_; }
  std::size_t label_count() const { return labels_.size(); }
  const Vocabulary& labels() const { return labels_; }
  /// Padded length of one MVDM probability row.
  std::size_t stride() const { return stride_; }
  std::span<const FeatureState> features() const { return features_; }
  /// IG/IGR weights as fitted (before normalization); empty for other kernels.
  std::span<const double> weights() const { return weights_; }
  bool takes_sqrt() const { return spec_.kernel == Kernel::NormalizedEuclidean; }
  const std::string& fingerprint() const { return fingerprint_; }

  EncodedElement encode(const Element& e) const;
  /// Probability row for a code of an Mvdm feature; uniform for code -1.
  std::span<const double> mvdm_row(std::size_t feature, std::int32_t code) const;
  std::int32_t code_of(std::size_t feature, const FeatureValue& v) const;
  double zscore(std::size_t feature, const Element& e) const;

  /// Scalar reference distance between two raw elements.
  double distance(const Element& a, const Element& b) const;

  void serialize(ByteWriter& w) const;
  static FittedMetric deserialize(ByteReader& r);

  friend FittedMetric fit_metric(const Dataset& dataset, const MetricSpec& spec);
  friend bool operator==(const FittedMetric&, const FittedMetric&) = default;

 private:
  void finalize();
  void serialize_state(ByteWriter& w) const;

  MetricSpec spec_;
  Schema schema_;
  Vocabulary labels_;
  std::size_t stride_ = 0;
  std::vector<FeatureState> features_;
  std::vector<double> weights_;
  std::vector<double> uniform_;
  std::string fingerprint_;
};

/// Learns everything `distance` needs from `dataset` (labels are read only for
/// MVDM and weighted overlap).
FittedMetric fit_metric(const Dataset& dataset, const MetricSpec& spec);

/// Throws SchemaMismatch if either element does not conform.
double distance(const FittedMetric& metric, const Element& a, const Element& b);

/// H(L) - sum_v P(v) H(L | v), in bits. Discrete features only.
double information_gain(const Dataset& dataset, std::size_t feature);
/// IG divided by the feature's own entropy; 0 for constant features.
double information_gain_ratio(const Dataset& dataset, std::size_t feature);

double mvdm_value_distance(const FittedMetric& metric, std::size_t feature, const FeatureValue& a,
                           const FeatureValue& b);

/// Mean (or 1/rank-weighted mean) of the min(k, n) smallest values; the
/// values are reordered in place. Empty input yields +infinity.
double aggregate_nearest(std::span<double> distances, const NeighbourQuery& q);

/// Aggregated distance from `probe` to its k nearest `exemplars`, computed
/// by scanning with the scalar reference distance.
double n_dist(const Element& probe, std::span<const Element> exemplars, const NeighbourQuery& q,
              const FittedMetric& metric);

/// Entropy in bits of a discrete distribution given as counts.
double entropy_bits(std::span<const double> counts);

/// Upper bin edges for `bins` quantile bins; duplicates removed.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins);
std::int32_t bin_index(std::span<const double> edges, double x);

}  // namespace sknn

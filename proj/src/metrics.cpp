#include "sknn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sknn/error.hpp"

namespace sknn {
namespace {

constexpr std::size_t kWeightBins = 10;
constexpr std::uint8_t kNoWeighting = 0xff;

std::size_t round_up4(std::size_t n) { return std::max<std::size_t>(4, (n + 3) / 4 * 4); }

bool wants_mvdm(const MetricSpec& spec, const FeatureDef& f) {
  auto it = spec.overrides.find(f.name);
  if (it != spec.overrides.end()) return it->second == FeatureTerm::Mvdm;
  return spec.kernel == Kernel::Mvdm;
}

bool needs_labels(const MetricSpec& spec) {
  if (spec.kernel == Kernel::Mvdm || spec.kernel == Kernel::WeightedOverlap) return true;
  return std::any_of(spec.overrides.begin(), spec.overrides.end(),
                     [](const auto& kv) { return kv.second == FeatureTerm::Mvdm; });
}

void require_labels(const Dataset& d) {
  if (!d.fully_labelled()) raise(ErrorCode::MissingLabels, "every element needs a label");
}

struct Gain {
  double ig = 0.0;
  double split = 0.0;
};

// IG and split information of a discrete column against element labels.
Gain gain_of(std::span<const std::int32_t> codes, std::span<const std::uint32_t> labels,
             std::size_t value_count, std::size_t label_count) {
  std::vector<double> joint(value_count * label_count, 0.0);
  std::vector<double> per_value(value_count, 0.0);
  std::vector<double> per_label(label_count, 0.0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    joint[codes[i] * label_count + labels[i]] += 1.0;
    per_value[codes[i]] += 1.0;
    per_label[labels[i]] += 1.0;
  }
  const double n = static_cast<double>(codes.size());
  const double h_label = entropy_bits(per_label);
  double h_cond = 0.0;
  for (std::size_t v = 0; v < value_count; ++v) {
    if (per_value[v] == 0.0) continue;
    h_cond += per_value[v] / n *
              entropy_bits(std::span<const double>(joint).subspan(v * label_count, label_count));
  }
  Gain g;
  g.ig = std::clamp(h_label - h_cond, 0.0, h_label);
  g.split = entropy_bits(per_value);
  return g;
}

struct Column {
  std::vector<std::int32_t> codes;
  std::size_t value_count = 0;
};

// Discrete view of one feature over the whole dataset, used for weights.
Column discrete_column(const Dataset& d, std::size_t f) {
  Column col;
  const auto& def = d.schema.features[f];
  if (is_numeric(def.kind)) {
    std::vector<double> values;
    for (const auto& s : d.sequences)
      for (const auto& e : s.elements) values.push_back(value_number(e.values[f]));
    auto edges = quantile_edges(values, kWeightBins);
    for (double x : values) col.codes.push_back(bin_index(edges, x));
    col.value_count = edges.size() + 1;
  } else {
    Vocabulary vocab;
    for (const auto& s : d.sequences)
      for (const auto& e : s.elements)
        col.codes.push_back(static_cast<std::int32_t>(vocab.intern(value_text(e.values[f]))));
    col.value_count = vocab.size();
  }
  return col;
}

std::vector<std::uint32_t> label_column(const Dataset& d) {
  std::vector<std::uint32_t> out;
  for (const auto& s : d.sequences)
    for (const auto& e : s.elements) out.push_back(e.label->value);
  return out;
}

Gain feature_gain(const Dataset& d, std::size_t f) {
  require_labels(d);
  auto col = discrete_column(d, f);
  auto labels = label_column(d);
  return gain_of(col.codes, labels, col.value_count, d.labels.size());
}

void check_feature(const Dataset& d, std::size_t f) {
  if (f >= d.schema.arity()) raise(ErrorCode::SchemaMismatch, "feature index out of range");
  if (is_numeric(d.schema.features[f].kind)) {
    raise(ErrorCode::NumericFeatureUnsupported, "feature '" + d.schema.features[f].name + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

MetricSpec MetricSpec::parse(std::string_view text) {
  MetricSpec s;
  if (text == "overlap") {
    s.kernel = Kernel::Overlap;
  } else if (text == "mvdm") {
    s.kernel = Kernel::Mvdm;
  } else if (text == "normalized-euclidean" || text == "euclidean") {
    s.kernel = Kernel::NormalizedEuclidean;
  } else if (text == "weighted-overlap:ig" || text == "ig") {
    s.kernel = Kernel::WeightedOverlap;
    s.weighting = Weighting::InformationGain;
  } else if (text == "weighted-overlap:igr" || text == "igr") {
    s.kernel = Kernel::WeightedOverlap;
    s.weighting = Weighting::InformationGainRatio;
  } else {
    raise(ErrorCode::InvalidMetricSpec, "unknown metric '" + std::string(text) + "'");
  }
  return s;
}

std::string MetricSpec::name() const {
  switch (kernel) {
    case Kernel::Overlap: return "overlap";
    case Kernel::Mvdm: return "mvdm";
    case Kernel::NormalizedEuclidean: return "normalized-euclidean";
    case Kernel::WeightedOverlap:
      return weighting == Weighting::InformationGainRatio ? "weighted-overlap:igr"
                                                          : "weighted-overlap:ig";
  }
  return "?";
}

void MetricSpec::validate() const {
  if (weighting.has_value() != (kernel == Kernel::WeightedOverlap)) {
    raise(ErrorCode::InvalidMetricSpec, "weighting is required for, and only for, weighted-overlap");
  }
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    raise(ErrorCode::InvalidMetricSpec, "smoothing must be a finite non-negative number");
  }
  if (kernel == Kernel::NormalizedEuclidean && !overrides.empty()) {
    raise(ErrorCode::InvalidMetricSpec, "per-feature overrides apply to additive kernels only");
  }
}

std::size_t FeatureState::code_count() const {
  return encoding == Encoding::Binned ? bin_edges.size() + 1 : vocab.size();
}

// ---------------------------------------------------------------------------

FittedMetric fit_metric(const Dataset& dataset, const MetricSpec& spec) {
  if (dataset.sequences.empty() || dataset.element_count() == 0) {
    raise(ErrorCode::EmptyDataset, "cannot fit a metric without data");
  }
  spec.validate();
  const auto& schema = dataset.schema;
  for (const auto& [name, term] : spec.overrides) {
    if (!schema.find(name)) raise(ErrorCode::InvalidMetricSpec, "override for unknown feature '" + name + "'");
  }
  if (needs_labels(spec)) require_labels(dataset);

  FittedMetric m;
  m.spec_ = spec;
  m.schema_ = schema;
  if (needs_labels(spec)) m.labels_ = dataset.labels;
  m.stride_ = round_up4(m.labels_.size());

  const std::size_t arity = schema.arity();
  m.features_.resize(arity);

  // Weights first: coefficients of the additive kernels depend on their sum.
  std::vector<double> w(arity, 1.0);
  if (spec.kernel == Kernel::WeightedOverlap) {
    auto labels = label_column(dataset);
    for (std::size_t f = 0; f < arity; ++f) {
      auto col = discrete_column(dataset, f);
      auto g = gain_of(col.codes, labels, col.value_count, dataset.labels.size());
      w[f] = *spec.weighting == Weighting::InformationGain ? g.ig
             : g.split > 0.0                                ? std::min(1.0, g.ig / g.split)
                                                            : 0.0;
    }
    // An all-zero weight vector would make every pair of elements identical.
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
      std::fill(w.begin(), w.end(), 1.0);
    }
    m.weights_ = w;
  }
  double weight_sum = 0.0;
  for (double x : w) weight_sum += x;

  for (std::size_t f = 0; f < arity; ++f) {
    const auto& def = schema.features[f];
    auto& st = m.features_[f];
    st.pad_flag = def.pad_flag;
    if (spec.kernel == Kernel::NormalizedEuclidean) {
      st.encoding = is_numeric(def.kind) ? Encoding::ZScore : Encoding::Exact;
      st.term = is_numeric(def.kind) ? Term::SquaredDiff : Term::Mismatch;
      st.coefficient = 1.0;
    } else if (wants_mvdm(spec, def)) {
      st.encoding = is_numeric(def.kind) ? Encoding::Binned : Encoding::Exact;
      st.term = Term::Mvdm;
      st.coefficient = w[f] / (2.0 * weight_sum);
    } else {
      st.encoding = Encoding::Exact;
      st.term = Term::Mismatch;
      st.coefficient = w[f] / weight_sum;
    }

    std::vector<double> numbers;
    for (const auto& s : dataset.sequences) {
      for (const auto& e : s.elements) {
        const auto& v = e.values[f];
        if (st.encoding == Encoding::Exact) {
          st.vocab.intern(value_text(v));
        } else if (st.pad_flag && std::get<bool>(e.values[*st.pad_flag])) {
          continue;
        } else {
          numbers.push_back(value_number(v));
        }
      }
    }
    if (st.encoding == Encoding::Binned) {
      st.bin_edges = quantile_edges(numbers, kWeightBins);
    } else if (st.encoding == Encoding::ZScore && !numbers.empty()) {
      double sum = 0.0;
      for (double x : numbers) sum += x;
      st.mean = sum / static_cast<double>(numbers.size());
      double ss = 0.0;
      for (double x : numbers) ss += (x - st.mean) * (x - st.mean);
      double sd = std::sqrt(ss / static_cast<double>(numbers.size()));
      st.stddev = sd > 0.0 ? sd : 1.0;
    }

    if (st.term == Term::Mvdm) {
      const std::size_t rows = st.code_count();
      const std::size_t nl = m.labels_.size();
      std::vector<double> counts(rows * nl, 0.0);
      std::vector<double> totals(rows, 0.0);
      for (const auto& s : dataset.sequences) {
        for (const auto& e : s.elements) {
          auto code = m.code_of(f, e.values[f]);
          counts[code * nl + e.label->value] += 1.0;
          totals[code] += 1.0;
        }
      }
      st.probs.assign(rows * m.stride_, 0.0);
      const double alpha = spec.smoothing;
      for (std::size_t r = 0; r < rows; ++r) {
        const double denom = totals[r] + alpha * static_cast<double>(nl);
        for (std::size_t l = 0; l < nl; ++l) {
          st.probs[r * m.stride_ + l] =
              denom > 0.0 ? (counts[r * nl + l] + alpha) / denom : 1.0 / static_cast<double>(nl);
        }
      }
    }
  }
  m.finalize();
  return m;
}

void FittedMetric::finalize() {
  uniform_.assign(stride_, 0.0);
  for (std::size_t l = 0; l < labels_.size(); ++l) uniform_[l] = 1.0 / static_cast<double>(labels_.size());
  ByteWriter w;
  serialize_state(w);
  fingerprint_ = sha256_hex(w.bytes());
}

std::int32_t FittedMetric::code_of(std::size_t f, const FeatureValue& v) const {
  const auto& st = features_[f];
  if (st.encoding == Encoding::Binned) return bin_index(st.bin_edges, value_number(v));
  auto id = st.vocab.find(value_text(v));
  return id ? static_cast<std::int32_t>(*id) : -1;
}

double FittedMetric::zscore(std::size_t f, const Element& e) const {
  const auto& st = features_[f];
  if (st.pad_flag && std::get<bool>(e.values[*st.pad_flag])) return 0.0;
  return (value_number(e.values[f]) - st.mean) / st.stddev;
}

std::span<const double> FittedMetric::mvdm_row(std::size_t f, std::int32_t code) const {
  const auto& st = features_[f];
  if (code < 0 || st.probs.empty()) return uniform_;
  return std::span<const double>(st.probs).subspan(static_cast<std::size_t>(code) * stride_, stride_);
}

EncodedElement FittedMetric::encode(const Element& e) const {
  check_conforms(schema_, e);
  EncodedElement out;
  out.codes.assign(features_.size(), -1);
  out.reals.assign(features_.size(), 0.0);
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].encoding == Encoding::ZScore) {
      out.reals[f] = zscore(f, e);
    } else {
      out.codes[f] = code_of(f, e.values[f]);
    }
  }
  return out;
}

double FittedMetric::distance(const Element& a, const Element& b) const {
  check_conforms(schema_, a);
  check_conforms(schema_, b);
  double acc = 0.0;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const auto& st = features_[f];
    switch (st.term) {
      case Term::Mismatch:
        acc += st.coefficient * (value_text(a.values[f]) != value_text(b.values[f]) ? 1.0 : 0.0);
        break;
      case Term::Mvdm: {
        auto ra = mvdm_row(f, code_of(f, a.values[f]));
        auto rb = mvdm_row(f, code_of(f, b.values[f]));
        double delta = 0.0;
        for (std::size_t l = 0; l < stride_; ++l) delta += std::fabs(ra[l] - rb[l]);
        acc += st.coefficient * delta;
        break;
      }
      case Term::SquaredDiff: {
        double d = zscore(f, a) - zscore(f, b);
        acc += st.coefficient * (d * d);
        break;
      }
    }
  }
  if (takes_sqrt()) acc = std::sqrt(acc * (1.0 / static_cast<double>(features_.size())));
  return acc;
}

double distance(const FittedMetric& metric, const Element& a, const Element& b) {
  return metric.distance(a, b);
}

void FittedMetric::serialize_state(ByteWriter& w) const {
  w.u8(static_cast<std::uint8_t>(spec_.kernel));
  w.u8(spec_.weighting ? static_cast<std::uint8_t>(*spec_.weighting) : kNoWeighting);
  w.f64(spec_.smoothing);
  w.u64(spec_.overrides.size());
  for (const auto& [name, term] : spec_.overrides) {
    w.str(name);
    w.u8(static_cast<std::uint8_t>(term));
  }
  w.schema(schema_);
  w.u64(labels_.size());
  for (const auto& n : labels_.names()) w.str(n);
  w.u64(stride_);
  w.u64(features_.size());
  for (const auto& st : features_) {
    w.u8(static_cast<std::uint8_t>(st.encoding));
    w.u8(static_cast<std::uint8_t>(st.term));
    w.f64(st.coefficient);
    w.u64(st.vocab.size());
    for (const auto& n : st.vocab.names()) w.str(n);
    w.u64(st.bin_edges.size());
    for (double e : st.bin_edges) w.f64(e);
    w.f64(st.mean);
    w.f64(st.stddev);
    w.u8(st.pad_flag ? 1 : 0);
    if (st.pad_flag) w.u32(static_cast<std::uint32_t>(*st.pad_flag));
    w.u64(st.probs.size());
    for (double p : st.probs) w.f64(p);
  }
  w.u64(weights_.size());
  for (double x : weights_) w.f64(x);
}

void FittedMetric::serialize(ByteWriter& w) const {
  serialize_state(w);
  w.str(fingerprint_);
}

FittedMetric FittedMetric::deserialize(ByteReader& r) {
  FittedMetric m;
  auto kernel = r.u8();
  if (kernel > static_cast<std::uint8_t>(Kernel::Mvdm)) r.fail("bad kernel tag");
  m.spec_.kernel = static_cast<Kernel>(kernel);
  auto weighting = r.u8();
  if (weighting != kNoWeighting) {
    if (weighting > 1) r.fail("bad weighting tag");
    m.spec_.weighting = static_cast<Weighting>(weighting);
  }
  m.spec_.smoothing = r.f64();
  auto n_over = r.count(5);
  for (std::size_t i = 0; i < n_over; ++i) {
    auto name = r.str();
    auto term = r.u8();
    if (term > 1) r.fail("bad override tag");
    m.spec_.overrides[name] = static_cast<FeatureTerm>(term);
  }
  try {
    m.spec_.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  m.schema_ = r.schema();
  auto nl = r.count(4);
  for (std::size_t i = 0; i < nl; ++i) m.labels_.intern(r.str());
  m.stride_ = r.u64();
  if (m.stride_ != round_up4(m.labels_.size())) r.fail("bad MVDM stride");
  auto nf = r.count(8);
  if (nf != m.schema_.arity()) r.fail("feature state count does not match schema");
  m.features_.resize(nf);
  for (auto& st : m.features_) {
    auto enc = r.u8();
    auto term = r.u8();
    if (enc > 2 || term > 2) r.fail("bad feature state tag");
    st.encoding = static_cast<Encoding>(enc);
    st.term = static_cast<Term>(term);
    st.coefficient = r.f64();
    auto nv = r.count(4);
    for (std::size_t i = 0; i < nv; ++i) st.vocab.intern(r.str());
    auto ne = r.count(8);
    for (std::size_t i = 0; i < ne; ++i) st.bin_edges.push_back(r.f64());
    st.mean = r.f64();
    st.stddev = r.f64();
    if (r.u8() == 1) st.pad_flag = r.u32();
    auto np = r.count(8);
    st.probs.reserve(np);
    for (std::size_t i = 0; i < np; ++i) st.probs.push_back(r.f64());
    if (st.term == Term::Mvdm && np != st.code_count() * m.stride_) r.fail("bad MVDM table size");
    if (st.term != Term::Mvdm && np != 0) r.fail("unexpected MVDM table");
  }
  auto nw = r.count(8);
  for (std::size_t i = 0; i < nw; ++i) m.weights_.push_back(r.f64());
  auto stored = r.str();
  m.finalize();
  if (stored != m.fingerprint_) r.fail("metric fingerprint does not match its state");
  return m;
}

// ---------------------------------------------------------------------------

double entropy_bits(std::span<const double> counts) {
  double n = 0.0;
  for (double c : counts) n += c;
  if (n <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      double p = c / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double information_gain(const Dataset& dataset, std::size_t feature) {
  check_feature(dataset, feature);
  return feature_gain(dataset, feature).ig;
}

double information_gain_ratio(const Dataset& dataset, std::size_t feature) {
  check_feature(dataset, feature);
  auto g = feature_gain(dataset, feature);
  if (g.split <= 0.0) return 0.0;
  return std::min(1.0, g.ig / g.split);
}

double mvdm_value_distance(const FittedMetric& metric, std::size_t feature, const FeatureValue& a,
                           const FeatureValue& b) {
  if (feature >= metric.features().size() || metric.features()[feature].term != Term::Mvdm) {
    raise(ErrorCode::InvalidMetricSpec, "feature has no MVDM table");
  }
  auto ra = metric.mvdm_row(feature, metric.code_of(feature, a));
  auto rb = metric.mvdm_row(feature, metric.code_of(feature, b));
  double delta = 0.0;
  for (std::size_t l = 0; l < ra.size(); ++l) delta += std::fabs(ra[l] - rb[l]);
  return delta;
}

double aggregate_nearest(std::span<double> d, const NeighbourQuery& q) {
  if (d.empty()) return std::numeric_limits<double>::infinity();
  const std::size_t k = std::min<std::size_t>(std::max<std::uint32_t>(q.k, 1), d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    double w = q.rank_weighting ? 1.0 / static_cast<double>(r + 1) : 1.0;
    num += w * d[r];
    den += w;
  }
  return num / den;
}

double n_dist(const Element& probe, std::span<const Element> exemplars, const NeighbourQuery& q,
              const FittedMetric& metric) {
  std::vector<double> d;
  d.reserve(exemplars.size());
  for (const auto& e : exemplars) d.push_back(metric.distance(probe, e));
  return aggregate_nearest(d, q);
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  std::vector<double> edges;
  if (values.empty() || bins < 2) return edges;
  std::sort(values.begin(), values.end());
  for (std::size_t q = 1; q < bins; ++q) {
    double e = values[q * values.size() / bins];
    if (e > values.front() && (edges.empty() || e > edges.back())) edges.push_back(e);
  }
  return edges;
}

std::int32_t bin_index(std::span<const double> edges, double x) {
  return static_cast<std::int32_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

}  // namespace sknn

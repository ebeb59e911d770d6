#pragma once

// Random instance builders and independent oracles shared by the unit tests
// and the acceptance runner. Oracles here recompute results from raw counts
// and never call into the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sknn/decoder.hpp"
#include "sknn/metrics.hpp"
#include "sknn/model.hpp"
#include "sknn/types.hpp"

namespace sknn::testing {

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

/// (sym: symbol over {a,b,c,d}, word: text, x: real, n: integer, flag: boolean)
inline Schema mixed_schema() {
  Schema s;
  s.features.push_back({"sym", FeatureKind::Symbol, {"a", "b", "c", "d"}, std::nullopt});
  s.features.push_back({"word", FeatureKind::Text, {}, std::nullopt});
  s.features.push_back({"x", FeatureKind::Real, {}, std::nullopt});
  s.features.push_back({"n", FeatureKind::Integer, {}, std::nullopt});
  s.features.push_back({"flag", FeatureKind::Boolean, {}, std::nullopt});
  return s;
}

/// Only discrete features, for kernels where exact equality should dominate.
inline Schema discrete_schema() {
  Schema s;
  s.features.push_back({"sym", FeatureKind::Symbol, {"a", "b", "c", "d"}, std::nullopt});
  s.features.push_back({"word", FeatureKind::Text, {}, std::nullopt});
  s.features.push_back({"flag", FeatureKind::Boolean, {}, std::nullopt});
  return s;
}

/// Values drawn from small pools so repeats and ties happen; `novel` adds
/// values that a fitted metric has never seen.
inline FeatureValue random_value(Rng& rng, const FeatureDef& def, bool novel = false) {
  switch (def.kind) {
    case FeatureKind::Symbol: {
      std::vector<std::string> alpha(def.alphabet.begin(), def.alphabet.end());
      return Symbol{alpha[uniform(rng, 0, alpha.size() - 1)]};
    }
    case FeatureKind::Text:
      return std::string(novel && coin(rng, 0.3) ? "zz" : "w") + std::to_string(uniform(rng, 0, 4));
    case FeatureKind::Real:
      return std::round(std::normal_distribution<double>(0.0, 3.0)(rng) * 4.0) / 4.0 +
             (novel ? 100.0 * static_cast<double>(coin(rng, 0.2)) : 0.0);
    case FeatureKind::Integer:
      return static_cast<std::int64_t>(uniform(rng, 0, 6));
    case FeatureKind::Boolean:
      return coin(rng);
  }
  return std::string("w0");
}

inline Element random_element(Rng& rng, const Schema& schema, bool novel = false) {
  Element e;
  for (const auto& f : schema.features) e.values.push_back(random_value(rng, f, novel));
  return e;
}

/// Labelled dataset with `labels` labels, each emitting values skewed by label
/// so MVDM/IG have signal to find.
inline Dataset random_dataset(Rng& rng, const Schema& schema, std::size_t labels, std::size_t sequences,
                              std::size_t max_len) {
  Dataset d;
  d.schema = schema;
  for (std::size_t l = 0; l < labels; ++l) d.labels.intern("L" + std::to_string(l));
  for (std::size_t s = 0; s < sequences; ++s) {
    Sequence seq;
    const std::size_t len = uniform(rng, 1, max_len);
    for (std::size_t i = 0; i < len; ++i) {
      Element e = random_element(rng, schema);
      const auto l = static_cast<std::uint32_t>(uniform(rng, 0, labels - 1));
      if (coin(rng, 0.6) && schema.features[0].kind == FeatureKind::Symbol) {
        std::vector<std::string> alpha(schema.features[0].alphabet.begin(), schema.features[0].alphabet.end());
        e.values[0] = Symbol{alpha[l % alpha.size()]};
      }
      e.label = LabelId{l};
      seq.elements.push_back(std::move(e));
    }
    d.sequences.push_back(std::move(seq));
  }
  return d;
}

inline MetricSpec random_spec(Rng& rng) {
  switch (uniform(rng, 0, 4)) {
    case 0: return MetricSpec::parse("overlap");
    case 1: return MetricSpec::parse("mvdm");
    case 2: return MetricSpec::parse("normalized-euclidean");
    case 3: return MetricSpec::parse("weighted-overlap:ig");
    default: return MetricSpec::parse("weighted-overlap:igr");
  }
}

/// Small decoding instance: up to `max_labels` label vertices with random
/// edges, 1..max_exemplars exemplars per vertex, and one probe sequence.
struct DecodeInstance {
  Dataset train;  // one sequence of exemplars per label
  Model model;
  FittedMetric metric;
  NeighbourQuery query;
  Sequence probe;
};

inline DecodeInstance random_decode_instance(Rng& rng, std::size_t max_labels = 5, std::size_t max_len = 6,
                                             std::size_t max_exemplars = 20) {
  DecodeInstance inst;
  const Schema schema = coin(rng) ? mixed_schema() : discrete_schema();
  const std::size_t labels = uniform(rng, 1, max_labels);
  inst.train.schema = schema;
  for (std::size_t l = 0; l < labels; ++l) {
    inst.train.labels.intern("L" + std::to_string(l));
    Sequence seq;
    const std::size_t n = uniform(rng, 1, max_exemplars);
    for (std::size_t i = 0; i < n; ++i) {
      Element e = random_element(rng, schema);
      e.label = LabelId{static_cast<std::uint32_t>(l)};
      seq.elements.push_back(std::move(e));
    }
    inst.train.sequences.push_back(std::move(seq));
  }
  inst.metric = fit_metric(inst.train, random_spec(rng));
  inst.query.k = static_cast<std::uint32_t>(uniform(rng, 1, 3));

  inst.model = Model(schema);
  std::vector<VertexId> vs;
  for (std::size_t l = 0; l < labels; ++l) vs.push_back(inst.model.vertex_for("L" + std::to_string(l)));
  for (std::size_t l = 0; l < labels; ++l) {
    for (const auto& e : inst.train.sequences[l].elements) inst.model.add_exemplar(vs[l], e);
  }
  for (auto u : vs) {
    if (coin(rng, 0.6)) inst.model.add_edge(Model::kInit, u);
    if (coin(rng, 0.6)) inst.model.add_edge(u, Model::kEnd);
    for (auto v : vs) {
      if (coin(rng, 0.5)) inst.model.add_edge(u, v);
    }
  }
  if (inst.model.successors(Model::kInit).empty()) inst.model.add_edge(Model::kInit, vs[uniform(rng, 0, labels - 1)]);
  if (inst.model.predecessors(Model::kEnd).empty()) inst.model.add_edge(vs[uniform(rng, 0, labels - 1)], Model::kEnd);
  inst.model.set_metric_fingerprint(inst.metric.fingerprint());

  const std::size_t len = uniform(rng, 1, max_len);
  for (std::size_t i = 0; i < len; ++i) inst.probe.elements.push_back(random_element(rng, schema, true));
  return inst;
}

// --- oracles ----------------------------------------------------------------

/// Mean of the min(k, n) smallest distances, recomputed from pairwise
/// reference distances.
inline double oracle_ndist(const FittedMetric& m, const Element& probe, std::span<const Element> ex,
                           std::uint32_t k) {
  if (ex.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> d;
  for (const auto& e : ex) d.push_back(m.distance(probe, e));
  std::sort(d.begin(), d.end());
  const std::size_t take = std::min<std::size_t>(k, d.size());
  double s = 0.0;
  for (std::size_t i = 0; i < take; ++i) s += d[i];
  return s / static_cast<double>(take);
}

struct EnumeratedPaths {
  double best = std::numeric_limits<double>::infinity();
  std::vector<VertexId> best_path;
  std::size_t ties = 0;  // paths within 1e-9 of best
  std::size_t feasible = 0;
};

/// Enumerates every vertex sequence of the right length, keeping those that
/// respect the edges, and scores each from scratch.
inline EnumeratedPaths enumerate_paths(const Model& model, const FittedMetric& metric, const Sequence& seq,
                                       std::uint32_t k) {
  std::vector<VertexId> labels;
  for (std::uint32_t v = 2; v < model.vertex_count(); ++v) labels.push_back(VertexId{v});
  const std::size_t n = seq.size();
  std::vector<std::vector<double>> emit(labels.size(), std::vector<double>(n));
  for (std::size_t j = 0; j < labels.size(); ++j)
    for (std::size_t i = 0; i < n; ++i)
      emit[j][i] = oracle_ndist(metric, seq.elements[i], model.exemplars(labels[j]), k);

  EnumeratedPaths out;
  std::vector<double> costs;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    bool ok = model.has_edge(Model::kInit, labels[idx[0]]) && model.has_edge(labels[idx[n - 1]], Model::kEnd);
    for (std::size_t i = 1; ok && i < n; ++i) ok = model.has_edge(labels[idx[i - 1]], labels[idx[i]]);
    if (ok) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += emit[idx[i]][i];
      if (std::isfinite(c)) {
        ++out.feasible;
        costs.push_back(c);
        if (c < out.best) {
          out.best = c;
          out.best_path.clear();
          for (auto x : idx) out.best_path.push_back(labels[x]);
        }
      }
    }
    std::size_t p = 0;
    while (p < n && ++idx[p] == labels.size()) idx[p++] = 0;
    if (p == n) break;
  }
  for (double c : costs) out.ties += std::fabs(c - out.best) <= 1e-9 ? 1 : 0;
  return out;
}

/// Bigram oracle: label-name edges implied by a labelled dataset, with
/// "<init>"/"<end>" for the boundaries.
inline std::set<std::pair<std::string, std::string>> bigram_edges(const Dataset& d) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& s : d.sequences) {
    std::string prev = "<init>";
    for (const auto& e : s.elements) {
      std::string cur = d.labels.name(e.label->value);
      out.emplace(prev, cur);
      prev = cur;
    }
    out.emplace(prev, "<end>");
  }
  return out;
}

inline std::set<std::pair<std::string, std::string>> model_edges(const Model& m) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [u, v] : m.edges()) out.emplace(m.vertex_name(u), m.vertex_name(v));
  return out;
}

/// Entropy in bits from a count map, written out long-hand.
template <class Map>
double oracle_entropy(const Map& counts) {
  double n = 0.0;
  for (const auto& kv : counts) n += kv.second;
  double h = 0.0;
  for (const auto& kv : counts) {
    if (kv.second > 0) h -= kv.second / n * std::log2(kv.second / n);
  }
  return h;
}

/// IG and IGR of one discrete feature from raw (value, label) pairs.
inline std::pair<double, double> oracle_gain(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::map<std::string, double> labels, values;
  std::map<std::string, std::map<std::string, double>> joint;
  for (const auto& [v, l] : rows) {
    labels[l] += 1;
    values[v] += 1;
    joint[v][l] += 1;
  }
  const double n = static_cast<double>(rows.size());
  double cond = 0.0;
  for (const auto& [v, c] : values) cond += c / n * oracle_entropy(joint[v]);
  const double ig = oracle_entropy(labels) - cond;
  const double split = oracle_entropy(values);
  return {ig, split > 0 ? ig / split : 0.0};
}

}  // namespace sknn::testing

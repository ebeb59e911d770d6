#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sknn/metrics.hpp"
#include "sknn/model.hpp"

namespace sknn {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Everything a `.sknn` file carries: the graph, and optionally the fitted
/// metric and neighbour settings it was trained with.
struct ModelBundle {
  Model model;
  std::optional<FittedMetric> metric;
  NeighbourQuery query;
  // Trajectory models: points per sequence after arc-length resampling
  // (0 when inputs are used as read).
  std::uint32_t resample = 0;

  friend bool operator==(const ModelBundle& a, const ModelBundle& b) {
    return a.model == b.model && a.metric == b.metric && a.query.k == b.query.k &&
           a.query.rank_weighting == b.query.rank_weighting && a.resample == b.resample;
  }
};

/// Binary layout (little-endian): "SKNN", u16 version, then sections
/// `u8 id, u64 length, payload` in the fixed order schema(1), labels(2),
/// classes(3), vertices(4), edges(5), exemplars(6), fingerprint(7),
/// metric(8), settings(9). docs/model-format.md spells out each payload.
std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle);
/// Throws FormatVersionMismatch or CorruptModel.
ModelBundle deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelBundle& bundle, std::ostream& out);
ModelBundle load_model(std::istream& in);
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

/// SHA-256 of the serialized bundle.
std::string model_digest(const ModelBundle& bundle);

}  // namespace sknn

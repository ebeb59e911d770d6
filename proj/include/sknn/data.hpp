#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sknn/types.hpp"

namespace sknn {

// --- corpora ----------------------------------------------------------------

struct ConllOptions {
  // When false, two-column lines (token, POS) are accepted as unlabelled.
  bool require_labels = true;
};

/// Chunking corpus: `token POS chunk` per line, blank line between sentences.
/// Schema (word: text, pos: symbol); the chunk tag is the element label.
Dataset read_conll(std::istream& in, const ConllOptions& opts = {});
/// Reads `path`, gunzipping when it ends in ".gz".
Dataset read_conll_file(const std::filesystem::path& path, const ConllOptions& opts = {});
/// Writes the two base columns, the gold label when present, and one extra
/// column per entry of `extra` (indexed [sequence][element]).
void write_conll(std::ostream& out, const Dataset& d,
                 const std::vector<std::vector<std::vector<std::string>>>& extra = {});

/// Pen trajectories: `classId: x1 y1 x2 y2 ...` per line. Schema (x, y: real),
/// sequence class from the leading id, elements unlabelled.
Dataset read_points(std::istream& in);
Dataset read_points_file(const std::filesystem::path& path);
void write_points(std::ostream& out, const Dataset& d);

/// Whole file as text, gunzipping ".gz".
std::string read_text_file(const std::filesystem::path& path);

/// First `count` sequences (all of them if fewer).
Dataset take_sequences(const Dataset& d, std::size_t count);

// --- transforms -------------------------------------------------------------

/// Appends, for every base feature, its values at offsets -before..-1 and
/// +1..+after. Out-of-range text/symbol slots hold the pad token; numeric and
/// boolean slots hold 0/false followed by a boolean "<name>#pad" companion.
/// Applying a window twice raises WindowAlreadyApplied.
Dataset apply_context_window(const Dataset& d, const WindowConfig& cfg);

/// Resamples every (x, y) trajectory to `points` points equally spaced along
/// its arc length.
Dataset resample_trajectories(const Dataset& d, std::size_t points);

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Seeded partition at sequence granularity; each side keeps file order.
/// The test share is rounded and clamped so both sides are nonempty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const SplitConfig& cfg);

// --- synthetic fixtures -----------------------------------------------------

struct TrajectorySpec {
  std::size_t classes = 3;
  std::size_t per_class = 10;
  double noise_sigma = 0.0;  // absolute; the template box is [0, scale]^2
  std::uint64_t seed = 0;
  std::size_t waypoints = 4;
  std::size_t dwell = 6;  // points emitted around each waypoint
  double scale = 100.0;
};

struct TaggedTextSpec {
  std::size_t labels = 4;
  std::size_t vocab = 5;       // words owned by each label
  std::size_t per_label = 10;  // sequences generated per label
  std::uint64_t seed = 0;
  // Probability that a token is drawn from a pool shared by all labels, so
  // only its neighbours disambiguate it.
  double ambiguity = 0.0;
};

struct SyntheticData {
  Dataset data;
  // Trajectories: per class, the waypoint coordinates.
  std::vector<std::vector<std::pair<double, double>>> waypoints;
  // Trajectories: per sequence, the waypoint index of every element.
  std::vector<std::vector<std::size_t>> element_state;
  // Per class (trajectories) or single entry (text): transition template over
  // state ids, with -1 standing for the start and end vertices.
  std::vector<std::set<std::pair<int, int>>> transitions;
};

/// Classes are named "c0", "c1", ...; every class follows its own waypoint
/// template with isotropic Gaussian noise.
SyntheticData generate_trajectories(const TrajectorySpec& spec);
/// Labels "L0", "L1", ...; label l owns words "w<l>_<i>". Label sequences
/// follow a fixed sparse transition template.
SyntheticData generate_tagged_text(const TaggedTextSpec& spec);

}  // namespace sknn

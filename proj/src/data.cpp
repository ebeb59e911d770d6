#include "sknn/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sknn/error.hpp"

namespace sknn {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::string gunzip_file(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) raise(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  bool failed = n < 0;
  gzclose(f);
  if (failed) raise(ErrorCode::Io, "corrupt gzip stream in '" + path.string() + "'");
  return out;
}

Schema conll_schema() {
  Schema s;
  s.features.push_back({"word", FeatureKind::Text, {}, std::nullopt});
  s.features.push_back({"pos", FeatureKind::Symbol, {}, std::nullopt});
  return s;
}

FeatureValue pad_value(const FeatureDef& def, const WindowConfig& cfg) {
  switch (def.kind) {
    case FeatureKind::Text: return cfg.pad_token;
    case FeatureKind::Symbol: return Symbol{cfg.pad_token};
    case FeatureKind::Real: return 0.0;
    case FeatureKind::Integer: return std::int64_t{0};
    case FeatureKind::Boolean: return false;
  }
  return cfg.pad_token;
}

bool needs_pad_flag(FeatureKind k) {
  return k == FeatureKind::Real || k == FeatureKind::Integer || k == FeatureKind::Boolean;
}

std::string offset_name(const std::string& base, int offset) {
  return base + "@" + (offset > 0 ? "+" : "") + std::to_string(offset);
}

Dataset empty_like(const Dataset& d) {
  Dataset out;
  out.schema = d.schema;
  out.labels = d.labels;
  out.classes = d.classes;
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  if (path.extension() == ".gz") return gunzip_file(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset read_conll(std::istream& in, const ConllOptions& opts) {
  Dataset d;
  d.schema = conll_schema();
  auto& pos_alphabet = d.schema.features[1].alphabet;
  Sequence current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.elements.empty()) d.sequences.push_back(std::move(current));
    current = Sequence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    auto cols = split_ws(line);
    const bool ok = cols.size() == 3 || (!opts.require_labels && cols.size() == 2);
    if (!ok) {
      raise(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": expected " +
                                          (opts.require_labels ? "3" : "2 or 3") + " columns, got " +
                                          std::to_string(cols.size()));
    }
    Element e;
    e.values.emplace_back(std::string(cols[0]));
    e.values.emplace_back(Symbol{std::string(cols[1])});
    pos_alphabet.emplace(cols[1]);
    if (cols.size() == 3) e.label = LabelId{d.labels.intern(cols[2])};
    current.elements.push_back(std::move(e));
  }
  flush();
  if (d.sequences.empty()) raise(ErrorCode::EmptyCorpus, "no sentences found");
  return d;
}

Dataset read_conll_file(const std::filesystem::path& path, const ConllOptions& opts) {
  std::istringstream in(read_text_file(path));
  return read_conll(in, opts);
}

void write_conll(std::ostream& out, const Dataset& d,
                 const std::vector<std::vector<std::vector<std::string>>>& extra) {
  for (std::size_t s = 0; s < d.sequences.size(); ++s) {
    const auto& seq = d.sequences[s];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto& e = seq.elements[i];
      out << value_text(e.values.at(0)) << ' ' << value_text(e.values.at(1));
      if (e.label) out << ' ' << d.labels.name(e.label->value);
      for (const auto& col : extra) out << ' ' << col.at(s).at(i);
      out << '\n';
    }
    out << '\n';
  }
}

Dataset read_points(std::istream& in) {
  Dataset d;
  d.schema.features.push_back({"x", FeatureKind::Real, {}, std::nullopt});
  d.schema.features.push_back({"y", FeatureKind::Real, {}, std::nullopt});
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const std::string where = "line " + std::to_string(line_no);
    auto colon = line.find(':');
    if (colon == std::string::npos) raise(ErrorCode::MalformedRecord, where + ": missing ':'");
    auto id = split_ws(std::string_view(line).substr(0, colon));
    if (id.size() != 1) raise(ErrorCode::MalformedRecord, where + ": bad class id");
    auto coords = split_ws(std::string_view(line).substr(colon + 1));
    if (coords.empty() || coords.size() % 2 != 0) {
      raise(ErrorCode::MalformedRecord, where + ": expected an even, nonzero coordinate count");
    }
    Sequence seq;
    seq.cls = ClassId{d.classes.intern(id[0])};
    std::vector<double> xs;
    for (auto tok : coords) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        raise(ErrorCode::MalformedRecord, where + ": bad number '" + std::string(tok) + "'");
      }
      if (!std::isfinite(v)) raise(ErrorCode::NonFiniteCoordinate, where);
      xs.push_back(v);
    }
    for (std::size_t i = 0; i < xs.size(); i += 2) {
      seq.elements.push_back(Element{{xs[i], xs[i + 1]}, std::nullopt});
    }
    d.sequences.push_back(std::move(seq));
  }
  if (d.sequences.empty()) raise(ErrorCode::EmptyCorpus, "no trajectories found");
  return d;
}

Dataset read_points_file(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_points(in);
}

void write_points(std::ostream& out, const Dataset& d) {
  for (const auto& seq : d.sequences) {
    out << (seq.cls ? d.classes.name(seq.cls->value) : "?") << ':';
    for (const auto& e : seq.elements) {
      for (const auto& v : e.values) out << ' ' << value_text(v);
    }
    out << '\n';
  }
}

Dataset take_sequences(const Dataset& d, std::size_t count) {
  Dataset out = empty_like(d);
  auto n = std::min(count, d.sequences.size());
  out.sequences.assign(d.sequences.begin(), d.sequences.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset apply_context_window(const Dataset& d, const WindowConfig& cfg) {
  if (d.schema.window) raise(ErrorCode::WindowAlreadyApplied, "dataset is already windowed");
  Dataset out = empty_like(d);
  const std::size_t base = d.schema.arity();
  std::vector<int> offsets;
  for (int o = -static_cast<int>(cfg.before); o < 0; ++o) offsets.push_back(o);
  for (int o = 1; o <= static_cast<int>(cfg.after); ++o) offsets.push_back(o);

  Schema& s = out.schema;
  s.window = cfg;
  struct Slot {
    std::size_t feature;
    int offset;
    bool flagged;
  };
  std::vector<Slot> slots;
  for (std::size_t f = 0; f < base; ++f) {
    const auto& def = d.schema.features[f];
    for (int o : offsets) {
      FeatureDef slot{offset_name(def.name, o), def.kind, def.alphabet, std::nullopt};
      if (def.kind == FeatureKind::Symbol) slot.alphabet.insert(cfg.pad_token);
      const bool flagged = needs_pad_flag(def.kind);
      if (flagged) slot.pad_flag = s.features.size() + 1;
      s.features.push_back(std::move(slot));
      if (flagged) {
        s.features.push_back({offset_name(def.name, o) + "#pad", FeatureKind::Boolean, {}, std::nullopt});
      }
      slots.push_back({f, o, flagged});
    }
  }
  s.validate();

  out.sequences.reserve(d.sequences.size());
  for (const auto& seq : d.sequences) {
    Sequence w;
    w.cls = seq.cls;
    const auto n = static_cast<std::ptrdiff_t>(seq.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      Element e = seq.elements[static_cast<std::size_t>(i)];
      e.values.reserve(s.arity());
      for (const auto& slot : slots) {
        std::ptrdiff_t j = i + slot.offset;
        const bool outside = j < 0 || j >= n;
        const auto& def = d.schema.features[slot.feature];
        e.values.push_back(outside ? pad_value(def, cfg)
                                   : seq.elements[static_cast<std::size_t>(j)].values[slot.feature]);
        if (slot.flagged) e.values.emplace_back(outside);
      }
      w.elements.push_back(std::move(e));
    }
    out.sequences.push_back(std::move(w));
  }
  return out;
}

Dataset resample_trajectories(const Dataset& d, std::size_t points) {
  if (points < 1) raise(ErrorCode::InvalidConfig, "resample point count must be positive");
  if (d.schema.arity() != 2 || d.schema.features[0].kind != FeatureKind::Real ||
      d.schema.features[1].kind != FeatureKind::Real) {
    raise(ErrorCode::SchemaMismatch, "resampling needs an (x, y) real schema");
  }
  Dataset out = empty_like(d);
  for (const auto& seq : d.sequences) {
    const std::size_t n = seq.size();
    std::vector<double> xs(n), ys(n), cum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = std::get<double>(seq.elements[i].values[0]);
      ys[i] = std::get<double>(seq.elements[i].values[1]);
      if (i > 0) cum[i] = cum[i - 1] + std::hypot(xs[i] - xs[i - 1], ys[i] - ys[i - 1]);
    }
    Sequence r;
    r.cls = seq.cls;
    const double total = cum.back();
    std::size_t seg = 0;
    for (std::size_t p = 0; p < points; ++p) {
      double x = xs[0], y = ys[0];
      if (total > 0.0) {
        double target = points == 1 ? 0.0 : total * static_cast<double>(p) / static_cast<double>(points - 1);
        while (seg + 2 < n && cum[seg + 1] < target) ++seg;
        const std::size_t next = std::min(seg + 1, n - 1);
        const double len = cum[next] - cum[seg];
        const double t = len > 0.0 ? std::clamp((target - cum[seg]) / len, 0.0, 1.0) : 0.0;
        x = xs[seg] + t * (xs[next] - xs[seg]);
        y = ys[seg] + t * (ys[next] - ys[seg]);
      }
      r.elements.push_back(Element{{x, y}, std::nullopt});
    }
    out.sequences.push_back(std::move(r));
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const SplitConfig& cfg) {
  const std::size_t n = d.sequences.size();
  if (n < 2) raise(ErrorCode::DegenerateSplit, "need at least two sequences to split");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    raise(ErrorCode::DegenerateSplit, "test fraction must lie in (0, 1)");
  }
  auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  Dataset train = empty_like(d);
  Dataset test = empty_like(d);
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test : train).sequences.push_back(d.sequences[i]);
  return {std::move(train), std::move(test)};
}

SyntheticData generate_trajectories(const TrajectorySpec& spec) {
  if (spec.classes < 1 || spec.per_class < 1 || spec.waypoints < 1 || spec.dwell < 1 ||
      !(spec.noise_sigma >= 0.0) || !(spec.scale > 0.0)) {
    raise(ErrorCode::InvalidConfig, "trajectory generator parameters must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coord(0.0, spec.scale);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticData out;
  Dataset& d = out.data;
  d.schema.features.push_back({"x", FeatureKind::Real, {}, std::nullopt});
  d.schema.features.push_back({"y", FeatureKind::Real, {}, std::nullopt});

  // Waypoints inside one template stay at least 30% of the box apart so the
  // states are separable at moderate noise.
  const double min_gap = 0.3 * spec.scale;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    d.classes.intern("c" + std::to_string(c));
    std::vector<std::pair<double, double>> wp;
    while (wp.size() < spec.waypoints) {
      std::pair<double, double> p{coord(rng), coord(rng)};
      bool far = std::all_of(wp.begin(), wp.end(), [&](const auto& q) {
        return std::hypot(p.first - q.first, p.second - q.second) >= min_gap;
      });
      if (far || wp.size() >= 8) wp.push_back(p);
    }
    std::set<std::pair<int, int>> tr;
    tr.emplace(-1, 0);
    for (std::size_t w = 0; w < spec.waypoints; ++w) {
      if (spec.dwell > 1) tr.emplace(static_cast<int>(w), static_cast<int>(w));
      if (w + 1 < spec.waypoints) tr.emplace(static_cast<int>(w), static_cast<int>(w + 1));
    }
    tr.emplace(static_cast<int>(spec.waypoints - 1), -1);
    out.waypoints.push_back(std::move(wp));
    out.transitions.push_back(std::move(tr));
  }

  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      Sequence seq;
      seq.cls = ClassId{static_cast<std::uint32_t>(c)};
      std::vector<std::size_t> states;
      for (std::size_t w = 0; w < spec.waypoints; ++w) {
        for (std::size_t t = 0; t < spec.dwell; ++t) {
          const auto& [cx, cy] = out.waypoints[c][w];
          double x = cx + spec.noise_sigma * noise(rng);
          double y = cy + spec.noise_sigma * noise(rng);
          seq.elements.push_back(Element{{x, y}, std::nullopt});
          states.push_back(w);
        }
      }
      d.sequences.push_back(std::move(seq));
      out.element_state.push_back(std::move(states));
    }
  }
  return out;
}

SyntheticData generate_tagged_text(const TaggedTextSpec& spec) {
  if (spec.labels < 1 || spec.vocab < 1 || spec.per_label < 1 || spec.ambiguity < 0.0 ||
      spec.ambiguity > 1.0) {
    raise(ErrorCode::InvalidConfig, "tagged-text generator parameters out of range");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_label(0, spec.labels - 1);
  std::uniform_int_distribution<std::size_t> pick_word(0, spec.vocab - 1);
  std::uniform_int_distribution<std::size_t> pick_length(3, 10);
  std::bernoulli_distribution stay(0.3);
  std::bernoulli_distribution shared(spec.ambiguity);

  SyntheticData out;
  Dataset& d = out.data;
  d.schema.features.push_back({"word", FeatureKind::Text, {}, std::nullopt});
  d.schema.features.push_back({"pos", FeatureKind::Symbol, {}, std::nullopt});
  for (std::size_t l = 0; l < spec.labels; ++l) {
    d.labels.intern("L" + std::to_string(l));
    d.schema.features[1].alphabet.insert("P" + std::to_string(l));
  }
  d.schema.features[1].alphabet.insert("P*");

  std::set<std::pair<int, int>> tr;
  for (std::size_t s = 0; s < spec.labels * spec.per_label; ++s) {
    Sequence seq;
    std::size_t label = pick_label(rng);
    tr.emplace(-1, static_cast<int>(label));
    const std::size_t length = pick_length(rng);
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) {
        std::size_t next = stay(rng) ? label : (label + 1) % spec.labels;
        tr.emplace(static_cast<int>(label), static_cast<int>(next));
        label = next;
      }
      const bool ambiguous = shared(rng);
      std::size_t w = pick_word(rng);
      std::string word = ambiguous ? "u_" + std::to_string(w)
                                   : "w" + std::to_string(label) + "_" + std::to_string(w);
      std::string pos = ambiguous ? "P*" : "P" + std::to_string(label);
      seq.elements.push_back(
          Element{{std::move(word), Symbol{std::move(pos)}}, LabelId{static_cast<std::uint32_t>(label)}});
    }
    tr.emplace(static_cast<int>(label), -1);
    d.sequences.push_back(std::move(seq));
  }
  out.transitions.push_back(std::move(tr));
  return out;
}

}  // namespace sknn

#include "sknn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "sknn/config.hpp"
#include "sknn/error.hpp"

namespace sknn {
namespace {

using Json = nlohmann::json;

constexpr const char* kNoPrediction = "<none>";

template <class F>
auto in_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(name);
    throw;
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure in
// index order is rethrown, so errors do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  if (threads == 1) {
    work(next);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, std::ref(next));
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::pair<char, std::string> split_tag(const std::string& tag) {
  if (tag.size() >= 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return {tag[0], tag.substr(2)};
  return {'O', ""};
}

bool is_iob(const std::string& tag) {
  return tag == "O" || (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-');
}

std::set<std::tuple<std::size_t, std::size_t, std::string>> chunks_of(const std::vector<std::string>& tags) {
  std::set<std::tuple<std::size_t, std::size_t, std::string>> out;
  bool open = false;
  std::size_t start = 0;
  std::string type;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto [p, t] = split_tag(tags[i]);
    const bool starts = p == 'B' || (p == 'I' && (!open || t != type));
    if (open && (p == 'O' || starts)) {
      out.emplace(start, i, type);
      open = false;
    }
    if (starts) {
      open = true;
      start = i;
      type = t;
    }
  }
  if (open) out.emplace(start, tags.size(), type);
  return out;
}

void fill_confusion(Report& r, const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::set<std::string> all(gold.begin(), gold.end());
  all.insert(pred.begin(), pred.end());
  r.names.assign(all.begin(), all.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < r.names.size(); ++i) index[r.names[i]] = i;
  r.confusion.assign(r.names.size(), std::vector<std::size_t>(r.names.size(), 0));
  r.per_label.assign(r.names.size(), {});
  for (std::size_t i = 0; i < r.names.size(); ++i) r.per_label[i].label = r.names[i];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto g = index[gold[i]];
    auto p = index[pred[i]];
    ++r.confusion[g][p];
    ++r.per_label[g].gold;
    ++r.per_label[p].predicted;
    if (g == p) {
      ++r.per_label[g].correct;
      ++r.correct;
    }
  }
  r.total = gold.size();
  r.token_accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  for (auto& s : r.per_label) {
    s.precision = s.predicted ? static_cast<double>(s.correct) / static_cast<double>(s.predicted) : 0.0;
    s.recall = s.gold ? static_cast<double>(s.correct) / static_cast<double>(s.gold) : 0.0;
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct Inputs {
  Dataset train;
  Dataset test;
};

Inputs ingest(const ExperimentConfig& cfg) {
  Inputs in;
  switch (cfg.format) {
    case DataFormat::Conll:
    case DataFormat::Points: {
      auto read = [&](const std::filesystem::path& p) {
        return cfg.format == DataFormat::Conll ? read_conll_file(p) : read_points_file(p);
      };
      in.train = read(cfg.train);
      if (cfg.train_sequences) in.train = take_sequences(in.train, cfg.train_sequences);
      if (cfg.test.empty()) {
        std::tie(in.train, in.test) = split_dataset(in.train, {cfg.test_fraction, cfg.seed});
      } else {
        in.test = read(cfg.test);
      }
      break;
    }
    case DataFormat::SyntheticText: {
      TaggedTextSpec spec = cfg.text;
      spec.seed = cfg.seed;
      auto gen = generate_tagged_text(spec);
      if (cfg.train_sequences) gen.data = take_sequences(gen.data, cfg.train_sequences);
      std::tie(in.train, in.test) = split_dataset(gen.data, {cfg.test_fraction, cfg.seed});
      break;
    }
    case DataFormat::SyntheticTrajectories: {
      TrajectorySpec spec = cfg.trajectories;
      spec.seed = cfg.seed;
      const std::size_t train_per_class = spec.per_class;
      spec.per_class = train_per_class + cfg.test_per_class;
      auto gen = generate_trajectories(spec);
      in.train = take_sequences(gen.data, 0);
      in.test = take_sequences(gen.data, 0);
      for (std::size_t i = 0; i < gen.data.sequences.size(); ++i) {
        auto& side = (i % spec.per_class) < train_per_class ? in.train : in.test;
        side.sequences.push_back(gen.data.sequences[i]);
      }
      break;
    }
  }
  if (cfg.test_sequences) in.test = take_sequences(in.test, cfg.test_sequences);
  const bool trajectories = cfg.format == DataFormat::Points || cfg.format == DataFormat::SyntheticTrajectories;
  if (trajectories && cfg.resample > 0) {
    in.train = resample_trajectories(in.train, cfg.resample);
    in.test = resample_trajectories(in.test, cfg.resample);
  }
  if (in.test.sequences.empty()) raise(ErrorCode::EmptyCorpus, "test set is empty");
  return in;
}

std::vector<std::vector<std::string>> gold_labels(const Dataset& d) {
  std::vector<std::vector<std::string>> out;
  out.reserve(d.sequences.size());
  for (const auto& s : d.sequences) {
    auto& row = out.emplace_back();
    for (const auto& e : s.elements) {
      if (!e.label) raise(ErrorCode::MissingLabels, "test element without a gold label");
      row.push_back(d.labels.name(e.label->value));
    }
  }
  return out;
}

std::vector<std::string> gold_classes(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& s : d.sequences) {
    if (!s.cls) raise(ErrorCode::MissingLabels, "test sequence without a gold class");
    out.push_back(d.classes.name(s.cls->value));
  }
  return out;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

// --- evaluation -------------------------------------------------------------

Report evaluate_labelling(const std::vector<std::vector<std::string>>& pred,
                          const std::vector<std::vector<std::string>>& gold) {
  if (pred.size() != gold.size()) {
    raise(ErrorCode::ShapeMismatch, std::to_string(pred.size()) + " predicted sequences for " +
                                        std::to_string(gold.size()) + " gold sequences");
  }
  std::vector<std::string> flat_pred, flat_gold;
  std::size_t exact = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (pred[s].size() != gold[s].size()) {
      raise(ErrorCode::ShapeMismatch, "sequence " + std::to_string(s) + " has " +
                                          std::to_string(pred[s].size()) + " predictions for " +
                                          std::to_string(gold[s].size()) + " tokens");
    }
    if (pred[s] == gold[s]) ++exact;
    flat_pred.insert(flat_pred.end(), pred[s].begin(), pred[s].end());
    flat_gold.insert(flat_gold.end(), gold[s].begin(), gold[s].end());
  }
  Report r;
  fill_confusion(r, flat_pred, flat_gold);
  if (!gold.empty()) r.sequence_accuracy = static_cast<double>(exact) / static_cast<double>(gold.size());
  if (!flat_gold.empty() && std::all_of(flat_gold.begin(), flat_gold.end(), is_iob)) {
    r.chunk_f1 = chunk_f1(pred, gold);
  }
  return r;
}

Report evaluate_classification(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.size() != gold.size()) {
    raise(ErrorCode::ShapeMismatch, std::to_string(pred.size()) + " predictions for " +
                                        std::to_string(gold.size()) + " sequences");
  }
  Report r;
  fill_confusion(r, pred, gold);
  r.sequence_accuracy = r.token_accuracy;
  return r;
}

double chunk_f1(const std::vector<std::vector<std::string>>& pred,
                const std::vector<std::vector<std::string>>& gold) {
  if (pred.size() != gold.size()) raise(ErrorCode::ShapeMismatch, "sequence counts differ");
  std::size_t n_pred = 0, n_gold = 0, n_correct = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    auto p = chunks_of(pred[s]);
    auto g = chunks_of(gold[s]);
    n_pred += p.size();
    n_gold += g.size();
    for (const auto& c : p) n_correct += g.count(c);
  }
  if (n_pred == 0 && n_gold == 0) return 1.0;
  if (n_correct == 0) return 0.0;
  double precision = static_cast<double>(n_correct) / static_cast<double>(n_pred);
  double recall = static_cast<double>(n_correct) / static_cast<double>(n_gold);
  return 2.0 * precision * recall / (precision + recall);
}

// --- configuration ----------------------------------------------------------

std::optional<DataFormat> parse_format(std::string_view s) noexcept {
  if (s == "conll") return DataFormat::Conll;
  if (s == "points") return DataFormat::Points;
  if (s == "synthetic-text") return DataFormat::SyntheticText;
  if (s == "synthetic-trajectories") return DataFormat::SyntheticTrajectories;
  return std::nullopt;
}

std::string_view to_string(DataFormat f) noexcept {
  switch (f) {
    case DataFormat::Conll: return "conll";
    case DataFormat::Points: return "points";
    case DataFormat::SyntheticText: return "synthetic-text";
    case DataFormat::SyntheticTrajectories: return "synthetic-trajectories";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { raise(ErrorCode::InvalidConfig, what); };
  const bool labelling_format = format == DataFormat::Conll || format == DataFormat::SyntheticText;
  if ((task == Task::Labelling) != labelling_format) {
    fail("format '" + std::string(to_string(format)) + "' does not fit the " +
         (task == Task::Labelling ? "labelling" : "classification") + " task");
  }
  if (task == Task::Classification && !clustering) fail("classification needs a [clustering] section");
  if (task == Task::Labelling && clustering) fail("[clustering] only applies to classification");
  if (clustering) clustering->validate();
  if ((format == DataFormat::Conll || format == DataFormat::Points) && train.empty()) {
    fail("'train' path is required");
  }
  if (metrics.empty()) fail("'metrics' must list at least one metric");
  for (const auto& m : metrics) m.validate();
  if (windows.empty()) fail("'windows' must list at least one window size");
  if (query.k < 1) fail("'k' must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("'test_fraction' must lie in (0, 1)");
  if (format == DataFormat::SyntheticTrajectories && test_per_class < 1) fail("'test_per_class' must be positive");
}

std::string ExperimentConfig::canonical() const {
  Json j;
  j["task"] = task == Task::Labelling ? "labelling" : "classification";
  j["format"] = std::string(to_string(format));
  j["train"] = train.string();
  j["test"] = test.string();
  j["train_sequences"] = train_sequences;
  j["test_sequences"] = test_sequences;
  j["test_fraction"] = test_fraction;
  Json ms = Json::array();
  for (const auto& m : metrics) {
    Json o{{"name", m.name()}, {"smoothing", m.smoothing}};
    for (const auto& [f, t] : m.overrides) o["overrides"][f] = t == FeatureTerm::Mvdm ? "mvdm" : "overlap";
    ms.push_back(o);
  }
  j["metrics"] = ms;
  j["windows"] = windows;
  j["k"] = query.k;
  j["rank_weighting"] = query.rank_weighting;
  j["seed"] = seed;
  if (format == DataFormat::Points || format == DataFormat::SyntheticTrajectories) j["resample"] = resample;
  if (clustering) {
    Json c{{"seed", clustering->seed}, {"max_iterations", clustering->max_iterations}};
    if (const auto* km = std::get_if<KMedoids>(&clustering->method)) {
      c["method"] = "k-medoids";
      c["clusters"] = km->cluster_count;
    } else {
      const auto& ag = std::get<Agglomerative>(clustering->method);
      c["method"] = "agglomerative";
      c["linkage"] = std::string(to_string(ag.linkage));
      c["threshold"] = ag.distance_threshold;
    }
    j["clustering"] = c;
  }
  if (format == DataFormat::SyntheticTrajectories) {
    j["synthetic"] = {{"classes", trajectories.classes},      {"per_class", trajectories.per_class},
                      {"test_per_class", test_per_class},     {"noise_sigma", trajectories.noise_sigma},
                      {"waypoints", trajectories.waypoints},  {"dwell", trajectories.dwell},
                      {"scale", trajectories.scale}};
  } else if (format == DataFormat::SyntheticText) {
    j["synthetic"] = {{"labels", text.labels},
                      {"vocab", text.vocab},
                      {"per_label", text.per_label},
                      {"ambiguity", text.ambiguity}};
  }
  return j.dump();
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  auto doc = ConfigDocument::parse(text);
  doc.require_known({
      {"",
       {"task", "format", "train", "test", "train_sequences", "test_sequences", "test_fraction", "metrics",
        "windows", "k", "rank_weighting", "smoothing", "seed", "resample", "manifest", "threads"}},
      {"clustering", {"method", "clusters", "linkage", "threshold", "max_iterations", "seed"}},
      {"synthetic",
       {"classes", "per_class", "test_per_class", "noise_sigma", "waypoints", "dwell", "scale", "labels",
        "vocab", "per_label", "ambiguity"}},
  });
  auto fail = [](const std::string& what) { raise(ErrorCode::InvalidConfig, what); };
  auto count = [&](const std::string& section, const std::string& key) -> std::optional<std::uint64_t> {
    auto v = doc.get_int(section, key);
    if (!v) return std::nullopt;
    if (*v < 0) fail("'" + key + "' must not be negative");
    return static_cast<std::uint64_t>(*v);
  };
  auto path = [&](const std::string& key) -> std::filesystem::path {
    auto v = doc.get_string("", key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  ExperimentConfig cfg;
  if (auto f = doc.get_string("", "format")) {
    auto parsed = parse_format(*f);
    if (!parsed) fail("unknown format '" + *f + "'");
    cfg.format = *parsed;
  }
  const bool trajectories = cfg.format == DataFormat::Points || cfg.format == DataFormat::SyntheticTrajectories;
  cfg.task = trajectories ? Task::Classification : Task::Labelling;
  if (auto t = doc.get_string("", "task")) {
    auto s = lower(*t);
    if (s == "labelling" || s == "labeling") {
      cfg.task = Task::Labelling;
    } else if (s == "classification") {
      cfg.task = Task::Classification;
    } else {
      fail("unknown task '" + *t + "'");
    }
  }
  cfg.train = path("train");
  cfg.test = path("test");
  cfg.manifest = path("manifest");
  if (auto v = count("", "train_sequences")) cfg.train_sequences = *v;
  if (auto v = count("", "test_sequences")) cfg.test_sequences = *v;
  if (auto v = doc.get_real("", "test_fraction")) cfg.test_fraction = *v;
  if (auto v = count("", "seed")) cfg.seed = *v;
  if (auto v = count("", "threads")) cfg.threads = *v;
  if (auto v = count("", "resample")) cfg.resample = static_cast<std::uint32_t>(*v);
  if (auto v = count("", "k")) cfg.query.k = static_cast<std::uint32_t>(*v);
  if (auto v = doc.get_bool("", "rank_weighting")) cfg.query.rank_weighting = *v;
  double smoothing = doc.get_real("", "smoothing").value_or(0.0);
  if (auto names = doc.get_strings("", "metrics")) {
    cfg.metrics.clear();
    for (const auto& n : *names) {
      MetricSpec m = MetricSpec::parse(n);
      m.smoothing = smoothing;
      cfg.metrics.push_back(m);
    }
  } else {
    cfg.metrics.front().smoothing = smoothing;
  }
  if (auto ws = doc.get_ints("", "windows")) {
    cfg.windows.clear();
    for (auto w : *ws) {
      if (w < 0) fail("window sizes must not be negative");
      cfg.windows.push_back(static_cast<std::uint32_t>(w));
    }
  }

  if (doc.has_section("clustering")) {
    ClusteringConfig c;
    c.seed = cfg.seed;
    auto method = lower(doc.get_string("clustering", "method").value_or("k-medoids"));
    if (method == "k-medoids" || method == "kmedoids") {
      KMedoids km;
      if (auto v = count("clustering", "clusters")) km.cluster_count = static_cast<std::uint32_t>(*v);
      c.method = km;
    } else if (method == "agglomerative") {
      Agglomerative ag;
      if (auto l = doc.get_string("clustering", "linkage")) {
        auto parsed = parse_linkage(*l);
        if (!parsed) fail("unknown linkage '" + *l + "'");
        ag.linkage = *parsed;
      }
      if (auto v = doc.get_real("clustering", "threshold")) ag.distance_threshold = *v;
      c.method = ag;
    } else {
      fail("unknown clustering method '" + method + "'");
    }
    if (auto v = count("clustering", "max_iterations")) c.max_iterations = static_cast<std::uint32_t>(*v);
    if (auto v = count("clustering", "seed")) c.seed = *v;
    cfg.clustering = c;
  }

  const std::string syn = "synthetic";
  if (auto v = count(syn, "classes")) cfg.trajectories.classes = *v;
  if (auto v = count(syn, "per_class")) cfg.trajectories.per_class = *v;
  if (auto v = count(syn, "test_per_class")) cfg.test_per_class = *v;
  if (auto v = doc.get_real(syn, "noise_sigma")) cfg.trajectories.noise_sigma = *v;
  if (auto v = count(syn, "waypoints")) cfg.trajectories.waypoints = *v;
  if (auto v = count(syn, "dwell")) cfg.trajectories.dwell = *v;
  if (auto v = doc.get_real(syn, "scale")) cfg.trajectories.scale = *v;
  if (auto v = count(syn, "labels")) cfg.text.labels = *v;
  if (auto v = count(syn, "vocab")) cfg.text.vocab = *v;
  if (auto v = count(syn, "per_label")) cfg.text.per_label = *v;
  if (auto v = doc.get_real(syn, "ambiguity")) cfg.text.ambiguity = *v;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text_file(path), path.parent_path());
}

// --- pipeline ---------------------------------------------------------------

std::size_t default_thread_count() {
  if (const char* env = std::getenv("SKNN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

LabelledOutput label_all(const Decoder& decoder, const Dataset& data, std::size_t threads) {
  const std::size_t n = data.sequences.size();
  LabelledOutput out;
  out.labels.resize(n);
  std::vector<std::uint64_t> evals(n, 0);
  std::vector<char> failed(n, 0);
  const Vocabulary& names = decoder.model().labels();
  parallel_for(n, threads, [&](std::size_t i) {
    const auto& seq = data.sequences[i];
    try {
      auto r = decoder.label(seq);
      evals[i] = r.ndist_evaluations;
      auto& row = out.labels[i];
      row.reserve(r.labels.size());
      for (auto l : r.labels) row.push_back(names.name(l.value));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFeasiblePath) throw;
      failed[i] = 1;
      out.labels[i].assign(seq.size(), kNoPrediction);
    }
  });
  const std::uint64_t reachable = decoder.reachable().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      ++out.infeasible;
      continue;
    }
    out.ndist_evaluations += evals[i];
    out.ndist_expected += data.sequences[i].size() * reachable;
  }
  return out;
}

ClassifiedOutput classify_all(const Decoder& decoder, const Dataset& data, std::size_t threads) {
  const std::size_t n = data.sequences.size();
  ClassifiedOutput out;
  out.classes.resize(n);
  std::vector<std::uint64_t> evals(n, 0);
  std::vector<char> failed(n, 0);
  const Vocabulary& names = decoder.model().classes();
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      auto r = decoder.classify(data.sequences[i]);
      evals[i] = r.ndist_evaluations;
      out.classes[i] = names.name(r.cls.value);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFeasiblePath && e.code() != ErrorCode::UnclassifiableSequence) throw;
      failed[i] = 1;
      out.classes[i] = kNoPrediction;
    }
  });
  const std::uint64_t reachable = decoder.reachable().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      ++out.infeasible;
      continue;
    }
    out.ndist_evaluations += evals[i];
    out.ndist_expected += data.sequences[i].size() * reachable;
  }
  return out;
}

Dataset prepare_input(const ModelBundle& bundle, const Dataset& raw) {
  Dataset d = raw;
  if (bundle.resample > 0) d = resample_trajectories(d, bundle.resample);
  const auto& window = bundle.model.schema().window;
  if (window && !d.schema.window) d = apply_context_window(d, *window);
  return d;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  in_stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const std::size_t threads = cfg.threads ? cfg.threads : default_thread_count();
  ExperimentResult result;
  result.config_digest = sha256_hex(cfg.canonical());

  Inputs in = in_stage("ingest", [&] { return ingest(cfg); });
  result.train_digest = dataset_digest(in.train);
  result.test_digest = dataset_digest(in.test);

  Json run{{"record", "run"},
           {"config_digest", result.config_digest},
           {"train_digest", result.train_digest},
           {"test_digest", result.test_digest},
           {"seed", cfg.seed},
           {"task", cfg.task == Task::Labelling ? "labelling" : "classification"},
           {"format", std::string(to_string(cfg.format))},
           {"train_sequences", in.train.sequences.size()},
           {"train_elements", in.train.element_count()},
           {"test_sequences", in.test.sequences.size()},
           {"test_elements", in.test.element_count()}};
  result.manifest.push_back(run.dump());

  std::vector<std::pair<Dataset, Dataset>> windowed;
  for (auto w : cfg.windows) {
    windowed.push_back(in_stage("window", [&] {
      WindowConfig wc{w, w};
      return std::make_pair(apply_context_window(in.train, wc), apply_context_window(in.test, wc));
    }));
  }

  for (const auto& spec : cfg.metrics) {
    for (std::size_t wi = 0; wi < cfg.windows.size(); ++wi) {
      const auto started = std::chrono::steady_clock::now();
      const auto& [train, test] = windowed[wi];
      GridCell cell;
      cell.metric = spec.name();
      cell.window = cfg.windows[wi];

      auto metric = in_stage("fit_metric", [&] { return fit_metric(train, spec); });
      ModelBundle bundle{Model{}, metric, cfg.query, 0};
      if (cfg.task == Task::Labelling) {
        bundle.model = in_stage("build", [&] {
          Model m = build_model(train);
          m.set_metric_fingerprint(metric.fingerprint());
          return m;
        });
      } else {
        bundle.model = in_stage("induce", [&] { return train_classifier(train, metric, *cfg.clustering); });
        bundle.resample = cfg.resample;
      }
      cell.model_digest = model_digest(bundle);

      Decoder decoder = in_stage("decode", [&] { return Decoder(bundle.model, *bundle.metric, cfg.query); });
      if (cfg.task == Task::Labelling) {
        auto out = in_stage("decode", [&] { return label_all(decoder, test, threads); });
        cell.report = in_stage("evaluate", [&] { return evaluate_labelling(out.labels, gold_labels(test)); });
        cell.report.ndist_evaluations = out.ndist_evaluations;
        cell.report.ndist_expected = out.ndist_expected;
        cell.report.infeasible = out.infeasible;
      } else {
        auto out = in_stage("decode", [&] { return classify_all(decoder, test, threads); });
        cell.report = in_stage("evaluate", [&] { return evaluate_classification(out.classes, gold_classes(test)); });
        cell.report.ndist_evaluations = out.ndist_evaluations;
        cell.report.ndist_expected = out.ndist_expected;
        cell.report.infeasible = out.infeasible;
      }
      cell.report.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

      const Report& r = cell.report;
      Json line{{"record", "cell"},
                {"metric", cell.metric},
                {"window", cell.window},
                {"k", cfg.query.k},
                {"model_digest", cell.model_digest},
                {"token_accuracy", r.token_accuracy},
                {"sequence_accuracy", optional_json(r.sequence_accuracy)},
                {"chunk_f1", optional_json(r.chunk_f1)},
                {"correct", r.correct},
                {"total", r.total},
                {"infeasible", r.infeasible},
                {"ndist_evaluations", r.ndist_evaluations},
                {"ndist_expected", r.ndist_expected}};
      result.manifest.push_back(line.dump());
      result.cells.push_back(std::move(cell));
    }
  }

  if (!cfg.manifest.empty()) {
    in_stage("manifest", [&] {
      std::ofstream out(cfg.manifest, std::ios::binary);
      if (!out) raise(ErrorCode::Io, "cannot write manifest '" + cfg.manifest.string() + "'");
      for (const auto& l : result.manifest) out << l << '\n';
      if (!out) raise(ErrorCode::Io, "failed writing manifest '" + cfg.manifest.string() + "'");
      return 0;
    });
  }
  return result;
}

// --- reporting --------------------------------------------------------------

void print_report(std::ostream& out, const Report& r) {
  out << "accuracy " << fixed(r.token_accuracy) << " (" << r.correct << "/" << r.total << ")";
  if (r.sequence_accuracy) out << "  sequence " << fixed(*r.sequence_accuracy);
  if (r.chunk_f1) out << "  chunk-F1 " << fixed(*r.chunk_f1);
  out << '\n';
  out << "n_dist " << r.ndist_evaluations << " (expected " << r.ndist_expected << ")";
  if (r.infeasible) out << "  infeasible " << r.infeasible;
  if (r.wall_seconds > 0.0) out << "  " << fixed(r.wall_seconds, 2) << " s";
  out << '\n';
  out << "label\tgold\tpred\tprecision\trecall\n";
  for (const auto& s : r.per_label) {
    out << s.label << '\t' << s.gold << '\t' << s.predicted << '\t' << fixed(s.precision) << '\t'
        << fixed(s.recall) << '\n';
  }
}

void print_report(std::ostream& out, const ExperimentResult& result) {
  std::vector<std::string> metrics;
  std::vector<std::uint32_t> windows;
  for (const auto& c : result.cells) {
    if (std::find(metrics.begin(), metrics.end(), c.metric) == metrics.end()) metrics.push_back(c.metric);
    if (std::find(windows.begin(), windows.end(), c.window) == windows.end()) windows.push_back(c.window);
  }
  std::size_t width = 6;
  for (const auto& m : metrics) width = std::max(width, m.size());
  out << std::left << std::setw(static_cast<int>(width)) << "metric";
  for (auto w : windows) out << "  window " << std::setw(3) << w;
  out << '\n';
  for (const auto& m : metrics) {
    out << std::setw(static_cast<int>(width)) << m;
    for (auto w : windows) {
      auto it = std::find_if(result.cells.begin(), result.cells.end(),
                             [&](const GridCell& c) { return c.metric == m && c.window == w; });
      out << "  " << std::setw(10) << (it == result.cells.end() ? "-" : fixed(it->report.token_accuracy));
    }
    out << '\n';
  }
  out << std::right << '\n';
  for (const auto& c : result.cells) {
    const Report& r = c.report;
    out << c.metric << " window " << c.window << ": accuracy " << fixed(r.token_accuracy) << " (" << r.correct
        << "/" << r.total << ")";
    if (r.chunk_f1) out << ", chunk-F1 " << fixed(*r.chunk_f1);
    out << ", n_dist " << r.ndist_evaluations << "/" << r.ndist_expected;
    if (r.infeasible) out << ", infeasible " << r.infeasible;
    out << ", " << fixed(r.wall_seconds, 2) << " s\n";
  }
  out << "config " << result.config_digest << '\n';
}

}  // namespace sknn

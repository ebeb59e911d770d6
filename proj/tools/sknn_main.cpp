// sknn command-line tool: train, label, classify, eval, inspect, metrics inspect, experiment.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sknn/data.hpp"
#include "sknn/decoder.hpp"
#include "sknn/error.hpp"
#include "sknn/harness.hpp"
#include "sknn/induction.hpp"
#include "sknn/model_io.hpp"

namespace {

using namespace sknn;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct TrainOptions {
  std::string format = "conll";
  std::string metric = "overlap";
  std::uint32_t window = 0;
  std::uint32_t k = 1;
  bool rank_weighting = false;
  double smoothing = 0.0;
  std::uint32_t resample = 32;
  std::uint32_t clusters = 4;
  std::string linkage;
  double threshold = 1.0;
  std::uint32_t max_iterations = 100;
  std::uint64_t seed = 0;
  std::string output;
  std::string input;
};

bool is_points(const std::string& format) { return format == "points"; }

int train(const TrainOptions& o) {
  MetricSpec spec = MetricSpec::parse(o.metric);
  spec.smoothing = o.smoothing;
  spec.validate();
  ModelBundle bundle{Model{}, std::nullopt, NeighbourQuery{o.k, o.rank_weighting}, 0};
  if (o.k < 1) raise(ErrorCode::InvalidConfig, "--k must be at least 1");

  Dataset data;
  if (is_points(o.format)) {
    data = read_points_file(o.input);
    bundle.resample = o.resample;
    if (o.resample > 0) data = resample_trajectories(data, o.resample);
  } else {
    data = read_conll_file(o.input);
  }
  data = apply_context_window(data, WindowConfig{o.window, o.window});
  FittedMetric metric = fit_metric(data, spec);

  if (is_points(o.format)) {
    ClusteringConfig cc;
    cc.seed = o.seed;
    cc.max_iterations = o.max_iterations;
    if (o.linkage.empty()) {
      cc.method = KMedoids{o.clusters};
    } else {
      auto l = parse_linkage(o.linkage);
      if (!l) raise(ErrorCode::InvalidConfig, "unknown linkage '" + o.linkage + "'");
      cc.method = Agglomerative{*l, o.threshold};
    }
    bundle.model = train_classifier(data, metric, cc);
  } else {
    bundle.model = build_model(data);
    bundle.model.set_metric_fingerprint(metric.fingerprint());
  }
  bundle.metric = std::move(metric);
  save_model(bundle, std::filesystem::path(o.output));
  std::cerr << "wrote " << o.output << ": " << bundle.model.label_vertex_count() << " vertices, "
            << bundle.model.edge_count() << " edges, " << bundle.model.exemplar_count() << " exemplars\n";
  return 0;
}

ModelBundle load_bundle(const std::string& path) {
  ModelBundle b = load_model(std::filesystem::path(path));
  if (!b.metric) raise(ErrorCode::CorruptModel, "model file carries no fitted metric");
  return b;
}

bool classifies(const ModelBundle& b) { return b.model.has_vertex_classes(); }

Dataset read_input(const ModelBundle& b, const std::string& path, bool require_labels) {
  if (classifies(b)) return read_points_file(path);
  return read_conll_file(path, ConllOptions{require_labels});
}

std::ostream& output_stream(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) raise(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return file;
}

int label(const std::string& model_path, const std::string& input, const std::string& output) {
  ModelBundle b = load_bundle(model_path);
  if (classifies(b)) raise(ErrorCode::InvalidConfig, "this model classifies sequences; use 'classify'");
  Dataset raw = read_input(b, input, false);
  Dataset prepared = prepare_input(b, raw);
  Decoder decoder(b.model, *b.metric, b.query);
  auto out = label_all(decoder, prepared, default_thread_count());
  std::vector<std::vector<std::vector<std::string>>> extra{out.labels};
  std::ofstream file;
  write_conll(output_stream(output, file), raw, extra);
  if (out.infeasible) std::cerr << out.infeasible << " sentence(s) had no feasible path\n";
  return 0;
}

int classify(const std::string& model_path, const std::string& input) {
  ModelBundle b = load_bundle(model_path);
  if (!classifies(b)) raise(ErrorCode::InvalidConfig, "this model labels elements; use 'label'");
  Dataset raw = read_input(b, input, false);
  Decoder decoder(b.model, *b.metric, b.query);
  auto out = classify_all(decoder, prepare_input(b, raw), default_thread_count());
  for (std::size_t i = 0; i < out.classes.size(); ++i) {
    const auto& seq = raw.sequences[i];
    std::cout << i << '\t' << out.classes[i];
    if (seq.cls) std::cout << '\t' << raw.classes.name(seq.cls->value);
    std::cout << '\n';
  }
  return 0;
}

int eval(const std::string& model_path, const std::string& input) {
  ModelBundle b = load_bundle(model_path);
  Dataset raw = read_input(b, input, true);
  Dataset prepared = prepare_input(b, raw);
  Decoder decoder(b.model, *b.metric, b.query);
  Report report;
  if (classifies(b)) {
    auto out = classify_all(decoder, prepared, default_thread_count());
    std::vector<std::string> gold;
    for (const auto& s : raw.sequences) gold.push_back(s.cls ? raw.classes.name(s.cls->value) : "");
    report = evaluate_classification(out.classes, gold);
    report.ndist_evaluations = out.ndist_evaluations;
    report.ndist_expected = out.ndist_expected;
    report.infeasible = out.infeasible;
  } else {
    auto out = label_all(decoder, prepared, default_thread_count());
    std::vector<std::vector<std::string>> gold;
    for (const auto& s : raw.sequences) {
      auto& row = gold.emplace_back();
      for (const auto& e : s.elements) row.push_back(raw.labels.name(e.label->value));
    }
    report = evaluate_labelling(out.labels, gold);
    report.ndist_evaluations = out.ndist_evaluations;
    report.ndist_expected = out.ndist_expected;
    report.infeasible = out.infeasible;
  }
  print_report(std::cout, report);
  return 0;
}

int inspect(const std::string& model_path) {
  ModelBundle b = load_model(std::filesystem::path(model_path));
  const Model& m = b.model;
  std::cout << "features";
  for (const auto& f : m.schema().features) std::cout << ' ' << f.name << ':' << to_string(f.kind);
  std::cout << '\n';
  if (const auto& w = m.schema().window) std::cout << "window " << w->before << ' ' << w->after << '\n';
  std::cout << "metric " << (b.metric ? b.metric->spec().name() : "none") << '\n';
  std::cout << "fingerprint " << m.metric_fingerprint() << '\n';
  std::cout << "k " << b.query.k << (b.query.rank_weighting ? " rank-weighted" : "") << '\n';
  if (b.resample) std::cout << "resample " << b.resample << '\n';
  std::cout << "vertices " << m.label_vertex_count() << " edges " << m.edge_count() << " exemplars "
            << m.exemplar_count() << '\n';
  for (std::uint32_t v = 2; v < m.vertex_count(); ++v) {
    VertexId id{v};
    std::cout << "vertex " << v << ' ' << m.vertex_name(id);
    if (auto c = m.vertex_class(id)) std::cout << " class=" << m.classes().name(c->value);
    std::cout << " exemplars=" << m.exemplars(id).size() << '\n';
  }
  for (const auto& [u, v] : m.edges()) std::cout << "edge " << m.vertex_name(u) << ' ' << m.vertex_name(v) << '\n';
  return 0;
}

std::string_view encoding_name(Encoding e) {
  switch (e) {
    case Encoding::Exact: return "exact";
    case Encoding::Binned: return "binned";
    case Encoding::ZScore: return "zscore";
  }
  return "?";
}

std::string_view term_name(Term t) {
  switch (t) {
    case Term::Mismatch: return "mismatch";
    case Term::Mvdm: return "mvdm";
    case Term::SquaredDiff: return "squared-diff";
  }
  return "?";
}

int metrics_inspect(const std::string& model_path) {
  ModelBundle b = load_bundle(model_path);
  const FittedMetric& fm = *b.metric;
  const auto& schema = fm.schema();
  std::cout << "metric\t" << fm.spec().name() << '\n';
  std::cout << "fingerprint\t" << fm.fingerprint() << '\n';
  std::cout << "labels";
  for (const auto& n : fm.labels().names()) std::cout << '\t' << n;
  std::cout << '\n';
  auto weights = fm.weights();
  for (std::size_t f = 0; f < fm.features().size(); ++f) {
    const auto& st = fm.features()[f];
    std::cout << "feature\t" << f << '\t' << schema.features[f].name << '\t' << encoding_name(st.encoding) << '\t'
              << term_name(st.term) << '\t' << st.coefficient << '\t';
    if (f < weights.size()) {
      std::cout << weights[f];
    } else {
      std::cout << '-';
    }
    std::cout << '\n';
  }
  for (std::size_t f = 0; f < fm.features().size(); ++f) {
    const auto& st = fm.features()[f];
    const auto& name = schema.features[f].name;
    if (st.encoding == Encoding::ZScore) std::cout << "stats\t" << name << '\t' << st.mean << '\t' << st.stddev << '\n';
    if (st.encoding == Encoding::Binned) {
      std::cout << "bins\t" << name;
      for (double e : st.bin_edges) std::cout << '\t' << e;
      std::cout << '\n';
    }
    if (st.term != Term::Mvdm) continue;
    for (std::size_t c = 0; c < st.code_count(); ++c) {
      std::string value = st.encoding == Encoding::Exact && c < st.vocab.size()
                              ? st.vocab.name(static_cast<std::uint32_t>(c))
                              : "bin" + std::to_string(c);
      std::cout << "mvdm\t" << name << '\t' << value;
      auto row = fm.mvdm_row(f, static_cast<std::int32_t>(c));
      for (std::size_t l = 0; l < fm.label_count(); ++l) std::cout << '\t' << row[l];
      std::cout << '\n';
    }
  }
  return 0;
}

int experiment(const std::string& config, std::optional<std::uint64_t> seed, const std::string& manifest,
               std::size_t threads) {
  ExperimentConfig cfg = load_experiment_config(config);
  if (seed) {
    cfg.seed = *seed;
    if (cfg.clustering) cfg.clustering->seed = *seed;
  }
  if (!manifest.empty()) cfg.manifest = manifest;
  if (threads) cfg.threads = threads;
  auto result = run_experiment(cfg);
  print_report(std::cout, result);
  return 0;
}

bool is_usage(ErrorCode c) {
  return c == ErrorCode::InvalidConfig || c == ErrorCode::InvalidMetricSpec ||
         c == ErrorCode::InvalidClusteringConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured k-nearest-neighbour sequence labelling and classification"};
  app.require_subcommand(1);

  TrainOptions t;
  auto* train_cmd = app.add_subcommand("train", "Build a model from labelled sequences or trajectories");
  train_cmd->add_option("--format", t.format, "Input format")->check(CLI::IsMember({"conll", "points"}));
  train_cmd->add_option("--metric", t.metric, "overlap, mvdm, ig, igr or normalized-euclidean");
  train_cmd->add_option("--window", t.window, "Context elements on each side");
  train_cmd->add_option("--k", t.k, "Nearest exemplars averaged per vertex");
  train_cmd->add_flag("--rank-weighting", t.rank_weighting, "Weight the r-th neighbour by 1/r");
  train_cmd->add_option("--smoothing", t.smoothing, "Add-alpha smoothing for MVDM tables");
  train_cmd->add_option("--resample", t.resample, "Points per trajectory (0 keeps raw points)");
  train_cmd->add_option("--clusters", t.clusters, "k-medoids clusters per class");
  train_cmd->add_option("--linkage", t.linkage, "Use agglomerative clustering with this linkage");
  train_cmd->add_option("--threshold", t.threshold, "Agglomerative merge threshold");
  train_cmd->add_option("--max-iterations", t.max_iterations, "k-medoids swap passes");
  train_cmd->add_option("--seed", t.seed, "Random seed");
  train_cmd->add_option("-o,--output", t.output, "Model file to write")->required();
  train_cmd->add_option("input", t.input, "Training file")->required();

  std::string model_path, input, output;
  auto* label_cmd = app.add_subcommand("label", "Append a predicted label column to a CoNLL file");
  label_cmd->add_option("-m,--model", model_path)->required();
  label_cmd->add_option("-o,--output", output, "Output file (default: stdout)");
  label_cmd->add_option("input", input)->required();

  auto* classify_cmd = app.add_subcommand("classify", "Predict the class of every trajectory");
  classify_cmd->add_option("-m,--model", model_path)->required();
  classify_cmd->add_option("input", input)->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score a model against gold annotations");
  eval_cmd->add_option("-m,--model", model_path)->required();
  eval_cmd->add_option("input", input)->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a model file");
  inspect_cmd->add_option("-m,--model", model_path)->required();

  auto* metrics_cmd = app.add_subcommand("metrics", "Fitted metric tools");
  metrics_cmd->require_subcommand(1);
  auto* metrics_inspect_cmd = metrics_cmd->add_subcommand("inspect", "Dump weights and tables as TSV");
  metrics_inspect_cmd->add_option("-m,--model", model_path)->required();

  std::string config, manifest;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a metric x window grid from a config file");
  experiment_cmd->add_option("config", config)->required();
  experiment_cmd->add_option("--seed", seed, "Override the config seed");
  experiment_cmd->add_option("--manifest", manifest, "JSON-lines manifest path");
  experiment_cmd->add_option("--threads", threads, "Decoding workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*train_cmd) return train(t);
    if (*label_cmd) return label(model_path, input, output);
    if (*classify_cmd) return classify(model_path, input);
    if (*eval_cmd) return eval(model_path, input);
    if (*inspect_cmd) return inspect(model_path);
    if (*metrics_inspect_cmd) return metrics_inspect(model_path);
    if (*experiment_cmd) return experiment(config, seed, manifest, threads);
  } catch (const Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << ": " << e.what() << '\n';
    return is_usage(e.code()) ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include <pthread.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "lexloop/cluster.hpp"
#include "lexloop/error.hpp"
#include "lexloop/http_api.hpp"
#include "lexloop/learn.hpp"
#include "lexloop/metric.hpp"
#include "lexloop/model_io.hpp"
#include "lexloop/session.hpp"
#include "lexloop/synth.hpp"

namespace lexloop {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
}

/// Writes to `path`, or to `out` when the path is empty.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty())
    out << text;
  else
    write_file(path, text);
}

std::string pretty(const json& doc) { return doc.dump(2) + "\n"; }

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return kExitValidation;
    case ErrorCode::infeasible: return kExitInfeasible;
    case ErrorCode::unsupported_scale: return kExitUnsupportedScale;
    default: return kExitFailure;
  }
}

const std::vector<std::string> kKindNames = {"uiup", "uicp", "cicp"};
const std::vector<std::string> kLinkageNames = {"single", "average"};

TreeKind kind_of(const std::string& name) { return tree_kind_from_string(name); }

struct LearnArgs {
  std::string domain, examples, constraints, output, stats;
  std::string kind = "uiup";
  std::size_t forest_size = 1;
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_depth = 0;
};

struct EvalArgs {
  std::string domain, model, examples;
};

struct DistanceArgs {
  std::string domain, forest;
  std::vector<std::string> models;
  std::uint64_t limit = kTauEnumerationLimit;
  std::string linkage = "average";
  std::optional<double> threshold;
  std::string output;
};

struct GenArgs {
  std::string domain, examples_out, model_out;
  std::string kind = "uiup";
  std::uint64_t seed = 0;
  std::size_t count = 100;
  double noise = 0.0;
  bool complete = false;
};

struct RenderArgs {
  std::string domain, model, output, plot;
  std::size_t depth = 3;
  std::uint64_t limit = kTauEnumerationLimit;
  std::string linkage = "average";
  std::optional<double> threshold;
};

struct ServeArgs {
  std::string data_dir, host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
  std::size_t graph_depth = 3;
  std::string linkage = "average";
  std::uint64_t limit = kTauEnumerationLimit;
};

LPForest load_forest(const Domain& domain, const DistanceArgs& args) {
  LPForest forest;
  if (!args.forest.empty()) {
    auto model = deserialize_model(read_file(args.forest), domain);
    if (auto* f = std::get_if<LPForest>(&model))
      forest = std::move(*f);
    else
      forest.trees.push_back(std::get<LPTree>(std::move(model)));
  }
  for (const auto& path : args.models) {
    auto model = deserialize_model(read_file(path), domain);
    if (auto* f = std::get_if<LPForest>(&model))
      for (auto& t : f->trees) forest.trees.push_back(std::move(t));
    else
      forest.trees.push_back(std::get<LPTree>(std::move(model)));
  }
  if (forest.trees.empty()) fail(ErrorCode::validation, "give --forest or at least one --model");
  return forest;
}

int cmd_learn(const LearnArgs& args, std::ostream& out, std::ostream& err) {
  const auto domain = parse_domain(read_file(args.domain));
  const auto examples = parse_examples(read_file(args.examples), domain);
  LearnConfig config;
  config.kind = kind_of(args.kind);
  config.forest_size = args.forest_size;
  config.sample_fraction = args.sample_fraction;
  config.seed = args.seed;
  if (args.max_depth > 0) config.max_depth = args.max_depth;
  if (!args.constraints.empty()) config.constraints = parse_constraints(read_file(args.constraints), domain);
  const auto result = learn(examples, domain, config);
  emit(out, args.output, pretty(model_to_json(result.model, domain)));
  const auto stats = evaluate(result.model, examples);
  json summary = stats_to_json(stats);
  summary["training_accuracy"] = result.training_accuracy;
  summary["constraints_satisfied"] = result.constraint_satisfied;
  if (!args.stats.empty()) write_file(args.stats, pretty(summary));
  err << "learned " << (config.forest_size > 1 ? "forest" : "tree") << " from " << examples.size()
      << " examples, training accuracy " << result.training_accuracy << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto domain = parse_domain(read_file(args.domain));
  const auto model = deserialize_model(read_file(args.model), domain);
  const auto examples = parse_examples(read_file(args.examples), domain);
  out << pretty(stats_to_json(evaluate(model, examples)));
  return kExitOk;
}

int cmd_distance(const DistanceArgs& args, std::ostream& out) {
  const auto domain = parse_domain(read_file(args.domain));
  const auto forest = load_forest(domain, args);
  emit(out, args.output, pretty(matrix_to_json(distance_matrix(forest, domain, args.limit))));
  return kExitOk;
}

int cmd_cluster(const DistanceArgs& args, std::ostream& out) {
  const auto domain = parse_domain(read_file(args.domain));
  const auto forest = load_forest(domain, args);
  const auto matrix = distance_matrix(forest, domain, args.limit);
  const auto dendrogram = agglomerate(matrix, linkage_from_string(args.linkage));
  const auto threshold = args.threshold.value_or(median_height(dendrogram));
  const json doc = {{"distances", matrix_to_json(matrix)},
                    {"dendrogram", dendrogram_to_json(dendrogram)},
                    {"clustering", clustering_to_json(cut(dendrogram, matrix, threshold))}};
  emit(out, args.output, pretty(doc));
  return kExitOk;
}

int cmd_gen(const GenArgs& args, std::ostream& out) {
  if (args.complete && args.noise > 0) fail(ErrorCode::validation, "--complete and --noise cannot be combined");
  const auto domain = parse_domain(read_file(args.domain));
  const auto hidden = random_tree(domain, kind_of(args.kind), args.seed);
  const Model model{hidden};
  const auto examples = args.complete ? complete_examples(model, domain, kDefaultEnumerationLimit)
                                      : sample_examples(model, domain, args.count, args.noise, args.seed);
  emit(out, args.examples_out, serialize_examples(domain, examples));
  if (!args.model_out.empty()) write_file(args.model_out, serialize_tree(hidden, domain));
  return kExitOk;
}

int cmd_render(const RenderArgs& args, std::ostream& out) {
  const auto domain = parse_domain(read_file(args.domain));
  const auto model = deserialize_model(read_file(args.model), domain);
  if (const auto* tree = std::get_if<LPTree>(&model)) {
    emit(out, args.output, to_graph_description(*tree, domain, args.depth));
    if (!args.plot.empty()) fail(ErrorCode::validation, "--plot needs a forest");
    return kExitOk;
  }
  const auto& forest = std::get<LPForest>(model);
  const auto matrix = distance_matrix(forest, domain, args.limit);
  const auto dendrogram = agglomerate(matrix, linkage_from_string(args.linkage));
  const auto threshold = args.threshold.value_or(median_height(dendrogram));
  const auto clustering = cut(dendrogram, matrix, threshold);
  json graphs = json::array();
  for (std::size_t b = 0; b < clustering.buckets.size(); ++b) {
    const auto rep = clustering.representatives[b];
    graphs.push_back({{"tree", rep}, {"bucket", clustering.buckets[b]},
                      {"graph", to_graph_description(forest.trees[rep], domain, args.depth)}});
  }
  const auto plot = dendrogram_plot(dendrogram, threshold);
  if (!args.plot.empty()) write_file(args.plot, pretty(plot));
  emit(out, args.output, pretty({{"representatives", graphs}, {"plot", plot}}));
  return kExitOk;
}

int cmd_serve(const ServeArgs& args, std::ostream& out) {
  ServiceConfig config;
  config.data_dir = args.data_dir;
  config.default_seed = args.seed;
  config.graph_depth = args.graph_depth;
  config.linkage = linkage_from_string(args.linkage);
  config.enumeration_limit = args.limit;
  SessionService service(config);
  HttpApi api(service);
  const auto port = api.bind(args.host, args.port);

  // Signals are taken synchronously by a watcher thread, which stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int received = 0;
    sigwait(&signals, &received);
    api.stop();
  });

  out << "listening on " << args.host << ":" << port << " with " << service.session_ids().size()
      << " recovered sessions\n"
      << std::flush;
  api.serve();
  kill(getpid(), SIGTERM);
  watcher.join();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  out << "stopped\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interactive learning of lexicographic preference trees and forests", "lexloop"};
  app.require_subcommand(1);

  LearnArgs learn_args;
  auto* learn_cmd = app.add_subcommand("learn", "Learn a tree or forest from comparison examples");
  learn_cmd->add_option("--domain", learn_args.domain, "Domain document")->required();
  learn_cmd->add_option("--examples", learn_args.examples, "Example rows 'better > worse'")->required();
  learn_cmd->add_option("--constraints", learn_args.constraints, "Constraint document");
  learn_cmd->add_option("--kind", learn_args.kind, "uiup, uicp or cicp")
      ->check(CLI::IsMember(kKindNames, CLI::ignore_case));
  learn_cmd->add_option("--forest-size", learn_args.forest_size, "Trees in the forest; 1 learns a single tree")
      ->check(CLI::PositiveNumber);
  learn_cmd->add_option("--sample-fraction", learn_args.sample_fraction, "Bootstrap sample size per tree")
      ->check(CLI::Range(0.0, 1.0));
  learn_cmd->add_option("--seed", learn_args.seed, "Random seed");
  learn_cmd->add_option("--max-depth", learn_args.max_depth, "Depth limit")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--output", learn_args.output, "Model document file (default: standard output)");
  learn_cmd->add_option("--stats", learn_args.stats, "Write accuracy statistics here");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model against examples");
  eval_cmd->add_option("--domain", eval_args.domain, "Domain document")->required();
  eval_cmd->add_option("--model", eval_args.model, "Model document")->required();
  eval_cmd->add_option("--examples", eval_args.examples, "Example rows")->required();

  DistanceArgs distance_args;
  auto add_forest_options = [](CLI::App* cmd, DistanceArgs& args) {
    cmd->add_option("--domain", args.domain, "Domain document")->required();
    cmd->add_option("--forest", args.forest, "Forest document");
    cmd->add_option("--model", args.models, "Model documents, repeatable");
    cmd->add_option("--limit", args.limit, "Enumeration limit for general trees");
    cmd->add_option("--output", args.output, "Output file (default: standard output)");
  };
  auto* distance_cmd = app.add_subcommand("distance", "Pairwise disagreement counts between trees");
  add_forest_options(distance_cmd, distance_args);

  DistanceArgs cluster_args;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster the trees of a forest");
  add_forest_options(cluster_cmd, cluster_args);
  cluster_cmd->add_option("--linkage", cluster_args.linkage, "single or average")
      ->check(CLI::IsMember(kLinkageNames, CLI::ignore_case));
  cluster_cmd->add_option("--threshold", cluster_args.threshold, "Cut height (default: median merge height)")
      ->check(CLI::NonNegativeNumber);

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen", "Sample a hidden tree and examples from it");
  gen_cmd->add_option("--domain", gen_args.domain, "Domain document")->required();
  gen_cmd->add_option("--hidden-kind", gen_args.kind, "uiup, uicp or cicp")
      ->check(CLI::IsMember(kKindNames, CLI::ignore_case));
  gen_cmd->add_option("--seed", gen_args.seed, "Random seed");
  gen_cmd->add_option("--num-examples", gen_args.count, "Number of sampled examples");
  gen_cmd->add_option("--noise", gen_args.noise, "Probability of flipping an example")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_flag("--complete", gen_args.complete, "Every strictly ordered pair instead of a sample");
  gen_cmd->add_option("--examples-out", gen_args.examples_out, "Examples file (default: standard output)");
  gen_cmd->add_option("--model-out", gen_args.model_out, "Hidden model document");

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Graph documents for a tree, or representatives and a plot for a forest");
  render_cmd->add_option("--domain", render_args.domain, "Domain document")->required();
  render_cmd->add_option("--model", render_args.model, "Model document")->required();
  render_cmd->add_option("--depth", render_args.depth, "Levels shown before collapsing")->check(CLI::PositiveNumber);
  render_cmd->add_option("--output", render_args.output, "Output file (default: standard output)");
  render_cmd->add_option("--plot", render_args.plot, "Write the dendrogram plot document here");
  render_cmd->add_option("--limit", render_args.limit, "Enumeration limit for general trees");
  render_cmd->add_option("--linkage", render_args.linkage, "single or average")
      ->check(CLI::IsMember(kLinkageNames, CLI::ignore_case));
  render_cmd->add_option("--threshold", render_args.threshold, "Cut height")->check(CLI::NonNegativeNumber);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the session service");
  serve_cmd->add_option("--data-dir", serve_args.data_dir, "Event log directory")->required();
  serve_cmd->add_option("--host", serve_args.host, "Listen address");
  serve_cmd->add_option("--port", serve_args.port, "Listen port, 0 for any")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--seed", serve_args.seed, "Default seed for new sessions");
  serve_cmd->add_option("--graph-depth", serve_args.graph_depth, "Levels shown in graph documents");
  serve_cmd->add_option("--linkage", serve_args.linkage, "single or average")
      ->check(CLI::IsMember(kLinkageNames, CLI::ignore_case));
  serve_cmd->add_option("--limit", serve_args.limit, "Enumeration limit for general trees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const auto code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*learn_cmd) return cmd_learn(learn_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*distance_cmd) return cmd_distance(distance_args, out);
    if (*cluster_cmd) return cmd_cluster(cluster_args, out);
    if (*gen_cmd) return cmd_gen(gen_args, out);
    if (*render_cmd) return cmd_render(render_args, out);
    if (*serve_cmd) return cmd_serve(serve_args, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace lexloop

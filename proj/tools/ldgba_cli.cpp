// Command-line front end: automaton transformations, training runs,
// run comparison and the property battery.
//
// Exit codes: 0 success, 1 validation error, 2 property failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldgba/experiment.hpp"

namespace {

using namespace ldgba;

constexpr int kValidationError = 1;
constexpr int kPropertyFailure = 2;

std::string join_names(const TGba& b, const std::vector<StateId>& states) {
  std::string out;
  for (StateId s : states) out += (out.empty() ? "" : ", ") + b.state_name(s);
  return "{" + out + "}";
}

void print_stats(const TGba& b) {
  std::cout << "states: " << b.num_states() << "\n"
            << "transitions: " << b.transitions().size() << "\n"
            << "accepting-sets: " << b.num_acceptance_sets() << "\n"
            << "accepting-transitions: " << b.accepting_transitions().size() << "\n";
}

struct AutomatonArgs {
  std::string input;
  bool augment = false;
  bool merge = false;
  bool degeneralize = false;
  bool check_ld = false;
  std::string out;
  bool print = false;
};

int cmd_automaton(const AutomatonArgs& args) {
  if (args.merge && !args.augment) throw ValidationError("--merge requires --augment");
  TGba b = load_automaton(args.input);
  if (args.degeneralize) b = degeneralize(b);
  if (args.augment) {
    AugmentedAutomaton aug = augment(b);
    std::cout << "reachable-before-merge: " << aug.automaton.num_states() << "\n";
    if (args.merge) {
      aug = merge_unaccepting(aug);
      std::cout << "reachable-after-merge: " << aug.automaton.num_states() << "\n";
    }
    b = aug.automaton;
  }
  print_stats(b);

  int status = 0;
  if (args.check_ld) {
    try {
      const LimitDetPartition part = check_limit_deterministic(b);
      std::cout << "limit-deterministic: yes ("
                << (part.x_initial.empty() ? std::string("X_final = all")
                                           : "X_initial = " + join_names(b, part.x_initial) +
                                                 ", X_final = " + join_names(b, part.x_final))
                << ")\n";
      std::cout << "single-transition-count-reading: " << (part.single_transition_reading ? "holds" : "fails")
                << "\n";
    } catch (const NotLimitDeterministic& e) {
      std::cout << "limit-deterministic: no (" << e.what() << ")\n";
      status = kPropertyFailure;
    }
  }
  const std::string text = serialize_automaton(b);
  if (!args.out.empty()) {
    write_artifacts(std::filesystem::path(args.out).parent_path().empty() ? "." : std::filesystem::path(args.out).parent_path(),
                    {{std::filesystem::path(args.out).filename().string(), text}});
  }
  if (args.print) std::cout << text;
  return status;
}

struct TrainArgs {
  std::string env = "grid9";
  std::string mdp;
  std::string spec = "gfa_gfb_gnc";
  std::string method = "augmented";
  std::string config = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

int cmd_train(const TrainArgs& args) {
  ExperimentSpec spec;
  spec.environment = args.mdp.empty() ? args.env : args.mdp;
  spec.automaton = args.spec;
  spec.method = parse_method(args.method);
  spec.config = load_config(args.config);
  if (args.seed) spec.config.rng_seed = *args.seed;
  if (args.threads) spec.config.threads = *args.threads;
  const Artifacts files = run_experiment(spec);
  write_artifacts(args.out, files);

  const auto report = nlohmann::json::parse(files.at("report.json"));
  const auto& summary = report.at("summary");
  std::cout << "method: " << report.at("method").get<std::string>() << "\n"
            << "product-states: " << report.at("product_states") << "\n"
            << "sessions-satisfying: " << summary.at("sessions_satisfying") << "/" << summary.at("sessions") << "\n"
            << "median-first-satisfaction: " << summary.at("median_first_satisfaction") << "\n"
            << "positional-impossibility: " << report.at("positional_impossibility") << "\n"
            << "wrote: " << args.out << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& out, std::size_t stride) {
  std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
  const Artifacts files = compare_runs(dirs, stride);
  write_artifacts(out, files);
  std::cout << files.at("comparison.json");
  return 0;
}

int cmd_verify(const VerifyOptions& options) {
  const auto results = run_verify(options);
  const auto summary = verify_to_json(results);
  for (const auto& r : results) std::cerr << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  std::cout << summary.dump(2) << "\n";
  return summary.at("passed").get<bool>() ? 0 : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy synthesis for LTL specifications with memory-augmented limit-deterministic automata"};
  app.require_subcommand(1);

  AutomatonArgs automaton_args;
  auto* automaton = app.add_subcommand("automaton", "Transform and inspect an automaton");
  automaton->add_option("input", automaton_args.input, "Fixture name or automaton file")->required();
  automaton->add_flag("--augment", automaton_args.augment, "Augment with memory vectors");
  automaton->add_flag("--merge", automaton_args.merge, "Merge states that cannot reach acceptance (needs --augment)");
  automaton->add_flag("--degeneralize", automaton_args.degeneralize, "Convert to a single accepting set first");
  automaton->add_flag("--check-ld", automaton_args.check_ld, "Check limit determinism");
  automaton->add_option("--out", automaton_args.out, "Write the resulting automaton to FILE");
  automaton->add_flag("--print", automaton_args.print, "Print the resulting automaton");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train under one reward scheme and evaluate the policies exactly");
  auto* env_opt = train->add_option("--env", train_args.env, "Built-in environment")->check(CLI::IsMember({"grid9"}));
  train->add_option("--mdp", train_args.mdp, "MDP file")->excludes(env_opt);
  train->add_option("--spec", train_args.spec, "Automaton fixture name or file");
  train->add_option("--method", train_args.method, "augmented | degeneralized | frontier")
      ->check(CLI::IsMember({"augmented", "degeneralized", "frontier"}));
  train->add_option("--config", train_args.config, "desk | paper | JSON file");
  train->add_option("--seed", train_args.seed, "Override rng_seed");
  train->add_option("--threads", train_args.threads, "Worker threads (0: all cores)");
  train->add_option("--out", train_args.out, "Output directory")->required();

  std::vector<std::string> compare_runs_args;
  std::string compare_out = ".";
  std::size_t stride = 50;
  auto* compare = app.add_subcommand("compare", "Align completed runs");
  compare->add_option("runs", compare_runs_args, "Run directories")->required();
  compare->add_option("--out", compare_out, "Output directory");
  compare->add_option("--stride", stride, "Sample the curves every N episodes");

  VerifyOptions verify_options;
  auto* verify = app.add_subcommand("verify", "Run the property battery");
  verify->add_flag("--quick", verify_options.quick, "Smaller word family and fewer random policies");
  verify->add_option("--spec", verify_options.automaton, "Automaton to check against GF a & GF b & G !c");
  verify->add_option("--seed", verify_options.seed, "Seed for random policies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  try {
    if (*automaton) return cmd_automaton(automaton_args);
    if (*train) return cmd_train(train_args);
    if (*compare) return cmd_compare(compare_runs_args, compare_out, stride);
    if (*verify) return cmd_verify(verify_options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return 0;
}

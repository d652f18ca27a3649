#include "ldgba/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <span>
#include <sstream>

#include <openssl/evp.h>

namespace ldgba {

std::string to_string(Method m) {
  switch (m) {
    case Method::Augmented: return "augmented";
    case Method::Degeneralized: return "degeneralized";
    case Method::Frontier: return "frontier";
  }
  return {};
}

Method parse_method(std::string_view name) {
  if (name == "augmented") return Method::Augmented;
  if (name == "degeneralized") return Method::Degeneralized;
  if (name == "frontier") return Method::Frontier;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

LabeledMdp load_environment(const std::string& name_or_path) {
  if (name_or_path == "grid9") return build_gridworld();
  return read_mdp_file(name_or_path);
}

TGba load_automaton(const std::string& name_or_path) {
  if (name_or_path == "gfa_gfb_gnc") return fixture_gfa_gfb_gnc();
  return read_automaton_file(name_or_path);
}

TrainConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "desk") return TrainConfig::desk();
  if (name_or_path == "paper") return TrainConfig::paper();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(name_or_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad config file " + name_or_path + ": " + e.what());
  }
  try {
    return TrainConfig::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad config value in " + name_or_path + ": " + e.what());
  }
}

PreparedExperiment prepare(const LabeledMdp& m, const TGba& b, Method method) {
  switch (method) {
    case Method::Augmented: {
      TGba a = merge_unaccepting(augment(b)).automaton;
      ProductMdp p = build_product(m, a);
      return {std::move(a), std::move(p), RewardScheme::Accepting};
    }
    case Method::Degeneralized: {
      TGba a = augment(degeneralize(b)).automaton;
      ProductMdp p = build_product(m, a);
      return {std::move(a), std::move(p), RewardScheme::Accepting};
    }
    case Method::Frontier: {
      ProductMdp p = build_product(m, b);
      return {b, std::move(p), RewardScheme::Frontier};
    }
  }
  throw ValidationError("unknown method");
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1)
    throw Error("SHA-1 digest failed");
  std::ostringstream out;
  for (unsigned char byte : std::span(digest, length)) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(byte);
  return out.str();
}

double median_first_satisfaction(const std::vector<std::optional<std::size_t>>& first, std::size_t episodes) {
  if (first.empty()) throw Error("median of no sessions");
  std::vector<double> v;
  for (const auto& f : first) v.push_back(static_cast<double>(f ? *f : episodes + 1));
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// ---------------------------------------------------------------------------
// Training runs

Artifacts run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  const LabeledMdp m = load_environment(spec.environment);
  const TGba b = load_automaton(spec.automaton);
  const PreparedExperiment prep = prepare(m, b, spec.method);
  const TrainResult result = train(prep.product, prep.scheme, spec.config);

  Artifacts files;
  files["curves.csv"] = curves_csv(result);
  files["curves_aggregate.csv"] = aggregate_csv(result.curve);
  files["satisfaction.csv"] = satisfaction_csv(result);

  nlohmann::json policies = nlohmann::json::array();
  nlohmann::json sessions = nlohmann::json::array();
  std::vector<std::optional<std::size_t>> first;
  std::size_t satisfying = 0;
  for (std::size_t i = 0; i < result.sessions.size(); ++i) {
    const SessionResult& s = result.sessions[i];
    policies.push_back({{"session", i}, {"policy", policy_to_json(prep.product, s.policy)}});
    const PolicyEvaluation e = evaluate_policy(prep.product, s.policy);
    nlohmann::json sj;
    sj["session"] = i;
    sj["sat_probability"] = e.sat_probability;
    sj["positively_satisfies"] = e.positively_satisfies;
    sj["first_satisfying_episode"] =
        s.first_satisfying_episode ? nlohmann::json(*s.first_satisfying_episode) : nlohmann::json(nullptr);
    sj["evaluation"] = evaluation_to_json(prep.product, s.policy, e);
    if (e.positively_satisfies) {
      // The first accepting class and one transition per accepting set.
      for (std::size_t k = 0; k < e.classes.size(); ++k) {
        if (!e.classes[k].accepting) continue;
        sj["certificate"] = {{"class", k}, {"witnesses", sj["evaluation"]["classes"][k]["witnesses"]}};
        break;
      }
    }
    if (e.sat_probability >= 1.0 - kSatisfiedTolerance) ++satisfying;
    first.push_back(s.first_satisfying_episode);
    sessions.push_back(std::move(sj));
  }
  files["policies.json"] = policies.dump(2) + "\n";

  nlohmann::json first_json = nlohmann::json::array();
  for (const auto& f : first) first_json.push_back(f ? nlohmann::json(*f) : nlohmann::json(nullptr));
  nlohmann::json report;
  report["method"] = to_string(spec.method);
  report["environment"] = spec.environment;
  report["automaton"] = spec.automaton;
  report["episodes"] = spec.config.episodes;
  report["product_states"] = prep.product.num_states();
  report["reward"] = prep.scheme == RewardScheme::Accepting ? "accepting" : "frontier";
  if (prep.scheme == RewardScheme::Frontier)
    report["frontier_reset"] = "refilled with all accepting transitions when it becomes empty";
  report["epsilon_actions"] = "enabled alongside ordinary actions; the learner chooses";
  report["greedy_ties_during_training"] = "uniform among maximizers (seeded); extracted policies use lowest action id";
  report["positional_impossibility"] = check_positional_impossibility(prep.product);
  report["sessions"] = std::move(sessions);
  report["summary"] = {{"sessions", result.sessions.size()},
                       {"sessions_satisfying", satisfying},
                       {"first_satisfying_episodes", first_json},
                       {"median_first_satisfaction", median_first_satisfaction(first, spec.config.episodes)}};
  files["report.json"] = report.dump(2) + "\n";

  const std::string mdp_text = serialize_mdp(m);
  const std::string automaton_text = serialize_automaton(b);
  const std::string config_text = spec.config.to_json().dump();
  nlohmann::json manifest;
  manifest["method"] = to_string(spec.method);
  manifest["seed"] = spec.config.rng_seed;
  manifest["config"] = spec.config.to_json();
  manifest["schedules"] = {
      {"epsilon", "min(1, " + format_double(spec.config.epsilon_numerator) + " / n_t(s)), n_t counted per session"},
      {"alpha", "k^-" + format_double(spec.config.alpha_exponent) + ", k = visits of (s, a) in the session"},
      {"avg_reward", "total episode reward / steps_per_episode"}};
  manifest["inputs"] = {{"environment", spec.environment},
                        {"environment_hash", git_blob_hash(mdp_text)},
                        {"automaton", spec.automaton},
                        {"automaton_hash", git_blob_hash(automaton_text)},
                        {"config_hash", git_blob_hash(config_text)}};
  manifest["input_hash"] = git_blob_hash(mdp_text + automaton_text + config_text + to_string(spec.method));
  nlohmann::json outputs;
  for (const auto& [name, content] : files) outputs[name] = git_blob_hash(content);
  manifest["outputs"] = std::move(outputs);
  files["manifest.json"] = manifest.dump(2) + "\n";
  return files;
}

void write_artifacts(const std::filesystem::path& dir, const Artifacts& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw Error("write failed for " + (dir / name).string());
  }
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

struct LoadedRun {
  std::string method;
  std::size_t episodes;
  std::vector<double> mean, stddev;
  nlohmann::json summary;
};

LoadedRun load_run(const std::filesystem::path& dir) {
  LoadedRun run;
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  run.method = report.at("method").get<std::string>();
  run.episodes = report.at("episodes").get<std::size_t>();
  run.summary = report.at("summary");
  std::istringstream csv(read_file(dir / "curves_aggregate.csv"));
  bool header = false;
  for (std::string line; std::getline(csv, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string episode, mean, stddev;
    std::getline(row, episode, ',');
    std::getline(row, mean, ',');
    std::getline(row, stddev, ',');
    run.mean.push_back(std::stod(mean));
    run.stddev.push_back(std::stod(stddev));
  }
  if (run.mean.size() != run.episodes) throw ValidationError("run " + dir.string() + " has a truncated curve");
  return run;
}

}  // namespace

Artifacts compare_runs(const std::vector<std::filesystem::path>& run_dirs, std::size_t stride) {
  if (run_dirs.empty()) throw ValidationError("compare needs at least one run");
  if (stride < 1) throw ValidationError("stride must be positive");
  std::vector<LoadedRun> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run(d));
  const std::size_t episodes = runs.front().episodes;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].episodes != episodes)
      throw ValidationError("runs differ in episode count (" + std::to_string(episodes) + " vs " +
                            std::to_string(runs[i].episodes) + ")");

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string label = runs[i].method;
    if (std::count_if(runs.begin(), runs.end(), [&](const LoadedRun& r) { return r.method == label; }) > 1)
      label += "_" + std::to_string(i);
    labels.push_back(label);
  }

  std::ostringstream csv;
  csv << "episode";
  for (const auto& l : labels) csv << ',' << l << "_mean," << l << "_std";
  csv << '\n';
  std::vector<std::size_t> sampled;
  for (std::size_t e = stride; e <= episodes; e += stride) sampled.push_back(e);
  if (sampled.empty() || sampled.back() != episodes) sampled.push_back(episodes);
  for (std::size_t e : sampled) {
    csv << e;
    for (const auto& r : runs) csv << ',' << format_double(r.mean[e - 1]) << ',' << format_double(r.stddev[e - 1]);
    csv << '\n';
  }

  nlohmann::json methods = nlohmann::json::array();
  std::size_t fastest = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    methods.push_back({{"label", labels[i]},
                       {"method", runs[i].method},
                       {"run", run_dirs[i].string()},
                       {"median_first_satisfaction", runs[i].summary.at("median_first_satisfaction")},
                       {"sessions_satisfying", runs[i].summary.at("sessions_satisfying")},
                       {"sessions", runs[i].summary.at("sessions")}});
    if (runs[i].summary.at("median_first_satisfaction").get<double>() <
        runs[fastest].summary.at("median_first_satisfaction").get<double>())
      fastest = i;
  }
  nlohmann::json summary{{"episodes", episodes}, {"stride", stride}, {"methods", methods}, {"fastest", labels[fastest]}};
  return {{"comparison.csv", csv.str()}, {"comparison.json", summary.dump(2) + "\n"}};
}

// ---------------------------------------------------------------------------
// Property battery

void for_each_lasso(const std::vector<std::string>& aps, std::size_t max_prefix, std::size_t max_cycle,
                    const std::function<void(const LassoWord&)>& visit) {
  const std::size_t letters = std::size_t{1} << aps.size();
  LassoWord w{aps, {}, {}};
  // Enumerates all sequences of a given length by counting in base `letters`.
  auto sequences = [&](std::size_t length, const std::function<void(const std::vector<ApSet>&)>& f) {
    std::vector<ApSet> seq(length, 0);
    for (;;) {
      f(seq);
      std::size_t i = 0;
      while (i < length && ++seq[i] == letters) seq[i++] = 0;
      if (i == length) return;
    }
  };
  for (std::size_t p = 0; p <= max_prefix; ++p) {
    sequences(p, [&](const std::vector<ApSet>& prefix) {
      for (std::size_t c = 1; c <= max_cycle; ++c) {
        sequences(c, [&](const std::vector<ApSet>& cycle) {
          w.prefix = prefix;
          w.cycle = cycle;
          visit(w);
        });
      }
    });
  }
}

PositionalPolicy random_policy(const ProductMdp& p, std::mt19937_64& rng) {
  PositionalPolicy policy(p.num_states());
  for (StateId s = 0; s < p.num_states(); ++s) {
    const auto row = p.mdp().choices(s);
    std::uniform_int_distribution<std::size_t> pick(0, row.size() - 1);
    policy.set(s, row[pick(rng)].action);
  }
  return policy;
}

std::vector<CheckResult> run_verify(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    CheckResult r{name, false, {}};
    try {
      r.detail = body();
      r.passed = r.detail.rfind("FAIL", 0) != 0;
    } catch (const std::exception& e) {
      r.detail = std::string("FAIL: ") + e.what();
    }
    results.push_back(std::move(r));
  };

  const std::size_t max_prefix = options.quick ? 1 : 2;
  const std::size_t max_cycle = options.quick ? 2 : 3;
  const TGba b = load_automaton(options.automaton);
  const LtlFormula phi = formula_gfa_gfb_gnc();
  const AugmentedAutomaton aug = augment(b);
  const AugmentedAutomaton merged = merge_unaccepting(aug);
  const TGba deg = degeneralize(b);
  const std::vector<std::string> aps{"a", "b", "c"};

  auto sweep = [&](const std::string& what, const std::function<bool(const LassoWord&)>& agree) {
    std::size_t words = 0, mismatches = 0;
    for_each_lasso(aps, max_prefix, max_cycle, [&](const LassoWord& w) {
      ++words;
      if (!agree(w)) ++mismatches;
    });
    return std::string(mismatches == 0 ? "" : "FAIL: ") + std::to_string(mismatches) + " of " +
           std::to_string(words) + " words disagree (" + what + ")";
  };

  check("language_preserved_by_augmentation", [&] {
    return sweep("automaton vs augmented vs merged", [&](const LassoWord& w) {
      const bool base = accepts_lasso(b, w);
      return base == accepts_lasso(aug.automaton, w) && base == accepts_lasso(merged.automaton, w);
    });
  });
  check("automaton_matches_formula", [&] {
    return sweep("automaton vs GF a & GF b & G !c", [&](const LassoWord& w) {
      return accepts_lasso(b, w) == eval_lasso(phi, w);
    });
  });
  check("language_preserved_by_degeneralization", [&] {
    return sweep("automaton vs degeneralized", [&](const LassoWord& w) {
      return accepts_lasso(b, w) == accepts_lasso(deg, w);
    });
  });
  check("limit_determinism_preserved", [&] {
    check_limit_deterministic(b);
    check_limit_deterministic(aug.automaton);
    check_limit_deterministic(merged.automaton);
    check_limit_deterministic(deg);
    return std::string("automaton, augmented, merged and degeneralized all limit-deterministic");
  });
  check("augmented_state_counts", [&] {
    const std::string detail = std::to_string(aug.automaton.num_states()) + " states before merge, " +
                               std::to_string(merged.automaton.num_states()) + " after";
    if (options.automaton == "gfa_gfb_gnc" &&
        (aug.automaton.num_states() != 6 || merged.automaton.num_states() != 4))
      return "FAIL: " + detail + " (expected 6 and 4)";
    return detail;
  });

  const LabeledMdp grid = build_gridworld();
  const ProductMdp augmented_product = build_product(grid, merged.automaton);
  const ProductMdp plain_product = build_product(grid, b);

  check("stochastic_rows", [&] {
    double worst = std::max({max_row_error(grid), max_row_error(augmented_product.mdp()),
                             max_row_error(plain_product.mdp()),
                             max_row_error(build_product(grid, augment(deg).automaton).mdp())});
    std::ostringstream d;
    d << "max |row sum - 1| = " << worst;
    return (worst <= kStochasticTolerance ? "" : "FAIL: ") + d.str();
  });
  check("recurrent_classes_all_or_none", [&] {
    std::mt19937_64 rng(options.seed);
    const std::size_t policies = options.quick ? 100 : 1000;
    std::size_t violations = 0, classes = 0;
    for (std::size_t i = 0; i < policies; ++i) {
      const PolicyEvaluation e = evaluate_policy(augmented_product, random_policy(augmented_product, rng));
      for (const auto& c : e.classes) {
        ++classes;
        if (c.coverage != 0 && c.coverage != augmented_product.all_sets()) ++violations;
      }
    }
    return std::string(violations == 0 ? "" : "FAIL: ") + std::to_string(violations) + " violations over " +
           std::to_string(classes) + " recurrent classes of " + std::to_string(policies) + " random policies";
  });
  check("positional_impossibility_certificate", [&] {
    const bool plain = check_positional_impossibility(plain_product);
    const bool augmented = check_positional_impossibility(augmented_product);
    if (!plain || augmented)
      return std::string("FAIL: certificate plain=") + (plain ? "true" : "false") +
             " augmented=" + (augmented ? "true" : "false");
    return std::string("plain product certified impossible; augmented product not");
  });
  check("value_iteration_policy_satisfies", [&] {
    const ValueIterationResult vi = value_iteration(augmented_product, 2.0, 0.95);
    const PolicyEvaluation e = evaluate_policy(augmented_product, vi.policy);
    std::ostringstream d;
    d << "sat_probability " << e.sat_probability << ", residual " << e.residual;
    const bool ok = std::abs(e.sat_probability - 1.0) <= kSatisfiedTolerance && e.residual < 1e-10;
    return (ok ? "" : "FAIL: ") + d.str();
  });
  return results;
}

nlohmann::json verify_to_json(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    all = all && r.passed;
  }
  return {{"checks", checks}, {"passed", all}};
}

}  // namespace ldgba

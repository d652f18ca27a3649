#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ldgba/augment.hpp"
#include "ldgba/learn.hpp"

namespace ldgba {

enum class Method {
  Augmented,      // augment + merge, accepting reward
  Degeneralized,  // degeneralize, then augment (no-op on one set), accepting reward
  Frontier,       // raw automaton, accepting-frontier reward
};

std::string to_string(Method m);
Method parse_method(std::string_view name);

// "grid9" or a path to an MDP file.
LabeledMdp load_environment(const std::string& name_or_path);
// "gfa_gfb_gnc" or a path to an automaton file.
TGba load_automaton(const std::string& name_or_path);
// Named config ("desk", "paper") or a JSON file.
TrainConfig load_config(const std::string& name_or_path);

struct PreparedExperiment {
  TGba automaton;  // after the method's transformation
  ProductMdp product;
  RewardScheme scheme;
};

PreparedExperiment prepare(const LabeledMdp& m, const TGba& b, Method method);

struct ExperimentSpec {
  std::string environment = "grid9";
  std::string automaton = "gfa_gfb_gnc";
  Method method = Method::Augmented;
  TrainConfig config;
};

// File name -> content for every artifact of a training run.
using Artifacts = std::map<std::string, std::string>;

Artifacts run_experiment(const ExperimentSpec& spec);
void write_artifacts(const std::filesystem::path& dir, const Artifacts& files);

// Episodes (1-based) at which each session's greedy policy first satisfied
// the specification; sessions that never did are reported as episodes + 1.
double median_first_satisfaction(const std::vector<std::optional<std::size_t>>& first, std::size_t episodes);

// Aligns completed runs and samples their aggregate curves every `stride`
// episodes. Throws ValidationError when the runs differ in episode count.
Artifacts compare_runs(const std::vector<std::filesystem::path>& run_dirs, std::size_t stride = 50);

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_hash(std::string_view content);

// Enumerates every lasso word over `aps` with |prefix| <= max_prefix and
// 1 <= |cycle| <= max_cycle.
void for_each_lasso(const std::vector<std::string>& aps, std::size_t max_prefix, std::size_t max_cycle,
                    const std::function<void(const LassoWord&)>& visit);

PositionalPolicy random_policy(const ProductMdp& p, std::mt19937_64& rng);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  bool quick = false;
  std::string automaton = "gfa_gfb_gnc";  // checked against GF a & GF b & G !c
  std::uint64_t seed = 1;
};

std::vector<CheckResult> run_verify(const VerifyOptions& options);
nlohmann::json verify_to_json(const std::vector<CheckResult>& results);

}  // namespace ldgba

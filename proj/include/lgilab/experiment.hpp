#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lgilab/bounds.hpp"
#include "lgilab/data.hpp"
#include "lgilab/lgi.hpp"
#include "lgilab/objectives.hpp"
#include "lgilab/optimize.hpp"
#include "lgilab/spectral_checks.hpp"

namespace lgilab {

inline constexpr int kSchemaVersion = 1;

enum class InitKind { Constant, Gaussian, Values, Network };

struct InitSpec {
  InitKind kind = InitKind::Constant;
  double value = 0.0;
  double stddev = 1.0;
  std::vector<double> values;
};

enum class TargetKind { Linear, LipschitzLink };

struct TargetSpec {
  TargetKind kind = TargetKind::Linear;
  Link link = Link::Identity;
  std::vector<double> w_star;  // empty: random direction of length `norm`
  double norm = 1.0;
  bool binary = false;
};

struct DataConfig {
  DataSpec spec;
  std::optional<TargetSpec> target;
  double flip_ratio = 0.0;
  Index test_n = 0;
  std::optional<double> gamma0;
  std::optional<double> gamma1;
};

struct OptimizerConfig {
  Method method = Method::GradientDescent;
  double eta = 0.01;
  StopCriteria stop;
  Index batch_size = 0;  // SGD only
  long epochs = 0;       // SGD only
  std::vector<std::uint64_t> seeds;
  InitSpec init;
};

struct BoundsConfig {
  Task task = Task::LinearRegression;
  std::vector<double> epsilons;
  double delta = 0.05;
  double l0 = 1.0;
  std::optional<double> smoothness;  // enables the discrete path-length factor
  bool kernel_pl = false;            // use sqrt(2 lambda_min(K)/n) with theta = 1/2
};

struct SpectraConfig {
  std::vector<std::string> checks;
  SpectralCheckOptions options;
};

enum class SweepParameter { N, FlipRatio };

struct SweepConfig {
  SweepParameter parameter = SweepParameter::N;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name;
  ObjectiveSpec objective;
  std::optional<DataConfig> data;
  OptimizerConfig optimizer;
  LgiOptions lgi;
  std::optional<BoundsConfig> bounds;
  std::optional<SpectraConfig> spectra;
  std::optional<SweepConfig> sweep;
  std::string output_dir = "out";
  nlohmann::json source;  // the validated document, for hashing
};

// Validates a config document; throws ConfigError naming the offending
// field path (e.g. "$.optimizer.eta").
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sweep_parameter_name(SweepParameter p);

// Everything needed to rerun one seed of one sweep point.
struct RunSetup {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
  std::shared_ptr<const Objective> objective;
  Vector w0;
};

RunSetup prepare_run(const ExperimentConfig& config, std::uint64_t seed);

Trajectory train(const ExperimentConfig& config, const RunSetup& setup, std::uint64_t seed);

struct RunSummary {
  std::uint64_t seed = 0;
  std::optional<double> sweep_value;
  bool diverged = false;
  std::optional<std::string> error;  // LGI or bound failure
  std::optional<LgiEstimateSeries> lgi;
  std::optional<double> proxy;
  std::vector<BoundReport> bounds;
  std::vector<std::string> files;  // relative to the experiment directory
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<RunSummary> runs;
  std::vector<std::string> files;
  bool any_diverged = false;
};

// Runs every (sweep value, seed) pair on the worker pool and writes the
// artifact tree under <output_dir>/<name>.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Aggregate CSV for a set of runs (exposed for testing).
std::string aggregate_csv(const ExperimentConfig& config, const std::vector<RunSummary>& runs);

std::string fnv1a_hex(std::string_view text);

}  // namespace lgilab

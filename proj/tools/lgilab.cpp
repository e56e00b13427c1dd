#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lgilab/bounds.hpp"
#include "lgilab/error.hpp"
#include "lgilab/experiment.hpp"
#include "lgilab/format.hpp"
#include "lgilab/lgi.hpp"
#include "lgilab/optimize.hpp"
#include "lgilab/spectral_checks.hpp"

namespace fs = std::filesystem;
using namespace lgilab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitPrecondition = 4;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--seed", common.seed, "Seed (overrides the config's seed list)");
  cmd->add_option("--out", common.out, "Output directory or file");
  cmd->add_option("--config", common.config, "JSON config file");
}

ExperimentConfig config_with_overrides(const Common& common) {
  if (common.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(common.config);
  if (common.seed) cfg.optimizer.seeds = {*common.seed};
  if (!common.out.empty()) cfg.output_dir = common.out;
  return cfg;
}

int cmd_train(const Common& common) {
  const ExperimentConfig cfg = config_with_overrides(common);
  const std::uint64_t seed = cfg.optimizer.seeds.front();
  const RunSetup setup = prepare_run(cfg, seed);
  const Trajectory traj = train(cfg, setup, seed);
  const fs::path path = fs::path(cfg.output_dir) / cfg.name / std::to_string(seed) / "trajectory.jsonl";
  write_file_atomic(path, to_jsonl(traj));
  const auto& last = traj.records.back();
  std::cout << "trajectory " << path.string() << " steps " << last.step << " final_loss "
            << format_shortest(last.loss) << " stop " << stop_reason_name(traj.stop_reason) << "\n";
  return traj.diverged() ? kExitDivergence : 0;
}

struct LgiFlags {
  std::string trajectory;
  std::optional<long> k0, s;
  std::string loss_star;
  std::string finalization;
  std::optional<int> window;
  std::optional<double> rel_tol;
};

int cmd_lgi(const Common& common, const LgiFlags& f) {
  LgiOptions o;
  if (!common.config.empty()) o = load_config(common.config).lgi;
  if (f.k0) o.k0 = *f.k0;
  if (f.s) o.s = *f.s;
  if (!f.loss_star.empty()) {
    if (f.loss_star == "auto") {
      o.loss_star.reset();
    } else {
      try {
        o.loss_star = parse_double(f.loss_star);
      } catch (const PreconditionError&) {
        throw ConfigError("--loss-star: expected 'auto' or a number");
      }
    }
  }
  if (!f.finalization.empty()) o.finalization = parse_finalization(f.finalization);
  if (f.window) o.window = *f.window;
  if (f.rel_tol) o.rel_tol = *f.rel_tol;
  std::ifstream in(f.trajectory);
  if (!in) throw PreconditionError("cannot open trajectory " + f.trajectory);
  const Trajectory traj = read_jsonl(in);
  const LgiEstimateSeries series = estimate(traj, o);
  if (!common.out.empty()) write_file_atomic(common.out, series_csv(series));
  // ten significant digits on the console; the CSV keeps full precision
  std::ostringstream summary;
  summary << std::setprecision(10) << "theta=" << series.theta_star << " c=" << series.c_star;
  std::cout << summary.str()
            << " verdict=" << verdict_name(series.verdict) << " entries=" << series.entries.size()
            << " loss_star=" << format_shortest(series.loss_star)
            << " definition_range=" << (series.in_definition_range ? "yes" : "no") << "\n";
  return 0;
}

int cmd_bounds(const Common& common, BoundInputs in, const std::optional<double>& eta,
               const std::optional<double>& beta, const std::optional<double>& l0) {
  if (!common.config.empty()) {
    // a config here is a bare BoundInputs object
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(common.config));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("$: malformed JSON: ") + ex.what());
    } catch (const PreconditionError& ex) {
      throw ConfigError(ex.what());
    }
    if (!j.is_object()) throw ConfigError("$: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto num = [&]() {
        if (!it.value().is_number()) throw ConfigError("$." + k + ": expected a number");
        return it.value().get<double>();
      };
      if (k == "theta") in.theta = num();
      else if (k == "c") in.c = num();
      else if (k == "M_delta") in.M_delta = num();
      else if (k == "Mbar_delta") in.Mbar_delta = num();
      else if (k == "epsilon") in.epsilon = num();
      else if (k == "delta") in.delta = num();
      else if (k == "n") in.n = static_cast<long>(num());
      else if (k == "p") in.p = static_cast<int>(num());
      else if (k == "q") in.q = static_cast<int>(num());
      else if (k == "L_ell") in.L_ell = num();
      else if (k == "L_psi_norm") in.L_psi_norm = num();
      else if (k == "M_ab") in.M_ab = num();
      else if (k == "eta") in.eta = num();
      else if (k == "beta") in.beta = num();
      else if (k == "l0") in.l0 = num();
      else if (k == "L_psi_per_radius") {
        if (!it.value().is_boolean()) throw ConfigError("$." + k + ": expected true or false");
        in.L_psi_per_radius = it.value().get<bool>();
      } else {
        throw ConfigError("$." + k + ": unknown field");
      }
    }
  }
  if (eta) in.eta = eta;
  if (beta) in.beta = beta;
  if (l0) in.l0 = l0;
  const BoundReport report = generalization_bound(in);
  const std::string json = bound_report_json(report);
  if (!common.out.empty()) write_file_atomic(common.out, json);
  std::cout << json;
  return 0;
}

int cmd_spectra(const Common& common, const std::string& check, SpectralCheckOptions o) {
  if (common.seed) o.seed = *common.seed;
  const SpectralCheckSummary s = run_spectral_check(check, o);
  if (!common.out.empty()) write_file_atomic(common.out, spectral_summaries_json({s}));
  std::cout << check << ": " << s.passed << "/" << s.trials << " pass\n";
  return 0;
}

int cmd_experiment(const Common& common) {
  const ExperimentConfig cfg = config_with_overrides(common);
  const ExperimentResult result = run_experiment(cfg);
  std::cout << "wrote " << result.files.size() + 1 << " files under " << result.directory.string() << "\n";
  std::cout << read_file(result.directory / "aggregate.csv");
  return result.any_diverged ? kExitDivergence : 0;
}

int cmd_validate(const Common& common, const std::string& positional) {
  const std::string path = positional.empty() ? common.config : positional;
  if (path.empty()) throw ConfigError("no config file given");
  const ExperimentConfig cfg = load_config(path);
  std::cout << "valid: " << cfg.name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform-LGI estimation, bound evaluation and spectral checks"};
  app.require_subcommand(1);

  Common common;
  auto* train_cmd = app.add_subcommand("train", "Run one optimization and write its trajectory");
  add_common(train_cmd, common);

  LgiFlags lgi;
  auto* lgi_cmd = app.add_subcommand("lgi-test", "Estimate LGI constants from a trajectory JSONL file");
  add_common(lgi_cmd, common);
  lgi_cmd->add_option("--trajectory", lgi.trajectory, "Trajectory JSONL")->required();
  lgi_cmd->add_option("--k0", lgi.k0, "First fit size K0");
  lgi_cmd->add_option("--s", lgi.s, "Fit size increment");
  lgi_cmd->add_option("--loss-star", lgi.loss_star, "Reference loss or 'auto'");
  lgi_cmd->add_option("--finalization", lgi.finalization, "last | tail-average");
  lgi_cmd->add_option("--window", lgi.window, "Verdict window");
  lgi_cmd->add_option("--rel-tol", lgi.rel_tol, "Verdict relative tolerance");

  BoundInputs bin;
  std::optional<double> eta, beta, l0;
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the generalization bound for given inputs");
  add_common(bounds_cmd, common);
  bounds_cmd->add_option("--theta", bin.theta);
  bounds_cmd->add_option("--c", bin.c);
  bounds_cmd->add_option("--M", bin.M_delta, "Initial loss bound");
  bounds_cmd->add_option("--Mbar", bin.Mbar_delta, "Final loss bound");
  bounds_cmd->add_option("--eps", bin.epsilon);
  bounds_cmd->add_option("--delta", bin.delta);
  bounds_cmd->add_option("--n", bin.n);
  bounds_cmd->add_option("--p", bin.p);
  bounds_cmd->add_option("--q", bin.q);
  bounds_cmd->add_option("--l-ell", bin.L_ell);
  bounds_cmd->add_option("--l-psi", bin.L_psi_norm);
  bounds_cmd->add_flag("--l-psi-per-radius", bin.L_psi_per_radius);
  bounds_cmd->add_option("--m-ab", bin.M_ab);
  bounds_cmd->add_option("--eta", eta);
  bounds_cmd->add_option("--beta", beta);
  bounds_cmd->add_option("--l0", l0);

  std::string check;
  SpectralCheckOptions so;
  auto* spectra_cmd = app.add_subcommand("spectra", "Run a spectral check over random instances");
  add_common(spectra_cmd, common);
  spectra_cmd->add_option("--check", check, "lemma-d8 | eig-subadditivity | rbf-sandwich | eig-transfer | klin")->required();
  spectra_cmd->add_option("--n", so.n);
  spectra_cmd->add_option("--d", so.d);
  spectra_cmd->add_option("--seeds", so.trials, "Number of random instances");
  spectra_cmd->add_option("--delta", so.delta);

  auto* exp_cmd = app.add_subcommand("experiment", "Run a full experiment config");
  add_common(exp_cmd, common);

  std::string positional;
  auto* validate_cmd = app.add_subcommand("validate-config", "Check a config file against the schema");
  add_common(validate_cmd, common);
  validate_cmd->add_option("path", positional, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(common);
    if (*lgi_cmd) return cmd_lgi(common, lgi);
    if (*bounds_cmd) return cmd_bounds(common, bin, eta, beta, l0);
    if (*spectra_cmd) return cmd_spectra(common, check, so);
    if (*exp_cmd) return cmd_experiment(common);
    if (*validate_cmd) return cmd_validate(common, positional);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

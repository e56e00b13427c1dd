#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lgilab/linalg.hpp"
#include "lgilab/objectives.hpp"

namespace lgilab {

struct StopCriteria {
  long max_steps = 1000;             // K: number of updates
  std::optional<double> loss_tol;    // stop once loss <= loss_tol
  std::optional<double> grad_tol;    // stop once grad_norm <= grad_tol
};

enum class SnapshotMode { None, Every, All };

struct SnapshotPolicy {
  SnapshotMode mode = SnapshotMode::None;
  long every = 1;
};

enum class StopReason { MaxSteps, LossThreshold, GradThreshold, Diverged };
enum class Method { GradientDescent, StochasticGradient };

struct TrajectoryRecord {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double dist_from_init = 0.0;
  std::optional<double> step_length;  // |w_{k+1} - w_k|, absent on the last record
};

struct Snapshot {
  long step = 0;
  Vector w;
};

struct SgdOptions {
  double eta = 0.01;
  Index batch_size = 1;
  long epochs = 1;
  std::uint64_t seed = 0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::vector<Snapshot> snapshots;
  Vector w_init;
  Vector w_final;
  double eta = 0.0;
  StopReason stop_reason = StopReason::MaxSteps;
  Method method = Method::GradientDescent;
  std::optional<SgdOptions> sgd;

  bool diverged() const { return stop_reason == StopReason::Diverged; }
  std::vector<double> losses() const;
  std::vector<double> grad_norms() const;
};

std::string stop_reason_name(StopReason reason);

// Losses above this (or any non-finite value) count as divergence.
inline constexpr double kDivergenceLoss = 1e12;

// Plain gradient descent w_{k+1} = w_k - eta grad L(w_k), recording steps
// 0..K. Divergence ends the run early with stop_reason Diverged and keeps
// the finite prefix.
Trajectory run_gd(const Objective& obj, const Vector& w0, double eta, const StopCriteria& stop,
                  const SnapshotPolicy& snapshots = {});

// Mini-batch SGD with a fresh shuffle per epoch. Records are per epoch and
// use the full-batch loss. Each mini-batch evaluates its rows in sorted
// order, so batch_size == n reproduces run_gd exactly.
Trajectory run_sgd(const Objective& obj, const Vector& w0, const SgdOptions& options,
                   const SnapshotPolicy& snapshots = {});

enum class SmoothnessMethod { Supplied, EmpiricalSecant };

struct SmoothnessEstimate {
  double beta = 0.0;
  SmoothnessMethod method = SmoothnessMethod::Supplied;
};

// Max secant ratio |grad(w_{k+1}) - grad(w_k)| / |w_{k+1} - w_k| over
// consecutive distinct snapshots.
SmoothnessEstimate estimate_smoothness(const Trajectory& traj, const Objective& obj);

// Parameter vector at a recorded step: taken from a snapshot when present,
// otherwise recomputed by replaying gradient descent from w_init.
Vector parameters_at(const Trajectory& traj, const Objective& obj, long step);

// One JSON object per record: {"step","loss","grad_norm","dist"}.
void write_jsonl(const Trajectory& traj, std::ostream& out);
std::string to_jsonl(const Trajectory& traj);
// Reads records only; parameter vectors are not part of the format.
Trajectory read_jsonl(std::istream& in);

}  // namespace lgilab

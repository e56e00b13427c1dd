#include "lgilab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lgilab/error.hpp"
#include "lgilab/format.hpp"
#include "lgilab/random.hpp"

namespace lgilab {

namespace {

bool diverging(const Evaluation& e, double grad_norm) {
  return !std::isfinite(e.loss) || !std::isfinite(grad_norm) || e.loss > kDivergenceLoss;
}

bool wants_snapshot(const SnapshotPolicy& policy, long step) {
  switch (policy.mode) {
    case SnapshotMode::None: return false;
    case SnapshotMode::All: return true;
    case SnapshotMode::Every: return step % std::max(1L, policy.every) == 0;
  }
  return false;
}

void check_start(const Objective& obj, const Vector& w0, double eta) {
  require(eta > 0.0 && std::isfinite(eta), "step size eta must be positive");
  require(w0.size() == obj.dim(), "initial point has the wrong dimension");
  require(w0.allFinite(), "initial point must be finite");
}

}  // namespace

std::vector<double> Trajectory::losses() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.loss);
  return out;
}

std::vector<double> Trajectory::grad_norms() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.grad_norm);
  return out;
}

std::string stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::LossThreshold: return "loss_threshold";
    case StopReason::GradThreshold: return "grad_threshold";
    case StopReason::Diverged: return "diverged";
  }
  return "unknown";
}

Trajectory run_gd(const Objective& obj, const Vector& w0, double eta, const StopCriteria& stop,
                  const SnapshotPolicy& snapshots) {
  check_start(obj, w0, eta);
  require(stop.max_steps >= 1, "max_steps must be at least 1");
  Trajectory traj;
  traj.w_init = w0;
  traj.eta = eta;
  traj.method = Method::GradientDescent;
  traj.records.reserve(static_cast<std::size_t>(std::min(stop.max_steps + 1, 10'000'000L)));
  Vector w = w0;
  for (long k = 0;; ++k) {
    const Evaluation e = obj.evaluate(w);
    const double g = e.grad.norm();
    if (diverging(e, g)) {
      traj.stop_reason = StopReason::Diverged;
      if (!traj.records.empty()) traj.records.back().step_length.reset();
      break;
    }
    traj.records.push_back({k, e.loss, g, (w - w0).norm(), std::nullopt});
    if (wants_snapshot(snapshots, k)) traj.snapshots.push_back({k, w});
    traj.w_final = w;
    if (stop.loss_tol && e.loss <= *stop.loss_tol) {
      traj.stop_reason = StopReason::LossThreshold;
      break;
    }
    if (stop.grad_tol && g <= *stop.grad_tol) {
      traj.stop_reason = StopReason::GradThreshold;
      break;
    }
    if (k == stop.max_steps) {
      traj.stop_reason = StopReason::MaxSteps;
      break;
    }
    Vector next = w - eta * e.grad;
    if (!next.allFinite()) {
      traj.stop_reason = StopReason::Diverged;
      break;
    }
    traj.records.back().step_length = (next - w).norm();
    w = std::move(next);
  }
  if (traj.w_final.size() == 0) traj.w_final = w0;
  if (snapshots.mode != SnapshotMode::None && !traj.records.empty() &&
      (traj.snapshots.empty() || traj.snapshots.back().step != traj.records.back().step)) {
    traj.snapshots.push_back({traj.records.back().step, traj.w_final});
  }
  return traj;
}

Trajectory run_sgd(const Objective& obj, const Vector& w0, const SgdOptions& options,
                   const SnapshotPolicy& snapshots) {
  check_start(obj, w0, options.eta);
  const Index n = obj.sample_count();
  require(n > 0, "run_sgd requires a data-backed objective");
  require(options.batch_size >= 1 && options.batch_size <= n, "batch_size must lie in [1, n]");
  require(options.epochs >= 1, "epochs must be at least 1");
  Trajectory traj;
  traj.w_init = w0;
  traj.eta = options.eta;
  traj.method = Method::StochasticGradient;
  traj.sgd = options;
  Rng rng(options.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Vector w = w0;
  Vector epoch_start = w0;
  for (long epoch = 0;; ++epoch) {
    const Evaluation e = obj.evaluate(w);
    const double g = e.grad.norm();
    if (!traj.records.empty()) traj.records.back().step_length = (w - epoch_start).norm();
    if (diverging(e, g)) {
      traj.stop_reason = StopReason::Diverged;
      if (!traj.records.empty()) traj.records.back().step_length.reset();
      break;
    }
    traj.records.push_back({epoch, e.loss, g, (w - w0).norm(), std::nullopt});
    if (wants_snapshot(snapshots, epoch)) traj.snapshots.push_back({epoch, w});
    traj.w_final = w;
    if (epoch == options.epochs) {
      traj.stop_reason = StopReason::MaxSteps;
      break;
    }
    epoch_start = w;
    std::shuffle(order.begin(), order.end(), rng);
    bool blew_up = false;
    for (Index start = 0; start < n; start += options.batch_size) {
      const Index stop_at = std::min(n, start + options.batch_size);
      std::vector<Index> batch(order.begin() + start, order.begin() + stop_at);
      std::sort(batch.begin(), batch.end());
      const Evaluation be = obj.evaluate_batch(w, batch);
      w -= options.eta * be.grad;
      if (!w.allFinite()) {
        blew_up = true;
        break;
      }
    }
    if (blew_up) {
      traj.stop_reason = StopReason::Diverged;
      break;
    }
  }
  if (traj.w_final.size() == 0) traj.w_final = w0;
  return traj;
}

SmoothnessEstimate estimate_smoothness(const Trajectory& traj, const Objective& obj) {
  require(traj.snapshots.size() >= 2, "estimate_smoothness needs at least two snapshots");
  double beta = 0.0;
  bool any = false;
  Vector prev_w = traj.snapshots.front().w;
  Vector prev_g = obj.evaluate(prev_w).grad;
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i) {
    const Vector& w = traj.snapshots[i].w;
    const double dw = (w - prev_w).norm();
    const Vector g = obj.evaluate(w).grad;
    if (dw > 0.0) {
      beta = std::max(beta, (g - prev_g).norm() / dw);
      any = true;
    }
    prev_w = w;
    prev_g = g;
  }
  require(any, "estimate_smoothness: all snapshots are identical");
  return {beta, SmoothnessMethod::EmpiricalSecant};
}

Vector parameters_at(const Trajectory& traj, const Objective& obj, long step) {
  require(!traj.records.empty(), "parameters_at: empty trajectory");
  require(step >= 0 && step <= traj.records.back().step, "parameters_at: step out of range");
  if (step == traj.records.back().step && traj.w_final.size() > 0) return traj.w_final;
  for (const auto& s : traj.snapshots)
    if (s.step == step) return s.w;
  require(traj.method == Method::GradientDescent, "parameters_at: cannot replay a stochastic run");
  require(traj.w_init.size() == obj.dim(), "parameters_at: trajectory has no initial point");
  Vector w = traj.w_init;
  for (long k = 0; k < step; ++k) w -= traj.eta * obj.evaluate(w).grad;
  return w;
}

void write_jsonl(const Trajectory& traj, std::ostream& out) {
  for (const auto& r : traj.records) {
    out << "{\"step\":" << r.step << ",\"loss\":" << format_shortest(r.loss)
        << ",\"grad_norm\":" << format_shortest(r.grad_norm) << ",\"dist\":" << format_shortest(r.dist_from_init)
        << "}\n";
  }
}

std::string to_jsonl(const Trajectory& traj) {
  std::ostringstream ss;
  write_jsonl(traj, ss);
  return ss.str();
}

Trajectory read_jsonl(std::istream& in) {
  Trajectory traj;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw PreconditionError("trajectory line " + std::to_string(line_no) + ": " + ex.what());
    }
    try {
      TrajectoryRecord r;
      r.step = j.at("step").get<long>();
      r.loss = j.at("loss").get<double>();
      r.grad_norm = j.at("grad_norm").get<double>();
      r.dist_from_init = j.at("dist").get<double>();
      if (!traj.records.empty())
        require(r.step == traj.records.back().step + 1, "trajectory steps must be consecutive");
      else
        require(r.step == 0, "trajectory must start at step 0");
      traj.records.push_back(r);
    } catch (const nlohmann::json::exception& ex) {
      throw PreconditionError("trajectory line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return traj;
}

}  // namespace lgilab

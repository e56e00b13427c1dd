#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lgilab/lgi.hpp"
#include "lgilab/optimize.hpp"

namespace lgilab {

using BigInt = boost::multiprecision::cpp_int;

// Step size and smoothness of a discrete gradient-descent run.
struct StepParams {
  double eta = 0.0;
  double beta = 0.0;
};

// Gradient-flow loss gap bound at time t under exponent theta in [1/2, 1).
double rate_bound_continuous(double theta, double c, double L0, double Linf, double t);

// Gradient-descent analogue at iteration t; needs 0 < eta < 2 / beta.
double rate_bound_discrete(double theta, double c, double eta, double beta, double L0, double Linf, double t);

// Path-length bound on |w_t - w_0|; with `step` set, the discrete variant
// divided by (1 - eta beta / 2).
double distance_bound(double theta, double c, double L0, double Lt, double Linf,
                      std::optional<StepParams> step = std::nullopt);

// Radius of the parameter ball reached before the loss drops to eps * M:
// ((M - Mbar)^(1-theta) - (eps M - Mbar)^(1-theta)) / (c (1 - theta)).
double radius(double theta, double c, double M, double Mbar, double eps,
              std::optional<StepParams> step = std::nullopt);

BigInt binomial(unsigned n, unsigned k);
double log_big(const BigInt& value);

struct CoveringCount {
  std::optional<BigInt> N;  // exact for D up to kExactCoveringLimit
  long long K = 0;
  double log_N = 0.0;
};

inline constexpr int kExactCoveringLimit = 512;

// Box cover of the l2 ball: K = ceil(D / ((1+eps)^2 - 1)), N = C(K+D-1, D-1).
CoveringCount covering_count(int D, double eps);

// Exact check of C(n, k) <= (e n / k)^k using 60-digit arithmetic for e^k.
bool binomial_bound_holds(unsigned n, unsigned k);

// sqrt((|a|^2 + |b|^2) / n) * |L_psi|.
double rademacher_bound(std::span<const double> a, std::span<const double> b,
                        std::span<const double> L_psi, long n);

double truncated_loss(double residual, double l0);

struct BoundInputs {
  double theta = 0.5;
  double c = 1.0;
  double M_delta = 1.0;
  double Mbar_delta = 0.0;
  double epsilon = 0.0;
  double delta = 0.05;
  long n = 1;
  int p = 1;
  int q = 0;
  double L_ell = 1.0;
  // |L_psi| supremum; when `L_psi_per_radius` is set it is multiplied by r
  double L_psi_norm = 1.0;
  bool L_psi_per_radius = false;
  double M_ab = 1.0;
  std::optional<double> eta;
  std::optional<double> beta;
  std::optional<double> l0;
};

struct BoundTerms {
  double bias = 0.0;
  double complexity = 0.0;
  double concentration = 0.0;
  double total = 0.0;
};

struct ObservedRisk {
  double test_risk = 0.0;
  double train_loss = 0.0;
};

enum class Task { LinearRegression, KernelRegression, TwoLayerNet };

struct BoundReport {
  BoundInputs inputs;
  double r = 0.0;
  BoundTerms terms;
  std::optional<double> proxy_fig3b;
  std::optional<ObservedRisk> observed;
  std::optional<Task> task;
  std::optional<double> epsilon_requested;
  std::optional<long> stop_step;
  std::vector<std::string> notes;
};

BoundReport generalization_bound(const BoundInputs& inputs);

Task parse_task(std::string_view name);
std::string task_name(Task task);

struct TaskBoundOptions {
  double epsilon = 0.0;
  double delta = 0.05;
  double l0 = 1.0;
  int width = 0;  // hidden width for the two-layer task
  // Replaces the fitted (theta, c), e.g. by the kernel PL constant
  // sqrt(2 lambda_min(K) / n) with theta = 1/2.
  std::optional<std::pair<double, double>> lgi_override;
  std::optional<StepParams> step;
};

// First record whose loss is at most epsilon * L0, if any.
std::optional<long> stopping_index(const Trajectory& traj, double epsilon);

// Instantiates the generalization bound for a task from an observed run:
// M = initial loss, Mbar = lowest observed loss, (theta, c) from the
// converged series (its certified modulus).
// If the trajectory never reaches epsilon * L0, the final iterate is used
// and epsilon is raised to final loss / L0.
BoundReport compose_task_bound(Task task, const Trajectory& traj, long n, const LgiEstimateSeries& lgi,
                               const TaskBoundOptions& options);

// Mean truncated squared loss of the model's predictions on a dataset.
double empirical_truncated_risk(const Objective& obj, const Vector& w, const Dataset& held_out, double l0);

double proxy_bound(double theta, double c, long n, int width);

std::string bound_report_json(const BoundReport& report);
BoundReport parse_bound_report(std::string_view json);

}  // namespace lgilab

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgilab/optimize.hpp"

namespace lgilab {

enum class Finalization { Last, TailAverage };
enum class Verdict { Converged, NotConverged };

struct LgiOptions {
  std::optional<double> loss_star;  // none: minimum loss over the trajectory
  long k0 = 50;
  long s = 1;
  Finalization finalization = Finalization::TailAverage;
  int window = 5;
  double rel_tol = 0.05;
};

struct LgiEntry {
  long k = 0;  // number of retained points used by the fit
  double theta = 0.0;
  double c = 0.0;
};

struct LgiEstimateSeries {
  std::vector<LgiEntry> entries;
  double theta_star = 0.0;
  double c_star = 0.0;
  Verdict verdict = Verdict::NotConverged;
  double loss_star = 0.0;
  bool loss_star_auto = false;
  // Trajectory indices left out of every fit: the argmin under the
  // automatic loss_star, any point with zero excess loss, and stationary
  // points with zero gradient.
  std::vector<long> dropped_indices;
  Finalization finalization = Finalization::TailAverage;
  // Largest modulus certified with exponent theta_star over all retained
  // points: min_i g_i / (L_i - L*)^theta_star.
  double c_certified = 0.0;
  // Whether theta_star lies in [1/2, 1) with positive modulus; the lower
  // end admits 1e-10 of fitting round-off.
  bool in_definition_range = false;
};

struct VerdictResult {
  Verdict verdict = Verdict::NotConverged;
  double theta_star = 0.0;
  double c_star = 0.0;
};

Finalization parse_finalization(std::string_view name);
std::string finalization_name(Finalization f);
std::string verdict_name(Verdict v);

// Finite-sample test: for k = k0, k0+s, ... (while k does not exceed the
// retained count) and once more over all retained points, fits the OLS
// slope theta_k of log g on log(L - L*) over the first k retained points
// and sets c_k = min_i g_i / (L_i - L*)^theta_k over the same points.
LgiEstimateSeries estimate(std::span<const double> loss, std::span<const double> grad_norm,
                           const LgiOptions& options);
LgiEstimateSeries estimate(const Trajectory& traj, const LgiOptions& options);

VerdictResult verdict(const std::vector<LgiEntry>& entries, int window, double rel_tol,
                      Finalization finalization = Finalization::TailAverage);

struct AggregateStats {
  double theta_mean = 0.0;
  double theta_std = 0.0;
  double c_mean = 0.0;
  double c_std = 0.0;
  std::size_t count = 0;
};

// Sample mean and standard deviation (divisor n - 1) of the final constants
// of converged series.
AggregateStats aggregate(std::span<const LgiEstimateSeries> series);

// Mean and sample standard deviation of arbitrary values.
std::pair<double, double> mean_std(std::span<const double> values);
double median(std::vector<double> values);

// Rewrites a certificate with exponent below 1/2 as one with exponent 1/2:
// for excess losses at most `max_excess`, g >= c e^theta implies
// g >= c max_excess^(theta - 1/2) e^(1/2).
std::pair<double, double> promote_to_half(double theta, double c, double max_excess);

// CSV with header "k,theta,c"; the last row carries k=final and the
// finalized constants.
void write_series_csv(const LgiEstimateSeries& series, std::ostream& out);
std::string series_csv(const LgiEstimateSeries& series);

struct SeriesCsv {
  std::vector<LgiEntry> entries;
  double theta_star = 0.0;
  double c_star = 0.0;
};
SeriesCsv read_series_csv(std::istream& in);

}  // namespace lgilab

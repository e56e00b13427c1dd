#include "lgilab/lgi.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lgilab/error.hpp"
#include "lgilab/format.hpp"

namespace lgilab {

namespace {

// Running least-squares state with Welford-style centred moments.
struct RunningFit {
  double count = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;

  void add(double x, double y) {
    count += 1.0;
    const double dx = x - mean_x;
    mean_x += dx / count;
    mean_y += (y - mean_y) / count;
    sxx += dx * (x - mean_x);
    sxy += dx * (y - mean_y);
  }
};

double max_relative_deviation(const std::vector<double>& values, double mean) {
  const double scale = std::abs(mean);
  double worst = 0.0;
  for (double v : values) {
    const double dev = std::abs(v - mean);
    if (scale == 0.0) {
      if (dev > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, dev / scale);
  }
  return worst;
}

}  // namespace

Finalization parse_finalization(std::string_view name) {
  if (name == "last") return Finalization::Last;
  if (name == "tail-average") return Finalization::TailAverage;
  throw ConfigError("unknown finalization rule '" + std::string(name) + "'");
}

std::string finalization_name(Finalization f) {
  return f == Finalization::Last ? "last" : "tail-average";
}

std::string verdict_name(Verdict v) { return v == Verdict::Converged ? "converged" : "not-converged"; }

LgiEstimateSeries estimate(std::span<const double> loss, std::span<const double> grad_norm,
                           const LgiOptions& options) {
  require(loss.size() == grad_norm.size(), "estimate: loss and gradient series differ in length");
  require(options.k0 >= 2, "estimate: K0 must be at least 2");
  require(options.s >= 1, "estimate: s must be at least 1");
  require(!loss.empty(), "estimate: empty trajectory");
  for (std::size_t i = 0; i < loss.size(); ++i)
    require(std::isfinite(loss[i]) && std::isfinite(grad_norm[i]) && grad_norm[i] >= 0.0,
            "estimate: non-finite or negative trajectory value at index " + std::to_string(i));

  LgiEstimateSeries series;
  series.finalization = options.finalization;
  series.loss_star_auto = !options.loss_star.has_value();
  series.loss_star = options.loss_star ? *options.loss_star : *std::min_element(loss.begin(), loss.end());

  std::vector<double> log_excess, log_grad;
  log_excess.reserve(loss.size());
  log_grad.reserve(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const double excess = loss[i] - series.loss_star;
    if (excess < 0.0)
      throw PreconditionError("estimate: negative excess loss at index " + std::to_string(i) +
                              " (loss_star too large)");
    if (excess == 0.0 || grad_norm[i] == 0.0) {
      series.dropped_indices.push_back(static_cast<long>(i));
      continue;
    }
    log_excess.push_back(std::log(excess));
    log_grad.push_back(std::log(grad_norm[i]));
  }
  const auto retained = static_cast<long>(log_excess.size());
  require(retained >= options.k0, "estimate: only " + std::to_string(retained) +
                                      " retained points, fewer than K0 = " + std::to_string(options.k0));

  RunningFit fit;
  long consumed = 0;
  const auto fit_through = [&](long k) {
    for (; consumed < k; ++consumed)
      fit.add(log_excess[static_cast<std::size_t>(consumed)], log_grad[static_cast<std::size_t>(consumed)]);
    if (!(fit.sxx > 0.0))
      throw PreconditionError("estimate: fewer than two distinct log-loss values among the first " +
                              std::to_string(k) + " points");
    const double theta = fit.sxy / fit.sxx;
    double log_c = std::numeric_limits<double>::infinity();
    for (long i = 0; i < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      log_c = std::min(log_c, log_grad[u] - theta * log_excess[u]);
    }
    series.entries.push_back({k, theta, std::exp(log_c)});
  };
  for (long k = options.k0; k < retained; k += options.s) fit_through(k);
  fit_through(retained);

  const int window = std::min<int>(options.window, static_cast<int>(series.entries.size()));
  const VerdictResult v = verdict(series.entries, std::max(window, 1), options.rel_tol, options.finalization);
  series.verdict = v.verdict;
  series.theta_star = v.theta_star;
  series.c_star = v.c_star;

  double log_cert = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_excess.size(); ++i)
    log_cert = std::min(log_cert, log_grad[i] - series.theta_star * log_excess[i]);
  series.c_certified = std::exp(log_cert);
  series.in_definition_range = series.theta_star >= 0.5 - 1e-10 && series.theta_star < 1.0 && series.c_star > 0.0;
  return series;
}

LgiEstimateSeries estimate(const Trajectory& traj, const LgiOptions& options) {
  const auto loss = traj.losses();
  const auto grad = traj.grad_norms();
  return estimate(loss, grad, options);
}

VerdictResult verdict(const std::vector<LgiEntry>& entries, int window, double rel_tol,
                      Finalization finalization) {
  require(!entries.empty(), "verdict: empty series");
  require(window >= 1 && static_cast<std::size_t>(window) <= entries.size(),
          "verdict: window exceeds the number of entries");
  std::vector<double> thetas, cs;
  for (std::size_t i = entries.size() - static_cast<std::size_t>(window); i < entries.size(); ++i) {
    thetas.push_back(entries[i].theta);
    cs.push_back(entries[i].c);
  }
  const double theta_mean = std::accumulate(thetas.begin(), thetas.end(), 0.0) / window;
  const double c_mean = std::accumulate(cs.begin(), cs.end(), 0.0) / window;
  VerdictResult out;
  // a single entry carries no evidence of convergence
  const bool stable = window >= 2 && max_relative_deviation(thetas, theta_mean) < rel_tol &&
                      max_relative_deviation(cs, c_mean) < rel_tol;
  out.verdict = stable ? Verdict::Converged : Verdict::NotConverged;
  if (finalization == Finalization::TailAverage) {
    out.theta_star = theta_mean;
    out.c_star = c_mean;
  } else {
    out.theta_star = entries.back().theta;
    out.c_star = entries.back().c;
  }
  return out;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  require(!values.empty(), "mean_std: no values");
  // Shifted by the first value so that equal inputs give exactly zero spread.
  const double n = static_cast<double>(values.size());
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double offset = sum / n;
  const double mean = shift + offset;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

AggregateStats aggregate(std::span<const LgiEstimateSeries> series) {
  require(series.size() >= 2, "aggregate: need at least two series");
  std::vector<double> thetas, cs;
  for (const auto& s : series) {
    require(s.verdict == Verdict::Converged, "aggregate: a member series did not converge");
    thetas.push_back(s.theta_star);
    cs.push_back(s.c_star);
  }
  AggregateStats out;
  std::tie(out.theta_mean, out.theta_std) = mean_std(thetas);
  std::tie(out.c_mean, out.c_std) = mean_std(cs);
  out.count = series.size();
  return out;
}

std::pair<double, double> promote_to_half(double theta, double c, double max_excess) {
  require(max_excess > 0.0, "promote_to_half: max_excess must be positive");
  if (theta >= 0.5) return {theta, c};
  return {0.5, c * std::pow(max_excess, theta - 0.5)};
}

void write_series_csv(const LgiEstimateSeries& series, std::ostream& out) {
  out << "k,theta,c\n";
  for (const auto& e : series.entries)
    out << e.k << ',' << format_shortest(e.theta) << ',' << format_shortest(e.c) << '\n';
  out << "final," << format_shortest(series.theta_star) << ',' << format_shortest(series.c_star) << '\n';
}

std::string series_csv(const LgiEstimateSeries& series) {
  std::ostringstream ss;
  write_series_csv(series, ss);
  return ss.str();
}

SeriesCsv read_series_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "k,theta,c", "series csv: bad header");
  SeriesCsv out;
  bool saw_final = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    require(!saw_final, "series csv: rows after the final row");
    std::stringstream ss(line);
    std::string k, theta, c;
    require(std::getline(ss, k, ',') && std::getline(ss, theta, ',') && std::getline(ss, c),
            "series csv: malformed row");
    if (k == "final") {
      out.theta_star = parse_double(theta);
      out.c_star = parse_double(c);
      saw_final = true;
    } else {
      out.entries.push_back({std::stol(k), parse_double(theta), parse_double(c)});
    }
  }
  require(saw_final, "series csv: missing final row");
  return out;
}

}  // namespace lgilab

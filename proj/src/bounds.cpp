#include "lgilab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <json.hpp>

#include "lgilab/error.hpp"

namespace lgilab {

namespace {

using Ordered = nlohmann::ordered_json;

void check_theta_c(double theta, double c) {
  require(std::isfinite(theta) && theta >= 0.5 && theta < 1.0, "theta must lie in [1/2, 1)");
  require(std::isfinite(c) && c > 0.0, "c must be positive");
}

double descent_factor(double eta, double beta) {
  require(eta > 0.0 && beta >= 0.0 && std::isfinite(eta) && std::isfinite(beta),
          "eta must be positive and beta non-negative");
  require(eta * beta < 2.0, "eta must be below 2 / beta");
  return eta - eta * eta * beta / 2.0;
}

double decay(double theta, double c2h, double gap, double t) {
  if (gap == 0.0) return 0.0;
  if (theta == 0.5) return std::exp(-c2h * t) * gap;
  const double power = 2.0 * theta - 1.0;
  const double M = c2h * power * std::pow(gap, power);
  return std::exp(-std::log1p(M * t) / power) * gap;
}

double path_divisor(const std::optional<StepParams>& step) {
  if (!step) return 1.0;
  descent_factor(step->eta, step->beta);
  return 1.0 - step->eta * step->beta / 2.0;
}

Ordered optional_number(const std::optional<double>& v) { return v ? Ordered(*v) : Ordered(nullptr); }

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

double rate_bound_continuous(double theta, double c, double L0, double Linf, double t) {
  check_theta_c(theta, c);
  require(L0 >= Linf, "L0 must be at least Linf");
  require(t >= 0.0, "t must be non-negative");
  return decay(theta, c * c, L0 - Linf, t);
}

double rate_bound_discrete(double theta, double c, double eta, double beta, double L0, double Linf, double t) {
  check_theta_c(theta, c);
  const double h = descent_factor(eta, beta);
  require(L0 >= Linf, "L0 must be at least Linf");
  require(t >= 0.0, "t must be non-negative");
  return decay(theta, c * c * h, L0 - Linf, t);
}

double distance_bound(double theta, double c, double L0, double Lt, double Linf, std::optional<StepParams> step) {
  require(std::isfinite(theta) && theta < 1.0, "theta must be below 1");
  require(c > 0.0, "c must be positive");
  require(L0 >= Lt && Lt >= Linf, "distance_bound requires L0 >= Lt >= Linf");
  const double e = 1.0 - theta;
  const double len = (std::pow(L0 - Linf, e) - std::pow(Lt - Linf, e)) / (c * e);
  return len / path_divisor(step);
}

double radius(double theta, double c, double M, double Mbar, double eps, std::optional<StepParams> step) {
  require(std::isfinite(theta) && theta < 1.0, "theta must be below 1");
  require(c > 0.0, "c must be positive");
  require(eps >= 0.0 && eps <= 1.0, "epsilon must lie in [0, 1]");
  require(M >= Mbar, "radius requires M >= Mbar");
  double reached = eps * M - Mbar;
  // one rounding step below zero is the boundary case eps M == Mbar
  if (reached < 0.0 && reached >= -1e-12 * std::max(std::abs(M), std::abs(Mbar))) reached = 0.0;
  require(reached >= 0.0, "radius requires epsilon * M >= Mbar");
  const double e = 1.0 - theta;
  const double r = (std::pow(M - Mbar, e) - std::pow(reached, e)) / (c * e);
  return std::max(0.0, r) / path_divisor(step);
}

BigInt binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (unsigned i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

double log_big(const BigInt& value) {
  require(value > 0, "log_big: value must be positive");
  const auto bits = boost::multiprecision::msb(value);
  if (bits < 1000) return std::log(value.convert_to<double>());
  const auto shift = bits - 60;
  const BigInt top = value >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

CoveringCount covering_count(int D, double eps) {
  require(D >= 1, "covering_count: D must be positive");
  require(eps > 0.0 && std::isfinite(eps), "covering_count: eps must be positive");
  const double ratio = D / ((1.0 + eps) * (1.0 + eps) - 1.0);
  const double nearest = std::round(ratio);
  // eps = sqrt(2) - 1 makes the ratio exactly D in real arithmetic; snap
  // values that only miss an integer by rounding error
  const double K = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio) ? nearest : std::ceil(ratio);
  require(K < 9e15, "covering_count: eps too small");
  CoveringCount out;
  out.K = std::max(1LL, static_cast<long long>(K));
  const auto top = static_cast<double>(out.K) + D - 1;
  if (D <= kExactCoveringLimit && top < 4e9) {
    out.N = binomial(static_cast<unsigned>(out.K + D - 1), static_cast<unsigned>(D - 1));
    out.log_N = log_big(*out.N);
  } else {
    out.log_N = std::lgamma(top + 1.0) - std::lgamma(static_cast<double>(D)) -
                std::lgamma(static_cast<double>(out.K) + 1.0);
  }
  return out;
}

bool binomial_bound_holds(unsigned n, unsigned k) {
  require(k >= 1 && k <= n, "binomial_bound_holds requires 1 <= k <= n");
  using Dec = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<60>>;
  const BigInt lhs = binomial(n, k) * boost::multiprecision::pow(BigInt(k), k);
  const BigInt nk = boost::multiprecision::pow(BigInt(n), k);
  const Dec rhs = boost::multiprecision::exp(Dec(k)) * Dec(nk);
  return Dec(lhs) <= rhs;
}

double rademacher_bound(std::span<const double> a, std::span<const double> b, std::span<const double> L_psi,
                        long n) {
  require(n >= 1, "rademacher_bound: n must be positive");
  require(L_psi.size() == a.size() + b.size(), "rademacher_bound: L_psi must have p + q entries");
  double ab = 0.0, lp = 0.0;
  for (double v : a) {
    require(v >= 0.0, "rademacher_bound: entries must be non-negative");
    ab += v * v;
  }
  for (double v : b) {
    require(v >= 0.0, "rademacher_bound: entries must be non-negative");
    ab += v * v;
  }
  for (double v : L_psi) {
    require(v >= 0.0, "rademacher_bound: entries must be non-negative");
    lp += v * v;
  }
  return std::sqrt(ab / static_cast<double>(n)) * std::sqrt(lp);
}

double truncated_loss(double residual, double l0) {
  require(l0 > 0.0, "truncated_loss: l0 must be positive");
  return std::min(residual * residual / 2.0, l0 / 2.0);
}

BoundReport generalization_bound(const BoundInputs& in) {
  check_theta_c(in.theta, in.c);
  require(in.delta > 0.0 && in.delta < 1.0, "delta must lie in (0, 1)");
  require(in.n >= 1, "n must be positive");
  require(in.p >= 0 && in.q >= 0, "p and q must be non-negative");
  require(in.L_ell >= 0.0 && in.L_psi_norm >= 0.0 && in.M_ab >= 0.0, "Lipschitz and range constants must be non-negative");
  require(std::isfinite(in.M_delta) && std::isfinite(in.Mbar_delta), "loss bounds must be finite");
  require(in.eta.has_value() == in.beta.has_value(), "eta and beta must be given together");
  if (in.l0) require(*in.l0 > 0.0, "l0 must be positive");
  std::optional<StepParams> step;
  if (in.eta) step = StepParams{*in.eta, *in.beta};

  BoundReport report;
  report.inputs = in;
  report.r = radius(in.theta, in.c, in.M_delta, in.Mbar_delta, in.epsilon, step);
  const double n = static_cast<double>(in.n);
  const double l_psi = in.L_psi_per_radius ? in.L_psi_norm * report.r : in.L_psi_norm;
  auto& t = report.terms;
  t.bias = in.l0 ? std::sqrt(2.0 * *in.l0 * in.epsilon * in.M_delta) : in.epsilon * in.M_delta;
  t.complexity = 2.0 * std::sqrt(2.0) * report.r * in.L_ell * l_psi / std::sqrt(n);
  t.concentration = 3.0 * in.M_ab * std::sqrt((3.0 * (in.p + in.q) + std::log(4.0 / in.delta)) / (2.0 * n));
  t.total = t.bias + t.complexity + t.concentration;
  return report;
}

Task parse_task(std::string_view name) {
  if (name == "linear-regression") return Task::LinearRegression;
  if (name == "kernel-regression") return Task::KernelRegression;
  if (name == "two-layer-nn") return Task::TwoLayerNet;
  throw ConfigError("unknown bound task '" + std::string(name) + "'");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::LinearRegression: return "linear-regression";
    case Task::KernelRegression: return "kernel-regression";
    case Task::TwoLayerNet: return "two-layer-nn";
  }
  return "unknown";
}

std::optional<long> stopping_index(const Trajectory& traj, double epsilon) {
  require(!traj.records.empty(), "stopping_index: empty trajectory");
  const double target = epsilon * traj.records.front().loss;
  for (const auto& r : traj.records)
    if (r.loss <= target) return r.step;
  return std::nullopt;
}

double proxy_bound(double theta, double c, long n, int width) {
  require(c > 0.0 && theta < 1.0, "proxy needs c > 0 and theta < 1");
  require(n >= 1 && width >= 1, "proxy needs n >= 1 and width >= 1");
  const double nn = static_cast<double>(n);
  return 1.0 / (c * c * (1.0 - theta) * (1.0 - theta) * std::sqrt(nn)) + std::sqrt(width / nn);
}

BoundReport compose_task_bound(Task task, const Trajectory& traj, long n, const LgiEstimateSeries& lgi,
                               const TaskBoundOptions& options) {
  require(!traj.records.empty(), "compose_task_bound: empty trajectory");
  require(options.epsilon >= 0.0 && options.epsilon <= 1.0, "epsilon must lie in [0, 1]");
  require(options.l0 > 0.0, "l0 must be positive");
  const double M = traj.records.front().loss;
  require(M > 0.0, "compose_task_bound: initial loss is zero");
  double Mbar = M;
  for (const auto& r : traj.records) Mbar = std::min(Mbar, r.loss);

  std::vector<std::string> notes;
  double theta = 0.0, c = 0.0;
  if (options.lgi_override) {
    std::tie(theta, c) = *options.lgi_override;
    notes.push_back("theta and c supplied externally instead of the trajectory fit");
  } else {
    require(lgi.verdict == Verdict::Converged, "compose_task_bound: LGI series did not converge");
    require(lgi.loss_star <= Mbar, "compose_task_bound: LGI reference loss exceeds the observed minimum");
    theta = lgi.theta_star;
    c = lgi.c_certified;
    require(theta < 1.0 && c > 0.0, "compose_task_bound: fitted constants outside theta < 1, c > 0");
    if (theta < 0.5) {
      std::tie(theta, c) = promote_to_half(theta, c, M - lgi.loss_star);
      notes.push_back("fitted exponent below 1/2 rewritten as an exponent-1/2 certificate");
    }
  }

  const auto hit = stopping_index(traj, options.epsilon);
  const long stop_step = hit ? *hit : traj.records.back().step;
  const double reached = traj.records[static_cast<std::size_t>(stop_step)].loss;
  if (!hit) notes.push_back("loss never reached epsilon * L0; the final iterate is used");

  BoundInputs in;
  in.theta = theta;
  in.c = c;
  in.M_delta = M;
  in.Mbar_delta = Mbar;
  in.epsilon = reached / M;
  in.delta = options.delta;
  in.n = n;
  in.l0 = options.l0;
  in.L_ell = std::sqrt(options.l0);
  in.M_ab = options.l0;
  if (options.step) {
    in.eta = options.step->eta;
    in.beta = options.step->beta;
  }
  switch (task) {
    case Task::LinearRegression:
    case Task::KernelRegression:
      in.p = 1;
      in.q = 0;
      in.L_psi_norm = std::sqrt(2.0);
      notes.push_back("|L_psi| = sqrt(2) as in the x + y representation; f(w,x) = w'x alone has |L_psi| = 1");
      break;
    case Task::TwoLayerNet:
      require(options.width >= 1, "two-layer task needs the hidden width");
      in.p = options.width;
      in.q = options.width;
      in.L_psi_norm = std::sqrt(2.0);
      in.L_psi_per_radius = true;
      break;
  }
  BoundReport report = generalization_bound(in);
  report.task = task;
  report.epsilon_requested = options.epsilon;
  report.stop_step = stop_step;
  report.notes = std::move(notes);
  if (task == Task::TwoLayerNet && lgi.c_star > 0.0 && lgi.theta_star < 1.0)
    report.proxy_fig3b = proxy_bound(lgi.theta_star, lgi.c_star, n, options.width);
  return report;
}

double empirical_truncated_risk(const Objective& obj, const Vector& w, const Dataset& held_out, double l0) {
  require(held_out.labelled() && held_out.n() > 0, "held-out set needs labels");
  double total = 0.0;
  for (Index i = 0; i < held_out.n(); ++i)
    total += truncated_loss(held_out.Y(i) - obj.predict(w, held_out.X.row(i).transpose()), l0);
  return total / static_cast<double>(held_out.n());
}

std::string bound_report_json(const BoundReport& report) {
  const auto& in = report.inputs;
  Ordered j;
  j["task"] = report.task ? Ordered(task_name(*report.task)) : Ordered(nullptr);
  Ordered inputs;
  inputs["theta"] = in.theta;
  inputs["c"] = in.c;
  inputs["M_delta"] = in.M_delta;
  inputs["Mbar_delta"] = in.Mbar_delta;
  inputs["loss_bounds"] = "empirical";
  inputs["epsilon"] = in.epsilon;
  inputs["delta"] = in.delta;
  inputs["n"] = in.n;
  inputs["p"] = in.p;
  inputs["q"] = in.q;
  inputs["L_ell"] = in.L_ell;
  inputs["L_psi_norm"] = in.L_psi_norm;
  inputs["L_psi_per_radius"] = in.L_psi_per_radius;
  inputs["M_ab"] = in.M_ab;
  inputs["eta"] = optional_number(in.eta);
  inputs["beta"] = optional_number(in.beta);
  inputs["l0"] = optional_number(in.l0);
  j["inputs"] = inputs;
  j["epsilon_requested"] = optional_number(report.epsilon_requested);
  j["stop_step"] = report.stop_step ? Ordered(*report.stop_step) : Ordered(nullptr);
  j["r"] = report.r;
  Ordered terms;
  terms["bias"] = report.terms.bias;
  terms["complexity"] = report.terms.complexity;
  terms["concentration"] = report.terms.concentration;
  terms["total"] = report.terms.total;
  j["terms"] = terms;
  j["proxy_fig3b"] = optional_number(report.proxy_fig3b);
  if (report.observed) {
    Ordered obs;
    obs["test_risk"] = report.observed->test_risk;
    obs["train_loss"] = report.observed->train_loss;
    j["observed"] = obs;
  } else {
    j["observed"] = nullptr;
  }
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

BoundReport parse_bound_report(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BoundReport r;
    const auto& in = j.at("inputs");
    r.inputs.theta = in.at("theta").get<double>();
    r.inputs.c = in.at("c").get<double>();
    r.inputs.M_delta = in.at("M_delta").get<double>();
    r.inputs.Mbar_delta = in.at("Mbar_delta").get<double>();
    r.inputs.epsilon = in.at("epsilon").get<double>();
    r.inputs.delta = in.at("delta").get<double>();
    r.inputs.n = in.at("n").get<long>();
    r.inputs.p = in.at("p").get<int>();
    r.inputs.q = in.at("q").get<int>();
    r.inputs.L_ell = in.at("L_ell").get<double>();
    r.inputs.L_psi_norm = in.at("L_psi_norm").get<double>();
    r.inputs.L_psi_per_radius = in.at("L_psi_per_radius").get<bool>();
    r.inputs.M_ab = in.at("M_ab").get<double>();
    r.inputs.eta = read_optional(in, "eta");
    r.inputs.beta = read_optional(in, "beta");
    r.inputs.l0 = read_optional(in, "l0");
    if (!j.at("task").is_null()) r.task = parse_task(j.at("task").get<std::string>());
    r.epsilon_requested = read_optional(j, "epsilon_requested");
    if (!j.at("stop_step").is_null()) r.stop_step = j.at("stop_step").get<long>();
    r.r = j.at("r").get<double>();
    const auto& t = j.at("terms");
    r.terms = {t.at("bias").get<double>(), t.at("complexity").get<double>(), t.at("concentration").get<double>(),
               t.at("total").get<double>()};
    r.proxy_fig3b = read_optional(j, "proxy_fig3b");
    if (!j.at("observed").is_null())
      r.observed = ObservedRisk{j.at("observed").at("test_risk").get<double>(),
                                j.at("observed").at("train_loss").get<double>()};
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw PreconditionError(std::string("bound report: ") + ex.what());
  }
}

}  // namespace lgilab

#include "lgilab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "lgilab/error.hpp"
#include "lgilab/format.hpp"
#include "lgilab/parallel.hpp"
#include "lgilab/random.hpp"
#include "lgilab/spectra.hpp"

namespace lgilab {

namespace {

using Json = nlohmann::json;

enum SeedStream : std::uint64_t { kTrainData = 1, kTarget = 2, kFlip = 3, kTestData = 4, kInit = 5, kSgd = 6 };

// Typed access to one JSON object with path-qualified errors.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_ + ": " + message); }
  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(path_ + "." + key + ": " + message);
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) fail(it.key(), "unknown field");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const char* key) const {
    if (!has(key)) fail(key, "required field missing");
    return j_.at(key);
  }

  Node child(const char* key) const { return Node(raw(key), path_ + "." + key); }

  double number(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }
  std::optional<double> maybe_number(const char* key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  long integer(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long>();
  }
  long integer(const char* key, long fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string text(const char* key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  std::vector<double> numbers(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  // Converts a library parse error (unknown enum name) into a field error.
  template <typename F>
  auto parse(const char* key, F&& parser) const {
    const std::string name = text(key);
    try {
      return parser(name);
    } catch (const ConfigError& ex) {
      fail(key, ex.what());
    }
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
};

ObjectiveSpec parse_objective(const Node& node) {
  node.allow({"kind", "k", "layers", "width", "trainable", "kernel"});
  ObjectiveSpec spec;
  spec.kind = node.parse("kind", parse_objective_kind);
  switch (spec.kind) {
    case ObjectiveKind::PowerLoss:
      spec.power = static_cast<int>(node.integer("k"));
      if (spec.power < 1) node.fail("k", "must be at least 1");
      break;
    case ObjectiveKind::ProductLoss:
      spec.layers = static_cast<int>(node.integer("layers"));
      if (spec.layers < 1) node.fail("layers", "must be at least 1");
      break;
    case ObjectiveKind::TwoLayerRelu:
      spec.width = static_cast<int>(node.integer("width"));
      if (spec.width < 1) node.fail("width", "must be at least 1");
      if (node.has("trainable")) spec.trainable = node.parse("trainable", parse_trainable_layers);
      break;
    case ObjectiveKind::KernelRegression: {
      const Node k = node.child("kernel");
      k.allow({"family", "rho", "beta"});
      spec.kernel.family = k.parse("family", parse_kernel_family);
      spec.kernel.rho = k.number("rho", 1.0);
      spec.kernel.beta = k.number("beta", 2.0);
      break;
    }
    default:
      break;
  }
  return spec;
}

Matrix parse_matrix(const Node& parent, const char* key) {
  const Json& v = parent.raw(key);
  const std::string path = parent.path() + "." + key;
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  Matrix M(rows, rows);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != rows)
      throw ConfigError(path + "[" + std::to_string(i) + "]: expected a row of length " + std::to_string(rows));
    for (Index j = 0; j < rows; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number())
        throw ConfigError(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]: expected a number");
      M(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return M;
}

DataConfig parse_data(const Node& node) {
  node.allow({"kind", "n", "d", "entries", "entry_std", "normalize", "sigma", "target", "flip_ratio", "test_n",
              "gamma0", "gamma1"});
  DataConfig cfg;
  cfg.spec.kind = node.parse("kind", parse_data_kind);
  cfg.spec.n = node.integer("n");
  cfg.spec.d = node.integer("d");
  if (cfg.spec.n < 1) node.fail("n", "must be at least 1");
  if (cfg.spec.d < 1) node.fail("d", "must be at least 1");
  if (node.has("entries")) cfg.spec.entries = node.parse("entries", parse_entry_law);
  cfg.spec.entry_std = node.maybe_number("entry_std");
  if (cfg.spec.entry_std && *cfg.spec.entry_std <= 0.0) node.fail("entry_std", "must be positive");
  cfg.spec.normalize = node.boolean("normalize", false);
  if (node.has("sigma")) {
    cfg.spec.sigma = parse_matrix(node, "sigma");
    if (cfg.spec.sigma->rows() != cfg.spec.d) node.fail("sigma", "must be d x d");
  }
  if (node.has("target")) {
    const Node t = node.child("target");
    t.allow({"kind", "link", "w_star", "norm", "binary"});
    TargetSpec target;
    const std::string kind = t.text("kind", "linear");
    if (kind == "linear") {
      target.kind = TargetKind::Linear;
      if (t.has("link")) t.fail("link", "only lipschitz-link targets take a link");
    } else if (kind == "lipschitz-link") {
      target.kind = TargetKind::LipschitzLink;
      target.link = t.parse("link", parse_link);
    } else {
      t.fail("kind", "unknown target kind '" + kind + "'");
    }
    if (t.has("w_star")) {
      target.w_star = t.numbers("w_star");
      if (static_cast<Index>(target.w_star.size()) != cfg.spec.d) t.fail("w_star", "must have d entries");
      if (t.has("norm")) t.fail("norm", "give either w_star or norm");
    }
    target.norm = t.number("norm", 1.0);
    if (target.norm < 0.0) t.fail("norm", "must be non-negative");
    target.binary = t.boolean("binary", false);
    cfg.target = target;
  }
  cfg.flip_ratio = node.number("flip_ratio", 0.0);
  if (cfg.flip_ratio < 0.0 || cfg.flip_ratio > 1.0) node.fail("flip_ratio", "must lie in [0, 1]");
  if (cfg.flip_ratio > 0.0 && !(cfg.target && cfg.target->binary))
    node.fail("flip_ratio", "label flipping needs a binary target");
  cfg.test_n = node.integer("test_n", 0);
  if (cfg.test_n < 0) node.fail("test_n", "must be non-negative");
  cfg.gamma0 = node.maybe_number("gamma0");
  cfg.gamma1 = node.maybe_number("gamma1");
  return cfg;
}

InitSpec parse_init(const Node& node) {
  node.allow({"kind", "value", "std", "values"});
  InitSpec init;
  const std::string kind = node.text("kind");
  if (kind == "constant") {
    init.kind = InitKind::Constant;
    init.value = node.number("value");
  } else if (kind == "gaussian") {
    init.kind = InitKind::Gaussian;
    init.stddev = node.number("std");
    if (init.stddev < 0.0) node.fail("std", "must be non-negative");
  } else if (kind == "values") {
    init.kind = InitKind::Values;
    init.values = node.numbers("values");
  } else if (kind == "network") {
    init.kind = InitKind::Network;
  } else {
    node.fail("kind", "unknown init kind '" + kind + "'");
  }
  return init;
}

OptimizerConfig parse_optimizer(const Node& node) {
  node.allow({"method", "eta", "max_steps", "loss_tol", "grad_tol", "batch_size", "epochs", "seeds", "init"});
  OptimizerConfig cfg;
  const std::string method = node.text("method", "gd");
  if (method == "gd") {
    cfg.method = Method::GradientDescent;
    cfg.stop.max_steps = node.integer("max_steps");
    if (cfg.stop.max_steps < 1) node.fail("max_steps", "must be at least 1");
    if (node.has("batch_size")) node.fail("batch_size", "only used by sgd");
    if (node.has("epochs")) node.fail("epochs", "only used by sgd");
  } else if (method == "sgd") {
    cfg.method = Method::StochasticGradient;
    cfg.batch_size = node.integer("batch_size");
    cfg.epochs = node.integer("epochs");
    if (cfg.batch_size < 1) node.fail("batch_size", "must be at least 1");
    if (cfg.epochs < 1) node.fail("epochs", "must be at least 1");
    if (node.has("max_steps")) node.fail("max_steps", "sgd runs use epochs");
  } else {
    node.fail("method", "expected 'gd' or 'sgd'");
  }
  cfg.eta = node.number("eta");
  if (cfg.eta <= 0.0) node.fail("eta", "must be positive");
  cfg.stop.loss_tol = node.maybe_number("loss_tol");
  cfg.stop.grad_tol = node.maybe_number("grad_tol");
  const Json& seeds = node.raw("seeds");
  if (!seeds.is_array() || seeds.empty()) node.fail("seeds", "expected a non-empty array of seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const bool ok = seeds[i].is_number_unsigned() || (seeds[i].is_number_integer() && seeds[i].get<std::int64_t>() >= 0);
    if (!ok) node.fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
    cfg.seeds.push_back(seeds[i].get<std::uint64_t>());
  }
  std::set<std::uint64_t> unique(cfg.seeds.begin(), cfg.seeds.end());
  if (unique.size() != cfg.seeds.size()) node.fail("seeds", "seeds must be distinct");
  cfg.init = parse_init(node.child("init"));
  return cfg;
}

LgiOptions parse_lgi(const Node& node) {
  node.allow({"k0", "s", "loss_star", "finalization", "window", "rel_tol"});
  LgiOptions o;
  o.k0 = node.integer("k0", o.k0);
  o.s = node.integer("s", o.s);
  if (o.k0 < 2) node.fail("k0", "must be at least 2");
  if (o.s < 1) node.fail("s", "must be at least 1");
  if (node.has("loss_star")) {
    const Json& v = node.raw("loss_star");
    if (v.is_string()) {
      if (v.get<std::string>() != "auto") node.fail("loss_star", "expected 'auto' or a number");
    } else {
      o.loss_star = node.number("loss_star");
    }
  }
  if (node.has("finalization")) o.finalization = node.parse("finalization", parse_finalization);
  o.window = static_cast<int>(node.integer("window", o.window));
  if (o.window < 2) node.fail("window", "must be at least 2");
  o.rel_tol = node.number("rel_tol", o.rel_tol);
  if (o.rel_tol <= 0.0) node.fail("rel_tol", "must be positive");
  return o;
}

BoundsConfig parse_bounds(const Node& node) {
  node.allow({"task", "epsilons", "delta", "l0", "smoothness", "kernel_pl"});
  BoundsConfig b;
  b.task = node.parse("task", parse_task);
  b.epsilons = node.numbers("epsilons");
  if (b.epsilons.empty()) node.fail("epsilons", "must not be empty");
  for (std::size_t i = 0; i < b.epsilons.size(); ++i)
    if (b.epsilons[i] < 0.0 || b.epsilons[i] > 1.0)
      node.fail("epsilons[" + std::to_string(i) + "]", "must lie in [0, 1]");
  b.delta = node.number("delta", b.delta);
  if (b.delta <= 0.0 || b.delta >= 1.0) node.fail("delta", "must lie in (0, 1)");
  b.l0 = node.number("l0", b.l0);
  if (b.l0 <= 0.0) node.fail("l0", "must be positive");
  b.smoothness = node.maybe_number("smoothness");
  if (b.smoothness && *b.smoothness < 0.0) node.fail("smoothness", "must be non-negative");
  b.kernel_pl = node.boolean("kernel_pl", false);
  return b;
}

SpectraConfig parse_spectra(const Node& node) {
  node.allow({"checks", "n", "d", "trials", "seed", "delta"});
  SpectraConfig s;
  s.checks = node.strings("checks");
  if (s.checks.empty()) node.fail("checks", "must not be empty");
  const auto known = spectral_check_names();
  for (std::size_t i = 0; i < s.checks.size(); ++i)
    if (std::find(known.begin(), known.end(), s.checks[i]) == known.end())
      node.fail("checks[" + std::to_string(i) + "]", "unknown spectral check '" + s.checks[i] + "'");
  s.options.n = node.integer("n", s.options.n);
  s.options.d = node.integer("d", s.options.d);
  s.options.trials = node.integer("trials", s.options.trials);
  s.options.seed = static_cast<std::uint64_t>(node.integer("seed", 0));
  s.options.delta = node.number("delta", s.options.delta);
  if (s.options.n < 2) node.fail("n", "must be at least 2");
  if (s.options.d < 1) node.fail("d", "must be at least 1");
  if (s.options.trials < 1) node.fail("trials", "must be at least 1");
  return s;
}

SweepConfig parse_sweep(const Node& node) {
  node.allow({"parameter", "values"});
  SweepConfig s;
  const std::string p = node.text("parameter");
  if (p == "n") {
    s.parameter = SweepParameter::N;
  } else if (p == "flip_ratio") {
    s.parameter = SweepParameter::FlipRatio;
  } else {
    node.fail("parameter", "expected 'n' or 'flip_ratio'");
  }
  s.values = node.numbers("values");
  if (s.values.empty()) node.fail("values", "must not be empty");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = s.values[i];
    const std::string key = "values[" + std::to_string(i) + "]";
    if (s.parameter == SweepParameter::N && (v < 1.0 || std::floor(v) != v)) node.fail(key, "n must be a positive integer");
    if (s.parameter == SweepParameter::FlipRatio && (v < 0.0 || v > 1.0)) node.fail(key, "ratio must lie in [0, 1]");
  }
  return s;
}

bool needs_data(ObjectiveKind kind) {
  return kind == ObjectiveKind::LinearRegression || kind == ObjectiveKind::KernelRegression ||
         kind == ObjectiveKind::TwoLayerRelu;
}

std::string sweep_label(SweepParameter p, double value) { return sweep_parameter_name(p) + "=" + format_shortest(value); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

Vector make_target(const TargetSpec& t, Index d, std::uint64_t seed) {
  if (!t.w_star.empty()) return Eigen::Map<const Vector>(t.w_star.data(), static_cast<Index>(t.w_star.size()));
  Rng rng(derive_seed(seed, kTarget));
  return t.norm * random_unit_vector(d, rng);
}

Dataset make_dataset(const DataConfig& cfg, const DataSpec& spec, std::uint64_t seed, std::uint64_t stream,
                     bool flip) {
  Dataset ds = generate(spec, derive_seed(seed, stream));
  if (!cfg.target) return ds;
  Target target;
  target.link = cfg.target->kind == TargetKind::Linear ? Link::Identity : cfg.target->link;
  target.w_star = make_target(*cfg.target, spec.d, seed);
  ds = label(std::move(ds), target);
  if (cfg.target->binary) ds = binarize(std::move(ds));
  if (flip && cfg.flip_ratio > 0.0) ds = flip_labels(std::move(ds), cfg.flip_ratio, derive_seed(seed, kFlip));
  return ds;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

struct Stats {
  double mean = 0.0, stddev = 0.0, med = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  std::tie(s.mean, s.stddev) = mean_std(v);
  s.med = median(v);
  return s;
}

}  // namespace

std::string sweep_parameter_name(SweepParameter p) { return p == SweepParameter::N ? "n" : "flip_ratio"; }

ExperimentConfig parse_config(const Json& doc) {
  const Node root(doc, "$");
  root.allow({"schema_version", "name", "objective", "data", "optimizer", "lgi", "bounds", "spectra", "sweep",
              "output_dir"});
  if (root.integer("schema_version") != kSchemaVersion)
    root.fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  ExperimentConfig cfg;
  cfg.name = root.text("name");
  if (cfg.name.empty() || cfg.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
                              std::string::npos || cfg.name == "." || cfg.name == "..")
    root.fail("name", "must be a non-empty file-name-safe string");
  cfg.objective = parse_objective(root.child("objective"));
  if (root.has("data")) cfg.data = parse_data(root.child("data"));
  cfg.optimizer = parse_optimizer(root.child("optimizer"));
  if (root.has("lgi")) cfg.lgi = parse_lgi(root.child("lgi"));
  if (root.has("bounds")) cfg.bounds = parse_bounds(root.child("bounds"));
  if (root.has("spectra")) cfg.spectra = parse_spectra(root.child("spectra"));
  if (root.has("sweep")) cfg.sweep = parse_sweep(root.child("sweep"));
  cfg.output_dir = root.text("output_dir", cfg.output_dir);

  if (needs_data(cfg.objective.kind)) {
    if (!cfg.data) root.fail("data", "objective " + objective_kind_name(cfg.objective.kind) + " needs a data section");
    if (!cfg.data->target) root.fail("data.target", "objective " + objective_kind_name(cfg.objective.kind) + " needs labels");
  } else if (cfg.data) {
    root.fail("data", "objective " + objective_kind_name(cfg.objective.kind) + " takes no data");
  }
  if (cfg.optimizer.method == Method::StochasticGradient && !needs_data(cfg.objective.kind))
    root.fail("optimizer.method", "sgd needs a data-backed objective");
  if (cfg.optimizer.init.kind == InitKind::Network && cfg.objective.kind != ObjectiveKind::TwoLayerRelu)
    root.fail("optimizer.init.kind", "network init only applies to two-layer-relu");
  if (cfg.objective.kind == ObjectiveKind::TwoLayerRelu && cfg.objective.trainable != TrainableLayers::Both &&
      cfg.optimizer.init.kind != InitKind::Network)
    root.fail("optimizer.init.kind", "frozen layers need the network init");
  if (cfg.sweep) {
    if (!cfg.data) root.fail("sweep", "sweeps need a data section");
    if (cfg.sweep->parameter == SweepParameter::FlipRatio && !cfg.data->target->binary)
      root.fail("sweep.parameter", "flip_ratio sweeps need a binary target");
    if (cfg.sweep->parameter == SweepParameter::N) {
      const double d = static_cast<double>(cfg.data->spec.d);
      for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) {
        const double n = cfg.sweep->values[i];
        if ((cfg.data->gamma0 && n < *cfg.data->gamma0 * d) || (cfg.data->gamma1 && n > *cfg.data->gamma1 * d))
          root.fail("sweep.values[" + std::to_string(i) + "]", "n outside [gamma0 d, gamma1 d]");
      }
    }
  } else if (cfg.data) {
    const double n = static_cast<double>(cfg.data->spec.n), d = static_cast<double>(cfg.data->spec.d);
    if ((cfg.data->gamma0 && n < *cfg.data->gamma0 * d) || (cfg.data->gamma1 && n > *cfg.data->gamma1 * d))
      root.fail("data.n", "n outside [gamma0 d, gamma1 d]");
  }
  if (cfg.bounds) {
    const bool linear = cfg.objective.kind == ObjectiveKind::LinearRegression;
    const bool kernel = cfg.objective.kind == ObjectiveKind::KernelRegression;
    const bool net = cfg.objective.kind == ObjectiveKind::TwoLayerRelu;
    const bool ok = (cfg.bounds->task == Task::LinearRegression && linear) ||
                    (cfg.bounds->task == Task::KernelRegression && kernel) || (cfg.bounds->task == Task::TwoLayerNet && net);
    if (!ok) root.fail("bounds.task", "task does not match the objective kind");
    if (cfg.bounds->kernel_pl && !kernel) root.fail("bounds.kernel_pl", "only for kernel-regression");
  }
  cfg.source = doc;
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& ex) {
    throw ConfigError(std::string("$: malformed JSON: ") + ex.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const PreconditionError& ex) {
    throw ConfigError(ex.what());
  }
  return parse_config_text(text);
}

RunSetup prepare_run(const ExperimentConfig& config, std::uint64_t seed) {
  RunSetup setup;
  Index param_dim_hint = 1;
  if (config.data) {
    const DataConfig& dc = *config.data;
    setup.train = std::make_shared<const Dataset>(make_dataset(dc, dc.spec, seed, kTrainData, true));
    if (dc.test_n > 0) {
      DataSpec test_spec = dc.spec;
      test_spec.n = dc.test_n;
      setup.test = std::make_shared<const Dataset>(make_dataset(dc, test_spec, seed, kTestData, false));
    }
    param_dim_hint = dc.spec.d;
  }
  ObjectiveSpec spec = config.objective;
  const InitSpec& init = config.optimizer.init;
  Vector network;
  if (init.kind == InitKind::Network) {
    network = two_layer_init(spec.width, param_dim_hint, derive_seed(seed, kInit));
    spec.network_params = network;
  }
  setup.objective = build_objective(spec, setup.train);
  const Index dim = setup.objective->dim();
  switch (init.kind) {
    case InitKind::Constant:
      setup.w0 = Vector::Constant(dim, init.value);
      break;
    case InitKind::Gaussian: {
      Rng rng(derive_seed(seed, kInit));
      setup.w0 = gaussian_vector(dim, init.stddev, rng);
      break;
    }
    case InitKind::Values:
      if (static_cast<Index>(init.values.size()) != dim)
        throw ConfigError("$.optimizer.init.values: expected " + std::to_string(dim) + " entries");
      setup.w0 = Eigen::Map<const Vector>(init.values.data(), dim);
      break;
    case InitKind::Network: {
      const Index m = spec.width;
      switch (spec.trainable) {
        case TrainableLayers::Both: setup.w0 = network; break;
        case TrainableLayers::HiddenOnly: setup.w0 = network.tail(network.size() - m); break;
        case TrainableLayers::OutputOnly: setup.w0 = network.head(m); break;
      }
      break;
    }
  }
  return setup;
}

Trajectory train(const ExperimentConfig& config, const RunSetup& setup, std::uint64_t seed) {
  const OptimizerConfig& o = config.optimizer;
  if (o.method == Method::GradientDescent) return run_gd(*setup.objective, setup.w0, o.eta, o.stop);
  SgdOptions sgd;
  sgd.eta = o.eta;
  sgd.batch_size = o.batch_size;
  sgd.epochs = o.epochs;
  sgd.seed = derive_seed(seed, kSgd);
  return run_sgd(*setup.objective, setup.w0, sgd);
}

namespace {

ExperimentConfig at_sweep_point(const ExperimentConfig& config, std::optional<double> value) {
  if (!value) return config;
  ExperimentConfig point = config;
  if (config.sweep->parameter == SweepParameter::N)
    point.data->spec.n = static_cast<Index>(*value);
  else
    point.data->flip_ratio = *value;
  return point;
}

RunSummary run_one(const ExperimentConfig& config, std::optional<double> sweep_value, std::uint64_t seed,
                   const std::filesystem::path& root) {
  RunSummary summary;
  summary.seed = seed;
  summary.sweep_value = sweep_value;
  const ExperimentConfig point = at_sweep_point(config, sweep_value);
  std::filesystem::path rel = sweep_value ? std::filesystem::path(sweep_label(config.sweep->parameter, *sweep_value))
                                          : std::filesystem::path();
  rel /= std::to_string(seed);

  const RunSetup setup = prepare_run(point, seed);
  const Trajectory traj = train(point, setup, seed);
  write_file_atomic(root / rel / "trajectory.jsonl", to_jsonl(traj));
  summary.files.push_back((rel / "trajectory.jsonl").generic_string());
  if (traj.diverged()) {
    summary.diverged = true;
    return summary;
  }
  try {
    summary.lgi = estimate(traj, point.lgi);
  } catch (const PreconditionError& ex) {
    summary.error = std::string("lgi: ") + ex.what();
    return summary;
  }
  write_file_atomic(root / rel / "lgi.csv", series_csv(*summary.lgi));
  summary.files.push_back((rel / "lgi.csv").generic_string());
  if (point.objective.kind == ObjectiveKind::TwoLayerRelu && summary.lgi->c_star > 0.0 && summary.lgi->theta_star < 1.0)
    summary.proxy = proxy_bound(summary.lgi->theta_star, summary.lgi->c_star, setup.train->n(), point.objective.width);

  if (point.bounds) {
    const BoundsConfig& b = *point.bounds;
    TaskBoundOptions opts;
    opts.delta = b.delta;
    opts.l0 = b.l0;
    opts.width = point.objective.width;
    if (b.smoothness) opts.step = StepParams{point.optimizer.eta, *b.smoothness};
    if (b.kernel_pl) {
      const Matrix K = kernel_matrix(point.objective.kernel, setup.train->X);
      const double lmin = gram_extremes(K).lambda_min;
      if (lmin <= 0.0) {
        summary.error = "bounds: kernel matrix is singular";
        return summary;
      }
      opts.lgi_override = std::make_pair(0.5, std::sqrt(2.0 * lmin / static_cast<double>(setup.train->n())));
    }
    for (double eps : b.epsilons) {
      opts.epsilon = eps;
      try {
        BoundReport report = compose_task_bound(b.task, traj, setup.train->n(), *summary.lgi, opts);
        ObservedRisk observed;
        const long step = *report.stop_step;
        observed.train_loss = traj.records[static_cast<std::size_t>(step)].loss;
        if (setup.test) {
          const Vector w = parameters_at(traj, *setup.objective, step);
          observed.test_risk = empirical_truncated_risk(*setup.objective, w, *setup.test, b.l0);
          report.observed = observed;
        }
        const std::string file = "bounds_eps" + format_shortest(eps) + ".json";
        write_file_atomic(root / rel / file, bound_report_json(report));
        summary.files.push_back((rel / file).generic_string());
        summary.bounds.push_back(std::move(report));
      } catch (const PreconditionError& ex) {
        summary.error = std::string("bounds: ") + ex.what();
      }
    }
  }
  return summary;
}

}  // namespace

std::string aggregate_csv(const ExperimentConfig& config, const std::vector<RunSummary>& runs) {
  const bool with_proxy = config.objective.kind == ObjectiveKind::TwoLayerRelu;
  std::vector<std::string> header;
  if (config.sweep) header.push_back(sweep_parameter_name(config.sweep->parameter));
  for (const char* h : {"runs", "estimated", "converged", "theta_mean", "theta_std", "theta_median", "c_mean", "c_std",
                        "c_median"})
    header.emplace_back(h);
  if (with_proxy)
    for (const char* h : {"proxy_mean", "proxy_std", "proxy_median"}) header.emplace_back(h);
  std::string out = csv_row(header);

  std::vector<std::optional<double>> points;
  if (config.sweep)
    for (double v : config.sweep->values) points.emplace_back(v);
  else
    points.emplace_back(std::nullopt);
  for (const auto& point : points) {
    std::vector<double> thetas, cs, proxies;
    long count = 0, converged = 0;
    for (const auto& r : runs) {
      if (r.sweep_value != point) continue;
      ++count;
      if (!r.lgi) continue;
      thetas.push_back(r.lgi->theta_star);
      cs.push_back(r.lgi->c_star);
      if (r.lgi->verdict == Verdict::Converged) ++converged;
      if (r.proxy) proxies.push_back(*r.proxy);
    }
    std::vector<std::string> row;
    if (point) row.push_back(format_shortest(*point));
    row.push_back(std::to_string(count));
    row.push_back(std::to_string(thetas.size()));
    row.push_back(std::to_string(converged));
    const auto put = [&](const std::vector<double>& values) {
      if (values.empty()) {
        row.insert(row.end(), {"nan", "nan", "nan"});
        return;
      }
      const Stats s = stats_of(values);
      row.insert(row.end(), {format_shortest(s.mean), format_shortest(s.stddev), format_shortest(s.med)});
    };
    put(thetas);
    put(cs);
    if (with_proxy) put(proxies);
    out += csv_row(row);
  }
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.directory = std::filesystem::path(config.output_dir) / config.name;
  std::filesystem::create_directories(result.directory);

  std::vector<std::pair<std::optional<double>, std::uint64_t>> jobs;
  if (config.sweep) {
    for (double v : config.sweep->values)
      for (auto s : config.optimizer.seeds) jobs.emplace_back(v, s);
  } else {
    for (auto s : config.optimizer.seeds) jobs.emplace_back(std::nullopt, s);
  }
  result.runs.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    result.runs[i] = run_one(config, jobs[i].first, jobs[i].second, result.directory);
  });

  for (const auto& r : result.runs) {
    result.any_diverged = result.any_diverged || r.diverged;
    result.files.insert(result.files.end(), r.files.begin(), r.files.end());
  }
  write_file_atomic(result.directory / "aggregate.csv", aggregate_csv(config, result.runs));
  result.files.push_back("aggregate.csv");
  if (config.spectra) {
    std::vector<SpectralCheckSummary> summaries;
    for (const auto& check : config.spectra->checks) summaries.push_back(run_spectral_check(check, config.spectra->options));
    write_file_atomic(result.directory / "spectra.json", spectral_summaries_json(summaries));
    result.files.push_back("spectra.json");
  }
  std::sort(result.files.begin(), result.files.end());

  nlohmann::ordered_json manifest;
  manifest["name"] = config.name;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config_hash"] = fnv1a_hex(config.source.dump());
  manifest["created"] = utc_timestamp();
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : result.runs) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["sweep_value"] = r.sweep_value ? nlohmann::ordered_json(*r.sweep_value) : nlohmann::ordered_json(nullptr);
    j["diverged"] = r.diverged;
    j["verdict"] = r.lgi ? verdict_name(r.lgi->verdict) : std::string("none");
    j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    runs.push_back(std::move(j));
  }
  manifest["runs"] = std::move(runs);
  manifest["files"] = result.files;
  write_file_atomic(result.directory / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace lgilab

#include "lgilab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgilab/error.hpp"
#include "lgilab/random.hpp"

namespace lgilab {

namespace {

bool is_full_sorted(std::span<const Index> rows, Index n) {
  if (static_cast<Index>(rows.size()) != n) return false;
  for (Index i = 0; i < n; ++i)
    if (rows[static_cast<std::size_t>(i)] != i) return false;
  return true;
}

Matrix gather_rows(const Matrix& X, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = X.row(rows[i]);
  return out;
}

Vector gather(const Vector& y, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

class PowerLoss final : public Objective {
 public:
  explicit PowerLoss(int k) : k_(k) {}
  ObjectiveKind kind() const override { return ObjectiveKind::PowerLoss; }
  Index dim() const override { return 1; }

 protected:
  Evaluation do_evaluate(const Vector& w) const override {
    const double x = w(0);
    const double odd = std::pow(x, 2 * k_ - 1);
    Evaluation e;
    e.loss = odd * x;
    e.grad = Vector::Constant(1, 2.0 * k_ * odd);
    return e;
  }

 private:
  int k_;
};

class NonAnalytic final : public Objective {
 public:
  ObjectiveKind kind() const override { return ObjectiveKind::NonAnalytic; }
  Index dim() const override { return 1; }

 protected:
  Evaluation do_evaluate(const Vector& w) const override {
    const double x = w(0);
    Evaluation e;
    e.grad = Vector::Zero(1);
    if (x == 0.0) return e;
    e.loss = std::exp(-1.0 / std::abs(x));
    e.grad(0) = sign(x) * e.loss / (x * x);
    return e;
  }
};

class MixedPower final : public Objective {
 public:
  ObjectiveKind kind() const override { return ObjectiveKind::MixedPower; }
  Index dim() const override { return 1; }

 protected:
  Evaluation do_evaluate(const Vector& w) const override {
    const double x = w(0);
    const double a = std::abs(x);
    const double cube_root = std::cbrt(a);
    Evaluation e;
    e.loss = 0.25 * a * cube_root + 0.5 * x * x;
    e.grad = Vector::Constant(1, sign(x) * cube_root / 3.0 + x);
    return e;
  }
};

class ProductLoss final : public Objective {
 public:
  explicit ProductLoss(int layers) : layers_(layers) {}
  ObjectiveKind kind() const override { return ObjectiveKind::ProductLoss; }
  Index dim() const override { return layers_; }

 protected:
  Evaluation do_evaluate(const Vector& w) const override {
    const Index n = w.size();
    // prefix/suffix products give the leave-one-out products without division
    Vector prefix(n + 1), suffix(n + 1);
    prefix(0) = 1.0;
    suffix(n) = 1.0;
    for (Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) * w(i);
    for (Index i = n; i > 0; --i) suffix(i - 1) = suffix(i) * w(i - 1);
    const double p = prefix(n);
    Evaluation e;
    e.loss = p * p;
    e.grad.resize(n);
    for (Index i = 0; i < n; ++i) e.grad(i) = 2.0 * p * prefix(i) * suffix(i + 1);
    return e;
  }

 private:
  int layers_;
};

// Least squares (1/2b) |F w - y|^2 over a design matrix F.
Evaluation least_squares(const Matrix& F, const Vector& y, const Vector& w) {
  const double b = static_cast<double>(F.rows());
  const Vector r = F * w - y;
  Evaluation e;
  e.loss = r.squaredNorm() / (2.0 * b);
  e.grad = F.transpose() * r / b;
  return e;
}

class LinearRegression final : public Objective {
 public:
  explicit LinearRegression(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {}
  ObjectiveKind kind() const override { return ObjectiveKind::LinearRegression; }
  Index dim() const override { return data_->d(); }
  bool has_prediction() const override { return true; }
  Index sample_count() const override { return data_->n(); }

 protected:
  Evaluation do_evaluate(const Vector& w) const override { return least_squares(data_->X, data_->Y, w); }
  double do_predict(const Vector& w, const Vector& x) const override { return w.dot(x); }
  Index input_dim() const override { return data_->d(); }
  Evaluation do_evaluate_batch(const Vector& w, std::span<const Index> rows) const override {
    return least_squares(gather_rows(data_->X, rows), gather(data_->Y, rows), w);
  }

 private:
  std::shared_ptr<const Dataset> data_;
};

// Kernel least squares in isometric coordinates: with K = Q diag(l) Q' the
// feature matrix is K^{1/2}, so w lives in R^n and |w| is the RKHS norm of
// the predictor. Representer coefficients are alpha = K^{+1/2} w.
class KernelRegression final : public Objective {
 public:
  KernelRegression(KernelSpec spec, std::shared_ptr<const Dataset> data)
      : spec_(std::move(spec)), data_(std::move(data)) {
    const Matrix K = kernel_matrix(spec_, data_->X);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
    require(eig.info() == Eigen::Success, "kernel regression: eigendecomposition failed");
    const Vector lambda = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
    Vector root(lambda.size()), inv_root(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) {
      const bool kept = lambda(i) > cutoff;
      root(i) = kept ? std::sqrt(lambda(i)) : 0.0;
      inv_root(i) = kept ? 1.0 / std::sqrt(lambda(i)) : 0.0;
    }
    const Matrix& Q = eig.eigenvectors();
    features_ = Q * root.asDiagonal() * Q.transpose();
    features_ = 0.5 * (features_ + features_.transpose()).eval();
    inverse_root_ = Q * inv_root.asDiagonal() * Q.transpose();
  }
  ObjectiveKind kind() const override { return ObjectiveKind::KernelRegression; }
  Index dim() const override { return data_->n(); }
  bool has_prediction() const override { return true; }
  Index sample_count() const override { return data_->n(); }

  const Matrix& features() const { return features_; }

 protected:
  Evaluation do_evaluate(const Vector& w) const override { return least_squares(features_, data_->Y, w); }
  double do_predict(const Vector& w, const Vector& x) const override {
    const Vector alpha = inverse_root_ * w;
    return alpha.dot(kernel_column(spec_, data_->X, x));
  }
  Index input_dim() const override { return data_->d(); }
  Evaluation do_evaluate_batch(const Vector& w, std::span<const Index> rows) const override {
    return least_squares(gather_rows(features_, rows), gather(data_->Y, rows), w);
  }

 private:
  KernelSpec spec_;
  std::shared_ptr<const Dataset> data_;
  Matrix features_;
  Matrix inverse_root_;
};

// f(x) = v' relu(U x); full parameter layout (v, row-major U).
class TwoLayerRelu final : public Objective {
 public:
  TwoLayerRelu(int width, TrainableLayers trainable, Vector frozen, std::shared_ptr<const Dataset> data)
      : m_(width), trainable_(trainable), frozen_(std::move(frozen)), data_(std::move(data)) {}
  ObjectiveKind kind() const override { return ObjectiveKind::TwoLayerRelu; }
  Index dim() const override {
    const Index hidden = m_ * data_->d();
    switch (trainable_) {
      case TrainableLayers::Both: return m_ + hidden;
      case TrainableLayers::HiddenOnly: return hidden;
      case TrainableLayers::OutputOnly: return m_;
    }
    return 0;
  }
  bool has_prediction() const override { return true; }
  Index sample_count() const override { return data_->n(); }

 protected:
  Evaluation do_evaluate(const Vector& w) const override { return network_loss(data_->X, data_->Y, w); }
  double do_predict(const Vector& w, const Vector& x) const override {
    const Vector full = expand(w);
    const Vector h = unpack_u(full) * x;
    return full.head(m_).dot(h.cwiseMax(0.0));
  }
  Index input_dim() const override { return data_->d(); }
  Evaluation do_evaluate_batch(const Vector& w, std::span<const Index> rows) const override {
    return network_loss(gather_rows(data_->X, rows), gather(data_->Y, rows), w);
  }

 private:
  Vector expand(const Vector& w) const {
    Vector full = frozen_;
    switch (trainable_) {
      case TrainableLayers::Both: full = w; break;
      case TrainableLayers::HiddenOnly: full.tail(full.size() - m_) = w; break;
      case TrainableLayers::OutputOnly: full.head(m_) = w; break;
    }
    return full;
  }

  Matrix unpack_u(const Vector& full) const {
    const Index d = data_->d();
    Matrix U(m_, d);
    for (Index i = 0; i < m_; ++i) U.row(i) = full.segment(m_ + i * d, d).transpose();
    return U;
  }

  Evaluation network_loss(const Matrix& X, const Vector& y, const Vector& w) const {
    const Vector full = expand(w);
    const Vector v = full.head(m_);
    const Matrix U = unpack_u(full);
    const double b = static_cast<double>(X.rows());
    Matrix A = X * U.transpose();  // b x m pre-activations, then activations
    A = A.cwiseMax(0.0);
    const Vector r = A * v - y;
    Evaluation e;
    e.loss = r.squaredNorm() / (2.0 * b);
    const Vector grad_v = A.transpose() * r / b;
    // relu'(0) = 0: strictly positive pre-activations pass the gradient,
    // and relu(h) > 0 exactly when h > 0
    for (Index j = 0; j < m_; ++j) A.col(j) = (A.col(j).array() > 0.0).select(r.array() * v(j), 0.0);
    const Matrix grad_u = A.transpose() * X / b;  // m x d
    Vector grad_full(full.size());
    grad_full.head(m_) = grad_v;
    const Index d = X.cols();
    for (Index i = 0; i < m_; ++i) grad_full.segment(m_ + i * d, d) = grad_u.row(i).transpose();
    switch (trainable_) {
      case TrainableLayers::Both: e.grad = grad_full; break;
      case TrainableLayers::HiddenOnly: e.grad = grad_full.tail(grad_full.size() - m_); break;
      case TrainableLayers::OutputOnly: e.grad = grad_v; break;
    }
    return e;
  }

  Index m_;
  TrainableLayers trainable_;
  Vector frozen_;
  std::shared_ptr<const Dataset> data_;
};

}  // namespace

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "power-loss") return ObjectiveKind::PowerLoss;
  if (name == "non-analytic") return ObjectiveKind::NonAnalytic;
  if (name == "mixed-power") return ObjectiveKind::MixedPower;
  if (name == "product-loss") return ObjectiveKind::ProductLoss;
  if (name == "linear-regression") return ObjectiveKind::LinearRegression;
  if (name == "kernel-regression") return ObjectiveKind::KernelRegression;
  if (name == "two-layer-relu") return ObjectiveKind::TwoLayerRelu;
  throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

std::string objective_kind_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::PowerLoss: return "power-loss";
    case ObjectiveKind::NonAnalytic: return "non-analytic";
    case ObjectiveKind::MixedPower: return "mixed-power";
    case ObjectiveKind::ProductLoss: return "product-loss";
    case ObjectiveKind::LinearRegression: return "linear-regression";
    case ObjectiveKind::KernelRegression: return "kernel-regression";
    case ObjectiveKind::TwoLayerRelu: return "two-layer-relu";
  }
  return "unknown";
}

TrainableLayers parse_trainable_layers(std::string_view name) {
  if (name == "both") return TrainableLayers::Both;
  if (name == "hidden") return TrainableLayers::HiddenOnly;
  if (name == "output") return TrainableLayers::OutputOnly;
  throw ConfigError("unknown trainable layers '" + std::string(name) + "'");
}

Evaluation Objective::evaluate(const Vector& w) const {
  require(w.size() == dim(), "evaluate: parameter has length " + std::to_string(w.size()) +
                                 ", expected " + std::to_string(dim()));
  require(w.allFinite(), "evaluate: non-finite parameter");
  return do_evaluate(w);
}

double Objective::predict(const Vector& w, const Vector& x) const {
  require(has_prediction(), "predict: objective " + objective_kind_name(kind()) + " has no prediction map");
  require(w.size() == dim(), "predict: parameter dimension mismatch");
  require(x.size() == input_dim(), "predict: input dimension mismatch");
  return do_predict(w, x);
}

double Objective::do_predict(const Vector&, const Vector&) const {
  throw PreconditionError("predict: no prediction map");
}

Evaluation Objective::evaluate_batch(const Vector& w, std::span<const Index> rows) const {
  require(sample_count() > 0, "evaluate_batch: objective is not data-backed");
  require(!rows.empty(), "evaluate_batch: empty batch");
  require(std::is_sorted(rows.begin(), rows.end()), "evaluate_batch: rows must be sorted");
  require(rows.front() >= 0 && rows.back() < sample_count(), "evaluate_batch: row out of range");
  if (is_full_sorted(rows, sample_count())) return evaluate(w);
  require(w.size() == dim(), "evaluate_batch: parameter dimension mismatch");
  require(w.allFinite(), "evaluate_batch: non-finite parameter");
  return do_evaluate_batch(w, rows);
}

Evaluation Objective::do_evaluate_batch(const Vector&, std::span<const Index>) const {
  throw PreconditionError("evaluate_batch: not supported");
}

std::shared_ptr<const Objective> build_objective(const ObjectiveSpec& spec,
                                                 std::shared_ptr<const Dataset> data) {
  const auto need_data = [&]() {
    require(data != nullptr, objective_kind_name(spec.kind) + " requires a dataset");
    require(data->labelled(), objective_kind_name(spec.kind) + " requires labels");
    require(data->n() >= 1 && data->d() >= 1, "dataset is empty");
  };
  switch (spec.kind) {
    case ObjectiveKind::PowerLoss:
      require(spec.power >= 1, "power-loss requires k >= 1");
      return std::make_shared<PowerLoss>(spec.power);
    case ObjectiveKind::NonAnalytic:
      return std::make_shared<NonAnalytic>();
    case ObjectiveKind::MixedPower:
      return std::make_shared<MixedPower>();
    case ObjectiveKind::ProductLoss:
      require(spec.layers >= 1, "product-loss requires L >= 1");
      return std::make_shared<ProductLoss>(spec.layers);
    case ObjectiveKind::LinearRegression:
      need_data();
      return std::make_shared<LinearRegression>(std::move(data));
    case ObjectiveKind::KernelRegression:
      need_data();
      return std::make_shared<KernelRegression>(spec.kernel, std::move(data));
    case ObjectiveKind::TwoLayerRelu: {
      need_data();
      require(spec.width >= 1, "two-layer-relu requires width m >= 1");
      const Index full = spec.width + spec.width * data->d();
      Vector frozen = Vector::Zero(full);
      if (spec.trainable != TrainableLayers::Both) {
        require(spec.network_params.has_value(), "two-layer-relu with frozen layers needs network_params");
      }
      if (spec.network_params) {
        require(spec.network_params->size() == full, "two-layer-relu network_params has wrong length");
        frozen = *spec.network_params;
      }
      return std::make_shared<TwoLayerRelu>(spec.width, spec.trainable, std::move(frozen), std::move(data));
    }
  }
  throw ConfigError("unknown objective kind");
}

Vector two_layer_init(int width, Index d, std::uint64_t seed) {
  require(width >= 1 && d >= 1, "two_layer_init: width and d must be positive");
  Rng rng(seed);
  Vector w(width + width * d);
  std::bernoulli_distribution coin(0.5);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  for (int i = 0; i < width; ++i) w(i) = coin(rng) ? scale : -scale;
  w.tail(width * d) = gaussian_vector(width * d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  return w;
}

}  // namespace lgilab

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lgilab/data.hpp"
#include "lgilab/kernels.hpp"
#include "lgilab/linalg.hpp"

namespace lgilab {

enum class ObjectiveKind {
  PowerLoss,
  NonAnalytic,
  MixedPower,
  ProductLoss,
  LinearRegression,
  KernelRegression,
  TwoLayerRelu
};

enum class TrainableLayers { Both, HiddenOnly, OutputOnly };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::PowerLoss;
  int power = 1;   // PowerLoss: L(w) = w^(2 power)
  int layers = 1;  // ProductLoss: L(w) = (w_1 ... w_layers)^2
  KernelSpec kernel;
  int width = 1;  // TwoLayerRelu hidden width m
  TrainableLayers trainable = TrainableLayers::Both;
  // TwoLayerRelu: full parameter vector (v, row-major U) supplying the
  // values of frozen layers.
  std::optional<Vector> network_params;
};

struct Evaluation {
  double loss = 0.0;
  Vector grad;
};

ObjectiveKind parse_objective_kind(std::string_view name);
std::string objective_kind_name(ObjectiveKind kind);
TrainableLayers parse_trainable_layers(std::string_view name);

// A non-negative differentiable loss with an analytic gradient. Instances
// are immutable, so evaluation may run concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual ObjectiveKind kind() const = 0;
  virtual Index dim() const = 0;

  Evaluation evaluate(const Vector& w) const;
  double loss(const Vector& w) const { return evaluate(w).loss; }

  virtual bool has_prediction() const { return false; }
  double predict(const Vector& w, const Vector& x) const;

  // Number of training samples for data-backed objectives, 0 otherwise.
  virtual Index sample_count() const { return 0; }

  // Loss averaged over the given rows only (mini-batch). `rows` must be
  // sorted; the full sorted index set reproduces evaluate() bit-exactly.
  Evaluation evaluate_batch(const Vector& w, std::span<const Index> rows) const;

 protected:
  virtual Evaluation do_evaluate(const Vector& w) const = 0;
  virtual double do_predict(const Vector& w, const Vector& x) const;
  virtual Index input_dim() const { return 0; }
  virtual Evaluation do_evaluate_batch(const Vector& w, std::span<const Index> rows) const;
};

std::shared_ptr<const Objective> build_objective(const ObjectiveSpec& spec,
                                                 std::shared_ptr<const Dataset> data = nullptr);

// Hidden width m and input dim d give a parameter vector (v, vec(U)) with
// v ~ uniform{+-1/sqrt(m)} and U ~ N(0, I/d).
Vector two_layer_init(int width, Index d, std::uint64_t seed);

}  // namespace lgilab

#pragma once

#include <cstddef>
#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphtts/param_store.hpp"
#include "graphtts/tensor.hpp"

namespace graphtts {

class NonScalarLoss : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class GradMode { kEnabled, kDisabled };

/// Ordered record of primitive applications. Records are appended in
/// evaluation order, so the record list is already topologically sorted and
/// backward() walks it once in reverse.
class Tape {
 public:
  /// Receives the tape and the id of the record whose gradient is ready.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(GradMode mode = GradMode::kEnabled) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return mode_ == GradMode::kEnabled; }

  Var constant(Tensor value);
  /// Leaf whose gradient is kept after backward(); readable through grad().
  Var variable(Tensor value);
  /// Leaf bound to a ParamStore entry; backward() adds into its gradient.
  Var param(ParamStore& store, const std::string& name);

  /// Appends a computed value. `fn` runs during backward only when the new
  /// record requires a gradient, i.e. some input does.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient buffer of a record, zero-initialised on first touch; nullptr
  /// when the record does not require a gradient.
  Tensor* grad_buffer(std::size_t id);
  /// Gradient of a leaf after backward(); zeros if never reached.
  Tensor grad(Var v) const;

  /// Reverse sweep from a scalar loss. Parameter gradients are accumulated
  /// into their stores; intermediate values and gradients are released.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  /// Smallest |x| seen at the input of a piecewise op (relu, abs) on this
  /// tape; +inf when none ran. Finite differences straddling such a point
  /// are meaningless.
  double kink_margin() const { return kink_margin_; }
  void note_kink_distance(double d) { kink_margin_ = std::min(kink_margin_, d); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool leaf = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var push(Node node);

  GradMode mode_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace graphtts

#include "graphtts/tape.hpp"

namespace graphtts {

Var Tape::push(Node node) {
  if (consumed_) throw std::logic_error("tape already consumed by backward()");
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.leaf = true;
  n.requires_grad = grad_enabled();
  return push(std::move(n));
}

Var Tape::param(ParamStore& store, const std::string& name) {
  Parameter& p = store.at(name);
  Node n;
  n.value = p.value;
  n.leaf = true;
  n.requires_grad = grad_enabled();
  n.param = &p;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::logic_error("input recorded on a different tape");
    if (nodes_[in.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward on an empty tape");
  if (loss.tape() != this) throw std::logic_error("loss recorded on a different tape");
  if (loss.value().size() != 1) {
    throw NonScalarLoss("loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  if (consumed_) throw std::logic_error("tape already consumed by backward()");
  Tensor* seed = grad_buffer(loss.id());
  if (seed) (*seed)[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (!n.leaf) {
      n.grad = Tensor();
      n.value = Tensor();
    }
    n.backward = nullptr;
  }
  for (Node& n : nodes_) {
    if (n.param && !n.grad.empty()) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  consumed_ = true;
}

}  // namespace graphtts

#include "cdpauth/nn/graph.hpp"

#include "cdpauth/error.hpp"

namespace cdpauth::nn {

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)), value_(std::move(value)) {
  grad_ = Tensor(value_.shape());
}

Var Graph::constant(Tensor value, std::string label) {
  const std::size_t bad = value.first_non_finite();
  if (bad != value.size()) {
    throw NonFiniteError("non-finite value at index " + std::to_string(bad) +
                         " of graph input '" + label + "'");
  }
  Node node;
  node.op = std::move(label);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Parameter& p) {
  const std::size_t bad = p.value().first_non_finite();
  if (bad != p.value().size()) {
    throw NonFiniteError("non-finite value at index " + std::to_string(bad) +
                         " of parameter '" + p.name() + "'");
  }
  Node node;
  node.op = p.name();
  node.value = p.value();
  node.requires_grad = true;
  node.param = &p;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::record(const std::string& op, Tensor value, std::vector<Var> inputs,
                  BackwardFn backward) {
  std::string name = scope_.empty() ? op : scope_ + "/" + op;
  const std::size_t bad = value.first_non_finite();
  if (bad != value.size()) {
    throw NonFiniteError("non-finite activation at index " +
                         std::to_string(bad) + " of " + name + " (node " +
                         std::to_string(nodes_.size()) + ")");
  }
  Node node;
  node.op = std::move(name);
  node.value = std::move(value);
  for (const Var in : inputs) {
    if (nodes_.at(in.id).requires_grad) node.requires_grad = true;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad(Var v) {
  Node& node = nodes_.at(v.id);
  if (!node.grad_allocated) {
    node.grad = Tensor(node.value.shape());
    node.grad_allocated = true;
  }
  return node.grad;
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     to_string(value(loss).shape()));
  }
  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.grad_allocated) continue;
    if (node.backward) node.backward(*this, Var{i});
    if (node.param != nullptr) {
      Tensor& acc = node.param->grad();
      if (acc.shape() != node.value.shape()) acc = Tensor(node.value.shape());
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += node.grad[k];
    }
  }
}

Graph::Scope::Scope(Graph& g, const std::string& name)
    : graph_(g), previous_length_(g.scope_.size()) {
  if (!g.scope_.empty()) g.scope_ += "/";
  g.scope_ += name;
}

Graph::Scope::~Scope() { graph_.scope_.resize(previous_length_); }

}  // namespace cdpauth::nn

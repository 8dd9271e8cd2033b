#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cdpauth/nn/tensor.hpp"

namespace cdpauth::nn {

/// Trainable tensor with an accumulated gradient.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  void zero_grad() { grad_.fill(0.0); }

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

/// Handle to a node of a Graph.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Reverse-mode tape. Operations append nodes in evaluation order; backward()
/// replays them in reverse and accumulates parameter gradients into the
/// Parameter objects that were registered with parameter().
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var self)>;

  Var constant(Tensor value, std::string label = "input");
  /// The parameter must outlive the graph.
  Var parameter(Parameter& p);

  /// Appends an operation output. `backward` reads grad(self) and adds into
  /// the gradients of the inputs that require them. Throws NonFiniteError,
  /// naming the operation and the current scope, if `value` is not finite.
  Var record(const std::string& op, Tensor value, std::vector<Var> inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Gradient buffer of `v`, zero-initialised on first access.
  Tensor& grad(Var v);
  bool has_grad(Var v) const { return nodes_.at(v.id).grad_allocated; }
  const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }
  const std::vector<Var>& inputs(Var v) const { return nodes_.at(v.id).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  void backward(Var loss);

  /// Prefixes the names of operations recorded while alive.
  class Scope {
   public:
    Scope(Graph& g, const std::string& name);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph& graph_;
    std::size_t previous_length_;
  };

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    Parameter* param = nullptr;
    std::vector<Var> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::string scope_;
};

}  // namespace cdpauth::nn

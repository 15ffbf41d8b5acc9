#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "c2f/util.hpp"

namespace c2f::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A named trainable block. Vectors (biases) are stored as n x 1 matrices.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool is_bias = false;
};

class ParameterStore {
 public:
  Parameter& Add(std::string name, int rows, int cols, bool is_bias = false);
  Parameter* Find(std::string_view name);
  const Parameter* Find(std::string_view name) const;
  Parameter& Get(std::string_view name);
  const Parameter& Get(std::string_view name) const;

  /// Insertion order; the order is part of the checkpoint layout.
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::vector<Parameter*> WithPrefix(std::string_view prefix);

  void ZeroGrad();
  /// Matrices uniform(-scale, scale), biases zero.
  void InitUniform(Rng& rng, double scale);
  std::size_t ParameterCount() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a vector-valued node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Vector& value() const;
  Eigen::Index size() const { return value().size(); }
  double scalar() const { return value()(0); }
};

/// Records forward values and, when recording, the closures that push
/// gradients back to inputs and parameters.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  Var Constant(Vector value);

  using BackwardFn = std::function<void(Tape&, const Vector& grad_out)>;
  Var Push(Vector value, BackwardFn backward);

  const Vector& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  /// Valid only during Backward.
  Vector& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  void AccumulateGrad(Var v, const Vector& g);

  /// Seeds d(loss)/d(loss) = scale for a size-1 node and runs every closure in
  /// reverse order. Parameter gradients accumulate into Parameter::grad.
  void Backward(Var loss, double scale = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Vector value;
    Vector grad;
    BackwardFn backward;
  };
  bool record_;
  std::vector<Node> nodes_;
};

// ------------------------------------------------------------------ primitives

Var Lookup(Tape& tape, Parameter& table, int row);
Var Linear(Parameter& weight, Var x);       // W x
Var AddBias(Var x, Parameter& bias);        // x + b
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);                      // element-wise
Var Scale(Var a, double factor);
Var AddConstant(Var a, const Vector& c);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Concat(std::span<const Var> parts);
Var Concat2(Var a, Var b);
Var Softmax(Var a);
/// Σ_k weights[k] · items[k]; weights has one entry per item.
Var WeightedSum(Var weights, std::span<const Var> items);
/// (1 - z) ⊙ h + z ⊙ candidate
Var Interpolate(Var z, Var h, Var candidate);
/// Sum of size-1 nodes.
Var SumScalars(std::span<const Var> scalars);

/// Returns -log softmax(logits)[target] as a size-1 node. `probs` receives the
/// stabilized softmax when non-null.
Var SoftmaxCrossEntropy(Var logits, int target, Vector* probs = nullptr);

/// Numerically stable softmax / log-softmax on plain vectors.
Vector SoftmaxOf(const Vector& logits);
Vector LogSoftmaxOf(const Vector& logits);

/// Training-time inverted dropout; identity when rate is 0 or rng is null.
Var Dropout(Var a, double rate, Rng* rng);

}  // namespace c2f::nn

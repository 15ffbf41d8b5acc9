#pragma once

#include <span>
#include <string>
#include <vector>

#include "c2f/autodiff.hpp"

namespace c2f::nn {

/// Training mode carries the dropout RNG; evaluation passes a null RNG.
struct RunMode {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Rng* dropout_rng() const { return training ? rng : nullptr; }
  static RunMode Eval() { return {}; }
};

/// Stacked GRU. Per layer:
///   z = σ(W_z x + U_z h + b_z)
///   r = σ(W_r x + U_r h + b_r)
///   c = tanh(W_h x + U_h (r ⊙ h) + b_h)
///   h' = (1 - z) ⊙ h + z ⊙ c
/// Layer l's new state is layer l+1's input. Dropout touches only layer inputs.
class Gru {
 public:
  using State = std::vector<Var>;

  Gru() = default;
  Gru(ParameterStore& store, const std::string& prefix, int input_dim, int hidden_dim, int layers);

  State Step(const State& prev, Var input, const RunMode& mode) const;
  State ZeroState(Tape& tape) const;
  /// First layer starts at `first`, deeper layers at zero.
  State InitialState(Tape& tape, Var first) const;

  int layers() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }

 private:
  struct Layer {
    Parameter* wz;
    Parameter* uz;
    Parameter* bz;
    Parameter* wr;
    Parameter* ur;
    Parameter* br;
    Parameter* wh;
    Parameter* uh;
    Parameter* bh;
  };
  std::vector<Layer> layers_;
  int input_dim_ = 0;
  int hidden_dim_ = 0;
};

/// Attention over a small set of context embeddings:
///   score_k = tanh(w · [query; ctx_k]),  weights = softmax(score),
///   mixed = Σ weights_k ctx_k,  enhanced = tanh(W_mix mixed + W_query query).
class ContextAttention {
 public:
  struct Result {
    Var weights;
    Var mixed;
    Var enhanced;
  };

  ContextAttention() = default;
  ContextAttention(ParameterStore& store, const std::string& prefix, int query_dim,
                   int context_dim, int out_dim);

  Result Apply(Var query, std::span<const Var> contexts) const;

 private:
  Parameter* score_ = nullptr;
  Parameter* mix_ = nullptr;
  Parameter* query_ = nullptr;
};

/// One tanh hidden layer, then a linear projection.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& prefix, int input_dim, int hidden_dim,
      int output_dim);
  Var Forward(Var x) const;
  int output_dim() const { return output_dim_; }

 private:
  Parameter* hidden_w_ = nullptr;
  Parameter* hidden_b_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
  int input_dim_ = 0;
  int output_dim_ = 0;
};

}  // namespace c2f::nn

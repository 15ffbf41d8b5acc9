#include "c2f/layers.hpp"

namespace c2f::nn {

Gru::Gru(ParameterStore& store, const std::string& prefix, int input_dim, int hidden_dim,
         int layers)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (layers < 1) ThrowUsage("GRU needs at least one layer");
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l) + ".";
    const int in = l == 0 ? input_dim : hidden_dim;
    Layer layer{};
    layer.wz = &store.Add(p + "wz", hidden_dim, in);
    layer.uz = &store.Add(p + "uz", hidden_dim, hidden_dim);
    layer.bz = &store.Add(p + "bz", hidden_dim, 1, true);
    layer.wr = &store.Add(p + "wr", hidden_dim, in);
    layer.ur = &store.Add(p + "ur", hidden_dim, hidden_dim);
    layer.br = &store.Add(p + "br", hidden_dim, 1, true);
    layer.wh = &store.Add(p + "wh", hidden_dim, in);
    layer.uh = &store.Add(p + "uh", hidden_dim, hidden_dim);
    layer.bh = &store.Add(p + "bh", hidden_dim, 1, true);
    layers_.push_back(layer);
  }
}

Gru::State Gru::Step(const State& prev, Var input, const RunMode& mode) const {
  if (prev.size() != layers_.size()) {
    ThrowUsage("GRU step: expected " + std::to_string(layers_.size()) + " layer states, got " +
               std::to_string(prev.size()));
  }
  if (input.size() != input_dim_) {
    ThrowUsage("GRU step: input dim " + std::to_string(input.size()) + " != " +
               std::to_string(input_dim_));
  }
  State next;
  next.reserve(layers_.size());
  Var x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& p = layers_[l];
    const Var h = prev[l];
    if (h.size() != hidden_dim_) {
      ThrowUsage("GRU step: hidden dim " + std::to_string(h.size()) + " != " +
                 std::to_string(hidden_dim_));
    }
    x = Dropout(x, mode.dropout, mode.dropout_rng());
    const Var z = Sigmoid(AddBias(Add(Linear(*p.wz, x), Linear(*p.uz, h)), *p.bz));
    const Var r = Sigmoid(AddBias(Add(Linear(*p.wr, x), Linear(*p.ur, h)), *p.br));
    const Var c = Tanh(AddBias(Add(Linear(*p.wh, x), Linear(*p.uh, Mul(r, h))), *p.bh));
    const Var h_new = Interpolate(z, h, c);
    next.push_back(h_new);
    x = h_new;
  }
  return next;
}

Gru::State Gru::ZeroState(Tape& tape) const {
  State s;
  for (std::size_t l = 0; l < layers_.size(); ++l) s.push_back(tape.Constant(Vector::Zero(hidden_dim_)));
  return s;
}

Gru::State Gru::InitialState(Tape& tape, Var first) const {
  if (first.size() != hidden_dim_) {
    ThrowUsage("GRU initial state dim " + std::to_string(first.size()) + " != hidden " +
               std::to_string(hidden_dim_));
  }
  State s{first};
  for (std::size_t l = 1; l < layers_.size(); ++l) s.push_back(tape.Constant(Vector::Zero(hidden_dim_)));
  return s;
}

ContextAttention::ContextAttention(ParameterStore& store, const std::string& prefix,
                                   int query_dim, int context_dim, int out_dim) {
  score_ = &store.Add(prefix + ".score", 1, query_dim + context_dim);
  mix_ = &store.Add(prefix + ".mix", out_dim, context_dim);
  query_ = &store.Add(prefix + ".query", out_dim, query_dim);
}

ContextAttention::Result ContextAttention::Apply(Var query, std::span<const Var> contexts) const {
  if (contexts.empty()) ThrowUsage("attention over an empty context set");
  std::vector<Var> scores;
  scores.reserve(contexts.size());
  for (const Var& ctx : contexts) scores.push_back(Tanh(Linear(*score_, Concat2(query, ctx))));
  Result r;
  r.weights = Softmax(Concat(scores));
  r.mixed = WeightedSum(r.weights, contexts);
  r.enhanced = Tanh(Add(Linear(*mix_, r.mixed), Linear(*query_, query)));
  return r;
}

Mlp::Mlp(ParameterStore& store, const std::string& prefix, int input_dim, int hidden_dim,
         int output_dim)
    : input_dim_(input_dim), output_dim_(output_dim) {
  hidden_w_ = &store.Add(prefix + ".hidden.w", hidden_dim, input_dim);
  hidden_b_ = &store.Add(prefix + ".hidden.b", hidden_dim, 1, true);
  out_w_ = &store.Add(prefix + ".out.w", output_dim, hidden_dim);
  out_b_ = &store.Add(prefix + ".out.b", output_dim, 1, true);
}

Var Mlp::Forward(Var x) const {
  if (x.size() != input_dim_) {
    ThrowUsage("MLP input dim " + std::to_string(x.size()) + " != " + std::to_string(input_dim_));
  }
  return AddBias(Linear(*out_w_, Tanh(AddBias(Linear(*hidden_w_, x), *hidden_b_))), *out_b_);
}

}  // namespace c2f::nn

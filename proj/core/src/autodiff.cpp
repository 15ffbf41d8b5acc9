#include "c2f/autodiff.hpp"

#include <cmath>

namespace c2f::nn {

// ------------------------------------------------------------ ParameterStore

Parameter& ParameterStore::Add(std::string name, int rows, int cols, bool is_bias) {
  if (Find(name) != nullptr) ThrowUsage("duplicate parameter name: " + name);
  if (rows <= 0 || cols <= 0) ThrowUsage("parameter " + name + " has an empty shape");
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  p->is_bias = is_bias;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::Find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::Find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterStore::Get(std::string_view name) {
  Parameter* p = Find(name);
  if (p == nullptr) ThrowUsage("unknown parameter: " + std::string(name));
  return *p;
}

const Parameter& ParameterStore::Get(std::string_view name) const {
  const Parameter* p = Find(name);
  if (p == nullptr) ThrowUsage("unknown parameter: " + std::string(name));
  return *p;
}

std::vector<Parameter*> ParameterStore::WithPrefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (std::string_view(p->name).substr(0, prefix.size()) == prefix) out.push_back(p.get());
  }
  return out;
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParameterStore::InitUniform(Rng& rng, double scale) {
  for (auto& p : params_) {
    if (p->is_bias) {
      p->value.setZero();
      continue;
    }
    // Column-major fill order is fixed, so the draw sequence is reproducible.
    for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
      for (Eigen::Index r = 0; r < p->value.rows(); ++r) p->value(r, c) = rng.Uniform(-scale, scale);
    }
  }
}

std::size_t ParameterStore::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

// ---------------------------------------------------------------------- Tape

const Vector& Var::value() const { return tape->value(id); }

Var Tape::Constant(Vector value) { return Push(std::move(value), nullptr); }

Var Tape::Push(Vector value, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  if (record_) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::AccumulateGrad(Var v, const Vector& g) { nodes_[static_cast<std::size_t>(v.id)].grad += g; }

void Tape::Backward(Var loss, double scale) {
  if (!record_) ThrowUsage("Backward on a non-recording tape");
  if (loss.tape != this || loss.size() != 1) ThrowUsage("Backward needs a scalar node on this tape");
  for (auto& n : nodes_) n.grad = Vector::Zero(n.value.size());
  nodes_[static_cast<std::size_t>(loss.id)].grad(0) = scale;
  for (int i = loss.id; i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.backward) node.backward(*this, node.grad);
  }
}

// ---------------------------------------------------------------- primitives

namespace {

void CheckSameTape(Var a, Var b) {
  if (a.tape != b.tape) ThrowUsage("operands live on different tapes");
}

void CheckSameSize(Var a, Var b, const char* op) {
  CheckSameTape(a, b);
  if (a.size() != b.size()) {
    ThrowUsage(std::string(op) + ": size mismatch " + std::to_string(a.size()) + " vs " +
               std::to_string(b.size()));
  }
}

}  // namespace

Var Lookup(Tape& tape, Parameter& table, int row) {
  if (row < 0 || row >= table.value.rows()) {
    ThrowUsage("Lookup: row " + std::to_string(row) + " outside " + table.name + " (" +
               std::to_string(table.value.rows()) + " rows)");
  }
  Parameter* p = &table;
  return tape.Push(table.value.row(row).transpose(),
                   [p, row](Tape&, const Vector& g) { p->grad.row(row) += g.transpose(); });
}

Var Linear(Parameter& weight, Var x) {
  if (weight.value.cols() != x.size()) {
    ThrowUsage("Linear " + weight.name + ": expects input " + std::to_string(weight.value.cols()) +
               ", got " + std::to_string(x.size()));
  }
  Parameter* w = &weight;
  const int xi = x.id;
  return x.tape->Push(weight.value * x.value(), [w, xi](Tape& t, const Vector& g) {
    w->grad.noalias() += g * t.value(xi).transpose();
    t.grad(xi).noalias() += w->value.transpose() * g;
  });
}

Var AddBias(Var x, Parameter& bias) {
  if (bias.value.rows() != x.size() || bias.value.cols() != 1) {
    ThrowUsage("AddBias " + bias.name + ": shape mismatch");
  }
  Parameter* b = &bias;
  const int xi = x.id;
  return x.tape->Push(x.value() + bias.value.col(0), [b, xi](Tape& t, const Vector& g) {
    b->grad.col(0) += g;
    t.grad(xi) += g;
  });
}

Var Add(Var a, Var b) {
  CheckSameSize(a, b, "Add");
  const int ai = a.id, bi = b.id;
  return a.tape->Push(a.value() + b.value(), [ai, bi](Tape& t, const Vector& g) {
    t.grad(ai) += g;
    t.grad(bi) += g;
  });
}

Var Sub(Var a, Var b) {
  CheckSameSize(a, b, "Sub");
  const int ai = a.id, bi = b.id;
  return a.tape->Push(a.value() - b.value(), [ai, bi](Tape& t, const Vector& g) {
    t.grad(ai) += g;
    t.grad(bi) -= g;
  });
}

Var Mul(Var a, Var b) {
  CheckSameSize(a, b, "Mul");
  const int ai = a.id, bi = b.id;
  return a.tape->Push(a.value().cwiseProduct(b.value()), [ai, bi](Tape& t, const Vector& g) {
    t.grad(ai) += g.cwiseProduct(t.value(bi));
    t.grad(bi) += g.cwiseProduct(t.value(ai));
  });
}

Var Scale(Var a, double factor) {
  const int ai = a.id;
  return a.tape->Push(a.value() * factor,
                      [ai, factor](Tape& t, const Vector& g) { t.grad(ai) += g * factor; });
}

Var AddConstant(Var a, const Vector& c) {
  if (c.size() != a.size()) ThrowUsage("AddConstant: size mismatch");
  const int ai = a.id;
  return a.tape->Push(a.value() + c, [ai](Tape& t, const Vector& g) { t.grad(ai) += g; });
}

Var Tanh(Var a) {
  const int ai = a.id;
  return a.tape->Push(a.value().array().tanh().matrix(), [ai](Tape& t, const Vector& g) {
    const Vector y = t.value(ai).array().tanh().matrix();
    t.grad(ai) += g.cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Sigmoid(Var a) {
  const int ai = a.id;
  Vector y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->Push(std::move(y), [ai](Tape& t, const Vector& g) {
    const Vector& x = t.value(ai);
    Vector s = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    t.grad(ai) += g.cwiseProduct((s.array() * (1.0 - s.array())).matrix());
  });
}

Var Concat(std::span<const Var> parts) {
  if (parts.empty()) ThrowUsage("Concat: no parts");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    CheckSameTape(parts.front(), p);
    total += p.size();
  }
  Vector out(total);
  std::vector<int> ids;
  std::vector<Eigen::Index> sizes;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.segment(offset, p.size()) = p.value();
    offset += p.size();
    ids.push_back(p.id);
    sizes.push_back(p.size());
  }
  return parts.front().tape->Push(std::move(out), [ids, sizes](Tape& t, const Vector& g) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.grad(ids[k]) += g.segment(off, sizes[k]);
      off += sizes[k];
    }
  });
}

Var Concat2(Var a, Var b) {
  const Var parts[2] = {a, b};
  return Concat(parts);
}

Vector SoftmaxOf(const Vector& logits) {
  const double peak = logits.maxCoeff();
  Vector e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

Vector LogSoftmaxOf(const Vector& logits) {
  const double peak = logits.maxCoeff();
  const double lse = peak + std::log((logits.array() - peak).exp().sum());
  return (logits.array() - lse).matrix();
}

Var Softmax(Var a) {
  const int ai = a.id;
  return a.tape->Push(SoftmaxOf(a.value()), [ai](Tape& t, const Vector& g) {
    const Vector p = SoftmaxOf(t.value(ai));
    const double dot = g.dot(p);
    t.grad(ai) += (p.array() * (g.array() - dot)).matrix();
  });
}

Var WeightedSum(Var weights, std::span<const Var> items) {
  if (items.empty()) ThrowUsage("WeightedSum: no items");
  if (weights.size() != static_cast<Eigen::Index>(items.size())) {
    ThrowUsage("WeightedSum: weight count differs from item count");
  }
  const Eigen::Index dim = items.front().size();
  Vector out = Vector::Zero(dim);
  std::vector<int> ids;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].size() != dim) ThrowUsage("WeightedSum: items differ in size");
    out += weights.value()(static_cast<Eigen::Index>(k)) * items[k].value();
    ids.push_back(items[k].id);
  }
  const int wi = weights.id;
  return weights.tape->Push(std::move(out), [wi, ids](Tape& t, const Vector& g) {
    const Vector w = t.value(wi);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.grad(wi)(static_cast<Eigen::Index>(k)) += g.dot(t.value(ids[k]));
      t.grad(ids[k]) += w(static_cast<Eigen::Index>(k)) * g;
    }
  });
}

Var Interpolate(Var z, Var h, Var candidate) {
  CheckSameSize(z, h, "Interpolate");
  CheckSameSize(z, candidate, "Interpolate");
  const int zi = z.id, hi = h.id, ci = candidate.id;
  Vector out = ((1.0 - z.value().array()) * h.value().array() +
                z.value().array() * candidate.value().array())
                   .matrix();
  return z.tape->Push(std::move(out), [zi, hi, ci](Tape& t, const Vector& g) {
    const Vector& zv = t.value(zi);
    t.grad(zi) += g.cwiseProduct(t.value(ci) - t.value(hi));
    t.grad(hi) += g.cwiseProduct((1.0 - zv.array()).matrix());
    t.grad(ci) += g.cwiseProduct(zv);
  });
}

Var SumScalars(std::span<const Var> scalars) {
  if (scalars.empty()) ThrowUsage("SumScalars: empty");
  double total = 0.0;
  std::vector<int> ids;
  for (const auto& s : scalars) {
    if (s.size() != 1) ThrowUsage("SumScalars: non-scalar input");
    total += s.scalar();
    ids.push_back(s.id);
  }
  Vector out(1);
  out(0) = total;
  return scalars.front().tape->Push(std::move(out), [ids](Tape& t, const Vector& g) {
    for (int id : ids) t.grad(id)(0) += g(0);
  });
}

Var SoftmaxCrossEntropy(Var logits, int target, Vector* probs) {
  if (target < 0 || target >= logits.size()) {
    ThrowUsage("SoftmaxCrossEntropy: target " + std::to_string(target) + " outside " +
               std::to_string(logits.size()) + " classes");
  }
  Vector log_p = LogSoftmaxOf(logits.value());
  Vector p = log_p.array().exp().matrix();
  if (probs != nullptr) *probs = p;
  Vector out(1);
  out(0) = -log_p(target);
  const int li = logits.id;
  return logits.tape->Push(std::move(out), [li, target, p](Tape& t, const Vector& g) {
    Vector d = p;
    d(target) -= 1.0;
    t.grad(li) += g(0) * d;
  });
}

Var Dropout(Var a, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  if (rate >= 1.0) ThrowUsage("Dropout rate must be < 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  Vector mask(a.size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = rng->Bernoulli(rate) ? 0.0 : keep_scale;
  const int ai = a.id;
  return a.tape->Push(a.value().cwiseProduct(mask),
                      [ai, mask](Tape& t, const Vector& g) { t.grad(ai) += g.cwiseProduct(mask); });
}

}  // namespace c2f::nn

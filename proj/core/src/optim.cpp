#include "c2f/optim.hpp"

#include <cmath>

namespace c2f::nn {

void Adam::Step(std::span<Parameter* const> params, double learning_rate) {
  for (Parameter* p : params) {
    auto [it, inserted] = slots_.try_emplace(p->name);
    Slot& s = it->second;
    if (inserted || s.m.rows() != p->value.rows() || s.m.cols() != p->value.cols()) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
      s.step = 0;
    }
    ++s.step;
    s.m = config_.beta1 * s.m + (1.0 - config_.beta1) * p->grad;
    s.v = config_.beta2 * s.v + (1.0 - config_.beta2) * p->grad.cwiseProduct(p->grad);
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(s.step));
    p->value.array() -= learning_rate * (s.m.array() / c1) /
                        ((s.v.array() / c2).sqrt() + config_.epsilon);
  }
}

double ClipGradNorm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter* p : params) p->grad *= scale;
  }
  return norm;
}

bool GradientsFinite(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) return false;
  }
  return true;
}

GradCheckResult GradCheck(ParameterStore& store, const std::function<double(bool)>& loss,
                          double eps, std::span<Parameter* const> only) {
  std::vector<Parameter*> targets(only.begin(), only.end());
  if (targets.empty()) {
    for (const auto& p : store.all()) targets.push_back(p.get());
  }
  store.ZeroGrad();
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(targets.size());
  for (const Parameter* p : targets) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    Parameter* p = targets[k];
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      auto at = [&](double offset) {
        x = saved + offset;
        return loss(false);
      };
      // Fourth-order central stencil.
      const double numeric =
          (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      x = saved;
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  store.ZeroGrad();
  return result;
}

}  // namespace c2f::nn

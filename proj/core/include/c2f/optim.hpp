#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "c2f/autodiff.hpp"

namespace c2f::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moments with bias correction. Each parameter keeps its own
/// step counter so partially frozen training stays well defined.
class Adam {
 public:
  struct Slot {
    Matrix m;
    Matrix v;
    std::int64_t step = 0;
  };

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// param <- param - lr * m_hat / (sqrt(v_hat) + eps) for every parameter in `params`.
  void Step(std::span<Parameter* const> params, double learning_rate);

  const AdamConfig& config() const { return config_; }
  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  AdamConfig config_;
  std::map<std::string, Slot> slots_;
};

/// Scales gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double ClipGradNorm(std::span<Parameter* const> params, double max_norm);

bool GradientsFinite(std::span<Parameter* const> params);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// `loss` must build a fresh recording tape, compute the scalar loss, and call
/// Backward when its argument is true. It must be deterministic (no dropout).
/// Numeric derivatives use the four-point central difference with step `eps`.
/// Relative error per entry is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult GradCheck(ParameterStore& store, const std::function<double(bool)>& loss,
                          double eps = 1e-3, std::span<Parameter* const> only = {});

}  // namespace c2f::nn

#include "oracles/metric_oracle.hpp"

#include <cmath>
#include <functional>

namespace c2f::oracle {
namespace {

bool SameAt(const Sentence& a, std::size_t i, const Sentence& b, std::size_t j, int n) {
  for (int k = 0; k < n; ++k) {
    if (a[i + static_cast<std::size_t>(k)] != b[j + static_cast<std::size_t>(k)]) return false;
  }
  return true;
}

std::size_t Windows(const Sentence& s, int n) {
  return s.size() >= static_cast<std::size_t>(n) ? s.size() - static_cast<std::size_t>(n) + 1 : 0;
}

/// Occurrences of the n-gram starting at `from[i]` inside `in`.
std::size_t Occurrences(const Sentence& from, std::size_t i, const Sentence& in, int n) {
  std::size_t c = 0;
  for (std::size_t j = 0; j < Windows(in, n); ++j) c += SameAt(from, i, in, j, n);
  return c;
}

/// Σ over distinct candidate n-grams of min(count in cand, count in ref).
std::size_t Clipped(const Sentence& cand, const Sentence& ref, int n) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < Windows(cand, n); ++i) {
    bool first = true;
    for (std::size_t p = 0; p < i; ++p) {
      if (SameAt(cand, p, cand, i, n)) {
        first = false;
        break;
      }
    }
    if (!first) continue;
    const std::size_t in_cand = Occurrences(cand, i, cand, n);
    const std::size_t in_ref = Occurrences(cand, i, ref, n);
    total += in_cand < in_ref ? in_cand : in_ref;
  }
  return total;
}

double F1(double overlap, double cand, double ref) {
  const double p = cand > 0 ? overlap / cand : 0.0;
  const double r = ref > 0 ? overlap / ref : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

}  // namespace

double Bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references,
            int max_n) {
  double c = 0, r = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    c += static_cast<double>(candidates[k].size());
    r += static_cast<double>(references[k].size());
  }
  if (c == 0) return 0.0;
  double log_mean = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    double m = 0, t = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      m += static_cast<double>(Clipped(candidates[k], references[k], n));
      t += static_cast<double>(Windows(candidates[k], n));
    }
    double p = t > 0 ? m / t : 0.0;
    if (n > 1 && m == 0) p = 1.0 / (t + 1.0);
    if (p == 0.0) return 0.0;
    log_mean += std::log(p) / max_n;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_mean);
}

double RougeN(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references,
              int n) {
  double sum = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto ct = static_cast<double>(Windows(candidates[k], n));
    const auto rt = static_cast<double>(Windows(references[k], n));
    if (rt == 0) {
      sum += ct == 0 ? 1.0 : 0.0;
      continue;
    }
    sum += F1(static_cast<double>(Clipped(candidates[k], references[k], n)), ct, rt);
  }
  return sum / static_cast<double>(candidates.size());
}

std::size_t Lcs(const Sentence& a, const Sentence& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> long {
    if (i == a.size() || j == b.size()) return 0;
    long& slot = memo[i][j];
    if (slot >= 0) return slot;
    if (a[i] == b[j]) return slot = 1 + go(i + 1, j + 1);
    const long skip_a = go(i + 1, j), skip_b = go(i, j + 1);
    return slot = skip_a > skip_b ? skip_a : skip_b;
  };
  return static_cast<std::size_t>(go(0, 0));
}

double RougeL(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  double sum = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    sum += F1(static_cast<double>(Lcs(candidates[k], references[k])),
              static_cast<double>(candidates[k].size()), static_cast<double>(references[k].size()));
  }
  return sum / static_cast<double>(candidates.size());
}

}  // namespace c2f::oracle

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace c2f {

/// Failure categories; the CLI maps each one onto a process exit code.
enum class ErrorKind {
  kUsage = 1,       // bad arguments, violated preconditions
  kData = 2,        // unreadable / malformed / empty inputs
  kDivergence = 3,  // non-finite training loss
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void ThrowUsage(const std::string& what);
[[noreturn]] void ThrowData(const std::string& what);

/// Seedable generator with a platform-independent output stream.
///
/// The engine is std::mt19937_64, whose raw output sequence is fixed by the
/// C++ standard. The distribution helpers below are written out by hand
/// because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  /// Uniform double in [0, 1) built from the top 53 bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t Below(std::uint64_t bound);
  bool Bernoulli(double p) { return Uniform() < p; }
  /// Index drawn proportionally to non-negative weights.
  std::size_t Categorical(std::span<const double> weights);
  /// Index drawn from unnormalized log weights.
  std::size_t CategoricalLog(std::span<const double> log_weights);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::string ToLowerAscii(std::string_view text);
std::string Trim(std::string_view text);
std::vector<std::string> SplitOn(std::string_view text, char sep);
std::string Join(std::span<const std::string> parts, std::string_view sep);

/// Reads the whole file or throws a data error.
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

double LogSumExp(std::span<const double> values);

}  // namespace c2f

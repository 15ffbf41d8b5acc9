#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace c2f {

enum class PosTag {
  kNN, kNNS, kVB, kVBD, kVBZ, kVBP, kVBN, kJJ, kJJS, kJJR, kRB, kIN, kDT, kPRP, kCD, kOTHER,
};
inline constexpr int kNumPosTags = 16;

std::string_view TagName(PosTag tag);
std::optional<PosTag> ParseTag(std::string_view name);
std::span<const PosTag> AllTags();

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  /// Exactly one tag per token.
  virtual std::vector<PosTag> Tag(std::span<const std::string> tokens) const = 0;
};

/// Closed-class lexicon, then suffix rules, then NN.
class RuleTagger final : public PosTagger {
 public:
  RuleTagger();
  /// Extra lexicon entries take priority over the built-in ones.
  void AddEntry(std::string word, PosTag tag);
  PosTag TagWord(std::string_view word) const;
  std::vector<PosTag> Tag(std::span<const std::string> tokens) const override;

 private:
  std::unordered_map<std::string, PosTag> lexicon_;
};

}  // namespace c2f

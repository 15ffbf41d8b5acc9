#include "c2f/pos_tagger.hpp"

#include <array>
#include <cctype>
#include <initializer_list>

#include "c2f/util.hpp"

namespace c2f {
namespace {

constexpr std::array<std::string_view, kNumPosTags> kTagNames = {
    "NN", "NNS", "VB", "VBD", "VBZ", "VBP", "VBN", "JJ",
    "JJS", "JJR", "RB", "IN", "DT", "PRP", "CD", "OTHER",
};

constexpr std::array<PosTag, kNumPosTags> kTags = {
    PosTag::kNN, PosTag::kNNS, PosTag::kVB, PosTag::kVBD, PosTag::kVBZ, PosTag::kVBP,
    PosTag::kVBN, PosTag::kJJ, PosTag::kJJS, PosTag::kJJR, PosTag::kRB, PosTag::kIN,
    PosTag::kDT, PosTag::kPRP, PosTag::kCD, PosTag::kOTHER,
};

bool EndsWith(std::string_view word, std::string_view suffix) {
  return word.size() >= suffix.size() + 2 &&
         word.substr(word.size() - suffix.size()) == suffix;
}

bool IsNumber(std::string_view word) {
  bool digit = false;
  for (char c : word) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '/') {
      return false;
    }
  }
  return digit;
}

bool IsPunctuation(std::string_view word) {
  for (char c : word) {
    auto byte = static_cast<unsigned char>(c);
    if (byte >= 128 || std::ispunct(byte) == 0) return false;
  }
  return !word.empty();
}

}  // namespace

std::string_view TagName(PosTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<PosTag> ParseTag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return kTags[i];
  }
  return std::nullopt;
}

std::span<const PosTag> AllTags() { return kTags; }

RuleTagger::RuleTagger() {
  auto add = [this](PosTag tag, std::initializer_list<const char*> words) {
    for (const char* w : words) lexicon_.emplace(w, tag);
  };
  add(PosTag::kDT, {"the", "a", "an", "this", "that", "these", "those", "every", "each",
                    "some", "any", "no", "another", "all", "both", "either", "neither"});
  add(PosTag::kIN, {"in", "on", "at", "of", "for", "with", "from", "by", "to", "about",
                    "into", "over", "after", "before", "under", "between", "through",
                    "during", "without", "than", "like", "as", "if", "because", "since",
                    "until", "while", "though", "although", "around", "out", "off", "up"});
  add(PosTag::kPRP, {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
                     "them", "my", "your", "his", "its", "our", "their", "mine", "yours",
                     "myself", "yourself", "itself", "themselves", "ourselves", "one"});
  add(PosTag::kVBZ, {"is", "has", "does", "'s", "works", "seems", "looks", "sounds"});
  add(PosTag::kVBP, {"are", "am", "have", "do", "'re", "'m", "'ve"});
  add(PosTag::kVBD, {"was", "were", "had", "did", "got", "made", "came", "went", "bought",
                     "took", "gave", "said", "felt", "found", "thought", "left", "sent"});
  add(PosTag::kVBN, {"been", "gone", "done", "seen", "given", "taken", "known", "broken"});
  add(PosTag::kVB, {"be", "get", "make", "buy", "go", "use", "recommend", "say", "take",
                    "give", "see", "know", "think", "come", "want", "need", "try", "keep"});
  add(PosTag::kRB, {"very", "not", "n't", "too", "really", "so", "also", "just", "well",
                    "pretty", "quite", "never", "always", "again", "still", "even", "only",
                    "here", "there", "now", "then", "ever", "almost", "back", "rather",
                    "definitely", "highly", "much", "more", "most", "less", "least"});
  add(PosTag::kJJ, {"good", "great", "bad", "nice", "excellent", "poor", "small", "big",
                    "little", "easy", "cheap", "new", "old", "high", "low", "fine", "happy",
                    "perfect", "awesome", "terrible", "amazing", "clear", "loud", "quick",
                    "slow", "hard", "long", "short", "friendly", "fresh", "other"});
  add(PosTag::kJJR, {"better", "worse", "cheaper", "larger", "smaller", "bigger"});
  add(PosTag::kJJS, {"best", "worst", "cheapest", "largest", "smallest", "biggest"});
  add(PosTag::kCD, {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                    "ten", "hundred", "thousand"});
  add(PosTag::kOTHER, {"and", "or", "but", "nor", "would", "will", "can", "could",
                       "should", "may", "might", "must", "shall", "'ll", "'d", "what",
                       "which", "who", "whom", "whose", "when", "where", "why", "how"});
  // "one" is more often a number in reviews.
  lexicon_["one"] = PosTag::kCD;
}

void RuleTagger::AddEntry(std::string word, PosTag tag) {
  lexicon_[std::move(word)] = tag;
}

PosTag RuleTagger::TagWord(std::string_view word) const {
  if (auto it = lexicon_.find(std::string(word)); it != lexicon_.end()) return it->second;
  if (IsNumber(word)) return PosTag::kCD;
  if (IsPunctuation(word)) return PosTag::kOTHER;
  if (EndsWith(word, "ly")) return PosTag::kRB;
  if (EndsWith(word, "ing")) return PosTag::kVB;
  if (EndsWith(word, "ed")) return PosTag::kVBD;
  if (EndsWith(word, "est")) return PosTag::kJJS;
  for (std::string_view adj : {"ous", "ful", "able", "ible", "ive", "less", "ish"}) {
    if (EndsWith(word, adj)) return PosTag::kJJ;
  }
  if (EndsWith(word, "s") && !EndsWith(word, "ss") && !EndsWith(word, "us") &&
      !EndsWith(word, "is")) {
    return PosTag::kNNS;
  }
  return PosTag::kNN;
}

std::vector<PosTag> RuleTagger::Tag(std::span<const std::string> tokens) const {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(TagWord(t));
  return tags;
}

}  // namespace c2f

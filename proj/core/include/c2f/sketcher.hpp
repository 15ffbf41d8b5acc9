#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "c2f/aspect_lda.hpp"
#include "c2f/corpus.hpp"
#include "c2f/pos_tagger.hpp"

namespace c2f {

struct Ngram {
  std::vector<std::string> words;  // 2 or 3
  std::int64_t count = 0;
  std::string symbol;  // words joined by '_'
};

class NgramTable {
 public:
  struct MineOptions {
    int top_ngrams = 200;
    /// N-grams that contain a punctuation-only or reserved token are not counted.
    bool skip_punctuation = true;
  };

  /// Ranked by count desc, then order (3 before 2), then word sequence.
  static NgramTable Mine(const std::vector<std::vector<std::string>>& sentences,
                         const MineOptions& options);
  static NgramTable Mine(const std::vector<std::vector<std::string>>& sentences,
                         int top_ngrams = 200) {
    return Mine(sentences, MineOptions{top_ngrams, true});
  }
  static NgramTable FromEntries(std::vector<Ngram> entries);

  const Ngram* Find(std::span<const std::string> words) const;
  const std::vector<Ngram>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// "w1 w2[ w3]<TAB>count" per line, rank order.
  std::string Serialize() const;
  static NgramTable Parse(std::string_view text);

 private:
  std::vector<Ngram> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct KeepSets {
  std::vector<std::vector<std::string>> aspect_words;  // ranked, per aspect
  std::vector<std::string> global_words;               // ranked

  bool Keeps(int aspect, const std::string& word) const;
  bool IsAspectWord(int aspect, const std::string& word) const;
  int num_aspects() const { return static_cast<int>(aspect_words.size()); }

  /// Optional per-aspect stop lists remove manually rejected words.
  static KeepSets Build(const AspectModel& model, const Corpus& corpus, int aspect_k = 50,
                        int global_k = 50,
                        const std::vector<std::vector<std::string>>& stop_lists = {});
  static KeepSets FromLists(std::vector<std::vector<std::string>> aspect_words,
                            std::vector<std::string> global_words);

  /// "global<TAB>w1 w2 ..." then "aspect<TAB>k<TAB>w1 w2 ..." lines.
  std::string Serialize() const;
  static KeepSets Parse(std::string_view text);

 private:
  void Index();
  std::vector<std::unordered_set<std::string>> aspect_lookup_;
  std::unordered_set<std::string> global_lookup_;
};

/// Per-aspect stop-list file: "aspect<TAB>word" per line.
std::vector<std::vector<std::string>> ParseStopLists(std::string_view text, int num_aspects);

enum class SlotKind { kWord, kNgram, kPos };

struct SketchSlot {
  SlotKind kind = SlotKind::kPos;
  std::string symbol;
  std::vector<std::string> words;  // surface words for kWord/kNgram, empty for kPos

  int width() const { return kind == SlotKind::kPos ? 1 : static_cast<int>(words.size()); }
  bool operator==(const SketchSlot&) const = default;
};

struct Sketch {
  std::vector<SketchSlot> slots;
  std::vector<int> alignment;  // sentence position -> slot index

  std::vector<std::string> Symbols() const;
  int TotalWidth() const;
  bool operator==(const Sketch&) const = default;
};

/// Pass 1 replaces table n-grams greedily left to right, longest first.
/// Pass 2 keeps aspect/global words verbatim and tags everything else.
/// A non-empty `tags` overrides the tagger (gold annotations).
Sketch DeriveSketch(std::span<const std::string> sentence, int aspect, const NgramTable& ngrams,
                    const KeepSets& keep, const PosTagger& tagger,
                    std::span<const PosTag> tags = {});

/// Expands a sketch back to words; POS slots are looked up by slot index.
std::vector<std::string> Realize(const Sketch& sketch, const std::map<int, std::string>& pos_words);

/// Alignment for a slot sequence: each slot repeated over its width.
std::vector<int> AlignmentFor(std::span<const SketchSlot> slots);

/// Closed symbol inventory for the sketch and word decoders.
class SketchVocab {
 public:
  static constexpr int kStart = 0;
  static constexpr int kEnd = 1;
  static constexpr int kFirstTag = 2;

  struct Entry {
    std::string symbol;
    SlotKind kind = SlotKind::kPos;
    std::vector<std::string> words;
  };

  /// START, END, tag set, n-gram symbols (rank order), keep words (sorted).
  static SketchVocab Build(const NgramTable& ngrams, const KeepSets& keep);

  int Find(std::string_view symbol) const;  // -1 when absent
  const Entry& at(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(entries_.size()); }
  bool IsControl(int id) const { return id == kStart || id == kEnd; }

  /// Throws when a symbol is outside the inventory.
  std::vector<int> Encode(const Sketch& sketch) const;
  /// Control symbols must not appear in `ids`.
  Sketch Decode(std::span<const int> ids) const;
  int WidthOf(int id) const;

  std::string Serialize() const;
  static SketchVocab Parse(std::string_view text);

 private:
  void Add(Entry entry);
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace c2f

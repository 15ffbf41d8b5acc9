#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace c2f {

struct RawReview {
  std::string user_id;
  std::string item_id;
  int rating = 0;  // 1..max_rating
  std::string text;
};

/// Field names of the line-delimited JSON input.
struct IngestSchema {
  std::string user_field = "user_id";
  std::string item_field = "item_id";
  std::string rating_field = "rating";
  std::string text_field = "text";
  int max_rating = 5;
  /// Fraction of malformed lines above which ingestion fails outright.
  double max_malformed_fraction = 0.10;
};

struct IngestIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<RawReview> reviews;  // file order
  std::vector<IngestIssue> issues;
};

IngestResult Ingest(const std::string& path, const IngestSchema& schema = {});
IngestResult IngestText(std::string_view contents, const IngestSchema& schema = {});

/// Whitespace split, then leading/trailing ASCII punctuation peeled off one
/// character at a time. Internal punctuation ("don't", "3.5", "e-mail") stays.
std::vector<std::string> Tokenize(std::string_view text);
/// Sentence boundaries fall after a standalone ".", "!" or "?" token.
std::vector<std::vector<std::string>> SplitSentences(const std::vector<std::string>& tokens);
std::string Detokenize(const std::vector<std::string>& tokens);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;
  static constexpr int kStart = 2;
  static constexpr int kEnd = 3;
  static constexpr int kNumReserved = 4;

  Vocabulary();

  /// Words with count >= min_count, ordered by count desc then bytewise.
  static Vocabulary Build(const std::unordered_map<std::string, std::int64_t>& counts,
                          std::int64_t min_count);

  int Index(std::string_view word) const;  // kOov when absent
  bool Contains(std::string_view word) const;
  const std::string& Word(int index) const;
  std::int64_t Count(int index) const { return counts_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(words_.size()); }
  static bool IsReserved(int index) { return index >= 0 && index < kNumReserved; }

  /// "word<TAB>count" per line; reserved symbols are implicit.
  std::string Serialize() const;
  static Vocabulary Parse(std::string_view text);

 private:
  void Append(std::string word, std::int64_t count);

  std::vector<std::string> words_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
};

/// Dense ids for user or item names, ordered bytewise.
class IdMap {
 public:
  static IdMap Build(std::vector<std::string> names);
  int Find(std::string_view name) const;  // -1 when absent
  const std::string& Name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  std::string Serialize() const;
  static IdMap Parse(std::string_view text);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct Review {
  int user = 0;
  int item = 0;
  int rating = 0;  // 0-based rating category
  std::vector<std::vector<int>> sentences;

  std::size_t TokenCount() const;
  bool operator==(const Review&) const = default;
};

struct PreprocessConfig {
  int max_review_tokens = 100;
  std::int64_t min_word_count = 10;
  int min_user_count = 5;
  int min_item_count = 5;
  int max_rating = 5;
};

struct Corpus {
  std::vector<Review> reviews;
  Vocabulary vocab;
  IdMap users;
  IdMap items;
  int num_ratings = 5;

  std::vector<std::string> Words(const std::vector<int>& sentence) const;
};

struct PreprocessStats {
  std::size_t input = 0;
  std::size_t dropped_length = 0;
  std::size_t dropped_sparse = 0;
  int pruning_rounds = 0;
};

/// Lowercase, tokenize, split sentences, drop over-long reviews, prune rare
/// users/items until nothing changes, then build the vocabulary.
Corpus Preprocess(const std::vector<RawReview>& raw, const PreprocessConfig& config,
                  PreprocessStats* stats = nullptr);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  std::vector<Review> train;
  std::vector<Review> valid;
  std::vector<Review> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

/// Fisher-Yates shuffle driven by c2f::Rng, then contiguous cuts.
CorpusSplit Split(const std::vector<Review>& reviews, const SplitRatios& ratios,
                  std::uint64_t seed);

std::string SerializeReviews(const std::vector<Review>& reviews);
std::vector<Review> ParseReviews(std::string_view text);

/// Bundle directory: vocab.tsv, users.tsv, items.tsv, {train,valid,test}.tsv,
/// manifest.txt.
void SaveBundle(const std::string& dir, const Corpus& corpus, const CorpusSplit& split);
struct Bundle {
  Corpus corpus;  // reviews = train ∪ valid ∪ test in split order
  CorpusSplit split;
};
Bundle LoadBundle(const std::string& dir);

}  // namespace c2f

#include "c2f/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "c2f/util.hpp"
#include "json.hpp"

namespace c2f {
namespace {

using nlohmann::json;

bool IsAsciiPunct(char c) {
  auto byte = static_cast<unsigned char>(c);
  return byte < 128 && std::ispunct(byte) != 0;
}

bool IsSentenceEnd(const std::string& token) {
  return token == "." || token == "!" || token == "?";
}

// Accepts "3", 3, 3.0.
bool ReadRating(const json& value, int* out) {
  if (value.is_number_integer()) {
    *out = value.get<int>();
    return true;
  }
  if (value.is_number_float()) {
    double v = value.get<double>();
    if (v != std::floor(v)) return false;
    *out = static_cast<int>(v);
    return true;
  }
  if (value.is_string()) {
    const std::string s = Trim(value.get<std::string>());
    if (s.empty()) return false;
    std::size_t used = 0;
    try {
      *out = std::stoi(s, &used);
    } catch (const std::exception&) {
      return false;
    }
    return used == s.size();
  }
  return false;
}

std::string ReadId(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  return {};
}

}  // namespace

IngestResult IngestText(std::string_view contents, const IngestSchema& schema) {
  IngestResult result;
  std::size_t non_blank = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (Trim(line).empty()) {
      if (end == contents.size()) break;
      continue;
    }
    ++non_blank;
    auto issue = [&](std::string message) {
      result.issues.push_back({line_no, std::move(message)});
    };
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      issue("not a JSON object");
    } else {
      RawReview review;
      bool ok = true;
      for (const std::string* field :
           {&schema.user_field, &schema.item_field, &schema.rating_field, &schema.text_field}) {
        if (!record.contains(*field)) {
          issue("missing field '" + *field + "'");
          ok = false;
          break;
        }
      }
      if (ok) {
        review.user_id = ReadId(record[schema.user_field]);
        review.item_id = ReadId(record[schema.item_field]);
        if (review.user_id.empty() || review.item_id.empty()) {
          issue("empty user or item id");
          ok = false;
        }
      }
      if (ok && !ReadRating(record[schema.rating_field], &review.rating)) {
        issue("rating is not an integer");
        ok = false;
      }
      if (ok && (review.rating < 1 || review.rating > schema.max_rating)) {
        issue("rating " + std::to_string(review.rating) + " outside 1.." +
              std::to_string(schema.max_rating));
        ok = false;
      }
      if (ok) {
        const json& text = record[schema.text_field];
        if (!text.is_string() || Trim(text.get<std::string>()).empty()) {
          issue("text is empty");
          ok = false;
        } else {
          review.text = text.get<std::string>();
        }
      }
      if (ok) result.reviews.push_back(std::move(review));
    }
    if (end == contents.size()) break;
  }
  if (non_blank == 0) ThrowData("empty corpus");
  const double bad = static_cast<double>(result.issues.size());
  if (bad > schema.max_malformed_fraction * static_cast<double>(non_blank)) {
    std::ostringstream msg;
    msg << result.issues.size() << " of " << non_blank << " lines malformed; lines:";
    for (const auto& i : result.issues) msg << ' ' << i.line;
    ThrowData(msg.str());
  }
  return result;
}

IngestResult Ingest(const std::string& path, const IngestSchema& schema) {
  return IngestText(ReadFile(path), schema);
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (begin == i) continue;
    std::string_view chunk = text.substr(begin, i - begin);
    std::size_t lead = 0;
    while (lead < chunk.size() && IsAsciiPunct(chunk[lead])) ++lead;
    std::size_t trail_begin = chunk.size();
    while (trail_begin > lead && IsAsciiPunct(chunk[trail_begin - 1])) --trail_begin;
    for (std::size_t k = 0; k < lead; ++k) tokens.emplace_back(1, chunk[k]);
    if (trail_begin > lead) tokens.emplace_back(chunk.substr(lead, trail_begin - lead));
    for (std::size_t k = trail_begin; k < chunk.size(); ++k) {
      if (k >= lead) tokens.emplace_back(1, chunk[k]);
    }
  }
  return tokens;
}

std::vector<std::vector<std::string>> SplitSentences(const std::vector<std::string>& tokens) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  for (const auto& token : tokens) {
    current.push_back(token);
    if (IsSentenceEnd(token)) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

std::string Detokenize(const std::vector<std::string>& tokens) { return Join(tokens, " "); }

// ---------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary() {
  Append("<pad>", 0);
  Append("<oov>", 0);
  Append("<s>", 0);
  Append("</s>", 0);
}

void Vocabulary::Append(std::string word, std::int64_t count) {
  if (index_.count(word) != 0) ThrowData("duplicate vocabulary entry: " + word);
  index_.emplace(word, static_cast<int>(words_.size()));
  words_.push_back(std::move(word));
  counts_.push_back(count);
}

Vocabulary Vocabulary::Build(const std::unordered_map<std::string, std::int64_t>& counts,
                             std::int64_t min_count) {
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [word, count] : counts) {
    if (count >= min_count) kept.emplace_back(word, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [word, count] : kept) vocab.Append(std::move(word), count);
  return vocab;
}

int Vocabulary::Index(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kOov : it->second;
}

bool Vocabulary::Contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

const std::string& Vocabulary::Word(int index) const {
  if (index < 0 || index >= size()) ThrowUsage("vocabulary index out of range: " + std::to_string(index));
  return words_[static_cast<std::size_t>(index)];
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (int i = kNumReserved; i < size(); ++i) {
    out += words_[static_cast<std::size_t>(i)];
    out += '\t';
    out += std::to_string(counts_[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::Parse(std::string_view text) {
  Vocabulary vocab;
  std::size_t line_no = 0;
  for (const auto& line : SplitOn(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      ThrowData("vocabulary line " + std::to_string(line_no) + ": expected word<TAB>count");
    }
    std::int64_t count = 0;
    try {
      count = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      ThrowData("vocabulary line " + std::to_string(line_no) + ": bad count");
    }
    vocab.Append(line.substr(0, tab), count);
  }
  return vocab;
}

// --------------------------------------------------------------------- IdMap

IdMap IdMap::Build(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  IdMap map;
  map.names_ = std::move(names);
  for (std::size_t i = 0; i < map.names_.size(); ++i) {
    map.index_.emplace(map.names_[i], static_cast<int>(i));
  }
  return map;
}

int IdMap::Find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? -1 : it->second;
}

std::string IdMap::Serialize() const {
  std::string out;
  for (const auto& n : names_) {
    out += n;
    out += '\n';
  }
  return out;
}

IdMap IdMap::Parse(std::string_view text) {
  std::vector<std::string> names;
  for (auto& line : SplitOn(text, '\n')) {
    if (!line.empty()) names.push_back(std::move(line));
  }
  return Build(std::move(names));
}

// -------------------------------------------------------------------- Review

std::size_t Review::TokenCount() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::string> Corpus::Words(const std::vector<int>& sentence) const {
  std::vector<std::string> words;
  words.reserve(sentence.size());
  for (int id : sentence) words.push_back(vocab.Word(id));
  return words;
}

Corpus Preprocess(const std::vector<RawReview>& raw, const PreprocessConfig& config,
                  PreprocessStats* stats) {
  struct Tokenized {
    const RawReview* source;
    std::vector<std::vector<std::string>> sentences;
  };
  PreprocessStats local;
  local.input = raw.size();

  std::vector<Tokenized> kept;
  for (const auto& review : raw) {
    if (review.rating < 1 || review.rating > config.max_rating) {
      ThrowData("rating out of range for user " + review.user_id);
    }
    auto tokens = Tokenize(ToLowerAscii(review.text));
    if (tokens.empty()) {
      ++local.dropped_length;
      continue;
    }
    if (static_cast<int>(tokens.size()) > config.max_review_tokens) {
      ++local.dropped_length;
      continue;
    }
    kept.push_back({&review, SplitSentences(tokens)});
  }

  // Dropping a user can push an item below threshold and vice versa.
  while (true) {
    ++local.pruning_rounds;
    std::unordered_map<std::string, int> user_counts;
    std::unordered_map<std::string, int> item_counts;
    for (const auto& t : kept) {
      ++user_counts[t.source->user_id];
      ++item_counts[t.source->item_id];
    }
    std::vector<Tokenized> next;
    next.reserve(kept.size());
    for (auto& t : kept) {
      if (user_counts[t.source->user_id] >= config.min_user_count &&
          item_counts[t.source->item_id] >= config.min_item_count) {
        next.push_back(std::move(t));
      }
    }
    const bool changed = next.size() != kept.size();
    local.dropped_sparse += kept.size() - next.size();
    kept = std::move(next);
    if (!changed) break;
  }
  if (kept.empty()) ThrowData("corpus empty after filtering");

  std::unordered_map<std::string, std::int64_t> counts;
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;
  for (const auto& t : kept) {
    user_names.push_back(t.source->user_id);
    item_names.push_back(t.source->item_id);
    for (const auto& s : t.sentences) {
      for (const auto& w : s) ++counts[w];
    }
  }

  Corpus corpus;
  corpus.vocab = Vocabulary::Build(counts, config.min_word_count);
  corpus.users = IdMap::Build(std::move(user_names));
  corpus.items = IdMap::Build(std::move(item_names));
  corpus.num_ratings = config.max_rating;
  corpus.reviews.reserve(kept.size());
  for (const auto& t : kept) {
    Review review;
    review.user = corpus.users.Find(t.source->user_id);
    review.item = corpus.items.Find(t.source->item_id);
    review.rating = t.source->rating - 1;
    for (const auto& s : t.sentences) {
      std::vector<int> ids;
      ids.reserve(s.size());
      for (const auto& w : s) ids.push_back(corpus.vocab.Index(w));
      review.sentences.push_back(std::move(ids));
    }
    corpus.reviews.push_back(std::move(review));
  }
  if (stats != nullptr) *stats = local;
  return corpus;
}

CorpusSplit Split(const std::vector<Review>& reviews, const SplitRatios& ratios,
                  std::uint64_t seed) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    ThrowUsage("split ratios must be non-negative and sum to 1");
  }
  if (reviews.size() < 3) ThrowData("need at least 3 reviews to split");
  const auto n = reviews.size();
  auto portion = [n](double r) {
    return static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
  };
  std::size_t n_valid = portion(ratios.valid);
  std::size_t n_test = portion(ratios.test);
  if (n_valid + n_test > n) n_test = n - n_valid;
  const std::size_t n_train = n - n_valid - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);

  CorpusSplit split;
  split.seed = seed;
  split.ratios = ratios;
  for (std::size_t k = 0; k < n; ++k) {
    const Review& r = reviews[order[k]];
    if (k < n_train) {
      split.train.push_back(r);
    } else if (k < n_train + n_valid) {
      split.valid.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

std::string SerializeReviews(const std::vector<Review>& reviews) {
  std::ostringstream out;
  for (const auto& r : reviews) {
    out << r.user << '\t' << r.item << '\t' << r.rating << '\t';
    for (std::size_t s = 0; s < r.sentences.size(); ++s) {
      if (s > 0) out << '|';
      for (std::size_t t = 0; t < r.sentences[s].size(); ++t) {
        if (t > 0) out << ' ';
        out << r.sentences[s][t];
      }
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Review> ParseReviews(std::string_view text) {
  std::vector<Review> reviews;
  std::size_t line_no = 0;
  for (const auto& line : SplitOn(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitOn(line, '\t');
    auto fail = [&](const std::string& why) {
      ThrowData("review line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 4) fail("expected 4 tab-separated fields");
    Review r;
    try {
      r.user = std::stoi(fields[0]);
      r.item = std::stoi(fields[1]);
      r.rating = std::stoi(fields[2]);
      for (const auto& sentence : SplitOn(fields[3], '|')) {
        std::vector<int> ids;
        std::istringstream in(sentence);
        int id = 0;
        while (in >> id) ids.push_back(id);
        if (ids.empty()) fail("empty sentence");
        r.sentences.push_back(std::move(ids));
      }
    } catch (const std::invalid_argument&) {
      fail("non-integer field");
    }
    reviews.push_back(std::move(r));
  }
  return reviews;
}

void SaveBundle(const std::string& dir, const Corpus& corpus, const CorpusSplit& split) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  WriteFile((root / "vocab.tsv").string(), corpus.vocab.Serialize());
  WriteFile((root / "users.tsv").string(), corpus.users.Serialize());
  WriteFile((root / "items.tsv").string(), corpus.items.Serialize());
  WriteFile((root / "train.tsv").string(), SerializeReviews(split.train));
  WriteFile((root / "valid.tsv").string(), SerializeReviews(split.valid));
  WriteFile((root / "test.tsv").string(), SerializeReviews(split.test));
  std::ostringstream manifest;
  manifest.precision(17);
  manifest << "format=c2f-bundle-1\n"
           << "seed=" << split.seed << '\n'
           << "ratio_train=" << split.ratios.train << '\n'
           << "ratio_valid=" << split.ratios.valid << '\n'
           << "ratio_test=" << split.ratios.test << '\n'
           << "num_ratings=" << corpus.num_ratings << '\n'
           << "train=" << split.train.size() << '\n'
           << "valid=" << split.valid.size() << '\n'
           << "test=" << split.test.size() << '\n';
  WriteFile((root / "manifest.txt").string(), manifest.str());
}

Bundle LoadBundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  Bundle bundle;
  std::map<std::string, std::string> manifest;
  for (const auto& line : SplitOn(ReadFile((root / "manifest.txt").string()), '\n')) {
    auto eq = line.find('=');
    if (eq != std::string::npos) manifest[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (manifest["format"] != "c2f-bundle-1") ThrowData("not a c2f bundle: " + dir);
  try {
    bundle.split.seed = std::stoull(manifest.at("seed"));
    bundle.split.ratios = {std::stod(manifest.at("ratio_train")),
                           std::stod(manifest.at("ratio_valid")),
                           std::stod(manifest.at("ratio_test"))};
    bundle.corpus.num_ratings = std::stoi(manifest.at("num_ratings"));
  } catch (const std::exception&) {
    ThrowData("bundle manifest incomplete: " + dir);
  }
  bundle.corpus.vocab = Vocabulary::Parse(ReadFile((root / "vocab.tsv").string()));
  bundle.corpus.users = IdMap::Parse(ReadFile((root / "users.tsv").string()));
  bundle.corpus.items = IdMap::Parse(ReadFile((root / "items.tsv").string()));
  bundle.split.train = ParseReviews(ReadFile((root / "train.tsv").string()));
  bundle.split.valid = ParseReviews(ReadFile((root / "valid.tsv").string()));
  bundle.split.test = ParseReviews(ReadFile((root / "test.tsv").string()));
  for (const auto* part : {&bundle.split.train, &bundle.split.valid, &bundle.split.test}) {
    for (const auto& r : *part) {
      for (const auto& s : r.sentences) {
        for (int id : s) {
          if (id < 0 || id >= bundle.corpus.vocab.size()) ThrowData("token id outside vocabulary");
        }
      }
      bundle.corpus.reviews.push_back(r);
    }
  }
  return bundle;
}

}  // namespace c2f

#include "c2f/sketcher.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "c2f/util.hpp"

namespace c2f {
namespace {

constexpr char kKeySep = '\x1f';

std::string Key(std::span<const std::string> words) {
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) key += kKeySep;
    key += words[i];
  }
  return key;
}

bool Countable(const std::string& word, bool skip_punctuation) {
  // Reserved vocabulary markers such as <oov>.
  if (word.size() > 2 && word.front() == '<' && word.back() == '>') return false;
  if (!skip_punctuation) return true;
  for (char c : word) {
    auto byte = static_cast<unsigned char>(c);
    if (byte >= 128 || std::ispunct(byte) == 0) return true;
  }
  return false;
}

std::string JoinSymbol(const std::vector<std::string>& words) { return Join(words, "_"); }

}  // namespace

// ---------------------------------------------------------------- NgramTable

NgramTable NgramTable::FromEntries(std::vector<Ngram> entries) {
  NgramTable table;
  for (auto& e : entries) {
    if (e.words.size() < 2 || e.words.size() > 3) ThrowUsage("n-gram must have 2 or 3 words");
    if (e.symbol.empty()) e.symbol = JoinSymbol(e.words);
    table.index_.emplace(Key(e.words), table.entries_.size());
    table.entries_.push_back(std::move(e));
  }
  return table;
}

NgramTable NgramTable::Mine(const std::vector<std::vector<std::string>>& sentences,
                            const MineOptions& options) {
  std::unordered_map<std::string, std::pair<std::vector<std::string>, std::int64_t>> counts;
  for (const auto& s : sentences) {
    for (std::size_t n = 2; n <= 3; ++n) {
      if (s.size() < n) continue;
      for (std::size_t i = 0; i + n <= s.size(); ++i) {
        std::span<const std::string> window(s.data() + i, n);
        bool ok = true;
        for (const auto& w : window) ok = ok && Countable(w, options.skip_punctuation);
        if (!ok) continue;
        auto key = Key(window);
        auto it = counts.find(key);
        if (it == counts.end()) {
          counts.emplace(std::move(key),
                         std::make_pair(std::vector<std::string>(window.begin(), window.end()), 1));
        } else {
          ++it->second.second;
        }
      }
    }
  }
  std::vector<Ngram> ranked;
  ranked.reserve(counts.size());
  for (auto& [key, value] : counts) {
    Ngram g;
    g.words = std::move(value.first);
    g.count = value.second;
    ranked.push_back(std::move(g));
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ngram& a, const Ngram& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.words.size() != b.words.size()) return a.words.size() > b.words.size();
    return a.words < b.words;
  });
  if (ranked.size() > static_cast<std::size_t>(std::max(0, options.top_ngrams))) {
    ranked.resize(static_cast<std::size_t>(std::max(0, options.top_ngrams)));
  }
  return FromEntries(std::move(ranked));
}

const Ngram* NgramTable::Find(std::span<const std::string> words) const {
  auto it = index_.find(Key(words));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string NgramTable::Serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    out += Join(e.words, " ");
    out += '\t';
    out += std::to_string(e.count);
    out += '\n';
  }
  return out;
}

NgramTable NgramTable::Parse(std::string_view text) {
  std::vector<Ngram> entries;
  std::size_t line_no = 0;
  for (const auto& line : SplitOn(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitOn(line, '\t');
    if (fields.size() != 2) ThrowData("ngram line " + std::to_string(line_no) + ": expected 2 fields");
    Ngram g;
    g.words = SplitOn(fields[0], ' ');
    try {
      g.count = std::stoll(fields[1]);
    } catch (const std::exception&) {
      ThrowData("ngram line " + std::to_string(line_no) + ": bad count");
    }
    if (g.words.size() < 2 || g.words.size() > 3) {
      ThrowData("ngram line " + std::to_string(line_no) + ": need 2 or 3 words");
    }
    entries.push_back(std::move(g));
  }
  return FromEntries(std::move(entries));
}

// ------------------------------------------------------------------ KeepSets

void KeepSets::Index() {
  aspect_lookup_.clear();
  for (const auto& words : aspect_words) aspect_lookup_.emplace_back(words.begin(), words.end());
  global_lookup_ = {global_words.begin(), global_words.end()};
}

bool KeepSets::IsAspectWord(int aspect, const std::string& word) const {
  if (aspect < 0 || aspect >= num_aspects()) return false;
  return aspect_lookup_[static_cast<std::size_t>(aspect)].count(word) != 0;
}

bool KeepSets::Keeps(int aspect, const std::string& word) const {
  return global_lookup_.count(word) != 0 || IsAspectWord(aspect, word);
}

KeepSets KeepSets::FromLists(std::vector<std::vector<std::string>> aspect_words,
                             std::vector<std::string> global_words) {
  KeepSets keep;
  keep.aspect_words = std::move(aspect_words);
  keep.global_words = std::move(global_words);
  keep.Index();
  return keep;
}

KeepSets KeepSets::Build(const AspectModel& model, const Corpus& corpus, int aspect_k,
                         int global_k, const std::vector<std::vector<std::string>>& stop_lists) {
  std::vector<std::vector<std::string>> aspects;
  for (int a = 0; a < model.num_aspects; ++a) {
    std::unordered_set<std::string> stop;
    if (static_cast<std::size_t>(a) < stop_lists.size()) {
      stop.insert(stop_lists[static_cast<std::size_t>(a)].begin(),
                  stop_lists[static_cast<std::size_t>(a)].end());
    }
    std::vector<std::string> words;
    for (int id : TopWords(model, a, aspect_k)) {
      const auto& w = corpus.vocab.Word(id);
      if (stop.count(w) == 0) words.push_back(w);
    }
    aspects.push_back(std::move(words));
  }
  std::vector<std::string> global;
  for (int id = Vocabulary::kNumReserved;
       id < corpus.vocab.size() && static_cast<int>(global.size()) < global_k; ++id) {
    global.push_back(corpus.vocab.Word(id));
  }
  return FromLists(std::move(aspects), std::move(global));
}

std::string KeepSets::Serialize() const {
  std::string out = "global\t" + Join(global_words, " ") + "\n";
  for (std::size_t a = 0; a < aspect_words.size(); ++a) {
    out += "aspect\t" + std::to_string(a) + "\t" + Join(aspect_words[a], " ") + "\n";
  }
  return out;
}

KeepSets KeepSets::Parse(std::string_view text) {
  std::vector<std::vector<std::string>> aspects;
  std::vector<std::string> global;
  auto words_of = [](const std::string& field) {
    std::vector<std::string> words;
    for (auto& w : SplitOn(field, ' ')) {
      if (!w.empty()) words.push_back(std::move(w));
    }
    return words;
  };
  for (const auto& line : SplitOn(text, '\n')) {
    if (line.empty()) continue;
    auto fields = SplitOn(line, '\t');
    if (fields[0] == "global" && fields.size() == 2) {
      global = words_of(fields[1]);
    } else if (fields[0] == "aspect" && fields.size() == 3) {
      const auto a = static_cast<std::size_t>(std::stoul(fields[1]));
      if (aspects.size() <= a) aspects.resize(a + 1);
      aspects[a] = words_of(fields[2]);
    } else {
      ThrowData("keep-set file: unrecognized line: " + line);
    }
  }
  return FromLists(std::move(aspects), std::move(global));
}

std::vector<std::vector<std::string>> ParseStopLists(std::string_view text, int num_aspects) {
  std::vector<std::vector<std::string>> lists(static_cast<std::size_t>(num_aspects));
  for (const auto& line : SplitOn(text, '\n')) {
    if (Trim(line).empty() || line[0] == '#') continue;
    auto fields = SplitOn(line, '\t');
    if (fields.size() != 2) ThrowData("stop-list line needs aspect<TAB>word: " + line);
    const int a = std::stoi(fields[0]);
    if (a < 0 || a >= num_aspects) ThrowData("stop-list aspect out of range: " + fields[0]);
    lists[static_cast<std::size_t>(a)].push_back(Trim(fields[1]));
  }
  return lists;
}

// -------------------------------------------------------------------- Sketch

std::vector<std::string> Sketch::Symbols() const {
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(s.symbol);
  return out;
}

int Sketch::TotalWidth() const {
  int total = 0;
  for (const auto& s : slots) total += s.width();
  return total;
}

std::vector<int> AlignmentFor(std::span<const SketchSlot> slots) {
  std::vector<int> alignment;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (int k = 0; k < slots[i].width(); ++k) alignment.push_back(static_cast<int>(i));
  }
  return alignment;
}

Sketch DeriveSketch(std::span<const std::string> sentence, int aspect, const NgramTable& ngrams,
                    const KeepSets& keep, const PosTagger& tagger, std::span<const PosTag> tags) {
  if (sentence.empty()) ThrowUsage("DeriveSketch: empty sentence");
  if (aspect < 0 || (keep.num_aspects() > 0 && aspect >= keep.num_aspects())) {
    ThrowUsage("DeriveSketch: aspect id out of range");
  }
  std::vector<PosTag> own_tags;
  if (tags.empty()) {
    own_tags = tagger.Tag(sentence);
    tags = own_tags;
  } else if (tags.size() != sentence.size()) {
    ThrowUsage("DeriveSketch: gold tag count differs from sentence length");
  }

  Sketch sketch;
  std::size_t i = 0;
  while (i < sentence.size()) {
    const Ngram* hit = nullptr;
    for (std::size_t n = 3; n >= 2 && hit == nullptr; --n) {
      if (i + n <= sentence.size()) hit = ngrams.Find(sentence.subspan(i, n));
    }
    if (hit != nullptr) {
      sketch.slots.push_back({SlotKind::kNgram, hit->symbol, hit->words});
      i += hit->words.size();
      continue;
    }
    const std::string& word = sentence[i];
    if (keep.Keeps(aspect, word)) {
      sketch.slots.push_back({SlotKind::kWord, word, {word}});
    } else {
      sketch.slots.push_back({SlotKind::kPos, std::string(TagName(tags[i])), {}});
    }
    ++i;
  }
  sketch.alignment = AlignmentFor(sketch.slots);
  return sketch;
}

std::vector<std::string> Realize(const Sketch& sketch, const std::map<int, std::string>& pos_words) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sketch.slots.size(); ++i) {
    const auto& slot = sketch.slots[i];
    if (slot.kind == SlotKind::kPos) {
      auto it = pos_words.find(static_cast<int>(i));
      if (it == pos_words.end()) {
        ThrowUsage("Realize: no word supplied for POS slot " + std::to_string(i) + " (" +
                   slot.symbol + ")");
      }
      out.push_back(it->second);
    } else {
      out.insert(out.end(), slot.words.begin(), slot.words.end());
    }
  }
  return out;
}

// --------------------------------------------------------------- SketchVocab

void SketchVocab::Add(Entry entry) {
  if (index_.count(entry.symbol) != 0) return;
  index_.emplace(entry.symbol, size());
  entries_.push_back(std::move(entry));
}

SketchVocab SketchVocab::Build(const NgramTable& ngrams, const KeepSets& keep) {
  SketchVocab v;
  v.Add({"<start>", SlotKind::kWord, {}});
  v.Add({"<end>", SlotKind::kWord, {}});
  for (PosTag t : AllTags()) v.Add({std::string(TagName(t)), SlotKind::kPos, {}});
  for (const auto& g : ngrams.entries()) v.Add({g.symbol, SlotKind::kNgram, g.words});
  std::vector<std::string> words(keep.global_words.begin(), keep.global_words.end());
  for (const auto& list : keep.aspect_words) words.insert(words.end(), list.begin(), list.end());
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (const auto& w : words) v.Add({w, SlotKind::kWord, {w}});
  return v;
}

int SketchVocab::Find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? -1 : it->second;
}

int SketchVocab::WidthOf(int id) const {
  if (IsControl(id)) return 0;
  const auto& e = at(id);
  return e.kind == SlotKind::kPos ? 1 : static_cast<int>(e.words.size());
}

std::vector<int> SketchVocab::Encode(const Sketch& sketch) const {
  std::vector<int> ids;
  ids.reserve(sketch.slots.size());
  for (const auto& slot : sketch.slots) {
    const int id = Find(slot.symbol);
    if (id < 0 || IsControl(id)) ThrowData("sketch symbol outside vocabulary: " + slot.symbol);
    ids.push_back(id);
  }
  return ids;
}

Sketch SketchVocab::Decode(std::span<const int> ids) const {
  Sketch sketch;
  for (int id : ids) {
    if (id < 0 || id >= size() || IsControl(id)) {
      ThrowUsage("SketchVocab::Decode: invalid symbol id " + std::to_string(id));
    }
    const auto& e = at(id);
    sketch.slots.push_back({e.kind, e.symbol, e.words});
  }
  sketch.alignment = AlignmentFor(sketch.slots);
  return sketch;
}

std::string SketchVocab::Serialize() const {
  std::string out;
  for (int id = kFirstTag; id < size(); ++id) {
    const auto& e = at(id);
    const char* kind = e.kind == SlotKind::kPos ? "pos" : e.kind == SlotKind::kNgram ? "ngram" : "word";
    out += std::string(kind) + "\t" + e.symbol + "\t" + Join(e.words, " ") + "\n";
  }
  return out;
}

SketchVocab SketchVocab::Parse(std::string_view text) {
  SketchVocab v;
  v.Add({"<start>", SlotKind::kWord, {}});
  v.Add({"<end>", SlotKind::kWord, {}});
  for (const auto& line : SplitOn(text, '\n')) {
    if (line.empty()) continue;
    auto fields = SplitOn(line, '\t');
    if (fields.size() != 3) ThrowData("sketch vocabulary: bad line: " + line);
    Entry e;
    e.symbol = fields[1];
    if (fields[0] == "pos") {
      e.kind = SlotKind::kPos;
    } else if (fields[0] == "ngram") {
      e.kind = SlotKind::kNgram;
      e.words = SplitOn(fields[2], ' ');
    } else if (fields[0] == "word") {
      e.kind = SlotKind::kWord;
      e.words = {fields[2]};
    } else {
      ThrowData("sketch vocabulary: unknown kind " + fields[0]);
    }
    v.Add(std::move(e));
  }
  return v;
}

}  // namespace c2f

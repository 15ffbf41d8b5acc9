#include "c2f/synthetic.hpp"

#include <array>
#include <json.hpp>

#include "c2f/util.hpp"

namespace c2f {

namespace {

struct AspectLexicon {
  std::array<const char*, 6> nouns;
  std::array<const char*, 6> adjectives;
};

constexpr std::array<AspectLexicon, 3> kLexicon{{
    {{"sound", "bass", "vocals", "treble", "audio", "volume"},
     {"clear", "crisp", "rich", "muddy", "loud", "warm"}},
    {{"battery", "charge", "charger", "power", "runtime", "cable"},
     {"long", "weak", "reliable", "quick", "solid", "short"}},
    {{"price", "value", "cost", "deal", "money", "bargain"},
     {"cheap", "fair", "great", "high", "low", "decent"}},
}};

std::string Fill(int tmpl, const std::string& noun, const std::string& adj, const std::string& noun2) {
  switch (tmpl) {
    case 0: return "the " + noun + " is " + adj + " .";
    case 1: return "i think the " + noun + " is pretty " + adj + " .";
    case 2: return "the " + noun + " and the " + noun2 + " are pretty well .";
    default: return "overall the " + noun + " was really " + adj + " for me .";
  }
}

}  // namespace

DeskCorpus MakeDeskCorpus(const DeskCorpusOptions& options) {
  DeskCorpus out;
  Rng rng(options.seed);
  // Per-pair choices are drawn once so that the corpus is a fixed function of the seed.
  for (int u = 0; u < options.users; ++u) {
    for (int i = 0; i < options.items; ++i) {
      RawReview r;
      r.user_id = "u" + std::to_string(u);
      r.item_id = "i" + std::to_string(i);
      r.rating = 1 + (u + 2 * i) % 5;
      const int length = 1 + (i + r.rating) % 3;
      const int first = (i + r.rating) % 3;
      std::vector<int> aspects;
      std::string text;
      for (int j = 0; j < length; ++j) {
        const int a = (first + j) % 3;
        const auto& lex = kLexicon[static_cast<std::size_t>(a)];
        const std::string noun = lex.nouns[rng.Below(6)];
        const std::string noun2 = lex.nouns[rng.Below(6)];
        const std::string adj = lex.adjectives[rng.Below(6)];
        if (!text.empty()) text += ' ';
        text += Fill(static_cast<int>(rng.Below(4)), noun, adj, noun2);
        aspects.push_back(a);
      }
      r.text = text;
      out.reviews.push_back(std::move(r));
      out.planted_aspects.push_back(std::move(aspects));
    }
  }
  return out;
}

std::string ToJsonl(const std::vector<RawReview>& reviews) {
  std::string out;
  for (const auto& r : reviews) {
    nlohmann::json j{{"user_id", r.user_id}, {"item_id", r.item_id}, {"rating", r.rating},
                     {"text", r.text}};
    out += j.dump() + "\n";
  }
  return out;
}

PlantedCorpus SamplePlanted(const PlantedOptions& o) {
  if (o.num_aspects < 1 || o.words_per_aspect < 1 || o.reviews < 1) {
    ThrowUsage("planted corpus needs aspects, words and reviews");
  }
  PlantedCorpus out;
  const int first_topic_word = Vocabulary::kNumReserved + o.background_words;
  out.vocab_size = first_topic_word + o.num_aspects * o.words_per_aspect;
  Rng rng(o.seed);
  for (int d = 0; d < o.reviews; ++d) {
    Review r;
    r.user = d;
    r.item = d;
    std::vector<int> topics;
    const int m = o.min_sentences +
                  static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.max_sentences - o.min_sentences + 1)));
    for (int j = 0; j < m; ++j) {
      const int topic = static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.num_aspects)));
      const int n = o.min_words +
                    static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.max_words - o.min_words + 1)));
      std::vector<int> sentence;
      for (int t = 0; t < n; ++t) {
        if (o.background_words > 0 && rng.Bernoulli(o.background_prob)) {
          sentence.push_back(Vocabulary::kNumReserved +
                             static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.background_words))));
        } else {
          sentence.push_back(first_topic_word + topic * o.words_per_aspect +
                             static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.words_per_aspect))));
        }
      }
      r.sentences.push_back(std::move(sentence));
      topics.push_back(topic);
    }
    out.reviews.push_back(std::move(r));
    out.topics.push_back(std::move(topics));
  }
  return out;
}

}  // namespace c2f

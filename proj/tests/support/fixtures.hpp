#pragma once

// Shared builders for small random models and hand-made corpora.

#include <vector>

#include "c2f/model.hpp"
#include "c2f/pipeline.hpp"
#include "c2f/sketcher.hpp"

namespace c2f::testing {

/// Everything at most 8 wide; tables small enough for exhaustive checks.
inline ModelDims TinyDims() {
  ModelDims d;
  d.num_users = 3;
  d.num_items = 4;
  d.num_ratings = 5;
  d.num_aspects = 3;
  d.sketch_vocab = 7;
  d.word_vocab = 9;
  d.embed_dim = 4;
  d.context_dim = 6;
  d.aspect_dim = 5;
  d.aspect_hidden = 6;
  d.sketch_dim = 5;
  d.sketch_hidden = 6;
  d.word_dim = 4;
  d.word_hidden = 6;
  d.layers = 2;
  return d;
}

/// Random rows on the simplex, one per aspect.
inline nn::Matrix RandomTheta(int aspects, int words, Rng& rng) {
  nn::Matrix theta(aspects, words);
  for (int a = 0; a < aspects; ++a) {
    double sum = 0.0;
    for (int w = 0; w < words; ++w) sum += theta(a, w) = rng.Uniform(0.05, 1.0);
    theta.row(a) /= sum;
  }
  return theta;
}

inline ReviewModel RandomModel(const ModelDims& dims, std::uint64_t seed, double scale = 0.5,
                               ReviewDecoderOptions review = {}) {
  ModelOptions o;
  o.dims = dims;
  o.review = review;
  ReviewModel model(o);
  Rng rng(seed);
  model.Initialize(rng, scale);
  model.SetBoost(RandomTheta(dims.num_aspects, dims.word_vocab, rng));
  return model;
}

/// A review-shaped triple whose ids fit `dims`. Sketch symbols avoid START/END;
/// words avoid the reserved ids.
inline TrainingTriple RandomTriple(const ModelDims& dims, Rng& rng, int sentences = 2) {
  TrainingTriple t;
  t.user = static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.num_users)));
  t.item = static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.num_items)));
  t.rating = static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.num_ratings)));
  for (int j = 0; j < sentences; ++j) {
    t.aspects.push_back(static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.num_aspects))));
    const int slots = 1 + static_cast<int>(rng.Below(3));
    std::vector<int> sketch, alignment, words;
    for (int s = 0; s < slots; ++s) {
      sketch.push_back(2 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.sketch_vocab - 2))));
      const int width = 1 + static_cast<int>(rng.Below(2));
      for (int k = 0; k < width; ++k) {
        alignment.push_back(s);
        words.push_back(Vocabulary::kNumReserved +
                        static_cast<int>(rng.Below(static_cast<std::uint64_t>(dims.word_vocab - Vocabulary::kNumReserved))));
      }
    }
    t.sketches.push_back(std::move(sketch));
    t.alignments.push_back(std::move(alignment));
    t.sentences.push_back(std::move(words));
  }
  return t;
}

/// Sets every parameter whose name starts with `prefix` to zero.
inline void ZeroParams(ReviewModel& model, std::string_view prefix) {
  for (const auto& p : model.store().all()) {
    if (p->name.starts_with(prefix)) p->value.setZero();
  }
}

/// Tables for the "the vocals are pretty well" example: "pretty well" mined,
/// "the" and "are" globally kept, "vocals" tagged NN by lexicon entry.
struct VocalsFixture {
  NgramTable ngrams;
  KeepSets keep;
  RuleTagger tagger;
  std::vector<std::string> sentence{"the", "vocals", "are", "pretty", "well"};

  VocalsFixture() {
    ngrams = NgramTable::FromEntries({Ngram{{"pretty", "well"}, 12, "pretty_well"}});
    keep = KeepSets::FromLists({{"sound", "bass"}, {"price", "cheap"}}, {"the", "are", "is", "i"});
    tagger.AddEntry("vocals", PosTag::kNN);
  }
};

}  // namespace c2f::testing

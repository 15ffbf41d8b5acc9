#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2f/corpus.hpp"

namespace c2f {

/// Small templated review corpus with three planted aspects (sound, battery,
/// price). Every (user, item) pair writes one review; the rating and aspect
/// sequence are functions of the pair, so a model can memorize them.
struct DeskCorpusOptions {
  int users = 8;
  int items = 8;
  std::uint64_t seed = 1;
};

struct DeskCorpus {
  std::vector<RawReview> reviews;
  std::vector<std::vector<int>> planted_aspects;  // per review, per sentence
};

DeskCorpus MakeDeskCorpus(const DeskCorpusOptions& options);

/// JSONL with user_id, item_id, rating and text fields.
std::string ToJsonl(const std::vector<RawReview>& reviews);

/// Reviews sampled from a known sentence-level topic model: disjoint topic
/// vocabularies, a shared background vocabulary and one topic per sentence.
struct PlantedOptions {
  int num_aspects = 3;
  int words_per_aspect = 30;
  int background_words = 30;
  double background_prob = 0.1;
  int reviews = 500;
  int min_sentences = 2;
  int max_sentences = 4;
  int min_words = 6;
  int max_words = 10;
  std::uint64_t seed = 1;
};

struct PlantedCorpus {
  std::vector<Review> reviews;
  std::vector<std::vector<int>> topics;  // planted aspect per sentence
  int vocab_size = 0;                    // including reserved ids
};

PlantedCorpus SamplePlanted(const PlantedOptions& options);

}  // namespace c2f

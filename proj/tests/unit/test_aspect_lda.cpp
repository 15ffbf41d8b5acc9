#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "c2f/aspect_lda.hpp"
#include "c2f/synthetic.hpp"

namespace c2f {
namespace {

constexpr int R = Vocabulary::kNumReserved;

double RowSum(std::span<const double> row) { return std::accumulate(row.begin(), row.end(), 0.0); }

/// Fraction of sentences whose recovered tag matches the planted one under the
/// best relabelling of recovered ids.
double BestPermutationAccuracy(const std::vector<std::vector<int>>& planted,
                               const std::vector<SentenceAssignment>& recovered, int aspects) {
  std::vector<int> perm(static_cast<std::size_t>(aspects));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    std::size_t hit = 0;
    for (const auto& s : recovered) {
      hit += perm[static_cast<std::size_t>(s.aspect)] == planted[s.review][s.sentence];
    }
    best = std::max(best, static_cast<double>(hit) / static_cast<double>(recovered.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Hand-built model over `usable` non-reserved words.
AspectModel ToyModel(std::vector<std::vector<double>> rows, std::vector<double> background,
                     double p_bg) {
  AspectModel m;
  m.num_aspects = static_cast<int>(rows.size());
  m.vocab_size = R + static_cast<int>(background.size());
  m.background_prob = p_bg;
  m.background.assign(R, 0.0);
  m.background.insert(m.background.end(), background.begin(), background.end());
  for (auto& row : rows) {
    m.theta.insert(m.theta.end(), R, 0.0);
    m.theta.insert(m.theta.end(), row.begin(), row.end());
  }
  m.aspect_share.assign(rows.size(), 1.0 / static_cast<double>(rows.size()));
  return m;
}

Review OneReview(std::vector<std::vector<int>> sentences) {
  Review r;
  r.sentences = std::move(sentences);
  return r;
}

TEST(FitGibbs, SingleAspectTagsEverythingZero) {
  const auto planted = SamplePlanted({.num_aspects = 2, .reviews = 30, .seed = 4});
  LdaConfig cfg;
  cfg.num_aspects = 1;
  cfg.iterations = 30;
  cfg.burn_in = 10;
  std::vector<SentenceAssignment> tags;
  const AspectModel m = FitGibbs(planted.reviews, planted.vocab_size, cfg, &tags);
  for (const auto& s : tags) EXPECT_EQ(s.aspect, 0);
  EXPECT_NEAR(RowSum(m.ThetaRow(0)), 1.0, 1e-9);
}

TEST(FitGibbs, SingleAspectThetaIsSmoothedCounts) {
  const auto planted = SamplePlanted({.num_aspects = 2, .reviews = 20, .seed = 5});
  LdaConfig cfg;
  cfg.num_aspects = 1;
  GibbsSampler sampler(planted.reviews, planted.vocab_size, cfg);
  sampler.Sweep();
  const AspectModel m = sampler.Snapshot();
  std::vector<double> counts(static_cast<std::size_t>(planted.vocab_size), 0.0);
  double total = 0.0;
  for (const auto& s : sampler.assignments()) {
    const auto& words = planted.reviews[s.review].sentences[s.sentence];
    for (std::size_t t = 0; t < words.size(); ++t) {
      if (!s.background[t]) {
        counts[static_cast<std::size_t>(words[t])] += 1.0;
        total += 1.0;
      }
    }
  }
  const double denom = total + planted.vocab_size * cfg.beta;
  for (int w = 0; w < planted.vocab_size; ++w) {
    EXPECT_NEAR(m.Theta(0, w), (counts[static_cast<std::size_t>(w)] + cfg.beta) / denom, 1e-12);
  }
}

TEST(FitGibbs, RecoversPlantedTwoTopicCorpus) {
  PlantedOptions opt;
  opt.num_aspects = 2;
  opt.background_words = 0;
  opt.background_prob = 0.0;
  opt.reviews = 200;
  opt.seed = 9;
  const auto planted = SamplePlanted(opt);
  LdaConfig cfg;
  cfg.num_aspects = 2;
  cfg.iterations = 150;
  cfg.burn_in = 50;
  std::vector<SentenceAssignment> tags;
  const AspectModel m = FitGibbs(planted.reviews, planted.vocab_size, cfg, &tags);
  EXPECT_GE(BestPermutationAccuracy(planted.topics, tags, 2), 0.95);
  // Tagging with the fitted model agrees as well.
  std::vector<SentenceAssignment> retagged = tags;
  for (auto& s : retagged) s.aspect = AssignAspect(m, planted.reviews[s.review].sentences[s.sentence]).aspect;
  EXPECT_GE(BestPermutationAccuracy(planted.topics, retagged, 2), 0.95);
}

TEST(FitGibbs, RepeatedWordSingleSentence) {
  const std::vector<Review> reviews{OneReview({{R, R, R}})};
  LdaConfig cfg;
  cfg.num_aspects = 2;
  cfg.iterations = 20;
  cfg.burn_in = 5;
  std::vector<SentenceAssignment> tags;
  const AspectModel m = FitGibbs(reviews, R + 1, cfg, &tags);
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_TRUE(tags[0].aspect == 0 || tags[0].aspect == 1);
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(RowSum(m.ThetaRow(a)), 1.0, 1e-9);
    for (double v : m.ThetaRow(a)) EXPECT_GE(v, 0.0);
  }
}

TEST(FitGibbs, NoSentencesIsFatal) {
  EXPECT_THROW(FitGibbs({}, 10, LdaConfig{}), Error);
  EXPECT_THROW(FitGibbs({OneReview({})}, 10, LdaConfig{}), Error);
}

TEST(FitGibbs, RejectsBadSchedule) {
  const std::vector<Review> reviews{OneReview({{R, R + 1}})};
  LdaConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 10;
  EXPECT_THROW(FitGibbs(reviews, R + 2, cfg), Error);
  cfg.num_aspects = 0;
  cfg.burn_in = 0;
  EXPECT_THROW(FitGibbs(reviews, R + 2, cfg), Error);
}

TEST(GibbsSampler, SimplexAndConservationAfterEverySweep) {
  const auto planted = SamplePlanted({.num_aspects = 3, .reviews = 40, .seed = 2});
  LdaConfig cfg;
  cfg.num_aspects = 3;
  GibbsSampler sampler(planted.reviews, planted.vocab_size, cfg);
  std::int64_t sentences = 0, tokens = 0;
  for (const auto& r : planted.reviews) {
    sentences += static_cast<std::int64_t>(r.sentences.size());
    for (const auto& s : r.sentences) tokens += static_cast<std::int64_t>(s.size());
  }
  for (int sweep = 0; sweep < 15; ++sweep) {
    sampler.Sweep();
    ASSERT_TRUE(sampler.CountsConsistent());
    EXPECT_EQ(sampler.TotalSentenceCount(), sentences);
    EXPECT_EQ(sampler.TotalTokenCount(), tokens);
    const AspectModel m = sampler.Snapshot();
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(RowSum(m.ThetaRow(a)), 1.0, 1e-9);
    EXPECT_NEAR(RowSum(m.background), 1.0, 1e-9);
  }
}

TEST(FitGibbs, SeedDeterminism) {
  const auto planted = SamplePlanted({.num_aspects = 3, .reviews = 40, .seed = 2});
  LdaConfig cfg;
  cfg.num_aspects = 3;
  cfg.iterations = 40;
  cfg.burn_in = 10;
  cfg.seed = 17;
  const AspectModel a = FitGibbs(planted.reviews, planted.vocab_size, cfg);
  const AspectModel b = FitGibbs(planted.reviews, planted.vocab_size, cfg);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.background, b.background);
  EXPECT_EQ(a.Serialize(), b.Serialize());
}

TEST(FitGibbs, RecoversPlantedModelWithBackground) {
  const auto planted = SamplePlanted({.num_aspects = 3, .reviews = 300, .seed = 21});
  LdaConfig cfg;
  cfg.num_aspects = 3;
  cfg.iterations = 120;
  cfg.burn_in = 40;
  std::vector<SentenceAssignment> tags;
  FitGibbs(planted.reviews, planted.vocab_size, cfg, &tags);
  EXPECT_GE(BestPermutationAccuracy(planted.topics, tags, 3), 0.9);
}

TEST(AspectModelText, RoundTrip) {
  const auto planted = SamplePlanted({.num_aspects = 2, .reviews = 10, .seed = 2});
  LdaConfig cfg;
  cfg.num_aspects = 2;
  cfg.iterations = 12;
  cfg.burn_in = 2;
  const AspectModel m = FitGibbs(planted.reviews, planted.vocab_size, cfg);
  const AspectModel back = AspectModel::Parse(m.Serialize());
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.background, m.background);
  EXPECT_EQ(back.background_prob, m.background_prob);
  EXPECT_EQ(back.num_aspects, 2);
}

// Brute-force posterior: multiply per-token mixture probabilities directly.
int BruteForceTag(const AspectModel& m, const std::vector<int>& sentence) {
  int best = 0;
  double best_p = -1.0;
  for (int a = 0; a < m.num_aspects; ++a) {
    double p = 1.0;
    for (int w : sentence) {
      p *= (1.0 - m.background_prob) * m.Theta(a, w) +
           m.background_prob * m.background[static_cast<std::size_t>(w)];
    }
    if (p > best_p) {
      best_p = p;
      best = a;
    }
  }
  return best;
}

TEST(AssignAspect, TopWordOfAspectTwo) {
  const AspectModel m = ToyModel({{0.5, 0.3, 0.1, 0.1}, {0.1, 0.5, 0.3, 0.1}, {0.1, 0.1, 0.2, 0.6}},
                                 {0.25, 0.25, 0.25, 0.25}, 0.2);
  const std::vector<int> sentence{R + 3};
  EXPECT_EQ(BruteForceTag(m, sentence), 2);
  EXPECT_EQ(AssignAspect(m, sentence).aspect, 2);
}

TEST(AssignAspect, MatchesBruteForceOnRandomToyModels) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> rows(3, std::vector<double>(5));
    std::vector<double> bg(5);
    for (auto& row : rows) {
      double sum = 0;
      for (double& v : row) sum += v = rng.Uniform(0.01, 1.0);
      for (double& v : row) v /= sum;
    }
    double sum = 0;
    for (double& v : bg) sum += v = rng.Uniform(0.01, 1.0);
    for (double& v : bg) v /= sum;
    const AspectModel m = ToyModel(rows, bg, rng.Uniform(0.0, 0.5));
    std::vector<int> sentence;
    for (int t = 0; t < 1 + static_cast<int>(rng.Below(6)); ++t) sentence.push_back(R + static_cast<int>(rng.Below(5)));
    EXPECT_EQ(AssignAspect(m, sentence).aspect, BruteForceTag(m, sentence));
  }
}

TEST(AssignAspect, TiesGoToLowestId) {
  const AspectModel m = ToyModel({{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5}, 0.1);
  EXPECT_EQ(AssignAspect(m, std::vector<int>{R, R + 1}).aspect, 0);
}

TEST(AssignAspect, EmptySentenceIsAnError) {
  const AspectModel m = ToyModel({{1.0}}, {1.0}, 0.1);
  EXPECT_THROW(AssignAspect(m, std::vector<int>{}), Error);
}

TEST(AssignAspect, SingleAspectModelAlwaysZero) {
  const AspectModel m = ToyModel({{0.2, 0.8}}, {0.5, 0.5}, 0.3);
  EXPECT_EQ(AssignAspect(m, std::vector<int>{R + 1, R}).aspect, 0);
}

TEST(AssignAspect, AllOovFallsBackAndFlags) {
  AspectModel m = ToyModel({{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5}, 0.1);
  m.aspect_share = {0.3, 0.7};
  const AspectTag tag = AssignAspect(m, std::vector<int>{Vocabulary::kOov, Vocabulary::kOov});
  EXPECT_TRUE(tag.fallback);
  EXPECT_EQ(tag.aspect, 1);
}

TEST(TopWords, PeakWordFirst) {
  // Word R + 2 plays "battery".
  const AspectModel m = ToyModel({{0.1, 0.2, 0.6, 0.1}}, {0.25, 0.25, 0.25, 0.25}, 0.1);
  EXPECT_EQ(TopWords(m, 0, 1), std::vector<int>{R + 2});
}

TEST(TopWords, FullLengthIsPermutationAndTiesByIndex) {
  const AspectModel m = ToyModel({{0.3, 0.2, 0.3, 0.2}}, {0.25, 0.25, 0.25, 0.25}, 0.1);
  const auto all = TopWords(m, 0, m.vocab_size);
  EXPECT_EQ(all, (std::vector<int>{R, R + 2, R + 1, R + 3}));
  EXPECT_EQ(TopWords(m, 0, 1000).size(), 4u);
  EXPECT_THROW(TopWords(m, 1, 1), Error);
  EXPECT_THROW(TopWords(m, 0, 0), Error);
}

TEST(HeldoutPerplexity, UniformModelOverTenWords) {
  const AspectModel m = ToyModel({std::vector<double>(10, 0.1), std::vector<double>(10, 0.1)},
                                 std::vector<double>(10, 0.1), 0.3);
  const std::vector<Review> reviews{OneReview({{R, R + 3, R + 9}, {R + 5}})};
  EXPECT_NEAR(HeldoutPerplexity(m, reviews), 10.0, 1e-6);
}

TEST(HeldoutPerplexity, SingleWordVocabulary) {
  const AspectModel m = ToyModel({{1.0}}, {1.0}, 0.5);
  EXPECT_NEAR(HeldoutPerplexity(m, {OneReview({{R, R}})}), 1.0, 1e-12);
}

TEST(HeldoutPerplexity, TrainingTextBeatsShuffledVocabulary) {
  const auto planted = SamplePlanted({.num_aspects = 3, .reviews = 80, .seed = 8});
  LdaConfig cfg;
  cfg.num_aspects = 3;
  cfg.iterations = 60;
  cfg.burn_in = 20;
  const AspectModel m = FitGibbs(planted.reviews, planted.vocab_size, cfg);
  std::vector<int> perm(static_cast<std::size_t>(planted.vocab_size));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(1);
  std::vector<int> tail(perm.begin() + R, perm.end());
  rng.Shuffle(tail);
  std::copy(tail.begin(), tail.end(), perm.begin() + R);
  auto shuffled = planted.reviews;
  for (auto& r : shuffled) {
    for (auto& s : r.sentences) {
      for (int& w : s) w = perm[static_cast<std::size_t>(w)];
    }
  }
  EXPECT_LT(HeldoutPerplexity(m, planted.reviews), HeldoutPerplexity(m, shuffled));
}

TEST(HeldoutPerplexity, EmptyCorpusIsFatal) {
  const AspectModel m = ToyModel({{1.0}}, {1.0}, 0.5);
  EXPECT_THROW(HeldoutPerplexity(m, {}), Error);
}

}  // namespace
}  // namespace c2f

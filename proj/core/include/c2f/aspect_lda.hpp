#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2f/corpus.hpp"
#include "c2f/util.hpp"

namespace c2f {

/// Sentence-level topic model: each sentence draws one aspect from its
/// review's aspect mixture; each word is either background or aspect-specific.
struct LdaConfig {
  int num_aspects = 10;
  int iterations = 500;
  int burn_in = 200;
  int thinning = 10;
  double alpha = 0.0;  // <= 0 means 50 / num_aspects
  double beta = 0.01;
  double gamma = 20.0;
  std::uint64_t seed = 1;

  double EffectiveAlpha() const { return alpha > 0.0 ? alpha : 50.0 / num_aspects; }
};

struct AspectModel {
  int num_aspects = 0;
  int vocab_size = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  /// Posterior mean of the background switch.
  double background_prob = 0.0;
  std::vector<double> theta;       // num_aspects x vocab_size, row-major
  std::vector<double> background;  // vocab_size
  std::vector<double> aspect_share;  // fraction of training sentences per aspect

  double Theta(int aspect, int word) const {
    return theta[static_cast<std::size_t>(aspect) * static_cast<std::size_t>(vocab_size) +
                 static_cast<std::size_t>(word)];
  }
  std::span<const double> ThetaRow(int aspect) const {
    return {theta.data() + static_cast<std::size_t>(aspect) * static_cast<std::size_t>(vocab_size),
            static_cast<std::size_t>(vocab_size)};
  }
  int MostFrequentAspect() const;

  /// Plain-text dump: header line, priors, theta rows, background row.
  std::string Serialize() const;
  static AspectModel Parse(std::string_view text);
};

struct SentenceAssignment {
  std::size_t review = 0;
  std::size_t sentence = 0;
  int aspect = 0;
  std::vector<bool> background;  // one flag per token; OOV/reserved tokens are always false
};

/// Collapsed Gibbs state. Exposed so callers (and tests) can step sweeps and
/// inspect count tables.
class GibbsSampler {
 public:
  GibbsSampler(const std::vector<Review>& reviews, int vocab_size, const LdaConfig& config);

  void Sweep();
  int sweeps_done() const { return sweeps_; }

  /// Recomputes every table from the assignments and compares.
  bool CountsConsistent() const;
  std::int64_t TotalSentenceCount() const;
  std::int64_t TotalTokenCount() const;  // aspect + background word counts

  /// Posterior-mean estimate from the current state only.
  AspectModel Snapshot() const;
  const std::vector<SentenceAssignment>& assignments() const { return assignments_; }

 private:
  static bool Usable(int id) { return id >= Vocabulary::kNumReserved; }
  void SampleSentence(SentenceAssignment& s, std::size_t doc);
  void SampleSwitches(SentenceAssignment& s);

  const std::vector<Review>* reviews_;
  int vocab_size_;
  LdaConfig config_;
  double alpha_;
  Rng rng_;
  int sweeps_ = 0;

  std::vector<SentenceAssignment> assignments_;
  std::vector<std::vector<std::int64_t>> doc_aspect_;  // [doc][aspect]
  std::vector<std::int64_t> aspect_word_;              // [aspect * V + w]
  std::vector<std::int64_t> aspect_total_;
  std::vector<std::int64_t> background_word_;
  std::int64_t background_total_ = 0;
  std::int64_t switch_background_ = 0;
  std::int64_t switch_aspect_ = 0;
};

AspectModel FitGibbs(const std::vector<Review>& reviews, int vocab_size, const LdaConfig& config,
                     std::vector<SentenceAssignment>* final_assignments = nullptr);

struct AspectTag {
  int aspect = 0;
  bool fallback = false;  // no scorable token; fell back to the most frequent aspect
};

/// Max-posterior aspect under a uniform aspect prior. Ties go to the lower id.
AspectTag AssignAspect(const AspectModel& model, std::span<const int> sentence);

/// Word ids by probability desc, then id asc; reserved ids are skipped.
std::vector<int> TopWords(const AspectModel& model, int aspect, int k);

/// exp(mean NLL) of every scorable token under the background/aspect mixture,
/// with each sentence's aspect chosen by AssignAspect.
double HeldoutPerplexity(const AspectModel& model, const std::vector<Review>& reviews);

/// Human-readable top-words report for manual aspect labelling.
std::string TopWordsReport(const AspectModel& model, const Vocabulary& vocab, int k);

}  // namespace c2f

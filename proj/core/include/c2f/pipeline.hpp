#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "c2f/config.hpp"
#include "c2f/model.hpp"
#include "c2f/sketcher.hpp"

namespace c2f {

/// Training supervision for one review.
struct TrainingTriple {
  int user = 0;
  int item = 0;
  int rating = 0;
  std::vector<int> aspects;
  std::vector<std::vector<int>> sketches;    // sketch-vocabulary ids
  std::vector<std::vector<int>> alignments;  // word position -> slot index
  std::vector<std::vector<int>> sentences;   // word ids
  int fallback_tags = 0;  // sentences tagged by the most-frequent-aspect fallback

  std::size_t num_sentences() const { return sentences.size(); }
  /// Throws when the parallel lists disagree.
  void Check() const;
  bool operator==(const TrainingTriple&) const = default;
};

std::string SerializeTriples(const std::vector<TrainingTriple>& triples);
std::vector<TrainingTriple> ParseTriples(std::string_view jsonl);

/// Everything needed to turn reviews into triples.
struct SketchTables {
  NgramTable ngrams;
  KeepSets keep;
  SketchVocab vocab;
};

/// Mines n-grams over the training text (reserved tokens skipped), builds
/// keep sets from the aspect model and the sketch vocabulary.
SketchTables BuildSketchTables(const Corpus& corpus, const std::vector<Review>& train,
                               const AspectModel& model, int top_ngrams, int aspect_keep,
                               int global_keep,
                               const std::vector<std::vector<std::string>>& stop_lists = {});

TrainingTriple BuildTriple(const Review& review, const Vocabulary& vocab,
                           const AspectModel& model, const SketchTables& tables,
                           const PosTagger& tagger);
std::vector<TrainingTriple> BuildTriples(const std::vector<Review>& reviews,
                                         const Vocabulary& vocab, const AspectModel& model,
                                         const SketchTables& tables, const PosTagger& tagger);

/// Ablation transforms applied to triples and boost tables.
void CollapseAspects(std::vector<TrainingTriple>& triples);
nn::Matrix MeanThetaRow(const AspectModel& model);
nn::Matrix ThetaMatrix(const AspectModel& model);

/// Slot plan for the word decoder: surface word ids for copied slots.
std::vector<SlotPlan> PlanSketch(std::span<const int> symbols, const SketchVocab& sketch_vocab,
                                 const Vocabulary& vocab);

/// Builds model options (table sizes from the data, sizes and switches from the config).
ModelOptions MakeModelOptions(const RunConfig& config, int num_users, int num_items,
                              int num_ratings, int num_aspects, int sketch_vocab, int word_vocab);
/// Rounded mean sentence count; the aspect-free ablation always emits this many.
int TypicalSentenceCount(const std::vector<TrainingTriple>& triples);

/// Model sized for the data, initialized from the config seed, with the boost
/// table taken from the aspect model (its mean row under the aspect-free ablation).
ReviewModel MakeModel(const RunConfig& config, const Corpus& corpus, const AspectModel& lda,
                      const SketchVocab& sketch_vocab, const std::vector<TrainingTriple>& train);

/// Triples as the configured model sees them (labels collapsed when aspects are off).
std::vector<TrainingTriple> AdaptTriples(const RunConfig& config,
                                         std::vector<TrainingTriple> triples);

enum class Phase { kAspect = 0, kSketch = 1, kReview = 2, kJoint = 3, kDone = 4 };
const char* PhaseName(Phase phase);

struct EpochRecord {
  Phase phase;
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // per token, over the epoch's batches
  int steps = 0;
};

/// Teacher-forced per-token losses on a set of triples.
struct LossBreakdown {
  double aspect = 0.0;
  double sketch = 0.0;
  double words = 0.0;
  int aspect_tokens = 0;
  int sketch_tokens = 0;
  int word_tokens = 0;

  double aspect_mean() const { return aspect_tokens ? aspect / aspect_tokens : 0.0; }
  double sketch_mean() const { return sketch_tokens ? sketch / sketch_tokens : 0.0; }
  double word_mean() const { return word_tokens ? words / word_tokens : 0.0; }
  double joint() const { return aspect + sketch + words; }
};

/// Joint objective on one triple built on a single tape; its value equals the
/// sum of the three separately computed factor losses.
nn::Var JointLoss(const ReviewModel& model, nn::Tape& tape, const TrainingTriple& triple,
                  const nn::RunMode& mode, LossBreakdown* parts = nullptr);

LossBreakdown EvaluateLosses(const ReviewModel& model, const std::vector<TrainingTriple>& triples);

/// Staged training (aspect, sketch, review), then joint fine-tuning.
class Trainer {
 public:
  Trainer(ReviewModel& model, const RunConfig& config);

  /// Runs every phase whose epochs have not been completed yet.
  void Run(const std::vector<TrainingTriple>& triples);
  /// Trains one epoch of `phase`; returns its record. Throws a divergence
  /// error after restoring the last good state when the loss goes non-finite.
  EpochRecord RunEpoch(Phase phase, int epoch, const std::vector<TrainingTriple>& triples);

  /// Progress marker, stored in checkpoints so a run can resume mid-way.
  Phase phase() const { return phase_; }
  int next_epoch() const { return next_epoch_; }
  void ResumeAt(Phase phase, int epoch) { phase_ = phase; next_epoch_ = epoch; }

  nn::Adam& optimizer() { return adam_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  void set_listener(std::function<void(const EpochRecord&)> fn) { listener_ = std::move(fn); }

  /// Checkpoint bytes including optimizer state and progress.
  std::string Checkpoint() const;
  /// Restores model, optimizer and progress from Checkpoint() bytes.
  void Restore(std::string_view bytes);

 private:
  const StageConfig& Stage(Phase phase) const;
  bool PhaseEnabled(Phase phase) const;
  std::vector<nn::Parameter*> Group(Phase phase);

  ReviewModel& model_;
  RunConfig config_;
  nn::Adam adam_;
  Phase phase_ = Phase::kAspect;
  int next_epoch_ = 0;
  std::vector<EpochRecord> history_;
  std::function<void(const EpochRecord&)> listener_;
};

struct GenerateOptions {
  int beam = 4;
  int max_aspects = 5;
  int max_sketch_len = 50;
  int max_words = 50;
  bool length_normalize = false;

  static GenerateOptions From(const RunConfig& config);
};

struct GeneratedSentence {
  int aspect = 0;
  std::vector<int> sketch;  // empty when the sketch stage is disabled
  std::vector<int> words;
  double sketch_logprob = 0.0;
  double word_logprob = 0.0;
  bool sketch_truncated = false;
  bool words_truncated = false;
};

struct GenerationResult {
  std::vector<int> aspects;
  double aspect_logprob = 0.0;
  bool aspect_truncated = false;
  std::vector<GeneratedSentence> sentences;
  bool unknown_user = false;
  bool unknown_item = false;
  bool empty = false;

  std::vector<int> Words() const;  // sentences concatenated
};

/// Aspects, then one sketch per aspect, then the words of each sketch.
GenerationResult GenerateReview(const ReviewModel& model, const SketchVocab& sketch_vocab,
                                const Vocabulary& vocab, int user, int item, int rating,
                                const GenerateOptions& options);

/// One JSON object per line with the stage trace.
std::string GenerationToJson(const GenerationResult& result, const SketchVocab& sketch_vocab,
                             const Vocabulary& vocab, const std::string& user,
                             const std::string& item, int rating);

}  // namespace c2f

#pragma once

#include <span>
#include <vector>

#include "c2f/aspect_decoder.hpp"

namespace c2f {

/// What the word decoder needs to know about one sketch slot at inference.
struct SlotPlan {
  int symbol = 0;                // sketch-vocabulary id
  std::vector<int> forced_words;  // empty for POS slots
  int width() const { return forced_words.empty() ? 1 : static_cast<int>(forced_words.size()); }
};

struct ReviewDecoderOptions {
  double boost_scale = 1.0;   // λ
  double logit_scale = 1.0;   // κ in z = κ · tanh(W7 [h; v_s] + b3)
  bool use_sketch = true;     // false: every position sees a zero slot vector and START
};

/// Sketch-conditioned word decoder. A bidirectional GRU encodes the sketch
/// (plus END); each word position is fed the state of the slot covering it,
/// and the output logits are shifted by λ·θ of the sentence's aspect.
class ReviewDecoder {
 public:
  struct StepOutput {
    nn::Gru::State state;
    nn::Var z;       // tanh-bounded logits, before the aspect boost
    nn::Var logits;  // z + λ θ^a
  };

  ReviewDecoder() = default;
  ReviewDecoder(nn::ParameterStore& store, const ModelDims& dims, ReviewDecoderOptions options);

  const ReviewDecoderOptions& options() const { return options_; }
  void set_options(const ReviewDecoderOptions& options) { options_ = options; }
  int vocab_size() const { return vocab_size_; }

  /// Rows are aspects; columns are word ids. Copied in, never trained.
  void SetBoost(const nn::Matrix& theta);
  const nn::Matrix& boost() const { return boost_->value; }
  nn::Parameter& boost_parameter() const { return *boost_; }

  /// One vector per input symbol; END is appended by the caller when needed.
  std::vector<nn::Var> EncodeSketch(nn::Tape& tape, std::span<const int> symbols,
                                    const nn::RunMode& mode) const;

  nn::Gru::State InitialState(nn::Tape& tape, const EncodedContext& ctx) const;

  StepOutput Step(const nn::Gru::State& prev, int prev_word, nn::Var slot_vector, int slot_symbol,
                  int aspect, const EncodedContext& ctx, const nn::RunMode& mode) const;

  /// Teacher-forced summed NLL over every word and the closing END.
  /// `alignment[t]` is the slot index covering word t. When `state` is
  /// non-null it supplies the initial state and receives the final one.
  nn::Var SentenceLoss(nn::Tape& tape, const EncodedContext& ctx, int aspect,
                       std::span<const int> symbols, std::span<const int> alignment,
                       std::span<const int> words, const nn::RunMode& mode, int* tokens,
                       nn::Gru::State* state = nullptr) const;

  struct Generated {
    std::vector<int> words;
    double score = 0.0;  // POS-slot log-probabilities only
    bool truncated = false;
    nn::Gru::State state;
  };
  /// Copies lexical and n-gram slots and searches words for POS slots. PAD,
  /// START, END and OOV are never emitted.
  Generated GenerateSentence(nn::Tape& tape, const EncodedContext& ctx, int aspect,
                             std::span<const SlotPlan> plan, const BeamOptions& options,
                             const nn::Gru::State* initial = nullptr) const;

  /// Sketch-free decoding: free generation until END or max_len.
  Generated GenerateFree(nn::Tape& tape, const EncodedContext& ctx, int aspect,
                         const BeamOptions& options, const nn::Gru::State* initial = nullptr) const;

 private:
  void CheckAspect(int aspect) const;
  bool Emittable(int word) const;

  ReviewDecoderOptions options_;
  nn::Parameter* sketch_embedding_ = nullptr;
  nn::Gru forward_;
  nn::Gru backward_;
  nn::Parameter* combine_w_ = nullptr;
  nn::Parameter* combine_b_ = nullptr;
  nn::Parameter* word_embedding_ = nullptr;
  nn::Gru gru_;
  nn::ContextAttention attention_;
  nn::Parameter* out_w_ = nullptr;  // W7
  nn::Parameter* out_b_ = nullptr;  // b3
  nn::Parameter* boost_ = nullptr;
  int vocab_size_ = 0;
  int num_aspects_ = 0;
  int sketch_vocab_ = 0;
  int slot_dim_ = 0;
};

}  // namespace c2f

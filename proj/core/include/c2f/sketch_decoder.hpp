#pragma once

#include <span>
#include <vector>

#include "c2f/aspect_decoder.hpp"

namespace c2f {

/// Aspect-aware sketch decoder. The GRU input is v_prev_symbol ⊙ v_aspect, the
/// first sketch starts from the encoded context, and each later sketch starts
/// from the final state of the one before. Output classes are sketch-vocabulary
/// ids (SketchVocab::kEnd terminates).
class SketchDecoder {
 public:
  static constexpr int kStart = 0;  // SketchVocab::kStart
  static constexpr int kEnd = 1;    // SketchVocab::kEnd

  SketchDecoder() = default;
  SketchDecoder(nn::ParameterStore& store, const ModelDims& dims, nn::Parameter& aspect_embedding);

  int vocab_size() const { return vocab_size_; }

  /// Fused GRU input for one step (exposed for the multiplicative-fusion check).
  nn::Var FusedInput(nn::Tape& tape, int prev_symbol, int aspect) const;

  DecoderStep Step(const nn::Gru::State& prev, int prev_symbol, int aspect,
                   const EncodedContext& ctx, const nn::RunMode& mode) const;

  /// Optional hook: receives the initial state of every sentence (instrumentation).
  using StateHook = std::function<void(std::size_t sentence, const nn::Gru::State&)>;

  /// Teacher-forced summed NLL over every sketch of a review, each closed by
  /// END, with hidden states chained across sentences when `chain` is set.
  nn::Var SequenceLoss(nn::Tape& tape, const EncodedContext& ctx, std::span<const int> aspects,
                       std::span<const std::vector<int>> sketches, const nn::RunMode& mode,
                       int* tokens, bool chain = true, const StateHook& hook = nullptr) const;

  struct Generated {
    std::vector<int> symbols;
    double score = 0.0;
    bool truncated = false;
  };
  /// One sketch per aspect; the top beam's final state seeds the next sentence.
  std::vector<Generated> Generate(nn::Tape& tape, const EncodedContext& ctx,
                                  std::span<const int> aspects, const BeamOptions& options,
                                  bool chain = true, const StateHook& hook = nullptr) const;

 private:
  void CheckAspect(int aspect) const;

  nn::Parameter* aspect_embedding_ = nullptr;
  nn::Parameter* embedding_ = nullptr;
  nn::Gru gru_;
  nn::ContextAttention attention_;
  nn::Parameter* out_w_ = nullptr;     // W5
  nn::Parameter* aspect_w_ = nullptr;  // W6
  nn::Parameter* out_b_ = nullptr;     // b2
  int vocab_size_ = 0;
  int num_aspects_ = 0;
};

}  // namespace c2f

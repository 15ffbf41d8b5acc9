#pragma once

#include <array>
#include <span>
#include <vector>

#include "c2f/beam_search.hpp"
#include "c2f/dims.hpp"
#include "c2f/layers.hpp"

namespace c2f {

/// Embedded (user, item, rating) context and its MLP encoding.
struct EncodedContext {
  std::array<nn::Var, 3> embeddings;  // user, item, rating
  nn::Var encoded;
  bool unknown_user = false;
  bool unknown_item = false;
};

class ContextEncoder {
 public:
  ContextEncoder() = default;
  ContextEncoder(nn::ParameterStore& store, const ModelDims& dims);

  /// Out-of-range user/item ids use the dedicated UNK row and set the flag.
  /// Ratings must be valid 0-based categories.
  EncodedContext Encode(nn::Tape& tape, int user, int item, int rating) const;

  int unk_user() const { return num_users_; }
  int unk_item() const { return num_items_; }

 private:
  nn::Parameter* users_ = nullptr;
  nn::Parameter* items_ = nullptr;
  nn::Parameter* ratings_ = nullptr;
  nn::Mlp mlp_;
  int num_users_ = 0;
  int num_items_ = 0;
  int num_ratings_ = 0;
};

struct DecoderStep {
  nn::Gru::State state;
  nn::Var logits;
};

/// Aspect-sequence decoder. Embedding rows: aspects 0..A-1, END (A), START
/// (A+1). Output classes: aspects 0..A-1 and END (A).
class AspectDecoder {
 public:
  AspectDecoder() = default;
  AspectDecoder(nn::ParameterStore& store, const ModelDims& dims);

  int num_aspects() const { return num_aspects_; }
  int end_class() const { return num_aspects_; }
  int start_row() const { return num_aspects_ + 1; }
  nn::Parameter& aspect_embedding() const { return *embedding_; }

  nn::Gru::State InitialState(nn::Tape& tape, const EncodedContext& ctx) const;
  DecoderStep Step(const nn::Gru::State& prev, int prev_symbol, const EncodedContext& ctx,
                   const nn::RunMode& mode) const;

  /// Teacher-forced summed NLL over a_1..a_m and the closing END.
  /// `tokens` receives m + 1.
  nn::Var SequenceLoss(nn::Tape& tape, const EncodedContext& ctx, std::span<const int> aspects,
                       const nn::RunMode& mode, int* tokens) const;

  /// END is masked at position 0 when min_len >= 1.
  std::vector<BeamHypothesis<nn::Gru::State>> Generate(nn::Tape& tape, const EncodedContext& ctx,
                                                       const BeamOptions& options) const;

 private:
  nn::Parameter* embedding_ = nullptr;
  nn::Gru gru_;
  nn::ContextAttention attention_;
  nn::Parameter* out_w_ = nullptr;
  nn::Parameter* out_b_ = nullptr;
  int num_aspects_ = 0;
  double dropout_ = 0.0;
};

}  // namespace c2f

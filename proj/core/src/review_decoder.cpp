#include "c2f/review_decoder.hpp"

#include "c2f/corpus.hpp"
#include "c2f/sketch_decoder.hpp"

namespace c2f {

using nn::Var;

ReviewDecoder::ReviewDecoder(nn::ParameterStore& store, const ModelDims& dims,
                             ReviewDecoderOptions options)
    : options_(options),
      vocab_size_(dims.word_vocab),
      num_aspects_(dims.num_aspects),
      sketch_vocab_(dims.sketch_vocab),
      slot_dim_(dims.sketch_hidden) {
  sketch_embedding_ = &store.Add("rev.sketch_embedding", dims.sketch_vocab, dims.sketch_dim);
  forward_ = nn::Gru(store, "rev.enc.fwd", dims.sketch_dim, dims.sketch_hidden, 1);
  backward_ = nn::Gru(store, "rev.enc.bwd", dims.sketch_dim, dims.sketch_hidden, 1);
  combine_w_ = &store.Add("rev.enc.w", dims.sketch_hidden, 2 * dims.sketch_hidden);
  combine_b_ = &store.Add("rev.enc.b", dims.sketch_hidden, 1, true);
  word_embedding_ = &store.Add("rev.word_embedding", dims.word_vocab, dims.word_dim);
  gru_ = nn::Gru(store, "rev.gru", dims.sketch_hidden + dims.word_dim, dims.word_hidden,
                 dims.layers);
  attention_ = nn::ContextAttention(store, "rev.attn", dims.word_hidden, dims.embed_dim,
                                    dims.word_hidden);
  out_w_ = &store.Add("rev.out.w", dims.word_vocab, dims.word_hidden + dims.sketch_dim);
  out_b_ = &store.Add("rev.out.b", dims.word_vocab, 1, true);
  boost_ = &store.Add("rev.boost", dims.num_aspects, dims.word_vocab);
}

void ReviewDecoder::SetBoost(const nn::Matrix& theta) {
  if (theta.rows() != num_aspects_ || theta.cols() != vocab_size_) {
    ThrowUsage("boost table is " + std::to_string(theta.rows()) + "x" +
               std::to_string(theta.cols()) + ", expected " + std::to_string(num_aspects_) + "x" +
               std::to_string(vocab_size_));
  }
  boost_->value = theta;
  boost_->grad.setZero();
}

void ReviewDecoder::CheckAspect(int aspect) const {
  if (aspect < 0 || aspect >= num_aspects_) {
    ThrowUsage("word decoder: aspect id " + std::to_string(aspect) + " outside 0.." +
               std::to_string(num_aspects_ - 1));
  }
}

bool ReviewDecoder::Emittable(int word) const {
  return word != Vocabulary::kPad && word != Vocabulary::kOov && word != Vocabulary::kStart &&
         word != Vocabulary::kEnd;
}

std::vector<Var> ReviewDecoder::EncodeSketch(nn::Tape& tape, std::span<const int> symbols,
                                             const nn::RunMode& mode) const {
  if (symbols.empty()) ThrowUsage("cannot encode an empty sketch");
  std::vector<Var> inputs;
  inputs.reserve(symbols.size());
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    if (symbols[t] < 0 || symbols[t] >= sketch_vocab_) {
      ThrowUsage("sketch symbol " + std::to_string(symbols[t]) + " at slot " + std::to_string(t) +
                 " outside the sketch vocabulary");
    }
    inputs.push_back(nn::Lookup(tape, *sketch_embedding_, symbols[t]));
  }
  const std::size_t n = inputs.size();
  std::vector<Var> fwd(n), bwd(n);
  auto state = forward_.ZeroState(tape);
  for (std::size_t t = 0; t < n; ++t) {
    state = forward_.Step(state, inputs[t], mode);
    fwd[t] = state.back();
  }
  state = backward_.ZeroState(tape);
  for (std::size_t t = n; t-- > 0;) {
    state = backward_.Step(state, inputs[t], mode);
    bwd[t] = state.back();
  }
  std::vector<Var> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.push_back(nn::AddBias(nn::Linear(*combine_w_, nn::Concat2(fwd[t], bwd[t])), *combine_b_));
  }
  return out;
}

nn::Gru::State ReviewDecoder::InitialState(nn::Tape& tape, const EncodedContext& ctx) const {
  return gru_.InitialState(tape, ctx.encoded);
}

ReviewDecoder::StepOutput ReviewDecoder::Step(const nn::Gru::State& prev, int prev_word,
                                              Var slot_vector, int slot_symbol, int aspect,
                                              const EncodedContext& ctx,
                                              const nn::RunMode& mode) const {
  CheckAspect(aspect);
  if (prev_word < 0 || prev_word >= vocab_size_) {
    ThrowUsage("word id " + std::to_string(prev_word) + " outside the vocabulary");
  }
  if (slot_symbol < 0 || slot_symbol >= sketch_vocab_) ThrowUsage("slot symbol out of range");
  nn::Tape& tape = *ctx.encoded.tape;
  const Var input = nn::Concat2(slot_vector, nn::Lookup(tape, *word_embedding_, prev_word));
  StepOutput out;
  out.state = gru_.Step(prev, input, mode);
  auto att = attention_.Apply(out.state.back(), ctx.embeddings);
  const Var hidden = nn::Dropout(att.enhanced, mode.dropout, mode.dropout_rng());
  const Var features = nn::Concat2(hidden, nn::Lookup(tape, *sketch_embedding_, slot_symbol));
  out.z = nn::Tanh(nn::AddBias(nn::Linear(*out_w_, features), *out_b_));
  if (options_.logit_scale != 1.0) out.z = nn::Scale(out.z, options_.logit_scale);
  if (options_.boost_scale != 0.0) {
    const nn::Vector row = boost_->value.row(aspect).transpose() * options_.boost_scale;
    out.logits = nn::AddConstant(out.z, row);
  } else {
    out.logits = out.z;
  }
  return out;
}

Var ReviewDecoder::SentenceLoss(nn::Tape& tape, const EncodedContext& ctx, int aspect,
                                std::span<const int> symbols, std::span<const int> alignment,
                                std::span<const int> words, const nn::RunMode& mode, int* tokens,
                                nn::Gru::State* state) const {
  if (words.empty()) ThrowUsage("sentence loss: empty sentence");
  std::vector<Var> slots;
  std::vector<int> slot_symbols;
  if (options_.use_sketch) {
    if (alignment.size() != words.size()) {
      ThrowUsage("alignment width " + std::to_string(alignment.size()) +
                 " does not match sentence length " + std::to_string(words.size()));
    }
    std::vector<int> with_end(symbols.begin(), symbols.end());
    with_end.push_back(SketchDecoder::kEnd);
    const auto encoded = EncodeSketch(tape, with_end, mode);
    for (std::size_t t = 0; t <= words.size(); ++t) {
      const int slot = t < words.size() ? alignment[t] : static_cast<int>(symbols.size());
      if (slot < 0 || slot > static_cast<int>(symbols.size())) {
        ThrowUsage("alignment points outside the sketch at word " + std::to_string(t));
      }
      slots.push_back(encoded[static_cast<std::size_t>(slot)]);
      slot_symbols.push_back(with_end[static_cast<std::size_t>(slot)]);
    }
  } else {
    const Var zero = tape.Constant(nn::Vector::Zero(slot_dim_));
    slots.assign(words.size() + 1, zero);
    slot_symbols.assign(words.size() + 1, SketchDecoder::kStart);
  }

  nn::Gru::State h = state != nullptr && !state->empty() ? *state : InitialState(tape, ctx);
  std::vector<Var> losses;
  int prev = Vocabulary::kStart;
  for (std::size_t t = 0; t <= words.size(); ++t) {
    const int target = t < words.size() ? words[t] : Vocabulary::kEnd;
    if (target < 0 || target >= vocab_size_) ThrowUsage("target word out of range");
    auto step = Step(h, prev, slots[t], slot_symbols[t], aspect, ctx, mode);
    losses.push_back(nn::SoftmaxCrossEntropy(step.logits, target));
    h = std::move(step.state);
    prev = target;
  }
  if (state != nullptr) *state = std::move(h);
  if (tokens != nullptr) *tokens = static_cast<int>(losses.size());
  return nn::SumScalars(losses);
}

ReviewDecoder::Generated ReviewDecoder::GenerateSentence(nn::Tape& tape, const EncodedContext& ctx,
                                                         int aspect, std::span<const SlotPlan> plan,
                                                         const BeamOptions& options,
                                                         const nn::Gru::State* initial) const {
  if (!options_.use_sketch) return GenerateFree(tape, ctx, aspect, options, initial);
  CheckAspect(aspect);
  if (plan.empty()) ThrowUsage("cannot realize an empty sketch");
  std::vector<int> with_end;
  for (const auto& slot : plan) with_end.push_back(slot.symbol);
  with_end.push_back(SketchDecoder::kEnd);
  const auto encoded = EncodeSketch(tape, with_end, nn::RunMode::Eval());

  std::vector<int> position_slot;
  std::vector<std::optional<int>> pinned;
  for (std::size_t s = 0; s < plan.size(); ++s) {
    for (int k = 0; k < plan[s].width(); ++k) {
      position_slot.push_back(static_cast<int>(s));
      if (plan[s].forced_words.empty()) {
        pinned.push_back(std::nullopt);
      } else {
        pinned.push_back(plan[s].forced_words[static_cast<std::size_t>(k)]);
      }
    }
  }

  BeamOptions opts = options;
  opts.end_symbol = -1;
  opts.min_len = 0;
  opts.max_len = static_cast<int>(position_slot.size());
  auto step = [&](const nn::Gru::State& s, int prev, int pos) {
    const auto slot = static_cast<std::size_t>(position_slot[static_cast<std::size_t>(pos)]);
    auto r = Step(s, prev, encoded[slot], with_end[slot], aspect, ctx, nn::RunMode::Eval());
    return std::make_pair(std::move(r.state), nn::LogSoftmaxOf(r.logits.value()));
  };
  auto forced = [&](int pos) { return pinned[static_cast<std::size_t>(pos)]; };
  auto allowed = [this](int w) { return Emittable(w); };
  const nn::Gru::State start = initial != nullptr ? *initial : InitialState(tape, ctx);
  auto beams = BeamSearch(start, Vocabulary::kStart, opts, step, forced, allowed);
  Generated out;
  out.words = beams.front().symbols;
  out.score = beams.front().score;
  out.truncated = false;
  // Consume the last word against the END slot, as the teacher-forced pass does.
  out.state = Step(beams.front().state, out.words.back(), encoded.back(), SketchDecoder::kEnd,
                   aspect, ctx, nn::RunMode::Eval())
                  .state;
  return out;
}

ReviewDecoder::Generated ReviewDecoder::GenerateFree(nn::Tape& tape, const EncodedContext& ctx,
                                                     int aspect, const BeamOptions& options,
                                                     const nn::Gru::State* initial) const {
  CheckAspect(aspect);
  const Var zero = tape.Constant(nn::Vector::Zero(slot_dim_));
  BeamOptions opts = options;
  opts.end_symbol = Vocabulary::kEnd;
  opts.min_len = std::max(opts.min_len, 1);
  auto step = [&](const nn::Gru::State& s, int prev, int) {
    auto r = Step(s, prev, zero, SketchDecoder::kStart, aspect, ctx, nn::RunMode::Eval());
    return std::make_pair(std::move(r.state), nn::LogSoftmaxOf(r.logits.value()));
  };
  auto allowed = [this](int w) { return Emittable(w); };
  const nn::Gru::State start = initial != nullptr ? *initial : InitialState(tape, ctx);
  auto beams = BeamSearch(start, Vocabulary::kStart, opts, step, nullptr, allowed);
  Generated out;
  out.words = beams.front().symbols;
  out.score = beams.front().score;
  out.truncated = beams.front().truncated;
  out.state = beams.front().state;
  if (out.truncated && !out.words.empty()) {
    out.state = Step(out.state, out.words.back(), zero, SketchDecoder::kStart, aspect, ctx,
                     nn::RunMode::Eval())
                    .state;
  }
  return out;
}

}  // namespace c2f

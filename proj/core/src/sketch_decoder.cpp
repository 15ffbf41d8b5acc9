#include "c2f/sketch_decoder.hpp"

namespace c2f {

using nn::Var;

SketchDecoder::SketchDecoder(nn::ParameterStore& store, const ModelDims& dims,
                             nn::Parameter& aspect_embedding)
    : aspect_embedding_(&aspect_embedding),
      vocab_size_(dims.sketch_vocab),
      num_aspects_(dims.num_aspects) {
  embedding_ = &store.Add("skt.embedding", dims.sketch_vocab, dims.sketch_dim);
  gru_ = nn::Gru(store, "skt.gru", dims.sketch_dim, dims.sketch_hidden, dims.layers);
  attention_ = nn::ContextAttention(store, "skt.attn", dims.sketch_hidden, dims.embed_dim,
                                    dims.sketch_hidden);
  out_w_ = &store.Add("skt.out.w", dims.sketch_vocab, dims.sketch_hidden);
  aspect_w_ = &store.Add("skt.aspect.w", dims.sketch_vocab, dims.aspect_dim);
  out_b_ = &store.Add("skt.out.b", dims.sketch_vocab, 1, true);
}

void SketchDecoder::CheckAspect(int aspect) const {
  if (aspect < 0 || aspect >= num_aspects_) {
    ThrowUsage("sketch decoder: aspect id " + std::to_string(aspect) + " outside 0.." +
               std::to_string(num_aspects_ - 1));
  }
}

Var SketchDecoder::FusedInput(nn::Tape& tape, int prev_symbol, int aspect) const {
  CheckAspect(aspect);
  return nn::Mul(nn::Lookup(tape, *embedding_, prev_symbol),
                 nn::Lookup(tape, *aspect_embedding_, aspect));
}

DecoderStep SketchDecoder::Step(const nn::Gru::State& prev, int prev_symbol, int aspect,
                                const EncodedContext& ctx, const nn::RunMode& mode) const {
  CheckAspect(aspect);
  nn::Tape& tape = *ctx.encoded.tape;
  const Var v_aspect = nn::Lookup(tape, *aspect_embedding_, aspect);
  const Var input = nn::Mul(nn::Lookup(tape, *embedding_, prev_symbol), v_aspect);
  DecoderStep out;
  out.state = gru_.Step(prev, input, mode);
  auto att = attention_.Apply(out.state.back(), ctx.embeddings);
  const Var hidden = nn::Dropout(att.enhanced, mode.dropout, mode.dropout_rng());
  out.logits = nn::AddBias(nn::Add(nn::Linear(*out_w_, hidden), nn::Linear(*aspect_w_, v_aspect)),
                           *out_b_);
  return out;
}

Var SketchDecoder::SequenceLoss(nn::Tape& tape, const EncodedContext& ctx,
                                std::span<const int> aspects,
                                std::span<const std::vector<int>> sketches,
                                const nn::RunMode& mode, int* tokens, bool chain,
                                const StateHook& hook) const {
  if (aspects.size() != sketches.size()) {
    ThrowUsage("sketch loss: " + std::to_string(aspects.size()) + " aspects but " +
               std::to_string(sketches.size()) + " sketches");
  }
  if (aspects.empty()) ThrowUsage("sketch loss: empty review");
  std::vector<Var> losses;
  nn::Gru::State state = gru_.InitialState(tape, ctx.encoded);
  for (std::size_t j = 0; j < sketches.size(); ++j) {
    if (j > 0 && !chain) state = gru_.InitialState(tape, ctx.encoded);
    if (hook) hook(j, state);
    int prev = kStart;
    const auto& sketch = sketches[j];
    for (std::size_t t = 0; t <= sketch.size(); ++t) {
      const int target = t < sketch.size() ? sketch[t] : kEnd;
      if (target < 0 || target >= vocab_size_) ThrowUsage("sketch symbol out of range");
      auto step = Step(state, prev, aspects[j], ctx, mode);
      losses.push_back(nn::SoftmaxCrossEntropy(step.logits, target));
      state = std::move(step.state);
      prev = target;
    }
  }
  if (tokens != nullptr) *tokens = static_cast<int>(losses.size());
  return nn::SumScalars(losses);
}

std::vector<SketchDecoder::Generated> SketchDecoder::Generate(
    nn::Tape& tape, const EncodedContext& ctx, std::span<const int> aspects,
    const BeamOptions& options, bool chain, const StateHook& hook) const {
  std::vector<Generated> out;
  BeamOptions opts = options;
  opts.end_symbol = kEnd;
  nn::Gru::State state = gru_.InitialState(tape, ctx.encoded);
  for (std::size_t j = 0; j < aspects.size(); ++j) {
    const int aspect = aspects[j];
    CheckAspect(aspect);
    if (j > 0 && !chain) state = gru_.InitialState(tape, ctx.encoded);
    if (hook) hook(j, state);
    auto step = [&](const nn::Gru::State& s, int prev, int) {
      auto r = Step(s, prev, aspect, ctx, nn::RunMode::Eval());
      return std::make_pair(std::move(r.state), nn::LogSoftmaxOf(r.logits.value()));
    };
    auto beams = BeamSearch(state, kStart, opts, step, nullptr,
                            [](int sym) { return sym != kStart; });
    const auto& best = beams.front();
    out.push_back({best.symbols, best.score, best.truncated});
    state = best.state;
    if (best.truncated && !best.symbols.empty()) {
      // The truncated beam has not consumed its last symbol yet.
      state = Step(state, best.symbols.back(), aspect, ctx, nn::RunMode::Eval()).state;
    }
  }
  return out;
}

}  // namespace c2f

#include "c2f/aspect_decoder.hpp"

namespace c2f {

using nn::Var;

void ModelDims::Validate() const {
  auto fail = [](const std::string& what) { ThrowUsage("model dims: " + what); };
  if (num_users < 1 || num_items < 1 || num_ratings < 1) fail("empty user/item/rating table");
  if (num_aspects < 1) fail("need at least one aspect");
  if (sketch_vocab < 3) fail("sketch vocabulary too small");
  if (word_vocab < 5) fail("word vocabulary too small");
  if (layers < 1) fail("need at least one GRU layer");
  if (aspect_dim != sketch_dim) fail("aspect_dim must equal sketch_dim (element-wise fusion)");
  if (context_dim != aspect_hidden) fail("context_dim must equal aspect_hidden");
  if (context_dim != sketch_hidden) fail("context_dim must equal sketch_hidden");
  if (context_dim != word_hidden) fail("context_dim must equal word_hidden");
}

ContextEncoder::ContextEncoder(nn::ParameterStore& store, const ModelDims& dims)
    : num_users_(dims.num_users), num_items_(dims.num_items), num_ratings_(dims.num_ratings) {
  users_ = &store.Add("ctx.user", dims.num_users + 1, dims.embed_dim);
  items_ = &store.Add("ctx.item", dims.num_items + 1, dims.embed_dim);
  ratings_ = &store.Add("ctx.rating", dims.num_ratings, dims.embed_dim);
  mlp_ = nn::Mlp(store, "ctx.mlp", 3 * dims.embed_dim, dims.context_dim, dims.context_dim);
}

EncodedContext ContextEncoder::Encode(nn::Tape& tape, int user, int item, int rating) const {
  if (rating < 0 || rating >= num_ratings_) {
    ThrowUsage("rating category " + std::to_string(rating) + " outside 0.." +
               std::to_string(num_ratings_ - 1));
  }
  EncodedContext ctx;
  ctx.unknown_user = user < 0 || user >= num_users_;
  ctx.unknown_item = item < 0 || item >= num_items_;
  ctx.embeddings[0] = nn::Lookup(tape, *users_, ctx.unknown_user ? num_users_ : user);
  ctx.embeddings[1] = nn::Lookup(tape, *items_, ctx.unknown_item ? num_items_ : item);
  ctx.embeddings[2] = nn::Lookup(tape, *ratings_, rating);
  ctx.encoded = mlp_.Forward(nn::Concat(ctx.embeddings));
  return ctx;
}

AspectDecoder::AspectDecoder(nn::ParameterStore& store, const ModelDims& dims)
    : num_aspects_(dims.num_aspects) {
  embedding_ = &store.Add("asp.embedding", dims.num_aspects + 2, dims.aspect_dim);
  gru_ = nn::Gru(store, "asp.gru", dims.aspect_dim, dims.aspect_hidden, dims.layers);
  attention_ = nn::ContextAttention(store, "asp.attn", dims.aspect_hidden, dims.embed_dim,
                                    dims.aspect_hidden);
  out_w_ = &store.Add("asp.out.w", dims.num_aspects + 1, dims.aspect_hidden);
  out_b_ = &store.Add("asp.out.b", dims.num_aspects + 1, 1, true);
}

nn::Gru::State AspectDecoder::InitialState(nn::Tape& tape, const EncodedContext& ctx) const {
  return gru_.InitialState(tape, ctx.encoded);
}

DecoderStep AspectDecoder::Step(const nn::Gru::State& prev, int prev_symbol,
                                const EncodedContext& ctx, const nn::RunMode& mode) const {
  if (prev_symbol < 0 || prev_symbol > start_row()) {
    ThrowUsage("aspect symbol " + std::to_string(prev_symbol) + " out of range");
  }
  nn::Tape& tape = *ctx.encoded.tape;
  const Var input = nn::Lookup(tape, *embedding_, prev_symbol);
  DecoderStep out;
  out.state = gru_.Step(prev, input, mode);
  auto att = attention_.Apply(out.state.back(), ctx.embeddings);
  const Var hidden = nn::Dropout(att.enhanced, mode.dropout, mode.dropout_rng());
  out.logits = nn::AddBias(nn::Linear(*out_w_, hidden), *out_b_);
  return out;
}

Var AspectDecoder::SequenceLoss(nn::Tape& tape, const EncodedContext& ctx,
                                std::span<const int> aspects, const nn::RunMode& mode,
                                int* tokens) const {
  if (aspects.empty()) ThrowUsage("aspect sequence is empty");
  auto state = InitialState(tape, ctx);
  std::vector<Var> losses;
  int prev = start_row();
  for (std::size_t j = 0; j <= aspects.size(); ++j) {
    const int target = j < aspects.size() ? aspects[j] : end_class();
    if (target < 0 || target > end_class()) ThrowUsage("aspect label out of range");
    auto step = Step(state, prev, ctx, mode);
    losses.push_back(nn::SoftmaxCrossEntropy(step.logits, target));
    state = std::move(step.state);
    prev = target;
  }
  if (tokens != nullptr) *tokens = static_cast<int>(losses.size());
  return nn::SumScalars(losses);
}

std::vector<BeamHypothesis<nn::Gru::State>> AspectDecoder::Generate(
    nn::Tape& tape, const EncodedContext& ctx, const BeamOptions& options) const {
  BeamOptions opts = options;
  opts.end_symbol = end_class();
  auto step = [&](const nn::Gru::State& s, int prev, int) {
    auto out = Step(s, prev, ctx, nn::RunMode::Eval());
    return std::make_pair(std::move(out.state), nn::LogSoftmaxOf(out.logits.value()));
  };
  return BeamSearch(InitialState(tape, ctx), start_row(), opts, step);
}

}  // namespace c2f

#include "c2f/pipeline.hpp"

#include <cmath>
#include <json.hpp>

namespace c2f {

using json = nlohmann::json;
using nn::Var;

void TrainingTriple::Check() const {
  const std::size_t m = sentences.size();
  if (m == 0) ThrowData("training triple has no sentences");
  if (aspects.size() != m || sketches.size() != m || alignments.size() != m) {
    ThrowData("training triple lists disagree: " + std::to_string(aspects.size()) + " aspects, " +
              std::to_string(sketches.size()) + " sketches, " + std::to_string(m) + " sentences");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (alignments[j].size() != sentences[j].size()) {
      ThrowData("sentence " + std::to_string(j) + ": alignment width " +
                std::to_string(alignments[j].size()) + " != length " +
                std::to_string(sentences[j].size()));
    }
  }
}

std::string SerializeTriples(const std::vector<TrainingTriple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    json j;
    j["user"] = t.user;
    j["item"] = t.item;
    j["rating"] = t.rating;
    j["aspects"] = t.aspects;
    j["sketches"] = t.sketches;
    j["alignments"] = t.alignments;
    j["sentences"] = t.sentences;
    j["fallback_tags"] = t.fallback_tags;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainingTriple> ParseTriples(std::string_view jsonl) {
  std::vector<TrainingTriple> out;
  int line_no = 0;
  for (const auto& line : SplitOn(jsonl, '\n')) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) ThrowData("triples line " + std::to_string(line_no) + ": not a JSON object");
    try {
      TrainingTriple t;
      t.user = j.at("user").get<int>();
      t.item = j.at("item").get<int>();
      t.rating = j.at("rating").get<int>();
      t.aspects = j.at("aspects").get<std::vector<int>>();
      t.sketches = j.at("sketches").get<std::vector<std::vector<int>>>();
      t.alignments = j.at("alignments").get<std::vector<std::vector<int>>>();
      t.sentences = j.at("sentences").get<std::vector<std::vector<int>>>();
      t.fallback_tags = j.value("fallback_tags", 0);
      t.Check();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      ThrowData("triples line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      ThrowData("triples line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

SketchTables BuildSketchTables(const Corpus& corpus, const std::vector<Review>& train,
                               const AspectModel& model, int top_ngrams, int aspect_keep,
                               int global_keep,
                               const std::vector<std::vector<std::string>>& stop_lists) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& r : train) {
    for (const auto& s : r.sentences) sentences.push_back(corpus.Words(s));
  }
  SketchTables t;
  t.ngrams = NgramTable::Mine(sentences, top_ngrams);
  t.keep = KeepSets::Build(model, corpus, aspect_keep, global_keep, stop_lists);
  t.vocab = SketchVocab::Build(t.ngrams, t.keep);
  return t;
}

TrainingTriple BuildTriple(const Review& review, const Vocabulary& vocab, const AspectModel& model,
                           const SketchTables& tables, const PosTagger& tagger) {
  TrainingTriple t;
  t.user = review.user;
  t.item = review.item;
  t.rating = review.rating;
  for (const auto& sentence : review.sentences) {
    const AspectTag tag = AssignAspect(model, sentence);
    std::vector<std::string> words;
    words.reserve(sentence.size());
    for (int id : sentence) words.push_back(vocab.Word(id));
    const Sketch sketch = DeriveSketch(words, tag.aspect, tables.ngrams, tables.keep, tagger);
    t.aspects.push_back(tag.aspect);
    t.sketches.push_back(tables.vocab.Encode(sketch));
    t.alignments.push_back(sketch.alignment);
    t.sentences.push_back(sentence);
    if (tag.fallback) ++t.fallback_tags;
  }
  t.Check();
  return t;
}

std::vector<TrainingTriple> BuildTriples(const std::vector<Review>& reviews,
                                         const Vocabulary& vocab, const AspectModel& model,
                                         const SketchTables& tables, const PosTagger& tagger) {
  std::vector<TrainingTriple> out;
  out.reserve(reviews.size());
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    try {
      out.push_back(BuildTriple(reviews[i], vocab, model, tables, tagger));
    } catch (const Error& e) {
      throw Error(e.kind(), "review " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void CollapseAspects(std::vector<TrainingTriple>& triples) {
  for (auto& t : triples) std::fill(t.aspects.begin(), t.aspects.end(), 0);
}

nn::Matrix ThetaMatrix(const AspectModel& model) {
  nn::Matrix m(model.num_aspects, model.vocab_size);
  for (int a = 0; a < model.num_aspects; ++a) {
    for (int w = 0; w < model.vocab_size; ++w) m(a, w) = model.Theta(a, w);
  }
  return m;
}

nn::Matrix MeanThetaRow(const AspectModel& model) {
  return ThetaMatrix(model).colwise().mean();
}

std::vector<SlotPlan> PlanSketch(std::span<const int> symbols, const SketchVocab& sketch_vocab,
                                 const Vocabulary& vocab) {
  std::vector<SlotPlan> plan;
  plan.reserve(symbols.size());
  for (int id : symbols) {
    if (id < 0 || id >= sketch_vocab.size() || sketch_vocab.IsControl(id)) {
      ThrowUsage("sketch symbol " + std::to_string(id) + " cannot be realized");
    }
    SlotPlan slot;
    slot.symbol = id;
    const auto& entry = sketch_vocab.at(id);
    if (entry.kind != SlotKind::kPos) {
      for (const auto& w : entry.words) slot.forced_words.push_back(vocab.Index(w));
    }
    plan.push_back(std::move(slot));
  }
  return plan;
}

ModelOptions MakeModelOptions(const RunConfig& config, int num_users, int num_items,
                              int num_ratings, int num_aspects, int sketch_vocab, int word_vocab) {
  ModelOptions o;
  o.dims = config.dims;
  o.dims.num_users = num_users;
  o.dims.num_items = num_items;
  o.dims.num_ratings = num_ratings;
  o.dims.num_aspects = config.no_aspect ? 1 : num_aspects;
  o.dims.sketch_vocab = sketch_vocab;
  o.dims.word_vocab = word_vocab;
  o.review.boost_scale = config.boost_scale;
  o.review.logit_scale = config.logit_scale;
  o.review.use_sketch = !config.no_sketch;
  o.chain_sketches = config.chain_sketches;
  o.chain_words = config.chain_words;
  o.no_aspect = config.no_aspect;
  return o;
}

int TypicalSentenceCount(const std::vector<TrainingTriple>& triples) {
  if (triples.empty()) return 1;
  double total = 0;
  for (const auto& t : triples) total += static_cast<double>(t.num_sentences());
  return std::max(1, static_cast<int>(std::lround(total / static_cast<double>(triples.size()))));
}

ReviewModel MakeModel(const RunConfig& config, const Corpus& corpus, const AspectModel& lda,
                      const SketchVocab& sketch_vocab, const std::vector<TrainingTriple>& train) {
  config.Validate();
  if (lda.vocab_size != corpus.vocab.size()) {
    ThrowData("aspect model covers " + std::to_string(lda.vocab_size) + " words, vocabulary has " +
              std::to_string(corpus.vocab.size()));
  }
  ModelOptions options =
      MakeModelOptions(config, corpus.users.size(), corpus.items.size(), corpus.num_ratings,
                       lda.num_aspects, sketch_vocab.size(), corpus.vocab.size());
  options.fixed_sentences = TypicalSentenceCount(train);
  ReviewModel model(options);
  Rng rng(config.seed);
  model.Initialize(rng, config.init_scale);
  model.SetBoost(config.no_aspect ? MeanThetaRow(lda) : ThetaMatrix(lda));
  return model;
}

std::vector<TrainingTriple> AdaptTriples(const RunConfig& config,
                                         std::vector<TrainingTriple> triples) {
  if (config.no_aspect) CollapseAspects(triples);
  return triples;
}

const char* PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kAspect: return "aspect";
    case Phase::kSketch: return "sketch";
    case Phase::kReview: return "review";
    case Phase::kJoint: return "joint";
    case Phase::kDone: return "done";
  }
  return "?";
}

// ---------------------------------------------------------------- losses

namespace {

int AspectTokens(const TrainingTriple& t) { return static_cast<int>(t.aspects.size()) + 1; }

int SketchTokens(const TrainingTriple& t) {
  int n = 0;
  for (const auto& s : t.sketches) n += static_cast<int>(s.size()) + 1;
  return n;
}

int WordTokens(const TrainingTriple& t, int sentence) {
  if (sentence >= 0) return static_cast<int>(t.sentences[static_cast<std::size_t>(sentence)].size()) + 1;
  int n = 0;
  for (const auto& s : t.sentences) n += static_cast<int>(s.size()) + 1;
  return n;
}

Var AspectLoss(const ReviewModel& model, nn::Tape& tape, const EncodedContext& ctx,
               const TrainingTriple& t, const nn::RunMode& mode, int* tokens) {
  return model.aspects().SequenceLoss(tape, ctx, t.aspects, mode, tokens);
}

Var SketchLoss(const ReviewModel& model, nn::Tape& tape, const EncodedContext& ctx,
               const TrainingTriple& t, const nn::RunMode& mode, int* tokens) {
  return model.sketches().SequenceLoss(tape, ctx, t.aspects, t.sketches, mode, tokens,
                                       model.options().chain_sketches);
}

/// sentence < 0: every sentence of the review.
Var WordLoss(const ReviewModel& model, nn::Tape& tape, const EncodedContext& ctx,
             const TrainingTriple& t, int sentence, const nn::RunMode& mode, int* tokens) {
  const auto& words = model.words();
  auto one = [&](std::size_t j, nn::Gru::State* state, int* n) {
    return words.SentenceLoss(tape, ctx, t.aspects[j], t.sketches[j], t.alignments[j],
                              t.sentences[j], mode, n, state);
  };
  if (sentence >= 0) return one(static_cast<std::size_t>(sentence), nullptr, tokens);
  std::vector<Var> parts;
  nn::Gru::State state;
  int total = 0;
  for (std::size_t j = 0; j < t.sentences.size(); ++j) {
    int n = 0;
    parts.push_back(one(j, model.options().chain_words ? &state : nullptr, &n));
    total += n;
  }
  if (tokens != nullptr) *tokens = total;
  return nn::SumScalars(parts);
}

}  // namespace

Var JointLoss(const ReviewModel& model, nn::Tape& tape, const TrainingTriple& triple,
              const nn::RunMode& mode, LossBreakdown* parts) {
  const auto ctx = model.encoder().Encode(tape, triple.user, triple.item, triple.rating);
  std::vector<Var> terms;
  LossBreakdown local;
  if (!model.options().no_aspect) {
    terms.push_back(AspectLoss(model, tape, ctx, triple, mode, &local.aspect_tokens));
    local.aspect = terms.back().scalar();
  }
  if (model.options().review.use_sketch) {
    terms.push_back(SketchLoss(model, tape, ctx, triple, mode, &local.sketch_tokens));
    local.sketch = terms.back().scalar();
  }
  terms.push_back(WordLoss(model, tape, ctx, triple, -1, mode, &local.word_tokens));
  local.words = terms.back().scalar();
  if (parts != nullptr) *parts = local;
  return nn::SumScalars(terms);
}

LossBreakdown EvaluateLosses(const ReviewModel& model, const std::vector<TrainingTriple>& triples) {
  LossBreakdown total;
  for (const auto& t : triples) {
    nn::Tape tape(false);
    LossBreakdown part;
    JointLoss(model, tape, t, nn::RunMode::Eval(), &part);
    total.aspect += part.aspect;
    total.sketch += part.sketch;
    total.words += part.words;
    total.aspect_tokens += part.aspect_tokens;
    total.sketch_tokens += part.sketch_tokens;
    total.word_tokens += part.word_tokens;
  }
  return total;
}

// ---------------------------------------------------------------- training

namespace {

struct BatchItem {
  std::size_t triple;
  int sentence;  // -1: whole review
};
using Batch = std::vector<BatchItem>;

std::uint64_t EpochSeed(std::uint64_t seed, Phase phase, int epoch) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(phase) * 1000003ULL +
                                                    static_cast<std::uint64_t>(epoch) + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Batch> MakeBatches(Phase phase, int batch_size, bool chain_words,
                               const std::vector<TrainingTriple>& triples, Rng& rng) {
  std::vector<Batch> batches;
  if (phase == Phase::kReview && !chain_words) {
    std::vector<BatchItem> items;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      for (std::size_t j = 0; j < triples[i].sentences.size(); ++j) {
        items.push_back({i, static_cast<int>(j)});
      }
    }
    rng.Shuffle(items);
    for (std::size_t k = 0; k < items.size(); k += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(items.size(), k + static_cast<std::size_t>(batch_size));
      batches.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(k),
                           items.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(order);
  Batch current;
  std::size_t units = 0;
  for (std::size_t i : order) {
    current.push_back({i, -1});
    // Aspect batches count reviews; the others count sentences but keep reviews whole.
    units += phase == Phase::kAspect ? 1 : triples[i].sentences.size();
    if (units >= static_cast<std::size_t>(batch_size)) {
      batches.push_back(std::move(current));
      current.clear();
      units = 0;
    }
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

}  // namespace

Trainer::Trainer(ReviewModel& model, const RunConfig& config) : model_(model), config_(config) {}

const StageConfig& Trainer::Stage(Phase phase) const {
  switch (phase) {
    case Phase::kAspect: return config_.aspect;
    case Phase::kSketch: return config_.sketch;
    case Phase::kReview: return config_.review;
    default: return config_.joint;
  }
}

bool Trainer::PhaseEnabled(Phase phase) const {
  switch (phase) {
    case Phase::kAspect: return !model_.options().no_aspect;
    case Phase::kSketch: return model_.options().review.use_sketch;
    case Phase::kReview:
    case Phase::kJoint: return true;
    default: return false;
  }
}

std::vector<nn::Parameter*> Trainer::Group(Phase phase) {
  const bool tune_shared = !config_.freeze_shared;
  switch (phase) {
    case Phase::kAspect: return model_.Trainable({"ctx.", "asp."});
    case Phase::kSketch:
      return tune_shared ? model_.Trainable({"skt.", "ctx.", "asp.embedding"})
                         : model_.Trainable({"skt."});
    case Phase::kReview:
      return tune_shared ? model_.Trainable({"rev.", "ctx."}) : model_.Trainable({"rev."});
    default: return model_.Trainable();
  }
}

std::string Trainer::Checkpoint() const {
  nn::Metadata extra;
  extra["train.phase"] = std::to_string(static_cast<int>(phase_));
  extra["train.epoch"] = std::to_string(next_epoch_);
  return model_.Encode(&adam_, extra);
}

void Trainer::Restore(std::string_view bytes) {
  nn::Metadata meta;
  adam_ = nn::Adam(adam_.config());
  nn::DecodeCheckpoint(bytes, model_.store(), &adam_, &meta);
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    return it == meta.end() ? 0 : std::stoi(it->second);
  };
  phase_ = static_cast<Phase>(get("train.phase"));
  next_epoch_ = get("train.epoch");
}

EpochRecord Trainer::RunEpoch(Phase phase, int epoch, const std::vector<TrainingTriple>& triples) {
  if (triples.empty()) ThrowUsage("training needs at least one review");
  const StageConfig& stage = Stage(phase);
  Rng rng(EpochSeed(config_.seed, phase, epoch));
  const auto batches = MakeBatches(phase, stage.batch_size, model_.options().chain_words, triples, rng);
  const auto group = Group(phase);
  const double lr = stage.RateAt(epoch);
  const nn::RunMode mode{true, config_.dropout, &rng};
  const std::string last_good = Checkpoint();

  EpochRecord record{phase, epoch, lr, 0.0, 0};
  double loss_sum = 0.0;
  long tokens_sum = 0;
  for (const auto& batch : batches) {
    model_.store().ZeroGrad();
    int tokens = 0;
    for (const auto& item : batch) {
      const auto& t = triples[item.triple];
      switch (phase) {
        case Phase::kAspect: tokens += AspectTokens(t); break;
        case Phase::kSketch: tokens += SketchTokens(t); break;
        case Phase::kReview: tokens += WordTokens(t, item.sentence); break;
        default:
          tokens += WordTokens(t, -1);
          if (!model_.options().no_aspect) tokens += AspectTokens(t);
          if (model_.options().review.use_sketch) tokens += SketchTokens(t);
      }
    }
    double batch_loss = 0.0;
    for (const auto& item : batch) {
      const auto& t = triples[item.triple];
      nn::Tape tape;
      Var loss;
      if (phase == Phase::kJoint) {
        loss = JointLoss(model_, tape, t, mode);
      } else {
        const auto ctx = model_.encoder().Encode(tape, t.user, t.item, t.rating);
        if (phase == Phase::kAspect) loss = AspectLoss(model_, tape, ctx, t, mode, nullptr);
        else if (phase == Phase::kSketch) loss = SketchLoss(model_, tape, ctx, t, mode, nullptr);
        else loss = WordLoss(model_, tape, ctx, t, item.sentence, mode, nullptr);
      }
      batch_loss += loss.scalar();
      tape.Backward(loss, 1.0 / tokens);
    }
    if (!std::isfinite(batch_loss) || !nn::GradientsFinite(group)) {
      Restore(last_good);
      throw Error(ErrorKind::kDivergence,
                  std::string("training diverged in the ") + PhaseName(phase) + " phase, epoch " +
                      std::to_string(epoch) + "; restored the state at the start of the epoch");
    }
    nn::ClipGradNorm(group, config_.clip_norm);
    adam_.Step(group, lr);
    loss_sum += batch_loss;
    tokens_sum += tokens;
    ++record.steps;
  }
  model_.store().ZeroGrad();
  record.mean_loss = tokens_sum > 0 ? loss_sum / static_cast<double>(tokens_sum) : 0.0;
  history_.push_back(record);
  if (listener_) listener_(record);
  return record;
}

void Trainer::Run(const std::vector<TrainingTriple>& triples) {
  while (phase_ != Phase::kDone) {
    if (PhaseEnabled(phase_)) {
      while (next_epoch_ < Stage(phase_).epochs) {
        RunEpoch(phase_, next_epoch_, triples);
        ++next_epoch_;
      }
    }
    phase_ = static_cast<Phase>(static_cast<int>(phase_) + 1);
    next_epoch_ = 0;
  }
}

// ---------------------------------------------------------------- generation

GenerateOptions GenerateOptions::From(const RunConfig& config) {
  GenerateOptions o;
  o.beam = config.beam;
  o.max_aspects = config.max_aspects;
  o.max_sketch_len = config.max_sketch_len;
  o.max_words = config.max_words;
  o.length_normalize = config.length_normalize;
  return o;
}

std::vector<int> GenerationResult::Words() const {
  std::vector<int> out;
  for (const auto& s : sentences) out.insert(out.end(), s.words.begin(), s.words.end());
  return out;
}

GenerationResult GenerateReview(const ReviewModel& model, const SketchVocab& sketch_vocab,
                                const Vocabulary& vocab, int user, int item, int rating,
                                const GenerateOptions& options) {
  GenerationResult result;
  nn::Tape tape(false);
  const auto ctx = model.encoder().Encode(tape, user, item, rating);
  result.unknown_user = ctx.unknown_user;
  result.unknown_item = ctx.unknown_item;

  if (model.options().no_aspect) {
    result.aspects.assign(static_cast<std::size_t>(std::max(1, model.options().fixed_sentences)), 0);
  } else {
    BeamOptions opts{options.beam, options.max_aspects, -1, 1, options.length_normalize};
    const auto beams = model.aspects().Generate(tape, ctx, opts);
    result.aspects = beams.front().symbols;
    result.aspect_logprob = beams.front().score;
    result.aspect_truncated = beams.front().truncated;
  }
  if (result.aspects.empty()) {
    result.empty = true;
    return result;
  }

  const bool use_sketch = model.options().review.use_sketch;
  std::vector<SketchDecoder::Generated> sketches;
  if (use_sketch) {
    BeamOptions opts{options.beam, options.max_sketch_len, -1, 1, options.length_normalize};
    sketches = model.sketches().Generate(tape, ctx, result.aspects, opts,
                                         model.options().chain_sketches);
  }

  nn::Gru::State state;
  const bool chain = model.options().chain_words;
  for (std::size_t j = 0; j < result.aspects.size(); ++j) {
    GeneratedSentence s;
    s.aspect = result.aspects[j];
    ReviewDecoder::Generated words;
    const nn::Gru::State* initial = chain && !state.empty() ? &state : nullptr;
    if (use_sketch) {
      s.sketch = sketches[j].symbols;
      s.sketch_logprob = sketches[j].score;
      s.sketch_truncated = sketches[j].truncated;
      const auto plan = PlanSketch(s.sketch, sketch_vocab, vocab);
      BeamOptions opts{options.beam, options.max_words, -1, 0, options.length_normalize};
      words = model.words().GenerateSentence(tape, ctx, s.aspect, plan, opts, initial);
    } else {
      BeamOptions opts{options.beam, options.max_words, -1, 1, options.length_normalize};
      words = model.words().GenerateFree(tape, ctx, s.aspect, opts, initial);
    }
    s.words = std::move(words.words);
    s.word_logprob = words.score;
    s.words_truncated = words.truncated;
    state = std::move(words.state);
    result.sentences.push_back(std::move(s));
  }
  return result;
}

std::string GenerationToJson(const GenerationResult& result, const SketchVocab& sketch_vocab,
                             const Vocabulary& vocab, const std::string& user,
                             const std::string& item, int rating) {
  json j;
  j["user"] = user;
  j["item"] = item;
  j["rating"] = rating;
  j["aspects"] = result.aspects;
  j["aspect_logprob"] = result.aspect_logprob;
  json sentences = json::array();
  std::vector<std::string> all_words;
  for (const auto& s : result.sentences) {
    json js;
    js["aspect"] = s.aspect;
    std::vector<std::string> symbols;
    for (int id : s.sketch) symbols.push_back(sketch_vocab.at(id).symbol);
    js["sketch"] = symbols;
    std::vector<std::string> words;
    for (int id : s.words) words.push_back(vocab.Word(id));
    js["text"] = Join(words, " ");
    js["sketch_logprob"] = s.sketch_logprob;
    js["word_logprob"] = s.word_logprob;
    js["sketch_truncated"] = s.sketch_truncated;
    js["words_truncated"] = s.words_truncated;
    sentences.push_back(std::move(js));
    all_words.insert(all_words.end(), words.begin(), words.end());
  }
  j["sentences"] = std::move(sentences);
  j["text"] = Join(all_words, " ");
  j["flags"] = {{"unknown_user", result.unknown_user},
                {"unknown_item", result.unknown_item},
                {"aspect_truncated", result.aspect_truncated},
                {"empty", result.empty}};
  return j.dump();
}

}  // namespace c2f

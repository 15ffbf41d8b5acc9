#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "c2f/pipeline.hpp"
#include "support/desk_run.hpp"
#include "support/fixtures.hpp"

namespace c2f {
namespace {

using testing::DeskRun;
using testing::PrepareDeskRun;
using testing::QuickDeskConfig;

const DeskRun& Desk() {
  static const DeskRun run = PrepareDeskRun(QuickDeskConfig());
  return run;
}

// ------------------------------------------------------------ triples

struct VocalsCorpus {
  Vocabulary vocab;
  AspectModel lda;
  SketchTables tables;
  testing::VocalsFixture fx;

  VocalsCorpus() {
    std::unordered_map<std::string, std::int64_t> counts{
        {"the", 50}, {"vocals", 9}, {"are", 30}, {"pretty", 12}, {"well", 12},
        {"sound", 8}, {"bass", 7}, {"price", 6}, {"cheap", 5}, {"is", 20}, {"i", 25}, {".", 40}};
    vocab = Vocabulary::Build(counts, 1);
    lda.num_aspects = 2;
    lda.vocab_size = vocab.size();
    lda.beta = 0.01;
    lda.background_prob = 0.3;
    lda.aspect_share = {0.5, 0.5};
    lda.background.assign(static_cast<std::size_t>(vocab.size()), 0.0);
    lda.theta.assign(static_cast<std::size_t>(2 * vocab.size()), 0.0);
    const std::vector<std::vector<std::string>> rows{{"vocals", "sound", "bass"},
                                                     {"price", "cheap"}};
    for (int a = 0; a < 2; ++a) {
      for (int w = Vocabulary::kNumReserved; w < vocab.size(); ++w) {
        const bool hot = std::find(rows[a].begin(), rows[a].end(), vocab.Word(w)) != rows[a].end();
        lda.theta[static_cast<std::size_t>(a * vocab.size() + w)] = hot ? 1.0 : 0.01;
        lda.background[static_cast<std::size_t>(w)] = 1.0;
      }
      double sum = 0.0;
      for (int w = 0; w < vocab.size(); ++w) sum += lda.theta[static_cast<std::size_t>(a * vocab.size() + w)];
      for (int w = 0; w < vocab.size(); ++w) lda.theta[static_cast<std::size_t>(a * vocab.size() + w)] /= sum;
    }
    double bsum = 0.0;
    for (double b : lda.background) bsum += b;
    for (double& b : lda.background) b /= bsum;
    tables.ngrams = fx.ngrams;
    tables.keep = fx.keep;
    tables.vocab = SketchVocab::Build(tables.ngrams, tables.keep);
  }

  std::vector<int> Ids(const std::vector<std::string>& words) const {
    std::vector<int> out;
    for (const auto& w : words) out.push_back(vocab.Index(w));
    return out;
  }
};

TEST(Triples, OneEntryPerSentence) {
  VocalsCorpus vc;
  Review r;
  r.user = 1;
  r.item = 2;
  r.rating = 4;
  r.sentences = {vc.Ids({"the", "vocals", "are", "pretty", "well", "."}),
                 vc.Ids({"the", "price", "is", "cheap", "."}),
                 vc.Ids({"i", "bass", "."})};
  const TrainingTriple t = BuildTriple(r, vc.vocab, vc.lda, vc.tables, vc.fx.tagger);
  EXPECT_EQ(t.num_sentences(), 3u);
  EXPECT_EQ(t.aspects.size(), 3u);
  EXPECT_EQ(t.sketches.size(), 3u);
  EXPECT_EQ(t.alignments.size(), 3u);
  EXPECT_EQ(t.user, 1);
  EXPECT_EQ(t.item, 2);
  EXPECT_EQ(t.rating, 4);
  EXPECT_EQ((t.aspects), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(t.sentences, r.sentences);
  EXPECT_EQ(BuildTriple(r, vc.vocab, vc.lda, vc.tables, vc.fx.tagger), t);
}

TEST(Triples, VocalsSentenceSketch) {
  VocalsCorpus vc;
  Review r;
  r.sentences = {vc.Ids({"the", "vocals", "are", "pretty", "well"})};
  const TrainingTriple t = BuildTriple(r, vc.vocab, vc.lda, vc.tables, vc.fx.tagger);
  ASSERT_EQ(t.aspects, std::vector<int>{0});
  std::vector<std::string> symbols;
  for (int id : t.sketches[0]) symbols.push_back(vc.tables.vocab.at(id).symbol);
  EXPECT_EQ(symbols, (std::vector<std::string>{"the", "NN", "are", "pretty_well"}));
  EXPECT_EQ(t.alignments[0], (std::vector<int>{0, 1, 2, 3, 3}));
  EXPECT_EQ(t.fallback_tags, 0);
}

TEST(Triples, JsonlRoundTripAndErrors) {
  const auto& run = Desk();
  ASSERT_FALSE(run.train.empty());
  const std::string text = SerializeTriples(run.train);
  EXPECT_EQ(ParseTriples(text), run.train);
  EXPECT_THROW(ParseTriples("{\"user\": 1}\n"), Error);
  EXPECT_THROW(ParseTriples("not json\n"), Error);

  TrainingTriple bad = run.train.front();
  bad.aspects.pop_back();
  EXPECT_THROW(bad.Check(), Error);
  bad = run.train.front();
  bad.alignments[0].push_back(0);
  EXPECT_THROW(bad.Check(), Error);
  EXPECT_THROW(TrainingTriple{}.Check(), Error);
}

TEST(Triples, DeskTriplesAreDeterministic) {
  const auto again = PrepareDeskRun(QuickDeskConfig());
  EXPECT_EQ(again.train, Desk().train);
  EXPECT_EQ(again.tables.vocab.Serialize(), Desk().tables.vocab.Serialize());
}

// ------------------------------------------------------------ config

TEST(Config, LargeScaleDefaults) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.aspect.learning_rate, 2e-5);
  EXPECT_EQ(c.aspect.batch_size, 1024);
  for (const StageConfig* s : {&c.sketch, &c.review}) {
    EXPECT_DOUBLE_EQ(s->learning_rate, 2e-4);
    EXPECT_EQ(s->batch_size, 64);
    EXPECT_DOUBLE_EQ(s->decay_factor, 0.8);
    EXPECT_EQ(s->decay_epochs, 2);
  }
  EXPECT_DOUBLE_EQ(c.dropout, 0.2);
  EXPECT_EQ(c.beam, 4);
  EXPECT_EQ(c.max_aspects, 5);
  EXPECT_EQ(c.max_sketch_len, 50);
  EXPECT_EQ(c.dims.layers, 2);
  for (int d : {c.dims.embed_dim, c.dims.context_dim, c.dims.aspect_dim, c.dims.aspect_hidden,
                c.dims.sketch_dim, c.dims.sketch_hidden, c.dims.word_dim, c.dims.word_hidden}) {
    EXPECT_EQ(d, 512);
  }
  EXPECT_EQ(c.top_ngrams, 200);
  EXPECT_EQ(c.aspect_keep, 50);
  EXPECT_EQ(c.lda.beta, 0.01);
  EXPECT_EQ(c.lda.gamma, 20.0);
  EXPECT_NO_THROW(c.Validate());
}

TEST(Config, DecaySchedule) {
  const StageConfig s{1.0, 64, 10, 0.8, 2};
  EXPECT_DOUBLE_EQ(s.RateAt(0), 1.0);
  EXPECT_DOUBLE_EQ(s.RateAt(1), 1.0);
  EXPECT_DOUBLE_EQ(s.RateAt(2), 0.8);
  EXPECT_DOUBLE_EQ(s.RateAt(5), 0.64);
}

TEST(Config, SerializeParseRoundTrip) {
  RunConfig c = RunConfig::Desk();
  c.Set("review.boost_scale", "2.5");
  c.Set("ablation.no_sketch", "true");
  c.Set("run.seed", "77");
  const RunConfig back = RunConfig::Parse(c.Serialize());
  EXPECT_EQ(back.Serialize(), c.Serialize());
  EXPECT_DOUBLE_EQ(back.boost_scale, 2.5);
  EXPECT_TRUE(back.no_sketch);
  EXPECT_EQ(back.seed, 77u);
}

TEST(Config, SectionsCommentsAndErrors) {
  const RunConfig c = RunConfig::Parse("# comment\n[generate]\nbeam = 7\n\nsketch.epochs = 3\n");
  EXPECT_EQ(c.beam, 7);
  EXPECT_EQ(c.sketch.epochs, 3);
  EXPECT_THROW(RunConfig::Parse("[generate]\nnope = 1\n"), Error);
  EXPECT_THROW(RunConfig::Parse("beam = 1\n"), Error);
  EXPECT_THROW(RunConfig::Parse("[generate]\nbeam = many\n"), Error);
  RunConfig bad;
  bad.dims.sketch_dim = 7;
  EXPECT_THROW(bad.Validate(), Error);
  bad = RunConfig();
  bad.dims.word_hidden = 3;
  EXPECT_THROW(bad.Validate(), Error);
  bad = RunConfig();
  bad.dropout = 1.0;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(Config, SeedEnvironmentOverride) {
  ::setenv("SEED", "4242", 1);
  RunConfig c;
  c.ApplyEnvironment();
  ::unsetenv("SEED");
  EXPECT_EQ(c.seed, 4242u);
  EXPECT_EQ(c.lda.seed, 4242u);
  RunConfig d;
  d.ApplyEnvironment();
  EXPECT_EQ(d.seed, 1u);
}

// ------------------------------------------------------------ losses

TEST(JointLoss, EqualsSumOfFactors) {
  const ModelDims dims = testing::TinyDims();
  ReviewModel model = testing::RandomModel(dims, 3);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const TrainingTriple t = testing::RandomTriple(dims, rng, 3);
    nn::Tape tape;
    LossBreakdown parts;
    const double joint = JointLoss(model, tape, t, nn::RunMode::Eval(), &parts).scalar();

    nn::Tape ref(false);
    const auto ctx = model.encoder().Encode(ref, t.user, t.item, t.rating);
    int n = 0;
    const double a = model.aspects().SequenceLoss(ref, ctx, t.aspects, nn::RunMode::Eval(), &n).scalar();
    EXPECT_EQ(n, static_cast<int>(t.aspects.size()) + 1);
    const double s = model.sketches()
                         .SequenceLoss(ref, ctx, t.aspects, t.sketches, nn::RunMode::Eval(), &n, true)
                         .scalar();
    double w = 0.0;
    for (std::size_t j = 0; j < t.sentences.size(); ++j) {
      w += model.words()
               .SentenceLoss(ref, ctx, t.aspects[j], t.sketches[j], t.alignments[j], t.sentences[j],
                             nn::RunMode::Eval(), &n)
               .scalar();
    }
    EXPECT_NEAR(joint, a + s + w, 1e-9);
    EXPECT_NEAR(parts.aspect, a, 1e-12);
    EXPECT_NEAR(parts.sketch, s, 1e-12);
    EXPECT_NEAR(parts.words, w, 1e-12);
    EXPECT_NEAR(parts.joint(), joint, 1e-9);
  }
}

// ------------------------------------------------------------ training

TEST(Trainer, EachStageLowersItsLossAndJointStaysClose) {
  const auto& run = Desk();
  RunConfig config = run.config;
  config.aspect.epochs = 6;
  config.sketch.epochs = 4;
  config.review.epochs = 4;
  config.joint.epochs = 2;
  ReviewModel model = MakeModel(config, run.corpus, run.lda, run.tables.vocab, run.train);
  Trainer trainer(model, config);

  const LossBreakdown start = EvaluateLosses(model, run.train);
  for (int e = 0; e < config.aspect.epochs; ++e) trainer.RunEpoch(Phase::kAspect, e, run.train);
  const LossBreakdown after_aspect = EvaluateLosses(model, run.train);
  EXPECT_LT(after_aspect.aspect_mean(), start.aspect_mean());

  for (int e = 0; e < config.sketch.epochs; ++e) trainer.RunEpoch(Phase::kSketch, e, run.train);
  const LossBreakdown after_sketch = EvaluateLosses(model, run.train);
  EXPECT_LT(after_sketch.sketch_mean(), after_aspect.sketch_mean());
  // Later stages leave the aspect decoder and the shared encoder alone.
  EXPECT_DOUBLE_EQ(after_sketch.aspect, after_aspect.aspect);

  for (int e = 0; e < config.review.epochs; ++e) trainer.RunEpoch(Phase::kReview, e, run.train);
  const LossBreakdown after_review = EvaluateLosses(model, run.train);
  EXPECT_LT(after_review.word_mean(), after_sketch.word_mean());
  EXPECT_DOUBLE_EQ(after_review.aspect, after_sketch.aspect);
  EXPECT_DOUBLE_EQ(after_review.sketch, after_sketch.sketch);

  for (int e = 0; e < config.joint.epochs; ++e) trainer.RunEpoch(Phase::kJoint, e, run.train);
  const LossBreakdown after_joint = EvaluateLosses(model, run.train);
  EXPECT_LE(after_joint.joint(), 1.01 * after_review.joint());

  ASSERT_EQ(trainer.history().size(), 16u);
  for (const auto& r : trainer.history()) {
    EXPECT_TRUE(std::isfinite(r.mean_loss));
    EXPECT_GT(r.steps, 0);
  }
}

TEST(Trainer, ResumeIsBitExact) {
  const auto& run = Desk();
  const RunConfig config = run.config;

  ReviewModel full = MakeModel(config, run.corpus, run.lda, run.tables.vocab, run.train);
  Trainer a(full, config);
  a.Run(run.train);
  EXPECT_EQ(a.phase(), Phase::kDone);

  ReviewModel part = MakeModel(config, run.corpus, run.lda, run.tables.vocab, run.train);
  Trainer b(part, config);
  for (int e = 0; e < config.aspect.epochs; ++e) b.RunEpoch(Phase::kAspect, e, run.train);
  b.RunEpoch(Phase::kSketch, 0, run.train);
  b.ResumeAt(Phase::kSketch, 1);
  const std::string midpoint = b.Checkpoint();

  ReviewModel resumed = ReviewModel::Decode(midpoint);
  Trainer c(resumed, config);
  c.Restore(midpoint);
  EXPECT_EQ(c.phase(), Phase::kSketch);
  EXPECT_EQ(c.next_epoch(), 1);
  c.Run(run.train);
  EXPECT_EQ(c.Checkpoint(), a.Checkpoint());
}

TEST(Trainer, DivergenceRestoresEpochStart) {
  const auto& run = Desk();
  ReviewModel model = MakeModel(run.config, run.corpus, run.lda, run.tables.vocab, run.train);
  Trainer trainer(model, run.config);
  trainer.RunEpoch(Phase::kAspect, 0, run.train);
  model.store().Get("asp.out.b").value(0) = std::numeric_limits<double>::quiet_NaN();
  const std::string before = trainer.Checkpoint();
  try {
    trainer.RunEpoch(Phase::kAspect, 1, run.train);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
  }
  EXPECT_EQ(trainer.Checkpoint(), before);
  EXPECT_THROW(trainer.RunEpoch(Phase::kAspect, 0, {}), Error);
}

// ------------------------------------------------------------ generation

class TrainedDesk : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = std::make_unique<ReviewModel>(testing::TrainDeskModel(Desk(), Desk().config));
  }
  static void TearDownTestSuite() { model_.reset(); }
  static std::unique_ptr<ReviewModel> model_;
};
std::unique_ptr<ReviewModel> TrainedDesk::model_;

TEST_F(TrainedDesk, StructureHolds) {
  const auto& run = Desk();
  GenerateOptions opts = GenerateOptions::From(run.config);
  for (const auto& t : run.test) {
    const auto g = GenerateReview(*model_, run.tables.vocab, run.corpus.vocab, t.user, t.item,
                                  t.rating, opts);
    ASSERT_FALSE(g.empty);
    EXPECT_EQ(g.sentences.size(), g.aspects.size());
    EXPECT_GE(g.aspects.size(), 1u);
    EXPECT_LE(g.aspects.size(), static_cast<std::size_t>(opts.max_aspects));
    for (const auto& s : g.sentences) {
      EXPECT_GE(s.aspect, 0);
      EXPECT_LT(s.aspect, run.lda.num_aspects);
      EXPECT_GE(s.sketch.size(), 1u);
      EXPECT_LE(s.sketch.size(), static_cast<std::size_t>(opts.max_sketch_len));
      for (int id : s.sketch) EXPECT_FALSE(run.tables.vocab.IsControl(id));
      for (int w : s.words) EXPECT_FALSE(Vocabulary::IsReserved(w));
    }
    const std::string line = GenerationToJson(g, run.tables.vocab, run.corpus.vocab, "u", "i", 3);
    EXPECT_EQ(line.find('\n'), std::string::npos);
  }
}

TEST_F(TrainedDesk, UnknownIdsAreFlaggedNotFatal) {
  const auto& run = Desk();
  const auto g = GenerateReview(*model_, run.tables.vocab, run.corpus.vocab, 10'000, -1, 2,
                                GenerateOptions::From(run.config));
  EXPECT_TRUE(g.unknown_user);
  EXPECT_TRUE(g.unknown_item);
  EXPECT_EQ(g.sentences.size(), g.aspects.size());
}

TEST_F(TrainedDesk, GenerationIsDeterministic) {
  const auto& run = Desk();
  const auto& t = run.train.front();
  const auto opts = GenerateOptions::From(run.config);
  const auto a = GenerateReview(*model_, run.tables.vocab, run.corpus.vocab, t.user, t.item, t.rating, opts);
  const auto b = GenerateReview(*model_, run.tables.vocab, run.corpus.vocab, t.user, t.item, t.rating, opts);
  EXPECT_EQ(a.aspects, b.aspects);
  EXPECT_EQ(a.Words(), b.Words());
}

TEST(Generation, SingleReviewAspectSequenceIsMemorized) {
  const auto& run = Desk();
  RunConfig config = run.config;
  config.dropout = 0.0;
  config.aspect.learning_rate = 0.02;
  const std::vector<TrainingTriple> one{run.train.front()};
  ReviewModel model = MakeModel(config, run.corpus, run.lda, run.tables.vocab, one);
  Trainer trainer(model, config);
  for (int e = 0; e < 150; ++e) trainer.RunEpoch(Phase::kAspect, e, one);
  const auto& t = one.front();
  GenerateOptions opts = GenerateOptions::From(config);
  const auto g = GenerateReview(model, run.tables.vocab, run.corpus.vocab, t.user, t.item, t.rating, opts);
  EXPECT_EQ(g.aspects, t.aspects);
}

TEST(Generation, AblationsTrainAndGenerate) {
  const auto& run = Desk();
  for (const bool no_aspect : {true, false}) {
    for (const bool no_sketch : {true, false}) {
      if (!no_aspect && !no_sketch) continue;
      RunConfig config = run.config;
      config.no_aspect = no_aspect;
      config.no_sketch = no_sketch;
      std::vector<TrainingTriple> adapted;
      ReviewModel model = testing::TrainDeskModel(run, config, &adapted);
      EXPECT_EQ(model.options().no_aspect, no_aspect);
      EXPECT_EQ(model.options().review.use_sketch, !no_sketch);
      if (no_aspect) {
        for (const auto& t : adapted) {
          for (int a : t.aspects) EXPECT_EQ(a, 0);
        }
      }
      const auto& t = run.test.front();
      const auto g = GenerateReview(model, run.tables.vocab, run.corpus.vocab, t.user, t.item,
                                    t.rating, GenerateOptions::From(config));
      ASSERT_FALSE(g.empty);
      EXPECT_EQ(g.sentences.size(), g.aspects.size());
      if (no_aspect) {
        EXPECT_EQ(static_cast<int>(g.aspects.size()), model.options().fixed_sentences);
      }
      for (const auto& s : g.sentences) {
        if (no_sketch) {
          EXPECT_TRUE(s.sketch.empty());
        }
        EXPECT_FALSE(s.words.empty());
      }
      const auto losses = EvaluateLosses(model, adapted);
      EXPECT_TRUE(std::isfinite(losses.joint()));
      if (no_aspect) {
        EXPECT_EQ(losses.aspect_tokens, 0);
      }
      if (no_sketch) {
        EXPECT_EQ(losses.sketch_tokens, 0);
      }
    }
  }
}

}  // namespace
}  // namespace c2f

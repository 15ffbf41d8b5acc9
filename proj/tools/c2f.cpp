// Command line front end: prepare, lda, sketch, train, generate, eval, synth.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "c2f/evalkit.hpp"
#include "c2f/pipeline.hpp"
#include "c2f/synthetic.hpp"

namespace fs = std::filesystem;
using namespace c2f;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  bool desk = false;

  void Attach(CLI::App* app) {
    app->add_option("--config", file, "key = value config file");
    app->add_option("--set", overrides, "override one key, e.g. review.boost_scale=2");
    app->add_flag("--desk", desk, "start from the small desk-scale preset");
  }

  RunConfig Load() const {
    RunConfig c = desk ? RunConfig::Desk() : RunConfig{};
    if (!file.empty()) c.Apply(ReadFile(file));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) ThrowUsage("--set expects key=value, got '" + kv + "'");
      c.Set(Trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    c.ApplyEnvironment();
    c.Validate();
    return c;
  }
};

struct SketchDir {
  SketchTables tables;
  std::vector<TrainingTriple> train, valid, test;
};

SketchDir LoadSketchDir(const std::string& dir) {
  const fs::path p(dir);
  SketchDir s;
  s.tables.ngrams = NgramTable::Parse(ReadFile((p / "ngrams.tsv").string()));
  s.tables.keep = KeepSets::Parse(ReadFile((p / "keep.tsv").string()));
  s.tables.vocab = SketchVocab::Parse(ReadFile((p / "sketch_vocab.tsv").string()));
  s.train = ParseTriples(ReadFile((p / "train.jsonl").string()));
  s.valid = ParseTriples(ReadFile((p / "valid.jsonl").string()));
  s.test = ParseTriples(ReadFile((p / "test.jsonl").string()));
  return s;
}

const std::vector<TrainingTriple>& PickSplit(const SketchDir& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "valid") return s.valid;
  if (name == "test") return s.test;
  ThrowUsage("unknown split '" + name + "' (train, valid or test)");
}

int RunPrepare(const std::string& input, const std::string& out, const IngestSchema& schema,
               const RunConfig& config) {
  IngestSchema s = schema;
  s.max_rating = config.corpus.max_rating;
  auto ingested = Ingest(input, s);
  for (const auto& issue : ingested.issues) {
    std::cerr << "line " << issue.line << ": " << issue.message << '\n';
  }
  PreprocessStats stats;
  Corpus corpus = Preprocess(ingested.reviews, config.corpus, &stats);
  CorpusSplit split = Split(corpus.reviews, config.split, config.seed);
  fs::create_directories(out);
  SaveBundle(out, corpus, split);
  std::cout << "reviews in " << stats.input << ", kept " << corpus.reviews.size()
            << " (too long " << stats.dropped_length << ", sparse user/item "
            << stats.dropped_sparse << "); vocabulary " << corpus.vocab.size() << "; split "
            << split.train.size() << "/" << split.valid.size() << "/" << split.test.size() << '\n';
  return 0;
}

int RunLda(const std::string& bundle_dir, const std::string& out, const std::string& report,
           const RunConfig& config) {
  const Bundle bundle = LoadBundle(bundle_dir);
  LdaConfig lda = config.lda;
  lda.seed = config.lda.seed;
  const AspectModel model = FitGibbs(bundle.split.train, bundle.corpus.vocab.size(), lda);
  WriteFile(out, model.Serialize());
  const std::string text = TopWordsReport(model, bundle.corpus.vocab, 20);
  if (!report.empty()) WriteFile(report, text);
  std::cout << text;
  if (!bundle.split.valid.empty()) {
    std::cout << "validation perplexity " << HeldoutPerplexity(model, bundle.split.valid) << '\n';
  }
  return 0;
}

int RunSketch(const std::string& bundle_dir, const std::string& aspects_path,
              const std::string& stop_path, const std::string& out, const RunConfig& config) {
  const Bundle bundle = LoadBundle(bundle_dir);
  const AspectModel model = AspectModel::Parse(ReadFile(aspects_path));
  std::vector<std::vector<std::string>> stops;
  if (!stop_path.empty()) stops = ParseStopLists(ReadFile(stop_path), model.num_aspects);
  const SketchTables tables = BuildSketchTables(bundle.corpus, bundle.split.train, model,
                                                config.top_ngrams, config.aspect_keep,
                                                config.global_keep, stops);
  const RuleTagger tagger;
  const fs::path p(out);
  fs::create_directories(p);
  WriteFile((p / "ngrams.tsv").string(), tables.ngrams.Serialize());
  WriteFile((p / "keep.tsv").string(), tables.keep.Serialize());
  WriteFile((p / "sketch_vocab.tsv").string(), tables.vocab.Serialize());
  const auto& vocab = bundle.corpus.vocab;
  WriteFile((p / "train.jsonl").string(),
            SerializeTriples(BuildTriples(bundle.split.train, vocab, model, tables, tagger)));
  WriteFile((p / "valid.jsonl").string(),
            SerializeTriples(BuildTriples(bundle.split.valid, vocab, model, tables, tagger)));
  WriteFile((p / "test.jsonl").string(),
            SerializeTriples(BuildTriples(bundle.split.test, vocab, model, tables, tagger)));
  std::cout << tables.ngrams.size() << " n-grams, sketch vocabulary " << tables.vocab.size()
            << '\n';
  return 0;
}

int RunTrain(const std::string& bundle_dir, const std::string& sketch_dir,
             const std::string& aspects_path, const std::string& out, const std::string& resume,
             const RunConfig& config) {
  const Bundle bundle = LoadBundle(bundle_dir);
  const AspectModel lda = AspectModel::Parse(ReadFile(aspects_path));
  const SketchDir sketches = LoadSketchDir(sketch_dir);
  const auto train = AdaptTriples(config, sketches.train);
  ReviewModel model = resume.empty()
                          ? MakeModel(config, bundle.corpus, lda, sketches.tables.vocab, train)
                          : ReviewModel::Load(resume);
  Trainer trainer(model, config);
  if (!resume.empty()) trainer.Restore(ReadFile(resume));
  trainer.set_listener([](const EpochRecord& r) {
    std::cout << PhaseName(r.phase) << " epoch " << r.epoch << " lr " << r.learning_rate
              << " loss " << r.mean_loss << " steps " << r.steps << std::endl;
  });
  try {
    trainer.Run(train);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kDivergence) WriteFile(out, trainer.Checkpoint());
    throw;
  }
  WriteFile(out, trainer.Checkpoint());
  return 0;
}

int RunGenerate(const std::string& bundle_dir, const std::string& sketch_dir,
                const std::string& checkpoint, const std::string& contexts,
                const std::string& user, const std::string& item, int rating,
                const std::string& out, const RunConfig& config) {
  const Bundle bundle = LoadBundle(bundle_dir);
  const SketchDir sketches = LoadSketchDir(sketch_dir);
  const ReviewModel model = ReviewModel::Load(checkpoint);
  const auto options = GenerateOptions::From(config);

  std::vector<RawReview> wanted;
  if (!contexts.empty()) {
    IngestSchema schema;
    schema.max_rating = bundle.corpus.num_ratings;
    // Context files carry no text; give every line a placeholder before parsing.
    std::string patched;
    for (const auto& line : SplitOn(ReadFile(contexts), '\n')) {
      if (Trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) ThrowData("contexts: malformed line '" + line + "'");
      if (!j.contains("text")) j["text"] = "-";
      patched += j.dump() + "\n";
    }
    auto parsed = IngestText(patched, schema);
    for (const auto& issue : parsed.issues) {
      std::cerr << "contexts line " << issue.line << ": " << issue.message << '\n';
    }
    wanted = std::move(parsed.reviews);
  } else {
    if (user.empty() || item.empty() || rating < 1) {
      ThrowUsage("generate needs --contexts or --user, --item and --rating");
    }
    wanted.push_back({user, item, rating, ""});
  }

  std::string lines;
  for (const auto& ctx : wanted) {
    if (ctx.rating < 1 || ctx.rating > bundle.corpus.num_ratings) {
      ThrowUsage("rating " + std::to_string(ctx.rating) + " outside 1.." +
                 std::to_string(bundle.corpus.num_ratings));
    }
    const auto result = GenerateReview(model, sketches.tables.vocab, bundle.corpus.vocab,
                                       bundle.corpus.users.Find(ctx.user_id),
                                       bundle.corpus.items.Find(ctx.item_id), ctx.rating - 1,
                                       options);
    lines += GenerationToJson(result, sketches.tables.vocab, bundle.corpus.vocab, ctx.user_id,
                              ctx.item_id, ctx.rating);
    lines += '\n';
  }
  if (out.empty()) {
    std::cout << lines;
  } else {
    WriteFile(out, lines);
  }
  return 0;
}

int RunEval(const std::string& bundle_dir, const std::string& sketch_dir,
            const std::string& checkpoint, const std::string& split, const std::string& out,
            const RunConfig& config) {
  const Bundle bundle = LoadBundle(bundle_dir);
  const SketchDir sketches = LoadSketchDir(sketch_dir);
  const ReviewModel model = ReviewModel::Load(checkpoint);
  RunConfig effective = config;
  effective.no_aspect = model.options().no_aspect;
  const auto triples = AdaptTriples(effective, PickSplit(sketches, split));
  const auto result = Evaluate(model, sketches.tables.vocab, bundle.corpus.vocab,
                               sketches.tables.keep, triples, GenerateOptions::From(config));
  std::cout << result.report.ToText();
  if (!out.empty()) WriteFile(out, result.report.ToJsonLines());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged review generation from aspect plans down to words"};
  app.require_subcommand(1);

  ConfigArgs cfg;
  std::string input, out, bundle, aspects, sketch, checkpoint, report, stop, resume, contexts,
      user, item, split = "test";
  int rating = 0;
  IngestSchema schema;
  DeskCorpusOptions synth;

  auto* prepare = app.add_subcommand("prepare", "ingest JSONL reviews into a corpus bundle");
  prepare->add_option("--input", input, "line-delimited JSON reviews")->required();
  prepare->add_option("--out", out, "bundle directory")->required();
  prepare->add_option("--user-field", schema.user_field);
  prepare->add_option("--item-field", schema.item_field);
  prepare->add_option("--rating-field", schema.rating_field);
  prepare->add_option("--text-field", schema.text_field);
  cfg.Attach(prepare);

  auto* lda = app.add_subcommand("lda", "fit the aspect model and print top words");
  lda->add_option("--bundle", bundle)->required();
  lda->add_option("--out", out, "aspect model file")->required();
  lda->add_option("--report", report, "top-words report file");
  cfg.Attach(lda);

  auto* sk = app.add_subcommand("sketch", "mine n-grams, build keep sets and training triples");
  sk->add_option("--bundle", bundle)->required();
  sk->add_option("--aspects", aspects, "aspect model file")->required();
  sk->add_option("--stop-lists", stop, "aspect<TAB>word lines to drop from keep sets");
  sk->add_option("--out", out, "sketch directory")->required();
  cfg.Attach(sk);

  auto* train = app.add_subcommand("train", "staged training then joint fine-tuning");
  train->add_option("--bundle", bundle)->required();
  train->add_option("--sketch", sketch, "sketch directory")->required();
  train->add_option("--aspects", aspects, "aspect model file")->required();
  train->add_option("--out", out, "checkpoint file")->required();
  train->add_option("--resume", resume, "continue from a checkpoint");
  cfg.Attach(train);

  auto* gen = app.add_subcommand("generate", "generate reviews for contexts");
  gen->add_option("--bundle", bundle)->required();
  gen->add_option("--sketch", sketch)->required();
  gen->add_option("--checkpoint", checkpoint)->required();
  gen->add_option("--contexts", contexts, "JSONL with user_id, item_id, rating");
  gen->add_option("--user", user);
  gen->add_option("--item", item);
  gen->add_option("--rating", rating);
  gen->add_option("--out", out, "output JSONL (stdout when omitted)");
  cfg.Attach(gen);

  auto* eval = app.add_subcommand("eval", "perplexity, BLEU, ROUGE and aspect coverage");
  eval->add_option("--bundle", bundle)->required();
  eval->add_option("--sketch", sketch)->required();
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--split", split, "train, valid or test");
  eval->add_option("--out", out, "machine-readable report (JSONL)");
  cfg.Attach(eval);

  auto* syn = app.add_subcommand("synth", "write the small templated demo corpus");
  syn->add_option("--out", out)->required();
  syn->add_option("--users", synth.users);
  syn->add_option("--items", synth.items);
  syn->add_option("--seed", synth.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) return RunPrepare(input, out, schema, cfg.Load());
    if (lda->parsed()) return RunLda(bundle, out, report, cfg.Load());
    if (sk->parsed()) return RunSketch(bundle, aspects, stop, out, cfg.Load());
    if (train->parsed()) return RunTrain(bundle, sketch, aspects, out, resume, cfg.Load());
    if (gen->parsed()) {
      return RunGenerate(bundle, sketch, checkpoint, contexts, user, item, rating, out, cfg.Load());
    }
    if (eval->parsed()) return RunEval(bundle, sketch, checkpoint, split, out, cfg.Load());
    if (syn->parsed()) {
      WriteFile(out, ToJsonl(MakeDeskCorpus(synth).reviews));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

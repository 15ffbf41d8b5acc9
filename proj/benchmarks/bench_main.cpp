#include <benchmark/benchmark.h>

#include "c2f/evalkit.hpp"
#include "c2f/model.hpp"
#include "c2f/synthetic.hpp"

namespace c2f {
namespace {

void BM_GibbsSweep(benchmark::State& state) {
  PlantedOptions o;
  o.reviews = static_cast<int>(state.range(0));
  const PlantedCorpus planted = SamplePlanted(o);
  LdaConfig config;
  config.num_aspects = 3;
  GibbsSampler sampler(planted.reviews, planted.vocab_size, config);
  for (auto _ : state) sampler.Sweep();
  state.SetItemsProcessed(state.iterations() * o.reviews);
}
BENCHMARK(BM_GibbsSweep)->Arg(100)->Arg(500);

ModelOptions BenchOptions(int dim) {
  ModelOptions o;
  ModelDims& d = o.dims;
  d.num_users = 50;
  d.num_items = 50;
  d.num_aspects = 5;
  d.sketch_vocab = 300;
  d.word_vocab = 2000;
  for (int* v : {&d.embed_dim, &d.context_dim, &d.aspect_dim, &d.aspect_hidden, &d.sketch_dim,
                 &d.sketch_hidden, &d.word_dim, &d.word_hidden}) {
    *v = dim;
  }
  return o;
}

void BM_SentenceLossForwardBackward(benchmark::State& state) {
  ReviewModel model(BenchOptions(static_cast<int>(state.range(0))));
  Rng rng(1);
  model.Initialize(rng, 0.08);
  const std::vector<int> symbols{2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<int> alignment{0, 1, 2, 3, 4, 5, 6, 7, 7, 7};
  const std::vector<int> words{10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  for (auto _ : state) {
    model.store().ZeroGrad();
    nn::Tape tape;
    const auto ctx = model.encoder().Encode(tape, 1, 2, 3);
    const auto loss = model.words().SentenceLoss(tape, ctx, 1, symbols, alignment, words,
                                                 nn::RunMode::Eval(), nullptr);
    tape.Backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
}
BENCHMARK(BM_SentenceLossForwardBackward)->Arg(32)->Arg(128);

void BM_CorpusBleu4(benchmark::State& state) {
  Rng rng(3);
  std::vector<Tokens> cands, refs;
  for (int i = 0; i < 1000; ++i) {
    Tokens c, r;
    for (int k = 0; k < 20; ++k) {
      c.push_back("w" + std::to_string(rng.Below(50)));
      r.push_back("w" + std::to_string(rng.Below(50)));
    }
    cands.push_back(std::move(c));
    refs.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(CorpusBleu(cands, refs, 4));
}
BENCHMARK(BM_CorpusBleu4);

}  // namespace
}  // namespace c2f

BENCHMARK_MAIN();

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "c2f/aspect_lda.hpp"
#include "c2f/corpus.hpp"
#include "c2f/dims.hpp"

namespace c2f {

/// Optimizer schedule for one training phase.
struct StageConfig {
  double learning_rate = 2e-4;
  int batch_size = 64;
  int epochs = 10;
  double decay_factor = 1.0;  // multiplied in every `decay_epochs` epochs
  int decay_epochs = 2;

  double RateAt(int epoch) const;
};

struct RunConfig {
  std::uint64_t seed = 1;

  PreprocessConfig corpus;
  SplitRatios split;
  LdaConfig lda;

  int top_ngrams = 200;
  int aspect_keep = 50;
  int global_keep = 50;

  // Sizes; table sizes are filled in from the data.
  ModelDims dims;

  StageConfig aspect{2e-5, 1024, 10, 1.0, 2};
  StageConfig sketch{2e-4, 64, 10, 0.8, 2};
  StageConfig review{2e-4, 64, 10, 0.8, 2};
  StageConfig joint{2e-4, 64, 2, 0.8, 2};

  double dropout = 0.2;
  double clip_norm = 5.0;
  double init_scale = 0.08;
  bool freeze_shared = true;  // sketch/review stages leave encoder and aspect embeddings alone

  bool chain_sketches = true;
  bool chain_words = false;
  double boost_scale = 1.0;
  double logit_scale = 1.0;

  int beam = 4;
  int max_aspects = 5;
  int max_sketch_len = 50;
  int max_words = 50;
  bool length_normalize = false;

  bool no_aspect = false;
  bool no_sketch = false;

  /// Small dims and batches for laptop-scale runs.
  static RunConfig Desk();

  /// Throws a usage error for inconsistent values.
  void Validate() const;

  /// "[section]" headers followed by "key = value" lines; "#" starts a
  /// comment. Keys may also be written fully qualified ("review.boost_scale").
  void Apply(std::string_view text);
  void Set(std::string_view key, std::string_view value);
  /// SEED in the environment overrides every seed.
  void ApplyEnvironment();

  std::string Serialize() const;
  static RunConfig Parse(std::string_view text, const RunConfig& base);
  static RunConfig Parse(std::string_view text);
};

}  // namespace c2f

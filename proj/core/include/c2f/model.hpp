#pragma once

#include <memory>
#include <string>

#include "c2f/aspect_decoder.hpp"
#include "c2f/checkpoint.hpp"
#include "c2f/optim.hpp"
#include "c2f/review_decoder.hpp"
#include "c2f/sketch_decoder.hpp"

namespace c2f {

struct ModelOptions {
  ModelDims dims;
  ReviewDecoderOptions review;
  bool chain_sketches = true;
  bool chain_words = false;
  bool no_aspect = false;  // every label is aspect 0 and the boost row is the mean θ row
  int fixed_sentences = 1;  // sentence count generated when the aspect decoder is off
};

/// The three decoders and the shared context encoder over one parameter
/// store. The store is heap-allocated so the model can move freely.
class ReviewModel {
 public:
  explicit ReviewModel(const ModelOptions& options);

  const ModelOptions& options() const { return options_; }
  nn::ParameterStore& store() { return *store_; }
  const nn::ParameterStore& store() const { return *store_; }

  const ContextEncoder& encoder() const { return encoder_; }
  const AspectDecoder& aspects() const { return aspects_; }
  const SketchDecoder& sketches() const { return sketches_; }
  const ReviewDecoder& words() const { return words_; }
  ReviewDecoder& words() { return words_; }

  /// Uniform init for matrices, zero biases; the boost table is left untouched.
  void Initialize(Rng& rng, double scale);
  void SetBoost(const nn::Matrix& theta) { words_.SetBoost(theta); }

  /// Every trainable parameter (the boost table is excluded).
  std::vector<nn::Parameter*> Trainable();
  /// Trainable parameters whose names start with any of `prefixes`.
  std::vector<nn::Parameter*> Trainable(std::initializer_list<std::string_view> prefixes);

  nn::Metadata Describe() const;
  static ModelOptions OptionsFrom(const nn::Metadata& meta);

  std::string Encode(const nn::Adam* optimizer, nn::Metadata extra = {}) const;
  void Save(const std::string& path, const nn::Adam* optimizer, nn::Metadata extra = {}) const;
  /// Rebuilds the model from the checkpoint's metadata, then fills it.
  static ReviewModel Decode(std::string_view bytes, nn::Adam* optimizer = nullptr,
                            nn::Metadata* meta = nullptr);
  static ReviewModel Load(const std::string& path, nn::Adam* optimizer = nullptr,
                          nn::Metadata* meta = nullptr);

 private:
  ModelOptions options_;
  std::unique_ptr<nn::ParameterStore> store_;
  ContextEncoder encoder_;
  AspectDecoder aspects_;
  SketchDecoder sketches_;
  ReviewDecoder words_;
};

}  // namespace c2f

#pragma once

namespace c2f {

/// Sizes of every embedding table and hidden layer in the three-stage model.
/// Context dim, aspect hidden dim and sketch hidden dim must agree because
/// the encoded context seeds both recurrent states; likewise aspect and
/// sketch embeddings must agree for their element-wise product.
struct ModelDims {
  int num_users = 1;    // an extra UNK row is always added
  int num_items = 1;    // likewise
  int num_ratings = 5;
  int num_aspects = 1;
  int sketch_vocab = 2;
  int word_vocab = 5;

  int embed_dim = 512;       // user/item/rating embeddings
  int context_dim = 512;     // encoded context
  int aspect_dim = 512;      // aspect embeddings
  int aspect_hidden = 512;
  int sketch_dim = 512;      // sketch-symbol embeddings
  int sketch_hidden = 512;
  int word_dim = 512;        // word embeddings
  int word_hidden = 512;
  int layers = 2;

  /// Throws a usage error naming the first violated tie.
  void Validate() const;
};

}  // namespace c2f

#include "c2f/model.hpp"

#include <charconv>

namespace c2f {

namespace {

constexpr std::string_view kBoostName = "rev.boost";

int MetaInt(const nn::Metadata& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) ThrowData("checkpoint metadata lacks '" + key + "'");
  int value = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ThrowData("checkpoint metadata '" + key + "' is not an integer: " + s);
  }
  return value;
}

double MetaDouble(const nn::Metadata& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) ThrowData("checkpoint metadata lacks '" + key + "'");
  double value = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ThrowData("checkpoint metadata '" + key + "' is not a number: " + s);
  }
  return value;
}

std::string ExactDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ReviewModel::ReviewModel(const ModelOptions& options)
    : options_(options), store_(std::make_unique<nn::ParameterStore>()) {
  options_.dims.Validate();
  encoder_ = ContextEncoder(*store_, options_.dims);
  aspects_ = AspectDecoder(*store_, options_.dims);
  sketches_ = SketchDecoder(*store_, options_.dims, aspects_.aspect_embedding());
  words_ = ReviewDecoder(*store_, options_.dims, options_.review);
}

void ReviewModel::Initialize(Rng& rng, double scale) {
  const nn::Matrix boost = words_.boost();
  store_->InitUniform(rng, scale);
  words_.SetBoost(boost);
}

std::vector<nn::Parameter*> ReviewModel::Trainable() {
  std::vector<nn::Parameter*> out;
  for (const auto& p : store_->all()) {
    if (p->name != kBoostName) out.push_back(p.get());
  }
  return out;
}

std::vector<nn::Parameter*> ReviewModel::Trainable(
    std::initializer_list<std::string_view> prefixes) {
  std::vector<nn::Parameter*> out;
  for (auto* p : Trainable()) {
    for (auto prefix : prefixes) {
      if (p->name.starts_with(prefix)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

nn::Metadata ReviewModel::Describe() const {
  const auto& d = options_.dims;
  nn::Metadata m;
  m["dims.num_users"] = std::to_string(d.num_users);
  m["dims.num_items"] = std::to_string(d.num_items);
  m["dims.num_ratings"] = std::to_string(d.num_ratings);
  m["dims.num_aspects"] = std::to_string(d.num_aspects);
  m["dims.sketch_vocab"] = std::to_string(d.sketch_vocab);
  m["dims.word_vocab"] = std::to_string(d.word_vocab);
  m["dims.embed_dim"] = std::to_string(d.embed_dim);
  m["dims.context_dim"] = std::to_string(d.context_dim);
  m["dims.aspect_dim"] = std::to_string(d.aspect_dim);
  m["dims.aspect_hidden"] = std::to_string(d.aspect_hidden);
  m["dims.sketch_dim"] = std::to_string(d.sketch_dim);
  m["dims.sketch_hidden"] = std::to_string(d.sketch_hidden);
  m["dims.word_dim"] = std::to_string(d.word_dim);
  m["dims.word_hidden"] = std::to_string(d.word_hidden);
  m["dims.layers"] = std::to_string(d.layers);
  m["review.boost_scale"] = ExactDouble(options_.review.boost_scale);
  m["review.logit_scale"] = ExactDouble(options_.review.logit_scale);
  m["review.use_sketch"] = options_.review.use_sketch ? "1" : "0";
  m["chain_sketches"] = options_.chain_sketches ? "1" : "0";
  m["chain_words"] = options_.chain_words ? "1" : "0";
  m["no_aspect"] = options_.no_aspect ? "1" : "0";
  m["fixed_sentences"] = std::to_string(options_.fixed_sentences);
  return m;
}

ModelOptions ReviewModel::OptionsFrom(const nn::Metadata& meta) {
  ModelOptions o;
  auto& d = o.dims;
  d.num_users = MetaInt(meta, "dims.num_users");
  d.num_items = MetaInt(meta, "dims.num_items");
  d.num_ratings = MetaInt(meta, "dims.num_ratings");
  d.num_aspects = MetaInt(meta, "dims.num_aspects");
  d.sketch_vocab = MetaInt(meta, "dims.sketch_vocab");
  d.word_vocab = MetaInt(meta, "dims.word_vocab");
  d.embed_dim = MetaInt(meta, "dims.embed_dim");
  d.context_dim = MetaInt(meta, "dims.context_dim");
  d.aspect_dim = MetaInt(meta, "dims.aspect_dim");
  d.aspect_hidden = MetaInt(meta, "dims.aspect_hidden");
  d.sketch_dim = MetaInt(meta, "dims.sketch_dim");
  d.sketch_hidden = MetaInt(meta, "dims.sketch_hidden");
  d.word_dim = MetaInt(meta, "dims.word_dim");
  d.word_hidden = MetaInt(meta, "dims.word_hidden");
  d.layers = MetaInt(meta, "dims.layers");
  o.review.boost_scale = MetaDouble(meta, "review.boost_scale");
  o.review.logit_scale = MetaDouble(meta, "review.logit_scale");
  o.review.use_sketch = MetaInt(meta, "review.use_sketch") != 0;
  o.chain_sketches = MetaInt(meta, "chain_sketches") != 0;
  o.chain_words = MetaInt(meta, "chain_words") != 0;
  o.no_aspect = MetaInt(meta, "no_aspect") != 0;
  o.fixed_sentences = MetaInt(meta, "fixed_sentences");
  return o;
}

std::string ReviewModel::Encode(const nn::Adam* optimizer, nn::Metadata extra) const {
  for (auto& [k, v] : Describe()) extra[k] = v;
  return nn::EncodeCheckpoint(*store_, optimizer, extra);
}

void ReviewModel::Save(const std::string& path, const nn::Adam* optimizer,
                       nn::Metadata extra) const {
  WriteFile(path, Encode(optimizer, std::move(extra)));
}

ReviewModel ReviewModel::Decode(std::string_view bytes, nn::Adam* optimizer, nn::Metadata* meta) {
  ReviewModel model(OptionsFrom(nn::PeekCheckpointMetadata(bytes)));
  nn::DecodeCheckpoint(bytes, *model.store_, optimizer, meta);
  return model;
}

ReviewModel ReviewModel::Load(const std::string& path, nn::Adam* optimizer, nn::Metadata* meta) {
  return Decode(ReadFile(path), optimizer, meta);
}

}  // namespace c2f

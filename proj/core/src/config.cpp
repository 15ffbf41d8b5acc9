#include "c2f/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <vector>

namespace c2f {

double StageConfig::RateAt(int epoch) const {
  if (decay_epochs <= 0 || decay_factor == 1.0) return learning_rate;
  double rate = learning_rate;
  for (int k = 0; k < epoch / decay_epochs; ++k) rate *= decay_factor;
  return rate;
}

namespace {

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    ThrowUsage("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool ParseBool(std::string_view key, std::string_view text) {
  const std::string v = ToLowerAscii(text);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  ThrowUsage("config key '" + std::string(key) + "': expected a boolean, got '" +
             std::string(text) + "'");
}

template <typename T>
std::string Format(T value) {
  if constexpr (std::is_same_v<T, bool>) {
    return value ? "true" : "false";
  } else {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
  }
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field Bind(std::string key, Access access) {
  Field f;
  f.key = key;
  f.set = [key, access](RunConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, bool>) {
      access(c) = ParseBool(key, v);
    } else {
      access(c) = ParseNumber<T>(key, v);
    }
  };
  f.get = [access](const RunConfig& c) { return Format<T>(access(const_cast<RunConfig&>(c))); };
  return f;
}

void AddStage(std::vector<Field>& fields, const std::string& section,
              StageConfig& (*stage)(RunConfig&)) {
  fields.push_back(Bind<double>(section + ".learning_rate",
                                [stage](RunConfig& c) -> double& { return stage(c).learning_rate; }));
  fields.push_back(Bind<int>(section + ".batch_size",
                             [stage](RunConfig& c) -> int& { return stage(c).batch_size; }));
  fields.push_back(
      Bind<int>(section + ".epochs", [stage](RunConfig& c) -> int& { return stage(c).epochs; }));
  fields.push_back(Bind<double>(section + ".decay_factor",
                                [stage](RunConfig& c) -> double& { return stage(c).decay_factor; }));
  fields.push_back(Bind<int>(section + ".decay_epochs",
                             [stage](RunConfig& c) -> int& { return stage(c).decay_epochs; }));
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(Bind<std::uint64_t>("run.seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    f.push_back(Bind<int>("corpus.max_review_tokens",
                          [](RunConfig& c) -> int& { return c.corpus.max_review_tokens; }));
    f.push_back(Bind<std::int64_t>("corpus.min_word_count",
                                   [](RunConfig& c) -> std::int64_t& { return c.corpus.min_word_count; }));
    f.push_back(Bind<int>("corpus.min_user_count",
                          [](RunConfig& c) -> int& { return c.corpus.min_user_count; }));
    f.push_back(Bind<int>("corpus.min_item_count",
                          [](RunConfig& c) -> int& { return c.corpus.min_item_count; }));
    f.push_back(Bind<int>("corpus.max_rating", [](RunConfig& c) -> int& { return c.corpus.max_rating; }));
    f.push_back(Bind<double>("corpus.train_ratio", [](RunConfig& c) -> double& { return c.split.train; }));
    f.push_back(Bind<double>("corpus.valid_ratio", [](RunConfig& c) -> double& { return c.split.valid; }));
    f.push_back(Bind<double>("corpus.test_ratio", [](RunConfig& c) -> double& { return c.split.test; }));

    f.push_back(Bind<int>("lda.num_aspects", [](RunConfig& c) -> int& { return c.lda.num_aspects; }));
    f.push_back(Bind<int>("lda.iterations", [](RunConfig& c) -> int& { return c.lda.iterations; }));
    f.push_back(Bind<int>("lda.burn_in", [](RunConfig& c) -> int& { return c.lda.burn_in; }));
    f.push_back(Bind<int>("lda.thinning", [](RunConfig& c) -> int& { return c.lda.thinning; }));
    f.push_back(Bind<std::uint64_t>("lda.seed", [](RunConfig& c) -> std::uint64_t& { return c.lda.seed; }));
    f.push_back(Bind<double>("lda.alpha", [](RunConfig& c) -> double& { return c.lda.alpha; }));
    f.push_back(Bind<double>("lda.beta", [](RunConfig& c) -> double& { return c.lda.beta; }));
    f.push_back(Bind<double>("lda.gamma", [](RunConfig& c) -> double& { return c.lda.gamma; }));

    f.push_back(Bind<int>("sketcher.top_ngrams", [](RunConfig& c) -> int& { return c.top_ngrams; }));
    f.push_back(Bind<int>("sketcher.aspect_keep", [](RunConfig& c) -> int& { return c.aspect_keep; }));
    f.push_back(Bind<int>("sketcher.global_keep", [](RunConfig& c) -> int& { return c.global_keep; }));

    f.push_back(Bind<int>("model.embed_dim", [](RunConfig& c) -> int& { return c.dims.embed_dim; }));
    f.push_back(Bind<int>("model.context_dim", [](RunConfig& c) -> int& { return c.dims.context_dim; }));
    f.push_back(Bind<int>("model.layers", [](RunConfig& c) -> int& { return c.dims.layers; }));
    f.push_back(Bind<double>("model.dropout", [](RunConfig& c) -> double& { return c.dropout; }));
    f.push_back(Bind<double>("model.clip_norm", [](RunConfig& c) -> double& { return c.clip_norm; }));
    f.push_back(Bind<double>("model.init_scale", [](RunConfig& c) -> double& { return c.init_scale; }));

    f.push_back(Bind<int>("aspect.aspect_dim", [](RunConfig& c) -> int& { return c.dims.aspect_dim; }));
    f.push_back(Bind<int>("aspect.hidden_dim", [](RunConfig& c) -> int& { return c.dims.aspect_hidden; }));
    AddStage(f, "aspect", [](RunConfig& c) -> StageConfig& { return c.aspect; });

    f.push_back(Bind<int>("sketch.sketch_dim", [](RunConfig& c) -> int& { return c.dims.sketch_dim; }));
    f.push_back(Bind<int>("sketch.hidden_dim", [](RunConfig& c) -> int& { return c.dims.sketch_hidden; }));
    f.push_back(Bind<bool>("sketch.chain", [](RunConfig& c) -> bool& { return c.chain_sketches; }));
    AddStage(f, "sketch", [](RunConfig& c) -> StageConfig& { return c.sketch; });

    f.push_back(Bind<int>("review.word_dim", [](RunConfig& c) -> int& { return c.dims.word_dim; }));
    f.push_back(Bind<int>("review.hidden_dim", [](RunConfig& c) -> int& { return c.dims.word_hidden; }));
    f.push_back(Bind<bool>("review.chain", [](RunConfig& c) -> bool& { return c.chain_words; }));
    f.push_back(Bind<double>("review.boost_scale", [](RunConfig& c) -> double& { return c.boost_scale; }));
    f.push_back(Bind<double>("review.logit_scale", [](RunConfig& c) -> double& { return c.logit_scale; }));
    AddStage(f, "review", [](RunConfig& c) -> StageConfig& { return c.review; });

    AddStage(f, "joint", [](RunConfig& c) -> StageConfig& { return c.joint; });
    f.push_back(Bind<bool>("joint.freeze_shared", [](RunConfig& c) -> bool& { return c.freeze_shared; }));

    f.push_back(Bind<int>("generate.beam", [](RunConfig& c) -> int& { return c.beam; }));
    f.push_back(Bind<int>("generate.max_aspects", [](RunConfig& c) -> int& { return c.max_aspects; }));
    f.push_back(Bind<int>("generate.max_sketch_len", [](RunConfig& c) -> int& { return c.max_sketch_len; }));
    f.push_back(Bind<int>("generate.max_words", [](RunConfig& c) -> int& { return c.max_words; }));
    f.push_back(Bind<bool>("generate.length_normalize",
                           [](RunConfig& c) -> bool& { return c.length_normalize; }));

    f.push_back(Bind<bool>("ablation.no_aspect", [](RunConfig& c) -> bool& { return c.no_aspect; }));
    f.push_back(Bind<bool>("ablation.no_sketch", [](RunConfig& c) -> bool& { return c.no_sketch; }));
    return f;
  }();
  return fields;
}

}  // namespace

RunConfig RunConfig::Desk() {
  RunConfig c;
  for (int* d : {&c.dims.embed_dim, &c.dims.context_dim, &c.dims.aspect_dim, &c.dims.aspect_hidden,
                 &c.dims.sketch_dim, &c.dims.sketch_hidden, &c.dims.word_dim, &c.dims.word_hidden}) {
    *d /= 16;
  }
  c.aspect.batch_size /= 8;
  c.sketch.batch_size /= 8;
  c.review.batch_size /= 8;
  c.joint.batch_size /= 8;
  // Full-scale rates barely move a model this small in a few hundred steps.
  c.aspect.learning_rate = 5e-3;
  c.sketch.learning_rate = 5e-3;
  c.review.learning_rate = 5e-3;
  c.joint.learning_rate = 1e-3;
  c.lda.iterations = 300;
  c.lda.burn_in = 100;
  return c;
}

void RunConfig::Validate() const {
  if (dims.aspect_dim != dims.sketch_dim) ThrowUsage("config: aspect_dim must equal sketch_dim");
  if (dims.context_dim != dims.aspect_hidden || dims.context_dim != dims.sketch_hidden ||
      dims.context_dim != dims.word_hidden) {
    ThrowUsage("config: context_dim must equal every decoder hidden_dim");
  }
  if (beam < 1) ThrowUsage("config: beam must be at least 1");
  if (max_aspects < 1 || max_sketch_len < 1 || max_words < 1) {
    ThrowUsage("config: maximum lengths must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) ThrowUsage("config: dropout must lie in [0, 1)");
  if (boost_scale < 0.0) ThrowUsage("config: boost_scale must be non-negative");
  if (logit_scale <= 0.0) ThrowUsage("config: logit_scale must be positive");
  for (const StageConfig* s : {&aspect, &sketch, &review, &joint}) {
    if (s->batch_size < 1) ThrowUsage("config: batch sizes must be positive");
    if (s->epochs < 0) ThrowUsage("config: epochs must be non-negative");
    if (s->learning_rate <= 0.0) ThrowUsage("config: learning rates must be positive");
  }
}

void RunConfig::Set(std::string_view key, std::string_view value) {
  for (const auto& f : Fields()) {
    if (f.key == key) {
      f.set(*this, Trim(value));
      return;
    }
  }
  ThrowUsage("unknown config key '" + std::string(key) + "'");
}

void RunConfig::Apply(std::string_view text) {
  std::string section;
  int line_no = 0;
  for (const auto& raw : SplitOn(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') ThrowUsage("config line " + std::to_string(line_no) + ": bad section");
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      ThrowUsage("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(Trim(line.substr(0, eq)));
    if (key.find('.') == std::string::npos) {
      if (section.empty()) ThrowUsage("config line " + std::to_string(line_no) + ": key outside a section");
      key = section + "." + key;
    }
    Set(key, line.substr(eq + 1));
  }
}

void RunConfig::ApplyEnvironment() {
  if (const char* env = std::getenv("SEED"); env != nullptr && *env != '\0') {
    seed = ParseNumber<std::uint64_t>("SEED", env);
    lda.seed = seed;
  }
}

std::string RunConfig::Serialize() const {
  std::ostringstream out;
  std::string section;
  for (const auto& f : Fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(*this) << '\n';
  }
  return out.str();
}

RunConfig RunConfig::Parse(std::string_view text, const RunConfig& base) {
  RunConfig c = base;
  c.Apply(text);
  return c;
}

RunConfig RunConfig::Parse(std::string_view text) { return Parse(text, RunConfig{}); }

}  // namespace c2f

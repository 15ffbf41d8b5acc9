#include "c2f/aspect_lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace c2f {

int AspectModel::MostFrequentAspect() const {
  if (aspect_share.empty()) return 0;
  return static_cast<int>(std::max_element(aspect_share.begin(), aspect_share.end()) -
                          aspect_share.begin());
}

std::string AspectModel::Serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "c2f-aspect-model 1\n";
  out << num_aspects << ' ' << vocab_size << ' ' << alpha << ' ' << beta << ' ' << gamma << ' '
      << background_prob << '\n';
  for (std::size_t a = 0; a < aspect_share.size(); ++a) {
    out << (a ? " " : "") << aspect_share[a];
  }
  out << '\n';
  for (int a = 0; a < num_aspects; ++a) {
    auto row = ThetaRow(a);
    for (std::size_t w = 0; w < row.size(); ++w) out << (w ? " " : "") << row[w];
    out << '\n';
  }
  for (std::size_t w = 0; w < background.size(); ++w) out << (w ? " " : "") << background[w];
  out << '\n';
  return out.str();
}

AspectModel AspectModel::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "c2f-aspect-model" || version != 1) ThrowData("not a c2f aspect model (v1)");
  AspectModel m;
  in >> m.num_aspects >> m.vocab_size >> m.alpha >> m.beta >> m.gamma >> m.background_prob;
  if (!in || m.num_aspects < 1 || m.vocab_size < 1) ThrowData("aspect model: bad header");
  m.aspect_share.resize(static_cast<std::size_t>(m.num_aspects));
  for (auto& v : m.aspect_share) in >> v;
  m.theta.resize(static_cast<std::size_t>(m.num_aspects) * static_cast<std::size_t>(m.vocab_size));
  for (auto& v : m.theta) in >> v;
  m.background.resize(static_cast<std::size_t>(m.vocab_size));
  for (auto& v : m.background) in >> v;
  if (!in) ThrowData("aspect model: truncated matrix");
  return m;
}

GibbsSampler::GibbsSampler(const std::vector<Review>& reviews, int vocab_size,
                           const LdaConfig& config)
    : reviews_(&reviews),
      vocab_size_(vocab_size),
      config_(config),
      alpha_(config.EffectiveAlpha()),
      rng_(config.seed) {
  if (config.num_aspects < 1) ThrowUsage("LDA needs at least one aspect");
  if (config.burn_in < 0 || config.iterations <= config.burn_in) {
    ThrowUsage("LDA needs iterations > burn_in >= 0");
  }
  if (config.thinning < 1) ThrowUsage("LDA thinning must be >= 1");
  const auto A = static_cast<std::size_t>(config.num_aspects);
  const auto V = static_cast<std::size_t>(vocab_size);
  doc_aspect_.assign(reviews.size(), std::vector<std::int64_t>(A, 0));
  aspect_word_.assign(A * V, 0);
  aspect_total_.assign(A, 0);
  background_word_.assign(V, 0);

  for (std::size_t d = 0; d < reviews.size(); ++d) {
    for (std::size_t s = 0; s < reviews[d].sentences.size(); ++s) {
      const auto& tokens = reviews[d].sentences[s];
      SentenceAssignment a;
      a.review = d;
      a.sentence = s;
      a.aspect = static_cast<int>(rng_.Below(A));
      a.background.assign(tokens.size(), false);
      ++doc_aspect_[d][static_cast<std::size_t>(a.aspect)];
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const int w = tokens[t];
        if (w < 0 || w >= vocab_size) ThrowData("token id outside vocabulary in LDA input");
        if (!Usable(w)) continue;
        if (rng_.Bernoulli(0.5)) {
          a.background[t] = true;
          ++background_word_[static_cast<std::size_t>(w)];
          ++background_total_;
          ++switch_background_;
        } else {
          ++aspect_word_[static_cast<std::size_t>(a.aspect) * V + static_cast<std::size_t>(w)];
          ++aspect_total_[static_cast<std::size_t>(a.aspect)];
          ++switch_aspect_;
        }
      }
      assignments_.push_back(std::move(a));
    }
  }
  if (assignments_.empty()) ThrowData("LDA corpus has zero sentences");
}

void GibbsSampler::SampleSentence(SentenceAssignment& s, std::size_t doc) {
  const auto& tokens = (*reviews_)[s.review].sentences[s.sentence];
  const auto V = static_cast<std::size_t>(vocab_size_);
  const double vbeta = static_cast<double>(vocab_size_) * config_.beta;

  std::vector<int> topic_words;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (Usable(tokens[t]) && !s.background[t]) topic_words.push_back(tokens[t]);
  }
  std::sort(topic_words.begin(), topic_words.end());

  const auto old = static_cast<std::size_t>(s.aspect);
  --doc_aspect_[doc][old];
  for (int w : topic_words) --aspect_word_[old * V + static_cast<std::size_t>(w)];
  aspect_total_[old] -= static_cast<std::int64_t>(topic_words.size());

  std::vector<double> log_weights(static_cast<std::size_t>(config_.num_aspects));
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    double lw = std::log(static_cast<double>(doc_aspect_[doc][k]) + alpha_);
    int repeat = 0;
    for (std::size_t i = 0; i < topic_words.size(); ++i) {
      repeat = (i > 0 && topic_words[i] == topic_words[i - 1]) ? repeat + 1 : 0;
      lw += std::log(static_cast<double>(aspect_word_[k * V + static_cast<std::size_t>(topic_words[i])]) +
                     config_.beta + repeat);
      lw -= std::log(static_cast<double>(aspect_total_[k]) + vbeta + static_cast<double>(i));
    }
    log_weights[k] = lw;
  }
  const auto chosen = rng_.CategoricalLog(log_weights);
  s.aspect = static_cast<int>(chosen);
  ++doc_aspect_[doc][chosen];
  for (int w : topic_words) ++aspect_word_[chosen * V + static_cast<std::size_t>(w)];
  aspect_total_[chosen] += static_cast<std::int64_t>(topic_words.size());
}

void GibbsSampler::SampleSwitches(SentenceAssignment& s) {
  const auto& tokens = (*reviews_)[s.review].sentences[s.sentence];
  const auto V = static_cast<std::size_t>(vocab_size_);
  const double vbeta = static_cast<double>(vocab_size_) * config_.beta;
  const auto k = static_cast<std::size_t>(s.aspect);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (!Usable(tokens[t])) continue;
    const auto w = static_cast<std::size_t>(tokens[t]);
    if (s.background[t]) {
      --background_word_[w];
      --background_total_;
      --switch_background_;
    } else {
      --aspect_word_[k * V + w];
      --aspect_total_[k];
      --switch_aspect_;
    }
    const double p_bg = (static_cast<double>(switch_background_) + config_.gamma) *
                        (static_cast<double>(background_word_[w]) + config_.beta) /
                        (static_cast<double>(background_total_) + vbeta);
    const double p_topic = (static_cast<double>(switch_aspect_) + config_.gamma) *
                           (static_cast<double>(aspect_word_[k * V + w]) + config_.beta) /
                           (static_cast<double>(aspect_total_[k]) + vbeta);
    const bool to_background = rng_.Uniform() * (p_bg + p_topic) < p_bg;
    s.background[t] = to_background;
    if (to_background) {
      ++background_word_[w];
      ++background_total_;
      ++switch_background_;
    } else {
      ++aspect_word_[k * V + w];
      ++aspect_total_[k];
      ++switch_aspect_;
    }
  }
}

void GibbsSampler::Sweep() {
  for (auto& s : assignments_) {
    SampleSentence(s, s.review);
    SampleSwitches(s);
  }
  ++sweeps_;
}

std::int64_t GibbsSampler::TotalSentenceCount() const {
  std::int64_t n = 0;
  for (const auto& row : doc_aspect_) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::int64_t GibbsSampler::TotalTokenCount() const {
  return std::accumulate(aspect_word_.begin(), aspect_word_.end(), std::int64_t{0}) +
         std::accumulate(background_word_.begin(), background_word_.end(), std::int64_t{0});
}

bool GibbsSampler::CountsConsistent() const {
  const auto A = static_cast<std::size_t>(config_.num_aspects);
  const auto V = static_cast<std::size_t>(vocab_size_);
  std::vector<std::vector<std::int64_t>> doc_aspect(doc_aspect_.size(), std::vector<std::int64_t>(A, 0));
  std::vector<std::int64_t> aspect_word(A * V, 0);
  std::vector<std::int64_t> aspect_total(A, 0);
  std::vector<std::int64_t> background_word(V, 0);
  std::int64_t bg_total = 0;
  for (const auto& s : assignments_) {
    const auto k = static_cast<std::size_t>(s.aspect);
    ++doc_aspect[s.review][k];
    const auto& tokens = (*reviews_)[s.review].sentences[s.sentence];
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (!Usable(tokens[t])) continue;
      if (s.background[t]) {
        ++background_word[static_cast<std::size_t>(tokens[t])];
        ++bg_total;
      } else {
        ++aspect_word[k * V + static_cast<std::size_t>(tokens[t])];
        ++aspect_total[k];
      }
    }
  }
  auto non_negative = [](const std::vector<std::int64_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::int64_t x) { return x >= 0; });
  };
  return doc_aspect == doc_aspect_ && aspect_word == aspect_word_ &&
         aspect_total == aspect_total_ && background_word == background_word_ &&
         bg_total == background_total_ && switch_background_ == background_total_ &&
         switch_aspect_ == std::accumulate(aspect_total_.begin(), aspect_total_.end(), std::int64_t{0}) &&
         non_negative(aspect_word_) && non_negative(background_word_);
}

AspectModel GibbsSampler::Snapshot() const {
  const auto A = static_cast<std::size_t>(config_.num_aspects);
  const auto V = static_cast<std::size_t>(vocab_size_);
  const double vbeta = static_cast<double>(vocab_size_) * config_.beta;
  AspectModel m;
  m.num_aspects = config_.num_aspects;
  m.vocab_size = vocab_size_;
  m.alpha = alpha_;
  m.beta = config_.beta;
  m.gamma = config_.gamma;
  m.theta.resize(A * V);
  for (std::size_t k = 0; k < A; ++k) {
    const double denom = static_cast<double>(aspect_total_[k]) + vbeta;
    for (std::size_t w = 0; w < V; ++w) {
      m.theta[k * V + w] = (static_cast<double>(aspect_word_[k * V + w]) + config_.beta) / denom;
    }
  }
  m.background.resize(V);
  const double bg_denom = static_cast<double>(background_total_) + vbeta;
  for (std::size_t w = 0; w < V; ++w) {
    m.background[w] = (static_cast<double>(background_word_[w]) + config_.beta) / bg_denom;
  }
  m.background_prob = (static_cast<double>(switch_background_) + config_.gamma) /
                      (static_cast<double>(switch_background_ + switch_aspect_) + 2.0 * config_.gamma);
  m.aspect_share.assign(A, 0.0);
  for (const auto& row : doc_aspect_) {
    for (std::size_t k = 0; k < A; ++k) m.aspect_share[k] += static_cast<double>(row[k]);
  }
  const auto n = static_cast<double>(assignments_.size());
  for (auto& v : m.aspect_share) v /= n;
  return m;
}

namespace {

// Sum each row's entries then divide so every row is a simplex to rounding.
void Renormalize(std::span<double> row) {
  double total = 0.0;
  for (double v : row) total += v;
  for (double& v : row) v /= total;
}

}  // namespace

AspectModel FitGibbs(const std::vector<Review>& reviews, int vocab_size, const LdaConfig& config,
                     std::vector<SentenceAssignment>* final_assignments) {
  GibbsSampler sampler(reviews, vocab_size, config);
  AspectModel mean;
  int collected = 0;
  auto accumulate = [&](const AspectModel& snap) {
    if (collected == 0) {
      mean = snap;
    } else {
      for (std::size_t i = 0; i < mean.theta.size(); ++i) mean.theta[i] += snap.theta[i];
      for (std::size_t i = 0; i < mean.background.size(); ++i) mean.background[i] += snap.background[i];
      for (std::size_t i = 0; i < mean.aspect_share.size(); ++i) mean.aspect_share[i] += snap.aspect_share[i];
      mean.background_prob += snap.background_prob;
    }
    ++collected;
  };
  for (int sweep = 1; sweep <= config.iterations; ++sweep) {
    sampler.Sweep();
    if (sweep > config.burn_in && (sweep - config.burn_in) % config.thinning == 0) {
      accumulate(sampler.Snapshot());
    }
  }
  if (collected == 0) accumulate(sampler.Snapshot());
  if (collected > 1) {
    const double inv = 1.0 / collected;
    for (auto& v : mean.theta) v *= inv;
    for (auto& v : mean.background) v *= inv;
    for (auto& v : mean.aspect_share) v *= inv;
    mean.background_prob *= inv;
  }
  for (int a = 0; a < mean.num_aspects; ++a) {
    Renormalize({mean.theta.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(vocab_size),
                 static_cast<std::size_t>(vocab_size)});
  }
  Renormalize(mean.background);
  if (final_assignments != nullptr) *final_assignments = sampler.assignments();
  return mean;
}

AspectTag AssignAspect(const AspectModel& model, std::span<const int> sentence) {
  if (sentence.empty()) ThrowUsage("AssignAspect: empty sentence");
  std::vector<double> score(static_cast<std::size_t>(model.num_aspects), 0.0);
  bool any = false;
  const double p_bg = model.background_prob;
  for (int w : sentence) {
    if (w < Vocabulary::kNumReserved || w >= model.vocab_size) continue;
    any = true;
    const double bg = p_bg * model.background[static_cast<std::size_t>(w)];
    for (int a = 0; a < model.num_aspects; ++a) {
      score[static_cast<std::size_t>(a)] += std::log((1.0 - p_bg) * model.Theta(a, w) + bg);
    }
  }
  if (!any) return {model.MostFrequentAspect(), true};
  int best = 0;
  for (int a = 1; a < model.num_aspects; ++a) {
    if (score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(best)]) best = a;
  }
  return {best, false};
}

std::vector<int> TopWords(const AspectModel& model, int aspect, int k) {
  if (aspect < 0 || aspect >= model.num_aspects) ThrowUsage("TopWords: aspect out of range");
  if (k < 1) ThrowUsage("TopWords: k must be >= 1");
  std::vector<int> ids;
  for (int w = Vocabulary::kNumReserved; w < model.vocab_size; ++w) ids.push_back(w);
  auto row = model.ThetaRow(aspect);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                    [&](int a, int b) {
                      const double pa = row[static_cast<std::size_t>(a)];
                      const double pb = row[static_cast<std::size_t>(b)];
                      if (pa != pb) return pa > pb;
                      return a < b;
                    });
  ids.resize(take);
  return ids;
}

double HeldoutPerplexity(const AspectModel& model, const std::vector<Review>& reviews) {
  double nll = 0.0;
  std::size_t count = 0;
  const double p_bg = model.background_prob;
  for (const auto& r : reviews) {
    for (const auto& s : r.sentences) {
      const auto tag = AssignAspect(model, s);
      for (int w : s) {
        if (w < Vocabulary::kNumReserved || w >= model.vocab_size) continue;
        const double p = (1.0 - p_bg) * model.Theta(tag.aspect, w) +
                         p_bg * model.background[static_cast<std::size_t>(w)];
        nll -= std::log(p);
        ++count;
      }
    }
  }
  if (count == 0) ThrowData("HeldoutPerplexity: no scorable tokens");
  return std::exp(nll / static_cast<double>(count));
}

std::string TopWordsReport(const AspectModel& model, const Vocabulary& vocab, int k) {
  std::ostringstream out;
  out.precision(4);
  for (int a = 0; a < model.num_aspects; ++a) {
    out << "aspect " << a << " (share " << model.aspect_share[static_cast<std::size_t>(a)] << "):";
    for (int w : TopWords(model, a, k)) out << ' ' << vocab.Word(w);
    out << '\n';
  }
  return out.str();
}

}  // namespace c2f

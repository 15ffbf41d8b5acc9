#include "c2f/evalkit.hpp"

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

namespace c2f {

namespace {

std::map<Tokens, std::size_t> NgramCounts(const Tokens& tokens, int n) {
  std::map<Tokens, std::size_t> counts;
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() < len) return counts;
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return counts;
}

std::size_t Total(const std::map<Tokens, std::size_t>& counts) {
  std::size_t n = 0;
  for (const auto& [g, c] : counts) n += c;
  return n;
}

std::size_t Overlap(const std::map<Tokens, std::size_t>& cand,
                    const std::map<Tokens, std::size_t>& ref) {
  std::size_t n = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) n += std::min(c, it->second);
  }
  return n;
}

RougeScore FromCounts(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

BleuDetail CorpusBleuDetail(const std::vector<Tokens>& candidates,
                            const std::vector<Tokens>& references, int max_n) {
  if (candidates.size() != references.size()) {
    ThrowUsage("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
               std::to_string(references.size()) + " references");
  }
  if (max_n < 1) ThrowUsage("bleu: order must be positive");
  BleuDetail d;
  std::vector<double> matches(static_cast<std::size_t>(max_n), 0.0);
  std::vector<double> totals(static_cast<std::size_t>(max_n), 0.0);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    d.candidate_length += candidates[k].size();
    d.reference_length += references[k].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = NgramCounts(candidates[k], n);
      const auto ref = NgramCounts(references[k], n);
      matches[static_cast<std::size_t>(n - 1)] += static_cast<double>(Overlap(cand, ref));
      totals[static_cast<std::size_t>(n - 1)] += static_cast<double>(Total(cand));
    }
  }
  if (d.candidate_length == 0) {
    d.warning = "empty candidate set; BLEU is 0";
    return d;
  }
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const double m = matches[static_cast<std::size_t>(n - 1)];
    const double t = totals[static_cast<std::size_t>(n - 1)];
    double p = t > 0 ? m / t : 0.0;
    if (n >= 2 && m == 0.0) p = 1.0 / (t + 1.0);
    d.precisions.push_back(p);
    if (p <= 0.0) {
      d.score = 0.0;
      d.brevity_penalty = 0.0;
      return d;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(d.candidate_length);
  const double r = static_cast<double>(d.reference_length);
  d.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
  d.score = 100.0 * d.brevity_penalty * std::exp(log_sum / max_n);
  return d;
}

double CorpusBleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                  int max_n) {
  return CorpusBleuDetail(candidates, references, max_n).score;
}

RougeScore RougeN(const Tokens& candidate, const Tokens& reference, int n) {
  if (reference.empty()) ThrowUsage("rouge: empty reference");
  const auto cand = NgramCounts(candidate, n);
  const auto ref = NgramCounts(reference, n);
  const double ref_total = static_cast<double>(Total(ref));
  const double cand_total = static_cast<double>(Total(cand));
  if (ref_total == 0.0) {
    const double v = cand_total == 0.0 ? 1.0 : 0.0;
    return {v, v, v};
  }
  return FromCounts(static_cast<double>(Overlap(cand, ref)), cand_total, ref_total);
}

std::size_t LcsLength(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore RougeL(const Tokens& candidate, const Tokens& reference) {
  if (reference.empty()) ThrowUsage("rouge: empty reference");
  return FromCounts(static_cast<double>(LcsLength(candidate, reference)),
                    static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
}

double Rouge(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
             RougeVariant variant) {
  if (candidates.size() != references.size()) ThrowUsage("rouge: candidate/reference count mismatch");
  if (candidates.empty()) ThrowUsage("rouge: no pairs");
  double sum = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    switch (variant) {
      case RougeVariant::kOne: sum += RougeN(candidates[k], references[k], 1).f1; break;
      case RougeVariant::kTwo: sum += RougeN(candidates[k], references[k], 2).f1; break;
      case RougeVariant::kL: sum += RougeL(candidates[k], references[k]).f1; break;
    }
  }
  return sum / static_cast<double>(candidates.size());
}

std::set<int> AspectsMentioned(const Tokens& text, const KeepSets& keep) {
  std::set<int> out;
  for (int a = 0; a < keep.num_aspects(); ++a) {
    for (const auto& w : text) {
      if (keep.IsAspectWord(a, w)) {
        out.insert(a);
        break;
      }
    }
  }
  return out;
}

CoverageStats AspectCoverage(const std::vector<Tokens>& real, const std::vector<Tokens>& generated,
                             const KeepSets& keep) {
  if (real.size() != generated.size()) ThrowUsage("coverage: review count mismatch");
  CoverageStats s;
  s.reviews = real.size();
  if (real.empty()) return s;
  for (std::size_t k = 0; k < real.size(); ++k) {
    const auto r = AspectsMentioned(real[k], keep);
    const auto g = AspectsMentioned(generated[k], keep);
    std::size_t covered = 0;
    for (int a : r) covered += g.count(a);
    s.mean_real += static_cast<double>(r.size());
    s.mean_generated += static_cast<double>(g.size());
    s.mean_covered += static_cast<double>(covered);
  }
  const double n = static_cast<double>(real.size());
  s.mean_real /= n;
  s.mean_generated /= n;
  s.mean_covered /= n;
  return s;
}

double Perplexity(const ReviewModel& model, const std::vector<TrainingTriple>& triples) {
  if (triples.empty()) ThrowUsage("perplexity: empty test set");
  const auto losses = EvaluateLosses(model, triples);
  return std::exp(losses.word_mean());
}

std::string MetricReport::ToText() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto row = [&](const char* name, double v) { out << std::left << std::setw(24) << name << v << '\n'; };
  row("perplexity", perplexity);
  row("bleu1", bleu1);
  row("bleu4", bleu4);
  row("rouge1", rouge1);
  row("rouge2", rouge2);
  row("rougeL", rougeL);
  row("aspects_real", coverage.mean_real);
  row("aspects_generated", coverage.mean_generated);
  row("aspects_covered", coverage.mean_covered);
  out << std::left << std::setw(24) << "samples" << samples << '\n';
  return out.str();
}

std::string MetricReport::ToJsonLines() const {
  std::string out;
  auto line = [&](const char* name, double v) {
    nlohmann::json j{{"metric", name}, {"value", v}};
    out += j.dump() + "\n";
  };
  line("perplexity", perplexity);
  line("bleu1", bleu1);
  line("bleu4", bleu4);
  line("rouge1", rouge1);
  line("rouge2", rouge2);
  line("rougeL", rougeL);
  line("aspects_real", coverage.mean_real);
  line("aspects_generated", coverage.mean_generated);
  line("aspects_covered", coverage.mean_covered);
  line("samples", static_cast<double>(samples));
  return out;
}

EvaluationOutput Evaluate(const ReviewModel& model, const SketchVocab& sketch_vocab,
                          const Vocabulary& vocab, const KeepSets& keep,
                          const std::vector<TrainingTriple>& triples,
                          const GenerateOptions& options) {
  if (triples.empty()) ThrowUsage("evaluation needs at least one review");
  EvaluationOutput out;
  for (const auto& t : triples) {
    const auto gen = GenerateReview(model, sketch_vocab, vocab, t.user, t.item, t.rating, options);
    Tokens cand, ref;
    for (int id : gen.Words()) cand.push_back(vocab.Word(id));
    for (const auto& s : t.sentences) {
      for (int id : s) ref.push_back(vocab.Word(id));
    }
    out.candidates.push_back(std::move(cand));
    out.references.push_back(std::move(ref));
  }
  auto& r = out.report;
  r.samples = triples.size();
  r.perplexity = Perplexity(model, triples);
  r.bleu1 = CorpusBleu(out.candidates, out.references, 1);
  r.bleu4 = CorpusBleu(out.candidates, out.references, 4);
  r.rouge1 = Rouge(out.candidates, out.references, RougeVariant::kOne);
  r.rouge2 = Rouge(out.candidates, out.references, RougeVariant::kTwo);
  r.rougeL = Rouge(out.candidates, out.references, RougeVariant::kL);
  r.coverage = AspectCoverage(out.references, out.candidates, keep);
  return out;
}

}  // namespace c2f

#pragma once

#include <set>
#include <string>
#include <vector>

#include "c2f/pipeline.hpp"

namespace c2f {

using Tokens = std::vector<std::string>;

struct BleuDetail {
  double score = 0.0;  // percent
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  std::string warning;
};

/// Corpus BLEU with uniform weights over orders 1..max_n. Clipped counts are
/// pooled over the corpus. Orders 2+ with no matches use (m + 1) / (t + 1).
BleuDetail CorpusBleuDetail(const std::vector<Tokens>& candidates,
                            const std::vector<Tokens>& references, int max_n);
double CorpusBleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                  int max_n);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class RougeVariant { kOne, kTwo, kL };

/// A reference without n-grams of the requested order scores 1 against a
/// candidate that has none either, and 0 otherwise. Empty references throw.
RougeScore RougeN(const Tokens& candidate, const Tokens& reference, int n);
RougeScore RougeL(const Tokens& candidate, const Tokens& reference);
std::size_t LcsLength(const Tokens& a, const Tokens& b);
/// Mean F1 over aligned pairs.
double Rouge(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
             RougeVariant variant);

/// Aspects with at least one keep-set word present in `text`.
std::set<int> AspectsMentioned(const Tokens& text, const KeepSets& keep);

struct CoverageStats {
  double mean_real = 0.0;
  double mean_generated = 0.0;
  double mean_covered = 0.0;
  std::size_t reviews = 0;
};
CoverageStats AspectCoverage(const std::vector<Tokens>& real, const std::vector<Tokens>& generated,
                             const KeepSets& keep);

/// exp of the mean teacher-forced word NLL (END included) with gold aspects and sketches.
double Perplexity(const ReviewModel& model, const std::vector<TrainingTriple>& triples);

struct MetricReport {
  double perplexity = 0.0;
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  CoverageStats coverage;
  std::size_t samples = 0;

  std::string ToText() const;
  /// One {"metric": ..., "value": ...} object per line.
  std::string ToJsonLines() const;
};

struct EvaluationOutput {
  MetricReport report;
  std::vector<Tokens> candidates;
  std::vector<Tokens> references;
};

/// Generates a review for every triple's context and scores it against the gold text.
EvaluationOutput Evaluate(const ReviewModel& model, const SketchVocab& sketch_vocab,
                          const Vocabulary& vocab, const KeepSets& keep,
                          const std::vector<TrainingTriple>& triples,
                          const GenerateOptions& options);

}  // namespace c2f

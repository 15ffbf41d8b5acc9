#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "c2f/autodiff.hpp"

namespace c2f {

template <typename State>
struct BeamHypothesis {
  std::vector<int> symbols;  // END excluded
  double score = 0.0;        // sum of log-probabilities, END included when emitted
  State state{};             // state that produced the final distribution
  bool finished = false;
  bool truncated = false;    // stopped by max_len rather than END
};

struct BeamOptions {
  int beam = 4;
  int max_len = 50;
  int end_symbol = -1;   // -1: no END class; sequences stop only at max_len
  int min_len = 0;       // END is masked until this many symbols exist
  bool length_normalize = false;
};

/// Standard beam search over a step function
///   step(state, prev_symbol, position) -> (next_state, log_probs).
/// `forced(position)` may pin the symbol at a position (its log-prob counts as
/// zero); `allowed(symbol)` masks symbols globally. Candidates are ranked by
/// score, ties broken by parent rank then symbol id.
template <typename State, typename StepFn>
std::vector<BeamHypothesis<State>> BeamSearch(
    State initial, int start_symbol, const BeamOptions& options, StepFn&& step,
    const std::function<std::optional<int>(int)>& forced = nullptr,
    const std::function<bool(int)>& allowed = nullptr) {
  using Hyp = BeamHypothesis<State>;
  const int width = std::max(1, options.beam);
  auto rank_score = [&](const Hyp& h) {
    if (!options.length_normalize) return h.score;
    const double n = static_cast<double>(h.symbols.size()) + (h.truncated ? 0.0 : 1.0);
    return h.score / std::max(1.0, n);
  };

  std::vector<Hyp> live(1);
  live[0].state = std::move(initial);
  std::vector<Hyp> finished;

  for (int pos = 0; pos < options.max_len && !live.empty(); ++pos) {
    struct Candidate {
      double score;
      std::size_t parent;
      int symbol;
    };
    std::vector<Candidate> candidates;
    std::vector<State> next_states;
    next_states.reserve(live.size());
    const std::optional<int> pinned = forced ? forced(pos) : std::nullopt;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const int prev = live[h].symbols.empty() ? start_symbol : live[h].symbols.back();
      auto [next, log_probs] = step(live[h].state, prev, pos);
      next_states.push_back(std::move(next));
      if (pinned) {
        candidates.push_back({live[h].score, h, *pinned});
        continue;
      }
      for (Eigen::Index k = 0; k < log_probs.size(); ++k) {
        const int sym = static_cast<int>(k);
        if (sym == options.end_symbol && pos < options.min_len) continue;
        if (allowed && sym != options.end_symbol && !allowed(sym)) continue;
        candidates.push_back({live[h].score + log_probs(k), h, sym});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.symbol < b.symbol;
    });
    if (candidates.size() > static_cast<std::size_t>(width)) candidates.resize(static_cast<std::size_t>(width));

    std::vector<Hyp> next_live;
    for (const auto& c : candidates) {
      Hyp hyp;
      hyp.symbols = live[c.parent].symbols;
      hyp.score = c.score;
      hyp.state = next_states[c.parent];
      if (c.symbol == options.end_symbol) {
        hyp.finished = true;
        finished.push_back(std::move(hyp));
        continue;
      }
      hyp.symbols.push_back(c.symbol);
      if (static_cast<int>(hyp.symbols.size()) >= options.max_len) {
        hyp.finished = true;
        hyp.truncated = true;
        finished.push_back(std::move(hyp));
        continue;
      }
      next_live.push_back(std::move(hyp));
    }
    live = std::move(next_live);

    // Log-probabilities are non-positive, so a live hypothesis can never climb
    // above its current score.
    if (!options.length_normalize && !finished.empty()) {
      double best_done = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_done = std::max(best_done, f.score);
      std::erase_if(live, [&](const Hyp& h) { return h.score <= best_done; });
    }
  }
  for (auto& h : live) {
    h.finished = true;
    h.truncated = true;
    finished.push_back(std::move(h));
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [&](const Hyp& a, const Hyp& b) { return rank_score(a) > rank_score(b); });
  if (finished.size() > static_cast<std::size_t>(width)) finished.resize(static_cast<std::size_t>(width));
  return finished;
}

}  // namespace c2f

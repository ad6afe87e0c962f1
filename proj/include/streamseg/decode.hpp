#pragma once

#include <limits>
#include <span>
#include <vector>

#include "streamseg/duration.hpp"
#include "streamseg/grammar.hpp"
#include "streamseg/types.hpp"

namespace streamseg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DecodeResult {
  SegmentPath path;
  double log_score = 0.0;
};

namespace detail {

// Deterministic tie-breaks, shared by every decoder in this header:
//   - inside a recurrence, among score-tied closing durations, the shortest
//     duration wins (equivalently: duration sequences compared most-recent
//     first, shorter/smaller first);
//   - at the final offline argmax, score-tied transcripts compare by action
//     sequence, lexicographically;
//   - at an online query, score-tied states compare by (current action,
//     current segment length, trie node id).
// Scores within kScoreTieTol are ties.

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Grammar-constrained offline Viterbi over an arbitrary additive frame
/// score matrix (T x |A|, log domain). Closed-form objective:
///   sum_t frame_score(t, a_{n(t)}) + duration_weight * sum_n ln Poisson(l_n; lambda_{a_n})
/// maximized over full transcripts in the grammar and positive durations
/// summing to T. The multi-view fusers reuse this with fused frame scores.
inline DecodeResult decode_offline_scores(const Matrix& frame_score,
                                          std::span<const double> lambda,
                                          double duration_weight, const Grammar& g) {
  const int T = frame_score.rows;
  const int A = frame_score.cols;
  if (A != g.num_actions() || static_cast<int>(lambda.size()) != A)
    throw std::invalid_argument("decode_offline_scores: action count mismatch");
  if (T < g.min_transcript_length())
    throw InfeasibleError("decode_offline_scores: no transcript fits in " +
                          std::to_string(T) + " frames");

  // Prefix sums per action: cum[a][t] = sum of frame_score(0..t-1, a).
  std::vector<std::vector<double>> cum(static_cast<size_t>(A),
                                       std::vector<double>(static_cast<size_t>(T) + 1, 0.0));
  for (int a = 0; a < A; ++a)
    for (int t = 0; t < T; ++t) cum[a][static_cast<size_t>(t) + 1] = cum[a][t] + frame_score.at(t, a);

  DurationTables tables(std::vector<double>(lambda.begin(), lambda.end()));

  const int V = g.num_nodes();
  // best[v][t]: best score with node v's segment closed exactly at frame t.
  std::vector<std::vector<double>> best(static_cast<size_t>(V),
                                        std::vector<double>(static_cast<size_t>(T) + 1, kNegInf));
  std::vector<std::vector<int>> bp(static_cast<size_t>(V),
                                   std::vector<int>(static_cast<size_t>(T) + 1, 0));
  best[Grammar::root()][0] = 0.0;

  // Frames that must remain after closing v so some transcript can complete.
  std::vector<int> min_extra(static_cast<size_t>(V), 0);
  for (int v = V - 1; v >= 0; --v) {
    const Grammar::Node& n = g.node(v);
    if (n.is_full) {
      min_extra[static_cast<size_t>(v)] = 0;
    } else {
      int m = T + 1;
      for (int c : n.children) m = std::min(m, 1 + min_extra[static_cast<size_t>(c)]);
      min_extra[static_cast<size_t>(v)] = m;
    }
  }

  for (int v = 1; v < V; ++v) {  // BFS ids: parent < child
    const Grammar::Node& n = g.node(v);
    const int a = n.action;
    const std::vector<double>& parent_best = best[static_cast<size_t>(n.parent)];
    const int t_lo = n.depth;
    const int t_hi = T - min_extra[static_cast<size_t>(v)];
    for (int t = t_lo; t <= t_hi; ++t) {
      double best_score = kNegInf;
      for (int l = 1; l <= t - (n.depth - 1); ++l) {
        double p = parent_best[static_cast<size_t>(t - l)];
        if (p == kNegInf) continue;
        double s = p + (cum[a][static_cast<size_t>(t)] - cum[a][static_cast<size_t>(t - l)]) +
                   duration_weight * tables.poisson(a, l);
        if (s > best_score) best_score = s;
      }
      if (best_score == kNegInf) continue;
      int best_l = 0;
      for (int l = 1; l <= t - (n.depth - 1); ++l) {  // shortest duration within tol
        double p = parent_best[static_cast<size_t>(t - l)];
        if (p == kNegInf) continue;
        double s = p + (cum[a][static_cast<size_t>(t)] - cum[a][static_cast<size_t>(t - l)]) +
                   duration_weight * tables.poisson(a, l);
        if (s >= best_score - kScoreTieTol) {
          best_l = l;
          break;
        }
      }
      best[static_cast<size_t>(v)][static_cast<size_t>(t)] = best_score;
      bp[static_cast<size_t>(v)][static_cast<size_t>(t)] = best_l;
    }
  }

  double top = kNegInf;
  for (int v : g.full_nodes()) top = std::max(top, best[static_cast<size_t>(v)][static_cast<size_t>(T)]);
  if (top == kNegInf)
    throw InfeasibleError("decode_offline_scores: no transcript fits in " + std::to_string(T) +
                          " frames");
  int winner = -1;
  std::vector<int> winner_seq;
  for (int v : g.full_nodes()) {
    if (best[static_cast<size_t>(v)][static_cast<size_t>(T)] < top - kScoreTieTol) continue;
    std::vector<int> seq = g.action_sequence(v);
    if (winner < 0 || detail::lex_less(seq, winner_seq)) {
      winner = v;
      winner_seq = std::move(seq);
    }
  }

  std::vector<SegmentPath::Segment> segments;
  int t = T;
  for (int v = winner; v != Grammar::root();) {
    int l = bp[static_cast<size_t>(v)][static_cast<size_t>(t)];
    segments.push_back({g.node(v).action, l});
    t -= l;
    v = g.node(v).parent;
  }
  std::reverse(segments.begin(), segments.end());
  return DecodeResult{SegmentPath(std::move(segments)),
                      best[static_cast<size_t>(winner)][static_cast<size_t>(T)]};
}

/// Offline inference (most likely full transcript + durations). Frame terms
/// are Bayes-flipped posteriors; every segment, the last included, pays the
/// full Poisson. Passing `constrain_to` replaces the grammar with that
/// single transcript (training mode).
inline DecodeResult offline_decode(const Matrix& posteriors, const DurationModel& dm,
                                   const Grammar& g,
                                   const Transcript* constrain_to = nullptr) {
  Matrix ll = build_log_likelihoods(posteriors, dm);
  if (constrain_to) {
    Grammar single = Grammar::single(*constrain_to, g.num_actions());
    return decode_offline_scores(ll, dm.lambda, 1.0, single);
  }
  return decode_offline_scores(ll, dm.lambda, 1.0, g);
}

inline DecodeResult offline_decode(const ProbabilityStream& stream, const DurationModel& dm,
                                   const Grammar& g,
                                   const Transcript* constrain_to = nullptr) {
  return offline_decode(stream.posteriors, dm, g, constrain_to);
}

/// Incremental grammar-constrained online decoder.
///
/// A hypothesis is (trie node, open segment length). Its stored score holds
/// every frame log-likelihood so far plus full Poisson factors for closed
/// segments only; the open segment's half-Poisson is applied at query time,
/// so the recurrence stays exact when the segment later closes. One step
/// costs O(frontier) = O(t * trie size), which is the O(TN) per-step
/// contract.
class OnlineDecoder {
 public:
  OnlineDecoder(const Grammar& g, const DurationModel& dm, int beam_width = 0)
      : g_(&g),
        tables_(dm.lambda),
        beam_(beam_width),
        lanes_(static_cast<size_t>(g.num_nodes())) {
    if (dm.num_actions() != g.num_actions())
      throw std::invalid_argument("OnlineDecoder: action count mismatch");
    prior_log_.resize(static_cast<size_t>(dm.num_actions()));
    for (int a = 0; a < dm.num_actions(); ++a) prior_log_[static_cast<size_t>(a)] = log_floored(dm.prior[a]);
  }

  int t() const { return t_; }
  const std::vector<int>& history() const { return history_; }

  /// Consume the posterior row for frame t+1; returns the online label for
  /// that frame, pop of the best grammar-prefix path.
  int step(std::span<const double> posterior_row) {
    if (static_cast<int>(posterior_row.size()) != g_->num_actions())
      throw std::invalid_argument("OnlineDecoder::step: row width mismatch");
    ++t_;
    const int V = g_->num_nodes();

    std::vector<double> fs(static_cast<size_t>(g_->num_actions()));
    for (int a = 0; a < g_->num_actions(); ++a)
      fs[static_cast<size_t>(a)] = log_floored(posterior_row[static_cast<size_t>(a)]) - prior_log_[static_cast<size_t>(a)];

    // Closing candidates from the previous frontier: best (score + Poisson)
    // over open lengths, shortest length on ties.
    std::vector<double> close_score(static_cast<size_t>(V), kNegInf);
    std::vector<int> close_hist(static_cast<size_t>(V), -1);
    for (int v = 1; v < V; ++v) {
      const Lane& lane = lanes_[static_cast<size_t>(v)];
      if (lane.score.empty()) continue;
      const int a = g_->node(v).action;
      double best = kNegInf;
      for (size_t i = 0; i < lane.score.size(); ++i) {
        if (lane.score[i] == kNegInf) continue;
        double s = lane.score[i] + tables_.poisson(a, static_cast<int>(i) + 1);
        if (s > best) best = s;
      }
      if (best == kNegInf) continue;
      for (size_t i = 0; i < lane.score.size(); ++i) {
        if (lane.score[i] == kNegInf) continue;
        double s = lane.score[i] + tables_.poisson(a, static_cast<int>(i) + 1);
        if (s >= best - kScoreTieTol) {
          close_score[static_cast<size_t>(v)] = best;
          close_hist[static_cast<size_t>(v)] =
              push_closure(v, static_cast<int>(i) + 1, lane.hist[i]);
          break;
        }
      }
    }

    // New frontier: extend every open segment by one frame; open length-1
    // segments from the parent's closing candidate (from the root only at
    // t == 1, where the first segment must begin).
    for (int v = 1; v < V; ++v) {
      Lane& lane = lanes_[static_cast<size_t>(v)];
      const Grammar::Node& n = g_->node(v);
      const double f = fs[static_cast<size_t>(n.action)];

      double open_score = kNegInf;
      int open_hist = -1;
      if (n.parent == Grammar::root()) {
        if (t_ == 1) {
          open_score = f;
        }
      } else if (close_score[static_cast<size_t>(n.parent)] != kNegInf) {
        open_score = close_score[static_cast<size_t>(n.parent)] + f;
        open_hist = close_hist[static_cast<size_t>(n.parent)];
      }

      if (lane.score.empty() && open_score == kNegInf) continue;
      lane.score.push_back(kNegInf);
      lane.hist.push_back(-1);
      for (size_t i = lane.score.size() - 1; i > 0; --i) {
        lane.score[i] = lane.score[i - 1] == kNegInf ? kNegInf : lane.score[i - 1] + f;
        lane.hist[i] = lane.hist[i - 1];
      }
      lane.score[0] = open_score;
      lane.hist[0] = open_hist;
    }

    if (beam_ > 0) prune_to_beam();

    QueryState q = query_best();
    history_.push_back(g_->node(q.node).action);
    return history_.back();
  }

  int step(const ProbabilityStream& stream, int frame) {
    return step(std::span<const double>(stream.posteriors.row(frame),
                                        static_cast<size_t>(stream.posteriors.cols)));
  }

  /// Most likely grammar-prefix segmentation of the frames seen so far
  /// (Eq.-6 argmax with the half-Poisson on the open segment).
  SegmentPath best_path() const {
    QueryState q = query_best();
    std::vector<SegmentPath::Segment> segments;
    segments.push_back({g_->node(q.node).action, q.len});
    for (int h = q.hist; h >= 0; h = closures_[static_cast<size_t>(h)].prev)
      segments.push_back({g_->node(closures_[static_cast<size_t>(h)].node).action,
                          closures_[static_cast<size_t>(h)].len});
    std::reverse(segments.begin(), segments.end());
    return SegmentPath(std::move(segments));
  }

  /// Score of the query winner (stored score + half-Poisson on the open
  /// segment), the Eq.-6 maximum at the current frame.
  double best_adjusted_score() const { return query_best().adjusted; }

 private:
  struct Lane {
    std::vector<double> score;  // index i = open segment length i+1
    std::vector<int> hist;      // closure chain per entry, -1 for none
  };
  struct Closure {
    int node;
    int len;
    int prev;
  };
  struct QueryState {
    int node = -1;
    int len = 0;
    int hist = -1;
    double adjusted = kNegInf;
  };

  int push_closure(int node, int len, int prev) {
    closures_.push_back({node, len, prev});
    return static_cast<int>(closures_.size()) - 1;
  }

  QueryState query_best() const {
    if (t_ == 0) throw std::logic_error("OnlineDecoder: no frames consumed");
    const int V = g_->num_nodes();
    double best = kNegInf;
    for (int v = 1; v < V; ++v) {
      const Lane& lane = lanes_[static_cast<size_t>(v)];
      const int a = g_->node(v).action;
      for (size_t i = 0; i < lane.score.size(); ++i) {
        if (lane.score[i] == kNegInf) continue;
        best = std::max(best, lane.score[i] + tables_.half_poisson(a, static_cast<int>(i) + 1));
      }
    }
    if (best == kNegInf)
      throw InfeasibleError("OnlineDecoder: no grammar-consistent hypothesis");
    QueryState q;
    for (int v = 1; v < V; ++v) {  // min (action, length, node id) within tol
      const Lane& lane = lanes_[static_cast<size_t>(v)];
      const int a = g_->node(v).action;
      for (size_t i = 0; i < lane.score.size(); ++i) {
        if (lane.score[i] == kNegInf) continue;
        double adj = lane.score[i] + tables_.half_poisson(a, static_cast<int>(i) + 1);
        if (adj < best - kScoreTieTol) continue;
        int len = static_cast<int>(i) + 1;
        bool better;
        if (q.node < 0) {
          better = true;
        } else {
          int qa = g_->node(q.node).action;
          better = std::tie(a, len, v) < std::tie(qa, q.len, q.node);
        }
        if (better) q = QueryState{v, len, lane.hist[i], adj};
      }
    }
    return q;
  }

  void prune_to_beam() {
    struct Entry {
      double adjusted;
      int action, len, node;
    };
    std::vector<Entry> entries;
    for (int v = 1; v < g_->num_nodes(); ++v) {
      const Lane& lane = lanes_[static_cast<size_t>(v)];
      const int a = g_->node(v).action;
      for (size_t i = 0; i < lane.score.size(); ++i)
        if (lane.score[i] != kNegInf)
          entries.push_back({lane.score[i] + tables_.half_poisson(a, static_cast<int>(i) + 1),
                             a, static_cast<int>(i) + 1, v});
    }
    if (static_cast<int>(entries.size()) <= beam_) return;
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
      if (x.adjusted != y.adjusted) return x.adjusted > y.adjusted;
      return std::tie(x.action, x.len, x.node) < std::tie(y.action, y.len, y.node);
    });
    entries.resize(static_cast<size_t>(beam_));
    std::vector<Lane> kept(lanes_.size());
    for (size_t v = 0; v < lanes_.size(); ++v) {
      kept[v].score.assign(lanes_[v].score.size(), kNegInf);
      kept[v].hist.assign(lanes_[v].hist.size(), -1);
    }
    for (const Entry& e : entries) {
      kept[static_cast<size_t>(e.node)].score[static_cast<size_t>(e.len) - 1] =
          lanes_[static_cast<size_t>(e.node)].score[static_cast<size_t>(e.len) - 1];
      kept[static_cast<size_t>(e.node)].hist[static_cast<size_t>(e.len) - 1] =
          lanes_[static_cast<size_t>(e.node)].hist[static_cast<size_t>(e.len) - 1];
    }
    lanes_ = std::move(kept);
  }

  const Grammar* g_;
  DurationTables tables_;
  std::vector<double> prior_log_;
  int beam_;
  int t_ = 0;
  std::vector<Lane> lanes_;
  std::vector<Closure> closures_;
  std::vector<int> history_;
};

/// Full online run: per-frame labels a^_t plus, for every t, the online path
/// inferred at t (needed by the online-offline discrepancy loss and the
/// progress/latency evaluations).
struct OnlineRun {
  std::vector<int> labels;
  std::vector<SegmentPath> paths;  // paths[t-1] covers frames 1..t
};

inline OnlineRun online_decode_full(const Matrix& posteriors, const DurationModel& dm,
                                    const Grammar& g, bool keep_paths = true) {
  OnlineRun run;
  OnlineDecoder dec(g, dm);
  for (int t = 0; t < posteriors.rows; ++t) {
    run.labels.push_back(
        dec.step(std::span<const double>(posteriors.row(t), static_cast<size_t>(posteriors.cols))));
    if (keep_paths) run.paths.push_back(dec.best_path());
  }
  return run;
}

inline OnlineRun online_decode_full(const ProbabilityStream& stream, const DurationModel& dm,
                                    const Grammar& g, bool keep_paths = true) {
  return online_decode_full(stream.posteriors, dm, g, keep_paths);
}

/// Sliding-window greedy baseline: label at t is the argmax of the mean
/// posterior over the trailing window. No grammar, no durations.
inline std::vector<int> greedy_decode(const Matrix& posteriors, int window = 1) {
  if (window < 1) throw std::invalid_argument("greedy_decode: window must be >= 1");
  const int T = posteriors.rows;
  const int A = posteriors.cols;
  std::vector<std::vector<double>> cum(static_cast<size_t>(A),
                                       std::vector<double>(static_cast<size_t>(T) + 1, 0.0));
  for (int a = 0; a < A; ++a)
    for (int t = 0; t < T; ++t) cum[a][static_cast<size_t>(t) + 1] = cum[a][t] + posteriors.at(t, a);
  std::vector<int> labels(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    int lo = std::max(0, t - window + 1);
    int arg = 0;
    double best = cum[0][static_cast<size_t>(t) + 1] - cum[0][static_cast<size_t>(lo)];
    for (int a = 1; a < A; ++a) {
      double s = cum[a][static_cast<size_t>(t) + 1] - cum[a][static_cast<size_t>(lo)];
      if (s > best) {  // ties keep the lower action index
        best = s;
        arg = a;
      }
    }
    labels[static_cast<size_t>(t)] = arg;
  }
  return labels;
}

inline std::vector<int> greedy_decode(const ProbabilityStream& stream, int window = 1) {
  return greedy_decode(stream.posteriors, window);
}

/// Fixed-delay semi-online inference. Frame t is labeled by the online path
/// inferred at time min(t+D, T). The boundaries are exact by construction:
/// D = 0 is the online labeling, and once the delay covers the whole video
/// (D >= T-1) every frame is labeled by the offline result.
inline std::vector<int> semi_online_decode(const Matrix& posteriors, const DurationModel& dm,
                                           const Grammar& g, int delay) {
  if (delay < 0) throw std::invalid_argument("semi_online_decode: delay must be >= 0");
  const int T = posteriors.rows;
  if (delay == 0) return online_decode_full(posteriors, dm, g, /*keep_paths=*/false).labels;
  if (delay >= T - 1) return offline_decode(posteriors, dm, g).path.expand();
  OnlineRun run = online_decode_full(posteriors, dm, g);
  std::vector<int> labels(static_cast<size_t>(T));
  std::vector<std::vector<int>> expansions(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    int u = std::min(i + 1 + delay, T);  // 1-based decision time for frame i+1
    auto& exp_u = expansions[static_cast<size_t>(u) - 1];
    if (exp_u.empty()) exp_u = run.paths[static_cast<size_t>(u) - 1].expand();
    labels[static_cast<size_t>(i)] = exp_u[static_cast<size_t>(i)];
  }
  return labels;
}

inline std::vector<int> semi_online_decode(const ProbabilityStream& stream,
                                           const DurationModel& dm, const Grammar& g,
                                           int delay) {
  return semi_online_decode(stream.posteriors, dm, g, delay);
}

}  // namespace streamseg

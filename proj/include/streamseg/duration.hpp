#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "streamseg/core.hpp"
#include "streamseg/types.hpp"

namespace streamseg {

/// log Poisson pmf: l*ln(lambda) - lambda - ln(l!), with ln(l!) via lgamma.
inline double poisson_log_pmf(int l, double lambda_a) {
  if (l < 1) throw std::invalid_argument("poisson_log_pmf: duration must be >= 1");
  if (!(lambda_a > 0.0)) throw std::invalid_argument("poisson_log_pmf: lambda must be positive");
  return l * std::log(lambda_a) - lambda_a - std::lgamma(static_cast<double>(l) + 1.0);
}

/// Half-Poisson duration score for an open segment: 1 while the segment is
/// shorter than the action's mean length, the Poisson pmf once it is not.
inline double half_poisson_log(int l, double lambda_a) {
  if (l < 1) throw std::invalid_argument("half_poisson_log: duration must be >= 1");
  if (!(lambda_a > 0.0)) throw std::invalid_argument("half_poisson_log: lambda must be positive");
  if (static_cast<double>(l) < lambda_a) return 0.0;
  return poisson_log_pmf(l, lambda_a);
}

/// Bayes flip used by the decoders: ln p(a|x) - ln p(a), both floored.
inline double posterior_to_log_likelihood(double p_posterior, double prior) {
  double lp = log_floored(p_posterior);
  double lq = log_floored(prior);
  return lp - lq;
}

/// Class priors are floored at 1/(10*|A|) before renormalization so the
/// Bayes conversion stays finite.
inline double prior_floor(int num_actions) { return 1.0 / (10.0 * num_actions); }

/// Mean segment length per action from pseudo-label paths; actions never
/// seen fall back to (mean video length) / (mean transcript length).
/// Priors are frame frequencies, floored and renormalized.
inline DurationModel estimate_duration_model(std::span<const SegmentPath> paths,
                                             int num_actions) {
  if (paths.empty()) throw std::invalid_argument("estimate_duration_model: no paths");
  if (num_actions < 1) throw std::invalid_argument("estimate_duration_model: no actions");

  std::vector<double> len_sum(num_actions, 0.0);
  std::vector<long> seg_count(num_actions, 0);
  std::vector<double> frame_count(num_actions, 0.0);
  double total_frames = 0.0;
  double total_segments = 0.0;
  for (const SegmentPath& p : paths) {
    for (const SegmentPath::Segment& s : p.segments) {
      len_sum[s.action] += s.length;
      seg_count[s.action] += 1;
      frame_count[s.action] += s.length;
    }
    total_frames += p.total_frames;
    total_segments += p.num_segments();
  }
  const double n = static_cast<double>(paths.size());
  const double default_lambda = (total_frames / n) / (total_segments / n);

  std::vector<double> lambda(num_actions);
  for (int a = 0; a < num_actions; ++a)
    lambda[a] = seg_count[a] > 0 ? len_sum[a] / seg_count[a] : default_lambda;

  const double floor = prior_floor(num_actions);
  std::vector<double> prior(num_actions);
  double norm = 0.0;
  for (int a = 0; a < num_actions; ++a) {
    prior[a] = std::max(frame_count[a] / total_frames, floor);
    norm += prior[a];
  }
  for (double& p : prior) p /= norm;
  return DurationModel(std::move(lambda), std::move(prior));
}

/// Uniform-default model used before the first epoch: the unseen-action
/// lambda for every action, uniform priors.
inline DurationModel default_duration_model(double mean_video_frames,
                                            double mean_transcript_length,
                                            int num_actions) {
  double lambda = mean_video_frames / mean_transcript_length;
  return DurationModel(std::vector<double>(num_actions, lambda),
                       std::vector<double>(num_actions, 1.0 / num_actions));
}

/// Frame log-likelihood matrix ln p(x_t|a) = ln p(a|x_t) - ln p(a), up to the
/// constant ln p(x_t).
inline Matrix build_log_likelihoods(const Matrix& posteriors, const DurationModel& dm) {
  if (posteriors.cols != dm.num_actions())
    throw std::invalid_argument("build_log_likelihoods: action count mismatch");
  Matrix out(posteriors.rows, posteriors.cols);
  for (int a = 0; a < posteriors.cols; ++a) {
    double lq = log_floored(dm.prior[a]);
    for (int t = 0; t < posteriors.rows; ++t)
      out.at(t, a) = log_floored(posteriors.at(t, a)) - lq;
  }
  return out;
}

/// Memoized per-action Poisson / half-Poisson tables so the decoders' inner
/// loops avoid lgamma calls. Oracles do not use this; they call the
/// primitives directly.
class DurationTables {
 public:
  explicit DurationTables(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    pois_.resize(lambda_.size());
    half_.resize(lambda_.size());
  }

  double poisson(int a, int l) const {
    ensure(a, l);
    return pois_[a][static_cast<size_t>(l) - 1];
  }

  double half_poisson(int a, int l) const {
    ensure(a, l);
    return half_[a][static_cast<size_t>(l) - 1];
  }

  int num_actions() const { return static_cast<int>(lambda_.size()); }
  double lambda(int a) const { return lambda_[a]; }

 private:
  void ensure(int a, int l) const {
    auto& p = pois_[a];
    auto& h = half_[a];
    while (static_cast<int>(p.size()) < l) {
      int len = static_cast<int>(p.size()) + 1;
      double lp = poisson_log_pmf(len, lambda_[a]);
      p.push_back(lp);
      h.push_back(static_cast<double>(len) < lambda_[a] ? 0.0 : lp);
    }
  }

  std::vector<double> lambda_;
  mutable std::vector<std::vector<double>> pois_;
  mutable std::vector<std::vector<double>> half_;
};

}  // namespace streamseg

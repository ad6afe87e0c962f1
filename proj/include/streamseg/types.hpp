#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamseg/core.hpp"

namespace streamseg {

/// The label set of a dataset. Indices 0..size()-1 are stable for a run;
/// strings appear only at I/O boundaries.
struct ActionSet {
  std::vector<std::string> labels;
  int background = -1;  // index of the designated background label, -1 if none

  ActionSet() = default;
  explicit ActionSet(std::vector<std::string> names,
                     const std::optional<std::string>& background_label = std::nullopt)
      : labels(std::move(names)) {
    if (labels.empty()) throw std::invalid_argument("ActionSet: empty label list");
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].empty()) throw std::invalid_argument("ActionSet: empty label name");
      for (size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j])
          throw std::invalid_argument("ActionSet: duplicate label '" + labels[i] + "'");
    }
    if (background_label) {
      background = index_of(*background_label);
      if (background < 0)
        throw std::invalid_argument("ActionSet: background '" + *background_label +
                                    "' is not a member");
    }
  }

  int size() const { return static_cast<int>(labels.size()); }

  int index_of(const std::string& name) const {
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == name) return static_cast<int>(i);
    return -1;
  }

  const std::string& name(int idx) const { return labels.at(static_cast<size_t>(idx)); }
};

/// Ordered action indices for one video; the only supervision available in
/// training. Adjacent repeats are allowed.
struct Transcript {
  std::vector<int> actions;

  Transcript() = default;
  explicit Transcript(std::vector<int> a) : actions(std::move(a)) {}

  int length() const { return static_cast<int>(actions.size()); }

  void validate(int num_actions) const {
    if (actions.empty()) throw std::invalid_argument("Transcript: must have length >= 1");
    for (int a : actions)
      if (a < 0 || a >= num_actions)
        throw std::invalid_argument("Transcript: action index out of range");
  }

  bool operator==(const Transcript& o) const { return actions == o.actions; }
};

/// An alternating (action, duration) sequence covering a whole video.
struct SegmentPath {
  struct Segment {
    int action = 0;
    int length = 0;
    bool operator==(const Segment& o) const {
      return action == o.action && length == o.length;
    }
  };

  std::vector<Segment> segments;
  int total_frames = 0;

  SegmentPath() = default;
  explicit SegmentPath(std::vector<Segment> segs) : segments(std::move(segs)) {
    for (const Segment& s : segments) {
      if (s.length < 1) throw std::invalid_argument("SegmentPath: duration must be >= 1");
      total_frames += s.length;
    }
  }

  int num_segments() const { return static_cast<int>(segments.size()); }

  /// 0-based start frame of segment n (the paper's eta(n) minus one).
  int start_of(int n) const {
    int s = 0;
    for (int k = 0; k < n; ++k) s += segments[k].length;
    return s;
  }

  std::vector<int> expand() const {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(total_frames));
    for (const Segment& s : segments) out.insert(out.end(), s.length, s.action);
    return out;
  }

  std::vector<int> action_sequence() const {
    std::vector<int> out;
    out.reserve(segments.size());
    for (const Segment& s : segments) out.push_back(s.action);
    return out;
  }

  bool operator==(const SegmentPath& o) const { return segments == o.segments; }
};

/// T x |A| per-frame class posteriors, each row a distribution.
struct ProbabilityStream {
  Matrix posteriors;

  ProbabilityStream() = default;
  explicit ProbabilityStream(Matrix m) : posteriors(std::move(m)) {
    for (int t = 0; t < posteriors.rows; ++t) {
      double sum = 0.0;
      for (int a = 0; a < posteriors.cols; ++a) {
        double p = posteriors.at(t, a);
        if (p < 0.0)
          throw std::invalid_argument("ProbabilityStream: negative entry at row " +
                                      std::to_string(t));
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("ProbabilityStream: row " + std::to_string(t) +
                                    " sums to " + std::to_string(sum));
    }
  }

  int frames() const { return posteriors.rows; }
  int num_actions() const { return posteriors.cols; }
};

/// Per-action mean segment lengths and class priors backing the Poisson and
/// half-Poisson duration scores and the Bayes posterior-to-likelihood flip.
struct DurationModel {
  std::vector<double> lambda;
  std::vector<double> prior;

  DurationModel() = default;
  DurationModel(std::vector<double> lam, std::vector<double> pri)
      : lambda(std::move(lam)), prior(std::move(pri)) {
    if (lambda.empty() || lambda.size() != prior.size())
      throw std::invalid_argument("DurationModel: size mismatch");
    for (double l : lambda)
      if (!(l > 0.0)) throw std::invalid_argument("DurationModel: lambda must be positive");
    for (double p : prior)
      if (!(p > 0.0)) throw std::invalid_argument("DurationModel: prior must be positive");
  }

  int num_actions() const { return static_cast<int>(lambda.size()); }
};

/// K x K binary view adjacency: v_{i,j} = 1 iff videos i and j are two views
/// of the same recording.
struct ViewAdjacency {
  int k = 0;
  std::vector<uint8_t> m;

  ViewAdjacency() = default;
  explicit ViewAdjacency(int videos) : k(videos), m(static_cast<size_t>(videos) * videos, 0) {}

  static ViewAdjacency from_recordings(const std::vector<std::string>& recording_ids) {
    ViewAdjacency v(static_cast<int>(recording_ids.size()));
    for (int i = 0; i < v.k; ++i)
      for (int j = 0; j < v.k; ++j)
        if (i != j && recording_ids[i] == recording_ids[j]) v.m[static_cast<size_t>(i) * v.k + j] = 1;
    return v;
  }

  bool adjacent(int i, int j) const {
    return m[static_cast<size_t>(i) * k + j] != 0;
  }

  void set(int i, int j, bool value) {
    if (i == j && value) throw std::invalid_argument("ViewAdjacency: diagonal must be zero");
    m[static_cast<size_t>(i) * k + j] = value ? 1 : 0;
    m[static_cast<size_t>(j) * k + i] = value ? 1 : 0;
  }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < k; ++j)
      if (adjacent(i, j)) out.push_back(j);
    return out;
  }

  void validate() const {
    for (int i = 0; i < k; ++i) {
      if (adjacent(i, i)) throw std::invalid_argument("ViewAdjacency: nonzero diagonal");
      for (int j = 0; j < i; ++j)
        if (adjacent(i, j) != adjacent(j, i))
          throw std::invalid_argument("ViewAdjacency: not symmetric");
    }
  }
};

}  // namespace streamseg

#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <span>
#include <vector>

#include "streamseg/types.hpp"

namespace streamseg {

/// Prefix trie over a finite set of training transcripts. A sequence is a
/// valid decoding prefix iff it traces a path from the root; it is a valid
/// full sequence iff that path ends at a node where some transcript ends.
///
/// Node ids are canonical: breadth-first from the root with children visited
/// in increasing action order, so id order is reproducible for a given
/// transcript set and usable as a tie-break.
class Grammar {
 public:
  struct Node {
    int action = -1;  // action labeling the edge into this node; -1 at root
    int parent = -1;
    int depth = 0;
    bool is_full = false;  // a transcript ends exactly here
    std::vector<int> children;  // ascending action order
  };

  Grammar(std::vector<Transcript> transcripts, int num_actions)
      : num_actions_(num_actions) {
    if (transcripts.empty()) throw std::invalid_argument("Grammar: no transcripts");
    for (const Transcript& t : transcripts) t.validate(num_actions);
    std::sort(transcripts.begin(), transcripts.end(),
              [](const Transcript& a, const Transcript& b) { return a.actions < b.actions; });
    transcripts.erase(std::unique(transcripts.begin(), transcripts.end()), transcripts.end());
    transcripts_ = std::move(transcripts);
    build();
  }

  static Grammar single(const Transcript& t, int num_actions) {
    return Grammar(std::vector<Transcript>{t}, num_actions);
  }

  int num_actions() const { return num_actions_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  static constexpr int root() { return 0; }

  const std::vector<Transcript>& transcripts() const { return transcripts_; }
  int min_transcript_length() const { return min_len_; }
  int max_transcript_length() const { return max_len_; }

  /// Child of `id` along `action`, or -1.
  int child(int id, int action) const {
    for (int c : nodes_[static_cast<size_t>(id)].children)
      if (nodes_[static_cast<size_t>(c)].action == action) return c;
    return -1;
  }

  bool is_valid_prefix(std::span<const int> seq) const { return walk(seq) >= 0; }

  bool is_valid_full(std::span<const int> seq) const {
    int n = walk(seq);
    return n >= 0 && nodes_[static_cast<size_t>(n)].is_full;
  }

  /// Trie node reached by seq, or -1 if seq is not a prefix.
  int walk(std::span<const int> seq) const {
    int cur = root();
    for (int a : seq) {
      cur = child(cur, a);
      if (cur < 0) return -1;
    }
    return cur;
  }

  /// Action sequence along the path from the root to `id`.
  std::vector<int> action_sequence(int id) const {
    std::vector<int> out;
    for (int cur = id; cur != root(); cur = nodes_[static_cast<size_t>(cur)].parent)
      out.push_back(nodes_[static_cast<size_t>(cur)].action);
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Ids of nodes where a transcript ends.
  const std::vector<int>& full_nodes() const { return full_nodes_; }

 private:
  void build() {
    // Provisional trie in insertion order, then BFS renumbering.
    struct TmpNode {
      int action = -1, parent = -1, depth = 0;
      bool is_full = false;
      std::map<int, int> children;
    };
    std::vector<TmpNode> tmp(1);
    min_len_ = transcripts_[0].length();
    max_len_ = 0;
    for (const Transcript& t : transcripts_) {
      min_len_ = std::min(min_len_, t.length());
      max_len_ = std::max(max_len_, t.length());
      int cur = 0;
      for (int a : t.actions) {
        auto it = tmp[static_cast<size_t>(cur)].children.find(a);
        if (it == tmp[static_cast<size_t>(cur)].children.end()) {
          int id = static_cast<int>(tmp.size());
          tmp[static_cast<size_t>(cur)].children.emplace(a, id);
          tmp.push_back(TmpNode{a, cur, tmp[static_cast<size_t>(cur)].depth + 1, false, {}});
          cur = id;
        } else {
          cur = it->second;
        }
      }
      tmp[static_cast<size_t>(cur)].is_full = true;
    }

    std::vector<int> new_id(tmp.size(), -1);
    std::deque<int> queue{0};
    int next = 0;
    while (!queue.empty()) {
      int old = queue.front();
      queue.pop_front();
      new_id[static_cast<size_t>(old)] = next++;
      for (const auto& [action, child] : tmp[static_cast<size_t>(old)].children)
        queue.push_back(child);  // std::map iterates ascending by action
    }

    nodes_.assign(tmp.size(), Node{});
    for (size_t old = 0; old < tmp.size(); ++old) {
      Node& n = nodes_[static_cast<size_t>(new_id[old])];
      n.action = tmp[old].action;
      n.parent = tmp[old].parent >= 0 ? new_id[static_cast<size_t>(tmp[old].parent)] : -1;
      n.depth = tmp[old].depth;
      n.is_full = tmp[old].is_full;
      for (const auto& [action, child] : tmp[old].children)
        n.children.push_back(new_id[static_cast<size_t>(child)]);
      std::sort(n.children.begin(), n.children.end(), [this](int a, int b) {
        return nodes_[static_cast<size_t>(a)].action < nodes_[static_cast<size_t>(b)].action;
      });
    }
    for (int id = 0; id < num_nodes(); ++id)
      if (nodes_[static_cast<size_t>(id)].is_full) full_nodes_.push_back(id);
  }

  int num_actions_;
  std::vector<Transcript> transcripts_;
  std::vector<Node> nodes_;
  std::vector<int> full_nodes_;
  int min_len_ = 0, max_len_ = 0;
};

}  // namespace streamseg

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rpack/contention.hpp"
#include "rpack/pattern.hpp"

namespace rpack {

/// Timer-oriented DAG: edge x→y iff x and y contend and y is earlier, in (timer, id) order.
class ConflictGraph {
 public:
  static ConflictGraph from_edges(std::vector<std::int64_t> ids, std::vector<double> timers,
                                  const std::vector<std::pair<std::int64_t, std::int64_t>>& edges);

  std::size_t size() const { return ids_.size(); }
  std::size_t edge_count() const { return child_idx_.size(); }
  std::size_t ties() const { return ties_; }

  /// Out-neighbours (earlier contenders), ordered by timer.
  std::span<const std::uint32_t> children(std::uint32_t v) const {
    return {child_idx_.data() + child_off_[v], child_off_[v + 1] - child_off_[v]};
  }
  /// In-neighbours (later contenders).
  std::span<const std::uint32_t> parents(std::uint32_t v) const {
    return {parent_idx_.data() + parent_off_[v], parent_off_[v + 1] - parent_off_[v]};
  }

  std::int64_t id(std::uint32_t v) const { return ids_[v]; }
  double timer(std::uint32_t v) const { return timers_[v]; }
  std::uint32_t index_of(std::int64_t id) const;
  /// Vertices in increasing (timer, id) order.
  const std::vector<std::uint32_t>& order() const { return order_; }

 private:
  friend ConflictGraph build_conflict_graph(const TimedPattern&, const ContentionField&);
  void finalize(std::vector<std::pair<std::uint32_t, std::uint32_t>> undirected);

  std::vector<std::int64_t> ids_;
  std::vector<double> timers_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> rank_;
  std::vector<std::size_t> child_off_, parent_off_;
  std::vector<std::uint32_t> child_idx_, parent_idx_;
  std::size_t ties_ = 0;
};

ConflictGraph build_conflict_graph(const TimedPattern& pattern, const ContentionField& field);

/// Contending unordered index pairs of a pattern (grid search within the field cutoff).
std::vector<std::pair<std::uint32_t, std::uint32_t>> contending_pairs(const TimedPattern& pattern,
                                                                      const ContentionField& field);

/// K*(v) when `n` is empty, otherwise vertices reachable by directed paths of length ≤ n.
std::vector<std::int64_t> positive_component(const ConflictGraph& g, std::int64_t id,
                                             std::optional<int> n = std::nullopt);

std::vector<std::int64_t> undirected_cluster(const ConflictGraph& g, std::int64_t id);

/// |S(v)| for every vertex.
std::vector<std::size_t> cluster_sizes(const ConflictGraph& g);

/// e(K*(v), v), or the depth-limited unfolding of depth `depth`.
int conflict_indicator(const ConflictGraph& g, std::int64_t id,
                       std::optional<int> depth = std::nullopt);

/// e(H, v) for the subgraph H induced by `vertices` (ids); v must belong to it.
int conflict_indicator_induced(const ConflictGraph& g, const std::vector<std::int64_t>& vertices,
                               std::int64_t id);

/// e_0..e_K per vertex (graph index order) plus e_∞.
struct RetentionMarks {
  std::size_t n = 0;
  int K = 0;
  std::vector<std::uint8_t> e;     ///< (K+1)·n, row k holds e_k
  std::vector<std::uint8_t> einf;  ///< n

  std::uint8_t at(std::uint32_t v, int k) const {
    return e[static_cast<std::size_t>(k) * n + v];
  }
  std::vector<std::uint8_t> level(int k) const;
};

RetentionMarks matern_k(const ConflictGraph& g, int K);
RetentionMarks matern_k(const TimedPattern& pattern, const ContentionField& field, int K);

/// e_∞ by the fixed-point recursion over the DAG.
std::vector<std::uint8_t> matern_inf(const ConflictGraph& g);
/// e_∞ by the sequential scan: accept iff no accepted contender is earlier. Pattern index order.
std::vector<std::uint8_t> matern_inf(const TimedPattern& pattern, const ContentionField& field);

std::vector<std::uint8_t> matern_type1(const ConflictGraph& g);
std::vector<std::uint8_t> matern_type1(const TimedPattern& pattern, const ContentionField& field);

/// The pattern E^k_j as bits e_1..e_k.
std::vector<std::uint8_t> prefix_pattern(int k, int j);
/// j with prefix = E^k_j; throws InvariantViolation when no class matches.
int classify_prefix(std::span<const std::uint8_t> prefix);
std::vector<int> classify_prefix(const RetentionMarks& marks, int k);

/// Retained ids at level k (k = -1 selects e_∞).
std::vector<std::int64_t> retained_ids(const ConflictGraph& g, const RetentionMarks& marks, int k);

}  // namespace rpack

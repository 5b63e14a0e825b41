#include "rpack/packing.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "rpack/errors.hpp"
#include "rpack/neighbor_grid.hpp"

namespace rpack {

namespace {

constexpr std::size_t kBruteForceLimit = 48;

struct GridFrame {
  Box region;
  bool periodic;
};

GridFrame grid_frame(const TimedPattern& pattern, const ContentionField& field) {
  if (field.geometry()) {
    const auto& w = *field.geometry();
    return {w.region(), w.mode() == BoundaryMode::torus};
  }
  Box b;
  b.dim = pattern.window.dim();
  b.lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  b.hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& p : pattern.points)
    for (int a = 0; a < b.dim; ++a) {
      b.lo[a] = std::min(b.lo[a], p.pos[a]);
      b.hi[a] = std::max(b.hi[a], p.pos[a]);
    }
  for (int a = 0; a < b.dim; ++a) b.hi[a] = std::max(b.hi[a], b.lo[a] + 1.0);
  return {b, false};
}

}  // namespace

std::vector<std::pair<std::uint32_t, std::uint32_t>> contending_pairs(
    const TimedPattern& pattern, const ContentionField& field) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const auto& pts = pattern.points;
  const auto n = static_cast<std::uint32_t>(pts.size());
  if (n < 2 || field.cutoff() <= 0.0) return out;
  if (n <= kBruteForceLimit) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (field.contends(pts[i], pts[j])) out.emplace_back(i, j);
    return out;
  }
  const auto frame = grid_frame(pattern, field);
  NeighborGrid grid(frame.region, field.cutoff(), frame.periodic, n);
  for (std::uint32_t i = 0; i < n; ++i) grid.insert(i, pts[i].pos);
  for (std::uint32_t i = 0; i < n; ++i) {
    grid.for_each_near(pts[i].pos, [&](std::uint32_t j) {
      if (j > i && field.contends(pts[i], pts[j])) out.emplace_back(i, j);
    });
  }
  return out;
}

void ConflictGraph::finalize(std::vector<std::pair<std::uint32_t, std::uint32_t>> undirected) {
  const std::size_t n = ids_.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (timers_[a] != timers_[b]) return timers_[a] < timers_[b];
    return ids_[a] < ids_[b];
  });
  rank_.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) rank_[order_[r]] = static_cast<std::uint32_t>(r);
  ties_ = 0;
  for (std::size_t r = 1; r < n; ++r)
    if (timers_[order_[r]] == timers_[order_[r - 1]]) ++ties_;

  child_off_.assign(n + 1, 0);
  parent_off_.assign(n + 1, 0);
  for (auto& [a, b] : undirected) {
    if (rank_[a] < rank_[b]) std::swap(a, b);  // a is later: edge a→b
    ++child_off_[a + 1];
    ++parent_off_[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    child_off_[i + 1] += child_off_[i];
    parent_off_[i + 1] += parent_off_[i];
  }
  child_idx_.assign(undirected.size(), 0);
  parent_idx_.assign(undirected.size(), 0);
  std::vector<std::size_t> cfill(child_off_.begin(), child_off_.end() - 1);
  std::vector<std::size_t> pfill(parent_off_.begin(), parent_off_.end() - 1);
  for (const auto& [a, b] : undirected) {
    child_idx_[cfill[a]++] = b;
    parent_idx_[pfill[b]++] = a;
  }
  auto by_rank = [&](std::uint32_t x, std::uint32_t y) { return rank_[x] < rank_[y]; };
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(child_idx_.begin() + static_cast<std::ptrdiff_t>(child_off_[i]),
              child_idx_.begin() + static_cast<std::ptrdiff_t>(child_off_[i + 1]), by_rank);
    std::sort(parent_idx_.begin() + static_cast<std::ptrdiff_t>(parent_off_[i]),
              parent_idx_.begin() + static_cast<std::ptrdiff_t>(parent_off_[i + 1]), by_rank);
  }
}

ConflictGraph build_conflict_graph(const TimedPattern& pattern, const ContentionField& field) {
  ConflictGraph g;
  g.ids_.reserve(pattern.size());
  g.timers_.reserve(pattern.size());
  for (const auto& p : pattern.points) {
    g.ids_.push_back(p.id);
    g.timers_.push_back(p.timer);
  }
  g.finalize(contending_pairs(pattern, field));
  return g;
}

ConflictGraph ConflictGraph::from_edges(
    std::vector<std::int64_t> ids, std::vector<double> timers,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
  if (ids.size() != timers.size()) throw InvalidArgument("ids and timers differ in length");
  ConflictGraph g;
  g.ids_ = std::move(ids);
  g.timers_ = std::move(timers);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> und;
  for (const auto& [from, to] : edges) {
    const auto a = g.index_of(from);
    const auto b = g.index_of(to);
    const bool later = g.timers_[a] > g.timers_[b] ||
                       (g.timers_[a] == g.timers_[b] && g.ids_[a] > g.ids_[b]);
    if (!later) throw InvalidArgument("edge must point from a later to an earlier timer");
    und.emplace_back(a, b);
  }
  g.finalize(std::move(und));
  return g;
}

std::uint32_t ConflictGraph::index_of(std::int64_t id) const {
  const auto n = ids_.size();
  if (id >= 0 && static_cast<std::size_t>(id) < n && ids_[static_cast<std::size_t>(id)] == id)
    return static_cast<std::uint32_t>(id);
  for (std::size_t i = 0; i < n; ++i)
    if (ids_[i] == id) return static_cast<std::uint32_t>(i);
  throw InvalidArgument("unknown point id " + std::to_string(id));
}

std::vector<std::int64_t> positive_component(const ConflictGraph& g, std::int64_t id,
                                             std::optional<int> n) {
  const auto root = g.index_of(id);
  std::vector<int> dist(g.size(), -1);
  std::vector<std::uint32_t> queue{root};
  dist[root] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto v = queue[head];
    if (n && dist[v] >= *n) continue;
    for (auto c : g.children(v))
      if (dist[c] < 0) {
        dist[c] = dist[v] + 1;
        queue.push_back(c);
      }
  }
  std::vector<std::int64_t> out;
  for (auto v : queue) out.push_back(g.id(v));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int64_t> undirected_cluster(const ConflictGraph& g, std::int64_t id) {
  const auto root = g.index_of(id);
  std::vector<char> seen(g.size(), 0);
  std::vector<std::uint32_t> queue{root};
  seen[root] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto v = queue[head];
    for (auto span : {g.children(v), g.parents(v)})
      for (auto c : span)
        if (!seen[c]) {
          seen[c] = 1;
          queue.push_back(c);
        }
  }
  std::vector<std::int64_t> out;
  for (auto v : queue) out.push_back(g.id(v));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> cluster_sizes(const ConflictGraph& g) {
  const auto n = g.size();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::uint32_t v = 0; v < n; ++v)
    for (auto c : g.children(v)) {
      const auto a = find(v), b = find(c);
      if (a != b) parent[a] = b;
    }
  std::vector<std::size_t> count(n, 0);
  for (std::uint32_t v = 0; v < n; ++v) ++count[find(v)];
  std::vector<std::size_t> out(n);
  for (std::uint32_t v = 0; v < n; ++v) out[v] = count[find(v)];
  return out;
}

namespace {

/// Explicit-stack memoized e(·) with an optional depth and an optional vertex filter.
template <class Keep>
int indicator_impl(const ConflictGraph& g, std::uint32_t root, int depth, Keep keep) {
  if (depth == 0) return 1;
  struct Frame {
    std::uint32_t v;
    int d;
    std::size_t next;
    std::uint8_t acc;
  };
  std::unordered_map<std::uint64_t, std::uint8_t> memo;
  auto key = [](std::uint32_t v, int d) {
    return (static_cast<std::uint64_t>(v) << 32) | static_cast<std::uint32_t>(d + 1);
  };
  std::vector<Frame> stack{{root, depth, 0, 1}};
  std::uint8_t result = 1;
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto kids = g.children(f.v);
    while (f.next < kids.size() && f.acc == 1) {
      const auto c = kids[f.next];
      if (!keep(c)) {
        ++f.next;
        continue;
      }
      const int cd = f.d < 0 ? -1 : f.d - 1;
      std::uint8_t val;
      if (cd == 0) {
        val = 1;
      } else if (auto it = memo.find(key(c, cd)); it != memo.end()) {
        val = it->second;
      } else {
        stack.push_back({c, cd, 0, 1});
        goto next_frame;
      }
      ++f.next;
      if (val) f.acc = 0;
    }
    {
      const Frame done = f;
      memo[key(done.v, done.d)] = done.acc;
      stack.pop_back();
      if (stack.empty()) {
        result = done.acc;
      } else {
        Frame& p = stack.back();
        ++p.next;
        if (done.acc) p.acc = 0;
      }
    }
  next_frame:;
  }
  return result;
}

}  // namespace

int conflict_indicator(const ConflictGraph& g, std::int64_t id, std::optional<int> depth) {
  if (depth && *depth < 0) throw InvalidArgument("depth must be >= 0");
  return indicator_impl(g, g.index_of(id), depth ? *depth : -1, [](std::uint32_t) { return true; });
}

int conflict_indicator_induced(const ConflictGraph& g, const std::vector<std::int64_t>& vertices,
                               std::int64_t id) {
  std::vector<char> in(g.size(), 0);
  for (auto v : vertices) in[g.index_of(v)] = 1;
  const auto root = g.index_of(id);
  if (!in[root]) throw InvalidArgument("vertex is not part of the subgraph");
  return indicator_impl(g, root, -1, [&](std::uint32_t c) { return in[c] != 0; });
}

std::vector<std::uint8_t> RetentionMarks::level(int k) const {
  if (k < 0) return einf;
  return {e.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * n),
          e.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k + 1) * n)};
}

RetentionMarks matern_k(const ConflictGraph& g, int K) {
  if (K < 0) throw InvalidArgument("K must be >= 0");
  RetentionMarks m;
  m.n = g.size();
  m.K = K;
  m.e.assign(static_cast<std::size_t>(K + 1) * m.n, 1);
  for (auto v : g.order()) {
    for (int k = 1; k <= K; ++k) {
      std::uint8_t acc = 1;
      const std::size_t row = static_cast<std::size_t>(k - 1) * m.n;
      for (auto c : g.children(v))
        if (m.e[row + c]) {
          acc = 0;
          break;
        }
      m.e[static_cast<std::size_t>(k) * m.n + v] = acc;
    }
  }
  m.einf = matern_inf(g);
  return m;
}

RetentionMarks matern_k(const TimedPattern& pattern, const ContentionField& field, int K) {
  return matern_k(build_conflict_graph(pattern, field), K);
}

std::vector<std::uint8_t> matern_inf(const ConflictGraph& g) {
  std::vector<std::uint8_t> e(g.size(), 1);
  for (auto v : g.order())
    for (auto c : g.children(v))
      if (e[c]) {
        e[v] = 0;
        break;
      }
  return e;
}

std::vector<std::uint8_t> matern_inf(const TimedPattern& pattern, const ContentionField& field) {
  const auto& pts = pattern.points;
  const auto n = pts.size();
  std::vector<std::uint8_t> keep(n, 0);
  std::size_t ties = 0;
  const auto order = timer_order(pattern, &ties);
  if (field.cutoff() <= 0.0) {
    std::fill(keep.begin(), keep.end(), 1);
    return keep;
  }
  std::vector<std::uint32_t> accepted;
  if (n <= kBruteForceLimit) {
    for (auto i : order) {
      bool ok = true;
      for (auto j : accepted)
        if (field.contends(pts[i], pts[j])) {
          ok = false;
          break;
        }
      if (ok) {
        keep[i] = 1;
        accepted.push_back(i);
      }
    }
    return keep;
  }
  const auto frame = grid_frame(pattern, field);
  NeighborGrid grid(frame.region, field.cutoff(), frame.periodic, n);
  for (auto i : order) {
    bool ok = true;
    grid.for_each_near(pts[i].pos, [&](std::uint32_t j) {
      if (ok && field.contends(pts[i], pts[j])) ok = false;
    });
    if (ok) {
      keep[i] = 1;
      grid.insert(i, pts[i].pos);
    }
  }
  return keep;
}

std::vector<std::uint8_t> matern_type1(const ConflictGraph& g) {
  std::vector<std::uint8_t> e(g.size(), 0);
  for (std::uint32_t v = 0; v < g.size(); ++v)
    e[v] = g.children(v).empty() && g.parents(v).empty();
  return e;
}

std::vector<std::uint8_t> matern_type1(const TimedPattern& pattern, const ContentionField& field) {
  std::vector<std::uint8_t> e(pattern.size(), 1);
  for (const auto& [a, b] : contending_pairs(pattern, field)) e[a] = e[b] = 0;
  return e;
}

std::vector<std::uint8_t> prefix_pattern(int k, int j) {
  if (k < 0 || j < 0 || j > k) throw InvalidArgument("prefix class index out of range");
  std::vector<std::uint8_t> p;
  if (j <= k / 2) {
    for (int i = 0; i < j; ++i) p.insert(p.end(), {0, 1});
    p.insert(p.end(), static_cast<std::size_t>(k - 2 * j), 0);
  } else {
    for (int i = 0; i < k - j; ++i) p.insert(p.end(), {0, 1});
    p.insert(p.end(), static_cast<std::size_t>(2 * j - k), 1);
  }
  return p;
}

int classify_prefix(std::span<const std::uint8_t> prefix) {
  const int k = static_cast<int>(prefix.size());
  int j = 0;
  for (auto b : prefix) j += b ? 1 : 0;
  const auto expect = prefix_pattern(k, j);
  if (!std::equal(prefix.begin(), prefix.end(), expect.begin())) {
    std::string s;
    for (auto b : prefix) s += b ? '1' : '0';
    throw InvariantViolation("retention prefix " + s + " matches no class");
  }
  return j;
}

std::vector<int> classify_prefix(const RetentionMarks& marks, int k) {
  if (k < 0 || k > marks.K) throw InvalidArgument("class level exceeds computed order");
  std::vector<int> out(marks.n);
  std::vector<std::uint8_t> prefix(static_cast<std::size_t>(k));
  for (std::uint32_t v = 0; v < marks.n; ++v) {
    for (int i = 1; i <= k; ++i) prefix[static_cast<std::size_t>(i - 1)] = marks.at(v, i);
    out[v] = classify_prefix(prefix);
  }
  return out;
}

std::vector<std::int64_t> retained_ids(const ConflictGraph& g, const RetentionMarks& marks,
                                       int k) {
  std::vector<std::int64_t> out;
  for (std::uint32_t v = 0; v < g.size(); ++v)
    if (k < 0 ? marks.einf[v] : marks.at(v, k)) out.push_back(g.id(v));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rpack

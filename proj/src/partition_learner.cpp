#include "rankprobe/partition_learner.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "rankprobe/errors.hpp"

namespace rankprobe {

MergeOutcome merge(std::span<const ElementId> i1, std::span<const ElementId> i2,
                   RankSource& oracle, const MergeOptions& options) {
  const auto start = oracle.ledger().rank_count();
  MergeOutcome out;

  std::vector<ElementId> buf;
  auto sum_over = [&](std::span<const ElementId> side, std::span<const ElementId> other) {
    return [&oracle, &buf, side, other](std::span<const std::uint32_t> idx) {
      buf.resize(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = side[idx[k]];
      return sum_query_sim(oracle, buf, other);
    };
  };

  const auto com1 = [&] {
    PinScope pin(oracle, i2);
    return weighing::recover_sparse(i1.size(), sum_over(i1, i2), options.sparse);
  }();
  const auto d = com1.support.size();
  std::vector<ElementId> x, y;
  if (d > 0) {
    auto sparse = options.sparse;
    sparse.known_total = static_cast<std::int64_t>(d);
    PinScope pin(oracle, i1);
    const auto com2 = weighing::recover_sparse(i2.size(), sum_over(i2, i1), sparse);
    if (com2.support.size() != d)
      throw InvariantViolation("com(I1,I2) and com(I2,I1) differ in size (" + std::to_string(d) +
                               " vs " + std::to_string(com2.support.size()) + ")");
    for (auto k : com1.support) x.push_back(i1[k]);
    for (auto k : com2.support) y.push_back(i2[k]);
  }
  out.discovery_queries = oracle.ledger().rank_count() - start;

  if (d > 0) {
    const auto matching = weighing::recover_matching(
        x, y,
        [&oracle, last = std::span<const ElementId>{}, pinned = std::span<const ElementId>{}](
            std::span<const ElementId> a, std::span<const ElementId> b) mutable {
          auto same = [](std::span<const ElementId> u, std::span<const ElementId> v) {
            return u.data() == v.data() && u.size() == v.size();
          };
          // a repeated second operand is worth indexing once
          if (!b.empty() && !same(b, pinned) && same(b, last)) {
            oracle.pin(b);
            pinned = b;
          }
          last = b;
          return add_query_sim(oracle, a, b);
        },
        options.matching);
    oracle.unpin();
    out.removed_with_reps = matching.pairs;
  }

  out.merged.reserve(i1.size() + i2.size() - d);
  std::size_t next = 0;
  for (std::size_t k = 0; k < i1.size(); ++k) {
    if (next < com1.support.size() && com1.support[next] == k) {
      ++next;
      continue;
    }
    out.merged.push_back(i1[k]);
  }
  out.merged.insert(out.merged.end(), i2.begin(), i2.end());
  std::sort(out.merged.begin(), out.merged.end());

  out.rank_queries = oracle.ledger().rank_count() - start;
  out.matching_queries = out.rank_queries - out.discovery_queries;
  return out;
}

// ---------------------------------------------------------------------------

void RepForest::add_edge(ElementId e, ElementId rep) {
  if (e >= parent_.size() || rep >= parent_.size())
    throw InvariantViolation("rep edge endpoint out of range");
  if (parent_[e] != kNoParent)
    throw InvariantViolation("element " + std::to_string(e) + " already has a representative");
  if (e == rep) throw InvariantViolation("an element cannot represent itself");
  parent_[e] = rep;
}

std::vector<std::pair<ElementId, ElementId>> RepForest::edges() const {
  std::vector<std::pair<ElementId, ElementId>> out;
  for (std::size_t e = 0; e < parent_.size(); ++e)
    if (parent_[e] != kNoParent) out.emplace_back(static_cast<ElementId>(e), parent_[e]);
  return out;
}

std::vector<ElementId> RepForest::roots() const {
  std::vector<ElementId> out;
  for (std::size_t e = 0; e < parent_.size(); ++e)
    if (parent_[e] == kNoParent) out.push_back(static_cast<ElementId>(e));
  return out;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), ElementId{0});
  }
  ElementId find(ElementId v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  void unite(ElementId a, ElementId b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<ElementId> parent_;
  std::vector<std::size_t> size_;
};

Partition group(UnionFind& uf, std::size_t n) {
  std::vector<std::uint32_t> slot(n, ~std::uint32_t{0});
  Partition parts;
  for (std::size_t e = 0; e < n; ++e) {
    const auto root = uf.find(static_cast<ElementId>(e));
    if (slot[root] == ~std::uint32_t{0}) {
      slot[root] = static_cast<std::uint32_t>(parts.size());
      parts.emplace_back();
    }
    parts[slot[root]].push_back(static_cast<ElementId>(e));
  }
  canonicalize(parts);
  return parts;
}

}  // namespace

Partition components(const RepForest& forest) {
  UnionFind uf(forest.size());
  for (std::size_t e = 0; e < forest.size(); ++e)
    if (!forest.is_root(static_cast<ElementId>(e)))
      uf.unite(static_cast<ElementId>(e), forest.parent(static_cast<ElementId>(e)));
  return group(uf, forest.size());
}

Partition components(std::size_t n, std::span<const std::pair<ElementId, ElementId>> edges) {
  RepForest forest(n);
  for (const auto& [e, rep] : edges) forest.add_edge(e, rep);
  return components(forest);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t size_class(std::size_t size) { return static_cast<std::size_t>(std::bit_width(size)) - 1; }

class Collection {
 public:
  explicit Collection(std::size_t n) : buckets_(n == 0 ? 1 : size_class(n) + 1) {}

  void insert(IndependentSet s) {
    const auto t = size_class(s.size());
    buckets_[t].push_back(std::move(s));
    ++count_;
  }

  // Lowest class holding at least two sets, or -1.
  int crowded_class() const {
    for (std::size_t t = 0; t < buckets_.size(); ++t)
      if (buckets_[t].size() >= 2) return static_cast<int>(t);
    return -1;
  }

  IndependentSet take_latest(std::size_t t) {
    auto s = std::move(buckets_[t].back());
    buckets_[t].pop_back();
    --count_;
    return s;
  }

  std::size_t count() const { return count_; }

  std::vector<IndependentSet> drain() {
    std::vector<IndependentSet> all;
    for (auto& b : buckets_)
      for (auto& s : b) all.push_back(std::move(s));
    buckets_.assign(buckets_.size(), {});
    count_ = 0;
    return all;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& b : buckets_)
      for (const auto& s : b) f(s);
  }

 private:
  std::vector<std::vector<IndependentSet>> buckets_;
  std::size_t count_ = 0;
};

struct Runner {
  RankSource& oracle;
  const FindPartitionOptions& options;
  PartitionRun& run;

  IndependentSet merge_into(std::span<const ElementId> i1, std::span<const ElementId> i2,
                            PhaseRecord& phase) {
    auto outcome = merge(i1, i2, oracle, options.merge);
    for (const auto& [e, rep] : outcome.removed_with_reps) run.forest.add_edge(e, rep);

    MergeRecord rec;
    rec.phase = phase.phase;
    rec.smaller = std::min(i1.size(), i2.size());
    rec.larger = std::max(i1.size(), i2.size());
    rec.common = outcome.removed_with_reps.size();
    rec.rank_queries = outcome.rank_queries;
    rec.matching_queries = outcome.matching_queries;
    rec.size_class = size_class(rec.smaller);
    rec.thick = rec.common * rec.common >= rec.smaller;
    run.merges.push_back(rec);

    ++phase.merges;
    if (rec.thick) ++phase.thick_merges;
    phase.rank_queries += outcome.rank_queries;

    if (options.audit) audit_set(outcome.merged);
    return std::move(outcome.merged);
  }

  void audit_set(const IndependentSet& s) {
    if (oracle.audit_rank(s) != static_cast<std::int64_t>(s.size()))
      throw InvariantViolation("merged set is not independent");
  }

  void audit_cover(const Collection& held) {
    const auto n = oracle.universe_size();
    std::vector<char> seen(n, 0);
    std::size_t covered = 0;
    auto mark = [&](ElementId e) {
      if (seen[e]) throw InvariantViolation("element held twice");
      seen[e] = 1;
      ++covered;
    };
    held.for_each([&](const IndependentSet& s) {
      for (auto e : s) mark(e);
    });
    for (std::size_t e = 0; e < n; ++e)
      if (!run.forest.is_root(static_cast<ElementId>(e))) mark(static_cast<ElementId>(e));
    if (covered != n) throw InvariantViolation("held sets and forest do not cover the universe");
  }
};

}  // namespace

PartitionRun find_partition(RankSource& oracle, const FindPartitionOptions& options) {
  const auto n = oracle.universe_size();
  PartitionRun run;
  run.forest = RepForest(n);
  Runner runner{oracle, options, run};

  Collection held(n);
  for (std::size_t e = 0; e < n; ++e) held.insert({static_cast<ElementId>(e)});

  PhaseRecord pairwise{"pairwise-merge"};
  {
    PhaseScope scope(oracle.ledger(), pairwise.phase);
    for (int t = held.crowded_class(); t >= 0; t = held.crowded_class()) {
      auto i1 = held.take_latest(static_cast<std::size_t>(t));
      auto i2 = held.take_latest(static_cast<std::size_t>(t));
      held.insert(runner.merge_into(i1, i2, pairwise));
    }
  }
  run.survivors = held.count();
  const auto survivor_bound = n == 0 ? 0 : size_class(n) + 1;
  if (run.survivors > survivor_bound)
    throw InvariantViolation("pairwise phase left " + std::to_string(run.survivors) +
                             " sets, more than floor(log2 n) + 1");
  if (options.audit) runner.audit_cover(held);

  PhaseRecord fold{"final-fold"};
  {
    PhaseScope scope(oracle.ledger(), fold.phase);
    auto survivors = held.drain();
    std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() < b.size() : a.front() < b.front();
    });
    if (!survivors.empty()) {
      IndependentSet acc = std::move(survivors.front());
      for (std::size_t t = 1; t < survivors.size(); ++t)
        acc = runner.merge_into(survivors[t], acc, fold);
      run.basis = std::move(acc);
    }
  }

  run.phases = {pairwise, fold};
  run.parts = components(run.forest);
  return run;
}

}  // namespace rankprobe

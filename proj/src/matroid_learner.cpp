#include "rankprobe/matroid_learner.hpp"

#include <algorithm>
#include <string>

#include "rankprobe/errors.hpp"

namespace rankprobe {
namespace {

class StageTimer {
 public:
  StageTimer(RankOracle& oracle, std::string stage, std::vector<StageRecord>& out)
      : oracle_(oracle), scope_(oracle.ledger(), stage), out_(out), start_(oracle.ledger().totals()) {
    record_.stage = std::move(stage);
  }
  ~StageTimer() {
    const auto& now = oracle_.ledger().totals();
    record_.rank_queries = now.rank - start_.rank;
    record_.independence_queries = now.independence - start_.independence;
    out_.push_back(record_);
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  RankOracle& oracle_;
  PhaseScope scope_;
  std::vector<StageRecord>& out_;
  QueryCounts start_;
  StageRecord record_;
};

std::vector<ElementId> complement(std::size_t n, std::span<const ElementId> sorted) {
  std::vector<ElementId> out;
  out.reserve(n - sorted.size());
  std::size_t k = 0;
  for (std::size_t e = 0; e < n; ++e) {
    if (k < sorted.size() && sorted[k] == e) {
      ++k;
      continue;
    }
    out.push_back(static_cast<ElementId>(e));
  }
  return out;
}

// True iff base - removed + added keeps the rank of base - removed, i.e. the
// added element's part is already full there.
bool rank_unchanged(RankOracle& oracle, const Anchor& base, std::span<const ElementId> removed,
                    ElementId added, QueryKind kind) {
  const auto without = static_cast<std::int64_t>(base.size() - removed.size());
  const ElementId add[1] = {added};
  if (kind == QueryKind::independence) return !oracle.is_independent(base, removed, add);
  return oracle.rank(base, removed, add) == without;
}

}  // namespace

Basis find_basis(RankOracle& oracle, QueryKind kind) {
  const auto n = oracle.universe_size();
  Basis basis;
  auto anchor = oracle.make_anchor({});
  for (std::size_t v = 0; v < n; ++v) {
    const ElementId add[1] = {static_cast<ElementId>(v)};
    const bool grows = kind == QueryKind::independence
                           ? oracle.is_independent(anchor, {}, add)
                           : oracle.rank(anchor, {}, add) == static_cast<std::int64_t>(anchor.size()) + 1;
    if (grows) {
      anchor.insert(add[0]);
      basis.members.push_back(add[0]);
    }
  }
  return basis;
}

RepresentativePair find_representatives(RankOracle& oracle, const Basis& basis, QueryKind kind,
                                        bool audit) {
  const auto n = oracle.universe_size();
  const auto& b = basis.members;
  const auto anchor = oracle.make_anchor(b);
  RepresentativePair reps;
  for (auto e : complement(n, b)) {
    if (!rank_unchanged(oracle, anchor, reps.t1, e, kind)) continue;
    // e's part has no representative yet; halve B down to one friend of e.
    std::size_t lo = 0;
    std::size_t hi = b.size();
    while (hi - lo > 1) {
      const auto mid = lo + (hi - lo + 1) / 2;
      const std::span<const ElementId> upper(b.data() + mid, hi - mid);
      if (rank_unchanged(oracle, anchor, upper, e, kind)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    if (lo >= b.size()) throw InvariantViolation("empty basis while a part is unrepresented");
    if (audit && !oracle.audit_same_part(b[lo], e))
      throw InvariantViolation("representative search ended on a non-friend");
    reps.t1.push_back(b[lo]);
    reps.t2.push_back(e);
  }
  return reps;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ElementId> sorted_union(std::span<const ElementId> a, std::span<const ElementId> b) {
  std::vector<ElementId> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

InsideBasisSource::InsideBasisSource(RankOracle& oracle, std::span<const ElementId> basis,
                                     std::span<const ElementId> t2)
    : oracle_(oracle),
      basis_(basis.begin(), basis.end()),
      anchor_(oracle.make_anchor(sorted_union(basis, t2))) {}

std::int64_t InsideBasisSource::evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                                         QueryKind kind) {
  buf_.clear();
  for (auto v : a) buf_.push_back(basis_.at(v));
  for (auto v : b) buf_.push_back(basis_.at(v));
  const auto r = oracle_.rank(anchor_, buf_, {}, kind);
  return r - static_cast<std::int64_t>(basis_.size() - buf_.size());
}

OutsideBasisSource::OutsideBasisSource(RankOracle& oracle, std::span<const ElementId> basis,
                                       std::span<const ElementId> t1)
    : oracle_(oracle),
      outside_(complement(oracle.universe_size(), basis)),
      anchor_(oracle.make_anchor(basis)),
      offset_(static_cast<std::int64_t>(basis.size() - t1.size())) {
  for (auto t : t1) anchor_.erase(t);
}

std::int64_t OutsideBasisSource::evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                                          QueryKind kind) {
  buf_.clear();
  for (auto v : a) buf_.push_back(outside_.at(v));
  for (auto v : b) buf_.push_back(outside_.at(v));
  return oracle_.rank(anchor_, {}, buf_, kind) - offset_;
}

// ---------------------------------------------------------------------------

namespace {

LearnedMatroid stitch(std::size_t n, const Partition& inside, const Partition& outside,
                      const RepresentativePair& reps) {
  constexpr auto unset = ~std::uint32_t{0};
  std::vector<std::uint32_t> inside_of(n, unset), outside_of(n, unset);
  for (std::size_t i = 0; i < inside.size(); ++i)
    for (auto e : inside[i]) inside_of[e] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < outside.size(); ++i)
    for (auto e : outside[i]) outside_of[e] = static_cast<std::uint32_t>(i);

  if (reps.t1.size() != inside.size() || reps.t2.size() != outside.size())
    throw InvariantViolation("representatives do not hit every learned part exactly once");
  std::vector<std::uint32_t> partner(inside.size(), unset);
  std::vector<char> used(outside.size(), 0);
  for (std::size_t k = 0; k < reps.t1.size(); ++k) {
    const auto pi = inside_of[reps.t1[k]];
    const auto po = outside_of[reps.t2[k]];
    if (pi == unset || po == unset || partner[pi] != unset || used[po])
      throw InvariantViolation("representatives do not hit every learned part exactly once");
    partner[pi] = po;
    used[po] = 1;
  }

  LearnedMatroid m;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    Part p = inside[i];
    const auto& o = outside[partner[i]];
    p.insert(p.end(), o.begin(), o.end());
    m.parts.push_back(std::move(p));
    m.capacities.push_back(static_cast<std::int64_t>(inside[i].size()));
  }
  canonicalize(m.parts, m.capacities);
  return m;
}

Partition to_global(const Partition& local, const auto& source) {
  Partition out;
  out.reserve(local.size());
  for (const auto& part : local) {
    Part g;
    g.reserve(part.size());
    for (auto v : part) g.push_back(source.global(v));
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

MatroidRun learn_matroid_with_reps(RankOracle& oracle, const Basis& basis,
                                   const RepresentativePair& reps, const MatroidOptions& options) {
  const auto n = oracle.universe_size();
  MatroidRun run;
  run.basis = basis;
  run.reps = reps;
  if (n > 0 && basis.members.size() == n)
    throw UsageError("every part needs an element outside the basis");

  Partition inside, outside;
  {
    StageTimer stage(oracle, "inside-basis", run.stages);
    InsideBasisSource source(oracle, basis.members, reps.t2);
    run.inside = find_partition(source, options.partition);
    inside = to_global(run.inside.parts, source);
  }
  {
    StageTimer stage(oracle, "outside-basis", run.stages);
    OutsideBasisSource source(oracle, basis.members, reps.t1);
    run.outside = find_partition(source, options.partition);
    outside = to_global(run.outside.parts, source);
  }
  {
    StageTimer stage(oracle, "stitch", run.stages);
    run.result = stitch(n, inside, outside, reps);
  }
  return run;
}

MatroidRun learn_partition_matroid(RankOracle& oracle, const MatroidOptions& options) {
  std::vector<StageRecord> stages;
  Basis basis;
  RepresentativePair reps;
  {
    StageTimer stage(oracle, "basis", stages);
    basis = find_basis(oracle, QueryKind::rank);
  }
  {
    StageTimer stage(oracle, "representatives", stages);
    reps = find_representatives(oracle, basis, QueryKind::rank, options.audit);
  }
  auto run = learn_matroid_with_reps(oracle, basis, reps, options);
  stages.insert(stages.end(), run.stages.begin(), run.stages.end());
  run.stages = std::move(stages);
  return run;
}

// ---------------------------------------------------------------------------

namespace {

// Finds every element of `pool` lying in the part probed by `hits`, where
// hits(Q) reports whether Q meets that part. Binary splitting, lower half first.
template <typename Hits>
void group_test(std::span<const ElementId> pool, bool known_hit, Hits& hits,
                std::vector<ElementId>& found) {
  if (pool.empty()) return;
  if (!known_hit && !hits(pool)) return;
  if (pool.size() == 1) {
    found.push_back(pool[0]);
    return;
  }
  const auto mid = (pool.size() + 1) / 2;
  const auto lower = pool.subspan(0, mid);
  const auto upper = pool.subspan(mid);
  if (hits(lower)) {
    group_test(lower, true, hits, found);
    group_test(upper, false, hits, found);
  } else {
    group_test(upper, true, hits, found);
  }
}

}  // namespace

MatroidRun baseline_independence_learner(RankOracle& oracle, const MatroidOptions& options) {
  const auto n = oracle.universe_size();
  MatroidRun run;
  {
    StageTimer stage(oracle, "basis", run.stages);
    run.basis = find_basis(oracle, QueryKind::independence);
  }
  {
    StageTimer stage(oracle, "representatives", run.stages);
    run.reps = find_representatives(oracle, run.basis, QueryKind::independence, options.audit);
  }
  const auto& b = run.basis.members;
  const auto& t1 = run.reps.t1;
  const auto& t2 = run.reps.t2;
  const auto k = t1.size();
  if (n > 0 && b.size() == n) throw UsageError("every part needs an element outside the basis");

  // Part index i <-> (t1[i], t2[i]); order parts by their T1 element so the
  // halving below splits by ascending id.
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return t1[x] < t1[y]; });
  std::vector<ElementId> t1_sorted(k);
  for (std::size_t i = 0; i < k; ++i) t1_sorted[i] = t1[order[i]];

  std::vector<std::vector<ElementId>> members(k);
  for (std::size_t i = 0; i < k; ++i) {
    members[i].push_back(t1[order[i]]);
    members[i].push_back(t2[order[i]]);
  }
  const auto anchor = oracle.make_anchor(b);

  {
    StageTimer stage(oracle, "outside-basis", run.stages);
    std::vector<char> is_t2(n, 0);
    for (auto e : t2) is_t2[e] = 1;
    for (auto e : complement(n, b)) {
      if (is_t2[e]) continue;
      std::size_t lo = 0;
      std::size_t hi = k;
      const ElementId add[1] = {e};
      while (hi - lo > 1) {
        const auto mid = lo + (hi - lo + 1) / 2;
        const std::span<const ElementId> lower(t1_sorted.data() + lo, mid - lo);
        // Removing e's T1 friend frees a slot for e.
        if (oracle.is_independent(anchor, lower, add)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (k == 0) throw InvariantViolation("no representatives while elements remain outside the basis");
      if (options.audit && !oracle.audit_same_part(t1_sorted[lo], e))
        throw InvariantViolation("halving search ended on a non-friend");
      members[lo].push_back(e);
    }
  }

  {
    StageTimer stage(oracle, "inside-basis", run.stages);
    std::vector<char> is_t1(n, 0);
    for (auto e : t1) is_t1[e] = 1;
    std::vector<ElementId> pool;
    for (auto e : b)
      if (!is_t1[e]) pool.push_back(e);
    for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
      if (i + 1 == k) {
        members[i].insert(members[i].end(), pool.begin(), pool.end());
        pool.clear();
        break;
      }
      const ElementId add[1] = {t2[order[i]]};
      // B - Q + phi(t) is independent iff Q meets t's part.
      auto hits = [&](std::span<const ElementId> q) { return oracle.is_independent(anchor, q, add); };
      std::vector<ElementId> found;
      group_test(pool, false, hits, found);
      if (options.audit)
        for (auto e : found)
          if (!oracle.audit_same_part(e, t1_sorted[i]))
            throw InvariantViolation("group test assigned a non-friend");
      members[i].insert(members[i].end(), found.begin(), found.end());
      std::vector<ElementId> rest;
      std::set_difference(pool.begin(), pool.end(), found.begin(), found.end(), std::back_inserter(rest));
      pool = std::move(rest);
    }
    if (!pool.empty()) throw InvariantViolation("basis elements left without a part");
  }

  {
    StageTimer stage(oracle, "stitch", run.stages);
    std::vector<char> in_basis(n, 0);
    for (auto e : b) in_basis[e] = 1;
    for (auto& p : members) {
      std::int64_t cap = 0;
      for (auto e : p) cap += in_basis[e];
      run.result.parts.push_back(p);
      run.result.capacities.push_back(cap);
    }
    canonicalize(run.result.parts, run.result.capacities);
  }
  return run;
}

MatroidRun baseline_simple_partition(RankOracle& oracle, const MatroidOptions& options) {
  const auto n = oracle.universe_size();
  MatroidRun run;
  {
    StageTimer stage(oracle, "basis", run.stages);
    run.basis = find_basis(oracle, QueryKind::independence);
  }
  const auto& r = run.basis.members;
  std::vector<std::vector<ElementId>> members;
  for (auto t : r) members.push_back({t});
  {
    StageTimer stage(oracle, "outside-basis", run.stages);
    const auto anchor = oracle.make_anchor(r);
    for (auto e : complement(n, r)) {
      if (r.empty()) throw InvariantViolation("no representatives while elements remain");
      std::size_t lo = 0;
      std::size_t hi = r.size();
      const ElementId add[1] = {e};
      while (hi - lo > 1) {
        const auto mid = lo + (hi - lo + 1) / 2;
        const std::span<const ElementId> lower(r.data() + lo, mid - lo);
        if (oracle.is_independent(anchor, lower, add)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (options.audit && !oracle.audit_same_part(r[lo], e))
        throw InvariantViolation("halving search ended on a non-friend");
      members[lo].push_back(e);
    }
  }
  for (auto& p : members) {
    std::sort(p.begin(), p.end());
    run.result.parts.push_back(std::move(p));
    run.result.capacities.push_back(1);
  }
  canonicalize(run.result.parts, run.result.capacities);
  return run;
}

}  // namespace rankprobe

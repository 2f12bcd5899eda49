#pragma once

// Hidden ground-truth partitions, the rank / independence oracles answering
// from them, and the ledger that counts every oracle call.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rankprobe {

// Dense element index; a universe of size n uses exactly 0..n-1.
using ElementId = std::uint32_t;

using Part = std::vector<ElementId>;
using Partition = std::vector<Part>;

// Sorts every part and orders parts by their minimum element.
void canonicalize(Partition& parts);

// Sorts parts as canonicalize() does and carries `capacities` along.
void canonicalize(Partition& parts, std::vector<std::int64_t>& capacities);

class HiddenPartition {
 public:
  HiddenPartition() = default;
  // Throws UsageError unless `parts` are nonempty, pairwise disjoint and cover
  // 0..n-1. The stored parts are canonical.
  HiddenPartition(std::size_t n, Partition parts);

  std::size_t size() const { return n_; }
  std::size_t part_count() const { return parts_.size(); }
  const Partition& parts() const { return parts_; }
  std::uint32_t part_of(ElementId e) const { return part_of_[e]; }
  bool same_part(ElementId a, ElementId b) const { return part_of_[a] == part_of_[b]; }

  friend bool operator==(const HiddenPartition& a, const HiddenPartition& b) {
    return a.n_ == b.n_ && a.parts_ == b.parts_;
  }

 private:
  std::size_t n_ = 0;
  Partition parts_;
  std::vector<std::uint32_t> part_of_;
};

// Partition matroid: at most capacities[i] elements of part i are independent.
class CapacitatedPartition {
 public:
  CapacitatedPartition() = default;
  // `capacities` is aligned with `parts` as given. Requires 1 <= r_i < |P_i|.
  CapacitatedPartition(std::size_t n, Partition parts, std::vector<std::int64_t> capacities);

  const HiddenPartition& base() const { return base_; }
  std::size_t size() const { return base_.size(); }
  std::size_t part_count() const { return base_.part_count(); }
  const Partition& parts() const { return base_.parts(); }
  // Aligned with parts().
  const std::vector<std::int64_t>& capacities() const { return capacities_; }
  std::int64_t total_rank() const;

  friend bool operator==(const CapacitatedPartition& a, const CapacitatedPartition& b) {
    return a.base_ == b.base_ && a.capacities_ == b.capacities_;
  }

 private:
  HiddenPartition base_;
  std::vector<std::int64_t> capacities_;
};

enum class QueryKind { rank, independence, audit };

struct QueryCounts {
  std::int64_t rank = 0;
  std::int64_t independence = 0;
  std::int64_t audit = 0;

  friend bool operator==(const QueryCounts&, const QueryCounts&) = default;
};

// Per-kind oracle call counters, optionally broken down by a stack of phase
// labels ("inside-basis/pairwise-merge"). Counters only ever grow.
class QueryLedger {
 public:
  QueryLedger() = default;
  QueryLedger(const QueryLedger& other);
  QueryLedger& operator=(const QueryLedger& other);

  std::int64_t rank_count() const { return totals_.rank; }
  std::int64_t independence_count() const { return totals_.independence; }
  std::int64_t audit_count() const { return totals_.audit; }
  const QueryCounts& totals() const { return totals_; }
  const std::map<std::string, QueryCounts>& per_phase() const { return per_phase_; }

  // Sum of all phase entries whose key equals `prefix` or starts with "prefix/".
  QueryCounts phase_total(std::string_view prefix) const;

  void charge(QueryKind kind, std::int64_t amount = 1);

  void push_phase(std::string_view label);
  void pop_phase();
  const std::string& current_phase() const { return current_key_; }

  // Equality ignores the active phase stack.
  friend bool operator==(const QueryLedger& a, const QueryLedger& b) {
    return a.totals_ == b.totals_ && a.per_phase_ == b.per_phase_;
  }

 private:
  void refresh_current();

  QueryCounts totals_;
  std::map<std::string, QueryCounts> per_phase_;
  std::vector<std::string> stack_;
  std::string current_key_;
  QueryCounts* current_ = nullptr;
};

class PhaseScope {
 public:
  PhaseScope(QueryLedger& ledger, std::string_view label) : ledger_(ledger) {
    ledger_.push_phase(label);
  }
  ~PhaseScope() { ledger_.pop_phase(); }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  QueryLedger& ledger_;
};

// Anything that answers simple-partition rank queries over 0..size()-1 and
// charges its answers to a ledger. Queries take the disjoint union of two
// spans so callers never have to concatenate.
class RankSource {
 public:
  virtual ~RankSource() = default;

  virtual std::size_t universe_size() const = 0;
  virtual QueryLedger& ledger() = 0;

  std::int64_t rank(std::span<const ElementId> a, std::span<const ElementId> b = {}) {
    return evaluate(a, b, QueryKind::rank);
  }
  // Same answer as rank(), charged to the audit counter.
  std::int64_t audit_rank(std::span<const ElementId> a, std::span<const ElementId> b = {}) {
    return evaluate(a, b, QueryKind::audit);
  }

  // Hint: upcoming queries pass exactly this span (same storage) as `b`, so a
  // source may index it once. Answers and charges are unaffected.
  virtual void pin(std::span<const ElementId> b) { (void)b; }
  virtual void unpin() {}

 protected:
  // Must charge exactly one query of `kind`.
  virtual std::int64_t evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                                QueryKind kind) = 0;
};

class PinScope {
 public:
  PinScope(RankSource& source, std::span<const ElementId> b) : source_(source) { source_.pin(b); }
  ~PinScope() { source_.unpin(); }
  PinScope(const PinScope&) = delete;
  PinScope& operator=(const PinScope&) = delete;

 private:
  RankSource& source_;
};

class RankOracle;

// A set registered with an oracle so that queries of the form
// (base - removed + added) are evaluated in time proportional to the edit.
// Holds no answer a learner could read for free.
class Anchor {
 public:
  std::size_t size() const { return size_; }
  bool contains(ElementId e) const { return e < member_.size() && member_[e] != 0; }
  void insert(ElementId e);
  void erase(ElementId e);

 private:
  friend class RankOracle;
  Anchor() = default;

  const RankOracle* owner_ = nullptr;
  std::vector<std::int64_t> counts_;  // per part
  std::vector<char> member_;
  std::int64_t rank_ = 0;
  std::size_t size_ = 0;
};

// Rank oracle over a (possibly capacitated) hidden partition:
// rank(S) = sum_i min(|S ∩ P_i|, r_i), with r_i = 1 for a plain partition.
// Not thread-safe; use one oracle per learner run.
class RankOracle final : public RankSource {
 public:
  explicit RankOracle(const HiddenPartition& partition);
  explicit RankOracle(const CapacitatedPartition& partition);

  std::size_t universe_size() const override { return part_of_.size(); }
  QueryLedger& ledger() override { return ledger_; }
  const QueryLedger& ledger() const { return ledger_; }

  // rank(S) == |S|, charged as one independence query.
  bool is_independent(std::span<const ElementId> s);

  Anchor make_anchor(std::span<const ElementId> base) const;

  // rank(base - removed + added). `removed` must lie inside the anchor and
  // `added` outside it.
  std::int64_t rank(const Anchor& base, std::span<const ElementId> removed,
                    std::span<const ElementId> added, QueryKind kind = QueryKind::rank);
  bool is_independent(const Anchor& base, std::span<const ElementId> removed,
                      std::span<const ElementId> added);

  using RankSource::rank;

  void pin(std::span<const ElementId> b) override;
  void unpin() override { pinned_ = {}; }

  // Ground-truth check for audit mode; charged to the audit counter.
  bool audit_same_part(ElementId a, ElementId b);

 protected:
  std::int64_t evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                        QueryKind kind) override;

 private:
  friend class Anchor;

  void check_element(ElementId e) const;
  std::uint32_t next_epoch();

  std::vector<std::uint32_t> part_of_;
  std::vector<std::int64_t> capacity_;
  QueryLedger ledger_;

  // Scratch, stamped per query.
  std::vector<std::uint32_t> part_stamp_;
  std::vector<std::int64_t> part_count_;
  std::vector<std::uint32_t> elem_stamp_;
  std::vector<std::uint32_t> touched_;
  std::uint32_t epoch_ = 0;

  std::span<const ElementId> pinned_;
  std::vector<std::uint32_t> pin_part_stamp_;
  std::vector<std::int64_t> pin_part_count_;
  std::vector<std::uint32_t> pin_elem_stamp_;
  std::uint32_t pin_epoch_ = 0;
  std::int64_t pinned_rank_ = 0;
};

// sum_{e in S} x_e where x_e = 1 iff e has a friend in the independent set I2;
// equals |S| + |I2| - rank(S ∪ I2). One rank query (none for empty S).
std::int64_t sum_query_sim(RankSource& oracle, std::span<const ElementId> s,
                           std::span<const ElementId> i2);

// Number of friend pairs inside S, |S| - rank(S). Only meaningful when S lies
// within two independent sets matched by friendship. One rank query (none for
// empty S).
std::int64_t add_query_sim(RankSource& oracle, std::span<const ElementId> s);
std::int64_t add_query_sim(RankSource& oracle, std::span<const ElementId> a,
                           std::span<const ElementId> b);

}  // namespace rankprobe

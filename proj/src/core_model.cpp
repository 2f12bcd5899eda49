#include "rankprobe/core_model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "rankprobe/errors.hpp"

namespace rankprobe {

void canonicalize(Partition& parts) {
  for (auto& p : parts) std::sort(p.begin(), p.end());
  std::sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
    if (a.empty() || b.empty()) return a.size() < b.size();
    return a.front() < b.front();
  });
}

void canonicalize(Partition& parts, std::vector<std::int64_t>& capacities) {
  if (parts.size() != capacities.size())
    throw UsageError("capacities must align with parts");
  std::vector<std::size_t> order(parts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (auto& p : parts) std::sort(p.begin(), p.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = parts[a];
    const auto& pb = parts[b];
    if (pa.empty() || pb.empty()) return pa.size() < pb.size();
    return pa.front() < pb.front();
  });
  Partition sorted_parts;
  std::vector<std::int64_t> sorted_caps;
  sorted_parts.reserve(parts.size());
  sorted_caps.reserve(parts.size());
  for (auto i : order) {
    sorted_parts.push_back(std::move(parts[i]));
    sorted_caps.push_back(capacities[i]);
  }
  parts = std::move(sorted_parts);
  capacities = std::move(sorted_caps);
}

// ---------------------------------------------------------------------------

HiddenPartition::HiddenPartition(std::size_t n, Partition parts) : n_(n), parts_(std::move(parts)) {
  if (n > std::numeric_limits<ElementId>::max())
    throw UsageError("universe too large");
  if (n > 0 && parts_.empty()) throw UsageError("a nonempty universe needs at least one part");
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  part_of_.assign(n, unset);
  canonicalize(parts_);
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i].empty()) throw UsageError("parts must be nonempty");
    for (auto e : parts_[i]) {
      if (e >= n) throw UsageError("element id " + std::to_string(e) + " out of range");
      if (part_of_[e] != unset)
        throw UsageError("element " + std::to_string(e) + " appears in two parts");
      part_of_[e] = static_cast<std::uint32_t>(i);
    }
  }
  for (std::size_t e = 0; e < n; ++e)
    if (part_of_[e] == unset)
      throw UsageError("element " + std::to_string(e) + " is not covered by any part");
}

CapacitatedPartition::CapacitatedPartition(std::size_t n, Partition parts,
                                           std::vector<std::int64_t> capacities) {
  canonicalize(parts, capacities);
  base_ = HiddenPartition(n, std::move(parts));
  capacities_ = std::move(capacities);
  for (std::size_t i = 0; i < capacities_.size(); ++i) {
    const auto size = static_cast<std::int64_t>(base_.parts()[i].size());
    if (capacities_[i] < 1 || capacities_[i] >= size)
      throw UsageError("capacity " + std::to_string(capacities_[i]) + " of part " +
                       std::to_string(i) + " must lie in [1, " + std::to_string(size) + ")");
  }
}

std::int64_t CapacitatedPartition::total_rank() const {
  return std::accumulate(capacities_.begin(), capacities_.end(), std::int64_t{0});
}

// ---------------------------------------------------------------------------

QueryLedger::QueryLedger(const QueryLedger& other)
    : totals_(other.totals_),
      per_phase_(other.per_phase_),
      stack_(other.stack_),
      current_key_(other.current_key_) {
  refresh_current();
}

QueryLedger& QueryLedger::operator=(const QueryLedger& other) {
  if (this != &other) {
    totals_ = other.totals_;
    per_phase_ = other.per_phase_;
    stack_ = other.stack_;
    current_key_ = other.current_key_;
    refresh_current();
  }
  return *this;
}

QueryCounts QueryLedger::phase_total(std::string_view prefix) const {
  QueryCounts sum;
  for (const auto& [key, counts] : per_phase_) {
    std::string_view k = key;
    if (k == prefix || (k.size() > prefix.size() && k.substr(0, prefix.size()) == prefix &&
                        k[prefix.size()] == '/')) {
      sum.rank += counts.rank;
      sum.independence += counts.independence;
      sum.audit += counts.audit;
    }
  }
  return sum;
}

void QueryLedger::charge(QueryKind kind, std::int64_t amount) {
  auto bump = [&](QueryCounts& c) {
    switch (kind) {
      case QueryKind::rank: c.rank += amount; break;
      case QueryKind::independence: c.independence += amount; break;
      case QueryKind::audit: c.audit += amount; break;
    }
  };
  bump(totals_);
  if (current_ != nullptr) bump(*current_);
}

void QueryLedger::push_phase(std::string_view label) {
  stack_.emplace_back(label);
  if (!current_key_.empty()) current_key_ += '/';
  current_key_ += label;
  refresh_current();
}

void QueryLedger::pop_phase() {
  if (stack_.empty()) throw InvariantViolation("phase stack underflow");
  stack_.pop_back();
  current_key_.clear();
  for (const auto& s : stack_) {
    if (!current_key_.empty()) current_key_ += '/';
    current_key_ += s;
  }
  refresh_current();
}

void QueryLedger::refresh_current() {
  current_ = current_key_.empty() ? nullptr : &per_phase_[current_key_];
}

// ---------------------------------------------------------------------------

RankOracle::RankOracle(const HiddenPartition& partition)
    : part_of_(partition.size()), capacity_(partition.part_count(), 1) {
  for (std::size_t e = 0; e < partition.size(); ++e)
    part_of_[e] = partition.part_of(static_cast<ElementId>(e));
  part_stamp_.assign(capacity_.size(), 0);
  part_count_.assign(capacity_.size(), 0);
  elem_stamp_.assign(part_of_.size(), 0);
}

RankOracle::RankOracle(const CapacitatedPartition& partition) : RankOracle(partition.base()) {
  capacity_ = partition.capacities();
}

void RankOracle::check_element(ElementId e) const {
  if (e >= part_of_.size())
    throw UsageError("element id " + std::to_string(e) + " out of range for universe of size " +
                     std::to_string(part_of_.size()));
}

std::uint32_t RankOracle::next_epoch() {
  if (++epoch_ == 0) {
    std::fill(part_stamp_.begin(), part_stamp_.end(), 0);
    std::fill(elem_stamp_.begin(), elem_stamp_.end(), 0);
    epoch_ = 1;
  }
  return epoch_;
}

void RankOracle::pin(std::span<const ElementId> b) {
  pinned_ = {};
  if (pin_part_stamp_.empty()) {
    pin_part_stamp_.assign(capacity_.size(), 0);
    pin_part_count_.assign(capacity_.size(), 0);
    pin_elem_stamp_.assign(part_of_.size(), 0);
  }
  if (++pin_epoch_ == 0) {
    std::fill(pin_part_stamp_.begin(), pin_part_stamp_.end(), 0);
    std::fill(pin_elem_stamp_.begin(), pin_elem_stamp_.end(), 0);
    pin_epoch_ = 1;
  }
  pinned_rank_ = 0;
  for (auto e : b) {
    check_element(e);
    if (pin_elem_stamp_[e] == pin_epoch_) throw UsageError("query set lists an element twice");
    pin_elem_stamp_[e] = pin_epoch_;
    const auto p = part_of_[e];
    if (pin_part_stamp_[p] != pin_epoch_) {
      pin_part_stamp_[p] = pin_epoch_;
      pin_part_count_[p] = 0;
    }
    if (++pin_part_count_[p] <= capacity_[p]) ++pinned_rank_;
  }
  pinned_ = b;
}

std::int64_t RankOracle::evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                                  QueryKind kind) {
  const auto epoch = next_epoch();
  std::int64_t rank = 0;
  if (!b.empty() && b.data() == pinned_.data() && b.size() == pinned_.size()) {
    // b already counted; only a is scanned
    rank = pinned_rank_;
    for (auto e : a) {
      check_element(e);
      if (elem_stamp_[e] == epoch || pin_elem_stamp_[e] == pin_epoch_)
        throw UsageError("query set lists an element twice");
      elem_stamp_[e] = epoch;
      const auto p = part_of_[e];
      if (part_stamp_[p] != epoch) {
        part_stamp_[p] = epoch;
        part_count_[p] = pin_part_stamp_[p] == pin_epoch_ ? pin_part_count_[p] : 0;
      }
      if (++part_count_[p] <= capacity_[p]) ++rank;
    }
    ledger_.charge(kind);
    return rank;
  }
  auto scan = [&](std::span<const ElementId> s) {
    for (auto e : s) {
      check_element(e);
      if (elem_stamp_[e] == epoch) throw UsageError("query set lists an element twice");
      elem_stamp_[e] = epoch;
      const auto p = part_of_[e];
      if (part_stamp_[p] != epoch) {
        part_stamp_[p] = epoch;
        part_count_[p] = 0;
      }
      if (++part_count_[p] <= capacity_[p]) ++rank;
    }
  };
  scan(a);
  scan(b);
  ledger_.charge(kind);
  return rank;
}

bool RankOracle::is_independent(std::span<const ElementId> s) {
  return evaluate(s, {}, QueryKind::independence) == static_cast<std::int64_t>(s.size());
}

Anchor RankOracle::make_anchor(std::span<const ElementId> base) const {
  Anchor anchor;
  anchor.owner_ = this;
  anchor.counts_.assign(capacity_.size(), 0);
  anchor.member_.assign(part_of_.size(), 0);
  for (auto e : base) anchor.insert(e);
  return anchor;
}

void Anchor::insert(ElementId e) {
  owner_->check_element(e);
  if (member_[e]) throw UsageError("anchor already contains element " + std::to_string(e));
  member_[e] = 1;
  ++size_;
  const auto p = owner_->part_of_[e];
  if (++counts_[p] <= owner_->capacity_[p]) ++rank_;
}

void Anchor::erase(ElementId e) {
  owner_->check_element(e);
  if (!member_[e]) throw UsageError("anchor does not contain element " + std::to_string(e));
  member_[e] = 0;
  --size_;
  const auto p = owner_->part_of_[e];
  if (counts_[p]-- <= owner_->capacity_[p]) --rank_;
}

std::int64_t RankOracle::rank(const Anchor& base, std::span<const ElementId> removed,
                              std::span<const ElementId> added, QueryKind kind) {
  if (base.owner_ != this) throw UsageError("anchor belongs to a different oracle");
  const auto epoch = next_epoch();
  touched_.clear();
  auto apply = [&](std::span<const ElementId> s, bool inside, std::int64_t delta) {
    for (auto e : s) {
      check_element(e);
      if (base.contains(e) != inside)
        throw UsageError(inside ? "removed element is not in the anchored set"
                                : "added element is already in the anchored set");
      if (elem_stamp_[e] == epoch) throw UsageError("query edit lists an element twice");
      elem_stamp_[e] = epoch;
      const auto p = part_of_[e];
      if (part_stamp_[p] != epoch) {
        part_stamp_[p] = epoch;
        part_count_[p] = 0;
        touched_.push_back(p);
      }
      part_count_[p] += delta;
    }
  };
  apply(removed, true, -1);
  apply(added, false, +1);
  std::int64_t rank = base.rank_;
  for (auto p : touched_) {
    const auto before = base.counts_[p];
    const auto after = before + part_count_[p];
    rank += std::min(after, capacity_[p]) - std::min(before, capacity_[p]);
  }
  ledger_.charge(kind);
  return rank;
}

bool RankOracle::is_independent(const Anchor& base, std::span<const ElementId> removed,
                                std::span<const ElementId> added) {
  const auto size = static_cast<std::int64_t>(base.size()) -
                    static_cast<std::int64_t>(removed.size()) +
                    static_cast<std::int64_t>(added.size());
  return rank(base, removed, added, QueryKind::independence) == size;
}

bool RankOracle::audit_same_part(ElementId a, ElementId b) {
  check_element(a);
  check_element(b);
  ledger_.charge(QueryKind::audit);
  return part_of_[a] == part_of_[b];
}

// ---------------------------------------------------------------------------

std::int64_t sum_query_sim(RankSource& oracle, std::span<const ElementId> s,
                           std::span<const ElementId> i2) {
  if (s.empty()) return 0;
  const auto r = oracle.rank(s, i2);
  return static_cast<std::int64_t>(s.size() + i2.size()) - r;
}

std::int64_t add_query_sim(RankSource& oracle, std::span<const ElementId> s) {
  return add_query_sim(oracle, s, {});
}

std::int64_t add_query_sim(RankSource& oracle, std::span<const ElementId> a,
                           std::span<const ElementId> b) {
  if (a.empty() && b.empty()) return 0;
  return static_cast<std::int64_t>(a.size() + b.size()) - oracle.rank(a, b);
}

}  // namespace rankprobe

#pragma once

// Learning a hidden partition from rank queries: merge independent sets via
// coin weighing, then read the parts off the representative forest.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankprobe/core_model.hpp"
#include "rankprobe/weighing.hpp"

namespace rankprobe {

// Ascending element list with no two members in one part.
using IndependentSet = std::vector<ElementId>;

struct MergeOutcome {
  IndependentSet merged;
  // (e, rep(e)): e left the working set, rep(e) in `merged` is its friend.
  std::vector<std::pair<ElementId, ElementId>> removed_with_reps;
  std::int64_t rank_queries = 0;
  std::int64_t discovery_queries = 0;
  std::int64_t matching_queries = 0;
};

struct MergeOptions {
  weighing::SparseRecoveryOptions sparse;
  weighing::MatchingOptions matching;
};

// Merges disjoint independent sets i1, i2 into i1 ∪ i2 − com(i1, i2).
// Friends are kept on the i2 side.
MergeOutcome merge(std::span<const ElementId> i1, std::span<const ElementId> i2,
                   RankSource& oracle, const MergeOptions& options = {});

// Directed edges e -> rep(e) stored as a parent array; roots have no parent.
class RepForest {
 public:
  static constexpr ElementId kNoParent = ~ElementId{0};

  explicit RepForest(std::size_t n = 0) : parent_(n, kNoParent) {}

  std::size_t size() const { return parent_.size(); }
  // Throws InvariantViolation if e already has an outgoing edge.
  void add_edge(ElementId e, ElementId rep);
  ElementId parent(ElementId e) const { return parent_[e]; }
  bool is_root(ElementId e) const { return parent_[e] == kNoParent; }
  std::vector<std::pair<ElementId, ElementId>> edges() const;
  std::vector<ElementId> roots() const;

 private:
  std::vector<ElementId> parent_;
};

// Weakly connected components of the forest, canonical order.
Partition components(const RepForest& forest);
// Same, built from an explicit edge list over 0..n-1.
Partition components(std::size_t n, std::span<const std::pair<ElementId, ElementId>> edges);

struct MergeRecord {
  std::string phase;  // "pairwise-merge" or "final-fold"
  std::size_t smaller = 0;
  std::size_t larger = 0;
  std::size_t common = 0;  // d = |com(I1, I2)|
  std::int64_t rank_queries = 0;
  std::int64_t matching_queries = 0;  // part of rank_queries
  std::size_t size_class = 0;  // floor(log2(smaller))
  bool thick = false;          // d >= sqrt(smaller)
};

struct PhaseRecord {
  std::string phase;
  std::size_t merges = 0;
  std::size_t thick_merges = 0;
  std::int64_t rank_queries = 0;
};

struct FindPartitionOptions {
  MergeOptions merge;
  // Re-check every merged set with audit-charged rank queries.
  bool audit = false;
};

struct PartitionRun {
  Partition parts;
  RepForest forest;
  IndependentSet basis;  // the surviving set, one element per part
  std::vector<MergeRecord> merges;
  std::vector<PhaseRecord> phases;
  std::size_t survivors = 0;  // sets left after the pairwise phase
};

// Learns the hidden simple partition behind `oracle` (universe 0..n-1).
PartitionRun find_partition(RankSource& oracle, const FindPartitionOptions& options = {});

}  // namespace rankprobe

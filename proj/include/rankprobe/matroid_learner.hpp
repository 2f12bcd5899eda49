#pragma once

// Learning a general partition matroid (parts plus capacities) by reducing to
// two simple-partition problems, and the independence-oracle baseline.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankprobe/core_model.hpp"
#include "rankprobe/partition_learner.hpp"

namespace rankprobe {

struct Basis {
  std::vector<ElementId> members;  // ascending
};

// T1 inside the basis, T2 outside it, both hitting every part once, and
// phi pairing each t in T1 with its friend in T2.
struct RepresentativePair {
  std::vector<ElementId> t1;  // discovery order
  std::vector<ElementId> t2;  // t2[i] = phi(t1[i])
};

struct LearnedMatroid {
  Partition parts;                       // canonical
  std::vector<std::int64_t> capacities;  // aligned with parts

  friend bool operator==(const LearnedMatroid&, const LearnedMatroid&) = default;
};

struct StageRecord {
  std::string stage;
  std::int64_t rank_queries = 0;
  std::int64_t independence_queries = 0;
};

struct MatroidOptions {
  FindPartitionOptions partition;
  bool audit = false;
};

struct MatroidRun {
  LearnedMatroid result;
  Basis basis;
  RepresentativePair reps;
  std::vector<StageRecord> stages;
  // Only filled by learn_partition_matroid.
  PartitionRun inside;
  PartitionRun outside;
};

// Greedy scan 0..n-1 keeping every element that raises the rank. Exactly n
// queries, of kind `kind` (rank or independence).
Basis find_basis(RankOracle& oracle, QueryKind kind = QueryKind::rank);

RepresentativePair find_representatives(RankOracle& oracle, const Basis& basis,
                                        QueryKind kind = QueryKind::rank, bool audit = false);

// Simple-partition rank restricted to the basis: rank(B - S + T2) - |B - S|.
class InsideBasisSource final : public RankSource {
 public:
  InsideBasisSource(RankOracle& oracle, std::span<const ElementId> basis,
                    std::span<const ElementId> t2);

  std::size_t universe_size() const override { return basis_.size(); }
  QueryLedger& ledger() override { return oracle_.ledger(); }
  ElementId global(ElementId local) const { return basis_[local]; }

 protected:
  std::int64_t evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                        QueryKind kind) override;

 private:
  RankOracle& oracle_;
  std::vector<ElementId> basis_;
  Anchor anchor_;  // B + T2
  std::vector<ElementId> buf_;
};

// Simple-partition rank outside the basis: rank(B + S - T1) - |B - T1|.
class OutsideBasisSource final : public RankSource {
 public:
  OutsideBasisSource(RankOracle& oracle, std::span<const ElementId> basis,
                     std::span<const ElementId> t1);

  std::size_t universe_size() const override { return outside_.size(); }
  QueryLedger& ledger() override { return oracle_.ledger(); }
  ElementId global(ElementId local) const { return outside_[local]; }

 protected:
  std::int64_t evaluate(std::span<const ElementId> a, std::span<const ElementId> b,
                        QueryKind kind) override;

 private:
  RankOracle& oracle_;
  std::vector<ElementId> outside_;
  Anchor anchor_;  // B - T1
  std::int64_t offset_ = 0;
  std::vector<ElementId> buf_;
};

MatroidRun learn_matroid_with_reps(RankOracle& oracle, const Basis& basis,
                                   const RepresentativePair& reps,
                                   const MatroidOptions& options = {});

MatroidRun learn_partition_matroid(RankOracle& oracle, const MatroidOptions& options = {});

// Uses independence queries only: basis and representatives as above, then a
// halving search over T1 for every element outside the basis and per-part
// group testing over the rest of the basis.
MatroidRun baseline_independence_learner(RankOracle& oracle, const MatroidOptions& options = {});

// The same search when every capacity is known to be 1 (singleton parts
// allowed): the greedy basis is a transversal R, and every other element
// finds its friend by halving R. n + (n - k) * ceil(log2 k) queries at most.
MatroidRun baseline_simple_partition(RankOracle& oracle, const MatroidOptions& options = {});

}  // namespace rankprobe

#pragma once

// Coin-weighing primitives: a non-adaptive detecting matrix with a
// constructive decoder, adaptive sparse recovery from sum queries, and
// perfect-matching recovery from additive queries.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rankprobe/core_model.hpp"

namespace rankprobe::weighing {

// Binary query design over `columns()` coins whose row-sum map is injective on
// {0,1}^columns. Built from disjoint column blocks; each block is either an
// identity or a (possibly truncated) level of the doubling recursion
//
//   M_0     = [1]
//   M_{j+1} = [ M_j  M_j      I ]
//             [ M_j  J - M_j  0 ]
//             [ 0    1 ... 1  0 ]
//
// where the last row weighs the middle block. Rows are generated on demand.
class DetectingMatrix {
 public:
  std::size_t columns() const { return columns_; }
  std::size_t row_count() const { return row_index_.size(); }

  // Ascending column ids of row i, written into `out` (cleared first).
  void row(std::size_t i, std::vector<std::uint32_t>& out) const;
  std::vector<std::vector<std::uint32_t>> rows() const;

  // Row sums of x.
  std::vector<std::int64_t> apply(std::span<const std::uint8_t> x) const;

  // Inverse of apply(); throws DecodeFailure when no binary x matches.
  std::vector<std::uint8_t> decode(std::span<const std::int64_t> measurements) const;

 private:
  friend DetectingMatrix build_detecting_matrix(std::size_t n);

  struct Block {
    std::size_t column_offset = 0;
    std::size_t width = 0;
    int level = -1;  // -1: identity
    std::vector<std::uint32_t> kept_rows;  // level rows that survive truncation
  };

  std::size_t columns_ = 0;
  std::vector<Block> blocks_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> row_index_;  // (block, row in block)
};

// Deterministic for each n; n >= 1. Uses the identity below 16 columns.
DetectingMatrix build_detecting_matrix(std::size_t n);

// Shared, immutable copy of build_detecting_matrix(n). Thread-safe.
std::shared_ptr<const DetectingMatrix> cached_detecting_matrix(std::size_t n);

std::vector<std::uint8_t> decode(const DetectingMatrix& matrix,
                                 std::span<const std::int64_t> measurements);

// Row budget the construction is held to.
std::size_t detecting_row_budget(std::size_t n);

// ---------------------------------------------------------------------------

using SumOracle = std::function<std::int64_t(std::span<const std::uint32_t>)>;

enum class SparseStrategy { binary_split, hybrid };
std::string_view to_string(SparseStrategy s);

struct SparseRecoveryOptions {
  // A sub-range of size s holding w ones is decoded with a detecting matrix
  // once s <= split_threshold * w (and w >= 2).
  double split_threshold = 4.0;
  // Sum over the whole range, if the caller already knows it; saves the root query.
  std::int64_t known_total = -1;
};

struct SparseRecoveryBudget {
  std::int64_t queries_used = 0;
  SparseStrategy strategy = SparseStrategy::binary_split;
};

struct SparseRecovery {
  std::vector<std::uint32_t> support;  // ascending
  SparseRecoveryBudget budget;
};

// Recovers the support of a hidden x in {0,1}^n from sum queries.
SparseRecovery recover_sparse(std::size_t n, const SumOracle& oracle,
                              const SparseRecoveryOptions& options = {});

// ---------------------------------------------------------------------------

// Matched pairs inside the disjoint union a ∪ b. Within one recover_matching
// call a given `b` buffer keeps its contents, so it may be cached by address.
using AddOracle = std::function<std::int64_t(std::span<const ElementId>, std::span<const ElementId>)>;

struct MatchingOptions {
  // Below this size each x is located by binary search over the unmatched y's.
  std::size_t bit_plane_threshold = 32;
};

struct MatchingRecovery {
  std::vector<std::pair<ElementId, ElementId>> pairs;  // (x, partner), in X order
  std::int64_t queries_used = 0;
};

// Recovers the perfect matching between X and Y given an oracle counting the
// matched pairs inside a set. Throws ProtocolError when answers contradict
// the perfect-matching precondition.
MatchingRecovery recover_matching(std::span<const ElementId> x, std::span<const ElementId> y,
                                  const AddOracle& add, const MatchingOptions& options = {});

}  // namespace rankprobe::weighing

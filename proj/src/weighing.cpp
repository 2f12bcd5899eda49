#include "rankprobe/weighing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "rankprobe/errors.hpp"

namespace rankprobe::weighing {
namespace {

constexpr std::size_t kIdentityBelow = 16;

struct Level {
  std::size_t rows;
  std::size_t cols;
};

const std::vector<Level>& levels() {
  static const std::vector<Level> table = [] {
    std::vector<Level> t{{1, 1}};
    while (t.back().cols < (std::size_t{1} << 28)) {
      const auto [m, c] = t.back();
      t.push_back({2 * m + 1, 2 * c + m});
    }
    return t;
  }();
  return table;
}

// Smallest column id touched by row i of level j.
std::size_t level_row_min_col(int j, std::size_t i) {
  const auto& lv = levels();
  while (j > 0) {
    const auto m = lv[j - 1].rows;
    if (i == 2 * m) return lv[j - 1].cols;
    i %= m;
    --j;
  }
  return 0;
}

void level_row_into(const std::vector<Level>& lv, int j, std::size_t i, std::size_t offset,
                    std::vector<std::uint32_t>& out, std::vector<std::vector<std::uint32_t>>& scratch) {
  while (j > 0) {
    const auto [m, c] = lv[j - 1];
    if (i < m) {
      level_row_into(lv, j - 1, i, offset, out, scratch);
      level_row_into(lv, j - 1, i, offset + c, out, scratch);
      out.push_back(static_cast<std::uint32_t>(offset + 2 * c + i));
      return;
    }
    if (i < 2 * m) {
      level_row_into(lv, j - 1, i - m, offset, out, scratch);
      auto& inner = scratch[j];
      inner.clear();
      level_row_into(lv, j - 1, i - m, 0, inner, scratch);
      std::size_t k = 0;
      for (std::size_t col = 0; col < c; ++col) {
        if (k < inner.size() && inner[k] == col) {
          ++k;
          continue;
        }
        out.push_back(static_cast<std::uint32_t>(offset + c + col));
      }
      return;
    }
    for (std::size_t col = 0; col < c; ++col) out.push_back(static_cast<std::uint32_t>(offset + c + col));
    return;
  }
  out.push_back(static_cast<std::uint32_t>(offset));
}

void level_row(int j, std::size_t i, std::size_t offset, std::vector<std::uint32_t>& out) {
  thread_local std::vector<std::vector<std::uint32_t>> scratch;
  if (scratch.size() <= static_cast<std::size_t>(j)) scratch.resize(static_cast<std::size_t>(j) + 1);
  level_row_into(levels(), j, i, offset, out, scratch);
}

void decode_level(int j, std::span<const std::int64_t> y, std::span<std::uint8_t> x) {
  if (j == 0) {
    if (y[0] != 0 && y[0] != 1) throw DecodeFailure("measurement is not a 0/1 coin");
    x[0] = static_cast<std::uint8_t>(y[0]);
    return;
  }
  const auto [m, c] = levels()[j - 1];
  const auto weight = y[2 * m];
  std::vector<std::int64_t> ya(m), yb(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto top = y[i];
    const auto bottom = y[m + i];
    const auto s = top + bottom - weight;  // 2(Ma)_i + c_i
    if (s < 0) throw DecodeFailure("inconsistent measurements");
    const auto tail = s & 1;
    const auto diff = top - bottom - tail + weight;  // 2(Mb)_i
    if (diff < 0 || (diff & 1) != 0) throw DecodeFailure("inconsistent measurements");
    ya[i] = (s - tail) / 2;
    yb[i] = diff / 2;
    x[2 * c + i] = static_cast<std::uint8_t>(tail);
  }
  decode_level(j - 1, ya, x.subspan(0, c));
  decode_level(j - 1, yb, x.subspan(c, c));
}

// Row sums of the full level-j matrix, by the same recursion as the rows.
void apply_level(int j, std::span<const std::uint8_t> x, std::span<std::int64_t> y) {
  if (j == 0) {
    y[0] = x[0];
    return;
  }
  const auto [m, c] = levels()[j - 1];
  std::vector<std::int64_t> ya(m), yb(m);
  apply_level(j - 1, x.subspan(0, c), ya);
  apply_level(j - 1, x.subspan(c, c), yb);
  std::int64_t weight = 0;
  for (std::size_t k = c; k < 2 * c; ++k) weight += x[k];
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = ya[i] + yb[i] + x[2 * c + i];
    y[m + i] = ya[i] + weight - yb[i];
  }
  y[2 * m] = weight;
}

enum class Choice : std::uint8_t { identity, truncated, split };

struct PlanEntry {
  std::size_t rows = 0;
  Choice choice = Choice::identity;
  int level = 0;
};

// Minimum-row block decomposition for every width up to n, using each
// level's full row count as its cost.
std::vector<PlanEntry> plan_table(std::size_t n) {
  const auto& lv = levels();
  std::vector<PlanEntry> best(n + 1);
  for (std::size_t w = 1; w <= n; ++w) {
    PlanEntry e{w, Choice::identity, -1};
    if (w >= kIdentityBelow) {
      for (int j = 0; j < static_cast<int>(lv.size()); ++j) {
        if (lv[j].cols >= w) {
          if (lv[j].rows < e.rows) e = {lv[j].rows, Choice::truncated, j};
          break;
        }
      }
      for (int j = 2; j < static_cast<int>(lv.size()) && lv[j].cols <= w; ++j) {
        const auto cost = lv[j].rows + best[w - lv[j].cols].rows;
        if (cost < e.rows) e = {cost, Choice::split, j};
      }
    }
    best[w] = e;
  }
  return best;
}

}  // namespace

std::size_t detecting_row_budget(std::size_t n) {
  if (n < kIdentityBelow) return n;
  const auto nd = static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(4.0 * nd / std::log2(nd)));
}

DetectingMatrix build_detecting_matrix(std::size_t n) {
  if (n == 0) throw UsageError("a detecting matrix needs at least one column");
  const auto& lv = levels();
  const auto table = plan_table(n);
  DetectingMatrix m;
  m.columns_ = n;
  std::size_t offset = 0;
  std::size_t remaining = n;
  while (remaining > 0) {
    const auto& e = table[remaining];
    DetectingMatrix::Block block;
    block.column_offset = offset;
    if (e.choice == Choice::identity) {
      block.width = remaining;
      block.level = -1;
    } else {
      block.level = e.level;
      block.width = e.choice == Choice::truncated ? remaining : lv[e.level].cols;
      for (std::size_t i = 0; i < lv[e.level].rows; ++i)
        if (level_row_min_col(e.level, i) < block.width)
          block.kept_rows.push_back(static_cast<std::uint32_t>(i));
    }
    const auto b = static_cast<std::uint32_t>(m.blocks_.size());
    const auto rows = block.level < 0 ? block.width : block.kept_rows.size();
    for (std::size_t r = 0; r < rows; ++r) m.row_index_.emplace_back(b, static_cast<std::uint32_t>(r));
    offset += block.width;
    remaining -= block.width;
    m.blocks_.push_back(std::move(block));
  }
  return m;
}

std::shared_ptr<const DetectingMatrix> cached_detecting_matrix(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const DetectingMatrix>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const DetectingMatrix>(build_detecting_matrix(n));
  return slot;
}

void DetectingMatrix::row(std::size_t i, std::vector<std::uint32_t>& out) const {
  out.clear();
  const auto [b, r] = row_index_.at(i);
  const auto& block = blocks_[b];
  if (block.level < 0) {
    out.push_back(static_cast<std::uint32_t>(block.column_offset + r));
    return;
  }
  level_row(block.level, block.kept_rows[r], block.column_offset, out);
  const auto limit = block.column_offset + block.width;
  while (!out.empty() && out.back() >= limit) out.pop_back();
}

std::vector<std::vector<std::uint32_t>> DetectingMatrix::rows() const {
  std::vector<std::vector<std::uint32_t>> all(row_count());
  for (std::size_t i = 0; i < all.size(); ++i) row(i, all[i]);
  return all;
}

std::vector<std::int64_t> DetectingMatrix::apply(std::span<const std::uint8_t> x) const {
  if (x.size() != columns_) throw UsageError("vector length does not match matrix columns");
  const auto& lv = levels();
  std::vector<std::int64_t> y;
  y.reserve(row_count());
  for (const auto& block : blocks_) {
    if (block.level < 0) {
      for (std::size_t r = 0; r < block.width; ++r) y.push_back(x[block.column_offset + r]);
      continue;
    }
    const auto [m, c] = lv[block.level];
    std::vector<std::uint8_t> padded(c, 0);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(block.column_offset), block.width, padded.begin());
    std::vector<std::int64_t> full(m);
    apply_level(block.level, padded, full);
    for (auto r : block.kept_rows) y.push_back(full[r]);
  }
  return y;
}

std::vector<std::uint8_t> DetectingMatrix::decode(std::span<const std::int64_t> measurements) const {
  if (measurements.size() != row_count())
    throw UsageError("expected " + std::to_string(row_count()) + " measurements, got " +
                     std::to_string(measurements.size()));
  const auto& lv = levels();
  std::vector<std::uint8_t> x(columns_, 0);
  std::size_t next = 0;
  for (const auto& block : blocks_) {
    if (block.level < 0) {
      for (std::size_t r = 0; r < block.width; ++r) {
        const auto v = measurements[next++];
        if (v != 0 && v != 1) throw DecodeFailure("measurement is not a 0/1 coin");
        x[block.column_offset + r] = static_cast<std::uint8_t>(v);
      }
      continue;
    }
    const auto [m, c] = lv[block.level];
    std::vector<std::int64_t> y(m, 0);
    for (auto r : block.kept_rows) y[r] = measurements[next++];
    std::vector<std::uint8_t> full(c, 0);
    decode_level(block.level, y, full);
    for (std::size_t k = block.width; k < c; ++k)
      if (full[k] != 0) throw DecodeFailure("inconsistent measurements");
    std::copy_n(full.begin(), block.width, x.begin() + static_cast<std::ptrdiff_t>(block.column_offset));
  }
  const auto check = apply(x);
  if (!std::equal(check.begin(), check.end(), measurements.begin()))
    throw DecodeFailure("measurements are not the image of any binary vector");
  return x;
}

std::vector<std::uint8_t> decode(const DetectingMatrix& matrix,
                                 std::span<const std::int64_t> measurements) {
  return matrix.decode(measurements);
}

// ---------------------------------------------------------------------------

std::string_view to_string(SparseStrategy s) {
  return s == SparseStrategy::hybrid ? "hybrid" : "binary-split";
}

namespace {

class SparseSolver {
 public:
  SparseSolver(const SumOracle& oracle, double threshold) : oracle_(oracle), threshold_(threshold) {}

  std::int64_t query_range(std::size_t lo, std::size_t hi) {
    buf_.resize(hi - lo);
    std::iota(buf_.begin(), buf_.end(), static_cast<std::uint32_t>(lo));
    return ask(buf_);
  }

  void solve(std::size_t lo, std::size_t hi, std::int64_t ones) {
    const auto size = static_cast<std::int64_t>(hi - lo);
    if (ones < 0 || ones > size) throw ProtocolError("sum oracle answers are inconsistent");
    if (ones == 0) return;
    if (ones == size) {
      for (auto i = lo; i < hi; ++i) support.push_back(static_cast<std::uint32_t>(i));
      return;
    }
    if (ones >= 2 && static_cast<double>(size) <= threshold_ * static_cast<double>(ones)) {
      decode_range(lo, hi, ones);
      return;
    }
    const auto mid = lo + (hi - lo + 1) / 2;
    const auto left = query_range(lo, mid);
    solve(lo, mid, left);
    solve(mid, hi, ones - left);
  }

  std::vector<std::uint32_t> support;
  std::int64_t queries = 0;
  bool used_matrix = false;

 private:
  std::int64_t ask(std::span<const std::uint32_t> s) {
    ++queries;
    return oracle_(s);
  }

  void decode_range(std::size_t lo, std::size_t hi, std::int64_t ones) {
    used_matrix = true;
    const auto matrix = cached_detecting_matrix(hi - lo);
    std::vector<std::int64_t> y(matrix->row_count());
    std::vector<std::uint32_t> row;
    for (std::size_t i = 0; i < y.size(); ++i) {
      matrix->row(i, row);
      for (auto& c : row) c += static_cast<std::uint32_t>(lo);
      y[i] = ask(row);
    }
    std::vector<std::uint8_t> x;
    try {
      x = matrix->decode(y);
    } catch (const DecodeFailure& e) {
      throw ProtocolError(std::string("sparse recovery: ") + e.what());
    }
    std::int64_t found = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] == 0) continue;
      support.push_back(static_cast<std::uint32_t>(lo + k));
      ++found;
    }
    if (found != ones) throw ProtocolError("sum oracle answers are inconsistent");
  }

  const SumOracle& oracle_;
  double threshold_;
  std::vector<std::uint32_t> buf_;
};

}  // namespace

SparseRecovery recover_sparse(std::size_t n, const SumOracle& oracle,
                              const SparseRecoveryOptions& options) {
  SparseSolver solver(oracle, options.split_threshold);
  if (n > 0) {
    const auto total = options.known_total >= 0 ? options.known_total : solver.query_range(0, n);
    solver.solve(0, n, total);
  }
  SparseRecovery out;
  out.support = std::move(solver.support);
  std::sort(out.support.begin(), out.support.end());
  out.budget.queries_used = solver.queries;
  out.budget.strategy = solver.used_matrix ? SparseStrategy::hybrid : SparseStrategy::binary_split;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t ceil_log2(std::size_t v) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < v) ++bits;
  return bits;
}

MatchingRecovery match_by_search(std::span<const ElementId> x, std::span<const ElementId> y,
                                 const AddOracle& add) {
  MatchingRecovery out;
  std::vector<ElementId> open(y.begin(), y.end());
  for (const auto& xe : x) {
    std::size_t lo = 0;
    std::size_t hi = open.size();
    while (hi - lo > 1) {
      const auto mid = lo + (hi - lo + 1) / 2;
      ++out.queries_used;
      const auto hit = add(std::span<const ElementId>(open).subspan(lo, mid - lo),
                           std::span<const ElementId>(&xe, 1));
      if (hit == 1) {
        hi = mid;
      } else if (hit == 0) {
        lo = mid;
      } else {
        throw ProtocolError("additive query returned " + std::to_string(hit) +
                            " for a single probe element");
      }
    }
    out.pairs.emplace_back(xe, open[lo]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(lo));
  }
  return out;
}

MatchingRecovery match_by_bit_planes(std::span<const ElementId> x, std::span<const ElementId> y,
                                     const AddOracle& add) {
  const auto d = x.size();
  const auto bits = ceil_log2(d);
  const auto matrix = cached_detecting_matrix(d);
  MatchingRecovery out;
  std::vector<std::size_t> partner_id(d, 0);
  // rows translated to y once, reused by every plane
  std::vector<std::vector<ElementId>> queries(matrix->row_count());
  std::vector<std::uint32_t> row;
  for (std::size_t r = 0; r < queries.size(); ++r) {
    matrix->row(r, row);
    for (auto c : row) queries[r].push_back(y[c]);
  }
  // one live buffer per plane: a buffer is never refilled while in use
  std::vector<std::vector<ElementId>> planes(bits);
  for (std::size_t b = 0; b < bits; ++b)
    for (std::size_t i = 0; i < d; ++i)
      if ((i >> b) & 1U) planes[b].push_back(x[i]);
  std::vector<std::int64_t> measurements(matrix->row_count());
  for (std::size_t b = 0; b < bits; ++b) {
    for (std::size_t r = 0; r < measurements.size(); ++r) {
      ++out.queries_used;
      measurements[r] = add(queries[r], planes[b]);
    }
    std::vector<std::uint8_t> v;
    try {
      v = matrix->decode(measurements);
    } catch (const DecodeFailure& e) {
      throw ProtocolError(std::string("bit-plane decode failed: ") + e.what());
    }
    for (std::size_t j = 0; j < d; ++j)
      if (v[j]) partner_id[j] |= std::size_t{1} << b;
  }
  std::vector<std::size_t> y_of_x(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto id = partner_id[j];
    if (id >= d || y_of_x[id] != d) throw ProtocolError("bit-plane ids do not form a bijection");
    y_of_x[id] = j;
  }
  for (std::size_t i = 0; i < d; ++i) out.pairs.emplace_back(x[i], y[y_of_x[i]]);
  return out;
}

}  // namespace

MatchingRecovery recover_matching(std::span<const ElementId> x, std::span<const ElementId> y,
                                  const AddOracle& add, const MatchingOptions& options) {
  if (x.size() != y.size()) throw UsageError("matching sides must have equal size");
  if (x.empty()) return {};
  if (x.size() == 1) return {{{x[0], y[0]}}, 0};
  if (x.size() < options.bit_plane_threshold) return match_by_search(x, y, add);
  return match_by_bit_planes(x, y, add);
}

}  // namespace rankprobe::weighing

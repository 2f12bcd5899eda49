#pragma once

// Brute-force references and instance enumerators shared by the test binaries.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "rankprobe/core_model.hpp"

namespace testing_support {

using rankprobe::ElementId;
using rankprobe::Partition;

inline std::vector<std::uint32_t> part_index(std::size_t n, const Partition& parts) {
  std::vector<std::uint32_t> of(n, 0);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (auto e : parts[i]) of[e] = static_cast<std::uint32_t>(i);
  return of;
}

// Capacitated rank straight from the definition; caps empty means all 1.
inline std::int64_t brute_rank(std::size_t n, const Partition& parts,
                               const std::vector<std::int64_t>& caps, const std::vector<ElementId>& s) {
  const auto of = part_index(n, parts);
  std::vector<std::int64_t> hit(parts.size(), 0);
  for (auto e : s) ++hit[of[e]];
  std::int64_t r = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) r += std::min(hit[i], caps.empty() ? 1 : caps[i]);
  return r;
}

inline std::vector<ElementId> subset_of(std::uint32_t mask, std::span<const ElementId> ground) {
  std::vector<ElementId> out;
  for (std::size_t i = 0; i < ground.size(); ++i)
    if ((mask >> i) & 1U) out.push_back(ground[i]);
  return out;
}

inline std::vector<ElementId> mask_set(std::uint32_t mask) {
  std::vector<ElementId> out;
  for (ElementId i = 0; mask >> i; ++i)
    if ((mask >> i) & 1U) out.push_back(i);
  return out;
}

// Every set partition of 0..n-1 (restricted growth strings), canonical.
inline void for_each_set_partition(std::size_t n, const std::function<void(const Partition&)>& f) {
  if (n == 0) {
    f({});
    return;
  }
  std::vector<std::uint32_t> a(n, 0);
  std::vector<std::uint32_t> maxv(n, 0);  // max of a[0..i-1]
  while (true) {
    std::uint32_t k = 0;
    for (auto v : a) k = std::max(k, v + 1);
    Partition p(k);
    for (std::size_t e = 0; e < n; ++e) p[a[e]].push_back(static_cast<ElementId>(e));
    f(p);
    // next restricted growth string
    std::size_t i = n - 1;
    while (i > 0) {
      std::uint32_t m = 0;
      for (std::size_t j = 0; j < i; ++j) m = std::max(m, a[j]);
      if (a[i] <= m) {
        ++a[i];
        for (auto j = i + 1; j < n; ++j) a[j] = 0;
        break;
      }
      --i;
    }
    if (i == 0) return;
  }
}

// Every (partition, capacities) with all parts of size >= 2 and 1 <= r_i < |P_i|.
inline void for_each_capacitated(std::size_t n,
                                 const std::function<void(const Partition&, const std::vector<std::int64_t>&)>& f) {
  for_each_set_partition(n, [&](const Partition& p) {
    for (const auto& part : p)
      if (part.size() < 2) return;
    std::vector<std::int64_t> caps(p.size(), 1);
    while (true) {
      f(p, caps);
      std::size_t i = 0;
      while (i < caps.size()) {
        if (caps[i] + 1 < static_cast<std::int64_t>(p[i].size())) {
          ++caps[i];
          break;
        }
        caps[i] = 1;
        ++i;
      }
      if (i == caps.size()) return;
    }
  });
}

inline Partition random_partition(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<ElementId> perm(n);
  std::iota(perm.begin(), perm.end(), ElementId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Partition p(k);
  for (std::size_t i = 0; i < n; ++i) p[i < k ? i : rng() % k].push_back(perm[i]);
  rankprobe::canonicalize(p);
  return p;
}

}  // namespace testing_support

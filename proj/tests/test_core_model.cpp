#include <doctest.h>

#include <stdexcept>

#include "rankprobe/core_model.hpp"
#include "rankprobe/errors.hpp"
#include "support.hpp"

using namespace rankprobe;
using testing_support::brute_rank;
using testing_support::mask_set;

namespace {

std::vector<ElementId> ids(std::initializer_list<ElementId> l) { return l; }

}  // namespace

TEST_CASE("simple rank counts parts hit") {
  RankOracle o(HiddenPartition(3, {{0, 1}, {2}}));
  CHECK(o.rank(ids({})) == 0);
  CHECK(o.rank(ids({0, 1})) == 1);
  CHECK(o.rank(ids({0, 2})) == 2);
  CHECK(o.ledger().rank_count() == 3);
  CHECK(o.ledger().independence_count() == 0);
}

TEST_CASE("capacitated rank caps each part") {
  RankOracle one(CapacitatedPartition(3, {{0, 1, 2}}, {2}));
  CHECK(one.rank(ids({0, 1, 2})) == 2);
  RankOracle two(CapacitatedPartition(5, {{0, 1, 2}, {3, 4}}, {2, 1}));
  CHECK(two.rank(ids({0, 3, 4})) == 2);
  CHECK(two.rank(ids({0, 1, 2, 3, 4})) == 3);
}

TEST_CASE("basis with counts 1,2,3,4 and a three-part removal") {
  // part i holds r_i basis elements plus one outside element (its T2 member)
  Partition parts = {{0, 1}, {2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12, 13}};
  RankOracle o(CapacitatedPartition(14, parts, {1, 2, 3, 4}));
  const auto b = ids({0, 2, 3, 5, 6, 7, 9, 10, 11, 12});
  const auto t2 = ids({1, 4, 8, 13});
  CHECK(o.rank(b) == 10);
  // S leaves part 2 untouched: one purple, two blue, two black
  const auto b_minus_s = ids({2, 3, 7, 11, 12});
  CHECK(o.rank(b_minus_s) == 5);
  std::vector<ElementId> with_t2 = b_minus_s;
  with_t2.insert(with_t2.end(), t2.begin(), t2.end());
  CHECK(with_t2.size() == 9);
  CHECK(o.rank(with_t2) == 8);  // part 2 is capped at 2
  CHECK(o.rank(with_t2) - o.rank(b_minus_s) == 3);
}

TEST_CASE("is_independent is ledgered separately") {
  RankOracle o(HiddenPartition(3, {{0, 1}, {2}}));
  CHECK(o.is_independent(ids({0, 2})));
  CHECK_FALSE(o.is_independent(ids({0, 1})));
  CHECK(o.is_independent(ids({})));
  CHECK(o.ledger().independence_count() == 3);
  CHECK(o.ledger().rank_count() == 0);
}

TEST_CASE("out of range and duplicate elements are usage errors") {
  RankOracle o(HiddenPartition(3, {{0, 1}, {2}}));
  CHECK_THROWS_AS(o.rank(ids({3})), UsageError);
  CHECK_THROWS_AS(o.rank(ids({1, 1})), UsageError);
  CHECK_THROWS_AS(o.rank(ids({1}), ids({1})), UsageError);
}

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(HiddenPartition(3, {{0, 1}}), UsageError);
  CHECK_THROWS_AS(HiddenPartition(3, {{0, 1}, {1, 2}}), UsageError);
  CHECK_THROWS_AS(HiddenPartition(2, {{0, 1}, {}}), UsageError);
  CHECK_THROWS_AS(HiddenPartition(2, {{0, 2}}), UsageError);
  CHECK_THROWS_AS(CapacitatedPartition(2, {{0}, {1}}, {1, 1}), UsageError);
  CHECK_THROWS_AS(CapacitatedPartition(3, {{0, 1, 2}}, {3}), UsageError);
  CHECK_THROWS_AS(CapacitatedPartition(3, {{0, 1, 2}}, {0}), UsageError);
  CHECK_THROWS_AS(CapacitatedPartition(3, {{0, 1, 2}}, {1, 1}), UsageError);

  HiddenPartition h(4, {{3, 1}, {2, 0}});
  CHECK(h.parts() == Partition{{0, 2}, {1, 3}});
  CHECK(h.same_part(1, 3));
  CHECK_FALSE(h.same_part(0, 1));

  CapacitatedPartition c(5, {{4, 3}, {2, 1, 0}}, {1, 2});
  CHECK(c.parts() == Partition{{0, 1, 2}, {3, 4}});
  CHECK(c.capacities() == std::vector<std::int64_t>{2, 1});
  CHECK(c.total_rank() == 3);
}

TEST_CASE("rank is bounded, monotone and submodular on small universes") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto k = 1 + rng() % n;
      const auto parts = testing_support::random_partition(n, k, rng);
      RankOracle o{HiddenPartition(n, parts)};
      const std::uint32_t full = 1U << n;
      std::vector<std::int64_t> r(full);
      for (std::uint32_t m = 0; m < full; ++m) {
        const auto s = mask_set(m);
        r[m] = o.rank(s);
        REQUIRE(r[m] == brute_rank(n, parts, {}, s));
        REQUIRE(r[m] <= std::min<std::int64_t>(static_cast<std::int64_t>(s.size()), static_cast<std::int64_t>(k)));
      }
      for (std::uint32_t a = 0; a < full; ++a)
        for (std::uint32_t b = 0; b < full; ++b) {
          if ((a & b) == a) REQUIRE(r[a] <= r[b]);
          REQUIRE(r[a] + r[b] >= r[a | b] + r[a & b]);
        }
    }
  }
}

TEST_CASE("general rank of independent sets and of the universe") {
  testing_support::for_each_capacitated(6, [](const Partition& p, const std::vector<std::int64_t>& caps) {
    CapacitatedPartition cp(6, p, caps);
    RankOracle o(cp);
    for (std::uint32_t m = 0; m < 64; ++m) {
      const auto s = mask_set(m);
      const auto r = o.rank(s);
      REQUIRE(r == brute_rank(6, cp.parts(), cp.capacities(), s));
      REQUIRE(o.is_independent(s) == (r == static_cast<std::int64_t>(s.size())));
    }
    REQUIRE(o.rank(mask_set(63)) == cp.total_rank());
  });
}

TEST_CASE("anchored queries match plain queries") {
  std::mt19937_64 rng(3);
  const auto parts = testing_support::random_partition(40, 9, rng);
  CapacitatedPartition cp = [&] {
    std::vector<std::int64_t> caps;
    Partition big;
    for (const auto& p : parts)
      if (p.size() >= 2) big.push_back(p);
    // fold singletons into the first multi-element part
    for (const auto& p : parts)
      if (p.size() < 2) big.front().push_back(p.front());
    for (const auto& p : big) caps.push_back(1 + static_cast<std::int64_t>(rng() % (p.size() - 1)));
    return CapacitatedPartition(40, big, caps);
  }();
  RankOracle o(cp);
  std::vector<ElementId> base;
  for (ElementId e = 0; e < 40; e += 2) base.push_back(e);
  auto anchor = o.make_anchor(base);
  for (int t = 0; t < 200; ++t) {
    std::vector<ElementId> removed, added, plain;
    for (ElementId e = 0; e < 40; ++e) {
      const bool in = e % 2 == 0;
      if (in && rng() % 3 == 0) removed.push_back(e);
      else if (!in && rng() % 3 == 0) added.push_back(e);
      if ((in && (removed.empty() || removed.back() != e)) || (!in && !added.empty() && added.back() == e))
        plain.push_back(e);
    }
    REQUIRE(o.rank(anchor, removed, added) == o.rank(plain));
  }
  // anchor edits
  anchor.insert(1);
  anchor.erase(0);
  std::vector<ElementId> now = base;
  now.erase(now.begin());
  now.push_back(1);
  std::sort(now.begin(), now.end());
  CHECK(o.rank(anchor, {}, {}) == o.rank(now));
  CHECK_THROWS_AS(o.rank(anchor, ids({3}), {}), UsageError);
  CHECK_THROWS_AS(o.rank(anchor, {}, ids({2})), UsageError);
}

TEST_CASE("sum query simulation") {
  RankOracle o(HiddenPartition(4, {{0, 2}, {1}, {3}}));
  CHECK(sum_query_sim(o, ids({0, 1}), ids({2, 3})) == 1);
  CHECK(o.ledger().rank_count() == 1);
  CHECK(sum_query_sim(o, ids({}), ids({2, 3})) == 0);
  CHECK(o.ledger().rank_count() == 1);
  CHECK_THROWS_AS(sum_query_sim(o, ids({2}), ids({2, 3})), UsageError);

  RankOracle singles(HiddenPartition(4, {{0}, {1}, {2}, {3}}));
  CHECK(sum_query_sim(singles, ids({0, 1}), ids({2, 3})) == 0);
}

TEST_CASE("sum query simulation agrees with friendship counts exhaustively") {
  for (std::size_t n = 2; n <= 8; ++n) {
    std::mt19937_64 rng(n);
    for (int trial = 0; trial < 4; ++trial) {
      const auto parts = testing_support::random_partition(n, 1 + rng() % n, rng);
      const auto of = testing_support::part_index(n, parts);
      RankOracle o{HiddenPartition(n, parts)};
      for (std::uint32_t i2m = 0; i2m < (1U << n); ++i2m) {
        const auto i2 = mask_set(i2m);
        if (brute_rank(n, parts, {}, i2) != static_cast<std::int64_t>(i2.size())) continue;
        for (std::uint32_t sm = 0; sm < (1U << n); ++sm) {
          if (sm & i2m) continue;
          const auto s = mask_set(sm);
          if (brute_rank(n, parts, {}, s) != static_cast<std::int64_t>(s.size())) continue;
          std::int64_t want = 0;
          for (auto e : s)
            for (auto f : i2) want += of[e] == of[f];
          REQUIRE(sum_query_sim(o, s, i2) == want);
        }
      }
    }
  }
}

TEST_CASE("add query simulation counts matched pairs") {
  RankOracle o(HiddenPartition(4, {{0, 2}, {1, 3}}));
  CHECK(add_query_sim(o, ids({0, 2})) == 1);
  CHECK(add_query_sim(o, ids({0, 3})) == 0);
  CHECK(add_query_sim(o, ids({0, 1, 2, 3})) == 2);
  CHECK(add_query_sim(o, ids({0, 1}), ids({2, 3})) == 2);
  CHECK(add_query_sim(o, ids({})) == 0);
  CHECK(o.ledger().rank_count() == 4);
}

TEST_CASE("ledger phases nest and totals add up") {
  RankOracle o(HiddenPartition(3, {{0, 1}, {2}}));
  o.rank(ids({0}));
  {
    PhaseScope outer(o.ledger(), "outer");
    o.rank(ids({1}));
    {
      PhaseScope inner(o.ledger(), "inner");
      o.is_independent(ids({0, 1}));
      o.audit_rank(ids({2}));
    }
    CHECK(o.ledger().current_phase() == "outer");
  }
  const auto& ledger = o.ledger();
  CHECK(ledger.rank_count() == 2);
  CHECK(ledger.independence_count() == 1);
  CHECK(ledger.audit_count() == 1);
  CHECK(ledger.per_phase().count("") == 0);  // unphased queries only reach the totals
  CHECK(ledger.per_phase().at("outer").rank == 1);
  CHECK(ledger.per_phase().at("outer/inner").independence == 1);
  const auto sub = ledger.phase_total("outer");
  CHECK(sub.rank == 1);
  CHECK(sub.independence == 1);
  CHECK(sub.audit == 1);
  CHECK(ledger.phase_total("out").rank == 0);

  QueryLedger copy = ledger;
  CHECK(copy == ledger);
  copy.charge(QueryKind::rank);
  CHECK(copy.rank_count() == 3);
  CHECK(ledger.rank_count() == 2);
}

TEST_CASE("canonicalize carries capacities along") {
  Partition p = {{5, 4}, {3, 0}, {2, 1}};
  std::vector<std::int64_t> caps = {1, 2, 3};
  canonicalize(p, caps);
  CHECK(p == Partition{{0, 3}, {1, 2}, {4, 5}});
  CHECK(caps == std::vector<std::int64_t>{2, 3, 1});
}

TEST_CASE("pinned second operand gives the same answers") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 60;
    const auto parts = testing_support::random_partition(n, 1 + rng() % n, rng);
    std::vector<std::int64_t> caps;
    bool capped = rng() % 2;
    for (const auto& p : parts) {
      if (p.size() < 2) capped = false;
      caps.push_back(p.size() < 2 ? 1 : 1 + static_cast<std::int64_t>(rng() % (p.size() - 1)));
    }
    RankOracle o = capped ? RankOracle(CapacitatedPartition(n, parts, caps)) : RankOracle(HiddenPartition(n, parts));
    if (!capped) caps.clear();
    std::vector<ElementId> b, rest;
    for (ElementId e = 0; e < n; ++e) (rng() % 2 ? b : rest).push_back(e);
    PinScope pin(o, b);
    for (int q = 0; q < 20; ++q) {
      std::vector<ElementId> a;
      for (auto e : rest)
        if (rng() % 2) a.push_back(e);
      auto both = a;
      both.insert(both.end(), b.begin(), b.end());
      const auto before = o.ledger().rank_count();
      REQUIRE(o.rank(a, b) == testing_support::brute_rank(n, parts, caps, both));
      REQUIRE(o.ledger().rank_count() == before + 1);
      // a copy of b is not the pinned storage and takes the plain path
      const auto copy = b;
      REQUIRE(o.rank(a, copy) == testing_support::brute_rank(n, parts, caps, both));
    }
    if (!b.empty()) CHECK_THROWS_AS(o.rank(std::vector<ElementId>{b.front()}, b), UsageError);
  }
}

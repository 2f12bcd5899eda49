// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rankprobe/bench.hpp"
#include "rankprobe/core_model.hpp"
#include "rankprobe/matroid_learner.hpp"
#include "rankprobe/partition_learner.hpp"
#include "rankprobe/weighing.hpp"
#include "support.hpp"

using namespace rankprobe;
namespace bench = rankprobe::bench;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::int64_t ceil_log2(std::int64_t v) {
  std::int64_t b = 0;
  while ((std::int64_t{1} << b) < v) ++b;
  return b;
}

std::int64_t stage_total(const std::vector<StageRecord>& stages, const std::string& name) {
  for (const auto& s : stages)
    if (s.stage == name) return s.rank_queries + s.independence_queries;
  return -1;
}

// Stage counts seen by criteria 4 and 5, filled while the matroid runs happen.
struct StageAudit {
  std::size_t instances = 0;
  std::size_t basis_bad = 0;
  std::size_t reps_bad = 0;
  double worst_reps_slack = 1e300;  // bound - used, minimum over instances
  std::string first_problem;

  void record(std::size_t n, std::size_t k, std::int64_t r, const std::vector<StageRecord>& stages,
              const std::string& what) {
    ++instances;
    const auto basis = stage_total(stages, "basis");
    if (basis != static_cast<std::int64_t>(n)) {
      ++basis_bad;
      if (first_problem.empty())
        first_problem = what + ": basis stage used " + std::to_string(basis) + " queries, n=" + std::to_string(n);
    }
    const auto reps = stage_total(stages, "representatives");
    const auto bound = static_cast<std::int64_t>(n) - r + static_cast<std::int64_t>(k) * ceil_log2(r);
    worst_reps_slack = std::min(worst_reps_slack, static_cast<double>(bound - reps));
    if (reps > bound) {
      ++reps_bad;
      if (first_problem.empty())
        first_problem = what + ": representatives used " + std::to_string(reps) + " > " + std::to_string(bound);
    }
  }
};

StageAudit g_stages;

bench::Instance capacitated_instance(std::size_t n, std::size_t k, std::uint64_t seed) {
  bench::InstanceSpec s;
  s.n = n;
  s.family = bench::Family::capacitated_random;
  s.k = k;
  s.seed = seed;
  return bench::generate(s);
}

// ---------------------------------------------------------------------------

Outcome exactness_simple() {
  Outcome out;
  std::size_t exhaustive = 0, random = 0, wrong = 0;
  for (std::size_t n = 1; n <= 7; ++n)
    ts::for_each_set_partition(n, [&](const Partition& p) {
      RankOracle o{HiddenPartition(n, p)};
      if (find_partition(o).parts != p) ++wrong;
      ++exhaustive;
    });
  const bench::Family families[] = {bench::Family::uniform_k, bench::Family::geometric_sizes,
                                    bench::Family::equal_blocks, bench::Family::singleton_heavy};
  for (auto f : families)
    for (std::size_t n : {256, 1024, 4096, 16384})
      for (std::uint64_t seed = 1; seed <= 500; ++seed) {
        bench::InstanceSpec s;
        s.n = n;
        s.family = f;
        s.seed = seed;
        if (f == bench::Family::uniform_k) {
          const std::size_t ks[] = {2, n / 64, n / 16, n / 4, n / 2};
          s.k = ks[seed % 5];
        }
        const auto inst = bench::generate(s);
        RankOracle o{inst.partition()};
        if (find_partition(o).parts != inst.parts) {
          ++wrong;
          if (out.detail.empty())
            out.detail = "first miss: " + std::string(bench::to_string(f)) + " n=" + std::to_string(n) +
                         " seed=" + std::to_string(seed) + "; ";
        }
        ++random;
      }
  out.pass = wrong == 0;
  out.detail += std::to_string(exhaustive) + " exhaustive + " + std::to_string(random) + " random instances, " +
                std::to_string(wrong) + " wrong";
  return out;
}

Outcome exactness_matroid() {
  Outcome out;
  std::size_t exhaustive = 0, random = 0, wrong = 0;
  auto check = [&](const CapacitatedPartition& cp, const std::string& what) {
    RankOracle a(cp), b(cp);
    const auto fast = learn_partition_matroid(a);
    const auto slow = baseline_independence_learner(b);
    const LearnedMatroid truth{cp.parts(), cp.capacities()};
    if (!(fast.result == truth) || !(slow.result == truth)) {
      ++wrong;
      if (out.detail.empty()) out.detail = "first miss: " + what + "; ";
    }
    g_stages.record(cp.size(), cp.part_count(), cp.total_rank(), fast.stages, what + " learner");
    g_stages.record(cp.size(), cp.part_count(), cp.total_rank(), slow.stages, what + " baseline");
  };
  for (std::size_t n = 2; n <= 6; ++n)
    ts::for_each_capacitated(n, [&](const Partition& p, const std::vector<std::int64_t>& caps) {
      check(CapacitatedPartition(n, p, caps), "exhaustive n=" + std::to_string(n));
      ++exhaustive;
    });
  for (std::size_t n = 256; n <= 8192; n *= 2)
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const std::size_t divisors[] = {2, 3, 8, 32, 128};
      const auto k = std::max<std::size_t>(1, n / divisors[seed % 5]);
      const auto inst = capacitated_instance(n, k, seed);
      check(inst.capacitated(), "n=" + std::to_string(n) + " k=" + std::to_string(k) + " seed=" + std::to_string(seed));
      ++random;
    }
  out.pass = wrong == 0;
  out.detail += std::to_string(exhaustive) + " exhaustive + " + std::to_string(random) +
                " random instances, both learners, " + std::to_string(wrong) + " wrong or disagreeing";
  return out;
}

Outcome linear_scaling(const bench::RegressionConfig& cfg) {
  Outcome out;
  const auto c_total = cfg.at("C_total");
  std::map<std::size_t, double> worst;
  std::size_t rows = 0;
  bool all_correct = true;
  for (auto f : {bench::Family::uniform_k, bench::Family::geometric_sizes, bench::Family::equal_blocks,
                 bench::Family::singleton_heavy}) {
    bench::SweepSpec sp;
    sp.family = f;
    sp.n_min = 1 << 10;
    sp.n_max = 1 << 16;
    sp.reps = 2;
    for (const auto& row : bench::sweep(sp)) {
      ++rows;
      all_correct = all_correct && row.report.correct;
      const auto q = static_cast<double>(row.report.ledger.rank_count()) / static_cast<double>(row.spec.n);
      worst[row.spec.n] = std::max(worst[row.spec.n], q);
    }
  }
  double overall = 0;
  std::string series;
  for (const auto& [n, q] : worst) {
    overall = std::max(overall, q);
    series += (series.empty() ? "" : " ") + std::to_string(n) + ":" + fmt(q, 2);
  }
  const auto first = worst.begin()->second;
  const auto last = worst.rbegin()->second;
  out.pass = all_correct && overall <= c_total && last <= first + 0.5 && overall >= 1.0;
  out.detail = std::to_string(rows) + " runs; max rank/n per n " + series + "; max " + fmt(overall, 2) +
               " vs C_total " + fmt(c_total, 2) + "; floor 1.0";
  return out;
}

Outcome basis_exact_n() {
  Outcome out;
  out.pass = g_stages.instances > 0 && g_stages.basis_bad == 0;
  out.detail = std::to_string(g_stages.instances) + " matroid runs, " + std::to_string(g_stages.basis_bad) +
               " with basis stage != n";
  if (!g_stages.first_problem.empty()) out.detail += "; " + g_stages.first_problem;
  return out;
}

Outcome representatives_bound() {
  Outcome out;
  out.pass = g_stages.instances > 0 && g_stages.reps_bad == 0;
  out.detail = std::to_string(g_stages.instances) + " matroid runs, " + std::to_string(g_stages.reps_bad) +
               " over (n - r) + k*ceil(log2 r); tightest slack " + fmt(g_stages.worst_reps_slack, 0);
  return out;
}

Outcome matroid_scaling(const bench::RegressionConfig& cfg) {
  Outcome out;
  const auto c_mat = cfg.at("C_mat");
  const auto c_lin = cfg.at("C_mat_linear");
  double worst = 0, worst_lin = 0;
  std::size_t runs = 0, linear_runs = 0;
  bool ok = true;
  for (std::size_t n = 1 << 10; n <= (1 << 16); n *= 2)
    for (std::size_t div : {2, 4, 16, 64}) {
      const auto inst = capacitated_instance(n, n / div, 1000 + n + div);
      const auto cp = inst.capacitated();
      RankOracle o(cp);
      const auto run = learn_partition_matroid(o);
      ++runs;
      ok = ok && run.result == LearnedMatroid{cp.parts(), cp.capacities()};
      g_stages.record(n, cp.part_count(), cp.total_rank(), run.stages, "sweep n=" + std::to_string(n));
      const auto q = static_cast<double>(o.ledger().rank_count());
      const auto k = static_cast<double>(cp.part_count());
      const auto r = static_cast<double>(cp.total_rank());
      worst = std::max(worst, q / (static_cast<double>(n) + k * std::log2(r)));
      if (k <= static_cast<double>(n) / std::log2(static_cast<double>(n))) {
        ++linear_runs;
        worst_lin = std::max(worst_lin, q / static_cast<double>(n));
      }
    }
  out.pass = ok && worst <= c_mat && worst_lin <= c_lin;
  out.detail = std::to_string(runs) + " runs n=2^10..2^16; max rank/(n + k log2 r) " + fmt(worst, 2) + " vs C_mat " +
               fmt(c_mat, 2) + "; " + std::to_string(linear_runs) + " runs with k <= n/log2 n, max rank/n " +
               fmt(worst_lin, 2) + " vs C'_mat " + fmt(c_lin, 2);
  return out;
}

Outcome baseline_separation() {
  Outcome out;
  const std::size_t n = 1 << 13;
  double worst = 0;
  std::int64_t sum_rank = 0, sum_ind = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    bench::InstanceSpec s;
    s.n = n;
    s.k = n / 4;
    s.seed = seed;
    const auto inst = bench::generate(s);
    const auto fast = bench::run(inst, bench::Learner::find_partition);
    const auto base = bench::run(inst, bench::Learner::baseline);
    if (!fast.correct || !base.correct) out.pass = false;
    const auto ratio =
        static_cast<double>(fast.ledger.rank_count()) / static_cast<double>(base.ledger.independence_count());
    worst = std::max(worst, ratio);
    sum_rank += fast.ledger.rank_count();
    sum_ind += base.ledger.independence_count();
  }
  // the capacitated comparison at the same size, reported for reference
  const auto inst = capacitated_instance(n, n / 4, 7);
  const auto mat = bench::run(inst, bench::Learner::learn_partition_matroid);
  const auto mbase = bench::run(inst, bench::Learner::baseline);
  out.pass = out.pass && worst <= 0.5;
  out.detail = "n=8192 k=2048, 5 seeds: rank " + std::to_string(sum_rank / 5) + " vs independence " +
               std::to_string(sum_ind / 5) + " (mean), worst ratio " + fmt(worst) + " (need <= 0.5); capacitated " +
               std::to_string(mat.ledger.rank_count()) + " vs " + std::to_string(mbase.ledger.independence_count()) +
               " = " +
               fmt(static_cast<double>(mat.ledger.rank_count()) /
                   static_cast<double>(mbase.ledger.independence_count()));
  return out;
}

Outcome weighing_correctness(const bench::RegressionConfig& cfg) {
  using namespace rankprobe::weighing;
  Outcome out;
  std::vector<std::string> problems;
  // injectivity from explicit rows
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto rows = build_detecting_matrix(n).rows();
    std::set<std::vector<std::int64_t>> seen;
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
      std::vector<std::int64_t> y;
      for (const auto& row : rows) {
        std::int64_t s = 0;
        for (auto c : row) s += (mask >> c) & 1U;
        y.push_back(s);
      }
      if (!seen.insert(y).second) problems.push_back("collision at N=" + std::to_string(n));
    }
  }
  std::mt19937_64 rng(2024);
  for (std::size_t n : {64, 512, 4096}) {
    const auto m = build_detecting_matrix(n);
    for (int t = 0; t < 1000; ++t) {
      std::vector<std::uint8_t> x(n);
      const auto density = rng() % 101;
      for (auto& v : x) v = static_cast<std::uint8_t>(rng() % 100 < density);
      if (m.decode(m.apply(x)) != x) {
        problems.push_back("round trip failed at N=" + std::to_string(n));
        break;
      }
    }
  }
  std::size_t budget_checked = 0;
  for (std::size_t n = 1; n <= 70000; n += (n < 5000 ? 1 : 211)) {
    const auto rows = cached_detecting_matrix(n)->row_count();
    const auto nd = static_cast<double>(n);
    const auto cap = std::max(nd, n >= 2 ? 4 * nd / std::log2(nd) : nd);
    if (static_cast<double>(rows) > cap) problems.push_back("row budget exceeded at N=" + std::to_string(n));
    ++budget_checked;
  }

  const auto c_match = cfg.at("c_match");
  double worst_match = 0;
  auto run_matching = [&](std::size_t d, const std::vector<ElementId>& perm) {
    std::vector<ElementId> x(d), y(d), partner(2 * d);
    std::iota(x.begin(), x.end(), ElementId{0});
    std::iota(y.begin(), y.end(), static_cast<ElementId>(d));
    for (std::size_t i = 0; i < d; ++i) {
      partner[i] = static_cast<ElementId>(d + perm[i]);
      partner[d + perm[i]] = static_cast<ElementId>(i);
    }
    std::vector<char> in(2 * d, 0);
    std::int64_t calls = 0;
    const auto r = recover_matching(x, y, [&](std::span<const ElementId> a, std::span<const ElementId> b) {
      ++calls;
      for (auto e : a) in[e] = 1;
      for (auto e : b) in[e] = 1;
      std::int64_t c = 0;
      for (auto span : {a, b})
        for (auto e : span) c += e < d && in[partner[e]];
      for (auto e : a) in[e] = 0;
      for (auto e : b) in[e] = 0;
      return c;
    });
    bool ok = r.pairs.size() == d && r.queries_used == calls;
    for (const auto& [u, v] : r.pairs) ok = ok && partner[u] == v;
    if (!ok) problems.push_back("matching wrong at d=" + std::to_string(d));
    return static_cast<double>(r.queries_used) / static_cast<double>(d);
  };
  std::size_t exhaustive = 0;
  for (std::size_t d = 1; d <= 4; ++d) {
    std::vector<ElementId> perm(d);
    std::iota(perm.begin(), perm.end(), ElementId{0});
    do {
      run_matching(d, perm);
      ++exhaustive;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  for (std::size_t d : {32, 256, 1024})
    for (int t = 0; t < 100; ++t) {
      std::vector<ElementId> perm(d);
      std::iota(perm.begin(), perm.end(), ElementId{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      worst_match = std::max(worst_match, run_matching(d, perm));
    }
  if (worst_match > c_match) problems.push_back("matching queries/d " + fmt(worst_match) + " > c_match");
  out.pass = problems.empty();
  out.detail = "injective N<=12, 3000 round trips, row budget on " + std::to_string(budget_checked) + " sizes, " +
               std::to_string(exhaustive) + " exhaustive + 300 random matchings, max queries/d " +
               fmt(worst_match, 2) + " vs c_match " + fmt(c_match, 2);
  if (!problems.empty()) out.detail += "; " + problems.front();
  return out;
}

Outcome simulated_ranks() {
  Outcome out;
  std::size_t instances = 0, subsets = 0, wrong = 0;
  auto check = [&](const CapacitatedPartition& cp) {
    const auto n = cp.size();
    RankOracle o(cp);
    const auto basis = find_basis(o);
    const auto reps = find_representatives(o, basis);
    InsideBasisSource in(o, basis.members, reps.t2);
    OutsideBasisSource outside(o, basis.members, reps.t1);
    std::vector<std::uint32_t> of(n);
    for (std::size_t i = 0; i < cp.parts().size(); ++i)
      for (auto e : cp.parts()[i]) of[e] = static_cast<std::uint32_t>(i);
    std::vector<std::uint32_t> stamp(cp.parts().size(), 0);
    std::uint32_t epoch = 0;
    auto simple = [&](const std::vector<ElementId>& s) {
      ++epoch;
      std::int64_t r = 0;
      for (auto e : s)
        if (stamp[of[e]] != epoch) {
          stamp[of[e]] = epoch;
          ++r;
        }
      return r;
    };
    auto sweep_side = [&](RankSource& src, const std::function<ElementId(ElementId)>& global) {
      const auto m = src.universe_size();
      std::vector<ElementId> local, glob;
      for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
        local.clear();
        glob.clear();
        for (ElementId i = 0; i < m; ++i)
          if ((mask >> i) & 1U) {
            local.push_back(i);
            glob.push_back(global(i));
          }
        if (src.rank(local) != simple(glob)) ++wrong;
        ++subsets;
      }
    };
    sweep_side(in, [&](ElementId i) { return in.global(i); });
    sweep_side(outside, [&](ElementId i) { return outside.global(i); });
    ++instances;
  };
  for (std::size_t n = 2; n <= 6; ++n)
    ts::for_each_capacitated(n, [&](const Partition& p, const std::vector<std::int64_t>& caps) {
      check(CapacitatedPartition(n, p, caps));
    });
  // random instances with both sides of size at most 10
  std::mt19937_64 rng(99);
  std::size_t made = 0;
  while (made < 400) {
    const std::size_t n = 7 + rng() % 14;
    const std::size_t k = 1 + rng() % (n / 2);
    std::vector<ElementId> perm(n);
    std::iota(perm.begin(), perm.end(), ElementId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Partition p(k);
    for (std::size_t i = 0; i < n; ++i) p[i < 2 * k ? i % k : rng() % k].push_back(perm[i]);
    std::vector<std::int64_t> caps;
    std::int64_t r = 0;
    for (const auto& part : p) {
      caps.push_back(1 + static_cast<std::int64_t>(rng() % (part.size() - 1)));
      r += caps.back();
    }
    if (r > 10 || static_cast<std::int64_t>(n) - r > 10) continue;
    check(CapacitatedPartition(n, p, caps));
    ++made;
  }
  out.pass = wrong == 0;
  out.detail = std::to_string(instances) + " instances, " + std::to_string(subsets) + " subsets, " +
               std::to_string(wrong) + " mismatches";
  return out;
}

Outcome determinism() {
  Outcome out;
  std::size_t compared = 0, differing = 0;
  auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    if (a != b) ++differing;
  };
  for (auto f : {bench::Family::uniform_k, bench::Family::geometric_sizes, bench::Family::equal_blocks,
                 bench::Family::singleton_heavy, bench::Family::capacitated_random}) {
    bench::InstanceSpec s;
    s.n = 4096;
    s.family = f;
    s.seed = 31;
    const auto a = bench::generate(s);
    const auto b = bench::generate(s);
    same(bench::to_json(a), bench::to_json(b));
    const auto reread = bench::parse_instance(bench::to_json(a));
    const bool capped = f == bench::Family::capacitated_random;
    for (auto l : {bench::Learner::find_partition, bench::Learner::learn_partition_matroid, bench::Learner::baseline}) {
      if (capped && l == bench::Learner::find_partition) continue;
      for (bool audit : {false, true}) {
        const auto r1 = bench::run(a, l, audit);
        const auto r2 = bench::run(reread, l, audit);
        same(bench::to_json(r1, false), bench::to_json(r2, false));
      }
    }
  }
  bench::SweepSpec sp;
  sp.n_min = 512;
  sp.n_max = 4096;
  sp.reps = 3;
  sp.jobs = 1;
  const auto serial = bench::to_csv(bench::sweep(sp));
  sp.jobs = 4;
  same(serial, bench::to_csv(bench::sweep(sp)));
  out.pass = differing == 0;
  out.detail = std::to_string(compared) + " byte comparisons (instances, reports with and without audit, " +
               "sweep CSV at 1 vs 4 workers), " + std::to_string(differing) + " differ";
  return out;
}

}  // namespace

int main() {
  const auto cfg = bench::load_default_regression_config();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  // 2 and 6 feed the stage audit read by 4 and 5
  const std::vector<Criterion> criteria = {
      {1, "exactness on simple partitions", exactness_simple},
      {2, "exactness on partition matroids", exactness_matroid},
      {3, "linear rank-query scaling", [&] { return linear_scaling(cfg); }},
      {6, "matroid learner scaling", [&] { return matroid_scaling(cfg); }},
      {4, "basis stage uses exactly n queries", basis_exact_n},
      {5, "representatives within (n - r) + k ceil(log2 r)", representatives_bound},
      {7, "rank learner at most half the independence baseline", baseline_separation},
      {8, "weighing correctness", [&] { return weighing_correctness(cfg); }},
      {9, "simulated simple ranks match brute force", simulated_ranks},
      {10, "determinism", determinism},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    lines[c.id] = std::string(o.pass ? "PASS" : "FAIL") + " " + std::to_string(c.id) + " " + c.name + ": " +
                  o.detail + " [" + fmt(secs, 1) + "s]";
    std::fprintf(stderr, "%s\n", lines[c.id].c_str());
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all ? 0 : 1;
}

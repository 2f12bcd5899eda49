#include "rankprobe/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rankprobe/errors.hpp"

#ifndef RANKPROBE_SOURCE_DIR
#define RANKPROBE_SOURCE_DIR "."
#endif

namespace rankprobe::bench {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&names)[N], const char* what) {
  for (const auto& [value, name] : names)
    if (name == s) return value;
  throw UsageError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::pair<E, std::string_view> (&names)[N]) {
  for (const auto& [value, name] : names)
    if (value == e) return name;
  return "?";
}

constexpr std::pair<Family, std::string_view> kFamilies[] = {
    {Family::uniform_k, "uniform-k"},
    {Family::geometric_sizes, "geometric-sizes"},
    {Family::equal_blocks, "equal-blocks"},
    {Family::singleton_heavy, "singleton-heavy"},
    {Family::capacitated_random, "capacitated-random"},
};
constexpr std::pair<CapacityRule, std::string_view> kRules[] = {
    {CapacityRule::random, "random"},
    {CapacityRule::one, "one"},
    {CapacityRule::half, "half"},
};
constexpr std::pair<Learner, std::string_view> kLearners[] = {
    {Learner::find_partition, "find_partition"},
    {Learner::learn_partition_matroid, "learn_partition_matroid"},
    {Learner::baseline, "baseline"},
};

}  // namespace

std::string_view to_string(Family f) { return enum_name(f, kFamilies); }
std::string_view to_string(CapacityRule r) { return enum_name(r, kRules); }
std::string_view to_string(Learner l) { return enum_name(l, kLearners); }
Family parse_family(std::string_view s) { return parse_enum(s, kFamilies, "family"); }
CapacityRule parse_capacity_rule(std::string_view s) { return parse_enum(s, kRules, "capacity rule"); }
Learner parse_learner(std::string_view s) { return parse_enum(s, kLearners, "learner"); }

// ---------------------------------------------------------------------------

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw InvariantViolation("empty range");
    const auto limit = std::numeric_limits<std::uint64_t>::max() -
                       std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

std::vector<ElementId> shuffled_universe(std::size_t n, Rng& rng) {
  std::vector<ElementId> perm(n);
  std::iota(perm.begin(), perm.end(), ElementId{0});
  rng.shuffle(perm);
  return perm;
}

// First `seeded_per_part` * k shuffled elements go round-robin so every part
// gets that many; the rest land on a uniform part among the first `spread`.
Partition scatter(std::size_t n, std::size_t k, std::size_t seeded_per_part, std::size_t spread,
                  Rng& rng) {
  const auto perm = shuffled_universe(n, rng);
  Partition parts(k);
  std::size_t i = 0;
  for (; i < k * seeded_per_part; ++i) parts[i % k].push_back(perm[i]);
  for (; i < n; ++i) parts[rng.below(spread)].push_back(perm[i]);
  return parts;
}

std::vector<std::int64_t> assign_capacities(const Partition& parts, CapacityRule rule, Rng& rng) {
  std::vector<std::int64_t> caps;
  for (const auto& p : parts) {
    const auto size = static_cast<std::int64_t>(p.size());
    if (size < 2) throw UsageError("capacitated instances need every part to have at least 2 elements");
    switch (rule) {
      case CapacityRule::one: caps.push_back(1); break;
      case CapacityRule::half: caps.push_back(std::max<std::int64_t>(1, size / 2)); break;
      case CapacityRule::random:
        caps.push_back(1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size - 1))));
        break;
    }
  }
  return caps;
}

}  // namespace

CapacitatedPartition Instance::capacitated() const {
  if (!capacities) throw UsageError("instance carries no capacities");
  return CapacitatedPartition(n, parts, *capacities);
}

Instance generate(const InstanceSpec& spec) {
  const auto n = spec.n;
  if (n == 0) throw UsageError("n must be positive");
  Rng rng(spec.seed);
  Instance inst;
  inst.n = n;
  inst.generator = spec;

  switch (spec.family) {
    case Family::uniform_k: {
      const auto k = spec.k ? spec.k : std::max<std::size_t>(1, n / 4);
      if (k > n) throw UsageError("k exceeds n");
      inst.parts = scatter(n, k, 1, k, rng);
      break;
    }
    case Family::geometric_sizes: {
      const auto max_parts = spec.k ? spec.k : n;
      if (max_parts > n) throw UsageError("k exceeds n");
      const auto perm = shuffled_universe(n, rng);
      std::size_t used = 0;
      while (used < n) {
        const auto remaining = n - used;
        const auto size = inst.parts.size() + 1 == max_parts ? remaining : (remaining + 1) / 2;
        inst.parts.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(used),
                                perm.begin() + static_cast<std::ptrdiff_t>(used + size));
        used += size;
      }
      break;
    }
    case Family::equal_blocks: {
      const auto block = spec.block ? spec.block : 4;
      for (std::size_t lo = 0; lo < n; lo += block) {
        Part p;
        for (auto e = lo; e < std::min(n, lo + block); ++e) p.push_back(static_cast<ElementId>(e));
        inst.parts.push_back(std::move(p));
      }
      break;
    }
    case Family::singleton_heavy: {
      const auto k = spec.k ? spec.k : std::max<std::size_t>(1, n - n / 8);
      if (k > n) throw UsageError("k exceeds n");
      inst.parts = scatter(n, k, 1, std::max<std::size_t>(1, k / 8), rng);
      break;
    }
    case Family::capacitated_random: {
      const auto k = spec.k ? spec.k : std::max<std::size_t>(1, n / 4);
      if (2 * k > n) throw UsageError("capacitated instances need n >= 2k");
      inst.parts = scatter(n, k, 2, k, rng);
      break;
    }
  }

  if (spec.family == Family::capacitated_random || spec.capacitated) {
    auto caps = assign_capacities(inst.parts, spec.capacity_rule, rng);
    canonicalize(inst.parts, caps);
    inst.capacities = std::move(caps);
  } else {
    canonicalize(inst.parts);
  }
  return inst;
}

// ---------------------------------------------------------------------------

namespace {

json spec_json(const InstanceSpec& s) {
  return json{{"family", to_string(s.family)},
              {"k", s.k},
              {"block", s.block},
              {"capacitated", s.capacitated},
              {"capacity_rule", to_string(s.capacity_rule)},
              {"seed", s.seed},
              {"rng", kRngId}};
}

InstanceSpec spec_from_json(std::size_t n, const json& j) {
  InstanceSpec s;
  s.n = n;
  s.family = parse_family(j.at("family").get<std::string>());
  s.k = j.value("k", std::size_t{0});
  s.block = j.value("block", std::size_t{0});
  s.capacitated = j.value("capacitated", false);
  s.capacity_rule = parse_capacity_rule(j.value("capacity_rule", std::string("random")));
  s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("rng") && j.at("rng").get<std::string>() != kRngId)
    throw UsageError("instance generated with unsupported rng '" + j.at("rng").get<std::string>() + "'");
  return s;
}

}  // namespace

std::string to_json(const Instance& instance) {
  json j;
  j["n"] = instance.n;
  j["parts"] = instance.parts;
  j["capacities"] = instance.capacities ? json(*instance.capacities) : json(nullptr);
  if (instance.generator) j["generator"] = spec_json(*instance.generator);
  return j.dump();
}

Instance parse_instance(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed instance JSON: ") + e.what());
  }
  try {
    Instance inst;
    inst.n = j.at("n").get<std::size_t>();
    inst.parts = j.at("parts").get<Partition>();
    if (j.contains("capacities") && !j.at("capacities").is_null()) {
      auto caps = j.at("capacities").get<std::vector<std::int64_t>>();
      // Validates and canonicalizes both together.
      CapacitatedPartition cp(inst.n, inst.parts, caps);
      inst.parts = cp.parts();
      inst.capacities = cp.capacities();
    } else {
      inst.parts = HiddenPartition(inst.n, inst.parts).parts();
    }
    if (j.contains("generator")) inst.generator = spec_from_json(inst.n, j.at("generator"));
    return inst;
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid instance: ") + e.what());
  }
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open instance file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write instance file " + path);
  out << to_json(instance) << '\n';
}

std::string digest(const Instance& instance) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(instance)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

void collect(MergeStats& stats, const PartitionRun& run) {
  for (const auto& m : run.merges) {
    ++stats.merges;
    if (m.thick) {
      ++stats.thick_merges;
      if (m.common > 0)
        stats.max_thick_ratio =
            std::max(stats.max_thick_ratio, static_cast<double>(m.rank_queries) / static_cast<double>(m.common));
    } else if (m.phase == "pairwise-merge") {
      stats.thin_queries += m.rank_queries;
    }
  }
  stats.survivors = std::max(stats.survivors, run.survivors);
}

}  // namespace

RunReport run(const Instance& instance, Learner learner, bool audit) {
  RunReport report;
  report.instance_digest = digest(instance);
  report.learner = learner;
  report.n = instance.n;
  report.k = instance.parts.size();

  const bool has_caps = instance.capacities.has_value();
  const bool all_one =
      !has_caps || std::all_of(instance.capacities->begin(), instance.capacities->end(),
                               [](auto r) { return r == 1; });
  report.rank_total = has_caps ? std::accumulate(instance.capacities->begin(), instance.capacities->end(),
                                                 std::int64_t{0})
                               : static_cast<std::int64_t>(report.k);

  if (learner == Learner::find_partition && !all_one)
    throw UsageError("find_partition needs a plain partition; this instance has capacities above 1");
  bool simple = learner == Learner::find_partition;
  if (learner == Learner::learn_partition_matroid && !has_caps) {
    const bool has_singleton = std::any_of(instance.parts.begin(), instance.parts.end(),
                                           [](const Part& p) { return p.size() < 2; });
    if (has_singleton) {
      simple = true;
      report.routed_to_find_partition = true;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  if (simple) {
    RankOracle oracle(instance.partition());
    FindPartitionOptions options;
    options.audit = audit;
    const auto result = find_partition(oracle, options);
    report.correct = result.parts == instance.parts;
    report.phases = result.phases;
    collect(report.merge_stats, result);
    report.ledger = oracle.ledger();
  } else {
    RankOracle oracle = has_caps ? RankOracle(instance.capacitated()) : RankOracle(instance.partition());
    const auto truth_caps = has_caps ? *instance.capacities
                                     : std::vector<std::int64_t>(instance.parts.size(), 1);
    MatroidOptions options;
    options.audit = audit;
    options.partition.audit = audit;
    MatroidRun result;
    if (learner == Learner::learn_partition_matroid)
      result = learn_partition_matroid(oracle, options);
    else if (has_caps)
      result = baseline_independence_learner(oracle, options);
    else
      result = baseline_simple_partition(oracle, options);
    report.correct = result.result.parts == instance.parts && result.result.capacities == truth_caps;
    report.stages = result.stages;
    if (learner == Learner::learn_partition_matroid) {
      collect(report.merge_stats, result.inside);
      collect(report.merge_stats, result.outside);
    }
    report.ledger = oracle.ledger();
  }
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string to_json(const RunReport& r, bool include_wall_time) {
  json phases = json::array();
  for (const auto& p : r.phases)
    phases.push_back({{"phase", p.phase},
                      {"merges", p.merges},
                      {"thick_merges", p.thick_merges},
                      {"rank_queries", p.rank_queries}});
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"stage", s.stage},
                      {"rank_queries", s.rank_queries},
                      {"independence_queries", s.independence_queries}});
  json per_phase = json::object();
  for (const auto& [key, c] : r.ledger.per_phase())
    per_phase[key] = {{"rank", c.rank}, {"independence", c.independence}, {"audit", c.audit}};
  json j{{"instance_digest", r.instance_digest},
         {"learner", to_string(r.learner)},
         {"routed_to_find_partition", r.routed_to_find_partition},
         {"n", r.n},
         {"k", r.k},
         {"rank_total", r.rank_total},
         {"correct", r.correct},
         {"ledger",
          {{"rank", r.ledger.rank_count()},
           {"independence", r.ledger.independence_count()},
           {"audit", r.ledger.audit_count()},
           {"per_phase", per_phase}}},
         {"phases", phases},
         {"stages", stages},
         {"merge_stats",
          {{"merges", r.merge_stats.merges},
           {"thick_merges", r.merge_stats.thick_merges},
           {"max_thick_ratio", r.merge_stats.max_thick_ratio},
           {"thin_queries", r.merge_stats.thin_queries},
           {"survivors", r.merge_stats.survivors}}}};
  if (include_wall_time) j["wall_ms"] = r.wall_ms;
  return j.dump();
}

// ---------------------------------------------------------------------------

double RegressionConfig::at(const std::string& name) const {
  const auto it = constants.find(name);
  if (it == constants.end()) throw UsageError("regression config lacks constant " + name);
  return it->second;
}

std::optional<std::int64_t> RegressionConfig::sparse_budget(std::size_t n, std::size_t d) const {
  for (const auto& b : sparse_budgets)
    if (b.n == n && b.d == d) return b.max_queries;
  return std::nullopt;
}

RegressionConfig load_regression_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open regression config " + path);
  json j;
  try {
    j = json::parse(in);
    RegressionConfig c;
    c.version = j.at("version").get<std::string>();
    c.measured_on = j.at("measured_on").get<std::string>();
    for (const auto& [name, entry] : j.at("constants").items()) {
      if (!entry.contains("version") || !entry.contains("measured_on"))
        throw UsageError("constant " + name + " lacks version or measurement date");
      c.constants[name] = entry.at("value").get<double>();
    }
    for (const auto& b : j.value("sparse_budgets", json::array()))
      c.sparse_budgets.push_back(
          {b.at("n").get<std::size_t>(), b.at("d").get<std::size_t>(), b.at("max_queries").get<std::int64_t>()});
    return c;
  } catch (const json::exception& e) {
    throw UsageError("invalid regression config " + path + ": " + e.what());
  }
}

std::string default_regression_path() {
  if (const char* env = std::getenv("RANKPROBE_REGRESSION"); env != nullptr && *env != '\0') return env;
  return std::string(RANKPROBE_SOURCE_DIR) + "/config/regression.json";
}

RegressionConfig load_default_regression_config() {
  return load_regression_config(default_regression_path());
}

namespace {

std::int64_t ceil_log2(std::int64_t v) {
  std::int64_t bits = 0;
  while ((std::int64_t{1} << bits) < v) ++bits;
  return bits;
}

}  // namespace

std::vector<std::string> check_report(const RunReport& r, const RegressionConfig& config) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& what, double measured, double bound) {
    std::ostringstream ss;
    ss << what << ": measured " << measured << " exceeds bound " << bound;
    out.push_back(ss.str());
  };
  if (!r.correct) out.push_back("learned structure differs from ground truth");
  const auto n = static_cast<double>(r.n);
  const auto k = static_cast<double>(r.k);
  const auto rank = static_cast<double>(r.ledger.rank_count());

  if (r.merge_stats.max_thick_ratio > config.at("c_thick"))
    fail("thick merge queries / d", r.merge_stats.max_thick_ratio, config.at("c_thick"));

  const bool simple = r.learner == Learner::find_partition || r.routed_to_find_partition;
  if (simple) {
    if (r.n > 0 && rank > config.at("C_total") * n) fail("rank queries / n", rank / n, config.at("C_total"));
    if (static_cast<double>(r.merge_stats.thin_queries) > config.at("c_thin") * n)
      fail("thin merge queries / n", static_cast<double>(r.merge_stats.thin_queries) / n, config.at("c_thin"));
    return out;
  }

  const auto total_rank = r.rank_total;
  for (const auto& s : r.stages) {
    const auto q = s.rank_queries + s.independence_queries;
    if (s.stage == "basis" && q != static_cast<std::int64_t>(r.n))
      out.push_back("basis stage used " + std::to_string(q) + " queries, expected exactly " +
                    std::to_string(r.n));
    if (s.stage == "representatives") {
      const auto bound = (static_cast<std::int64_t>(r.n) - total_rank) +
                         static_cast<std::int64_t>(r.k) * ceil_log2(total_rank);
      if (q > bound) fail("representative queries", static_cast<double>(q), static_cast<double>(bound));
    }
  }
  const auto log_r = total_rank > 1 ? std::log2(static_cast<double>(total_rank)) : 0.0;
  if (r.learner == Learner::learn_partition_matroid) {
    const auto bound = config.at("C_mat") * (n + k * log_r);
    if (rank > bound) fail("matroid rank queries", rank, bound);
    if (r.n > 1 && k <= n / std::log2(n) && rank > config.at("C_mat_linear") * n)
      fail("matroid rank queries / n", rank / n, config.at("C_mat_linear"));
  } else {
    const auto indep = static_cast<double>(r.ledger.independence_count());
    const auto bound = config.at("c_base") * n * std::log2(k + 1) + n;
    if (indep > bound) fail("baseline independence queries", indep, bound);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  std::vector<InstanceSpec> tasks;
  for (auto n = spec.n_min; n > 0 && n <= spec.n_max; n *= 2) {
    std::vector<std::size_t> ks = spec.k_values;
    if (ks.empty()) ks.push_back(spec.k_divisor ? std::max<std::size_t>(1, n / spec.k_divisor) : 0);
    for (auto k : ks) {
      for (std::size_t rep = 0; rep < spec.reps; ++rep) {
        InstanceSpec s;
        s.n = n;
        s.family = spec.family;
        s.k = k;
        s.block = spec.block;
        s.capacitated = spec.capacitated;
        s.capacity_rule = spec.capacity_rule;
        s.seed = spec.seed_base + rep;
        tasks.push_back(s);
      }
    }
    if (n > std::numeric_limits<std::size_t>::max() / 2) break;
  }

  std::vector<SweepRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < tasks.size(); i = next++) {
      try {
        rows[i].spec = tasks[i];
        rows[i].report = run(generate(tasks[i]), spec.learner);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  auto jobs = spec.jobs ? spec.jobs : std::max(1U, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

namespace {

constexpr const char* kCsvColumns[] = {
    "n", "k", "family", "seed", "learner", "rank_queries", "independence_queries", "queries_per_n",
    "correct", "pairwise_merge_queries", "final_fold_queries", "merges", "thick_merges",
    "basis_queries", "representatives_queries", "inside_basis_queries", "outside_basis_queries",
    "stitch_queries"};

std::string fmt_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string sweep_csv_header() {
  std::string h;
  for (const auto* c : kCsvColumns) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h + '\n';
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << sweep_csv_header();
  std::map<std::size_t, std::pair<double, bool>> summary;  // n -> (max q/n, all correct)
  std::string learner;
  for (const auto& row : rows) {
    const auto& r = row.report;
    const auto queries = r.ledger.rank_count() + r.ledger.independence_count();
    const auto per_n = r.n ? static_cast<double>(queries) / static_cast<double>(r.n) : 0.0;
    auto phase = [&](std::string_view name) -> std::string {
      for (const auto& p : r.phases)
        if (p.phase == name) return std::to_string(p.rank_queries);
      return "";
    };
    auto stage = [&](std::string_view name) -> std::string {
      for (const auto& s : r.stages)
        if (s.stage == name) return std::to_string(s.rank_queries + s.independence_queries);
      return "";
    };
    std::size_t merges = 0, thick = 0;
    for (const auto& p : r.phases) {
      merges += p.merges;
      thick += p.thick_merges;
    }
    const bool has_phases = !r.phases.empty();
    learner = std::string(to_string(r.learner));
    out << r.n << ',' << r.k << ',' << to_string(row.spec.family) << ',' << row.spec.seed << ','
        << learner << ',' << r.ledger.rank_count() << ',' << r.ledger.independence_count() << ','
        << fmt_ratio(per_n) << ',' << (r.correct ? "true" : "false") << ',' << phase("pairwise-merge")
        << ',' << phase("final-fold") << ',' << (has_phases ? std::to_string(merges) : "") << ','
        << (has_phases ? std::to_string(thick) : "") << ',' << stage("basis") << ','
        << stage("representatives") << ',' << stage("inside-basis") << ',' << stage("outside-basis")
        << ',' << stage("stitch") << '\n';
    auto& s = summary.try_emplace(r.n, 0.0, true).first->second;
    s.first = std::max(s.first, per_n);
    s.second = s.second && r.correct;
  }
  for (const auto& [n, s] : summary) {
    out << n << ",,summary,," << learner << ",,," << fmt_ratio(s.first) << ','
        << (s.second ? "true" : "false") << ",,,,,,,,,\n";
  }
  return out.str();
}

}  // namespace rankprobe::bench

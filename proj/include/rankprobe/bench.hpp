#pragma once

// Instance generation, verified learner runs, sweeps, and the frozen query
// bounds that runs are checked against.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankprobe/core_model.hpp"
#include "rankprobe/matroid_learner.hpp"
#include "rankprobe/partition_learner.hpp"

namespace rankprobe::bench {

enum class Family { uniform_k, geometric_sizes, equal_blocks, singleton_heavy, capacitated_random };
enum class CapacityRule { random, one, half };
enum class Learner { find_partition, learn_partition_matroid, baseline };

std::string_view to_string(Family f);
std::string_view to_string(CapacityRule r);
std::string_view to_string(Learner l);
Family parse_family(std::string_view s);
CapacityRule parse_capacity_rule(std::string_view s);
Learner parse_learner(std::string_view s);

// Pseudo-random stream used by every generator: std::mt19937_64 seeded with
// the instance seed; bounded draws by rejection, shuffles by Fisher-Yates.
inline constexpr std::string_view kRngId = "mt19937_64/rejection/fisher-yates";

struct InstanceSpec {
  std::size_t n = 0;
  Family family = Family::uniform_k;
  // Number of parts; 0 picks the family default. Ignored by equal-blocks.
  std::size_t k = 0;
  // Block size for equal-blocks; 0 means 4.
  std::size_t block = 0;
  // Attach capacities to a family that does not carry them by itself.
  bool capacitated = false;
  CapacityRule capacity_rule = CapacityRule::random;
  std::uint64_t seed = 1;
};

struct Instance {
  std::size_t n = 0;
  Partition parts;  // canonical
  std::optional<std::vector<std::int64_t>> capacities;
  std::optional<InstanceSpec> generator;

  HiddenPartition partition() const { return HiddenPartition(n, parts); }
  CapacitatedPartition capacitated() const;
};

// Same InstanceSpec, same instance. Throws UsageError when infeasible.
Instance generate(const InstanceSpec& spec);

// Canonical JSON: sorted parts, compact output, keys in lexicographic order.
std::string to_json(const Instance& instance);
Instance parse_instance(std::string_view json);
Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

// FNV-1a 64 of the canonical JSON, hex.
std::string digest(const Instance& instance);

// ---------------------------------------------------------------------------

struct MergeStats {
  std::size_t merges = 0;
  std::size_t thick_merges = 0;
  double max_thick_ratio = 0.0;          // max over thick merges of queries / d
  std::int64_t thin_queries = 0;         // pairwise-phase thin merges
  std::size_t survivors = 0;
};

struct RunReport {
  std::string instance_digest;
  Learner learner = Learner::find_partition;
  // Set when a matroid learner was handed a plain partition with singleton
  // parts and find_partition ran instead.
  bool routed_to_find_partition = false;
  std::size_t n = 0;
  std::size_t k = 0;
  std::int64_t rank_total = 0;  // r = sum of capacities (k for plain partitions)
  QueryLedger ledger;
  bool correct = false;
  double wall_ms = 0.0;
  std::vector<PhaseRecord> phases;  // find_partition
  std::vector<StageRecord> stages;  // matroid learners
  MergeStats merge_stats;
};

RunReport run(const Instance& instance, Learner learner, bool audit = false);

std::string to_json(const RunReport& report, bool include_wall_time = true);

// ---------------------------------------------------------------------------

struct SparseBudget {
  std::size_t n = 0;
  std::size_t d = 0;
  std::int64_t max_queries = 0;
};

// Named empirical bounds standing in for the asymptotic constants.
struct RegressionConfig {
  std::string version;
  std::string measured_on;
  std::map<std::string, double> constants;
  std::vector<SparseBudget> sparse_budgets;

  double at(const std::string& name) const;
  std::optional<std::int64_t> sparse_budget(std::size_t n, std::size_t d) const;
};

RegressionConfig load_regression_config(const std::string& path);
// $RANKPROBE_REGRESSION if set, else the copy shipped with the sources.
std::string default_regression_path();
RegressionConfig load_default_regression_config();

// Human-readable violations of the config's bounds; empty when clean.
std::vector<std::string> check_report(const RunReport& report, const RegressionConfig& config);

// ---------------------------------------------------------------------------

struct SweepSpec {
  Family family = Family::uniform_k;
  std::size_t n_min = 1024;
  std::size_t n_max = 1024;  // doubling from n_min; empty range if n_min > n_max
  std::size_t reps = 1;
  Learner learner = Learner::find_partition;
  // Explicit k values (each run at every n); empty uses k = n / k_divisor,
  // or the family default when k_divisor is 0.
  std::vector<std::size_t> k_values;
  std::size_t k_divisor = 0;
  std::size_t block = 0;
  bool capacitated = false;
  CapacityRule capacity_rule = CapacityRule::random;
  std::uint64_t seed_base = 1;
  unsigned jobs = 0;  // 0: hardware concurrency
};

struct SweepRow {
  InstanceSpec spec;
  RunReport report;
};

// Rows are ordered by (n, k, seed) regardless of which worker finished first.
std::vector<SweepRow> sweep(const SweepSpec& spec);

std::string sweep_csv_header();
// Data rows followed by one summary row per n carrying the max queries / n.
std::string to_csv(const std::vector<SweepRow>& rows);

}  // namespace rankprobe::bench

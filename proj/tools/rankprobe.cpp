// rankprobe: generate instances, run learners, sweep n.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rankprobe/bench.hpp"
#include "rankprobe/errors.hpp"

namespace rb = rankprobe::bench;

namespace {

int report_violations(const std::vector<std::string>& violations, const std::string& where) {
  for (const auto& v : violations) std::cerr << where << ": " << v << '\n';
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-query partition and partition-matroid learners"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  std::string family = "uniform-k", capacity_rule = "random", gen_out;
  rb::InstanceSpec spec;
  gen->add_option("--family", family, "uniform-k | geometric-sizes | equal-blocks | singleton-heavy | capacitated-random");
  gen->add_option("--n", spec.n, "universe size")->required();
  gen->add_option("--k", spec.k, "number of parts (0: family default)");
  gen->add_option("--block", spec.block, "block size for equal-blocks");
  gen->add_flag("--capacitated", spec.capacitated, "attach capacities");
  gen->add_option("--capacity-rule", capacity_rule, "random | one | half");
  gen->add_option("--seed", spec.seed, "64-bit seed")->required();
  gen->add_option("-o,--output", gen_out, "output file (default stdout)");

  // run
  auto* runc = app.add_subcommand("run", "run a learner on an instance and verify it");
  std::string instance_path, learner = "find_partition";
  bool audit = false, as_json = false, no_regression = false;
  runc->add_option("--instance", instance_path, "instance file")->required();
  runc->add_option("--learner", learner, "find_partition | learn_partition_matroid | baseline");
  runc->add_flag("--audit", audit, "extra invariant checks (ledgered separately)");
  runc->add_flag("--json", as_json, "print the full report as JSON");
  runc->add_flag("--no-regression", no_regression, "skip the frozen query bounds");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run a learner over doubling n and write CSV");
  rb::SweepSpec sweep_spec;
  std::string sweep_family = "uniform-k", sweep_learner = "find_partition", sweep_rule = "random", sweep_out;
  bool sweep_no_regression = false;
  sw->add_option("--family", sweep_family);
  sw->add_option("--n-min", sweep_spec.n_min)->required();
  sw->add_option("--n-max", sweep_spec.n_max)->required();
  sw->add_option("--reps", sweep_spec.reps);
  sw->add_option("--learner", sweep_learner);
  sw->add_option("--k", sweep_spec.k_values, "explicit k values (repeatable)");
  sw->add_option("--k-div", sweep_spec.k_divisor, "k = n / K");
  sw->add_option("--block", sweep_spec.block);
  sw->add_flag("--capacitated", sweep_spec.capacitated);
  sw->add_option("--capacity-rule", sweep_rule);
  sw->add_option("--seed", sweep_spec.seed_base, "seed of the first repetition");
  sw->add_option("--jobs", sweep_spec.jobs, "worker threads (0: all cores)");
  sw->add_flag("--no-regression", sweep_no_regression);
  sw->add_option("-o,--output", sweep_out, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      spec.family = rb::parse_family(family);
      spec.capacity_rule = rb::parse_capacity_rule(capacity_rule);
      const auto inst = rb::generate(spec);
      if (gen_out.empty()) {
        std::cout << rb::to_json(inst) << '\n';
      } else {
        rb::save_instance(inst, gen_out);
      }
      return 0;
    }

    if (runc->parsed()) {
      const auto inst = rb::load_instance(instance_path);
      const auto report = rb::run(inst, rb::parse_learner(learner), audit);
      if (as_json) {
        std::cout << rb::to_json(report) << '\n';
      } else {
        std::cout << rb::to_string(report.learner) << " n=" << report.n << " k=" << report.k
                  << " rank=" << report.ledger.rank_count()
                  << " independence=" << report.ledger.independence_count()
                  << " correct=" << (report.correct ? "true" : "false") << '\n';
      }
      if (!report.correct) {
        std::cerr << "run: learned structure differs from ground truth\n";
        return 1;
      }
      if (no_regression) return 0;
      return report_violations(rb::check_report(report, rb::load_default_regression_config()), "run");
    }

    if (sw->parsed()) {
      sweep_spec.family = rb::parse_family(sweep_family);
      sweep_spec.learner = rb::parse_learner(sweep_learner);
      sweep_spec.capacity_rule = rb::parse_capacity_rule(sweep_rule);
      const auto rows = rb::sweep(sweep_spec);
      const auto csv = rb::to_csv(rows);
      if (sweep_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(sweep_out);
        if (!out) throw rankprobe::UsageError("cannot write " + sweep_out);
        out << csv;
      }
      int status = 0;
      std::optional<rb::RegressionConfig> config;
      if (!sweep_no_regression && !rows.empty()) config = rb::load_default_regression_config();
      for (const auto& row : rows) {
        const auto where = "sweep n=" + std::to_string(row.report.n) + " seed=" + std::to_string(row.spec.seed);
        if (!row.report.correct) {
          std::cerr << where << ": incorrect\n";
          status = 1;
        } else if (config && report_violations(rb::check_report(row.report, *config), where)) {
          status = 1;
        }
      }
      return status;
    }
  } catch (const rankprobe::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

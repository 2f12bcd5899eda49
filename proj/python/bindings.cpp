#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "rankprobe/bench.hpp"
#include "rankprobe/errors.hpp"
#include "rankprobe/matroid_learner.hpp"
#include "rankprobe/partition_learner.hpp"
#include "rankprobe/weighing.hpp"

namespace py = pybind11;
using namespace rankprobe;

namespace {

RankOracle make_oracle(std::size_t n, const Partition& parts,
                       const std::optional<std::vector<std::int64_t>>& capacities) {
  if (capacities) return RankOracle(CapacitatedPartition(n, parts, *capacities));
  return RankOracle(HiddenPartition(n, parts));
}

py::dict stages_dict(const MatroidRun& run) {
  py::dict out;
  out["parts"] = run.result.parts;
  out["capacities"] = run.result.capacities;
  py::list stages;
  for (const auto& s : run.stages) {
    py::dict d;
    d["stage"] = s.stage;
    d["rank_queries"] = s.rank_queries;
    d["independence_queries"] = s.independence_queries;
    stages.append(d);
  }
  out["stages"] = stages;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rank-query learners for hidden partitions and partition matroids";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<DecodeFailure>(m, "DecodeFailure", PyExc_RuntimeError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);

  py::class_<RankOracle>(m, "Oracle")
      .def(py::init(&make_oracle), py::arg("n"), py::arg("parts"), py::arg("capacities") = py::none())
      .def_property_readonly("n", &RankOracle::universe_size)
      .def("rank", [](RankOracle& o, const std::vector<ElementId>& s) { return o.rank(s); }, py::arg("s"))
      .def("is_independent", [](RankOracle& o, const std::vector<ElementId>& s) { return o.is_independent(s); },
           py::arg("s"))
      .def_property_readonly("rank_queries", [](const RankOracle& o) { return o.ledger().rank_count(); })
      .def_property_readonly("independence_queries",
                             [](const RankOracle& o) { return o.ledger().independence_count(); })
      .def_property_readonly("audit_queries", [](const RankOracle& o) { return o.ledger().audit_count(); })
      .def_property_readonly("per_phase", [](const RankOracle& o) {
        py::dict out;
        for (const auto& [phase, c] : o.ledger().per_phase())
          out[py::str(phase)] = py::make_tuple(c.rank, c.independence, c.audit);
        return out;
      });

  m.def(
      "find_partition",
      [](RankOracle& o, bool audit) {
        FindPartitionOptions opt;
        opt.audit = audit;
        const auto run = find_partition(o, opt);
        py::dict out;
        out["parts"] = run.parts;
        out["basis"] = run.basis;
        out["survivors"] = run.survivors;
        out["merges"] = run.merges.size();
        py::list phases;
        for (const auto& p : run.phases) {
          py::dict d;
          d["phase"] = p.phase;
          d["merges"] = p.merges;
          d["thick_merges"] = p.thick_merges;
          d["rank_queries"] = p.rank_queries;
          phases.append(d);
        }
        out["phases"] = phases;
        return out;
      },
      py::arg("oracle"), py::arg("audit") = false);

  m.def(
      "learn_partition_matroid",
      [](RankOracle& o, bool audit) {
        MatroidOptions opt;
        opt.audit = audit;
        return stages_dict(learn_partition_matroid(o, opt));
      },
      py::arg("oracle"), py::arg("audit") = false);
  m.def(
      "baseline_independence_learner",
      [](RankOracle& o) { return stages_dict(baseline_independence_learner(o)); }, py::arg("oracle"));
  m.def(
      "baseline_simple_partition", [](RankOracle& o) { return stages_dict(baseline_simple_partition(o)); },
      py::arg("oracle"));

  m.def("detecting_matrix", [](std::size_t n) { return weighing::build_detecting_matrix(n).rows(); },
        py::arg("n"));
  m.def("detecting_row_budget", &weighing::detecting_row_budget, py::arg("n"));
  m.def(
      "recover_sparse",
      [](std::size_t n, const std::function<std::int64_t(std::vector<std::uint32_t>)>& sum) {
        const auto r = weighing::recover_sparse(
            n, [&](std::span<const std::uint32_t> s) { return sum({s.begin(), s.end()}); });
        return py::make_tuple(r.support, r.budget.queries_used);
      },
      py::arg("n"), py::arg("sum_oracle"));
  m.def(
      "recover_matching",
      [](const std::vector<ElementId>& x, const std::vector<ElementId>& y,
         const std::function<std::int64_t(std::vector<ElementId>)>& add) {
        const auto r = weighing::recover_matching(
            x, y, [&](std::span<const ElementId> a, std::span<const ElementId> b) {
              std::vector<ElementId> s(a.begin(), a.end());
              s.insert(s.end(), b.begin(), b.end());
              return add(s);
            });
        return py::make_tuple(r.pairs, r.queries_used);
      },
      py::arg("x"), py::arg("y"), py::arg("add_oracle"));

  m.def(
      "generate",
      [](const std::string& family, std::size_t n, std::uint64_t seed, std::size_t k, std::size_t block,
         bool capacitated, const std::string& capacity_rule) {
        bench::InstanceSpec s;
        s.family = bench::parse_family(family);
        s.n = n;
        s.seed = seed;
        s.k = k;
        s.block = block;
        s.capacitated = capacitated;
        s.capacity_rule = bench::parse_capacity_rule(capacity_rule);
        return bench::to_json(bench::generate(s));
      },
      py::arg("family"), py::arg("n"), py::arg("seed"), py::arg("k") = 0, py::arg("block") = 0,
      py::arg("capacitated") = false, py::arg("capacity_rule") = "random",
      "Instance as canonical JSON text.");
  m.def(
      "run",
      [](const std::string& instance_json, const std::string& learner, bool audit) {
        const auto report = bench::run(bench::parse_instance(instance_json), bench::parse_learner(learner), audit);
        return bench::to_json(report, false);
      },
      py::arg("instance_json"), py::arg("learner"), py::arg("audit") = false,
      "Verified run report as JSON text (wall time omitted).");
}

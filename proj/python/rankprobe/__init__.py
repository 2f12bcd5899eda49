"""Rank-query learners for hidden partitions and partition matroids."""

import json

from ._core import (
    DecodeFailure,
    InvariantViolation,
    Oracle,
    ProtocolError,
    UsageError,
    baseline_independence_learner,
    baseline_simple_partition,
    detecting_matrix,
    detecting_row_budget,
    find_partition,
    generate,
    learn_partition_matroid,
    recover_matching,
    recover_sparse,
    run,
)


def generate_instance(family, n, seed, **kw):
    return json.loads(generate(family, n, seed, **kw))


def run_report(instance, learner, audit=False):
    text = instance if isinstance(instance, str) else json.dumps(instance)
    return json.loads(run(text, learner, audit))


__all__ = [
    "DecodeFailure",
    "InvariantViolation",
    "Oracle",
    "ProtocolError",
    "UsageError",
    "baseline_independence_learner",
    "baseline_simple_partition",
    "detecting_matrix",
    "detecting_row_budget",
    "find_partition",
    "generate",
    "generate_instance",
    "learn_partition_matroid",
    "recover_matching",
    "recover_sparse",
    "run",
    "run_report",
]

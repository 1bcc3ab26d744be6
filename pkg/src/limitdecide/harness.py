"""Monte Carlo driver: many independent decision traces, one summary.

A scenario fixes a stream template, a target set, decision parameters,
a horizon and a trial count. Trial i reruns the full per-sample decision
pipeline on the stream reseeded with derive_seed(base_seed, i), so the
whole experiment is a pure function of its spec: rerunning it, or
running trials on several threads, reproduces byte-identical results.

Summaries aggregate final-verdict accuracy against the scenario's ground
truth, quantiles of the last decision flip, and an agreement curve at
power-of-two checkpoints (plot-ready; see docs/formats.md).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from .decider import DecisionTrace, DeciderState
from .delta2 import Delta2Set, resolve_set
from .rng import derive_seed
from .stats import LilParams
from .streams import StreamSpec, StreamState

SCHEMA_VERSION = 1
_FIRST_CHECKPOINT = 1 << 10


@dataclass(frozen=True)
class ExperimentSpec:
    stream: StreamSpec            # per-trial seed overrides this template's
    set_id: str
    params: LilParams
    horizon: int
    trials: int
    base_seed: int
    manifest: str | None = None

    def __post_init__(self):
        if self.horizon < self.params.n_min:
            raise ValueError("horizon must be at least n_min")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def resolve(self) -> Delta2Set:
        return resolve_set(self.set_id, self.manifest)

    def expected_verdict(self) -> int:
        """Ground-truth limit decision: 1 iff the mean is a natural in the set."""
        mean = self.stream.mean
        if mean.denominator != 1 or mean < 0:
            return 0
        return int(self.resolve().truth(int(mean)))


def checkpoints(horizon: int) -> list[int]:
    out = []
    n = _FIRST_CHECKPOINT
    while n <= horizon:
        out.append(n)
        n *= 2
    return out


def run_trial(spec: ExperimentSpec, trial: int,
              dset: Delta2Set | None = None) -> DecisionTrace:
    """One seeded trace over the full horizon; errors are recorded, not raised."""
    dset = dset if dset is not None else spec.resolve()
    stream_spec = dataclasses.replace(
        spec.stream, seed=derive_seed(spec.base_seed, trial))
    trace = DecisionTrace()
    try:
        state = DeciderState(dset, spec.params)
        samples = StreamState(stream_spec).take(spec.horizon)
        for x in samples.tolist():
            trace.rows.append(state.step(x))
    except Exception as e:  # per-trial isolation: harness keeps going
        trace.error = f"{type(e).__name__}: {e}"
    return trace


@dataclass
class Summary:
    schema_version: int
    set_id: str
    horizon: int
    base_seed: int
    trials: int
    failures: int
    expected: int
    final_accuracy: float
    flip_p50: int
    flip_p90: int
    flip_max: int
    agreement: list[list] = field(default_factory=list)  # [n, fraction, correct]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Summary":
        doc = json.loads(text)
        doc["agreement"] = [list(row) for row in doc.get("agreement", [])]
        return Summary(**doc)

    def write_csv(self, fp: IO[str]) -> None:
        w = csv.writer(fp)
        w.writerow(["N", "agreement", "correct_trials"])
        for n, frac, correct in self.agreement:
            w.writerow([n, repr(frac), correct])


def _quantile(sorted_values: list[int], percent: int) -> int:
    # nearest-rank: value at index ceil(percent*n/100) - 1
    n = len(sorted_values)
    idx = min(max(0, (percent * n + 99) // 100 - 1), n - 1)
    return sorted_values[idx]


def monte_carlo(spec: ExperimentSpec, workers: int = 1) -> Summary:
    """Aggregate run_trial over all trials; deterministic in the spec."""
    dset = spec.resolve()
    indices = range(spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda i: run_trial(spec, i, dset), indices))
    else:
        traces = [run_trial(spec, i, dset) for i in indices]

    expected = spec.expected_verdict()
    marks = checkpoints(spec.horizon)
    correct_at = [0] * len(marks)
    flips: list[int] = []
    final_correct = 0
    failures = 0
    for trace in traces:
        if trace.error is not None:
            failures += 1
            continue
        flips.append(trace.last_flip_n)
        if trace.final_verdict == expected:
            final_correct += 1
        for j, n in enumerate(marks):
            if trace.e_at(n) == expected:
                correct_at[j] += 1

    flips.sort()
    if not flips:
        flips = [0]
    return Summary(
        schema_version=SCHEMA_VERSION,
        set_id=spec.set_id,
        horizon=spec.horizon,
        base_seed=spec.base_seed,
        trials=spec.trials,
        failures=failures,
        expected=expected,
        final_accuracy=final_correct / spec.trials,
        flip_p50=_quantile(flips, 50),
        flip_p90=_quantile(flips, 90),
        flip_max=flips[-1],
        agreement=[[n, correct_at[j] / spec.trials, correct_at[j]]
                   for j, n in enumerate(marks)],
    )


def summary_hash(summary: Summary) -> str:
    return hashlib.sha256(summary.to_json().encode()).hexdigest()


def emit_report(summary: Summary, fmt: str, path: str | Path) -> Path:
    """Write the summary as csv (agreement curve) or json (full, lossless)."""
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fp:
            summary.write_csv(fp)
    elif fmt == "json":
        path.write_text(summary.to_json() + "\n")
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    return path

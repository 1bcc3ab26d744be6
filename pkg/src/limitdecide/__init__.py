"""Asymptotic (decide-in-the-limit) hypothesis testing toolkit.

Library surface:

* streams: seeded i.i.d. sample streams and deterministic bit sources
* stats: online mean/variance and the shrinking accept radius
* delta2: limit-computable integer sets as bounded witness races
* machine: the counter-machine interpreter behind the halting test sets
* decider: the composed per-sample decision procedure
* adversary: finite-depth tree interrogation of candidate bit deciders
* harness: seeded Monte Carlo experiments and summary reports
* plotting: agreement-curve figures
* cli: the `limitdecide` command
"""

__version__ = "0.1.0"

from .stats import LilParams, OnlineStats, lil_threshold  # noqa: F401
from .streams import BitSource, StreamSpec, StreamState, bit_at  # noqa: F401
from .delta2 import Delta2Set, WitnessRace, bounded_witness, builtin_sets  # noqa: F401
from .decider import DeciderState, DecisionTrace, integer_decision  # noqa: F401
from .harness import ExperimentSpec, Summary, monte_carlo, run_trial  # noqa: F401

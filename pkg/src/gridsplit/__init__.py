"""Partitioned state-vector simulation of random circuits on 2-D qubit grids.

A grid is cut horizontally; every CZ crossing the cut is replaced by
``P0 (x) I + P1 (x) Z``, which turns one circuit on ``n`` qubits into
``2**c`` pairs of independent half-size circuits whose tensor products sum to
the original state.
"""
from .circuit import (
    Circuit,
    CircuitFormatError,
    CircuitValidationError,
    Gate,
    GridTopology,
    Layer,
    RandomCircuitSpec,
    cz_pattern,
    gate_counts,
    generate_random_circuit,
    load_circuit,
    parse_circuit,
    save_circuit,
    serialize_circuit,
)
from .executor import CopyResult, ResourceError, expand_copies, iter_copy_results, run_copy, run_with_prefix_cache
from .planner import CutPlan, complexity_report, estimate_time, plan_bipartition, sweep_complexity
from .sampler import AmplitudeAccumulator, SampleSet, resolve_samples
from .statevector import StateVector, run_circuit, zero_state
from .stats import GumbelParams, gumbel_pdf, histogram_and_fit, log_transform

__version__ = "0.1.0"

"""fidroute: noise-aware qubit routing with a learned CNOT-fidelity model.

Train a gradient-boosted-tree model on process-tomography measurements of
long-range CNOT gates, then route two-qubit gates along the path with the
highest predicted fidelity instead of the shortest one. Ships a synthetic
depolarizing backend so the whole pipeline runs end to end on a desk.
"""
from .circuit import Circuit, Gate, GateKind, coupling_satisfied, emit_qasm, parse_qasm
from .dataset import (
    DatasetSplit,
    ExperimentRecord,
    bin_and_sample,
    build_features,
    generate_experiments,
    load_dataset,
    save_dataset,
)
from .errors import DataError, FidrouteError, NoPathError, ParseError, ValidationError
from .gbdt import GbdtModel, MetricsReport, compute_metrics, load_model, predict, save_model, train
from .noisesim import (
    DepolarizingParams,
    ProcessTomographyResult,
    convert_gate_fidelity,
    equivalent_up_to_permutation,
    lambda_from_error,
    path_cnot_count,
    path_process_fidelity,
    run_process_tomography,
    simulate_statevector,
)
from .router import ComparisonReport, Layout, RoutedResult, compare_benchmark, rank_paths, route
from .topology import (
    CalibrationSnapshot,
    Path,
    Topology,
    enumerate_paths,
    generate_topology,
    load_calibration,
    load_topology,
    shortest_path,
    visitation_stats,
)

__version__ = "0.1.0"

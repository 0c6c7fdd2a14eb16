"""Routing passes: fidelity-ranked xgswap routing, the shortest-path
baseline, SWAP insertion with layout tracking, and the comparison harness.

Both methods process gates strictly in program order under the running
layout. A two-qubit gate on non-adjacent physical qubits gets its candidate
paths from enumerate_paths; SWAPs then move the control along the chosen
path until it sits next to the target. The default permute mode leaves the
resulting permutation in place (tracked in the final layout) instead of
undoing it.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .dataset import DEFAULT_LMAX, ExperimentRecord, build_features
from .errors import ValidationError
from .gbdt import GbdtModel, predict
from .noisesim import (
    PERMUTE,
    RESTORE,
    convert_gate_fidelity,
    path_process_fidelity,
    run_process_tomography,
)
from .topology import (
    DEFAULT_CAP,
    DEFAULT_SLACK,
    CalibrationSnapshot,
    Path,
    Topology,
    enumerate_paths,
    shortest_path,
)

XGSWAP = "xgswap"
SHORTEST = "shortest"


@dataclass(frozen=True)
class Layout:
    """Bijective logical -> physical qubit assignment."""

    logical_to_physical: tuple[int, ...]

    def __post_init__(self):
        n = len(self.logical_to_physical)
        if sorted(self.logical_to_physical) != list(range(n)):
            raise ValidationError(f"layout is not a permutation: {list(self.logical_to_physical)}")

    @staticmethod
    def identity(n: int) -> "Layout":
        return Layout(tuple(range(n)))

    def physical(self, logical: int) -> int:
        return self.logical_to_physical[logical]

    def swapped(self, phys_a: int, phys_b: int) -> "Layout":
        """Layout after a SWAP on two physical qubits."""
        l2p = list(self.logical_to_physical)
        inv = {p: l for l, p in enumerate(l2p)}
        la, lb = inv[phys_a], inv[phys_b]
        l2p[la], l2p[lb] = phys_b, phys_a
        return Layout(tuple(l2p))


@dataclass(frozen=True)
class PathChoice:
    gate_index: int
    path: Path
    predicted_fidelity: float | None  # None for the shortest-path baseline


@dataclass(frozen=True)
class RoutedResult:
    circuit: Circuit
    final_layout: Layout
    chosen_paths: tuple[PathChoice, ...]
    swap_count: int


def rank_paths(
    paths: list[Path],
    t: Topology,
    cal: CalibrationSnapshot,
    model: GbdtModel,
    lmax: int = DEFAULT_LMAX,
) -> list[tuple[Path, float]]:
    """Score candidate paths with the model; sort by (score descending,
    length ascending, lexicographic)."""
    if not paths:
        raise ValidationError("no candidate paths to rank")
    X = np.stack([_path_features(p, t, cal, lmax) for p in paths])
    scores = predict(model, X)
    ranked = sorted(
        zip(paths, scores), key=lambda item: (-item[1], len(item[0]), item[0].qubits)
    )
    return [(p, float(s)) for p, s in ranked]


def _path_features(p: Path, t: Topology, cal: CalibrationSnapshot, lmax: int) -> np.ndarray:
    probe = ExperimentRecord(
        path=p, timestamp=cal.timestamp, calibration_id="probe", calibration=cal, gate_fidelity=0.0
    )
    return build_features(probe, t, lmax)


def route(
    c: Circuit,
    t: Topology,
    cal: CalibrationSnapshot,
    model: GbdtModel | None,
    method: str = XGSWAP,
    slack: int = DEFAULT_SLACK,
    cap: int = DEFAULT_CAP,
    mode: str = PERMUTE,
    lmax: int = DEFAULT_LMAX,
) -> RoutedResult:
    """Insert SWAPs so every two-qubit gate acts on coupled qubits. The
    initial layout is the identity (logical i on physical i)."""
    if method not in (XGSWAP, SHORTEST):
        raise ValidationError(f"unknown routing method {method!r}")
    if mode not in (PERMUTE, RESTORE):
        raise ValidationError(f"unknown routing mode {mode!r}")
    if method == XGSWAP and model is None:
        raise ValidationError("xgswap routing needs a trained model")
    if c.num_qubits > t.num_qubits:
        raise ValidationError(f"circuit needs {c.num_qubits} qubits, topology has {t.num_qubits}")

    layout = Layout.identity(t.num_qubits)
    out: list[Gate] = []
    choices: list[PathChoice] = []
    swap_count = 0

    def emit_swap_chain(path: Path) -> None:
        nonlocal layout, swap_count
        q = path.qubits
        for i in range(len(q) - 2):
            out.append(Gate(GateKind.SWAP, (q[i], q[i + 1])))
            layout = layout.swapped(q[i], q[i + 1])
            swap_count += 1

    for gi, g in enumerate(c.gates):
        phys = tuple(layout.physical(q) for q in g.qubits)
        if g.kind.arity == 1:
            out.append(Gate(g.kind, phys, g.param))
            continue
        pa, pb = phys
        if t.are_connected(pa, pb):
            out.append(Gate(g.kind, (pa, pb), g.param))
            continue
        candidates = enumerate_paths(t, pa, pb, slack=slack, cap=cap)
        if method == SHORTEST:
            chosen, score = candidates[0], None
        else:
            chosen, score = rank_paths(candidates, t, cal, model, lmax)[0]
        choices.append(PathChoice(gate_index=gi, path=chosen, predicted_fidelity=score))
        emit_swap_chain(chosen)
        out.append(Gate(g.kind, (chosen.qubits[-2], chosen.qubits[-1]), g.param))
        if mode == RESTORE:
            q = chosen.qubits
            for i in range(len(q) - 3, -1, -1):
                out.append(Gate(GateKind.SWAP, (q[i], q[i + 1])))
                layout = layout.swapped(q[i], q[i + 1])
                swap_count += 1

    return RoutedResult(
        circuit=Circuit(t.num_qubits, tuple(out)),
        final_layout=layout,
        chosen_paths=tuple(choices),
        swap_count=swap_count,
    )


@dataclass(frozen=True)
class CaseRow:
    pair: tuple[int, int]
    shortest: Path
    xgswap: Path
    differing: bool
    fidelity_shortest: float | None
    fidelity_xgswap: float | None
    edge_error_mean_shortest: float
    edge_error_std_shortest: float
    edge_error_mean_xgswap: float
    edge_error_std_xgswap: float


@dataclass(frozen=True)
class ComparisonReport:
    total: int
    differing_paths: int
    higher_fidelity: int
    lower_fidelity: int
    cases: tuple[CaseRow, ...]


def compare_benchmark(
    t: Topology,
    cal: CalibrationSnapshot,
    model: GbdtModel,
    n_pairs: int,
    len_min: int,
    len_max: int,
    seed: int,
    shots: int | None = None,
    slack: int = DEFAULT_SLACK,
    cap: int = DEFAULT_CAP,
    mode: str = PERMUTE,
    lmax: int = DEFAULT_LMAX,
) -> ComparisonReport:
    """Random CNOT benchmark: for each sampled pair, compare the shortest
    path against the model's top-ranked path. Differing cases are scored with
    the tomography backend (analytic composition when shots is None); ties
    within noise count as not-higher."""
    if n_pairs < 1:
        raise ValidationError(f"need n_pairs >= 1, got {n_pairs}")
    if not 2 <= len_min <= len_max <= t.num_qubits:
        raise ValidationError(f"length range [{len_min},{len_max}] invalid for {t.num_qubits} qubits")
    tie_threshold = 1e-12 if shots is None else 2.0 / np.sqrt(shots)
    cases: list[CaseRow] = []
    differing = higher = lower = 0
    for case in range(n_pairs):
        rng = np.random.default_rng([seed, 0xC0DE, case])
        s, d = _sample_pair(t, len_min, len_max, rng)
        sp = shortest_path(t, s, d)
        xg, _ = rank_paths(enumerate_paths(t, s, d, slack=slack, cap=cap), t, cal, model, lmax)[0]
        differs = xg.qubits != sp.qubits
        f_sp = f_xg = None
        if differs:
            differing += 1
            f_sp = _routed_gate_fidelity(t, cal, sp, mode, shots, int(rng.integers(2**63)))
            f_xg = _routed_gate_fidelity(t, cal, xg, mode, shots, int(rng.integers(2**63)))
            if f_xg - f_sp > tie_threshold:
                higher += 1
            else:
                lower += 1
        e_sp = [cal.edge_error[e] for e in sp.edges()]
        e_xg = [cal.edge_error[e] for e in xg.edges()]
        cases.append(
            CaseRow(
                pair=(s, d),
                shortest=sp,
                xgswap=xg,
                differing=differs,
                fidelity_shortest=f_sp,
                fidelity_xgswap=f_xg,
                edge_error_mean_shortest=float(np.mean(e_sp)),
                edge_error_std_shortest=float(np.std(e_sp)),
                edge_error_mean_xgswap=float(np.mean(e_xg)),
                edge_error_std_xgswap=float(np.std(e_xg)),
            )
        )
    return ComparisonReport(
        total=n_pairs,
        differing_paths=differing,
        higher_fidelity=higher,
        lower_fidelity=lower,
        cases=tuple(cases),
    )


def _sample_pair(t: Topology, len_min: int, len_max: int, rng: np.random.Generator) -> tuple[int, int]:
    for _ in range(10000):
        s = int(rng.integers(t.num_qubits))
        d = int(rng.integers(t.num_qubits))
        if s == d:
            continue
        dist = t.bfs_distances(s)[d]
        if dist >= 1 and len_min <= dist + 1 <= len_max:
            return s, d
    raise ValidationError(f"no qubit pair with shortest length in [{len_min},{len_max}]")


def _routed_gate_fidelity(
    t: Topology, cal: CalibrationSnapshot, p: Path, mode: str, shots: int | None, seed: int
) -> float:
    if shots is None:
        return convert_gate_fidelity(path_process_fidelity(t, cal, p, mode))
    return run_process_tomography(t, cal, p, mode=mode, shots=shots, seed=seed).gate_fidelity


def report_to_csv(report: ComparisonReport, path: str) -> None:
    """One case per row, mirroring the summary's fidelity bookkeeping."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "control", "target", "shortest_path", "xgswap_path", "differing",
                "fidelity_shortest", "fidelity_xgswap",
                "edge_error_mean_shortest", "edge_error_std_shortest",
                "edge_error_mean_xgswap", "edge_error_std_xgswap",
            ]
        )
        for c in report.cases:
            writer.writerow(
                [
                    c.pair[0], c.pair[1],
                    "-".join(map(str, c.shortest.qubits)),
                    "-".join(map(str, c.xgswap.qubits)),
                    int(c.differing),
                    "" if c.fidelity_shortest is None else repr(c.fidelity_shortest),
                    "" if c.fidelity_xgswap is None else repr(c.fidelity_xgswap),
                    repr(c.edge_error_mean_shortest), repr(c.edge_error_std_shortest),
                    repr(c.edge_error_mean_xgswap), repr(c.edge_error_std_xgswap),
                ]
            )


def report_summary(report: ComparisonReport) -> dict:
    """Three-row summary over the differing cases: experiments, lower, higher."""
    n = report.differing_paths

    def pct(k: int) -> float:
        return 100.0 * k / n if n else 0.0

    return {
        "total_pairs": report.total,
        "rows": [
            {"metric": "Experiments", "count": n, "proportion": pct(n)},
            {"metric": "Lower Fidelity", "count": report.lower_fidelity, "proportion": pct(report.lower_fidelity)},
            {"metric": "Higher Fidelity", "count": report.higher_fidelity, "proportion": pct(report.higher_fidelity)},
        ],
    }


def summary_to_json(report: ComparisonReport) -> str:
    return json.dumps(report_summary(report), indent=2, sort_keys=True) + "\n"

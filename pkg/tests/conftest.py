import numpy as np
import pytest

from fidroute.topology import CalibrationSnapshot, Topology, generate_topology


def make_calibration(t: Topology, eps=0.01, readout=0.0, timestamp=1_700_000_000, overrides=None):
    """Uniform calibration with optional per-edge overrides."""
    edge_error = {e: float(eps) for e in t.edges}
    if overrides:
        for e, r in overrides.items():
            edge_error[(min(e), max(e))] = float(r)
    return CalibrationSnapshot(
        edge_error=edge_error,
        readout_error={q: float(readout) for q in range(t.num_qubits)},
        timestamp=timestamp,
    )


def random_calibration(t: Topology, rng: np.random.Generator, readout_max=0.05):
    edge_error = {e: float(np.exp(rng.uniform(np.log(1e-3), np.log(5e-2)))) for e in t.edges}
    readout = {q: float(rng.uniform(5e-3, readout_max)) for q in range(t.num_qubits)}
    return CalibrationSnapshot(edge_error=edge_error, readout_error=readout, timestamp=1_700_000_000)


def brute_force_simple_paths(adj: dict[int, list[int]], s: int, d: int) -> set[tuple[int, ...]]:
    """Independent recursive enumeration of all simple s-d paths."""
    out: set[tuple[int, ...]] = set()

    def rec(v, seen, acc):
        if v == d:
            out.add(tuple(acc))
            return
        for w in adj[v]:
            if w not in seen:
                rec(w, seen | {w}, acc + [w])

    rec(s, {s}, [s])
    return out


@pytest.fixture
def line3():
    return generate_topology("grid", rows=1, cols=3)


@pytest.fixture
def line4():
    return generate_topology("grid", rows=1, cols=4)


@pytest.fixture
def ring4():
    return generate_topology("ring", n=4)


@pytest.fixture(scope="session")
def reference_device():
    return generate_topology("heavy_hex", rows=7, row_len=15)

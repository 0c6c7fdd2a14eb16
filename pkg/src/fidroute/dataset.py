"""Experiment records against the synthetic backend, the data-preparation
flow, and feature encoding.

A feature vector is [edge errors in canonical edge order | readout errors in
qubit order | path qubit indices, -1 padded], so its width is
E + Q + Lmax (144 + 127 + 100 = 371 on the reference device).
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ValidationError
from .noisesim import PERMUTE, run_process_tomography
from .topology import CalibrationSnapshot, Path, Topology, calibration_to_json, load_calibration

DEFAULT_LMAX = 100


@dataclass(frozen=True)
class ExperimentRecord:
    path: Path
    timestamp: int
    calibration_id: str
    calibration: CalibrationSnapshot
    gate_fidelity: float

    def __post_init__(self):
        if not 0.0 <= self.gate_fidelity <= 1.0:
            raise ValidationError(f"gate fidelity out of [0,1]: {self.gate_fidelity}")

    @property
    def path_length(self) -> int:
        return len(self.path)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[ExperimentRecord]
    validation: list[ExperimentRecord]
    bin_summary: dict[int, tuple[int, int]]  # length -> (total, sampled into train)


def build_features(r: ExperimentRecord, t: Topology, lmax: int = DEFAULT_LMAX) -> np.ndarray:
    """Encode one record as a fixed-width feature vector."""
    if len(r.path) > lmax:
        raise ValidationError(f"path length {len(r.path)} exceeds capacity {lmax}")
    cal = r.calibration
    cal.check_against(t)
    e, q = len(t.edges), t.num_qubits
    vec = np.full(e + q + lmax, -1.0)
    for i, edge in enumerate(t.edges):
        vec[i] = cal.edge_error[edge]
    for qq in range(q):
        vec[e + qq] = cal.readout_error[qq]
    vec[e + q : e + q + len(r.path)] = r.path.qubits
    return vec


def features_matrix(records: list[ExperimentRecord], t: Topology, lmax: int = DEFAULT_LMAX):
    """Stack feature vectors and labels for a record list."""
    X = np.stack([build_features(r, t, lmax) for r in records])
    y = np.array([r.gate_fidelity for r in records])
    return X, y


def _rng_stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


def sample_simple_path(t: Topology, length: int, rng: np.random.Generator, max_tries: int = 50) -> Path:
    """Random simple path with exactly `length` qubits: pick a random source,
    a random target at a feasible distance, then a randomized depth-first
    search pruned by remaining distance; retry with fresh endpoints after
    repeated failures."""
    if not 2 <= length <= t.num_qubits:
        raise ValidationError(f"path length {length} out of range [2, {t.num_qubits}]")
    hops = length - 1
    bipartite = _is_bipartite(t)
    for _ in range(max_tries):
        s = int(rng.integers(t.num_qubits))
        dist = t.bfs_distances(s)
        # a walk between fixed endpoints cannot change parity without an odd cycle
        feasible = [
            d
            for d in range(t.num_qubits)
            if 0 < dist[d] <= hops and (not bipartite or (hops - dist[d]) % 2 == 0)
        ]
        if not feasible:
            continue
        d = int(feasible[rng.integers(len(feasible))])
        path = _random_exact_path(t, s, d, hops, t.bfs_distances(d), rng)
        if path is not None:
            return Path(path)
    raise DataError(f"could not sample a simple path of length {length} after {max_tries} endpoint draws")


_BIPARTITE_CACHE: dict[int, bool] = {}


def _is_bipartite(t: Topology) -> bool:
    key = id(t)
    if key not in _BIPARTITE_CACHE:
        color = [-1] * t.num_qubits
        ok = True
        for start in range(t.num_qubits):
            if color[start] >= 0:
                continue
            color[start] = 0
            queue = [start]
            while queue and ok:
                v = queue.pop()
                for w in t.neighbors(v):
                    if color[w] < 0:
                        color[w] = color[v] ^ 1
                        queue.append(w)
                    elif color[w] == color[v]:
                        ok = False
                        break
        _BIPARTITE_CACHE[key] = ok
    return _BIPARTITE_CACHE[key]


def _random_exact_path(
    t: Topology, s: int, d: int, hops: int, dist_to_d: list[int], rng: np.random.Generator,
    node_budget: int = 20000,
) -> tuple[int, ...] | None:
    stack = [s]
    on_stack = {s}
    visited_budget = [node_budget]

    def dfs(v: int) -> tuple[int, ...] | None:
        if len(stack) - 1 == hops:
            return tuple(stack) if v == d else None
        if visited_budget[0] <= 0:
            return None
        visited_budget[0] -= 1
        neighbors = list(t.neighbors(v))
        rng.shuffle(neighbors)
        remaining = hops - (len(stack) - 1)
        for w in neighbors:
            if w in on_stack or dist_to_d[w] < 0 or dist_to_d[w] > remaining - 1:
                continue
            if w == d and remaining != 1:
                continue
            stack.append(w)
            on_stack.add(w)
            hit = dfs(w)
            if hit is not None:
                return hit
            stack.pop()
            on_stack.remove(w)
        return None

    return dfs(s)


def generate_experiments(
    t: Topology,
    calibrations: list[CalibrationSnapshot],
    n: int,
    len_min: int,
    len_max: int,
    seed: int,
    shots: int | None = None,
    mode: str = PERMUTE,
) -> list[ExperimentRecord]:
    """n records with path lengths uniform in [len_min, len_max], each labeled
    by process tomography against a randomly chosen calibration snapshot.
    Deterministic for a given seed."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if not 2 <= len_min <= len_max <= t.num_qubits:
        raise ValidationError(f"length range [{len_min},{len_max}] invalid for {t.num_qubits} qubits")
    if not calibrations:
        raise ValidationError("need at least one calibration snapshot")
    for cal in calibrations:
        cal.check_against(t)
    records = []
    for i in range(n):
        rng = _rng_stream(seed, i)
        cal_idx = int(rng.integers(len(calibrations)))
        cal = calibrations[cal_idx]
        length = int(rng.integers(len_min, len_max + 1))
        path = sample_simple_path(t, length, rng)
        result = run_process_tomography(t, cal, path, mode=mode, shots=shots, seed=int(rng.integers(2**63)))
        records.append(
            ExperimentRecord(
                path=path,
                timestamp=cal.timestamp + i,
                calibration_id=f"cal-{cal_idx:03d}",
                calibration=cal,
                gate_fidelity=result.gate_fidelity,
            )
        )
    return records


def bin_and_sample(records: list[ExperimentRecord], seed: int) -> DatasetSplit:
    """Bin by path length, sample floor(2/3 * min bin size) records from every
    bin into the training set, and keep the remainder for validation."""
    if not records:
        raise ValidationError("no records to split")
    bins: dict[int, list[int]] = {}
    for i, r in enumerate(records):
        bins.setdefault(r.path_length, []).append(i)
    m = math.floor(2.0 / 3.0 * min(len(v) for v in bins.values()))
    if m == 0:
        raise DataError(
            "dataset too small: the smallest path-length bin has "
            f"{min(len(v) for v in bins.values())} record(s); need at least 2 per length"
        )
    rng = _rng_stream(seed, 0xB175)
    train_idx: list[int] = []
    summary: dict[int, tuple[int, int]] = {}
    for length in sorted(bins):
        chosen = rng.choice(bins[length], size=m, replace=False)
        train_idx.extend(int(c) for c in chosen)
        summary[length] = (len(bins[length]), m)
    train_set = set(train_idx)
    return DatasetSplit(
        train=[records[i] for i in sorted(train_idx)],
        validation=[records[i] for i in range(len(records)) if i not in train_set],
        bin_summary=summary,
    )


def save_dataset(records_or_split, path: str) -> None:
    """Write records as one JSON object per line, with the calibration
    snapshots in a sibling <path>.calibrations.json keyed by calibration_id.
    A DatasetSplit writes <stem>.train<ext> and <stem>.validation<ext>."""
    if isinstance(records_or_split, DatasetSplit):
        stem, ext = os.path.splitext(path)
        save_dataset(records_or_split.train, f"{stem}.train{ext}")
        save_dataset(records_or_split.validation, f"{stem}.validation{ext}")
        return
    records: list[ExperimentRecord] = records_or_split
    cals: dict[str, CalibrationSnapshot] = {}
    with open(path, "w") as fh:
        for r in records:
            cals[r.calibration_id] = r.calibration
            fh.write(
                json.dumps(
                    {
                        "path": list(r.path.qubits),
                        "timestamp": r.timestamp,
                        "calibration_id": r.calibration_id,
                        "gate_fidelity": r.gate_fidelity,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    with open(path + ".calibrations.json", "w") as fh:
        doc = {cid: json.loads(calibration_to_json(c)) for cid, c in sorted(cals.items())}
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_dataset(path: str, t: Topology) -> list[ExperimentRecord]:
    """Inverse of save_dataset for a record file."""
    sidecar = path + ".calibrations.json"
    try:
        with open(sidecar) as fh:
            cal_doc = json.load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"missing calibration sidecar {sidecar}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed calibration sidecar {sidecar}: {exc}") from exc
    cals = {cid: load_calibration(json.dumps(obj), t) for cid, obj in cal_doc.items()}
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                cid = obj["calibration_id"]
                records.append(
                    ExperimentRecord(
                        path=Path(tuple(obj["path"])),
                        timestamp=int(obj["timestamp"]),
                        calibration_id=cid,
                        calibration=cals[cid],
                        gate_fidelity=float(obj["gate_fidelity"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record ({exc})") from exc
    return records

"""Device coupling graphs, calibration snapshots, and path primitives.

Coupling maps are undirected. Edges are stored canonically as (min, max)
pairs sorted lexicographically; that order is the canonical edge order used
everywhere a fixed edge layout matters (feature vectors, calibration files).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

from .errors import NoPathError, ParseError, ValidationError

DEFAULT_SLACK = 4
DEFAULT_CAP = 64

Edge = tuple[int, int]


def canonical_edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Path:
    """Simple path of physical qubits; first element is the control, last the target."""

    qubits: tuple[int, ...]

    def __post_init__(self):
        if len(self.qubits) < 2:
            raise ValidationError(f"path needs at least 2 qubits, got {list(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"path repeats a qubit: {list(self.qubits)}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    def __len__(self) -> int:
        return len(self.qubits)

    def edges(self) -> list[Edge]:
        q = self.qubits
        return [canonical_edge(q[i], q[i + 1]) for i in range(len(q) - 1)]


@dataclass(frozen=True)
class Topology:
    """Undirected coupling graph with a canonical total order over edges."""

    num_qubits: int
    edges: tuple[Edge, ...]
    _adj: dict[int, tuple[int, ...]] = field(default=None, repr=False, compare=False)
    _edge_index: dict[Edge, int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValidationError(f"num_qubits must be positive, got {self.num_qubits}")
        seen: set[Edge] = set()
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"self-loop edge ({a},{b})")
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise ValidationError(f"edge ({a},{b}) out of range for {self.num_qubits} qubits")
            e = canonical_edge(a, b)
            if e in seen:
                raise ValidationError(f"duplicate edge ({e[0]},{e[1]})")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        adj: dict[int, list[int]] = {q: [] for q in range(self.num_qubits)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {q: tuple(sorted(v)) for q, v in adj.items()})
        object.__setattr__(self, "_edge_index", {e: i for i, e in enumerate(self.edges)})

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._adj[q]

    def are_connected(self, a: int, b: int) -> bool:
        return canonical_edge(a, b) in self._edge_index

    def edge_position(self, a: int, b: int) -> int:
        """Index of the edge in the canonical edge order."""
        return self._edge_index[canonical_edge(a, b)]

    def check_qubit(self, q: int) -> None:
        if not (0 <= q < self.num_qubits):
            raise ValidationError(f"qubit {q} out of range for {self.num_qubits} qubits")

    def validate_path(self, p: Path) -> None:
        if len(p) > self.num_qubits:
            raise ValidationError(f"path longer than qubit count: {list(p.qubits)}")
        for q in p.qubits:
            self.check_qubit(q)
        for i in range(len(p) - 1):
            if not self.are_connected(p.qubits[i], p.qubits[i + 1]):
                raise ValidationError(
                    f"path step ({p.qubits[i]},{p.qubits[i + 1]}) is not a coupling edge"
                )

    def bfs_distances(self, source: int) -> list[int]:
        """Hop distance from source to every qubit (-1 if unreachable)."""
        self.check_qubit(source)
        dist = [-1] * self.num_qubits
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist


@dataclass(frozen=True)
class CalibrationSnapshot:
    """Per-edge two-qubit error rates and per-qubit readout error rates.

    A rate of exactly 1 is legal and denotes a failed calibration for that
    connection.
    """

    edge_error: dict[Edge, float]
    readout_error: dict[int, float]
    timestamp: int

    def __post_init__(self):
        object.__setattr__(
            self, "edge_error", {canonical_edge(*e): float(r) for e, r in self.edge_error.items()}
        )
        object.__setattr__(
            self, "readout_error", {int(q): float(r) for q, r in self.readout_error.items()}
        )
        for e, r in self.edge_error.items():
            if not 0.0 <= r <= 1.0:
                raise ValidationError(f"edge error for {e} out of [0,1]: {r}")
        for q, r in self.readout_error.items():
            if not 0.0 <= r <= 1.0:
                raise ValidationError(f"readout error for qubit {q} out of [0,1]: {r}")

    def check_against(self, t: Topology) -> None:
        if set(self.edge_error) != set(t.edges):
            missing = set(t.edges) - set(self.edge_error)
            extra = set(self.edge_error) - set(t.edges)
            raise ValidationError(f"calibration edges mismatch (missing={sorted(missing)}, extra={sorted(extra)})")
        if set(self.readout_error) != set(range(t.num_qubits)):
            raise ValidationError("calibration readout errors must cover every qubit exactly")


def load_topology(text: str) -> Topology:
    """Parse a topology document: {"num_qubits": int, "edges": [[a,b],...]}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid topology document: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict) or "num_qubits" not in doc or "edges" not in doc:
        raise ParseError('topology document needs "num_qubits" and "edges"')
    try:
        edges = tuple(canonical_edge(int(a), int(b)) for a, b in doc["edges"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed edge list: {exc}") from exc
    return Topology(num_qubits=int(doc["num_qubits"]), edges=edges)


def topology_to_json(t: Topology) -> str:
    doc = {"num_qubits": t.num_qubits, "edges": [list(e) for e in t.edges]}
    return json.dumps(doc, sort_keys=True) + "\n"


def load_calibration(text: str, t: Topology) -> CalibrationSnapshot:
    """Parse a calibration document:
    {"timestamp": int, "edge_errors": [[a,b,rate],...], "readout_errors": [rate,...]}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid calibration document: {exc.msg}", line=exc.lineno) from exc
    try:
        edge_error = {canonical_edge(int(a), int(b)): float(r) for a, b, r in doc["edge_errors"]}
        readout = {q: float(r) for q, r in enumerate(doc["readout_errors"])}
        cal = CalibrationSnapshot(edge_error=edge_error, readout_error=readout, timestamp=int(doc["timestamp"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed calibration document: {exc}") from exc
    cal.check_against(t)
    return cal


def calibration_to_json(cal: CalibrationSnapshot) -> str:
    doc = {
        "timestamp": cal.timestamp,
        "edge_errors": [[a, b, cal.edge_error[(a, b)]] for a, b in sorted(cal.edge_error)],
        "readout_errors": [cal.readout_error[q] for q in sorted(cal.readout_error)],
    }
    return json.dumps(doc, sort_keys=True) + "\n"


def generate_topology(kind: str, **params) -> Topology:
    """Deterministic lattice generators: ring(n), grid(rows, cols),
    heavy_hex(rows, row_len). heavy_hex(7, 15) is the 127-qubit/144-edge
    reference device."""
    if kind == "ring":
        n = int(params.pop("n"))
        _reject_extra(params)
        if n < 3:
            raise ValidationError(f"ring needs n >= 3, got {n}")
        return Topology(n, tuple((i, (i + 1) % n) for i in range(n)))
    if kind == "grid":
        rows, cols = int(params.pop("rows")), int(params.pop("cols"))
        _reject_extra(params)
        if rows < 1 or cols < 1 or rows * cols < 2:
            raise ValidationError(f"grid needs at least 2 qubits, got {rows}x{cols}")
        edges = []
        for r in range(rows):
            for c in range(cols):
                q = r * cols + c
                if c + 1 < cols:
                    edges.append((q, q + 1))
                if r + 1 < rows:
                    edges.append((q, q + cols))
        return Topology(rows * cols, tuple(edges))
    if kind == "heavy_hex":
        rows = int(params.pop("rows", 7))
        row_len = int(params.pop("row_len", 15))
        _reject_extra(params)
        return _heavy_hex(rows, row_len)
    raise ValidationError(f"unknown topology kind {kind!r} (expected ring, grid, or heavy_hex)")


def _reject_extra(params: dict) -> None:
    if params:
        raise ValidationError(f"unexpected topology parameters: {sorted(params)}")


def _heavy_hex(rows: int, row_len: int) -> Topology:
    """Heavy-hex lattice: long rows of qubits joined by bridge qubits every 4
    columns, with the bridge columns offset by 2 between successive gaps. The
    first row drops its last column and the last row drops its first, matching
    the staggered boundary of the reference device."""
    if rows < 3 or rows % 2 == 0:
        raise ValidationError(f"heavy_hex needs an odd row count >= 3, got {rows}")
    if row_len < 7 or row_len % 4 != 3:
        raise ValidationError(f"heavy_hex needs row_len >= 7 with row_len % 4 == 3, got {row_len}")

    index: dict[tuple[int, int], int] = {}
    edges: list[Edge] = []
    counter = 0

    def row_cols(r: int) -> range:
        if r == 0:
            return range(0, row_len - 1)
        if r == rows - 1:
            return range(1, row_len)
        return range(0, row_len)

    for r in range(rows):
        cols = list(row_cols(r))
        for c in cols:
            index[(r, c)] = counter
            counter += 1
        for a, b in zip(cols, cols[1:]):
            edges.append((index[(r, a)], index[(r, b)]))
        if r < rows - 1:
            start = 0 if r % 2 == 0 else 2
            for c in range(start, row_len, 4):
                bridge = counter
                counter += 1
                edges.append((index[(r, c)], bridge))
                index[("bridge", r, c)] = bridge
    # bridge-to-next-row edges are added once the next row has been numbered
    for r in range(rows - 1):
        start = 0 if r % 2 == 0 else 2
        for c in range(start, row_len, 4):
            edges.append((index[("bridge", r, c)], index[(r + 1, c)]))
    return Topology(counter, tuple(edges))


def shortest_path(t: Topology, s: int, d: int) -> Path:
    """Minimum-hop path from s to d; ties broken by the lexicographically
    smallest qubit sequence."""
    t.check_qubit(s)
    t.check_qubit(d)
    if s == d:
        raise ValidationError(f"source and destination coincide: {s}")
    dist_to_d = t.bfs_distances(d)
    if dist_to_d[s] < 0:
        raise NoPathError(f"no path between {s} and {d}")
    seq = [s]
    cur = s
    while cur != d:
        # greedy smallest next qubit that still lies on some shortest path
        cur = min(w for w in t.neighbors(cur) if dist_to_d[w] == dist_to_d[cur] - 1)
        seq.append(cur)
    return Path(tuple(seq))


def enumerate_paths(
    t: Topology,
    s: int,
    d: int,
    slack: int | float = DEFAULT_SLACK,
    cap: int | float = DEFAULT_CAP,
) -> list[Path]:
    """All simple paths from s to d of length <= shortest + slack, sorted by
    (length, lexicographic) and truncated to at most cap paths."""
    t.check_qubit(s)
    t.check_qubit(d)
    if s == d:
        raise ValidationError(f"source and destination coincide: {s}")
    if cap < 1:
        raise ValidationError(f"cap must be >= 1, got {cap}")
    if slack < 0:
        raise ValidationError(f"slack must be >= 0, got {slack}")
    dist_to_d = t.bfs_distances(d)
    if dist_to_d[s] < 0:
        raise NoPathError(f"no path between {s} and {d}")
    max_edges = dist_to_d[s] + slack  # may be inf
    if max_edges > t.num_qubits - 1:
        max_edges = t.num_qubits - 1

    found: list[tuple[int, ...]] = []
    stack = [s]
    on_stack = {s}

    def dfs(v: int) -> None:
        if v == d:
            found.append(tuple(stack))
            return
        for w in t.neighbors(v):
            # prune: even the best continuation through w would exceed the bound
            if w in on_stack or dist_to_d[w] < 0 or len(stack) + dist_to_d[w] > max_edges:
                continue
            stack.append(w)
            on_stack.add(w)
            dfs(w)
            stack.pop()
            on_stack.remove(w)

    dfs(s)
    found.sort(key=lambda q: (len(q), q))
    if math.isfinite(cap):
        found = found[: int(cap)]
    return [Path(q) for q in found]


def visitation_stats(paths: list[Path], t: Topology) -> tuple[dict[int, int], dict[Edge, int]]:
    """How many paths contain each qubit / traverse each edge."""
    qubit_counts = {q: 0 for q in range(t.num_qubits)}
    edge_counts = {e: 0 for e in t.edges}
    for p in paths:
        t.validate_path(p)
        for q in p.qubits:
            qubit_counts[q] += 1
        for e in p.edges():
            edge_counts[e] += 1
    return qubit_counts, edge_counts

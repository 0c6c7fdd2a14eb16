import json

import numpy as np
import pytest

from fidroute.errors import NoPathError, ParseError, ValidationError
from fidroute.topology import (
    Path,
    Topology,
    enumerate_paths,
    generate_topology,
    load_calibration,
    load_topology,
    shortest_path,
    topology_to_json,
    visitation_stats,
)

from conftest import brute_force_simple_paths


RING4_DOC = '{"num_qubits": 4, "edges": [[0,1],[1,2],[2,3],[0,3]]}'


class TestLoadTopology:
    def test_ring4_canonical_order(self):
        t = load_topology(RING4_DOC)
        assert t.num_qubits == 4
        assert t.edges == ((0, 1), (0, 3), (1, 2), (2, 3))

    def test_reference_heavy_hex_document(self, reference_device):
        doc = topology_to_json(reference_device)
        t = load_topology(doc)
        assert t.num_qubits == 127
        assert len(t.edges) == 144
        assert t == reference_device

    def test_self_loop_rejected(self):
        with pytest.raises(ValidationError, match=r"self-loop.*5"):
            load_topology('{"num_qubits": 6, "edges": [[5,5]]}')

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ValidationError, match=r"\(0,9\)"):
            load_topology('{"num_qubits": 4, "edges": [[0,9]]}')

    def test_duplicate_edge_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            load_topology('{"num_qubits": 4, "edges": [[0,1],[1,0]]}')

    def test_parse_error_carries_line(self):
        with pytest.raises(ParseError) as err:
            load_topology('{"num_qubits": 4,\n "edges": [[0,1],}')
        assert err.value.line == 2

    def test_canonical_order_stable_across_runs(self):
        shuffled = '{"num_qubits": 4, "edges": [[3,2],[1,0],[2,1],[3,0]]}'
        assert load_topology(shuffled).edges == load_topology(RING4_DOC).edges


class TestGenerateTopology:
    def test_ring4(self):
        t = generate_topology("ring", n=4)
        assert t.num_qubits == 4 and len(t.edges) == 4

    def test_grid_3x3(self):
        # 2*3*(3-1) = 12 edges, counted by hand
        t = generate_topology("grid", rows=3, cols=3)
        assert t.num_qubits == 9 and len(t.edges) == 12

    def test_heavy_hex_reference(self, reference_device):
        assert reference_device.num_qubits == 127
        assert len(reference_device.edges) == 144

    def test_heavy_hex_smaller_lattice_connected(self):
        t = generate_topology("heavy_hex", rows=3, row_len=7)
        assert all(dv >= 0 for dv in t.bfs_distances(0))

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("ring", {"n": 2}),
            ("grid", {"rows": 0, "cols": 3}),
            ("heavy_hex", {"rows": 4, "row_len": 15}),
            ("heavy_hex", {"rows": 7, "row_len": 14}),
            ("torus", {"n": 3}),
        ],
    )
    def test_unsupported_sizes(self, kind, params):
        with pytest.raises(ValidationError):
            generate_topology(kind, **params)

    def test_deterministic(self):
        a = generate_topology("heavy_hex", rows=7, row_len=15)
        b = generate_topology("heavy_hex", rows=7, row_len=15)
        assert a.edges == b.edges


class TestShortestPath:
    def test_ring4_tie_break(self, ring4):
        # [0,1,2] and [0,3,2] tie on length; lexicographic pick
        assert shortest_path(ring4, 0, 2).qubits == (0, 1, 2)

    def test_adjacent_pair(self, ring4):
        assert shortest_path(ring4, 0, 3).qubits == (0, 3)

    def test_line_unique(self, line4):
        assert shortest_path(line4, 0, 3).qubits == (0, 1, 2, 3)

    def test_no_path_between_components(self):
        t = Topology(4, ((0, 1), (2, 3)))
        with pytest.raises(NoPathError):
            shortest_path(t, 0, 3)

    def test_same_endpoint_rejected(self, ring4):
        with pytest.raises(ValidationError):
            shortest_path(ring4, 1, 1)

    def test_length_matches_bfs_and_membership(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(3, 9))
            t = _random_graph(n, rng)
            s, d = rng.choice(n, size=2, replace=False)
            dist = t.bfs_distances(int(s))[int(d)]
            if dist < 0:
                with pytest.raises(NoPathError):
                    shortest_path(t, int(s), int(d))
                continue
            p = shortest_path(t, int(s), int(d))
            assert len(p) - 1 == dist
            assert p.qubits in {q.qubits for q in enumerate_paths(t, int(s), int(d), slack=0, cap=10**6)}


class TestEnumeratePaths:
    def test_ring4_slack0(self, ring4):
        assert [p.qubits for p in enumerate_paths(ring4, 0, 2, slack=0, cap=10)] == [
            (0, 1, 2),
            (0, 3, 2),
        ]

    def test_cap_truncation(self, ring4):
        assert [p.qubits for p in enumerate_paths(ring4, 0, 2, slack=0, cap=1)] == [(0, 1, 2)]

    def test_line_no_alternative(self, line3):
        assert [p.qubits for p in enumerate_paths(line3, 0, 2, slack=5, cap=10)] == [(0, 1, 2)]

    def test_no_path_error(self):
        t = Topology(4, ((0, 1), (2, 3)))
        with pytest.raises(NoPathError):
            enumerate_paths(t, 0, 2)

    def test_ordering_and_uniqueness(self, ring4):
        paths = enumerate_paths(ring4, 0, 2, slack=4, cap=100)
        keys = [(len(p), p.qubits) for p in paths]
        assert keys == sorted(keys)
        assert len(set(p.qubits for p in paths)) == len(paths)

    def test_matches_brute_force_on_small_graphs(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(60):
            n = int(rng.integers(3, 9))
            t = _random_graph(n, rng)
            adj = {q: list(t.neighbors(q)) for q in range(n)}
            s, d = (int(v) for v in rng.choice(n, size=2, replace=False))
            expected = brute_force_simple_paths(adj, s, d)
            if not expected:
                continue
            got = {p.qubits for p in enumerate_paths(t, s, d, slack=float("inf"), cap=float("inf"))}
            assert got == expected
            checked += 1
        assert checked > 20

    def test_contains_shortest(self, ring4):
        paths = enumerate_paths(ring4, 0, 2, slack=3, cap=100)
        assert paths[0].qubits == shortest_path(ring4, 0, 2).qubits


class TestVisitationStats:
    def test_single_path_on_line(self, line3):
        qc, ec = visitation_stats([Path((0, 1, 2))], line3)
        assert qc == {0: 1, 1: 1, 2: 1}
        assert ec == {(0, 1): 1, (1, 2): 1}

    def test_empty_list(self, line3):
        qc, ec = visitation_stats([], line3)
        assert set(qc.values()) == {0} and set(ec.values()) == {0}

    def test_totals_consistent(self, ring4):
        paths = enumerate_paths(ring4, 0, 2, slack=4, cap=100)
        _, ec = visitation_stats(paths, ring4)
        assert sum(ec.values()) == sum(len(p) - 1 for p in paths)

    def test_invalid_path_rejected(self, line3):
        with pytest.raises(ValidationError):
            visitation_stats([Path((0, 2))], line3)


class TestPathAndCalibration:
    def test_path_requires_two_qubits(self):
        with pytest.raises(ValidationError):
            Path((3,))

    def test_path_rejects_repeats(self):
        with pytest.raises(ValidationError):
            Path((0, 1, 0))

    def test_calibration_roundtrip(self, ring4):
        doc = {
            "timestamp": 1700,
            "edge_errors": [[a, b, 0.25] for a, b in ring4.edges],
            "readout_errors": [0.0, 0.1, 0.2, 1.0],
        }
        cal = load_calibration(json.dumps(doc), ring4)
        assert cal.edge_error[(0, 1)] == 0.25
        assert cal.readout_error[3] == 1.0  # a rate of exactly 1 is legal

    def test_calibration_must_cover_edges(self, ring4):
        doc = {"timestamp": 0, "edge_errors": [[0, 1, 0.1]], "readout_errors": [0.0] * 4}
        with pytest.raises(ValidationError):
            load_calibration(json.dumps(doc), ring4)

    def test_rates_bounded(self, ring4):
        doc = {
            "timestamp": 0,
            "edge_errors": [[a, b, 1.5] for a, b in ring4.edges],
            "readout_errors": [0.0] * 4,
        }
        with pytest.raises(ValidationError):
            load_calibration(json.dumps(doc), ring4)


def _random_graph(n: int, rng: np.random.Generator) -> Topology:
    edges = set()
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.4:
                edges.add((a, b))
    if not edges:
        edges.add((0, 1))
    return Topology(n, tuple(edges))

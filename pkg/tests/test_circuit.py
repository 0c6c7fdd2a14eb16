import math

import numpy as np
import pytest

from fidroute.circuit import Circuit, Gate, GateKind, coupling_satisfied, emit_qasm, parse_qasm
from fidroute.errors import ParseError, ValidationError
from fidroute.topology import generate_topology


class TestParse:
    def test_single_cx(self):
        c = parse_qasm("qreg q[2]; cx q[0],q[1];")
        assert c == Circuit(2, (Gate(GateKind.CNOT, (0, 1)),))

    def test_swap(self):
        c = parse_qasm("qreg q[3]; swap q[0],q[2];")
        assert c == Circuit(3, (Gate(GateKind.SWAP, (0, 2)),))

    def test_unsupported_gate_named(self):
        with pytest.raises(ParseError, match="ccx"):
            parse_qasm("qreg q[1]; ccx q[0],q[0],q[0];")

    def test_full_prologue(self):
        c = parse_qasm('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\nh q[0];\ncx q[0],q[1];\n')
        assert [g.kind for g in c.gates] == [GateKind.H, GateKind.CNOT]

    def test_qubit_out_of_range(self):
        with pytest.raises(ParseError, match="out of range"):
            parse_qasm("qreg q[2]; cx q[0],q[5];")

    def test_error_carries_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_qasm("qreg q[2];\nh q[0];\nbogus q[1];\n")
        assert err.value.line == 3

    def test_rz_pi_forms(self):
        c = parse_qasm("qreg q[1]; rz(pi/2) q[0]; rz(-pi/4) q[0]; rz(3*pi/4) q[0]; rz(0.25) q[0];")
        assert [g.param for g in c.gates] == pytest.approx(
            [math.pi / 2, -math.pi / 4, 3 * math.pi / 4, 0.25]
        )

    def test_measure_rejected(self):
        with pytest.raises(ParseError, match="measure"):
            parse_qasm("qreg q[1]; creg c[1]; measure q[0] -> c[0];")

    def test_missing_qreg(self):
        with pytest.raises(ParseError, match="qreg"):
            parse_qasm("h q[0];")

    def test_comments_stripped(self):
        c = parse_qasm("// header\nqreg q[2]; // reg\ncx q[0],q[1];\n")
        assert len(c.gates) == 1


class TestEmit:
    def test_single_cx(self):
        text = emit_qasm(Circuit(2, (Gate(GateKind.CNOT, (0, 1)),)))
        assert text == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncx q[0],q[1];\n'

    def test_empty_circuit_header_only(self):
        text = emit_qasm(Circuit(3, ()))
        assert text == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\n'

    def test_roundtrip_random_corpus(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            c = _random_circuit(int(rng.integers(1, 7)), int(rng.integers(0, 15)), rng)
            text = emit_qasm(c)
            assert parse_qasm(text) == c
            # canonical-format idempotence
            assert emit_qasm(parse_qasm(text)) == text

    def test_rz_param_bit_exact(self):
        c = Circuit(1, (Gate(GateKind.RZ, (0,), 0.1234567890123456789),))
        assert parse_qasm(emit_qasm(c)).gates[0].param == c.gates[0].param


class TestCouplingSatisfied:
    def test_adjacent_ok(self):
        line = generate_topology("grid", rows=1, cols=3)
        ok, idx = coupling_satisfied(Circuit(3, (Gate(GateKind.CNOT, (0, 1)),)), line)
        assert ok and idx is None

    def test_first_violation_reported(self):
        line = generate_topology("grid", rows=1, cols=3)
        c = Circuit(3, (Gate(GateKind.CNOT, (0, 2)), Gate(GateKind.CNOT, (1, 2))))
        ok, idx = coupling_satisfied(c, line)
        assert not ok and idx == 0

    def test_single_qubit_gates_ignored(self):
        line = generate_topology("grid", rows=1, cols=3)
        ok, _ = coupling_satisfied(Circuit(3, (Gate(GateKind.H, (2,)),)), line)
        assert ok

    def test_too_many_qubits(self):
        line = generate_topology("grid", rows=1, cols=3)
        with pytest.raises(ValidationError):
            coupling_satisfied(Circuit(5, ()), line)


class TestGateValidation:
    def test_arity_checked(self):
        with pytest.raises(ValidationError):
            Gate(GateKind.CNOT, (0,))

    def test_two_qubit_distinct(self):
        with pytest.raises(ValidationError):
            Gate(GateKind.SWAP, (1, 1))

    def test_param_only_on_rz(self):
        with pytest.raises(ValidationError):
            Gate(GateKind.H, (0,), 0.5)
        with pytest.raises(ValidationError):
            Gate(GateKind.RZ, (0,))

    def test_circuit_range_check(self):
        with pytest.raises(ValidationError):
            Circuit(2, (Gate(GateKind.X, (2,)),))


def _random_circuit(n: int, n_gates: int, rng: np.random.Generator) -> Circuit:
    one_q = [GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.S, GateKind.SDG, GateKind.RZ]
    gates = []
    for _ in range(n_gates):
        if n >= 2 and rng.random() < 0.4:
            kind = GateKind.CNOT if rng.random() < 0.7 else GateKind.SWAP
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate(kind, (int(a), int(b))))
        else:
            kind = one_q[rng.integers(len(one_q))]
            param = float(rng.uniform(-2 * math.pi, 2 * math.pi)) if kind is GateKind.RZ else None
            gates.append(Gate(kind, (int(rng.integers(n)),), param))
    return Circuit(n, tuple(gates))

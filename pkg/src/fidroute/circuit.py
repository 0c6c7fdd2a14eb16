"""Gate-list circuit IR over physical qubits, with an OpenQASM 2 subset
parser/emitter and coupling-constraint checking.

Supported statements: the OPENQASM 2.0 header, one qelib1 include, a single
qreg declaration, and the gates cx, swap, h, x, y, z, s, sdg, rz(theta).
No classical registers, measurement, or gate definitions.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, ValidationError
from .topology import Topology


class GateKind(Enum):
    CNOT = "cx"
    SWAP = "swap"
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    RZ = "rz"

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.SWAP) else 1

    @property
    def takes_param(self) -> bool:
        return self is GateKind.RZ


_KIND_BY_NAME = {k.value: k for k in GateKind}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise ValidationError(f"{self.kind.value} takes {self.kind.arity} qubit(s), got {self.qubits}")
        if self.kind.arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValidationError(f"{self.kind.value} qubits must be distinct, got {self.qubits}")
        if self.kind.takes_param != (self.param is not None):
            raise ValidationError(f"{self.kind.value} parameter mismatch (param={self.param})")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                if not (0 <= q < self.num_qubits):
                    raise ValidationError(f"gate {i} ({g.kind.value}) uses qubit {q} outside q[{self.num_qubits}]")


_QREG_RE = re.compile(r"^qreg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_GATE_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*(.*)$")
_OPERAND_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_NUM_RE = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def _parse_angle(text: str, line: int) -> float:
    """Angle expressions: numeric literals plus the usual pi forms
    (pi, -pi/2, 3*pi/4, 0.5*pi)."""
    expr = text.strip().replace(" ", "")
    if not expr:
        raise ParseError("empty rz parameter", line)
    sign = 1.0
    if expr[0] in "+-":
        sign = -1.0 if expr[0] == "-" else 1.0
        expr = expr[1:]
    num, _, den = expr.partition("/")
    try:
        if num == "pi":
            value = math.pi
        elif num.endswith("*pi"):
            value = float(num[:-3]) * math.pi
        elif _NUM_RE.match(num):
            value = float(num)
        else:
            raise ValueError(num)
        if den:
            value /= float(den)
    except ValueError as exc:
        raise ParseError(f"cannot parse angle {text.strip()!r}", line) from exc
    return sign * value


def _statements(text: str):
    """Yield (statement, line) pairs, splitting on ';' and stripping //-comments."""
    buf: list[str] = []
    start_line = 1
    line = 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "/" and text[i : i + 2] == "//":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
        if ch == ";":
            stmt = "".join(buf).strip()
            if stmt:
                yield stmt, start_line
            buf = []
            start_line = line
        else:
            if not buf and not ch.isspace():
                start_line = line
            buf.append(ch)
        i += 1
    tail = "".join(buf).strip()
    if tail:
        raise ParseError(f"statement missing ';': {tail!r}", start_line)


def parse_qasm(text: str) -> Circuit:
    """Parse the supported OpenQASM 2 subset into a Circuit."""
    reg_name: str | None = None
    num_qubits = 0
    gates: list[Gate] = []
    for stmt, line in _statements(text):
        head = stmt.split(None, 1)[0]
        if head == "OPENQASM":
            if stmt.split() != ["OPENQASM", "2.0"]:
                raise ParseError(f"unsupported version statement {stmt!r}", line)
            continue
        if head == "include":
            continue
        if head == "qreg":
            m = _QREG_RE.match(stmt)
            if not m:
                raise ParseError(f"malformed qreg statement {stmt!r}", line)
            if reg_name is not None:
                raise ParseError("only a single quantum register is supported", line)
            reg_name, num_qubits = m.group(1), int(m.group(2))
            if num_qubits < 1:
                raise ParseError("register size must be positive", line)
            continue
        if head in ("creg", "measure", "barrier", "reset", "gate", "opaque", "if"):
            raise ParseError(f"unsupported statement kind {head!r}", line)

        m = _GATE_RE.match(stmt)
        if not m:
            raise ParseError(f"cannot parse statement {stmt!r}", line)
        name, param_text, operand_text = m.group(1), m.group(2), m.group(3)
        kind = _KIND_BY_NAME.get(name)
        if kind is None:
            raise ParseError(f"unsupported gate {name!r}", line)
        if reg_name is None:
            raise ParseError(f"gate {name!r} before qreg declaration", line)
        if kind.takes_param != (param_text is not None):
            raise ParseError(f"gate {name!r} parameter mismatch", line)
        operands = [o.strip() for o in operand_text.split(",")] if operand_text.strip() else []
        if len(operands) != kind.arity:
            raise ParseError(f"gate {name!r} takes {kind.arity} operand(s), got {len(operands)}", line)
        qubits = []
        for op in operands:
            om = _OPERAND_RE.match(op)
            if not om:
                raise ParseError(f"malformed operand {op!r}", line)
            if om.group(1) != reg_name:
                raise ParseError(f"unknown register {om.group(1)!r}", line)
            q = int(om.group(2))
            if q >= num_qubits:
                raise ParseError(f"qubit {q} out of range for {reg_name}[{num_qubits}]", line)
            qubits.append(q)
        if kind.arity == 2 and qubits[0] == qubits[1]:
            raise ParseError(f"gate {name!r} operands must be distinct", line)
        param = _parse_angle(param_text, line) if kind.takes_param else None
        gates.append(Gate(kind, tuple(qubits), param))
    if reg_name is None:
        raise ParseError("no qreg declaration found")
    return Circuit(num_qubits, tuple(gates))


def emit_qasm(c: Circuit) -> str:
    """Deterministic emitter; parse_qasm(emit_qasm(c)) == c."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.num_qubits}];"]
    for g in c.gates:
        param = f"({g.param!r})" if g.kind.takes_param else ""
        operands = ",".join(f"q[{q}]" for q in g.qubits)
        lines.append(f"{g.kind.value}{param} {operands};")
    return "\n".join(lines) + "\n"


def coupling_satisfied(c: Circuit, t: Topology) -> tuple[bool, int | None]:
    """True iff every two-qubit gate acts on a coupling edge; otherwise the
    index of the first offending gate is returned."""
    if c.num_qubits > t.num_qubits:
        raise ValidationError(f"circuit uses {c.num_qubits} qubits, topology has {t.num_qubits}")
    for i, g in enumerate(c.gates):
        if g.kind.arity == 2 and not t.are_connected(*g.qubits):
            return False, i
    return True, None

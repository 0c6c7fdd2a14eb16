"""Synthetic noise backend: analytic depolarizing fidelity oracle, exact
statevector simulation, and full two-qubit process tomography.

Ground truth for a routed CNOT is a global two-qubit depolarizing channel:
each constituent CNOT on an edge with error rate eps multiplies the survival
parameter by (1 - eps). Process fidelity of depolarizing(lam) composed with
the ideal gate is lam + (1 - lam) / d^2, and gate fidelity follows from
(d * F_process + 1) / (d + 1). With the default d = 4 a fully failed edge
(eps = 1) yields gate fidelity exactly 1/4, the fidelity of a random
two-qubit gate.

Tomography prepares the 16 product states {|0>,|1>,|+>,|+i>}^2, measures in
the 9 Pauli bases {X,Y,Z}^2 (144 settings), and reconstructs the Pauli
transfer matrix by linear inversion. Readout error is modeled as independent
classical bit flips on the two measured qubits; because the flip rates are
known from the calibration, their effect on expectation values is inverted
before reconstruction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .errors import DataError, ValidationError
from .topology import CalibrationSnapshot, Path, Topology

PERMUTE = "permute"
RESTORE = "restore"
_MODES = (PERMUTE, RESTORE)

# --- two-qubit Pauli machinery (index = 4*a + b, a/b in I,X,Y,Z order) ---

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI1 = (_I, _X, _Y, _Z)
_PAULI2 = [np.kron(a, b) for a in _PAULI1 for b in _PAULI1]

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

# preparation kets |0>, |1>, |+>, |+i> and their product density matrices
_PREP_KETS = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
)
_PREP_LABELS = ("0", "1", "+", "+i")
_BASIS_LABELS = ("X", "Y", "Z")


def _ptm_of_unitary(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    r = np.empty((16, 16))
    for j, pj in enumerate(_PAULI2):
        upj = u @ pj @ u.conj().T
        for i, pi in enumerate(_PAULI2):
            r[i, j] = np.trace(pi @ upj).real / d
    return r


_CNOT_PTM = _ptm_of_unitary(_CNOT)
_CNOT_PTM_INV = np.linalg.inv(_CNOT_PTM)

# S[j, k] = Tr[P_j rho_k] over the 16 product preparations; invertible for
# the canonical basis, so linear inversion is exact.
_PREP_RHOS = [
    np.kron(np.outer(ka, ka.conj()), np.outer(kb, kb.conj()))
    for ka in _PREP_KETS
    for kb in _PREP_KETS
]
_S = np.array([[np.trace(p @ rho).real for rho in _PREP_RHOS] for p in _PAULI2])
_S_INV = np.linalg.inv(_S)


@dataclass(frozen=True)
class DepolarizingParams:
    """Composite depolarizing survival parameter of a routed CNOT."""

    lambda_total: float
    d: int = 4

    def __post_init__(self):
        if not 0.0 <= self.lambda_total <= 1.0:
            raise ValidationError(f"lambda_total out of [0,1]: {self.lambda_total}")
        if self.d < 2:
            raise ValidationError(f"dimension must be >= 2, got {self.d}")


@dataclass(frozen=True)
class ProcessTomographyResult:
    ptm: np.ndarray
    process_fidelity: float
    gate_fidelity: float


def lambda_from_error(eps: float) -> float:
    """Depolarizing survival parameter of one CNOT on an edge with error eps."""
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"error rate out of [0,1]: {eps}")
    return 1.0 - eps


def path_cnot_count(p: Path, mode: str = PERMUTE) -> int:
    """CNOTs executed when routing one CNOT along p (SWAP = 3 CNOTs)."""
    _check_mode(mode)
    hops = len(p) - 2
    return (3 if mode == PERMUTE else 6) * hops + 1


def _path_lambda(t: Topology, cal: CalibrationSnapshot, p: Path, mode: str) -> float:
    t.validate_path(p)
    q = p.qubits
    swaps_per_hop = 1 if mode == PERMUTE else 2
    lam = 1.0
    for i in range(len(q) - 2):
        eps = _edge_eps(cal, q[i], q[i + 1])
        lam *= lambda_from_error(eps) ** (3 * swaps_per_hop)
    lam *= lambda_from_error(_edge_eps(cal, q[-2], q[-1]))
    return lam


def _edge_eps(cal: CalibrationSnapshot, a: int, b: int) -> float:
    key = (a, b) if a < b else (b, a)
    if key not in cal.edge_error:
        raise DataError(f"calibration has no entry for edge {key}")
    return cal.edge_error[key]


def path_process_fidelity(
    t: Topology, cal: CalibrationSnapshot, p: Path, mode: str = PERMUTE, d: int = 4
) -> float:
    """Analytic process fidelity of the depolarizing composition along p."""
    _check_mode(mode)
    lam = _path_lambda(t, cal, p, mode)
    return lam + (1.0 - lam) / d**2


def convert_gate_fidelity(f_process: float, d: int = 4) -> float:
    """Average gate fidelity from process fidelity: (d*F + 1) / (d + 1)."""
    if not 0.0 <= f_process <= 1.0:
        raise ValidationError(f"process fidelity out of [0,1]: {f_process}")
    if d < 2:
        raise ValidationError(f"dimension must be >= 2, got {d}")
    return (d * f_process + 1.0) / (d + 1.0)


def _check_mode(mode: str) -> None:
    if mode not in _MODES:
        raise ValidationError(f"unknown routing mode {mode!r} (expected permute or restore)")


# --- statevector simulation ------------------------------------------------

_GATE_1Q = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    GateKind.X: _X,
    GateKind.Y: _Y,
    GateKind.Z: _Z,
    GateKind.S: np.diag([1, 1j]).astype(complex),
    GateKind.SDG: np.diag([1, -1j]).astype(complex),
}

MAX_SIM_QUBITS = 12


def _check_sim_size(n: int) -> None:
    if n > MAX_SIM_QUBITS:
        raise ValidationError(f"statevector simulation capped at {MAX_SIM_QUBITS} qubits, got {n}")


def _apply_gate(state: np.ndarray, g: Gate, n: int) -> np.ndarray:
    # qubit q occupies axis q; axis 0 is the most significant bit of the index
    psi = state.reshape([2] * n + [-1])
    if g.kind.arity == 1:
        q = g.qubits[0]
        mat = _GATE_1Q[g.kind] if g.kind is not GateKind.RZ else np.diag(
            [np.exp(-0.5j * g.param), np.exp(0.5j * g.param)]
        )
        psi = np.moveaxis(psi, q, 0)
        psi = np.tensordot(mat, psi, axes=([1], [0]))
        psi = np.moveaxis(psi, 0, q)
        return psi.reshape(state.shape)
    a, b = g.qubits
    out = psi.copy()
    if g.kind is GateKind.CNOT:
        sel1 = _index(n, {a: 1, b: 0})
        sel2 = _index(n, {a: 1, b: 1})
        out[sel1], out[sel2] = psi[sel2], psi[sel1]
    elif g.kind is GateKind.SWAP:
        sel1 = _index(n, {a: 0, b: 1})
        sel2 = _index(n, {a: 1, b: 0})
        out[sel1], out[sel2] = psi[sel2], psi[sel1]
    return out.reshape(state.shape)


def _index(n: int, fixed: dict[int, int]) -> tuple:
    sel: list = [slice(None)] * (n + 1)
    for q, v in fixed.items():
        sel[q] = v
    return tuple(sel)


def simulate_statevector(c: Circuit, initial: int = 0) -> np.ndarray:
    """Exact noiseless statevector for a computational-basis input."""
    _check_sim_size(c.num_qubits)
    dim = 1 << c.num_qubits
    if not 0 <= initial < dim:
        raise ValidationError(f"initial state index {initial} out of range for {c.num_qubits} qubits")
    state = np.zeros(dim, dtype=complex)
    state[initial] = 1.0
    for g in c.gates:
        state = _apply_gate(state, g, c.num_qubits)
    return state


def _circuit_unitary(c: Circuit) -> np.ndarray:
    """Columns are the outputs for each computational-basis input."""
    _check_sim_size(c.num_qubits)
    dim = 1 << c.num_qubits
    u = np.eye(dim, dtype=complex)
    for g in c.gates:
        u = _apply_gate(u, g, c.num_qubits)
    return u


def equivalent_up_to_permutation(
    a: Circuit, b: Circuit, perm: tuple[int, ...] | list[int], tol: float = 1e-9
) -> bool:
    """True iff for every basis input the two output states agree (up to a
    global phase) once b's output qubit labels are rerouted through perm,
    where perm[logical] = physical location in b's output."""
    if a.num_qubits != b.num_qubits:
        raise ValidationError(
            f"circuits act on different register sizes ({a.num_qubits} vs {b.num_qubits})"
        )
    n = a.num_qubits
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"perm must be a permutation of 0..{n - 1}, got {list(perm)}")
    ua = _circuit_unitary(a)
    ub = _circuit_unitary(b)
    # reorder row axes so logical qubit i is read from physical qubit perm[i]
    ub = ub.reshape([2] * n + [-1]).transpose(list(perm) + [n]).reshape(ub.shape)
    overlaps = np.abs(np.einsum("ij,ij->j", ua.conj(), ub))
    return bool(np.all(np.abs(overlaps - 1.0) <= tol))


# --- process tomography ------------------------------------------------------


def _measured_qubits(p: Path, mode: str) -> tuple[int, int]:
    # in permute mode the control ends next to the target; restore returns it
    if mode == PERMUTE and len(p) > 2:
        return p.qubits[-2], p.qubits[-1]
    return p.qubits[0], p.qubits[-1]


def _vec_observable(mat: np.ndarray) -> np.ndarray:
    # row such that row @ rho.reshape(-1) == trace(mat @ rho)
    return mat.T.reshape(-1)


# observable rows per setting (ia, ib): A x I, I x B, A x B
_OBS_MAT = np.array(
    [
        _vec_observable(m)
        for pa in _PAULI1[1:]
        for pb in _PAULI1[1:]
        for m in (np.kron(pa, _I), np.kron(_I, pb), np.kron(pa, pb))
    ]
)
_PREP_RHOS_IDEAL_OUT = [(_CNOT @ rho @ _CNOT.conj().T) for rho in _PREP_RHOS]
_MAX_MIXED = np.eye(4, dtype=complex) / 4.0


def run_process_tomography(
    t: Topology,
    cal: CalibrationSnapshot,
    p: Path,
    mode: str = PERMUTE,
    shots: int | None = None,
    seed: int | None = None,
    d: int = 4,
    expectations_csv: str | None = None,
) -> ProcessTomographyResult:
    """Full two-qubit process tomography of the routed CNOT along p.

    shots=None uses exact outcome probabilities; otherwise each of the 144
    settings is sampled with its own RNG substream derived from seed. Known
    readout flip rates are inverted out of the measured expectations, so with
    exact probabilities the result matches the analytic oracle regardless of
    readout error.
    """
    _check_mode(mode)
    if shots is not None and shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    lam = _path_lambda(t, cal, p, mode)
    qc, qt = _measured_qubits(p, mode)
    r1 = cal.readout_error.get(qc, 0.0)
    r2 = cal.readout_error.get(qt, 0.0)
    f1, f2 = 1.0 - 2.0 * r1, 1.0 - 2.0 * r2
    if abs(f1) < 1e-9 or abs(f2) < 1e-9:
        raise DataError(f"readout error 0.5 on qubit {qc if abs(f1) < 1e-9 else qt} is not invertible")

    # accumulators: AB from its unique setting, A_I/I_B averaged over the 3
    # settings that share the first/second basis
    m = np.zeros((16, 16))
    m[0, :] = 1.0
    csv_rows: list[tuple[str, float]] = []
    for k, ideal_out in enumerate(_PREP_RHOS_IDEAL_OUT):
        rho_out = lam * ideal_out + (1.0 - lam) * _MAX_MIXED
        expectations = (_OBS_MAT @ rho_out.reshape(-1)).real.reshape(9, 3)
        for setting, (e_ai, e_ib, e_ab) in enumerate(expectations):
            ia, ib = setting // 3 + 1, setting % 3 + 1
            # readout flips shrink expectations by (1-2r) per measured qubit
            e_ai, e_ib, e_ab = f1 * e_ai, f2 * e_ib, f1 * f2 * e_ab
            if shots is not None:
                e_ai, e_ib, e_ab = _sample_setting(e_ai, e_ib, e_ab, shots, seed, k, ia, ib)
            # invert the known flip rates before reconstruction
            e_ai, e_ib, e_ab = e_ai / f1, e_ib / f2, e_ab / (f1 * f2)
            m[4 * ia + ib, k] = e_ab
            m[4 * ia, k] += e_ai / 3.0
            m[ib, k] += e_ib / 3.0
            if expectations_csv is not None:
                prep = _PREP_LABELS[k // 4] + _PREP_LABELS[k % 4]
                basis = _BASIS_LABELS[ia - 1] + _BASIS_LABELS[ib - 1]
                csv_rows.append((f"prep={prep};basis={basis}", e_ab))

    ptm = m @ _S_INV
    f_process = float(np.trace(_CNOT_PTM_INV @ ptm) / d**2)
    f_process_clipped = min(max(f_process, 0.0), 1.0)
    result = ProcessTomographyResult(
        ptm=ptm,
        process_fidelity=f_process_clipped,
        gate_fidelity=convert_gate_fidelity(f_process_clipped, d),
    )
    if expectations_csv is not None:
        with open(expectations_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "expectation"])
            writer.writerows(csv_rows)
    return result


def _sample_setting(
    e_ai: float, e_ib: float, e_ab: float, shots: int, seed: int | None, k: int, ia: int, ib: int
) -> tuple[float, float, float]:
    probs = np.array(
        [
            (1.0 + a * e_ai + b * e_ib + a * b * e_ab) / 4.0
            for a in (1.0, -1.0)
            for b in (1.0, -1.0)
        ]
    )
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng([0 if seed is None else seed, k, ia, ib])
    counts = rng.multinomial(shots, probs)
    signs_a = np.array([1.0, 1.0, -1.0, -1.0])
    signs_b = np.array([1.0, -1.0, 1.0, -1.0])
    return (
        float(counts @ signs_a) / shots,
        float(counts @ signs_b) / shots,
        float(counts @ (signs_a * signs_b)) / shots,
    )

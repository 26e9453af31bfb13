"""Dense statevector simulation of the measurement circuits.

Conventions: qubit 0 is the most significant bit of the amplitude index.
Trace-style estimates run on a doubled register [0..N-1] + [N..2N-1] prepared
in the maximally entangled state |phi> = 2^{-N/2} sum_i |i>|i>, with ancillas
appended after the registers.  Controlled conjugated operators are applied as
controlled raw unitaries; gate-level decompositions of the same circuits are
available for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import cos, sin, sqrt

import numpy as np

from . import kernels
from .errors import AsymmetricGeneratorError, BadDimensionError, SizeMismatchError
from .pauli import PauliString, PauliSum

_UNITARY_TOL = 1e-10
_NORM_TOL = 1e-10

# ancilla rotation before measurement in the commutator tests: (1 - i X)/sqrt(2)
ROT_X_ANC = np.array([[1, -1j], [-1j, 1]], dtype=complex) / sqrt(2)
# ancilla rotation for the direct-expectation test (inverse sense around Y):
# (1 + i Y)/sqrt(2), chosen so p(0) = 1/2 + <obs>/2 holds exactly
ROT_Y_ANC = np.array([[1, 1], [-1, 1]], dtype=complex) / sqrt(2)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=complex)


def _check_unitary(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    if matrix.shape != (dim, dim) or dim & (dim - 1):
        raise BadDimensionError(f"gate matrix has shape {matrix.shape}")
    if np.abs(matrix @ matrix.conj().T - np.eye(dim)).max() > _UNITARY_TOL:
        raise ValueError("gate matrix is not unitary within 1e-10")
    return matrix


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    kinds: h, x, rx, ry, rz (half-angle convention), cnot, rot (exp(-i theta P)
    for a Pauli string P), u (raw unitary), cu (controlled raw unitary with
    qubits[0] as control).
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | None = None
    matrix: np.ndarray | None = None
    pauli: PauliString | None = None

    def block(self) -> tuple[np.ndarray, tuple[int, ...]]:
        """(dense matrix, target qubits) pair actually applied to the state."""
        k = self.kind
        if k == "h":
            return _H, self.qubits
        if k == "x":
            return _X, self.qubits
        if k == "cnot":
            return _CNOT, self.qubits
        if k in ("rx", "ry", "rz"):
            t = self.param / 2.0
            if k == "rx":
                m = np.array([[cos(t), -1j * sin(t)], [-1j * sin(t), cos(t)]])
            elif k == "ry":
                m = np.array([[cos(t), -sin(t)], [sin(t), cos(t)]], dtype=complex)
            else:
                m = np.diag([np.exp(-1j * t), np.exp(1j * t)])
            return m, self.qubits
        if k == "rot":
            sub = self.pauli.restricted(self.pauli.support)
            m = cos(self.param) * np.eye(2 ** sub.n_qubits) - 1j * sin(self.param) * sub.dense()
            return m, self.qubits
        if k == "u":
            return self.matrix, self.qubits
        if k == "cu":
            return kernels.controlled_block(self.matrix), self.qubits
        raise ValueError(f"unknown gate kind {k!r}")

    def dagger(self) -> "Gate":
        if self.kind in ("h", "x", "cnot"):
            return self
        if self.kind in ("rx", "ry", "rz", "rot"):
            return replace(self, param=-self.param)
        return replace(self, matrix=self.matrix.conj().T)

    def transpose(self) -> "Gate":
        if self.kind in ("h", "x", "cnot", "rx", "rz"):
            return self
        if self.kind == "ry":
            return replace(self, param=-self.param)
        if self.kind == "rot":
            return replace(self, param=self.pauli.transpose_parity() * self.param)
        return replace(self, matrix=self.matrix.T.copy())

    def remapped(self, offset: int) -> "Gate":
        return replace(self, qubits=tuple(q + offset for q in self.qubits))

    def describe(self) -> str:
        qubits = " ".join(f"q{q}" for q in self.qubits)
        if self.kind in ("rx", "ry", "rz"):
            return f"{self.kind.upper()}({self.param:.6g}) {qubits}"
        if self.kind == "rot":
            return f"EXP(-i*{self.param:.6g}*{self.pauli.label}) {qubits}"
        if self.kind == "cu":
            return f"CU[{self.matrix.shape[0]}x{self.matrix.shape[0]}] ctrl=q{self.qubits[0]} {qubits[3:]}"
        if self.kind == "u":
            return f"U[{self.matrix.shape[0]}x{self.matrix.shape[0]}] {qubits}"
        return f"{self.kind.upper()} {qubits}"


@dataclass
class Circuit:
    """Ordered gate list on a fixed register."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def _check(self, *qubits):
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise BadDimensionError(f"qubit {q} outside register of size {self.n_qubits}")

    def add(self, gate: Gate) -> "Circuit":
        self._check(*gate.qubits)
        self.gates.append(gate)
        return self

    def h(self, q):
        return self.add(Gate("h", (q,)))

    def x(self, q):
        return self.add(Gate("x", (q,)))

    def rx(self, q, theta):
        return self.add(Gate("rx", (q,), param=theta))

    def ry(self, q, theta):
        return self.add(Gate("ry", (q,), param=theta))

    def rz(self, q, theta):
        return self.add(Gate("rz", (q,), param=theta))

    def cnot(self, control, target):
        return self.add(Gate("cnot", (control, target)))

    def rot(self, pauli: PauliString, theta: float, offset: int = 0):
        """exp(-i theta P), applied on the support of P shifted by ``offset``."""
        targets = tuple(q + offset for q in pauli.support)
        if not targets:
            return self  # exp(-i theta I) is a global phase; drop it
        return self.add(Gate("rot", targets, param=theta, pauli=pauli))

    def unitary(self, matrix, targets):
        return self.add(Gate("u", tuple(targets), matrix=_check_unitary(matrix)))

    def controlled_unitary(self, matrix, control, targets):
        return self.add(Gate("cu", (control, *targets), matrix=_check_unitary(matrix)))

    def controlled_pauli(self, pauli: PauliString, control, offset: int = 0):
        if pauli.is_identity:
            return self
        sub = pauli.restricted(pauli.support)
        targets = tuple(q + offset for q in pauli.support)
        return self.add(Gate("cu", (control, *targets), matrix=sub.dense()))

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.add(g)
        return self

    def dagger(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.dagger() for g in reversed(self.gates)])

    def transpose(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.transpose() for g in reversed(self.gates)])

    def remapped(self, offset: int, n_qubits: int) -> "Circuit":
        return Circuit(n_qubits, [g.remapped(offset) for g in self.gates])

    def to_matrix(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        mat = np.eye(dim, dtype=complex)
        for gate in self.gates:
            block, targets = gate.block()
            _apply_to_columns(mat, self.n_qubits, block, targets)
        return mat

    def dumps(self) -> str:
        head = f"circuit on {self.n_qubits} qubits, {len(self.gates)} gates"
        return "\n".join([head] + [g.describe() for g in self.gates])


def _apply_to_columns(mat, n_qubits, block, targets):
    """Apply a gate to every column of a (2^n, m) array, in place."""
    bases, offsets = kernels.gate_indices(n_qubits, tuple(targets))
    idx = (bases[:, None] + offsets[None, :])
    gathered = mat[idx.reshape(-1)].reshape(len(bases), len(offsets), -1)
    mat[idx.reshape(-1)] = np.einsum("rc,bcm->brm", block, gathered).reshape(-1, mat.shape[1])


class StateVector:
    """Dense complex amplitudes over 2^n basis states."""

    __slots__ = ("n_qubits", "data")

    def __init__(self, n_qubits: int, data: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if data is None:
            self.data = np.zeros(2 ** n_qubits, dtype=complex)
            self.data[0] = 1.0
        else:
            data = np.asarray(data, dtype=complex)
            if data.shape != (2 ** n_qubits,):
                raise BadDimensionError("amplitude count does not match the register")
            self.data = data

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.data.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def apply(self, gate: Gate) -> "StateVector":
        block, targets = gate.block()
        kernels.apply_matrix(self.data, self.n_qubits, block, targets)
        return self

    def probabilities(self, qubits=None) -> np.ndarray:
        probs = np.abs(self.data) ** 2
        if qubits is None:
            return probs
        probs = probs.reshape([2] * self.n_qubits)
        keep = tuple(qubits)
        drop = tuple(q for q in range(self.n_qubits) if q not in keep)
        if drop:
            probs = probs.sum(axis=drop)
        remaining = [q for q in range(self.n_qubits) if q in keep]
        order = [remaining.index(q) for q in keep]
        return probs.transpose(order).reshape(-1)


def run(circuit: Circuit, initial: StateVector | None = None, check_norm: bool = True) -> StateVector:
    state = StateVector(circuit.n_qubits) if initial is None else initial.copy()
    for gate in circuit.gates:
        state.apply(gate)
        if check_norm and abs(state.norm() - 1.0) > _NORM_TOL:
            raise ValueError(f"norm drifted to {state.norm()} after {gate.describe()}")
    return state


# ---------------------------------------------------------------------------
# Pauli expectations on statevectors
# ---------------------------------------------------------------------------

def _pauli_masks(n_total: int, string: PauliString, offset: int) -> tuple[int, int, int]:
    xmask = zymask = ny = 0
    for q in range(string.n_qubits):
        letter = string.letter(q)
        bit = 1 << (n_total - 1 - (q + offset))
        if letter in ("X", "Y"):
            xmask |= bit
        if letter in ("Z", "Y"):
            zymask |= bit
        if letter == "Y":
            ny += 1
    return xmask, zymask, ny


def _phase_vector(n_total: int, zymask: int, ny: int) -> np.ndarray:
    idx = np.arange(2 ** n_total, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & zymask) & 1)
    return (1j ** (ny % 4)) * signs


def apply_pauli(state: StateVector, string: PauliString, offset: int = 0) -> StateVector:
    """sigma |psi> as a new state; the string may sit at a qubit offset."""
    n = state.n_qubits
    xmask, zymask, ny = _pauli_masks(n, string, offset)
    phases = _phase_vector(n, zymask, ny)
    idx = np.arange(2 ** n, dtype=np.int64)
    src = idx ^ xmask
    return StateVector(n, phases[src] * state.data[src])


def pauli_expectation(state: StateVector, string: PauliString, offset: int = 0) -> float:
    n = state.n_qubits
    xmask, zymask, ny = _pauli_masks(n, string, offset)
    phases = _phase_vector(n, zymask, ny)
    idx = np.arange(2 ** n, dtype=np.int64)
    value = np.vdot(state.data[idx ^ xmask], phases * state.data)
    return float(value.real)


def expectation(state: StateVector, obs: PauliSum | PauliString) -> float:
    """<psi|O|psi> for a Hermitian Pauli observable."""
    if isinstance(obs, PauliString):
        if obs.n_qubits != state.n_qubits:
            raise SizeMismatchError("observable and state qubit counts differ")
        return pauli_expectation(state, obs)
    if obs.n_qubits != state.n_qubits:
        raise SizeMismatchError("observable and state qubit counts differ")
    return float(sum(coeff.real * pauli_expectation(state, s) for s, coeff in obs.items()))


# ---------------------------------------------------------------------------
# shot sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShotSampler:
    """Finite-shot sampling configuration.

    The generator is numpy PCG64; sub-samplers derived with :meth:`spawn` are
    keyed on task indices so results do not depend on evaluation order.
    """

    seed: int
    shots: int
    spawn_key: tuple[int, ...] = ()

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)))

    def spawn(self, *indices: int) -> "ShotSampler":
        return ShotSampler(self.seed, self.shots, self.spawn_key + tuple(int(i) for i in indices))


def sample(circuit: Circuit, sampler: ShotSampler, measured_qubits) -> dict[int, int]:
    """Multinomial draw from the measured-qubit marginal of the final state."""
    state = run(circuit)
    probs = state.probabilities(tuple(measured_qubits))
    probs = probs / probs.sum()
    counts = sampler.rng().multinomial(sampler.shots, probs)
    return {outcome: int(c) for outcome, c in enumerate(counts) if c}


def _binomial_p0(p0: float, sampler: ShotSampler) -> float:
    p0 = min(max(p0, 0.0), 1.0)
    return sampler.rng().binomial(sampler.shots, p0) / sampler.shots


# ---------------------------------------------------------------------------
# the maximally entangled register and the commutator test circuits
# ---------------------------------------------------------------------------

def build_phi_circuit(n: int) -> Circuit:
    """H + CNOT ladder preparing |phi> = 2^{-n/2} sum_i |i>|i> on 2n qubits."""
    circ = Circuit(2 * n)
    for i in range(n):
        circ.h(i)
    for i in range(n):
        circ.cnot(i, i + n)
    return circ


def prepare_phi(n: int) -> StateVector:
    if n < 1:
        raise BadDimensionError("need at least one qubit per register")
    return run(build_phi_circuit(n))


@lru_cache(maxsize=32)
def _b_test_prefix(n: int) -> np.ndarray:
    """|phi> on 2n qubits with one ancilla (last) already in |+>."""
    state = StateVector(2 * n + 1)
    for i in range(n):
        state.apply(Gate("h", (i,)))
    for i in range(n):
        state.apply(Gate("cnot", (i, i + n)))
    state.apply(Gate("h", (2 * n,)))
    state.data.setflags(write=False)
    return state.data


@lru_cache(maxsize=32)
def _x_test_prefix(n: int) -> np.ndarray:
    """|phi> on 2n qubits with two ancillas (last two) in |+>|+>."""
    state = StateVector(2 * n + 2)
    for i in range(n):
        state.apply(Gate("h", (i,)))
    for i in range(n):
        state.apply(Gate("cnot", (i, i + n)))
    state.apply(Gate("h", (2 * n,)))
    state.apply(Gate("h", (2 * n + 1,)))
    state.data.setflags(write=False)
    return state.data


def _apply_controlled_pauli(data, n_total, string: PauliString, control: int, offset: int):
    if string.is_identity:
        return
    sub = string.restricted(string.support)
    targets = tuple(q + offset for q in string.support)
    kernels.apply_matrix(data, n_total, kernels.controlled_block(sub.dense()), (control, *targets))


def _apply_controlled_matrix(data, n_total, matrix, control: int, targets):
    kernels.apply_matrix(data, n_total, kernels.controlled_block(matrix), (control, *targets))


def _ancilla_p0(data, n_total: int, ancilla: int) -> float:
    probs = np.abs(data) ** 2
    step = 1 << (n_total - 1 - ancilla)
    mask = (np.arange(probs.size) & step) == 0
    return float(probs[mask].sum())


def rotated_generator_matrix(u_circuit: Circuit, generator: PauliString) -> np.ndarray:
    """U B U^dagger as a dense matrix on the system register."""
    m = u_circuit.to_matrix()
    return m @ generator.dense() @ m.conj().T


def reversed_generator_matrix(u_circuit: Circuit, generator: PauliString) -> np.ndarray:
    """V^dagger B V with V = U^T, the register-1 operator of the X test."""
    m = u_circuit.to_matrix()
    return m.conj() @ generator.dense() @ m.T


def hadamard_test_b(u_circuit: Circuit, generator: PauliString, sigma_j: PauliString,
                    sigma_k: PauliString, shots: ShotSampler | None = None,
                    rotated: np.ndarray | None = None) -> float:
    """<phi| sigma_j (x) i[U B U^dag, sigma_k] |phi> from the single-ancilla test.

    The ancilla-0 probability obeys value = 2 - 4 p(0); in shot mode the
    probability is replaced by the sampled frequency.
    """
    n = generator.n_qubits
    data = _b_test_prefix(n).copy()
    anc = 2 * n
    o_mat = rotated_generator_matrix(u_circuit, generator) if rotated is None else rotated
    _apply_controlled_pauli(data, 2 * n + 1, sigma_j, anc, offset=0)
    _apply_controlled_pauli(data, 2 * n + 1, sigma_k, anc, offset=n)
    _apply_controlled_matrix(data, 2 * n + 1, o_mat, anc, tuple(range(n, 2 * n)))
    kernels.apply_matrix(data, 2 * n + 1, ROT_X_ANC, (anc,))
    p0 = _ancilla_p0(data, 2 * n + 1, anc)
    if shots is not None:
        p0 = _binomial_p0(p0, shots)
    return 2.0 - 4.0 * p0


def hadamard_test_x(u_ell: Circuit, generator_ell: PauliString, u_l: Circuit,
                    generator_l: PauliString, sigma_j: PauliString, sigma_k: PauliString,
                    shots: ShotSampler | None = None,
                    rotated_pair: tuple[np.ndarray, np.ndarray] | None = None,
                    symmetric_shortcut: bool = False) -> float:
    """<phi| i[V^dag B V, sigma_j] (x) i[U B' U^dag, sigma_k] |phi|.

    Two ancillas each drive one commutator; a CNOT folds the parity onto the
    first ancilla before measurement so that value = -4 + 8 p(0).
    """
    if symmetric_shortcut:
        offenders = [g for g in (generator_ell, generator_l) if g.y_count % 2]
        offenders += [g.pauli for g in u_ell.gates if g.kind == "rot" and g.pauli.y_count % 2]
        if offenders:
            raise AsymmetricGeneratorError(
                f"odd Y-parity generator {offenders[0].label} breaks the symmetric-ansatz shortcut")
    n = generator_ell.n_qubits
    if rotated_pair is None:
        w_mat = reversed_generator_matrix(u_ell, generator_ell)
        o_mat = rotated_generator_matrix(u_l, generator_l)
    else:
        w_mat, o_mat = rotated_pair
    n_total = 2 * n + 2
    anc_a, anc_b = 2 * n, 2 * n + 1
    data = _x_test_prefix(n).copy()
    _apply_controlled_pauli(data, n_total, sigma_j, anc_a, offset=0)
    _apply_controlled_matrix(data, n_total, w_mat, anc_a, tuple(range(n)))
    _apply_controlled_pauli(data, n_total, sigma_k, anc_b, offset=n)
    _apply_controlled_matrix(data, n_total, o_mat, anc_b, tuple(range(n, 2 * n)))
    kernels.apply_matrix(data, n_total, ROT_X_ANC, (anc_a,))
    kernels.apply_matrix(data, n_total, ROT_X_ANC, (anc_b,))
    kernels.apply_matrix(data, n_total, _CNOT, (anc_b, anc_a))
    p0 = _ancilla_p0(data, n_total, anc_a)
    if shots is not None:
        p0 = _binomial_p0(p0, shots)
    return -4.0 + 8.0 * p0


# gate-level versions of the same circuits, for validation and dumps ---------

def build_b_test_circuit(u_circuit: Circuit, generator: PauliString, sigma_j: PauliString,
                         sigma_k: PauliString) -> Circuit:
    n = generator.n_qubits
    circ = Circuit(2 * n + 1)
    anc = 2 * n
    for g in build_phi_circuit(n).gates:
        circ.add(g)
    circ.h(anc)
    circ.controlled_pauli(sigma_j, anc, offset=0)
    circ.controlled_pauli(sigma_k, anc, offset=n)
    circ.extend(u_circuit.dagger().remapped(n, 2 * n + 1).gates)
    circ.controlled_pauli(generator, anc, offset=n)
    circ.extend(u_circuit.remapped(n, 2 * n + 1).gates)
    circ.unitary(ROT_X_ANC, (anc,))
    return circ


def build_x_test_circuit(u_ell: Circuit, generator_ell: PauliString, u_l: Circuit,
                         generator_l: PauliString, sigma_j: PauliString,
                         sigma_k: PauliString) -> Circuit:
    n = generator_ell.n_qubits
    n_total = 2 * n + 2
    anc_a, anc_b = 2 * n, 2 * n + 1
    circ = Circuit(n_total)
    for g in build_phi_circuit(n).gates:
        circ.add(g)
    circ.h(anc_a)
    circ.h(anc_b)
    v_ell = u_ell.transpose()
    circ.controlled_pauli(sigma_j, anc_a, offset=0)
    circ.extend(v_ell.remapped(0, n_total).gates)
    circ.controlled_pauli(generator_ell, anc_a, offset=0)
    circ.extend(v_ell.dagger().remapped(0, n_total).gates)
    circ.controlled_pauli(sigma_k, anc_b, offset=n)
    circ.extend(u_l.dagger().remapped(n, n_total).gates)
    circ.controlled_pauli(generator_l, anc_b, offset=n)
    circ.extend(u_l.remapped(n, n_total).gates)
    circ.unitary(ROT_X_ANC, (anc_a,))
    circ.unitary(ROT_X_ANC, (anc_b,))
    circ.cnot(anc_b, anc_a)
    return circ

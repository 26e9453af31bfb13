"""The layered variational circuit and its parameter table.

A spec is an ordered list of one- or two-qubit Pauli generators B^l applied as
exp(-i a_l B^l) after an optional base rotation U0.  Generators may be tied
into groups that share one free parameter (used for symmetry-restricted
circuits); tied generators must commute pairwise so the shared-angle product
factorises into individual gates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadDimensionError, SizeMismatchError
from .pauli import PauliString, PauliSum, decompose, strings_commute
from .simulator import Circuit, Gate


@dataclass(frozen=True, eq=False)
class AnsatzSpec:
    n_qubits: int
    generators: tuple[PauliString, ...]
    param_index: tuple[int, ...]
    u0: Circuit | None = None
    u0_dense: np.ndarray | None = None  # non-circuit base rotation
    symmetry: str | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.u0 is not None and self.u0_dense is not None:
            raise BadDimensionError("give the base rotation either as a circuit or as a matrix, not both")
        if len(self.param_index) != len(self.generators):
            raise SizeMismatchError("one parameter index per generator layer required")
        n_free = self.n_free
        if sorted(set(self.param_index)) != list(range(n_free)):
            raise BadDimensionError("parameter indices must cover 0..n_free-1")
        for g in self.generators:
            if g.n_qubits != self.n_qubits:
                raise SizeMismatchError("generator register size mismatch")
            if not 1 <= g.weight <= 2:
                raise BadDimensionError(f"generator {g.label} must act on one or two qubits")
        for group in self.groups():
            for i in group:
                for j in group:
                    if not strings_commute(self.generators[i], self.generators[j]):
                        raise BadDimensionError(
                            f"tied generators {self.generators[i].label}, {self.generators[j].label} do not commute")

    @property
    def n_layers(self) -> int:
        return len(self.generators)

    @property
    def n_free(self) -> int:
        return max(self.param_index) + 1 if self.param_index else 0

    def groups(self) -> list[list[int]]:
        """Layer indices per free parameter."""
        out: list[list[int]] = [[] for _ in range(self.n_free)]
        for layer, p in enumerate(self.param_index):
            out[p].append(layer)
        return out

    def layer_angles(self, params_row) -> np.ndarray:
        params_row = np.asarray(params_row, dtype=float)
        if params_row.shape != (self.n_free,):
            raise SizeMismatchError(f"expected {self.n_free} free parameters, got {params_row.shape}")
        return params_row[np.array(self.param_index, dtype=int)] if self.n_layers else np.zeros(0)

    def u0_circuit(self) -> Circuit:
        if self.u0 is not None:
            return self.u0
        circ = Circuit(self.n_qubits)
        if self.u0_dense is not None:
            circ.unitary(self.u0_dense, tuple(range(self.n_qubits)))
        return circ

    def u0_matrix(self) -> np.ndarray:
        if self.u0_dense is not None:
            return np.asarray(self.u0_dense, dtype=complex)
        if self.u0 is not None:
            return self.u0.to_matrix()
        return np.eye(2 ** self.n_qubits, dtype=complex)

    @property
    def has_u0(self) -> bool:
        return self.u0 is not None or self.u0_dense is not None

    def with_u0_dense(self, matrix: np.ndarray) -> "AnsatzSpec":
        return AnsatzSpec(self.n_qubits, self.generators, self.param_index,
                          u0=None, u0_dense=matrix, symmetry=self.symmetry, name=self.name)


@dataclass
class ParamTable:
    """T+1 rows of free parameters; row 0 is pinned to zero."""

    alpha: np.ndarray
    delta_mu: float
    lam: float

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        steps = self.alpha.shape[0] - 1
        if np.abs(self.alpha[0]).max(initial=0.0) > 0.0:
            raise BadDimensionError("row 0 of the parameter table must be zero")
        if abs(self.delta_mu * steps - self.lam) > 1e-12:
            raise BadDimensionError("delta_mu * T must equal lambda")

    @classmethod
    def zeros(cls, n_steps: int, n_free: int, lam: float) -> "ParamTable":
        return cls(np.zeros((n_steps + 1, n_free)), lam / n_steps, lam)

    @property
    def n_steps(self) -> int:
        return self.alpha.shape[0] - 1

    def row(self, t: int) -> np.ndarray:
        return self.alpha[t]


def partial_unitary(spec: AnsatzSpec, params_row, ell: int) -> Circuit:
    """Circuit for U0 followed by layers below ``ell`` (1-based).

    Layer products are ordered left to right, so layer ell-1 acts on the state
    first and U0 last.
    """
    if not 1 <= ell <= spec.n_layers + 1:
        raise BadDimensionError(f"layer index {ell} out of range 1..{spec.n_layers + 1}")
    angles = spec.layer_angles(params_row)
    circ = Circuit(spec.n_qubits)
    for layer in reversed(range(ell - 1)):
        circ.rot(spec.generators[layer], float(angles[layer]))
    circ.extend(spec.u0_circuit().gates)
    return circ


def full_unitary(spec: AnsatzSpec, params_row) -> Circuit:
    return partial_unitary(spec, params_row, spec.n_layers + 1)


def rotated_generator(spec: AnsatzSpec, params_row, ell: int) -> PauliSum:
    """U^ell B^ell U^ell-dagger, conjugated densely and re-expanded."""
    if not 1 <= ell <= spec.n_layers:
        raise BadDimensionError(f"layer index {ell} out of range 1..{spec.n_layers}")
    u = partial_unitary(spec, params_row, ell).to_matrix()
    b = spec.generators[ell - 1].dense()
    return decompose(u @ b @ u.conj().T)


# ---------------------------------------------------------------------------
# built-in circuits
# ---------------------------------------------------------------------------

def _ps(n, **letters):
    return PauliString.from_letters(n, {q: ch for q, ch in ((int(k[1:]), v) for k, v in letters.items())})


def _lowenergy36() -> AnsatzSpec:
    """Three-qubit circuit, swap-symmetric in qubits 1 and 2, 36 free parameters.

    Per repetition (of three): a single-qubit block with x, y, z rotations on
    every qubit, then a two-qubit block with XX, YY, ZZ couplings on pairs
    (1,3), (2,3), (1,2).  Qubit-1/qubit-2 mirror images share one parameter.
    """
    n = 3
    generators: list[PauliString] = []
    ties: list[int] = []
    next_free = 0

    def add_group(strings):
        nonlocal next_free
        for s in strings:
            generators.append(s)
            ties.append(next_free)
        next_free += 1

    for _ in range(3):
        for axis in "XYZ":
            add_group([_ps(n, q0=axis), _ps(n, q1=axis)])  # mirrored pair
            add_group([_ps(n, q2=axis)])
        for axis in "XYZ":
            add_group([PauliString.from_letters(n, {0: axis, 2: axis}),
                       PauliString.from_letters(n, {1: axis, 2: axis})])
            add_group([PauliString.from_letters(n, {0: axis, 1: axis})])
    return AnsatzSpec(n, tuple(generators), tuple(ties), symmetry="swap12", name="lowenergy36")


def _spinchain140() -> AnsatzSpec:
    """Four-qubit open-chain circuit, 140 parameters.

    Ten repetitions of: x rotations on all sites, y rotations on all sites,
    nearest-neighbour YY couplings, nearest-neighbour ZZ couplings.
    """
    n = 4
    generators: list[PauliString] = []
    for _ in range(10):
        for axis in "XY":
            generators.extend(PauliString.from_letters(n, {q: axis}) for q in range(n))
        for axis in "YZ":
            generators.extend(PauliString.from_letters(n, {q: axis, q + 1: axis}) for q in range(n - 1))
    return AnsatzSpec(n, tuple(generators), tuple(range(len(generators))), name="spinchain140")


def _universal2q15() -> AnsatzSpec:
    """Two-qubit universal circuit with 15 parameters.

    x-y-x Euler triples on each qubit before and after an XX, YY, ZZ
    entangling block; this covers SU(4) up to a global phase.
    """
    n = 2
    single = [_ps(n, q0="X"), _ps(n, q0="Y"), _ps(n, q0="X"),
              _ps(n, q1="X"), _ps(n, q1="Y"), _ps(n, q1="X")]
    entangle = [PauliString.from_label("XX"), PauliString.from_label("YY"), PauliString.from_label("ZZ")]
    generators = tuple(single + entangle + single)
    return AnsatzSpec(n, generators, tuple(range(15)), name="universal2q15")


_BUILTINS = {
    "lowenergy36": (_lowenergy36, 3),
    "spinchain140": (_spinchain140, 4),
    "universal2q15": (_universal2q15, 2),
}


def builtin_ansatz(name: str, n_qubits: int | None = None) -> AnsatzSpec:
    if name not in _BUILTINS:
        raise BadDimensionError(f"unknown ansatz {name!r}; choose from {sorted(_BUILTINS)}")
    builder, expected_n = _BUILTINS[name]
    if n_qubits is not None and n_qubits != expected_n:
        raise SizeMismatchError(f"{name} is a {expected_n}-qubit circuit")
    return builder()


# ---------------------------------------------------------------------------
# JSON round trip: {n_qubits, u0: gate list, generators: ["XI", ...], ties}
# ---------------------------------------------------------------------------

def _gate_to_json(gate: Gate) -> dict:
    out: dict = {"kind": gate.kind, "qubits": list(gate.qubits)}
    if gate.param is not None:
        out["param"] = gate.param
    if gate.pauli is not None:
        out["pauli"] = gate.pauli.label
    if gate.matrix is not None:
        out["matrix_re"] = gate.matrix.real.tolist()
        out["matrix_im"] = gate.matrix.imag.tolist()
    return out


def _gate_from_json(obj: dict) -> Gate:
    matrix = None
    if "matrix_re" in obj:
        matrix = np.array(obj["matrix_re"]) + 1j * np.array(obj["matrix_im"])
    pauli = PauliString.from_label(obj["pauli"]) if "pauli" in obj else None
    return Gate(obj["kind"], tuple(obj["qubits"]), param=obj.get("param"), matrix=matrix, pauli=pauli)


def ansatz_to_json(spec: AnsatzSpec) -> dict:
    if spec.u0_dense is not None:
        u0 = {"dense_re": np.asarray(spec.u0_dense).real.tolist(),
              "dense_im": np.asarray(spec.u0_dense).imag.tolist()}
    elif spec.u0 is not None:
        u0 = [_gate_to_json(g) for g in spec.u0.gates]
    else:
        u0 = None
    return {
        "n_qubits": spec.n_qubits,
        "u0": u0,
        "generators": [g.label for g in spec.generators],
        "ties": spec.groups(),
        "symmetry": spec.symmetry,
        "name": spec.name,
    }


def ansatz_from_json(obj: dict) -> AnsatzSpec:
    n = obj["n_qubits"]
    generators = tuple(PauliString.from_label(label) for label in obj["generators"])
    ties = obj.get("ties")
    param_index = [0] * len(generators)
    if ties:
        for free, group in enumerate(ties):
            for layer in group:
                param_index[layer] = free
    else:
        param_index = list(range(len(generators)))
    u0 = obj.get("u0")
    u0_circ, u0_dense = None, None
    if isinstance(u0, dict):
        u0_dense = np.array(u0["dense_re"]) + 1j * np.array(u0["dense_im"])
    elif isinstance(u0, list):
        u0_circ = Circuit(n, [_gate_from_json(g) for g in u0])
    return AnsatzSpec(n, generators, tuple(param_index), u0=u0_circ, u0_dense=u0_dense,
                      symmetry=obj.get("symmetry"), name=obj.get("name", "custom"))


def ansatz_to_text(spec: AnsatzSpec) -> str:
    return json.dumps(ansatz_to_json(spec), indent=2, sort_keys=True)

"""Benchmark Hamiltonian pairs H_mu = H0 + mu*V."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadDimensionError, ConfigError
from .pauli import PauliString, PauliSum

_RNG_NAME = "PCG64"


@dataclass(eq=False)
class HamiltonianPair:
    n_qubits: int
    h0: PauliSum
    v: PauliSum
    lam: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    seed: int | None = None
    u0_dense: np.ndarray | None = None  # base rotation diagonalizing H0, when H0 is not diagonal

    def h_mu(self, mu: float) -> PauliSum:
        return self.h0 + mu * self.v

    def h_lambda(self) -> PauliSum:
        return self.h_mu(self.lam)

    def dense(self, mu: float | None = None) -> np.ndarray:
        return self.h_mu(self.lam if mu is None else mu).dense()

    def metadata(self) -> dict:
        meta = {"name": self.name, "n_qubits": self.n_qubits, "lambda": self.lam,
                "params": dict(self.params)}
        if self.seed is not None:
            meta["seed"] = self.seed
            meta["rng"] = _RNG_NAME
        return meta


def _z_on(n, q, coeff=1.0):
    return (PauliString.from_letters(n, {q: "Z"}), coeff)


def model_low_energy(h: float, lam: float) -> HamiltonianPair:
    """Three-qubit pair: a strong z field on qubit 3 plus, under V, Heisenberg
    couplings of qubits 1 and 2 to qubit 3 and transverse fields on 1 and 2."""
    n = 3
    h0 = PauliSum.from_terms([(PauliString.from_letters(n, {2: "Z"}), h)], n)
    terms = []
    for axis in "XYZ":
        terms.append((PauliString.from_letters(n, {0: axis, 2: axis}), 1.0))
        terms.append((PauliString.from_letters(n, {1: axis, 2: axis}), 1.0))
    terms.append((PauliString.from_letters(n, {0: "X"}), -1.0))
    terms.append((PauliString.from_letters(n, {1: "X"}), -1.0))
    v = PauliSum.from_terms(terms, n)
    return HamiltonianPair(n, h0, v, lam, name="low_energy", params={"h": h})


def model_spin_chain(n: int, h: float, lam: float) -> HamiltonianPair:
    """Open XX+YY chain with a transverse field; V is a uniform x field.

    H0 is not diagonal in the computational basis; its diagonalizing rotation
    (sector-resolved, deterministic) is attached as a dense matrix.
    """
    if n < 2:
        raise BadDimensionError("chain needs at least two sites")
    terms = []
    for i in range(n - 1):
        terms.append((PauliString.from_letters(n, {i: "X", i + 1: "X"}), 1.0))
        terms.append((PauliString.from_letters(n, {i: "Y", i + 1: "Y"}), 1.0))
        terms.append(_z_on(n, i, h))
    h0 = PauliSum.from_terms(terms, n)
    v = PauliSum.from_terms([(PauliString.from_letters(n, {i: "X"}), 1.0) for i in range(n)], n)
    pair = HamiltonianPair(n, h0, v, lam, name="spin_chain", params={"n": n, "h": h})
    pair.u0_dense = magnetization_eigenbasis(h0.dense(), n)
    return pair


_RANDOM_2Q_STRINGS = ("XI", "IX", "YI", "IY", "XX", "XY", "YX", "YY")


def model_random_2q(seed: int, lam: float) -> HamiltonianPair:
    """Two z fields plus eight random off-diagonal couplings, v_k ~ U[0, 1)."""
    n = 2
    h0 = PauliSum.from_terms([_z_on(n, 0), _z_on(n, 1)], n)
    rng = np.random.Generator(np.random.PCG64(seed))
    coeffs = rng.random(len(_RANDOM_2Q_STRINGS))
    v = PauliSum.from_terms(
        [(PauliString.from_label(s), float(c)) for s, c in zip(_RANDOM_2Q_STRINGS, coeffs)], n)
    return HamiltonianPair(n, h0, v, lam, name="random_2q",
                           params={"v": {s: float(c) for s, c in zip(_RANDOM_2Q_STRINGS, coeffs)}},
                           seed=seed)


def model_custom(h0_text: str, v_text: str, lam: float, n_qubits: int | None = None) -> HamiltonianPair:
    h0 = PauliSum.from_text(h0_text, n_qubits)
    v = PauliSum.from_text(v_text, h0.n_qubits)
    if not (h0.is_hermitian and v.is_hermitian):
        raise ConfigError("custom Hamiltonian coefficients must be real")
    diagonal = all(set(s.label) <= {"I", "Z"} for s, _ in h0.items())
    if not diagonal:
        raise ConfigError("custom H0 must be diagonal in the computational basis "
                          "(supply a model with a known base rotation otherwise)")
    return HamiltonianPair(h0.n_qubits, h0, v, lam, name="custom",
                           params={"h0": h0_text, "v": v_text})


def magnetization_eigenbasis(h0_dense: np.ndarray, n: int) -> np.ndarray:
    """Eigenvector matrix of H0, diagonalized sector by sector of total Sz.

    Works for any H0 commuting with sum_i sigma^z_i.  Columns carry a definite
    magnetization; they are ordered by eigenvalue, ties broken by sector, so
    the construction is deterministic.
    """
    dim = 2 ** n
    idx = np.arange(dim)
    n_up = n - np.bitwise_count(idx)  # of +1 eigenvalues of sigma^z... popcount counts 1-bits = down spins
    columns = np.zeros((dim, dim), dtype=complex)
    values = np.zeros(dim)
    sectors = np.zeros(dim, dtype=int)
    filled = 0
    for m in sorted(set(n_up.tolist())):
        sel = np.nonzero(n_up == m)[0]
        block = h0_dense[np.ix_(sel, sel)]
        if np.abs(h0_dense[np.ix_(sel, np.setdiff1d(idx, sel))]).max(initial=0.0) > 1e-10:
            raise BadDimensionError("H0 does not commute with the total magnetization")
        vals, vecs = np.linalg.eigh(block)
        for r in range(len(sel)):
            col = np.zeros(dim, dtype=complex)
            col[sel] = vecs[:, r]
            columns[:, filled] = col
            values[filled] = vals[r]
            sectors[filled] = m
            filled += 1
    order = np.lexsort((sectors, np.round(values, 12)))
    basis = columns[:, order]
    # fix phases: first sizeable amplitude real positive
    for c in range(dim):
        col = basis[:, c]
        k = np.argmax(np.abs(col) > 1e-9)
        phase = col[k] / abs(col[k])
        basis[:, c] = col / phase
    return basis


def magnetization_sectors(n: int) -> np.ndarray:
    """Total-Sz quantum number of each computational basis state."""
    idx = np.arange(2 ** n)
    return n - 2 * np.bitwise_count(idx)


_MODELS = {
    "low_energy": lambda params, lam: model_low_energy(params["h"], lam),
    "spin_chain": lambda params, lam: model_spin_chain(params["n"], params["h"], lam),
    "random_2q": lambda params, lam: model_random_2q(params["seed"], lam),
    "custom": lambda params, lam: model_custom(params["h0"], params["v"], lam, params.get("n_qubits")),
}


def build_model(name: str, params: dict, lam: float) -> HamiltonianPair:
    if name not in _MODELS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(_MODELS)}")
    try:
        return _MODELS[name](params, lam)
    except KeyError as missing:
        raise ConfigError(f"model {name!r} is missing parameter {missing}") from None

"""Per-step linear system X beta = b.

Coefficients come from one of three interchangeable strategies:

* ``analytic``      -- traces evaluated purely in Pauli coefficient space
                       (commutator tables + orthogonality, no Hilbert-space
                       matrices),
* ``circuit-exact`` -- the doubled-register test circuits, read out from the
                       exact ancilla probability,
* ``circuit-shots`` -- same circuits with a finite-shot binomial readout,
* ``cheap-n2``      -- the reduced 16-circuit scheme (see :mod:`vagt.cheap_n2`).

All strategies agree in their noiseless limits; the acceptance suite pins
this to 1e-8.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzSpec
from .errors import ConfigError, NumericalBreakdownError
from .models import HamiltonianPair
from .pauli import I_POWERS, PauliString, PauliSum, decompose, mul_all_codes, y_counts
from .simulator import ShotSampler, hadamard_test_b, hadamard_test_x

# Relative eigenvalue cutoff of the step solver's pseudo-inverse.  Near-flat
# directions of the Gram matrix (generators almost commuting with H_mu) carry
# almost no cost information but can draw huge, frame-scrambling updates, so
# they are dropped aggressively.
SOLVE_CUTOFF = 1e-6


@dataclass(frozen=True)
class EstimatorStrategy:
    """Which estimator to run, plus shot configuration where applicable."""

    mode: str
    shots: int | None = None
    seed: int | None = None
    variant: str = "indirect"  # cheap-n2 readout: indirect (ancilla) or direct

    _MODES = ("analytic", "circuit-exact", "circuit-shots", "cheap-n2")

    def __post_init__(self):
        if self.mode not in self._MODES:
            raise ConfigError(f"unknown strategy {self.mode!r}; choose from {self._MODES}")
        if self.mode == "circuit-shots" and (self.shots is None or self.seed is None):
            raise ConfigError("circuit-shots needs shot count and seed")

    @classmethod
    def parse(cls, text: str) -> "EstimatorStrategy":
        parts = text.split(":")
        mode = parts[0]
        if len(parts) == 1:
            return cls(mode)
        if len(parts) == 3:
            return cls(mode, shots=int(parts[1]), seed=int(parts[2]))
        raise ConfigError(f"cannot parse strategy {text!r}; use e.g. 'circuit-shots:100:7'")

    def describe(self) -> str:
        if self.shots is None:
            return self.mode
        return f"{self.mode}:{self.shots}:{self.seed}"

    def sampler(self) -> ShotSampler | None:
        if self.shots is None:
            return None
        return ShotSampler(seed=self.seed, shots=self.shots)


@dataclass
class StepSystem:
    """One step's linear system and its solution over the free parameters."""

    t: int
    mu: float
    X: np.ndarray
    b: np.ndarray
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: float = 0.0
    circuit_count: tuple[int, int] = (0, 0)

    def to_json(self) -> dict:
        return {"t": self.t, "mu": self.mu, "X": self.X.tolist(), "b": self.b.tolist(),
                "beta": self.beta.tolist(), "residual": self.residual,
                "circuit_count": list(self.circuit_count)}


def solve_step(X, b, cutoff: float = SOLVE_CUTOFF, noise_scale: float = 0.0):
    """Minimum-norm least-squares solution of the symmetric system X beta = b.

    Uses a symmetric eigendecomposition pseudo-inverse with a relative
    eigenvalue cutoff.  X is a Gram matrix and should be PSD; negative
    eigenvalues (possible under shot noise) are truncated out of the inverse,
    and ones far below the expected noise floor raise a warning.
    """
    X = np.asarray(X, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.isfinite(X).all() and np.isfinite(b).all()):
        raise NumericalBreakdownError("NaN or Inf in the step system")
    if X.size == 0 or not np.any(X) and not np.any(b):
        return np.zeros_like(b), 0.0
    values, vectors = np.linalg.eigh((X + X.T) / 2.0)
    scale = float(np.abs(values).max(initial=0.0))
    if noise_scale > 0.0 and values.min(initial=0.0) < -10.0 * noise_scale:
        warnings.warn(f"step system lost positive semidefiniteness well beyond the "
                      f"shot-noise floor (min eigenvalue {values.min():.3g})")
    keep = values > cutoff * scale
    inv = np.where(keep, 1.0, 0.0) / np.where(keep, values, 1.0)
    beta = vectors @ (inv * (vectors.T @ b))
    residual = float(np.linalg.norm(X @ beta - b))
    return beta, residual


def circuit_budget(n_qubits: int, terms_v: int, terms_h: int, n_layers: int) -> tuple[int, int]:
    """Closed-form circuit counts per step.

    ``n_b`` runs one circuit per (V term, H term, layer); ``n_X`` exploits the
    X symmetry so only L(L+1)/2 layer pairs are evaluated.
    """
    n_b = terms_v * terms_h * n_layers
    n_x = terms_h ** 2 * (n_layers * (n_layers + 1) // 2)
    return n_b, n_x


def _fold_matrix(spec: AnsatzSpec) -> np.ndarray:
    """(n_free, n_layers) 0/1 matrix collapsing tied layers."""
    fold = np.zeros((spec.n_free, spec.n_layers))
    for m, group in enumerate(spec.groups()):
        fold[m, group] = 1.0
    return fold


# ---------------------------------------------------------------------------
# analytic strategy
# ---------------------------------------------------------------------------

def _commutator_map(n: int, op: PauliSum) -> np.ndarray:
    """Matrix K with (K o)_h = coefficients of i[O, op] for O = sum o_m sigma_m."""
    size = 4 ** n
    K = np.zeros((size, size))
    m_idx = np.arange(size)
    for string, coeff in op.items():
        prod, ipow, anti = mul_all_codes(n, string.code)
        # i [sigma_m, sigma_l] = 2 i^{ipow+1} sigma_prod on anticommuting pairs
        w = -2.0 * I_POWERS[ipow].imag
        np.add.at(K, (prod[anti], m_idx[anti]), coeff.real * w[anti])
    return K


class AnalyticEngine:
    """Trace evaluation in Pauli coefficient space.

    Everything is conjugated once by U0-dagger so the circuit frame starts
    from the identity; rotated generators are then tracked with per-layer
    plane rotations of the coefficient table.
    """

    def __init__(self, hampair: HamiltonianPair, spec: AnsatzSpec):
        self.spec = spec
        self.n = spec.n_qubits
        if spec.has_u0:
            u0 = spec.u0_matrix()
            h0 = decompose(u0.conj().T @ hampair.h0.dense() @ u0)
            v = decompose(u0.conj().T @ hampair.v.dense() @ u0)
        else:
            h0, v = hampair.h0, hampair.v
        self.v_vec = v.to_coeff_vector().real
        self.k_h0 = _commutator_map(self.n, h0)
        self.k_v = _commutator_map(self.n, v)
        self.fold = _fold_matrix(spec)
        # conjugation tables per layer: sigma_m -> cos sigma_m + sin * w sigma_prod
        self._tables = []
        for g in spec.generators:
            prod, ipow, anti = mul_all_codes(self.n, g.code)
            w = -I_POWERS[ipow].imag  # real part of i^{ipow+1}
            self._tables.append((prod[anti], np.nonzero(anti)[0], w[anti]))

    def rotated_generator_vectors(self, params_row) -> np.ndarray:
        """(4^n, n_layers) coefficient columns of every U^l B^l U^l-dagger."""
        size = 4 ** self.n
        angles = self.spec.layer_angles(params_row)
        conj = np.eye(size)
        out = np.empty((size, self.spec.n_layers))
        for layer, g in enumerate(self.spec.generators):
            out[:, layer] = conj[:, g.code]
            prod, anti_idx, w = self._tables[layer]
            c, s = np.cos(2 * angles[layer]), np.sin(2 * angles[layer])
            old = conj[:, anti_idx]
            conj[:, anti_idx] = c * old + s * (w * conj[:, prod])
        return out

    def build(self, params_row, mu: float, t: int = 0) -> StepSystem:
        o_mat = self.rotated_generator_vectors(params_row)
        q_mat = (self.k_h0 + mu * self.k_v) @ o_mat
        dim = 2 ** self.n
        x_phys = dim * (q_mat.T @ q_mat)
        b_phys = -dim * (q_mat.T @ self.v_vec)
        X = self.fold @ x_phys @ self.fold.T
        b = self.fold @ b_phys
        return StepSystem(t=t, mu=mu, X=X, b=b)


# ---------------------------------------------------------------------------
# circuit strategies
# ---------------------------------------------------------------------------

class CircuitEngine:
    """Evaluates every trace term with the doubled-register test circuits."""

    def __init__(self, hampair: HamiltonianPair, spec: AnsatzSpec,
                 sampler: ShotSampler | None = None, threads: int = 1):
        self.hampair = hampair
        self.spec = spec
        self.n = spec.n_qubits
        self.sampler = sampler
        self.threads = max(1, threads)
        self.fold = _fold_matrix(spec)
        self._u0 = spec.u0_matrix()
        self._gen_dense = [g.dense() for g in spec.generators]
        self._gen_ysign = [(-1.0) ** g.y_count for g in spec.generators]

    def _layer_operators(self, params_row):
        """Dense rotated generators O_l and their register-1 twins W_l."""
        angles = self.spec.layer_angles(params_row)
        u = self._u0.copy()
        o_mats, w_mats = [], []
        for layer, g in enumerate(self.spec.generators):
            o_mats.append(u @ self._gen_dense[layer] @ u.conj().T)
            w_mats.append(u.conj() @ self._gen_dense[layer] @ u.T)
            theta = angles[layer]
            rot = np.cos(theta) * np.eye(2 ** self.n) - 1j * np.sin(theta) * self._gen_dense[layer]
            u = u @ rot
        return o_mats, w_mats

    def build(self, params_row, mu: float, t: int = 0) -> StepSystem:
        spec = self.spec
        dim = 2 ** self.n
        o_mats, w_mats = self._layer_operators(params_row)
        v_items = [(s, c.real) for s, c in self.hampair.v.items()]
        h_items = [(s, c.real) for s, c in self.hampair.h_mu(mu).items()]
        jsign = {s.code: (-1.0) ** s.y_count for s, _ in h_items}
        for s, _ in v_items:
            jsign.setdefault(s.code, (-1.0) ** s.y_count)

        count_b = 0
        b_phys = np.zeros(spec.n_layers)

        def b_for_layer(layer):
            acc = 0.0
            for jj, (sj, vj) in enumerate(v_items):
                for kk, (sk, hk) in enumerate(h_items):
                    sampler = self._spawn(t, 0, layer, jj, kk)
                    val = hadamard_test_b(None, spec.generators[layer], sj, sk,
                                          shots=sampler, rotated=o_mats[layer])
                    acc -= vj * hk * dim * jsign[sj.code] * val
            return acc

        for layer, value in self._dispatch(b_for_layer, range(spec.n_layers)):
            b_phys[layer] = value
            count_b += len(v_items) * len(h_items)

        x_phys = np.zeros((spec.n_layers, spec.n_layers))
        pairs = [(l2, l1) for l2 in range(spec.n_layers) for l1 in range(l2 + 1)]
        count_x = 0

        def x_for_pair(pair):
            l2, l1 = pair
            acc = 0.0
            for jj, (sj, hj) in enumerate(h_items):
                for kk, (sk, hk) in enumerate(h_items):
                    sampler = self._spawn(t, 1, l2, l1, jj, kk)
                    val = hadamard_test_x(None, spec.generators[l2], None, spec.generators[l1],
                                          sj, sk, shots=sampler,
                                          rotated_pair=(w_mats[l2], o_mats[l1]))
                    acc += hj * hk * dim * (-jsign[sj.code]) * self._gen_ysign[l2] * val
            return acc

        for (l2, l1), value in self._dispatch(x_for_pair, pairs):
            x_phys[l2, l1] = value
            x_phys[l1, l2] = value
            count_x += len(h_items) ** 2

        X = self.fold @ x_phys @ self.fold.T
        b = self.fold @ b_phys
        return StepSystem(t=t, mu=mu, X=X, b=b, circuit_count=(count_b, count_x))

    def _spawn(self, *key):
        return None if self.sampler is None else self.sampler.spawn(*key)

    def _dispatch(self, fn, keys):
        keys = list(keys)
        if self.threads == 1:
            for key in keys:
                yield key, fn(key)
            return
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            for key, value in zip(keys, pool.map(fn, keys)):
                yield key, value

    def noise_scale(self, mu: float) -> float:
        """Rough standard error of an X entry under shot noise."""
        if self.sampler is None:
            return 0.0
        habs = sum(abs(c.real) for _, c in self.hampair.h_mu(mu).items())
        return 2 ** self.n * habs ** 2 * 4.0 / np.sqrt(self.sampler.shots)


def make_engine(hampair: HamiltonianPair, spec: AnsatzSpec, strategy: EstimatorStrategy,
                threads: int = 1):
    if strategy.mode == "analytic":
        return AnalyticEngine(hampair, spec)
    if strategy.mode in ("circuit-exact", "circuit-shots"):
        return CircuitEngine(hampair, spec, sampler=strategy.sampler(), threads=threads)
    from .cheap_n2 import CheapN2Engine
    return CheapN2Engine(hampair, spec, sampler=strategy.sampler(), variant=strategy.variant)


def build_step(hampair, spec, params_row, t, strategy, mu=None, threads: int = 1) -> StepSystem:
    """Assemble and solve the full step system at mu (default t * lambda / T)."""
    engine = make_engine(hampair, spec, strategy, threads)
    if mu is None:
        raise ConfigError("build_step needs an explicit mu")
    system = engine.build(params_row, mu, t)
    noise = engine.noise_scale(mu) if isinstance(engine, CircuitEngine) else 0.0
    system.beta, system.residual = solve_step(system.X, system.b, noise_scale=noise)
    return system


def build_b(hampair, spec, params_row, t, strategy, mu, threads: int = 1) -> np.ndarray:
    return make_engine(hampair, spec, strategy, threads).build(params_row, mu, t).b


def build_X(hampair, spec, params_row, t, strategy, mu, threads: int = 1) -> np.ndarray:
    return make_engine(hampair, spec, strategy, threads).build(params_row, mu, t).X

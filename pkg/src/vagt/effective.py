"""Low-energy effective Hamiltonians and the physics diagnostics built on them.

The projected block P H-tilde P of a rotated Hamiltonian is re-expanded over
Pauli strings of the effective register.  Extraction runs either directly on
the dense block or through the doubled-register expectation circuit; the two
agree exactly in infinite-shot mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimensionError, BadEffectiveOperatorError, SizeMismatchError
from .models import HamiltonianPair
from .oracle import eig, evolver
from .pauli import PauliString, PauliSum, decompose
from .simulator import (Circuit, ShotSampler, StateVector, pauli_expectation, run as run_circuit)


@dataclass(frozen=True)
class LowEnergyProjector:
    """P = identity on the effective qubits, |pin> on the rest."""

    n_qubits: int
    effective: tuple[int, ...]
    pinned: int  # computational basis index over the complement qubits

    def __post_init__(self):
        if len(set(self.effective)) != len(self.effective):
            raise BadDimensionError("duplicate effective qubits")
        if any(not 0 <= q < self.n_qubits for q in self.effective):
            raise BadDimensionError("effective qubit outside the register")
        if not 0 <= self.pinned < 2 ** self.n_complement:
            raise BadDimensionError("pinned state index out of range")

    @property
    def n_effective(self) -> int:
        return len(self.effective)

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n_qubits) if q not in self.effective)

    @property
    def n_complement(self) -> int:
        return self.n_qubits - self.n_effective

    def block_indices(self) -> np.ndarray:
        """Global basis indices spanning the P subspace, ordered by the
        effective register's own index."""
        out = np.zeros(2 ** self.n_effective, dtype=np.int64)
        pin_bits = {q: (self.pinned >> (self.n_complement - 1 - i)) & 1
                    for i, q in enumerate(self.complement)}
        for a in range(2 ** self.n_effective):
            idx = 0
            for i, q in enumerate(self.effective):
                idx |= ((a >> (self.n_effective - 1 - i)) & 1) << (self.n_qubits - 1 - q)
            for q, bit in pin_bits.items():
                idx |= bit << (self.n_qubits - 1 - q)
            out[a] = idx
        return out

    def dense(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        p = np.zeros((dim, dim))
        idx = self.block_indices()
        p[idx, idx] = 1.0
        return p


@dataclass
class EffectiveHamiltonian:
    n_qubits: int
    terms: PauliSum

    def dense(self) -> np.ndarray:
        return self.terms.dense()

    def coefficient(self, label: str) -> float:
        return self.terms.coefficient(PauliString.from_label(label)).real


def extract_heff(result, projector: LowEnergyProjector, strategy: str = "analytic",
                 sampler: ShotSampler | None = None) -> EffectiveHamiltonian:
    """Expand P H-tilde P over the effective register.

    ``analytic`` slices the dense rotated Hamiltonian; ``circuit`` evaluates
    every coefficient as sum_j h_j <pin,phi| U^dag sigma_j U (x) sigma~* |...>
    on the doubled effective register, optionally with finite shots.
    """
    if projector.n_qubits != result.config.hampair.n_qubits:
        raise SizeMismatchError("projector register does not match the Hamiltonian")
    n_eff = projector.n_effective
    if strategy == "analytic":
        idx = projector.block_indices()
        block = result.h_tilde_dense[np.ix_(idx, idx)]
        return EffectiveHamiltonian(n_eff, decompose(block))
    if strategy not in ("circuit", "circuit-exact", "circuit-shots"):
        raise BadDimensionError(f"unknown extraction strategy {strategy!r}")

    state = _pinned_phi_state(result.final_circuit, projector)
    h_terms = list(result.config.hampair.h_mu(result.config.lam).items())
    values = {}
    for code in range(4 ** n_eff):
        sigma_t = PauliString(n_eff, code)
        coeff = heff_coefficient(state, h_terms, projector, sigma_t, sampler=sampler)
        if abs(coeff) >= 1e-12:
            values[code] = complex(coeff)
    return EffectiveHamiltonian(n_eff, PauliSum(n_eff, values))


def _pinned_phi_state(u_circuit: Circuit, projector: LowEnergyProjector) -> StateVector:
    """|pin, phi_eff> with U applied to the system half.

    Register layout: system qubits 0..N-1 as-is, copies of the effective
    qubits appended after them (copy i pairs with effective qubit i).
    """
    n = projector.n_qubits
    n_eff = projector.n_effective
    total = n + n_eff
    circ = Circuit(total)
    for i, q in enumerate(projector.complement):
        if (projector.pinned >> (projector.n_complement - 1 - i)) & 1:
            circ.x(q)
    for i, q in enumerate(projector.effective):
        circ.h(q)
        circ.cnot(q, n + i)
    for gate in u_circuit.gates:
        circ.add(gate)
    return run_circuit(circ)


def heff_coefficient(state: StateVector, h_terms, projector: LowEnergyProjector,
                     sigma_tilde: PauliString, sampler: ShotSampler | None = None) -> float:
    """One expansion coefficient from expectations of sigma_j (x) sigma~*."""
    if sigma_tilde.n_qubits != projector.n_effective:
        raise BadEffectiveOperatorError(
            f"effective operator acts on {sigma_tilde.n_qubits} qubits, expected {projector.n_effective}")
    n = projector.n_qubits
    conj_sign = sigma_tilde.transpose_parity()  # sigma~* = sign * sigma~ for real-up-to-Y strings
    total = 0.0
    for term_index, (sigma_j, h_j) in enumerate(h_terms):
        combined = PauliString(n + projector.n_effective,
                               sigma_j.code * 4 ** projector.n_effective + sigma_tilde.code)
        if sampler is None:
            value = pauli_expectation(state, combined)
        else:
            sub = sampler.spawn(sigma_tilde.code, term_index)
            exact = pauli_expectation(state, combined)
            p_plus = float(np.clip((1.0 + exact) / 2.0, 0.0, 1.0))
            hits = sub.rng().binomial(sub.shots, p_plus)
            value = (2 * hits - sub.shots) / sub.shots
        total += h_j.real * conj_sign * value
    return total


# ---------------------------------------------------------------------------
# fidelities of the effective dynamics
# ---------------------------------------------------------------------------

@dataclass
class FidelitySeries:
    times: np.ndarray
    f1: np.ndarray  # (n_states, n_times)
    f2: np.ndarray

    def summary(self):
        """Mean and normal-approximation 95% band over the random states."""
        out = {}
        for name, data in (("f1", self.f1), ("f2", self.f2)):
            mean = data.mean(axis=0)
            half = 1.96 * data.std(axis=0, ddof=1) / np.sqrt(data.shape[0])
            out[name] = (mean, mean - half, mean + half)
        return out


def random_states(n_qubits: int, count: int, seed: int) -> np.ndarray:
    """Haar-random state vectors via normalized Gaussian amplitudes."""
    rng = np.random.Generator(np.random.PCG64(seed))
    dim = 2 ** n_qubits
    raw = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def default_fidelity_times() -> np.ndarray:
    return np.geomspace(1.0, 1000.0, 50)


def fidelities(hampair: HamiltonianPair, heff: EffectiveHamiltonian,
               projector: LowEnergyProjector, times=None, n_states: int = 20,
               seed: int = 2024, initial_states: np.ndarray | None = None) -> FidelitySeries:
    """Compare full-model dynamics against the effective model.

    f1(t) overlaps the evolved effective state with the reduced density of
    the full evolution from |xi, pin>; f2(t) overlaps the reduced density
    with the initial state itself.
    """
    times = default_fidelity_times() if times is None else np.asarray(times, dtype=float)
    n_eff = projector.n_effective
    if initial_states is None:
        initial_states = random_states(n_eff, n_states, seed)
    full_prop = evolver(hampair.dense(hampair.lam))
    eff_prop = evolver(heff.dense())
    idx = projector.block_indices()
    dim_full = 2 ** projector.n_qubits
    f1 = np.zeros((len(initial_states), len(times)))
    f2 = np.zeros_like(f1)
    for s, xi in enumerate(initial_states):
        psi0 = np.zeros(dim_full, dtype=complex)
        psi0[idx] = xi
        for k, t in enumerate(times):
            psi_t = full_prop(t) @ psi0
            rho = _reduced_density(psi_t, projector)
            psi_eff = eff_prop(t) @ xi
            f1[s, k] = float(np.real(psi_eff.conj() @ rho @ psi_eff))
            f2[s, k] = float(np.real(xi.conj() @ rho @ xi))
    return FidelitySeries(times, f1, f2)


def _reduced_density(psi: np.ndarray, projector: LowEnergyProjector) -> np.ndarray:
    """Trace out the complement qubits."""
    n = projector.n_qubits
    tensor = psi.reshape([2] * n)
    order = list(projector.effective) + list(projector.complement)
    tensor = np.transpose(tensor, order).reshape(2 ** projector.n_effective, -1)
    return tensor @ tensor.conj().T


# ---------------------------------------------------------------------------
# ground-state correlation functions
# ---------------------------------------------------------------------------

def default_correlation_times() -> np.ndarray:
    return np.linspace(0.0, 10.0, 101)


def correlation(hampair: HamiltonianPair, result, axis: str, times=None,
                probe_qubit: int = 0) -> tuple[np.ndarray, np.ndarray, dict]:
    """Re <g0| U^dag s e^{-it H~} s U |g0> with s the probe-axis Pauli.

    |g0> is the deterministic ground state of H0; H~ and U come from the
    completed run (so noisy estimations propagate here, as intended).
    """
    if axis not in ("x", "z"):
        raise BadDimensionError("correlation axis must be 'x' or 'z'")
    times = default_correlation_times() if times is None else np.asarray(times, dtype=float)
    n = hampair.n_qubits
    values0, vectors0 = eig(hampair.h0.dense())
    degenerate = bool(len(values0) > 1 and values0[1] - values0[0] < 1e-9)
    g0 = vectors0[:, 0]
    u = result.unitary()
    sigma = PauliString.from_letters(n, {probe_qubit: axis.upper()}).dense()
    prop = evolver(result.h_tilde_dense)
    base = sigma @ (u @ g0)
    out = np.empty(len(times))
    for k, t in enumerate(times):
        out[k] = float(np.real((u @ g0).conj() @ (sigma.conj().T @ (prop(t) @ base))))
    info = {"ground_energy": float(values0[0]), "degenerate_ground": degenerate,
            "ground_index": 0}
    return times, out, info


def exact_correlation(hampair: HamiltonianPair, axis: str, times=None,
                      probe_qubit: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Referee series Re <g_exact| s e^{-itH} s |g_exact> on the full model."""
    times = default_correlation_times() if times is None else np.asarray(times, dtype=float)
    n = hampair.n_qubits
    h_dense = hampair.dense(hampair.lam)
    _, vectors = eig(h_dense)
    g = vectors[:, 0]
    sigma = PauliString.from_letters(n, {probe_qubit: axis.upper()}).dense()
    prop = evolver(h_dense)
    base = sigma @ g
    out = np.empty(len(times))
    for k, t in enumerate(times):
        out[k] = float(np.real(g.conj() @ (sigma @ (prop(t) @ base))))
    return times, out

"""Reduced-circuit estimation for two-qubit problems.

Instead of one test circuit per (V term, H term, layer), the step cost is
recast as a linear regression || V + Q beta ||^2 over Pauli coefficients.
Per layer only the 16 base expectations E_h = <phi| sigma_h (x) O_k |phi>
are measured; every q_{kj} is then assembled classically through the
structure coefficients of the string commutators.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .ansatz import AnsatzSpec, partial_unitary
from .errors import NumericalBreakdownError, OnlyTwoQubitsError
from .estimator import StepSystem, _fold_matrix
from .models import HamiltonianPair
from .pauli import PauliString, StructureTable, y_counts
from .simulator import (ROT_Y_ANC, ShotSampler, StateVector, _ancilla_p0,
                        _apply_controlled_matrix, _apply_controlled_pauli, _b_test_prefix,
                        pauli_expectation, prepare_phi)

N_QUBITS = 2
N_STRINGS = 16


@dataclass
class RegressionSystem:
    """The 16-row regression min || V + Q beta ||^2 (up to the 2^N prefactor)."""

    v_vec: np.ndarray           # length 16
    q_mat: np.ndarray           # 16 x n_free
    beta: np.ndarray | None = None

    def cost(self, beta) -> float:
        resid = self.v_vec + self.q_mat @ np.asarray(beta, dtype=float)
        return float(2 ** N_QUBITS * resid @ resid)


def solve_regression(system: RegressionSystem) -> np.ndarray:
    """Minimum-norm least-squares beta for || V + Q beta ||^2."""
    if not (np.isfinite(system.v_vec).all() and np.isfinite(system.q_mat).all()):
        raise NumericalBreakdownError("NaN or Inf in the regression system")
    beta, *_ = np.linalg.lstsq(system.q_mat, -system.v_vec, rcond=None)
    system.beta = beta
    return beta


@lru_cache(maxsize=1)
def _table() -> StructureTable:
    return StructureTable(N_QUBITS)


def base_expectations(spec: AnsatzSpec, params_row, k: int, variant: str = "indirect",
                      sampler: ShotSampler | None = None,
                      rotated: np.ndarray | None = None,
                      u_partial: np.ndarray | None = None) -> np.ndarray:
    """E_h = <phi| sigma_h (x) U^k B^k U^k-dagger |phi> for all 16 strings.

    ``variant='indirect'`` runs the ancilla circuit whose outcome-0
    probability is 1/2 + E_h/2; ``variant='direct'`` drops the ancilla and
    measures B^k (x) sigma_h on (1 (x) U^k-dagger)|phi> instead.  Both agree
    exactly in infinite-shot mode.
    """
    if spec.n_qubits != N_QUBITS:
        raise OnlyTwoQubitsError("the reduced scheme is specific to two qubits")
    if u_partial is None:
        u_partial = partial_unitary(spec, params_row, k).to_matrix()
    generator = spec.generators[k - 1]
    if rotated is None:
        rotated = u_partial @ generator.dense() @ u_partial.conj().T

    out = np.empty(N_STRINGS)
    if variant == "indirect":
        n_total = 2 * N_QUBITS + 1
        anc = 2 * N_QUBITS
        for h in range(N_STRINGS):
            data = _b_test_prefix(N_QUBITS).copy()
            _apply_controlled_pauli(data, n_total, PauliString(N_QUBITS, h), anc, offset=0)
            _apply_controlled_matrix(data, n_total, rotated, anc,
                                     tuple(range(N_QUBITS, 2 * N_QUBITS)))
            kernels.apply_matrix(data, n_total, ROT_Y_ANC, (anc,))
            p0 = _ancilla_p0(data, n_total, anc)
            if sampler is not None:
                sub = sampler.spawn(h)
                p0 = sub.rng().binomial(sub.shots, min(max(p0, 0.0), 1.0)) / sub.shots
            out[h] = 2.0 * p0 - 1.0
        return out

    if variant != "direct":
        raise ValueError(f"unknown readout variant {variant!r}")
    phi = prepare_phi(N_QUBITS).data.reshape(4, 4)
    reduced = np.einsum("ab,cb->ca", u_partial.conj().T, phi).reshape(-1)
    state = StateVector(2 * N_QUBITS, reduced)
    for h in range(N_STRINGS):
        obs = PauliString(2 * N_QUBITS, h * N_STRINGS + generator.code)
        value = pauli_expectation(state, obs)
        if sampler is not None:
            # measuring a +-1 observable: each shot is +1 with p = (1+<obs>)/2,
            # realized on hardware by single-qubit basis rotations + Z parity
            sub = sampler.spawn(h)
            p_plus = float(np.clip((1.0 + value) / 2.0, 0.0, 1.0))
            hits = sub.rng().binomial(sub.shots, p_plus)
            value = (2 * hits - sub.shots) / sub.shots
        out[h] = value
    return out


def reconstruct_q(base: np.ndarray, table: StructureTable, h_terms) -> np.ndarray:
    """One row q_{k,.} from the 16 base expectations.

    q_{kj} = (-1)^{y_j} sum_l h_l <phi| sigma_j (x) i[O_k, sigma_l] |phi>, and
    each bracket collapses onto a single base expectation through
    [sigma_j^T, sigma_l] = F sigma_h.
    """
    ysign = 1.0 - 2.0 * (y_counts(N_QUBITS) % 2)
    out = np.zeros(N_STRINGS)
    for j in range(N_STRINGS):
        acc = 0.0
        for string, coeff in h_terms:
            f = table.f_imag[j, string.code]
            if f == 0.0:
                continue
            h = int(table.h_code[j, string.code])
            acc += coeff.real * f * ysign[h] * base[h]
        out[j] = ysign[j] * acc
    return out


class CheapN2Engine:
    """Step builder backed by the 16-circuit reduction."""

    def __init__(self, hampair: HamiltonianPair, spec: AnsatzSpec,
                 sampler: ShotSampler | None = None, variant: str = "indirect"):
        if spec.n_qubits != N_QUBITS or hampair.n_qubits != N_QUBITS:
            raise OnlyTwoQubitsError("the reduced scheme is specific to two qubits")
        self.hampair = hampair
        self.spec = spec
        self.sampler = sampler
        self.variant = variant
        self.fold = _fold_matrix(spec)
        self.v_vec = hampair.v.to_coeff_vector().real
        self._u0 = spec.u0_matrix()
        self._gen_dense = [g.dense() for g in spec.generators]

    def _q_matrix(self, params_row, mu: float, t: int) -> tuple[np.ndarray, int]:
        spec = self.spec
        angles = spec.layer_angles(params_row)
        h_terms = list(self.hampair.h_mu(mu).items())
        table = _table()
        q_cols = np.zeros((N_STRINGS, spec.n_layers))
        u = self._u0.copy()
        count = 0
        for layer in range(spec.n_layers):
            rotated = u @ self._gen_dense[layer] @ u.conj().T
            sampler = None if self.sampler is None else self.sampler.spawn(t, layer)
            base = base_expectations(spec, params_row, layer + 1, variant=self.variant,
                                     sampler=sampler, rotated=rotated, u_partial=u)
            count += N_STRINGS
            q_cols[:, layer] = reconstruct_q(base, table, h_terms)
            theta = angles[layer]
            u = u @ (np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * self._gen_dense[layer])
        return q_cols @ self.fold.T, count

    def build(self, params_row, mu: float, t: int = 0) -> StepSystem:
        q_free, count = self._q_matrix(params_row, mu, t)
        dim = 2 ** N_QUBITS
        X = dim * (q_free.T @ q_free)
        b = -dim * (q_free.T @ self.v_vec)
        return StepSystem(t=t, mu=mu, X=X, b=b, circuit_count=(count, 0))

    def regression(self, params_row, mu: float, t: int = 0) -> RegressionSystem:
        q_free, _ = self._q_matrix(params_row, mu, t)
        return RegressionSystem(self.v_vec.copy(), q_free)

    def noise_scale(self, mu: float) -> float:
        return 0.0

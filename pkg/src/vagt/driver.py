"""The outer loop: march mu from 0 to lambda, solving one linear system per step.

Parameters start at zero, each step's solution beta is integrated with an
explicit Euler update alpha_{t+1} = alpha_t + beta dmu, and the final circuit
is conjugated onto the Hamiltonian to produce the rotated operator.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ansatz import AnsatzSpec, ParamTable, full_unitary, rotated_generator
from .errors import BadDimensionError, NumericalBreakdownError
from .estimator import EstimatorStrategy, StepSystem, make_engine, solve_step
from .models import HamiltonianPair
from .oracle import eig
from .pauli import PauliSum, decompose
from .simulator import Circuit


@dataclass
class VagtConfig:
    hampair: HamiltonianPair
    spec: AnsatzSpec
    n_steps: int
    strategy: EstimatorStrategy = EstimatorStrategy("analytic")
    lam: float | None = None            # defaults to the pair's lambda
    seed: int = 0
    threads: int = 1
    keep_steps: bool = False            # keep every StepSystem in the result
    track_htilde: bool = False          # rotated Hamiltonian after every step

    def __post_init__(self):
        if self.n_steps < 1:
            raise BadDimensionError("need at least one step")
        if self.lam is None:
            self.lam = self.hampair.lam
        if not np.isfinite(self.lam):
            raise BadDimensionError("lambda must be finite")


@dataclass
class VagtResult:
    config: VagtConfig
    table: ParamTable
    final_circuit: Circuit
    h_tilde: PauliSum
    h_tilde_dense: np.ndarray
    residuals: list[float]
    circuit_counts: list[tuple[int, int]]
    eigenvalue_estimates: np.ndarray
    wall_clock: float = 0.0
    steps: list[StepSystem] = field(default_factory=list)
    htilde_trace: list[np.ndarray] = field(default_factory=list)

    def unitary(self) -> np.ndarray:
        return self.final_circuit.to_matrix()

    def to_json(self) -> dict:
        """Deterministic payload: identical config + seed gives identical bytes.

        Wall-clock time is deliberately left out; it is available on the
        object for reporting.
        """
        cfg = self.config
        out = {
            "version": __version__,
            "model": cfg.hampair.metadata(),
            "ansatz": cfg.spec.name,
            "n_layers": cfg.spec.n_layers,
            "n_free_parameters": cfg.spec.n_free,
            "T": cfg.n_steps,
            "lambda": cfg.lam,
            "strategy": cfg.strategy.describe(),
            "seed": cfg.seed,
            "alpha": self.table.alpha.tolist(),
            "h_tilde": {
                "pauli": self.h_tilde.to_text(),
                "dense_re": self.h_tilde_dense.real.tolist(),
                "dense_im": self.h_tilde_dense.imag.tolist(),
            },
            "residuals": self.residuals,
            "circuit_counts": [list(c) for c in self.circuit_counts],
            "eigenvalue_estimates": self.eigenvalue_estimates.tolist(),
            "eigenvalues_exact": eig(self.config.hampair.dense(self.config.lam))[0].tolist(),
        }
        return out

    def to_canonical_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def run(config: VagtConfig) -> VagtResult:
    """Iterate build -> solve -> update from t = 0 to t = T."""
    started = time.perf_counter()
    spec = config.spec
    pair = config.hampair
    table = ParamTable.zeros(config.n_steps, spec.n_free, config.lam)
    engine = make_engine(pair, spec, config.strategy, threads=config.threads)
    residuals: list[float] = []
    counts: list[tuple[int, int]] = []
    steps: list[StepSystem] = []
    trace: list[np.ndarray] = []

    for t in range(config.n_steps):
        mu = t * table.delta_mu
        system = engine.build(table.row(t), mu, t)
        noise = engine.noise_scale(mu) if hasattr(engine, "noise_scale") else 0.0
        try:
            system.beta, system.residual = solve_step(system.X, system.b, noise_scale=noise)
        except NumericalBreakdownError as err:
            raise NumericalBreakdownError(f"step {t}: {err}", step=t) from err
        update = table.row(t) + table.delta_mu * system.beta
        if not np.isfinite(update).all():
            raise NumericalBreakdownError(f"non-finite parameters at step {t}", step=t)
        table.alpha[t + 1] = update
        residuals.append(system.residual)
        counts.append(system.circuit_count)
        if config.keep_steps:
            steps.append(system)
        if config.track_htilde:
            u = full_unitary(spec, table.row(t + 1)).to_matrix()
            trace.append(u.conj().T @ pair.dense(mu + table.delta_mu) @ u)

    circuit = full_unitary(spec, table.row(config.n_steps))
    u = circuit.to_matrix()
    h_dense = u.conj().T @ pair.dense(config.lam) @ u
    h_sum = decompose(h_dense)
    estimates = np.sort(np.diag(h_dense).real)
    result = VagtResult(
        config=config,
        table=table,
        final_circuit=circuit,
        h_tilde=h_sum,
        h_tilde_dense=h_dense,
        residuals=residuals,
        circuit_counts=counts,
        eigenvalue_estimates=estimates,
        steps=steps,
        htilde_trace=trace,
    )
    result.wall_clock = time.perf_counter() - started
    return result


def off_block_residual(h_tilde: np.ndarray, projector: np.ndarray | list[np.ndarray]) -> float:
    """Frobenius norm of the inter-block part of a matrix.

    A single projector P measures ||P H (1-P)||_F (one off-diagonal block);
    a list of projectors resolving the identity measures the norm of
    everything outside the blocks.
    """
    h_tilde = np.asarray(h_tilde, dtype=complex)
    dim = h_tilde.shape[0]
    projectors = projector if isinstance(projector, (list, tuple)) else None
    if projectors is None:
        p = np.asarray(projector, dtype=complex)
        _check_projector(p)
        q = np.eye(dim) - p
        return float(np.linalg.norm(p @ h_tilde @ q))
    total = np.zeros((dim, dim), dtype=complex)
    inside = np.zeros((dim, dim), dtype=complex)
    for p in projectors:
        p = np.asarray(p, dtype=complex)
        _check_projector(p)
        total += p
        inside += p @ h_tilde @ p
    if np.abs(total - np.eye(dim)).max() > 1e-10:
        raise BadDimensionError("projector list does not resolve the identity")
    return float(np.linalg.norm(h_tilde - inside))


def _check_projector(p: np.ndarray):
    if np.abs(p @ p - p).max() > 1e-12 or np.abs(p - p.conj().T).max() > 1e-12:
        raise BadDimensionError("matrix is not an orthogonal projector")


def gauge_potential(table: ParamTable, spec: AnsatzSpec, t: int) -> PauliSum:
    """Finite-difference generator at step t: sum_l beta_l U^l B^l U^l-dagger."""
    if not 0 <= t < table.n_steps:
        raise BadDimensionError(f"step {t} out of range 0..{table.n_steps - 1}")
    if table.delta_mu == 0.0:
        return PauliSum(spec.n_qubits)
    beta_free = (table.alpha[t + 1] - table.alpha[t]) / table.delta_mu
    out = PauliSum(spec.n_qubits)
    for m, group in enumerate(spec.groups()):
        if beta_free[m] == 0.0:
            continue
        for layer in group:
            out = out + beta_free[m] * rotated_generator(spec, table.row(t), layer + 1)
    return out

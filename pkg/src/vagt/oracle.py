"""Dense linear-algebra ground truth used as the referee for everything else."""
from __future__ import annotations

import numpy as np

from .errors import NonHermitianError
from .pauli import PauliSum

_HERM_TOL = 1e-10


def _require_hermitian(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    if np.abs(matrix - matrix.conj().T).max() > _HERM_TOL:
        raise NonHermitianError("matrix is not Hermitian within 1e-10")
    return matrix


def eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a deterministically gauged eigenvector matrix.

    Within numerically degenerate clusters the basis is rebuilt by projecting
    the standard basis onto the cluster subspace (Gram-Schmidt in index
    order), then every vector's first sizeable amplitude is made real
    positive.  This pins the gauge so serialized results are reproducible.
    """
    matrix = _require_hermitian(matrix)
    values, vectors = np.linalg.eigh(matrix)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    tol = 1e-9 * scale
    dim = len(values)
    start = 0
    while start < dim:
        stop = start + 1
        while stop < dim and values[stop] - values[stop - 1] < tol:
            stop += 1
        if stop - start > 1:
            vectors[:, start:stop] = _canonical_cluster_basis(vectors[:, start:stop])
        start = stop
    for c in range(dim):
        col = vectors[:, c]
        k = int(np.argmax(np.abs(col) > 1e-9))
        phase = col[k] / abs(col[k])
        vectors[:, c] = col / phase
    return values, vectors


def _canonical_cluster_basis(cluster: np.ndarray) -> np.ndarray:
    dim, k = cluster.shape
    projector = cluster @ cluster.conj().T
    basis = []
    for i in range(dim):
        candidate = projector[:, i].copy()
        for b in basis:
            candidate -= b * (b.conj() @ candidate)
        norm = np.linalg.norm(candidate)
        if norm > 1e-8:
            basis.append(candidate / norm)
        if len(basis) == k:
            break
    return np.stack(basis, axis=1)


def expm(matrix: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) for Hermitian H, via eigendecomposition."""
    matrix = _require_hermitian(matrix)
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * np.exp(-1j * t * values)) @ vectors.conj().T


def evolver(matrix: np.ndarray):
    """Factory form of :func:`expm` for many times on one Hamiltonian."""
    matrix = _require_hermitian(matrix)
    values, vectors = np.linalg.eigh(matrix)

    def propagate(t: float) -> np.ndarray:
        return (vectors * np.exp(-1j * t * values)) @ vectors.conj().T

    return propagate


def dense_commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hs_norm2(matrix: np.ndarray) -> float:
    """Squared Hilbert-Schmidt (Frobenius) norm."""
    return float(np.sum(np.abs(matrix) ** 2))


def brute_cost(hampair, spec, params_row, beta, mu: float) -> float:
    """|| V + sum_m beta_m i[O_m, H_mu] ||^2 evaluated densely.

    ``beta`` runs over free parameters; tied layers contribute the sum of
    their rotated generators.
    """
    from .ansatz import partial_unitary  # local import to avoid a cycle

    h_mu = hampair.h_mu(mu).dense()
    total = hampair.v.dense().astype(complex)
    beta = np.asarray(beta, dtype=float)
    for m, group in enumerate(spec.groups()):
        if beta[m] == 0.0:
            continue
        for layer in group:
            u = partial_unitary(spec, params_row, layer + 1).to_matrix()
            o = u @ spec.generators[layer].dense() @ u.conj().T
            total += beta[m] * 1j * dense_commutator(o, h_mu)
    return hs_norm2(total)


def off_diagonal_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix - np.diag(np.diag(matrix))))


def pauli_sum_dense(op: PauliSum) -> np.ndarray:
    return op.dense()

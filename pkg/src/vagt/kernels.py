"""Backend selection and index bookkeeping for gate application.

The compiled Cython kernel is preferred; set ``VAGT_PURE_PYTHON=1`` (or fail
to build the extension) to run on the numpy fallback.  Both implement the same
gather/apply/scatter contract, so everything above this module is agnostic.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

if os.environ.get("VAGT_PURE_PYTHON"):
    from . import _gate_numpy as _impl
else:
    try:
        from . import _gate_cython as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _gate_numpy as _impl


def backend_name() -> str:
    return _impl.BACKEND


@lru_cache(maxsize=4096)
def gate_indices(n_qubits: int, targets: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """(bases, offsets) index arrays for a gate on ``targets``.

    Qubit q occupies bit (n_qubits - 1 - q); targets[0] is the most
    significant index of the gate block, matching the kron convention.
    """
    k = len(targets)
    free_bits = [n_qubits - 1 - q for q in range(n_qubits) if q not in targets]
    bases = np.zeros(1, dtype=np.intp)
    for bit in free_bits:
        bases = np.concatenate([bases, bases + (1 << bit)])
    bases.sort()
    target_bits = [n_qubits - 1 - q for q in targets]
    offsets = np.zeros(2 ** k, dtype=np.intp)
    for j, bit in enumerate(target_bits):
        sel = (np.arange(2 ** k) >> (k - 1 - j)) & 1
        offsets += sel.astype(np.intp) << bit
    bases.setflags(write=False)
    offsets.setflags(write=False)
    return bases, offsets


def apply_matrix(state: np.ndarray, n_qubits: int, matrix: np.ndarray, targets: tuple[int, ...]) -> None:
    """Apply a 2^k x 2^k matrix to ``targets`` of a statevector, in place."""
    bases, offsets = gate_indices(n_qubits, tuple(targets))
    matrix = np.ascontiguousarray(matrix, dtype=np.complex128)
    _impl.apply_matrix(state, matrix, bases, offsets)


def controlled_block(matrix: np.ndarray) -> np.ndarray:
    """Embed a target-block matrix as a controlled gate (control = MSB)."""
    dim = matrix.shape[0]
    out = np.eye(2 * dim, dtype=complex)
    out[dim:, dim:] = matrix
    return out

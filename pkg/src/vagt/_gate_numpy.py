"""Pure-numpy gate application, the fallback when the compiled kernel is absent.

Both backends share the same contract: ``apply_matrix(state, matrix, bases,
offsets)`` applies a 2^k x 2^k matrix in place to the amplitude groups
``state[bases[i] + offsets]``.  Index arrays are prepared (and cached) by
:mod:`vagt.kernels`.
"""
import numpy as np

BACKEND = "numpy"


def apply_matrix(state, matrix, bases, offsets):
    idx = bases[:, None] + offsets[None, :]
    state[idx] = state[idx] @ matrix.T

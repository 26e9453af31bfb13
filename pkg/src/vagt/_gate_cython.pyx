# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate-application kernel (same contract as vagt._gate_numpy)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def apply_matrix(cnp.complex128_t[::1] state,
                 const cnp.complex128_t[:, ::1] matrix,
                 const cnp.intp_t[::1] bases,
                 const cnp.intp_t[::1] offsets):
    cdef Py_ssize_t n_bases = bases.shape[0]
    cdef Py_ssize_t dim = offsets.shape[0]
    cdef Py_ssize_t i, r, c
    cdef Py_ssize_t base
    cdef cnp.complex128_t a0, a1, a2, a3, acc
    cdef cnp.complex128_t scratch[64]

    if dim == 2:
        for i in range(n_bases):
            base = bases[i]
            a0 = state[base + offsets[0]]
            a1 = state[base + offsets[1]]
            state[base + offsets[0]] = matrix[0, 0] * a0 + matrix[0, 1] * a1
            state[base + offsets[1]] = matrix[1, 0] * a0 + matrix[1, 1] * a1
        return
    if dim == 4:
        for i in range(n_bases):
            base = bases[i]
            a0 = state[base + offsets[0]]
            a1 = state[base + offsets[1]]
            a2 = state[base + offsets[2]]
            a3 = state[base + offsets[3]]
            state[base + offsets[0]] = matrix[0, 0] * a0 + matrix[0, 1] * a1 + matrix[0, 2] * a2 + matrix[0, 3] * a3
            state[base + offsets[1]] = matrix[1, 0] * a0 + matrix[1, 1] * a1 + matrix[1, 2] * a2 + matrix[1, 3] * a3
            state[base + offsets[2]] = matrix[2, 0] * a0 + matrix[2, 1] * a1 + matrix[2, 2] * a2 + matrix[2, 3] * a3
            state[base + offsets[3]] = matrix[3, 0] * a0 + matrix[3, 1] * a1 + matrix[3, 2] * a2 + matrix[3, 3] * a3
        return
    if dim > 64:
        raise ValueError("compiled kernel supports gate blocks up to 64 amplitudes")
    for i in range(n_bases):
        base = bases[i]
        for r in range(dim):
            acc = 0
            for c in range(dim):
                acc = acc + matrix[r, c] * state[base + offsets[c]]
            scratch[r] = acc
        for r in range(dim):
            state[base + offsets[r]] = scratch[r]

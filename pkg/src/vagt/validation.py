"""Randomized invariant battery behind the CLI ``validate`` subcommand.

Each check draws fresh instances from a seeded generator and verifies an
exact identity of the algebra or the measurement circuits at 1e-10.
"""
from __future__ import annotations

import numpy as np

from .pauli import PauliString, PauliSum, StructureTable, decompose
from .simulator import (Circuit, hadamard_test_b, hadamard_test_x, prepare_phi,
                        expectation, run as run_circuit, build_phi_circuit)
from . import kernels
from .simulator import ROT_Y_ANC, _ancilla_p0, _apply_controlled_matrix, _apply_controlled_pauli, _b_test_prefix

TOL = 1e-10


def _random_circuit(rng, n, depth=4) -> Circuit:
    circ = Circuit(n)
    for _ in range(depth):
        code = int(rng.integers(1, 4 ** n))
        circ.rot(PauliString(n, code), float(rng.uniform(-1.6, 1.6)))
    return circ


def _random_hermitian(rng, dim) -> np.ndarray:
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (raw + raw.conj().T) / 2


def check_trace_identity(rng, cases=100) -> float:
    """2^N <phi| A^T (x) B |phi> = Tr(A B) for random Hermitian pairs."""
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 3))
        a, b = _random_hermitian(rng, 2 ** n), _random_hermitian(rng, 2 ** n)
        phi = prepare_phi(n)
        ab = np.kron(a.T, b)
        value = float(np.real(phi.data.conj() @ (ab @ phi.data))) * 2 ** n
        worst = max(worst, abs(value - float(np.trace(a @ b).real)))
    return worst


def check_transpose_parity(rng, cases=100) -> float:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 4))
        s = PauliString(n, int(rng.integers(0, 4 ** n)))
        worst = max(worst, np.abs(s.dense().T - s.transpose_parity() * s.dense()).max())
    return worst


def check_structure_table(rng, cases=100) -> float:
    table = StructureTable(2)
    worst = 0.0
    for _ in range(cases):
        l = PauliString(2, int(rng.integers(0, 16)))
        j = PauliString(2, int(rng.integers(0, 16)))
        dense = l.dense().T @ j.dense() - j.dense() @ l.dense().T
        entry = table.entry(l, j)
        rebuilt = np.zeros((4, 4), dtype=complex) if entry is None else entry[1] * entry[0].dense()
        worst = max(worst, np.abs(dense - rebuilt).max())
    return worst


def check_b_probability_relation(rng, cases=100) -> float:
    """p(0) = 1/2 - <obs>/4 on the single-ancilla commutator circuit."""
    worst = 0.0
    for _ in range(cases):
        u = _random_circuit(rng, 2)
        gen = PauliString(2, int(rng.integers(1, 16)))
        sj = PauliString(2, int(rng.integers(0, 16)))
        sk = PauliString(2, int(rng.integers(0, 16)))
        value = hadamard_test_b(u, gen, sj, sk)
        m = u.to_matrix()
        o = m @ gen.dense() @ m.conj().T
        comm = 1j * (o @ sk.dense() - sk.dense() @ o)
        phi = prepare_phi(2)
        obs = np.kron(sj.dense(), comm)
        expected = float(np.real(phi.data.conj() @ (obs @ phi.data)))
        p0 = (2.0 - value) / 4.0
        worst = max(worst, abs(p0 - (0.5 - expected / 4.0)))
    return worst


def check_x_probability_relation(rng, cases=100) -> float:
    """<obs> = -4 + 8 p(0) on the two-ancilla parity circuit."""
    worst = 0.0
    for _ in range(cases):
        u1, u2 = _random_circuit(rng, 2), _random_circuit(rng, 2)
        g1 = PauliString(2, int(rng.integers(1, 16)))
        g2 = PauliString(2, int(rng.integers(1, 16)))
        sj = PauliString(2, int(rng.integers(0, 16)))
        sk = PauliString(2, int(rng.integers(0, 16)))
        value = hadamard_test_x(u1, g1, u2, g2, sj, sk)
        m1, m2 = u1.to_matrix(), u2.to_matrix()
        w = m1.conj() @ g1.dense() @ m1.T
        o = m2 @ g2.dense() @ m2.conj().T
        c1 = 1j * (w @ sj.dense() - sj.dense() @ w)
        c2 = 1j * (o @ sk.dense() - sk.dense() @ o)
        phi = prepare_phi(2)
        expected = float(np.real(phi.data.conj() @ (np.kron(c1, c2) @ phi.data)))
        worst = max(worst, abs(value - expected))
    return worst


def check_base_probability_relation(rng, cases=100) -> float:
    """p(0) = 1/2 + <phi| sigma_h (x) O |phi>/2 on the direct-expectation circuit."""
    worst = 0.0
    for _ in range(cases):
        u = _random_circuit(rng, 2)
        gen = PauliString(2, int(rng.integers(1, 16)))
        h = PauliString(2, int(rng.integers(0, 16)))
        m = u.to_matrix()
        o = m @ gen.dense() @ m.conj().T
        data = _b_test_prefix(2).copy()
        _apply_controlled_pauli(data, 5, h, 4, offset=0)
        _apply_controlled_matrix(data, 5, o, 4, (2, 3))
        kernels.apply_matrix(data, 5, ROT_Y_ANC, (4,))
        p0 = _ancilla_p0(data, 5, 4)
        phi = prepare_phi(2)
        expected = float(np.real(phi.data.conj() @ (np.kron(h.dense(), o) @ phi.data)))
        worst = max(worst, abs(p0 - (0.5 + expected / 2.0)))
    return worst


def check_phi_pairing(rng, cases=50) -> float:
    """<phi| sigma (x) sigma^T |phi> = 1 for every string."""
    worst = 0.0
    phi = prepare_phi(2)
    for code in range(16):
        s = PauliString(2, code)
        obs = np.kron(s.dense(), s.dense().T)
        value = float(np.real(phi.data.conj() @ (obs @ phi.data)))
        worst = max(worst, abs(value - 1.0))
    return worst


def check_decompose_roundtrip(rng, cases=50) -> float:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 4))
        m = _random_hermitian(rng, 2 ** n)
        worst = max(worst, np.abs(decompose(m).dense() - m).max())
    return worst


ALL_CHECKS = [
    ("trace-identity", check_trace_identity),
    ("transpose-parity", check_transpose_parity),
    ("structure-table-vs-dense", check_structure_table),
    ("b-test-probability", check_b_probability_relation),
    ("x-test-probability", check_x_probability_relation),
    ("base-expectation-probability", check_base_probability_relation),
    ("phi-pairing", check_phi_pairing),
    ("decompose-roundtrip", check_decompose_roundtrip),
]


def run_validation(seed: int = 0, cases: int = 100):
    """Run every check; returns a list of (name, worst error, passed)."""
    results = []
    for name, fn in ALL_CHECKS:
        rng = np.random.default_rng(seed)
        try:
            worst = fn(rng, cases) if "cases" in fn.__code__.co_varnames else fn(rng)
        except TypeError:
            worst = fn(rng)
        results.append((name, worst, worst < TOL))
    return results

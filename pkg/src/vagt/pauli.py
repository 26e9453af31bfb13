"""Pauli-string algebra.

Strings are tensor products of {I, X, Y, Z}.  Qubit 1 is the leftmost tensor
factor and the most significant bit of a statevector index; a string is packed
into a base-4 integer with qubit 1 as the most significant digit, so map keys
are canonical and iteration order (ascending code) is deterministic.

Letter codes: I=0, X=1, Y=2, Z=3.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import BadDimensionError, NonHermitianError, SizeMismatchError, TableTooLargeError

LETTERS = "IXYZ"

PAULI_MATS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# sigma_a . sigma_b = i**MUL_IPOW[a,b] * sigma_MUL_CODE[a,b]
MUL_CODE = np.array(
    [[0, 1, 2, 3],
     [1, 0, 3, 2],
     [2, 3, 0, 1],
     [3, 2, 1, 0]], dtype=np.int64)
MUL_IPOW = np.array(
    [[0, 0, 0, 0],
     [0, 0, 1, 3],
     [0, 3, 0, 1],
     [0, 1, 3, 0]], dtype=np.int64)
# 1 where the single-qubit letters anticommute
ANTI = np.array(
    [[0, 0, 0, 0],
     [0, 0, 1, 1],
     [0, 1, 0, 1],
     [0, 1, 1, 0]], dtype=np.int64)

I_POWERS = np.array([1, 1j, -1, -1j])

PRUNE_TOL = 1e-12
HERMITIAN_TOL = 1e-12


def _shifts(n):
    # base-4 digit shift for each qubit, qubit 0 most significant
    return [2 * (n - 1 - q) for q in range(n)]


@dataclass(frozen=True, order=True)
class PauliString:
    """One Pauli string on ``n_qubits`` qubits, packed as a base-4 code."""

    n_qubits: int
    code: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise BadDimensionError("need at least one qubit")
        if not 0 <= self.code < 4 ** self.n_qubits:
            raise BadDimensionError(f"code {self.code} out of range for {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        code = 0
        for ch in label:
            code = 4 * code + LETTERS.index(ch)
        return cls(len(label), code)

    @classmethod
    def from_letters(cls, n_qubits: int, letters: dict[int, str]) -> "PauliString":
        """Build from a {qubit index: letter} map, identity elsewhere."""
        code = 0
        for q, ch in letters.items():
            if not 0 <= q < n_qubits:
                raise BadDimensionError(f"qubit {q} out of range")
            code += LETTERS.index(ch) * 4 ** (n_qubits - 1 - q)
        return cls(n_qubits, code)

    def letter(self, q: int) -> str:
        return LETTERS[(self.code >> (2 * (self.n_qubits - 1 - q))) & 3]

    @property
    def label(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n_qubits) if self.letter(q) != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def y_count(self) -> int:
        return sum(1 for q in range(self.n_qubits) if self.letter(q) == "Y")

    @property
    def is_identity(self) -> bool:
        return self.code == 0

    def transpose_parity(self) -> int:
        """Sign s with sigma^T = s * sigma, i.e. (-1)**(number of Y letters)."""
        return -1 if self.y_count % 2 else 1

    def restricted(self, qubits) -> "PauliString":
        """The substring living on the given qubits (in the given order)."""
        code = 0
        for q in qubits:
            code = 4 * code + LETTERS.index(self.letter(q))
        return PauliString(len(list(qubits)), code)

    def dense(self) -> np.ndarray:
        return _dense_from_code(self.n_qubits, self.code)

    def __str__(self):
        return self.label

    def __repr__(self):
        return f"PauliString({self.label!r})"


@lru_cache(maxsize=4096)
def _dense_from_code(n, code):
    mats = [PAULI_MATS[(code >> s) & 3] for s in _shifts(n)]
    return reduce(np.kron, mats)


def string_product(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """sigma_a sigma_b = phase * sigma_c with phase in {1, i, -1, -i}."""
    if a.n_qubits != b.n_qubits:
        raise SizeMismatchError("strings act on different qubit counts")
    code, ipow = 0, 0
    for s in _shifts(a.n_qubits):
        da, db = (a.code >> s) & 3, (b.code >> s) & 3
        code |= int(MUL_CODE[da, db]) << s
        ipow += int(MUL_IPOW[da, db])
    return complex(I_POWERS[ipow % 4]), PauliString(a.n_qubits, code)


def strings_commute(a: PauliString, b: PauliString) -> bool:
    if a.n_qubits != b.n_qubits:
        raise SizeMismatchError("strings act on different qubit counts")
    parity = 0
    for s in _shifts(a.n_qubits):
        parity += int(ANTI[(a.code >> s) & 3, (b.code >> s) & 3])
    return parity % 2 == 0


def commutator(a: PauliString, b: PauliString) -> tuple[complex, PauliString | None]:
    """[sigma_a, sigma_b] = coeff * sigma_c, or (0, None) when they commute.

    The commutator of two Pauli strings is either zero or a single string:
    anticommuting strings give [a,b] = 2 ab.
    """
    if strings_commute(a, b):
        return 0j, None
    phase, c = string_product(a, b)
    return 2 * phase, c


# ---------------------------------------------------------------------------
# vectorised code-level algebra (used by the analytic estimator)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def code_digits(n: int) -> np.ndarray:
    """(4**n, n) array of base-4 digits for every code, qubit 0 first."""
    codes = np.arange(4 ** n, dtype=np.int64)
    return np.stack([(codes >> s) & 3 for s in _shifts(n)], axis=1)


def mul_all_codes(n: int, code: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Product sigma_m . sigma_code for every m.

    Returns (product codes, i-power mod 4, anticommute mask).
    """
    digits = code_digits(n)
    g = np.array([(code >> s) & 3 for s in _shifts(n)], dtype=np.int64)
    prod_digits = MUL_CODE[digits, g]
    ipow = MUL_IPOW[digits, g].sum(axis=1) % 4
    anti = (ANTI[digits, g].sum(axis=1) % 2).astype(bool)
    weights = 4 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return prod_digits @ weights, ipow, anti


def y_counts(n: int) -> np.ndarray:
    return (code_digits(n) == 2).sum(axis=1)


class PauliSum:
    """Sparse real/complex combination of Pauli strings on a fixed register."""

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms: dict[int, complex] | None = None):
        self.n_qubits = n_qubits
        self._terms = {} if terms is None else dict(terms)

    @classmethod
    def from_terms(cls, terms, n_qubits=None) -> "PauliSum":
        """Build from an iterable of (PauliString, coefficient) pairs."""
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise BadDimensionError("cannot infer qubit count from an empty sum")
            n_qubits = terms[0][0].n_qubits
        out = cls(n_qubits)
        for string, coeff in terms:
            if string.n_qubits != n_qubits:
                raise SizeMismatchError("mixed qubit counts in PauliSum")
            out._terms[string.code] = out._terms.get(string.code, 0j) + complex(coeff)
        return out.pruned()

    def items(self):
        """(PauliString, coefficient) pairs in ascending code order."""
        for code in sorted(self._terms):
            yield PauliString(self.n_qubits, code), self._terms[code]

    def coefficient(self, string: PauliString) -> complex:
        return self._terms.get(string.code, 0j)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return self.items()

    def pruned(self, tol: float = PRUNE_TOL) -> "PauliSum":
        self._terms = {c: v for c, v in self._terms.items() if abs(v) >= tol}
        return self

    def copy(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self._terms)

    @property
    def is_hermitian(self) -> bool:
        return all(abs(v.imag) < HERMITIAN_TOL for v in self._terms.values())

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise SizeMismatchError("qubit counts differ")
        terms = dict(self._terms)
        for c, v in other._terms.items():
            terms[c] = terms.get(c, 0j) + v
        return PauliSum(self.n_qubits, terms).pruned()

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "PauliSum":
        return PauliSum(self.n_qubits, {c: scalar * v for c, v in self._terms.items()}).pruned()

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise SizeMismatchError("qubit counts differ")
        out: dict[int, complex] = {}
        for ca, va in self._terms.items():
            a = PauliString(self.n_qubits, ca)
            for cb, vb in other._terms.items():
                phase, c = string_product(a, PauliString(self.n_qubits, cb))
                out[c.code] = out.get(c.code, 0j) + va * vb * phase
        return PauliSum(self.n_qubits, out).pruned()

    def commutator_with(self, other: "PauliSum") -> "PauliSum":
        """[self, other] expanded term by term."""
        if other.n_qubits != self.n_qubits:
            raise SizeMismatchError("qubit counts differ")
        out: dict[int, complex] = {}
        for ca, va in self._terms.items():
            a = PauliString(self.n_qubits, ca)
            for cb, vb in other._terms.items():
                coeff, c = commutator(a, PauliString(self.n_qubits, cb))
                if c is not None:
                    out[c.code] = out.get(c.code, 0j) + va * vb * coeff
        return PauliSum(self.n_qubits, out).pruned()

    def dense(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for code, coeff in self._terms.items():
            out += coeff * _dense_from_code(self.n_qubits, code)
        return out

    def to_coeff_vector(self) -> np.ndarray:
        """Dense coefficient vector indexed by code (complex)."""
        vec = np.zeros(4 ** self.n_qubits, dtype=complex)
        for code, coeff in self._terms.items():
            vec[code] = coeff
        return vec

    @classmethod
    def from_coeff_vector(cls, n_qubits: int, vec, tol: float = PRUNE_TOL) -> "PauliSum":
        vec = np.asarray(vec)
        idx = np.nonzero(np.abs(vec) >= tol)[0]
        return cls(n_qubits, {int(i): complex(vec[i]) for i in idx})

    # -- textual notation, e.g. "1.0*ZI + 1.0*IZ" ---------------------------

    def to_text(self) -> str:
        parts = []
        for string, coeff in self.items():
            if abs(coeff.imag) < HERMITIAN_TOL:
                value = repr(float(coeff.real))
            else:
                value = f"({coeff.real!r}{coeff.imag:+}j)"
            parts.append(f"{value}*{string.label}")
        return " + ".join(parts) if parts else "0"

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        text = text.strip()
        if text in ("", "0"):
            if n_qubits is None:
                raise BadDimensionError("qubit count needed for the zero sum")
            return cls(n_qubits)
        terms = []
        for chunk in text.split(" + "):
            chunk = chunk.strip()
            if "*" in chunk:
                value, label = chunk.rsplit("*", 1)
                coeff = complex(value)
            else:
                label, coeff = chunk, 1.0
            terms.append((PauliString.from_label(label.strip()), coeff))
        return cls.from_terms(terms, n_qubits)

    def __repr__(self):
        return f"PauliSum({self.to_text()})"


def identity_sum(n_qubits: int, coeff=1.0) -> PauliSum:
    return PauliSum(n_qubits, {0: complex(coeff)})


def trace_product(a: PauliSum, b: PauliSum) -> complex:
    """Tr(A B) via Pauli orthogonality: Tr(sigma_j sigma_k) = 2^N delta_jk."""
    if a.n_qubits != b.n_qubits:
        raise SizeMismatchError("qubit counts differ")
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    acc = 0j
    for code, coeff in small._terms.items():
        other = big._terms.get(code)
        if other is not None:
            acc += coeff * other
    return acc * 2 ** a.n_qubits


# ---------------------------------------------------------------------------
# dense decomposition
# ---------------------------------------------------------------------------

# E[p, r, c] = sigma_p[c, r] / 2, the per-qubit extraction tensor for
# c_j = Tr(M sigma_j) / 2^N
_EXTRACT = np.stack([m.T / 2.0 for m in PAULI_MATS])

MAX_DECOMPOSE_QUBITS = 12


def decompose(matrix: np.ndarray, tol: float = PRUNE_TOL, require_hermitian: bool = True) -> PauliSum:
    """Expand a dense 2^N x 2^N matrix over Pauli strings.

    Coefficients are c_j = Tr(M sigma_j) / 2^N; entries below ``tol`` are
    dropped.  Cost is O(N 4^N) via a mode-wise tensor transform.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise BadDimensionError(f"expected a square matrix, got shape {matrix.shape}")
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if 2 ** n != dim:
        raise BadDimensionError(f"dimension {dim} is not a power of two")
    if n > MAX_DECOMPOSE_QUBITS:
        raise BadDimensionError(f"{n} qubits exceeds the {MAX_DECOMPOSE_QUBITS}-qubit decomposition limit")
    if require_hermitian and np.abs(matrix - matrix.conj().T).max() > 1e-10:
        raise NonHermitianError("matrix is not Hermitian within 1e-10")

    arr = matrix.reshape([2] * (2 * n))
    for k in range(n):
        # contract the leading row axis with the matching column axis
        arr = np.tensordot(arr, _EXTRACT, axes=([0, n - k], [1, 2]))
    vec = arr.reshape(-1)
    if require_hermitian:
        vec = np.where(np.abs(vec.imag) < HERMITIAN_TOL, vec.real, vec)
    return PauliSum.from_coeff_vector(n, vec, tol)


# ---------------------------------------------------------------------------
# structure coefficients
# ---------------------------------------------------------------------------

MAX_TABLE_QUBITS = 4


class StructureTable:
    """Commutators of transposed strings: [sigma_l^T, sigma_j] = F_{ljh} sigma_h.

    For Pauli strings at most one h contributes per (l, j) pair and F is purely
    imaginary, so the table stores the result code and the imaginary part.
    """

    def __init__(self, n_qubits: int):
        if n_qubits > MAX_TABLE_QUBITS:
            raise TableTooLargeError(f"structure table limited to {MAX_TABLE_QUBITS} qubits")
        self.n_qubits = n_qubits
        size = 4 ** n_qubits
        self.h_code = np.zeros((size, size), dtype=np.int64)
        self.f_imag = np.zeros((size, size), dtype=np.float64)
        t_sign = np.where(y_counts(n_qubits) % 2 == 1, -1.0, 1.0)
        for l in range(size):
            prod, ipow, anti = mul_all_codes(n_qubits, l)
            # [sigma_m, sigma_l] = 2 i^ipow sigma_prod where they anticommute;
            # flip order to get [sigma_l, sigma_j] as a function of j = m.
            coeff = 2.0 * I_POWERS[ipow]  # sigma_m sigma_l
            # sigma_l sigma_j = conj phase relation: [l, j] = -[j, l]
            self.h_code[l, anti] = prod[anti]
            self.f_imag[l, anti] = -t_sign[l] * coeff[anti].imag

    def entry(self, l: PauliString, j: PauliString):
        """(result string, F coefficient) or None when [sigma_l^T, sigma_j] = 0."""
        f = self.f_imag[l.code, j.code]
        if f == 0.0:
            return None
        return PauliString(self.n_qubits, int(self.h_code[l.code, j.code])), 1j * f

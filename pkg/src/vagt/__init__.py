"""Block- and full-diagonalization of few-qubit Hamiltonians with variational
adiabatic gauge transformations, on a built-in statevector simulator."""

__version__ = "0.1.0"

"""
Spin operators, Heisenberg chain Hamiltonians and target gates.

Basis convention: the computational basis state |s1 s2 ... sN> has index
``sum_i s_i * 2**(N - i)``, i.e. spin 1 is the leftmost (most significant)
tensor factor. Every other module relies on this ordering.

Units: hbar = 1, energies and amplitudes in units of J, times in units of 1/J.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY2 = np.eye(2, dtype=complex)

CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=complex)

SWAP = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]], dtype=complex)

SQRT_SWAP = np.array(
    [[1, 0, 0, 0],
     [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
     [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
     [0, 0, 0, 1]], dtype=complex)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class ChainSpec:
    """Isotropic Heisenberg chain of ``n_spins`` spin-1/2 sites.

    Parameters
    ----------
    n_spins : int
        Chain length, at least 1. Sizes above 4 work but are slow.
    coupling : float
        Exchange constant J (> 0).
    """

    n_spins: int
    coupling: float = 1.0

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise DomainError(f"n_spins must be a positive integer, got {self.n_spins}")
        if not self.coupling > 0:
            raise DomainError(f"coupling must be positive, got {self.coupling}")

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins


def _kron_all(factors):
    return reduce(np.kron, factors)


def is_hermitian(mat: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    mat = np.asarray(mat)
    return mat.ndim == 2 and mat.shape[0] == mat.shape[1] and bool(
        np.all(np.abs(mat - mat.conj().T) <= atol))


def is_unitary(mat: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    return bool(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) < atol)


def spin_operator(site: int, axis: str, spec: ChainSpec) -> np.ndarray:
    """Spin-1/2 operator S_{site,axis} on the full chain (``site`` is 1-based)."""
    if not 1 <= site <= spec.n_spins:
        raise DomainError(f"site {site} outside 1..{spec.n_spins}")
    if axis not in PAULI:
        raise DomainError(f"unknown axis {axis!r}")
    factors = [IDENTITY2] * spec.n_spins
    factors[site - 1] = PAULI[axis] / 2
    return _kron_all(factors)


def heisenberg_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Drift Hamiltonian J * sum_i S_i . S_{i+1} (nearest neighbours, open chain)."""
    h0 = np.zeros((spec.dim, spec.dim), dtype=complex)
    for i in range(1, spec.n_spins):
        for axis in "xyz":
            h0 += spin_operator(i, axis, spec) @ spin_operator(i + 1, axis, spec)
    h0 *= spec.coupling
    # the imaginary parts cancel exactly (S_y S_y is real); drop rounding residue
    return h0.real.astype(complex)


def control_hamiltonian(axis: str, amplitude: float, spec: ChainSpec) -> np.ndarray:
    """Zeeman term ``amplitude * S_{1,axis}`` acting on the first spin."""
    if axis not in ("x", "y"):
        raise DomainError(f"control axis must be 'x' or 'y', got {axis!r}")
    return amplitude * spin_operator(1, axis, spec)


def total_sz(spec: ChainSpec) -> np.ndarray:
    return sum(spin_operator(i, "z", spec) for i in range(1, spec.n_spins + 1))


class GateKind(str, enum.Enum):
    X_END = "X_end"
    CNOT_END = "CNOT_end"
    SQRT_SWAP_END = "SQRT_SWAP_end"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class GateTarget:
    """A target gate on an ``n_spins`` chain.

    Named kinds act on the end of the chain: ``X_end`` flips the last spin,
    ``CNOT_end`` uses spin N-1 as control and spin N as target, and
    ``SQRT_SWAP_end`` is the principal square root of SWAP on the last two
    spins. ``Custom`` carries an explicit unitary in ``matrix``.
    """

    kind: GateKind
    n_spins: int
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        if self.n_spins < 1:
            raise DomainError("n_spins must be >= 1")
        if self.kind in (GateKind.CNOT_END, GateKind.SQRT_SWAP_END) and self.n_spins < 2:
            raise DomainError(f"{self.kind.value} needs at least two spins")
        if self.kind is GateKind.CUSTOM:
            if self.matrix is None:
                raise DomainError("Custom target needs a matrix")
            mat = np.array(self.matrix, dtype=complex)
            if mat.shape != (2 ** self.n_spins, 2 ** self.n_spins):
                raise DomainError(f"custom matrix shape {mat.shape} does not match n_spins={self.n_spins}")
            if not is_unitary(mat):
                raise DomainError("custom target is not unitary")
            mat.flags.writeable = False
            object.__setattr__(self, "matrix", mat)

    @classmethod
    def custom(cls, matrix) -> "GateTarget":
        matrix = np.asarray(matrix, dtype=complex)
        n = int(round(np.log2(matrix.shape[0])))
        return cls(GateKind.CUSTOM, n, matrix)

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins


def gate_target(target: GateTarget) -> np.ndarray:
    """Dense unitary realising ``target``."""
    n = target.n_spins
    if target.kind is GateKind.CUSTOM:
        return np.array(target.matrix)
    if target.kind is GateKind.X_END:
        return np.kron(np.eye(2 ** (n - 1)), PAULI["x"])
    if n < 2:
        raise DomainError(f"{target.kind.value} needs at least two spins")
    block = CNOT if target.kind is GateKind.CNOT_END else SQRT_SWAP
    return np.kron(np.eye(2 ** (n - 2)), block)


def swap_end(n_spins: int) -> np.ndarray:
    """SWAP of the last two spins."""
    if n_spins < 2:
        raise DomainError("SWAP needs at least two spins")
    return np.kron(np.eye(2 ** (n_spins - 2)), SWAP)

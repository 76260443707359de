"""
Dynamical Lie algebras of the controlled chain by numerical commutator closure.

Skew-Hermitian d x d matrices are handled as real vectors ``[Re A, Im A]``
so that the Euclidean dot product equals ``Re tr(A^dagger B)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import ChainSpec, DomainError, heisenberg_hamiltonian, spin_operator

RANK_TOLERANCE = 1e-8
# commutators of (nearly) commuting elements are pure roundoff; ignore them
ROUNDOFF_FLOOR = 1e-10
MEMBERSHIP_TOLERANCE = 1e-8


class ClosureIncompleteError(RuntimeError):
    """Closure stopped at ``max_dim`` while directions were still being added."""


@dataclass
class LieBasis:
    dim_ambient: int
    elements: list
    complete: bool = True

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def as_vectors(self) -> np.ndarray:
        if not self.elements:
            return np.zeros((0, 2 * self.dim_ambient ** 2))
        return np.stack([_to_vec(e) for e in self.elements])


def _to_vec(mat):
    mat = np.asarray(mat, dtype=complex).reshape(-1)
    return np.concatenate([mat.real, mat.imag])


def _to_mat(vec, d):
    half = d * d
    return (vec[:half] + 1j * vec[half:]).reshape(d, d)


def _orthogonal_residual(vec, basis_vecs):
    # classical Gram-Schmidt applied twice for numerical orthogonality
    for _ in range(2):
        if basis_vecs:
            b = np.asarray(basis_vecs)
            vec = vec - b.T @ (b @ vec)
    return vec


def _is_new(mat, vecs) -> bool:
    v = _to_vec(mat)
    norm = np.linalg.norm(v)
    if norm <= ROUNDOFF_FLOOR:
        return False
    return np.linalg.norm(_orthogonal_residual(v, vecs)) > RANK_TOLERANCE * norm


def lie_closure(generators, max_dim: int | None = None) -> LieBasis:
    """Orthonormal basis of the real Lie algebra generated by ``generators``.

    A candidate direction is kept when its component orthogonal to the
    current basis exceeds ``RANK_TOLERANCE`` times its own norm. New
    elements are bracketed breadth-first against every basis element until
    a full pass adds nothing or ``max_dim`` is reached.
    """
    generators = [np.asarray(g, dtype=complex) for g in generators]
    if not generators:
        raise DomainError("need at least one generator")
    d = generators[0].shape[0]
    for g in generators:
        if g.shape != (d, d):
            raise DomainError("generators must share one square shape")
        if np.max(np.abs(g + g.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise DomainError("generators must be skew-Hermitian")
    max_dim = d * d if max_dim is None else max_dim

    vecs: list[np.ndarray] = []
    mats: list[np.ndarray] = []
    queue: deque[np.ndarray] = deque()

    def try_add(mat, scale=None) -> bool:
        v = _to_vec(mat)
        norm = np.linalg.norm(v)
        if norm == 0 or (scale is not None and norm <= ROUNDOFF_FLOOR * scale):
            return False
        r = _orthogonal_residual(v, vecs)
        rn = np.linalg.norm(r)
        if rn <= RANK_TOLERANCE * norm:
            return False
        r = r / rn
        vecs.append(r)
        m = _to_mat(r, d)
        # project back onto skew-Hermitian matrices to stop drift
        m = 0.5 * (m - m.conj().T)
        mats.append(m)
        queue.append(m)
        return True

    for g in generators:
        if len(mats) >= max_dim:
            break
        try_add(g)

    while queue and len(mats) < max_dim:
        new = queue.popleft()
        for other in list(mats):
            # basis elements have unit norm
            if try_add(new @ other - other @ new, scale=1.0) and len(mats) >= max_dim:
                break

    complete = not queue or len(mats) == d * d
    if not complete:
        complete = not any(_is_new(a @ b - b @ a, vecs) for a in queue for b in mats)
    return LieBasis(d, mats, complete)


def algebra_membership(element, basis: LieBasis):
    """Return ``(is_member, residual)`` for projection onto ``span(basis)``."""
    element = np.asarray(element, dtype=complex)
    if element.shape != (basis.dim_ambient, basis.dim_ambient):
        raise DomainError("element dimension does not match the algebra")
    v = _to_vec(element)
    b = basis.as_vectors()
    residual = float(np.linalg.norm(v - b.T @ (b @ v)))
    return residual < MEMBERSHIP_TOLERANCE, residual


def chain_generators(spec: ChainSpec, controls: str = "xy"):
    """``-i H0`` and ``-i S_1a`` for each controlled axis ``a``."""
    controls = {"XY": "xy", "XOnly": "x", "x_only": "x", "alternating_xy": "xy"}.get(controls, controls)
    if controls not in ("xy", "x"):
        raise DomainError(f"unknown control set {controls!r}")
    gens = [-1j * heisenberg_hamiltonian(spec)]
    gens += [-1j * spin_operator(1, axis, spec) for axis in controls]
    return gens


@dataclass
class ControllabilityVerdict:
    n_spins: int
    controls: str
    dimension: int
    hilbert_dim: int
    fully_controllable: bool

    @property
    def algebra(self) -> str:
        d2 = self.hilbert_dim ** 2
        if self.dimension == d2 - 1:
            return f"su({self.hilbert_dim})"
        if self.dimension == d2:
            return f"u({self.hilbert_dim})"
        return "proper subalgebra"


def full_controllability_check(spec: ChainSpec, controls: str = "xy",
                               max_dim: int | None = None) -> ControllabilityVerdict:
    """Closure dimension of the chain algebra and whether it is all of su(d)/u(d)."""
    gens = chain_generators(spec, controls)
    basis = lie_closure(gens, max_dim)
    if not basis.complete:
        raise ClosureIncompleteError(
            f"closure reached max_dim={basis.dimension} before saturating")
    d = spec.dim
    full = basis.dimension >= d * d - 1
    label = "xy" if len(gens) == 3 else "x"
    return ControllabilityVerdict(spec.n_spins, label, basis.dimension, d, full)

"""
Time evolution under piecewise-constant and sampled control fields.

Each pulse propagator ``exp(-i H T)`` is built from the spectral form of the
(constant) pulse Hamiltonian. The y-axis pulse Hamiltonians are obtained from
x-axis ones by a global rotation about z (the isotropic drift is invariant
under it), so the hot path only ever diagonalises real symmetric matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import (
    HERMITIAN_ATOL,
    ChainSpec,
    DomainError,
    heisenberg_hamiltonian,
    spin_operator,
    total_sz,
)


class ControlMode(str, enum.Enum):
    ALTERNATING_XY = "alternating_xy"
    X_ONLY = "x_only"


@dataclass(frozen=True)
class ControlSequence:
    """Piecewise-constant control on the first spin.

    ``amplitudes[k]`` is applied during ``[k T, (k+1) T)``. In alternating
    mode the pulses are consumed in the order x1, y1, x2, y2, ...
    """

    spec: ChainSpec
    mode: ControlMode
    pulse_duration: float
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mode", ControlMode(self.mode))
        amps = np.array(self.amplitudes, dtype=float).reshape(-1)
        if amps.size < 1:
            raise DomainError("a control sequence needs at least one pulse")
        if not self.pulse_duration > 0:
            raise DomainError(f"pulse duration must be positive, got {self.pulse_duration}")
        if self.mode is ControlMode.ALTERNATING_XY and amps.size % 2:
            raise DomainError("alternating x/y control needs an even number of pulses")
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "pulse_duration", float(self.pulse_duration))

    @classmethod
    def zeros(cls, spec, mode, n_pulses, pulse_duration):
        return cls(spec, mode, pulse_duration, np.zeros(n_pulses))

    @property
    def n_pulses(self) -> int:
        return self.amplitudes.size

    @property
    def total_time(self) -> float:
        return self.n_pulses * self.pulse_duration

    @property
    def y_mask(self) -> np.ndarray:
        """Boolean mask of pulses applied along y."""
        mask = np.zeros(self.n_pulses, dtype=bool)
        if self.mode is ControlMode.ALTERNATING_XY:
            mask[1::2] = True
        return mask

    def axes(self) -> list[str]:
        return ["y" if m else "x" for m in self.y_mask]

    def with_amplitudes(self, amplitudes) -> "ControlSequence":
        return ControlSequence(self.spec, self.mode, self.pulse_duration, amplitudes)

    def field_components(self):
        """Per-pulse (h_x, h_y) arrays, zero where the other axis is active."""
        hx = np.where(self.y_mask, 0.0, self.amplitudes)
        hy = np.where(self.y_mask, self.amplitudes, 0.0)
        return hx, hy


class EigenSystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eigendecompose(hamiltonian: np.ndarray) -> EigenSystem:
    """Spectral decomposition of a Hermitian matrix (ascending eigenvalues)."""
    hamiltonian = np.asarray(hamiltonian)
    if hamiltonian.ndim != 2 or hamiltonian.shape[0] != hamiltonian.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {hamiltonian.shape}")
    if np.max(np.abs(hamiltonian - hamiltonian.conj().T), initial=0.0) > HERMITIAN_ATOL:
        raise DomainError("matrix is not Hermitian")
    if np.iscomplexobj(hamiltonian) and not np.any(hamiltonian.imag):
        hamiltonian = hamiltonian.real
    vals, vecs = np.linalg.eigh(hamiltonian)
    return EigenSystem(vals, vecs.astype(complex))


def propagator_from_eigen(vals: np.ndarray, vecs: np.ndarray, duration: float) -> np.ndarray:
    """``V diag(exp(-i vals t)) V^dagger``; broadcasts over leading axes."""
    phases = np.exp(-1j * vals * duration)
    return (vecs * phases[..., None, :]) @ np.swapaxes(vecs, -1, -2).conj()


def propagator_step(hamiltonian: np.ndarray, duration: float) -> np.ndarray:
    """``exp(-i H duration)`` for constant Hermitian ``H``."""
    if duration < 0:
        raise DomainError(f"duration must be non-negative, got {duration}")
    vals, vecs = eigendecompose(hamiltonian)
    return propagator_from_eigen(vals, vecs, duration)


def ordered_product(stack: np.ndarray) -> np.ndarray:
    """``stack[-1] @ ... @ stack[1] @ stack[0]`` by pairwise reduction."""
    mats = np.asarray(stack)
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            last = mats[-1:]
            mats = mats[:-1]
        else:
            last = None
        mats = mats[1::2] @ mats[0::2]
        if last is not None:
            mats = np.concatenate([mats, last])
    return mats[0]


class ChainOperators:
    """Cached drift/control matrices for one chain.

    Cheap to build; instances are read-only after construction.
    """

    _cache: dict = {}

    def __init__(self, spec: ChainSpec):
        self.spec = spec
        self.dim = spec.dim
        self.h0 = heisenberg_hamiltonian(spec).real
        self.sx = spin_operator(1, "x", spec).real
        self.sy = spin_operator(1, "y", spec)
        # exp(-i pi/2 Sz_tot) maps S_1x to S_1y and leaves the drift invariant
        self.rot = np.exp(-0.5j * np.pi * np.diag(total_sz(spec)).real)

    @classmethod
    def get(cls, spec: ChainSpec) -> "ChainOperators":
        ops = cls._cache.get(spec)
        if ops is None:
            ops = cls._cache[spec] = cls(spec)
        return ops

    def x_eigen(self, amplitudes: np.ndarray):
        """Eigen-decompositions of ``H0 + h S_1x`` for each ``h`` (real symmetric)."""
        amplitudes = np.asarray(amplitudes, dtype=float)
        hams = self.h0 + amplitudes[:, None, None] * self.sx
        return np.linalg.eigh(hams)

    def rotate_to_y(self, mats: np.ndarray) -> np.ndarray:
        """Conjugate x-pulse matrices into the corresponding y-pulse ones."""
        return self.rot[:, None] * mats * self.rot.conj()[None, :]

    def pulse_propagators(self, h_x, h_y, duration: float) -> np.ndarray:
        """Propagators of ``H0 + h_x S_1x + h_y S_1y`` for mixed fields.

        Pure-x and pure-y steps use the real fast path; steps with both
        components fall back to complex diagonalisation.
        """
        h_x = np.asarray(h_x, dtype=float)
        h_y = np.asarray(h_y, dtype=float)
        out = np.empty((h_x.size, self.dim, self.dim), dtype=complex)
        both = (h_x != 0) & (h_y != 0)
        only_y = (h_y != 0) & ~both
        only_x = ~both & ~only_y
        if only_x.any():
            vals, vecs = self.x_eigen(h_x[only_x])
            out[only_x] = propagator_from_eigen(vals, vecs, duration)
        if only_y.any():
            vals, vecs = self.x_eigen(h_y[only_y])
            out[only_y] = self.rotate_to_y(propagator_from_eigen(vals, vecs, duration))
        if both.any():
            hams = (self.h0 + h_x[both, None, None] * self.sx
                    + h_y[both, None, None] * self.sy)
            vals, vecs = np.linalg.eigh(hams)
            out[both] = propagator_from_eigen(vals, vecs, duration)
        return out


def sequence_propagators(seq: ControlSequence) -> np.ndarray:
    """Stack of the individual pulse propagators, in time order."""
    ops = ChainOperators.get(seq.spec)
    vals, vecs = ops.x_eigen(seq.amplitudes)
    props = propagator_from_eigen(vals, vecs, seq.pulse_duration)
    ymask = seq.y_mask
    if ymask.any():
        props[ymask] = ops.rotate_to_y(props[ymask])
    return props


def evolve_sequence(seq: ControlSequence) -> np.ndarray:
    """Full propagator ``U(t_f)``; the earliest pulse is the right-most factor."""
    return ordered_product(sequence_propagators(seq))


def gate_fidelity(unitary: np.ndarray, target: np.ndarray) -> float:
    """Phase-insensitive gate fidelity ``|tr(U^dagger W)| / d``."""
    unitary = np.asarray(unitary)
    target = np.asarray(target)
    if unitary.shape != target.shape or unitary.ndim != 2:
        raise DomainError(f"shape mismatch: {unitary.shape} vs {target.shape}")
    return float(abs(np.vdot(unitary, target)) / unitary.shape[0])


@dataclass(frozen=True)
class SampledField:
    """Time-continuous control field on ``[0, n_pulses * pulse_duration]``.

    ``hx`` and ``hy`` are vectorised callables of time. ``step`` is the
    product-formula step and has to divide ``pulse_duration``.
    """

    hx: Callable[[np.ndarray], np.ndarray]
    hy: Callable[[np.ndarray], np.ndarray]
    n_pulses: int
    pulse_duration: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f"step must be positive, got {self.step}")
        self.steps_per_pulse  # validates divisibility

    @property
    def total_time(self) -> float:
        return self.n_pulses * self.pulse_duration

    @property
    def steps_per_pulse(self) -> int:
        m = int(round(self.pulse_duration / self.step))
        if m < 1 or abs(m * self.step - self.pulse_duration) > 1e-12 * self.pulse_duration:
            raise DomainError(
                f"step {self.step} does not divide pulse duration {self.pulse_duration}")
        return m

    def with_step(self, step: float) -> "SampledField":
        return SampledField(self.hx, self.hy, self.n_pulses, self.pulse_duration, step)

    def sample_times(self) -> np.ndarray:
        m_total = self.n_pulses * self.steps_per_pulse
        tau = self.pulse_duration / self.steps_per_pulse
        return np.arange(m_total) * tau


def piecewise_field(seq: ControlSequence, steps_per_pulse: int = 1) -> SampledField:
    """The unfiltered piecewise-constant field of ``seq`` as a SampledField."""
    hx_pulses, hy_pulses = seq.field_components()
    duration = seq.pulse_duration

    def lookup(values):
        def fn(t):
            idx = np.clip(np.floor(np.asarray(t) / duration + 1e-9).astype(int),
                          0, seq.n_pulses - 1)
            return values[idx]
        return fn

    return SampledField(lookup(hx_pulses), lookup(hy_pulses), seq.n_pulses,
                        duration, duration / steps_per_pulse)


def product_formula_evolve(field: SampledField, spec: ChainSpec, sampling: str = "left") -> np.ndarray:
    """Time-ordered product of ``exp(-i H_k tau)`` over all steps.

    ``sampling="left"`` evaluates the field at ``k tau`` (first order in
    tau); ``"midpoint"`` evaluates it at ``(k + 1/2) tau`` (second order).
    Both are exact for fields that are constant on every step.
    """
    m = field.steps_per_pulse
    tau = field.pulse_duration / m
    times = np.arange(field.n_pulses * m) * tau
    if sampling == "midpoint":
        times = times + 0.5 * tau
    elif sampling != "left":
        raise DomainError(f"unknown sampling rule {sampling!r}")
    hx = np.asarray(field.hx(times), dtype=float)
    hy = np.asarray(field.hy(times), dtype=float)
    props = ChainOperators.get(spec).pulse_propagators(hx, hy, tau)
    return ordered_product(props)

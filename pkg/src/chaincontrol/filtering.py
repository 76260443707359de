"""
Spectral filtering of piecewise-constant control fields.

A box pulse of height h on [a, b] passed through an ideal low-pass filter of
cut-off w0 becomes ``(h / pi) [Si(w0 (b - t)) - Si(w0 (a - t))]``; through a
unit-gain Gaussian window ``exp(-gamma w^2)`` it becomes
``(h / 2) [erf((b - t) / (2 sqrt(gamma))) - erf((a - t) / (2 sqrt(gamma)))]``.
Both filtered fields are evaluated in closed form and are treated as zero
outside [0, t_f].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .core import DomainError
from .optimizer import OptimizerConfig, bfgs_maximize, objective, _target_matrix
from .propagation import ControlSequence, SampledField, gate_fidelity, product_formula_evolve

INITIAL_STEPS_PER_PULSE = 20
MAX_STEPS_PER_PULSE = 320
STEP_TOLERANCE = 1e-6


def si(x):
    """Sine integral Si(x) = int_0^x sin(t)/t dt."""
    return special.sici(x)[0]


def erf(x):
    return special.erf(x)


@dataclass(frozen=True)
class IdealLowPass:
    """Keeps frequencies in [-cutoff, cutoff] (units of J)."""

    cutoff: float

    def __post_init__(self):
        if self.cutoff < 0:
            raise DomainError("cut-off frequency must be >= 0")

    def describe(self) -> dict:
        return {"kind": "lowpass", "cutoff": self.cutoff}


@dataclass(frozen=True)
class GaussianFilter:
    """Unit-gain window ``exp(-gamma w^2)`` centred at zero frequency."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")

    @classmethod
    def from_fwhm(cls, fwhm: float) -> "GaussianFilter":
        if not fwhm > 0:
            raise DomainError("FWHM must be positive")
        return cls(4 * math.log(2) / fwhm ** 2)

    @property
    def fwhm(self) -> float:
        return 2 * math.sqrt(math.log(2) / self.gamma)

    def describe(self) -> dict:
        return {"kind": "gaussian", "gamma": self.gamma, "fwhm": self.fwhm}


def power_spectrum(seq: ControlSequence, omega):
    """``(|F[h_x](w)|^2, |F[h_y](w)|^2)`` with ``F[h](w) = int h(t) exp(-i w t) dt``."""
    omega = np.asarray(omega, dtype=float)
    edges = np.arange(seq.n_pulses + 1) * seq.pulse_duration
    out = []
    for comp in seq.field_components():
        w = omega.reshape(-1, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = (np.exp(-1j * w * edges[:-1]) - np.exp(-1j * w * edges[1:])) / (1j * w)
        kernel = np.where(w == 0, seq.pulse_duration, kernel)
        spec = kernel @ comp
        out.append((np.abs(spec) ** 2).reshape(omega.shape))
    return tuple(out)


def _edge_field(seq: ControlSequence, edge_fn, prefactor: float):
    """Field ``prefactor * sum_k h_k [g((k+1)T - t) - g(kT - t)]`` per axis."""
    edges = np.arange(seq.n_pulses + 1) * seq.pulse_duration
    hx, hy = seq.field_components()

    def make(comp):
        def fn(t):
            t = np.asarray(t, dtype=float)
            g = edge_fn(edges - t[..., None])
            return prefactor * (np.diff(g, axis=-1) @ comp)
        return fn

    return make(hx), make(hy)


def lowpass_filtered_field(seq: ControlSequence, cutoff: float,
                           steps_per_pulse: int = INITIAL_STEPS_PER_PULSE) -> SampledField:
    IdealLowPass(cutoff)
    hx, hy = _edge_field(seq, lambda s: si(cutoff * s), 1 / np.pi)
    return SampledField(hx, hy, seq.n_pulses, seq.pulse_duration,
                        seq.pulse_duration / steps_per_pulse)


def gaussian_filtered_field(seq: ControlSequence, gamma: float,
                            steps_per_pulse: int = INITIAL_STEPS_PER_PULSE) -> SampledField:
    GaussianFilter(gamma)
    scale = 1 / (2 * math.sqrt(gamma))
    hx, hy = _edge_field(seq, lambda s: erf(scale * s), 0.5)
    return SampledField(hx, hy, seq.n_pulses, seq.pulse_duration,
                        seq.pulse_duration / steps_per_pulse)


def filtered_field(seq: ControlSequence, filt, steps_per_pulse: int = INITIAL_STEPS_PER_PULSE):
    if isinstance(filt, IdealLowPass):
        return lowpass_filtered_field(seq, filt.cutoff, steps_per_pulse)
    if isinstance(filt, GaussianFilter):
        return gaussian_filtered_field(seq, filt.gamma, steps_per_pulse)
    raise DomainError(f"unknown filter {filt!r}")


@dataclass
class FilterReport:
    filter: object
    original_fidelity: float
    filtered_fidelity: float
    step: float
    converged: bool
    trace: list[tuple[float, float]] = field(default_factory=list)


def converged_field_fidelity(fld: SampledField, spec, target,
                             initial_steps: int = INITIAL_STEPS_PER_PULSE,
                             max_steps: int = MAX_STEPS_PER_PULSE,
                             tol: float = STEP_TOLERANCE, sampling: str = "midpoint"):
    """Product-formula fidelity, halving the step until it changes by < ``tol``.

    Midpoint sampling is the default because the left-point rule converges
    only linearly and rarely meets ``tol`` before ``max_steps``.
    Returns ``(fidelity, step, converged, trace)``.
    """
    w = _target_matrix(target)
    m = initial_steps
    trace = []
    prev = None
    while True:
        step = fld.pulse_duration / m
        f = gate_fidelity(product_formula_evolve(fld.with_step(step), spec, sampling), w)
        trace.append((step, f))
        if prev is not None and abs(f - prev) < tol:
            return f, step, True, trace
        if 2 * m > max_steps:
            return f, step, False, trace
        prev = f
        m *= 2


def filtered_fidelity(seq: ControlSequence, filt, target) -> FilterReport:
    """Fidelity of the filtered version of ``seq`` against ``target``."""
    fld = filtered_field(seq, filt)
    f, step, ok, trace = converged_field_fidelity(fld, seq.spec, target)
    return FilterReport(filt, objective(seq, target), f, step, ok, trace)


@dataclass
class CutoffCurve:
    cutoffs: np.ndarray
    fidelities: np.ndarray
    mean_abs_amplitude: float
    abs_amplitude_variance: float

    def first_drop_below(self, level: float = 0.9) -> float | None:
        """Largest cut-off at which the fidelity is below ``level`` (None if never)."""
        below = np.nonzero(self.fidelities < level)[0]
        return float(self.cutoffs[below[-1]]) if below.size else None


def amplitude_statistics(seq: ControlSequence):
    """Mean absolute amplitude and variance of the absolute amplitudes about it."""
    a = np.abs(seq.amplitudes)
    mean = float(a.mean())
    return mean, float(np.mean((a - mean) ** 2))


def fidelity_vs_cutoff(seq: ControlSequence, target, cutoffs) -> CutoffCurve:
    cutoffs = np.asarray(cutoffs, dtype=float)
    if np.any(np.diff(cutoffs) <= 0):
        raise DomainError("cut-off grid must be ascending")
    fids = np.array([filtered_fidelity(seq, IdealLowPass(c), target).filtered_fidelity
                     for c in cutoffs])
    mean, var = amplitude_statistics(seq)
    return CutoffCurve(cutoffs, fids, mean, var)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def resample_to_pulses(fld: SampledField, seq: ControlSequence) -> ControlSequence:
    """Average the active-axis filtered field over each pulse interval."""
    T = seq.pulse_duration
    starts = np.arange(seq.n_pulses) * T
    times = starts[:, None] + 0.5 * T * (_GL_NODES + 1)
    wts = 0.5 * _GL_WEIGHTS
    avg_x = fld.hx(times) @ wts
    avg_y = fld.hy(times) @ wts
    return seq.with_amplitudes(np.where(seq.y_mask, avg_y, avg_x))


@dataclass
class IterationRound:
    round: int
    resampled_fidelity: float
    optimized_fidelity: float
    filtered_fidelity: float
    filter_converged: bool
    sequence: ControlSequence = field(repr=False)


def iterate_filter_optimize(seq: ControlSequence, target, filt, rounds: int,
                            cfg: OptimizerConfig = OptimizerConfig()) -> list[IterationRound]:
    """Filter, discretise, re-optimise and filter again, ``rounds`` times.

    Each re-optimisation is a single BFGS run started from the discretised
    filtered field.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    single = replace(cfg, n_restarts=1)
    current = seq
    out = []
    for r in range(rounds):
        start = resample_to_pulses(filtered_field(current, filt), current)
        report = bfgs_maximize(start, target, single)
        current = report.best_sequence
        fr = filtered_fidelity(current, filt, target)
        out.append(IterationRound(r + 1, objective(start, target), report.best_fidelity,
                                  fr.filtered_fidelity, fr.converged, current))
    return out

"""
Monte-Carlo robustness of control sequences against static amplitude errors.

Each sample adds one uniform draw on ``[-delta, delta]`` to every pulse
amplitude. Sample ``i`` always uses the PCG64 stream seeded by
``SeedSequence(seed, spawn_key=(i,))``, and draws are generated on
``[-1, 1]`` and scaled by ``delta``. Curves over a delta grid therefore reuse
the same underlying random numbers (common random numbers), which keeps them
smooth and exactly reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import DomainError, GateTarget, gate_target
from .propagation import ChainOperators, ControlSequence, propagator_from_eigen

DEFAULT_SAMPLES = 1000


@dataclass(frozen=True)
class NoiseModel:
    halfwidth: float
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.halfwidth < 0:
            raise DomainError("noise halfwidth must be >= 0")
        if self.n_samples < 1:
            raise DomainError("n_samples must be >= 1")


@dataclass
class SensitivityReport:
    delta_grid: np.ndarray
    mean_fidelity: np.ndarray
    std_fidelity: np.ndarray
    n_samples: int
    seed: int
    fingerprint: str

    def rows(self):
        for d, m, s in zip(self.delta_grid, self.mean_fidelity, self.std_fidelity):
            yield float(d), float(m), float(s), self.n_samples


def default_delta_grid() -> np.ndarray:
    """0 followed by 30 log-spaced points on [1e-3, 10]."""
    return np.concatenate([[0.0], np.logspace(-3, 1, 30)])


def sample_rng(seed: int, sample: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(sample,))))


def unit_draws(n_pulses: int, n_samples: int, seed: int) -> np.ndarray:
    """Uniform draws on [-1, 1], one row per sample."""
    return np.stack([sample_rng(seed, i).uniform(-1.0, 1.0, n_pulses)
                     for i in range(n_samples)])


def perturb_sequence(seq: ControlSequence, delta: float, draw_index: int,
                     seed: int = 0) -> ControlSequence:
    """``seq`` with each amplitude shifted by an independent uniform error."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    noise = sample_rng(seed, draw_index).uniform(-1.0, 1.0, seq.n_pulses)
    return seq.with_amplitudes(seq.amplitudes + delta * noise)


def batch_traces(seq: ControlSequence, target, amplitude_rows: np.ndarray,
                 chunk: int = 128) -> np.ndarray:
    """``tr(W^dagger U)`` for each row of amplitudes, sharing the structure of ``seq``."""
    w = gate_target(target) if isinstance(target, GateTarget) else np.asarray(target)
    ops = ChainOperators.get(seq.spec)
    ymask = seq.y_mask
    amplitude_rows = np.atleast_2d(amplitude_rows)
    n_rows, n_pulses = amplitude_rows.shape
    out = np.empty(n_rows, dtype=complex)
    for start in range(0, n_rows, chunk):
        block = amplitude_rows[start:start + chunk]
        vals, vecs = ops.x_eigen(block.reshape(-1))
        props = propagator_from_eigen(vals, vecs, seq.pulse_duration)
        props = props.reshape(block.shape[0], n_pulses, ops.dim, ops.dim)
        if ymask.any():
            props[:, ymask] = ops.rotate_to_y(props[:, ymask])
        u = props[:, 0]
        for k in range(1, n_pulses):
            u = props[:, k] @ u
        out[start:start + block.shape[0]] = np.einsum("ij,bij->b", w.conj(), u)
    return out


def batch_fidelities(seq: ControlSequence, target, amplitude_rows: np.ndarray,
                     chunk: int = 128) -> np.ndarray:
    """Gate fidelity ``|tr(W^dagger U)| / d`` for each row of amplitudes."""
    return np.abs(batch_traces(seq, target, amplitude_rows, chunk)) / seq.spec.dim


def batch_average_gate_fidelities(seq: ControlSequence, target, amplitude_rows: np.ndarray,
                                  chunk: int = 128) -> np.ndarray:
    """State-averaged gate fidelity ``(|tr(W^dagger U)|^2 + d) / (d (d + 1))`` per row.

    Unlike ``|tr| / d``, its mean over Haar-random unitaries is exactly ``1/d``.
    """
    d = seq.spec.dim
    tr = batch_traces(seq, target, amplitude_rows, chunk)
    return (np.abs(tr) ** 2 + d) / (d * (d + 1))


def _mean_std(values: np.ndarray):
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return mean, std


def average_fidelity_under_noise(seq: ControlSequence, target, noise: NoiseModel):
    """Sample mean and sample standard deviation of the fidelity under noise."""
    draws = unit_draws(seq.n_pulses, noise.n_samples, noise.seed)
    fids = batch_fidelities(seq, target, seq.amplitudes + noise.halfwidth * draws)
    return _mean_std(fids)


def average_gate_fidelity_under_noise(seq: ControlSequence, target, noise: NoiseModel):
    """Like ``average_fidelity_under_noise`` but for the state-averaged gate fidelity."""
    draws = unit_draws(seq.n_pulses, noise.n_samples, noise.seed)
    vals = batch_average_gate_fidelities(seq, target, seq.amplitudes + noise.halfwidth * draws)
    return _mean_std(vals)


def saturation_value(d: int) -> float:
    """Average gate fidelity of a fully depolarising channel, 1/d."""
    if d < 2:
        raise DomainError("dimension must be >= 2")
    return 1.0 / d


def sequence_fingerprint(seq: ControlSequence) -> str:
    h = hashlib.sha256()
    h.update(f"{seq.spec.n_spins}|{seq.spec.coupling!r}|{seq.mode.value}|"
             f"{seq.pulse_duration!r}|".encode())
    h.update(np.ascontiguousarray(seq.amplitudes, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def sensitivity_sweep(seq: ControlSequence, target, delta_grid=None,
                      noise: NoiseModel = NoiseModel(0.0)) -> SensitivityReport:
    """Average fidelity and its spread over a grid of noise half-widths.

    ``noise`` supplies the sample count and seed; its halfwidth is ignored.
    """
    grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, dtype=float)
    if grid.size == 0 or grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("delta grid must be ascending and start at 0")
    draws = unit_draws(seq.n_pulses, noise.n_samples, noise.seed)
    means, stds = [], []
    for delta in grid:
        if delta == 0:
            f0 = batch_fidelities(seq, target, seq.amplitudes)[0]
            m, s = f0, 0.0
        else:
            m, s = _mean_std(batch_fidelities(seq, target, seq.amplitudes + delta * draws))
        means.append(m)
        stds.append(s)
    return SensitivityReport(grid, np.array(means), np.array(stds), noise.n_samples,
                             noise.seed, sequence_fingerprint(seq))

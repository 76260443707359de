"""Spectra of optimal fields and what low-pass / Gaussian filtering does to them."""
import numpy as np
from scipy.integrate import trapezoid

from chaincontrol import GaussianFilter, IdealLowPass, filtered_fidelity, load_optimum, power_spectrum
from chaincontrol.filtering import amplitude_statistics, fidelity_vs_cutoff

seq, target, _ = load_optimum("x3_T0.5")

# Power spectrum of each field component; most weight sits below a few J.
omega = np.linspace(0, 20, 2001)
px, py = power_spectrum(seq, omega)
total = trapezoid(px + py, omega)
for w in (1, 2, 5, 10):
    frac = trapezoid((px + py)[omega <= w], omega[omega <= w]) / total
    print(f"fraction of spectral weight below {w:2d} J: {frac:.3f}")

# Filtered fields are evaluated in closed form and propagated with a
# product formula whose step is halved until the fidelity settles.
for filt in (IdealLowPass(np.pi / 2), IdealLowPass(4.0), GaussianFilter.from_fwhm(4.3)):
    rep = filtered_fidelity(seq, filt, target)
    print(filt.describe(), f"F: {rep.original_fidelity:.6f} -> {rep.filtered_fidelity:.4f}",
          f"(step {rep.step:.4g}, converged={rep.converged})")

# Rule of thumb: keep the cut-off above twice the mean |h|.
mean_abs, _ = amplitude_statistics(seq)
curve = fidelity_vs_cutoff(seq, target, mean_abs * np.array([0.5, 1.0, 2.0, 3.0, 4.0]))
for c, f in zip(curve.cutoffs, curve.fidelities):
    print(f"cut-off {c:6.3f} ({c / mean_abs:.1f} <|h|>): F={f:.4f}")

import numpy as np
import pytest
from scipy.linalg import expm

from chaincontrol.core import ChainSpec, DomainError, GateTarget, heisenberg_hamiltonian
from chaincontrol.optimizer import (
    OptimizerConfig,
    UndefinedGradientError,
    bfgs_maximize,
    fidelity_gradient,
    minimal_time_scan,
    objective,
    optimize_gate,
)
from chaincontrol.propagation import ControlSequence, evolve_sequence


def central_difference(seq, target, step=1e-5):
    out = np.empty(seq.n_pulses)
    for k in range(seq.n_pulses):
        e = np.zeros(seq.n_pulses)
        e[k] = step
        out[k] = (objective(seq.with_amplitudes(seq.amplitudes + e), target)
                  - objective(seq.with_amplitudes(seq.amplitudes - e), target)) / (2 * step)
    return out


@pytest.mark.parametrize("h,T", [(0.3, 1.0), (2.1, 0.7), (-1.5, 2.5), (4.0, 1.2)])
def test_single_spin_rotation(h, T):
    seq = ControlSequence(ChainSpec(1), "x_only", T, [h])
    target = GateTarget("X_end", 1)
    assert objective(seq, target) == pytest.approx(abs(np.sin(h * T / 2)), abs=1e-14)
    expected = (T / 2) * np.cos(h * T / 2) * np.sign(np.sin(h * T / 2))
    assert fidelity_gradient(seq, target)[0] == pytest.approx(expected, abs=1e-13)


def test_free_evolution_target(chain3):
    seq = ControlSequence.zeros(chain3, "alternating_xy", 8, 0.75)
    target = GateTarget.custom(expm(-6j * heisenberg_hamiltonian(chain3)))
    assert objective(seq, target) == pytest.approx(1.0, abs=1e-13)


def test_objective_bounded(rng, chain3, x3):
    for _ in range(50):
        seq = ControlSequence(chain3, "alternating_xy", 0.5, rng.uniform(-5, 5, 8))
        assert 0 <= objective(seq, x3) <= 1


def test_gradient_matches_finite_differences(rng, chain3, x3):
    seq = ControlSequence(chain3, "alternating_xy", 0.8, rng.uniform(-2, 2, 6))
    g = fidelity_gradient(seq, x3)
    fd = central_difference(seq, x3)
    assert np.all(np.abs(g - fd) <= 1e-6 * np.abs(fd) + 1e-10)


def test_gradient_vanishes_at_perfect_fidelity(rng, chain3):
    seq = ControlSequence(chain3, "alternating_xy", 0.5, rng.uniform(-2, 2, 10))
    target = GateTarget.custom(evolve_sequence(seq))
    assert np.max(np.abs(fidelity_gradient(seq, target))) < OptimizerConfig().gradient_tolerance


def test_gradient_undefined_at_zero_fidelity():
    seq = ControlSequence(ChainSpec(1), "x_only", 1.0, [0.0])
    with pytest.raises(UndefinedGradientError):
        fidelity_gradient(seq, GateTarget("X_end", 1))


def test_bfgs_recovers_from_zero_fidelity_start():
    seq = ControlSequence(ChainSpec(1), "x_only", 1.0, [0.0])
    rep = bfgs_maximize(seq, GateTarget("X_end", 1), OptimizerConfig(n_restarts=1))
    assert rep.best_fidelity > 1 - 1e-8


def test_bfgs_trace_monotone_and_deterministic():
    cfg = OptimizerConfig(n_restarts=3, seed=11, max_iterations=300)
    target = GateTarget("CNOT_end", 2)
    a = optimize_gate(target, "alternating_xy", 20, 12.0, cfg)
    b = optimize_gate(target, "alternating_xy", 20, 12.0, cfg)
    for r in a.per_restart:
        assert np.all(np.diff(r.trace) >= 0)
    assert a.best_fidelity == b.best_fidelity
    assert np.array_equal(a.best_sequence.amplitudes, b.best_sequence.amplitudes)
    assert a.best_fidelity == max(r.fidelity for r in a.per_restart)
    assert a.best_fidelity > 0.999


def test_parallel_restarts_match_serial():
    cfg = OptimizerConfig(n_restarts=3, seed=5, max_iterations=100)
    target = GateTarget("X_end", 2)
    serial = optimize_gate(target, "x_only", 10, 6.0, cfg)
    threaded = optimize_gate(target, "x_only", 10, 6.0, cfg, workers=3)
    assert [r.fidelity for r in serial.per_restart] == [r.fidelity for r in threaded.per_restart]


def test_already_optimal_start_returns_immediately(rng, chain3):
    seq = ControlSequence(chain3, "alternating_xy", 0.5, rng.uniform(-2, 2, 10))
    target = GateTarget.custom(evolve_sequence(seq))
    rep = bfgs_maximize(seq, target, OptimizerConfig(n_restarts=1))
    assert rep.per_restart[0].iterations == 0
    assert np.array_equal(rep.best_sequence.amplitudes, seq.amplitudes)


def test_target_size_mismatch(chain3):
    seq = ControlSequence.zeros(chain3, "x_only", 4, 1.0)
    with pytest.raises(DomainError):
        bfgs_maximize(seq, GateTarget("X_end", 2))


def test_config_validation():
    with pytest.raises(DomainError):
        OptimizerConfig(fidelity_goal=1.5)
    with pytest.raises(DomainError):
        OptimizerConfig(n_restarts=0)


def test_minimal_time_scan_two_spins():
    cfg = OptimizerConfig(n_restarts=4, max_iterations=300)
    rows = minimal_time_scan(GateTarget("X_end", 2), "alternating_xy", 20, [0.5, 8.0], cfg)
    assert [t for t, _ in rows] == [0.5, 8.0]
    assert rows[0][1] < 0.9
    assert rows[1][1] > 0.999
    with pytest.raises(DomainError):
        minimal_time_scan(GateTarget("X_end", 2), "x_only", 4, [2.0, 1.0], cfg)


def test_report_dict_round_trip(chain3, x3):
    rep = optimize_gate(x3, "alternating_xy", 4, 2.0, OptimizerConfig(n_restarts=2, max_iterations=5))
    d = rep.to_dict()
    assert d["n_pulses"] == 4 and len(d["amplitudes"]) == 4
    assert d["seed"] == 0 and d["config"]["n_restarts"] == 2
    assert len(d["per_restart"]) == 2

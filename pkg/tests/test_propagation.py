import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from chaincontrol.core import (
    ChainSpec, DomainError, GateTarget, gate_target, heisenberg_hamiltonian, is_unitary,
    spin_operator, swap_end,
)
from chaincontrol.propagation import (
    ChainOperators,
    ControlSequence,
    SampledField,
    eigendecompose,
    evolve_sequence,
    gate_fidelity,
    piecewise_field,
    product_formula_evolve,
    propagator_step,
)


def expm_product(seq):
    """Reference propagator from dense matrix exponentials."""
    spec = seq.spec
    h0 = heisenberg_hamiltonian(spec)
    u = np.eye(spec.dim, dtype=complex)
    for axis, h in zip(seq.axes(), seq.amplitudes):
        u = expm(-1j * seq.pulse_duration * (h0 + h * spin_operator(1, axis, spec))) @ u
    return u


def test_eigendecompose_diag():
    vals, vecs = eigendecompose(np.diag([1.0, -1.0]))
    assert np.allclose(vals, [-1, 1])
    assert np.allclose(np.abs(vecs), [[0, 1], [1, 0]])


def test_eigendecompose_sigma_x():
    vals, vecs = eigendecompose(np.array([[0, 1], [1, 0]]))
    assert np.allclose(vals, [-1, 1])
    assert np.isclose(abs(np.vdot(vecs[:, 0], [1, -1])) / np.sqrt(2), 1)
    assert np.isclose(abs(np.vdot(vecs[:, 1], [1, 1])) / np.sqrt(2), 1)


def test_eigendecompose_heisenberg_pair():
    vals, _ = eigendecompose(heisenberg_hamiltonian(ChainSpec(2)))
    assert np.allclose(vals, [-0.75, 0.25, 0.25, 0.25])


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(DomainError):
        eigendecompose(np.array([[0, 1], [0, 0]]))


def test_eigen_reconstruction_complex(rng):
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = a + a.conj().T
    vals, vecs = eigendecompose(h)
    assert np.max(np.abs(vecs @ np.diag(vals) @ vecs.conj().T - h)) < 1e-10
    assert np.all(np.diff(vals) >= 0)


def test_propagator_step_basic():
    assert np.allclose(propagator_step(np.zeros((4, 4)), 3.3), np.eye(4))
    h, t = 1.7, 0.9
    u = propagator_step(h * spin_operator(1, "z", ChainSpec(1)), t)
    assert np.allclose(u, np.diag([np.exp(-0.5j * h * t), np.exp(0.5j * h * t)]))
    with pytest.raises(DomainError):
        propagator_step(np.zeros((2, 2)), -1.0)


def test_two_spin_swap_oracle():
    u = propagator_step(heisenberg_hamiltonian(ChainSpec(2)), np.pi)
    expected = np.exp(0.25j * np.pi) * (-1j) * swap_end(2)
    assert np.max(np.abs(u - expected)) < 1e-12
    assert abs(gate_fidelity(u, swap_end(2)) - 1) < 1e-12


def test_y_pulse_fast_path_matches_direct(chain3):
    ops = ChainOperators.get(chain3)
    h = heisenberg_hamiltonian(chain3) + 0.83 * spin_operator(1, "y", chain3)
    direct = propagator_step(h, 0.37)
    assert np.max(np.abs(ops.pulse_propagators([0.0], [0.83], 0.37)[0] - direct)) < 1e-13
    mixed = heisenberg_hamiltonian(chain3) + 0.4 * spin_operator(1, "x", chain3) \
        - 1.1 * spin_operator(1, "y", chain3)
    assert np.max(np.abs(ops.pulse_propagators([0.4], [-1.1], 0.37)[0]
                         - propagator_step(mixed, 0.37))) < 1e-13


def test_zero_controls_free_evolution(chain3):
    seq = ControlSequence.zeros(chain3, "alternating_xy", 6, 0.5)
    u = evolve_sequence(seq)
    assert np.max(np.abs(u - expm(-3j * heisenberg_hamiltonian(chain3)))) < 1e-12


def test_single_x_pulse(chain3):
    seq = ControlSequence(chain3, "x_only", 0.8, [1.3])
    h = heisenberg_hamiltonian(chain3) + 1.3 * spin_operator(1, "x", chain3)
    assert np.max(np.abs(evolve_sequence(seq) - propagator_step(h, 0.8))) < 1e-12


def test_two_pulse_direct_product(chain3):
    seq = ControlSequence(chain3, "alternating_xy", 0.6, [0.9, -1.4])
    h0 = heisenberg_hamiltonian(chain3)
    ux = propagator_step(h0 + 0.9 * spin_operator(1, "x", chain3), 0.6)
    uy = propagator_step(h0 - 1.4 * spin_operator(1, "y", chain3), 0.6)
    assert np.max(np.abs(evolve_sequence(seq) - uy @ ux)) < 1e-12


@pytest.mark.parametrize("mode", ["alternating_xy", "x_only"])
def test_against_expm_reference(rng, mode):
    seq = ControlSequence(ChainSpec(3), mode, 0.45, rng.uniform(-3, 3, 12))
    assert np.max(np.abs(evolve_sequence(seq) - expm_product(seq))) < 1e-11


def test_sequence_validation(chain3):
    with pytest.raises(DomainError):
        ControlSequence(chain3, "alternating_xy", 0.5, [1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        ControlSequence(chain3, "x_only", 0.0, [1.0])
    with pytest.raises(DomainError):
        ControlSequence(chain3, "x_only", 1.0, [])
    seq = ControlSequence(chain3, "alternating_xy", 0.5, [1.0, 2.0])
    assert seq.total_time == 1.0
    assert seq.axes() == ["x", "y"]


def test_fidelity_examples():
    sx = gate_target(GateTarget("X_end", 1))
    assert gate_fidelity(sx, sx) == pytest.approx(1.0)
    assert gate_fidelity(np.eye(2), sx) == pytest.approx(0.0)
    u = expm(-0.3j * sx)
    assert gate_fidelity(np.exp(0.7j) * u, sx) == pytest.approx(gate_fidelity(u, sx), abs=1e-15)
    with pytest.raises(DomainError):
        gate_fidelity(np.eye(2), np.eye(4))


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_fidelity_symmetry_and_invariance(rng):
    for _ in range(20):
        u, v, w = (random_unitary(rng, 8) for _ in range(3))
        f = gate_fidelity(u, v)
        assert f == pytest.approx(gate_fidelity(v, u), abs=1e-14)
        assert f == pytest.approx(gate_fidelity(w @ u, w @ v), abs=1e-13)
        assert 0 <= f <= 1 + 1e-14


amplitude_lists = st.lists(st.floats(-8, 8), min_size=2, max_size=16).filter(lambda a: len(a) % 2 == 0)


@settings(max_examples=60, deadline=None)
@given(amps=amplitude_lists, duration=st.floats(0.01, 3.0),
       mode=st.sampled_from(["alternating_xy", "x_only"]))
def test_unitarity_property(amps, duration, mode):
    u = evolve_sequence(ControlSequence(ChainSpec(3), mode, duration, amps))
    assert is_unitary(u, atol=1e-10)


def test_unitarity_thousand_random_sequences(rng):
    worst = 0.0
    for _ in range(1000):
        n = 2 * rng.integers(1, 40)
        mode = "alternating_xy" if rng.random() < 0.5 else "x_only"
        seq = ControlSequence(ChainSpec(3), mode, rng.uniform(0.05, 2.0), rng.uniform(-6, 6, n))
        u = evolve_sequence(seq)
        worst = max(worst, np.max(np.abs(u.conj().T @ u - np.eye(8))))
    assert worst < 1e-10


@settings(max_examples=40, deadline=None)
@given(amps=amplitude_lists, split=st.integers(1, 7))
def test_composition(amps, split):
    seq = ControlSequence(ChainSpec(3), "alternating_xy", 0.4, amps)
    k = 2 * min(split, len(amps) // 2 - 1) if len(amps) > 2 else 0
    if k == 0:
        return
    first = seq.with_amplitudes(seq.amplitudes[:k])
    second = seq.with_amplitudes(seq.amplitudes[k:])
    whole = evolve_sequence(seq)
    assert np.max(np.abs(evolve_sequence(second) @ evolve_sequence(first) - whole)) < 1e-12


@pytest.mark.parametrize("steps", [1, 3, 8, 20])
def test_product_formula_exact_for_piecewise_constant(rng, steps):
    seq = ControlSequence(ChainSpec(3), "alternating_xy", 0.5, rng.uniform(-3, 3, 10))
    u = product_formula_evolve(piecewise_field(seq, steps), seq.spec)
    assert np.max(np.abs(u - evolve_sequence(seq))) < 1e-12


def test_product_formula_step_must_divide():
    fld = piecewise_field(ControlSequence(ChainSpec(2), "x_only", 1.0, [1.0]))
    with pytest.raises(DomainError):
        fld.with_step(0.3)


def smooth_field(step):
    return SampledField(lambda t: np.sin(0.9 * t) + 0.5, lambda t: np.cos(1.3 * t),
                        n_pulses=4, pulse_duration=1.0, step=step)


def test_product_formula_unitary_and_first_order():
    spec = ChainSpec(3)
    # reference with a very fine step
    ref = product_formula_evolve(smooth_field(1 / 1280), spec)
    errors = []
    for m in (10, 20, 40, 80):
        u = product_formula_evolve(smooth_field(1 / m), spec)
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-10
        errors.append(np.max(np.abs(u - ref)))
    errors = np.array(errors)
    assert np.all(np.diff(errors) < 0)
    # left-point sampling is first order: halving the step roughly halves the error
    assert np.all(errors[:-1] / errors[1:] > 1.6)


def ode_propagator(field, spec, t_final):
    ops = ChainOperators.get(spec)
    d = spec.dim

    def rhs(t, y):
        u = y.reshape(d, d)
        h = ops.h0 + field.hx(t) * ops.sx + field.hy(t) * ops.sy
        return (-1j * h @ u).reshape(-1)

    sol = solve_ivp(rhs, (0, t_final), np.eye(d, dtype=complex).reshape(-1),
                    method="DOP853", rtol=1e-12, atol=1e-12)
    return sol.y[:, -1].reshape(d, d)


def test_midpoint_product_formula_second_order():
    spec = ChainSpec(3)
    ref = ode_propagator(smooth_field(1.0), spec, 4.0)
    errors = np.array([np.max(np.abs(product_formula_evolve(smooth_field(1 / m), spec, "midpoint")
                                     - ref)) for m in (10, 20, 40, 80)])
    assert errors[-1] < 1e-4
    # halving the step divides the error by about four
    assert np.all(errors[:-1] / errors[1:] > 3.5)


def test_product_formula_rejects_unknown_sampling():
    with pytest.raises(DomainError):
        product_formula_evolve(smooth_field(0.5), ChainSpec(2), "trapezoid")

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloner_lab.measurement import (
    BLOCK_TRIALS,
    QuadratureForm,
    TrajectoryPlan,
    bell_measure,
    condition,
    effective_output_map,
    homodyne,
    run_conditional_trajectory,
    sample_trajectories,
    trial_normals,
)
from cloner_lab.network import Network, amplifier, build_asymmetric_cloner
from cloner_lab.quad_algebra import (
    NonCommutingMeasurement,
    OperatorLinearForm,
    apply,
    form_moments,
    gaussian_fidelity,
    make_state,
    product_state,
)


def tmsv(r):
    net = Network(2, (amplifier(math.cosh(r), 0, 1),))
    return apply(net.compile(), make_state("vacuum", 2))


def cloner_input(alpha=0.8 - 0.3j):
    return product_state([make_state("coherent", alpha=alpha), make_state("vacuum"), make_state("vacuum")])


@pytest.mark.parametrize("r, x", [(0.3, 0.5), (1.0, -1.2), (0.0, 2.0)])
def test_two_mode_squeezed_conditioning(r, x):
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    post = condition(tmsv(r), QuadratureForm.quad("X", 1, 2), x)
    assert post.mean[0] == pytest.approx(s / c * x)
    assert post.mean[2] == pytest.approx(x)
    assert post.cov[0, 0] == pytest.approx(1 / (2 * c))
    assert post.cov[1, 1] == pytest.approx(c / 2)
    assert post.cov[2, 2] == pytest.approx(0, abs=1e-14)
    assert 1 in post.collapsed


def test_homodyne_forced_outcome_and_sources():
    st0 = make_state("coherent", alpha=0.5)
    val, post = homodyne(st0, QuadratureForm.quad("P", 0, 1), outcome=0.2)
    assert val == 0.2 and post.mean[1] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        homodyne(st0, QuadratureForm.quad("X", 0, 1))
    v1, _ = homodyne(st0, QuadratureForm.quad("X", 0, 1), normal=1.0)
    assert v1 == pytest.approx(st0.mean[0] + math.sqrt(0.5))


def test_quadrature_form_validation():
    with pytest.raises(ValueError):
        QuadratureForm(np.zeros(4))
    with pytest.raises(ValueError):
        QuadratureForm(np.ones(3))


def test_bell_measurement_order_gives_same_post_covariance():
    st0 = apply(build_asymmetric_cloner(0.4).compile(), cloner_input())
    *_, post_xp = bell_measure(st0, 1, 2, order="xp", normals=[0.1, -0.3])
    *_, post_px = bell_measure(st0, 1, 2, order="px", normals=[0.1, -0.3])
    assert np.allclose(post_xp.cov, post_px.cov, atol=1e-12)
    with pytest.raises(ValueError):
        bell_measure(st0, 1, 1)


def test_non_commuting_pair_rejected():
    net = build_asymmetric_cloner(0.0)
    with pytest.raises(NonCommutingMeasurement):
        effective_output_map(net, [QuadratureForm.quad("X", 1, 3), QuadratureForm.quad("P", 1, 3)], [1, 1j], 0)
    with pytest.raises(NonCommutingMeasurement):
        run_conditional_trajectory(net, [QuadratureForm.quad("X", 2, 3), QuadratureForm.quad("P", 2, 3)],
                                   [1, 1j], cloner_input(), np.random.default_rng(0), target=0)


@pytest.mark.parametrize("gamma", [0.0, 0.7, -0.5])
def test_total_reversal_operator_identity(gamma):
    net = build_asymmetric_cloner(gamma)
    eff = effective_output_map(net, [QuadratureForm.x_minus(1, 2, 3), QuadratureForm.p_plus(1, 2, 3)], [1, 1j], 0)
    assert eff.distance(OperatorLinearForm.annihilation(0, 3)) < 1e-12


def _reversal_setup(gain=0.6):
    net = build_asymmetric_cloner(0.3)
    measured = [QuadratureForm.x_minus(1, 2, 3), QuadratureForm.p_plus(1, 2, 3)]
    return net, measured, gain * np.array([1, 1j])


@given(st.integers(0, 2**31 - 1), st.floats(-1, 1), st.floats(-1, 1))
def test_batched_matches_sequential(seed, re, im):
    net, measured, gains = _reversal_setup()
    inp = cloner_input(complex(re, im))
    z = trial_normals(seed, 5, 2)
    plan = TrajectoryPlan.build(net, measured, gains, inp, 0)
    outcomes, means = plan.run(z)
    for t in range(5):
        post, rec = run_conditional_trajectory(net, measured, gains, inp, target=0, normals=z[t])
        assert np.allclose(rec.outcomes, outcomes[t], atol=1e-12)
        assert np.allclose(post.mean[0:2], means[t], atol=1e-12)
        assert np.allclose(post.cov[0:2, 0:2], plan.target_cov, atol=1e-12)


def test_worker_count_does_not_change_results():
    net, measured, gains = _reversal_setup()
    ref = make_state("coherent", alpha=0.8 - 0.3j)
    trials = 2 * BLOCK_TRIALS + 123
    kw = dict(target=0, reference=ref, trials=trials, seed=11)
    e1 = sample_trajectories(net, measured, gains, cloner_input(), workers=1, **kw)
    e3 = sample_trajectories(net, measured, gains, cloner_input(), workers=3, **kw)
    assert np.array_equal(e1.fidelities, e3.fidelities)
    assert np.array_equal(e1.outcomes, e3.outcomes)
    short = sample_trajectories(net, measured, gains, cloner_input(), workers=1,
                                **{**kw, "trials": 1000})
    assert np.array_equal(short.fidelities, e1.fidelities[:1000])


@pytest.mark.slow
def test_feedforward_equivalence_and_order_swap():
    """MC average of conditional fidelities equals the effective-map fidelity;
    swapping the Bell measurement order changes nothing beyond noise."""
    net, measured, gains = _reversal_setup(0.6)
    alpha = 0.8 - 0.3j
    ref = make_state("coherent", alpha=alpha)
    inp = cloner_input(alpha)
    eff = effective_output_map(net, measured, gains, 0)
    mean, cov = form_moments([eff], inp)
    analytic = gaussian_fidelity(mean, cov, ref.mean, ref.cov)
    xp = sample_trajectories(net, measured, gains, inp, target=0, reference=ref, trials=100_000, seed=1)
    px = sample_trajectories(net, measured[::-1], gains[::-1], inp, target=0, reference=ref,
                             trials=100_000, seed=2)
    assert abs(xp.mean_fidelity - analytic) < 3 * xp.stderr
    assert abs(px.mean_fidelity - analytic) < 3 * px.stderr
    assert abs(xp.mean_fidelity - px.mean_fidelity) < 3 * math.hypot(xp.stderr, px.stderr)


@pytest.mark.parametrize("gain", [0.0, 0.6, 1.0, 1.7])
@pytest.mark.parametrize("gamma", [-0.4, 0.5])
def test_feedforward_equivalence_exact(gain, gamma):
    """Averaging the displaced conditional states over outcomes reproduces the
    moments of the effective output operator.

    The displaced target mean is affine in the standard normals, ``a + B z``, so
    the average is exact: mean ``a`` and covariance ``V_cond + B B^T``.
    """
    net = build_asymmetric_cloner(gamma)
    measured = [QuadratureForm.x_minus(1, 2, 3), QuadratureForm.p_plus(1, 2, 3)]
    gains = gain * np.array([1, 1j])
    inp = cloner_input(0.3 + 0.9j)
    plan = TrajectoryPlan.build(net, measured, gains, inp, 0)
    z = np.vstack([np.zeros(2), np.eye(2)])
    _, means = plan.run(z)
    a = means[0]
    B = (means[1:] - a).T
    mean, cov = form_moments([effective_output_map(net, measured, gains, 0)], inp)
    assert np.allclose(a, mean, atol=1e-9)
    assert np.allclose(plan.target_cov + B @ B.T, cov, atol=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 1.0 - 2.0j, 3.0 + 2.0j])
def test_reversal_outcome_statistics_independent_of_input(alpha):
    net = build_asymmetric_cloner(0.6)
    measured = [QuadratureForm.x_minus(1, 2, 3), QuadratureForm.p_plus(1, 2, 3)]
    base = TrajectoryPlan.build(net, measured, [1, 1j], cloner_input(0.0), 0)
    plan = TrajectoryPlan.build(net, measured, [1, 1j], cloner_input(alpha), 0)
    # outcome covariance and post-reversal shape do not see alpha
    assert np.allclose(plan.sd, base.sd, atol=1e-10)
    assert np.allclose(plan.target_cov, base.target_cov, atol=1e-10)
    assert np.allclose(plan.target_cov, 0.5 * np.eye(2), atol=1e-10)


def test_a_posteriori_correction_equals_feedforward():
    """Measuring with zero gain and subtracting the recorded outcomes afterwards
    gives the same state as displacing in real time."""
    from cloner_lab.measurement import displace_mode

    net = build_asymmetric_cloner(0.2)
    measured = [QuadratureForm.x_minus(1, 2, 3), QuadratureForm.p_plus(1, 2, 3)]
    inp = cloner_input(0.5 + 0.5j)
    for z in trial_normals(3, 4, 2):
        live, _ = run_conditional_trajectory(net, measured, [1, 1j], inp, target=0, normals=z)
        later, rec = run_conditional_trajectory(net, measured, [0, 0], inp, target=0, normals=z)
        shift = math.sqrt(2) * np.array([rec.outcomes[0], rec.outcomes[1]])
        fixed = displace_mode(later, 0, shift)
        assert np.allclose(fixed.mean, live.mean, atol=1e-12)
        assert np.allclose(fixed.cov, live.cov, atol=1e-12)

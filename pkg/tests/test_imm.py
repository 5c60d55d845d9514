"""Tests for the three-mode interacting filter bank.

The one-step reference implementation below follows the standard cycle
equations directly (plain matrix inverses, scipy density) so that the
production code is checked against an independent formulation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from immcda import dynamics, imm
from immcda.dynamics import TRANSITION_MATRIX, Mode
from immcda.imm import (
    DegenerateMeasurementError,
    GaussianBelief,
    ImmBelief,
    ImmModel,
    fuse_estimates,
    gaussian_likelihood,
    imm_step,
    initial_belief,
    kf_predict,
    kf_update,
    mix_initial_conditions,
    mixing_probabilities,
    update_mode_probabilities,
)

UNIFORM = np.full(3, 1.0 / 3.0)


def _naive_step(belief, z, model):
    """Textbook cycle: mix, predict, update, reweight, fuse."""
    mu = belief.mode_probs
    means = [b.mean for b in belief.per_mode]
    covs = [b.cov for b in belief.per_mode]
    base = float(sum(mu[i] * means[i][4] for i in range(3)))
    mats = [dynamics.mode_matrix(m, base, model.dt) for m in model.modes]
    h, r_cov = model.meas_matrix, model.meas_cov
    cbar = model.pi.T @ mu
    w = model.pi * mu[:, None] / cbar[None, :]
    post_means, post_covs, lam = [], [], np.zeros(3)
    for j in range(3):
        m0 = sum(w[i, j] * means[i] for i in range(3))
        p0 = sum(
            w[i, j] * (covs[i] + np.outer(means[i] - m0, means[i] - m0))
            for i in range(3)
        )
        mp = mats[j] @ m0
        pp = mats[j] @ p0 @ mats[j].T + model.process_cov
        s = h @ pp @ h.T + r_cov
        gain = pp @ h.T @ np.linalg.inv(s)
        resid = z - h @ mp
        post_means.append(mp + gain @ resid)
        post_covs.append((np.eye(5) - gain @ h) @ pp)
        lam[j] = multivariate_normal(mean=np.zeros(2), cov=s).pdf(resid)
    mu_new = lam * cbar
    mu_new = mu_new / mu_new.sum()
    fused_mean = sum(mu_new[j] * post_means[j] for j in range(3))
    fused_cov = sum(
        mu_new[j]
        * (post_covs[j] + np.outer(post_means[j] - fused_mean, post_means[j] - fused_mean))
        for j in range(3)
    )
    return post_means, post_covs, lam, mu_new, fused_mean, fused_cov


def _random_belief(rng):
    per_mode = []
    for _ in range(3):
        mean = np.array(
            [
                rng.uniform(-5000, 5000),
                rng.uniform(-300, 300),
                rng.uniform(-5000, 5000),
                rng.uniform(-300, 300),
                rng.uniform(-0.5, 0.5),
            ]
        )
        a = rng.standard_normal((5, 5))
        cov = a @ a.T + np.diag([100.0, 10.0, 100.0, 10.0, 0.01])
        per_mode.append(GaussianBelief(mean, cov))
    mu = rng.uniform(0.05, 1.0, size=3)
    return ImmBelief(per_mode, mu / mu.sum())


# --- mixing ---


def test_mixing_uniform_prior_frozen_values():
    mu_ij, c_bar = mixing_probabilities(TRANSITION_MATRIX, UNIFORM)
    assert c_bar[0] == pytest.approx(0.3933333333333333, rel=1e-12)
    assert c_bar[1] == pytest.approx(0.30333333333333334, rel=1e-12)
    assert c_bar[2] == pytest.approx(0.30333333333333334, rel=1e-12)
    # column j: probability of having come from mode i given mode j now
    assert mu_ij[0, 0] == pytest.approx(0.6779661016949153, rel=1e-12)
    assert mu_ij[1, 0] == pytest.approx(0.1610169491525424, rel=1e-12)
    assert mu_ij[2, 0] == pytest.approx(0.1610169491525424, rel=1e-12)
    assert mu_ij[0, 1] == pytest.approx(0.10989010989010989, rel=1e-12)
    assert mu_ij[1, 1] == pytest.approx(0.8791208791208791, rel=1e-12)
    assert mu_ij[2, 1] == pytest.approx(0.010989010989010988, rel=1e-12)
    assert np.allclose(mu_ij.sum(axis=0), 1.0, atol=1e-12)


def test_mixing_unreachable_mode_column_goes_uniform():
    mu_ij, c_bar = mixing_probabilities(np.eye(3), np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(c_bar, np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(mu_ij[:, 0], np.array([1.0, 0.0, 0.0]))
    assert np.allclose(mu_ij[:, 1], 1.0 / 3.0)
    assert np.allclose(mu_ij[:, 2], 1.0 / 3.0)


def test_mix_initial_conditions_point_mass_passthrough():
    rng = np.random.default_rng(3)
    belief = _random_belief(rng)
    mu_ij = np.eye(3)  # column j draws entirely from mode j
    mixed = mix_initial_conditions(belief.per_mode, mu_ij)
    for j in range(3):
        assert np.allclose(mixed[j].mean, belief.per_mode[j].mean, atol=1e-12)
        assert np.allclose(mixed[j].cov, belief.per_mode[j].cov, atol=1e-9)


def test_mix_initial_conditions_spread_of_means():
    cov = np.eye(5)
    b1 = GaussianBelief(np.zeros(5), cov)
    m2 = np.zeros(5)
    m2[0] = 2.0
    b2 = GaussianBelief(m2, cov)
    mu_ij = np.array([[0.5, 1.0, 1.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
    mixed = mix_initial_conditions([b1, b2, b1], mu_ij)
    assert mixed[0].mean[0] == pytest.approx(1.0)
    # mixture variance picks up the between-means spread: 1 + 0.5 + 0.5
    assert mixed[0].cov[0, 0] == pytest.approx(2.0)
    assert mixed[1].cov[0, 0] == pytest.approx(1.0)


# --- Kalman steps ---


def test_kf_predict_constant_velocity_covariance_growth():
    a = dynamics.coordinated_turn_matrix(0.0, 1.0)
    belief = GaussianBelief(np.array([0.0, 1.0, 0.0, 0.0, 0.0]), np.eye(5))
    out = kf_predict(belief, a, np.zeros((5, 5)))
    assert np.array_equal(out.mean, np.array([1.0, 1.0, 0.0, 0.0, 0.0]))
    assert out.cov[0, 0] == pytest.approx(2.0, rel=1e-12)
    assert out.cov[0, 1] == pytest.approx(1.0, rel=1e-12)
    assert out.cov[1, 1] == pytest.approx(1.0, rel=1e-12)


def test_kf_update_equal_variance_fusion():
    # prior position variance 100 against measurement variance 100:
    # the posterior sits halfway with variance 50 on each axis
    cov = np.diag([100.0, 1.0, 100.0, 1.0, 1.0])
    belief = GaussianBelief(np.zeros(5), cov)
    post, residual, s = kf_update(
        belief,
        np.array([10.0, -6.0]),
        dynamics.MEASUREMENT_MATRIX,
        np.diag([100.0, 100.0]),
    )
    assert np.array_equal(residual, np.array([10.0, -6.0]))
    assert np.allclose(s, np.diag([200.0, 200.0]))
    assert post.mean[0] == pytest.approx(5.0, rel=1e-12)
    assert post.mean[2] == pytest.approx(-3.0, rel=1e-12)
    assert post.cov[0, 0] == pytest.approx(50.0, rel=1e-12)
    assert post.cov[2, 2] == pytest.approx(50.0, rel=1e-12)
    # untouched states keep their prior variance
    assert post.cov[1, 1] == pytest.approx(1.0, rel=1e-12)
    assert post.cov[4, 4] == pytest.approx(1.0, rel=1e-12)


def test_kf_update_rejects_near_singular_innovation():
    cov = np.diag([1e13, 1.0, 1e-2, 1.0, 1.0])
    belief = GaussianBelief(np.zeros(5), cov)
    with pytest.raises(DegenerateMeasurementError):
        kf_update(
            belief,
            np.zeros(2),
            dynamics.MEASUREMENT_MATRIX,
            np.diag([1e-2, 1e-2]),
        )


@given(seed=st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_kf_update_keeps_covariance_valid(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((5, 5))
    belief = GaussianBelief(
        rng.uniform(-1000, 1000, 5), a @ a.T + np.eye(5) * 10.0
    )
    post, _, _ = kf_update(
        belief,
        rng.uniform(-1000, 1000, 2),
        dynamics.MEASUREMENT_MATRIX,
        dynamics.MEASUREMENT_NOISE_COV,
    )
    post.check_valid()
    # conditioning on data cannot inflate the position marginals
    assert post.cov[0, 0] <= belief.cov[0, 0] + 1e-9
    assert post.cov[2, 2] <= belief.cov[2, 2] + 1e-9


# --- likelihood ---


def test_gaussian_likelihood_frozen_values():
    assert gaussian_likelihood(np.zeros(2), np.eye(2)) == pytest.approx(
        0.15915494309189535, rel=1e-12
    )
    assert gaussian_likelihood(np.zeros(2), 4.0 * np.eye(2)) == pytest.approx(
        0.039788735772973836, rel=1e-12
    )
    assert gaussian_likelihood(np.array([2.0, 0.0]), np.eye(2)) == pytest.approx(
        0.02153927930184863, rel=1e-12
    )


def test_gaussian_likelihood_matches_scipy():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a = rng.standard_normal((2, 2))
        s = a @ a.T + 0.5 * np.eye(2)
        r = rng.uniform(-3, 3, 2)
        expected = multivariate_normal(mean=np.zeros(2), cov=s).pdf(r)
        assert gaussian_likelihood(r, s) == pytest.approx(expected, rel=1e-10)


def test_gaussian_likelihood_integrates_to_one():
    s = np.array([[2.0, 0.6], [0.6, 1.0]])
    xs = np.linspace(-8.0, 8.0, 401)
    step = xs[1] - xs[0]
    total = 0.0
    for x in xs:
        for y in xs:
            total += gaussian_likelihood(np.array([x, y]), s)
    assert total * step * step == pytest.approx(1.0, abs=1e-3)


def test_gaussian_likelihood_rejects_indefinite_covariance():
    with pytest.raises(DegenerateMeasurementError):
        gaussian_likelihood(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


# --- mode probabilities and fusion ---


def test_update_mode_probabilities_frozen_values():
    c_bar = TRANSITION_MATRIX.T @ UNIFORM
    mu = update_mode_probabilities(np.array([0.2, 0.1, 0.1]), c_bar)
    assert mu[0] == pytest.approx(0.5645933014354066, rel=1e-12)
    assert mu[1] == pytest.approx(0.21770334928229665, rel=1e-12)
    assert mu[2] == pytest.approx(0.21770334928229665, rel=1e-12)
    assert mu.sum() == pytest.approx(1.0, abs=1e-12)


def test_update_mode_probabilities_underflow_keeps_prior():
    c_bar = np.array([0.4, 0.35, 0.25])
    mu = update_mode_probabilities(np.zeros(3), c_bar)
    assert np.array_equal(mu, c_bar)
    mu[0] = 9.0  # returned vector must be a copy
    assert c_bar[0] == 0.4


def test_fuse_estimates_point_mass_and_spread():
    cov = np.eye(5)
    b0 = GaussianBelief(np.zeros(5), cov)
    m1 = np.zeros(5)
    m1[0] = 2.0
    b1 = GaussianBelief(m1, cov)
    point = fuse_estimates([b0, b1, b0], np.array([0.0, 1.0, 0.0]))
    assert np.array_equal(point.mean, m1)
    assert np.allclose(point.cov, cov)
    half = fuse_estimates([b0, b1, b0], np.array([0.5, 0.5, 0.0]))
    assert half.mean[0] == pytest.approx(1.0)
    assert half.cov[0, 0] == pytest.approx(2.0)  # 1 + between-means spread 1


# --- belief containers ---


def test_initial_belief_structure():
    belief = initial_belief(np.array([120.0, -80.0]))
    assert np.array_equal(belief.mode_probs, UNIFORM)
    for b in belief.per_mode:
        assert np.array_equal(b.mean, np.array([120.0, 0.0, -80.0, 0.0, 0.0]))
        assert np.array_equal(b.cov, imm.INITIAL_COV)
    belief.per_mode[0].mean[0] = 999.0  # copies, not shared storage
    assert belief.per_mode[1].mean[0] == 120.0


def test_belief_validation_rejects_bad_inputs():
    good = GaussianBelief(np.zeros(5), np.eye(5))
    with pytest.raises(ValueError):
        GaussianBelief(np.zeros(5), np.eye(4))
    with pytest.raises(ValueError):
        ImmBelief([good, good], UNIFORM)
    with pytest.raises(ValueError):
        ImmBelief([good, good, good], np.array([0.5, 0.5, 0.5]))
    with pytest.raises(ValueError):
        ImmBelief([good, good, good], np.array([1.2, -0.1, -0.1]))


def test_check_valid_flags_broken_covariances():
    asym = np.eye(5)
    asym[0, 1] = 1.0
    with pytest.raises(ValueError):
        GaussianBelief(np.zeros(5), asym).check_valid()
    indefinite = np.diag([1.0, 1.0, 1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        GaussianBelief(np.zeros(5), indefinite).check_valid()
    GaussianBelief(np.zeros(5), np.eye(5)).check_valid()


def test_model_validation():
    with pytest.raises(ValueError):
        ImmModel(dt=0.0)
    with pytest.raises(ValueError):
        ImmModel(pi=np.ones((3, 3)))


# --- full cycle ---


def test_imm_step_matches_reference_implementation():
    rng = np.random.default_rng(17)
    model = ImmModel()
    for _ in range(5):
        belief = _random_belief(rng)
        z = rng.uniform(-4000, 4000, 2)
        out = imm_step(belief, z, model)
        means, covs, lam, mu, f_mean, f_cov = _naive_step(belief, z, model)
        assert np.allclose(out.likelihoods, lam, rtol=1e-9, atol=1e-300)
        assert np.allclose(out.belief.mode_probs, mu, rtol=1e-9)
        for j in range(3):
            assert np.allclose(out.belief.per_mode[j].mean, means[j], rtol=1e-9, atol=1e-8)
            assert np.allclose(out.belief.per_mode[j].cov, covs[j], rtol=1e-7, atol=1e-6)
        assert np.allclose(out.fused.mean, f_mean, rtol=1e-9, atol=1e-8)
        assert np.allclose(out.fused.cov, f_cov, rtol=1e-7, atol=1e-6)


def test_imm_step_permutation_equivariance():
    """Relabeling the modes relabels the outputs and nothing else."""
    rng = np.random.default_rng(23)
    belief = _random_belief(rng)
    z = rng.uniform(-2000, 2000, 2)
    perm = [2, 0, 1]
    modes = (Mode.STRAIGHT, Mode.LEFT_TURN, Mode.RIGHT_TURN)
    model = ImmModel()
    model_p = ImmModel(
        pi=TRANSITION_MATRIX[np.ix_(perm, perm)],
        modes=tuple(modes[i] for i in perm),
    )
    belief_p = ImmBelief(
        [belief.per_mode[i] for i in perm], belief.mode_probs[perm]
    )
    out = imm_step(belief, z, model)
    out_p = imm_step(belief_p, z, model_p)
    assert np.allclose(out_p.belief.mode_probs, out.belief.mode_probs[perm], rtol=1e-9)
    assert np.allclose(out_p.likelihoods, out.likelihoods[perm], rtol=1e-9)
    for j, i in enumerate(perm):
        assert np.allclose(
            out_p.belief.per_mode[j].mean, out.belief.per_mode[i].mean, rtol=1e-9
        )
    assert np.allclose(out_p.fused.mean, out.fused.mean, rtol=1e-9)
    assert np.allclose(out_p.fused.cov, out.fused.cov, rtol=1e-7, atol=1e-6)


def test_imm_step_identifies_turned_flight():
    """Noiseless left-turn track: the left-turn mode probability takes over."""
    model = ImmModel()
    state = np.array([0.0, 200.0, 0.0, 0.0, 0.0])
    belief = initial_belief(state[[0, 2]])
    mu_left = []
    for _ in range(40):
        state = dynamics.step_truth(state, Mode.LEFT_TURN, 1.0)
        out = imm_step(belief, state[[0, 2]], model)
        belief = out.belief
        mu_left.append(belief.mode_probs[1])
    assert mu_left[-1] > 0.8
    assert all(m > 0.5 for m in mu_left[-10:])


def test_imm_step_flags_degenerate_mixing():
    rng = np.random.default_rng(5)
    belief = _random_belief(rng)
    belief = ImmBelief(belief.per_mode, np.array([1.0, 0.0, 0.0]))
    model = ImmModel(pi=np.eye(3))
    out = imm_step(belief, belief.per_mode[0].mean[[0, 2]], model)
    assert "degenerate_mixing" in out.flags
    assert np.allclose(out.belief.mode_probs, [1.0, 0.0, 0.0], atol=1e-12)


def test_imm_step_flags_likelihood_underflow():
    belief = initial_belief(np.zeros(2))
    model = ImmModel()
    out = imm_step(belief, np.array([1e9, 1e9]), model)
    assert "likelihood_underflow" in out.flags
    # the predicted prior carries through unchanged
    c_bar = TRANSITION_MATRIX.T @ UNIFORM
    assert np.allclose(out.belief.mode_probs, c_bar, atol=1e-12)


def test_imm_step_reduces_to_kalman_filter_with_frozen_modes():
    """Identity transition matrix and a point-mass prior pin the bank to
    one model; the fused track must then reproduce a plain Kalman filter
    to machine precision."""
    rng = np.random.default_rng(29)
    model = ImmModel(pi=np.eye(3))
    z0 = np.zeros(2)
    belief = ImmBelief(
        initial_belief(z0).per_mode, np.array([1.0, 0.0, 0.0])
    )
    kf = GaussianBelief(
        np.array([z0[0], 0.0, z0[1], 0.0, 0.0]), imm.INITIAL_COV.copy()
    )
    for _ in range(25):
        z = rng.uniform(-500.0, 500.0, 2)
        out = imm_step(belief, z, model)
        belief = out.belief
        a = dynamics.mode_matrix(Mode.STRAIGHT, float(kf.mean[4]), model.dt)
        kf, _, _ = kf_update(
            kf_predict(kf, a, model.process_cov), z, model.meas_matrix, model.meas_cov
        )
        assert np.max(np.abs(out.fused.mean - kf.mean)) <= 1e-12
        assert np.max(np.abs(out.fused.cov - kf.cov)) <= 1e-12


@given(seed=st.integers(0, 100_000))
@settings(max_examples=60, deadline=None)
def test_imm_step_preserves_invariants(seed):
    rng = np.random.default_rng(seed)
    belief = _random_belief(rng)
    model = ImmModel()
    out = imm_step(belief, rng.uniform(-6000, 6000, 2), model)
    mu = out.belief.mode_probs
    assert np.all(mu >= 0.0)
    assert float(mu.sum()) == pytest.approx(1.0, abs=1e-12)
    out.fused.check_valid()
    for b in out.belief.per_mode:
        b.check_valid()
    # the fused mean is a convex combination of the per-mode posteriors
    stack = np.array([b.mean for b in out.belief.per_mode])
    lo, hi = stack.min(axis=0), stack.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    assert np.all(out.fused.mean >= lo - 1e-9 * span)
    assert np.all(out.fused.mean <= hi + 1e-9 * span)

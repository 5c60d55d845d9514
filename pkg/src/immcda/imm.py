"""Interacting-multiple-model estimator over the three flight modes.

One cycle mixes the per-mode beliefs with the mode transition
probabilities, runs a mode-matched Kalman filter bank on the new position
fix, reweighs the mode probabilities by measurement likelihood, and fuses
the bank into a single moment-matched Gaussian. The turn-mode transition
matrices are rebuilt every cycle around the current fused turn-rate
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    MEASUREMENT_MATRIX,
    MEASUREMENT_NOISE_COV,
    Mode,
    PROCESS_NOISE_COV,
    STATE_DIM,
    TRANSITION_MATRIX,
    mode_matrix,
    validate_transition_matrix,
)

N_MODES = 3
TWO_PI = 2.0 * math.pi

# Innovation covariances with condition numbers beyond this are rejected.
MAX_MEASUREMENT_CONDITION = 1e12

# Broad prior over the state at track initialization.
INITIAL_COV = np.diag([100.0**2, 400.0**2, 100.0**2, 400.0**2, 0.01])


class DegenerateMeasurementError(RuntimeError):
    """Raised when an innovation covariance is unusable."""


@dataclass
class GaussianBelief:
    """Gaussian state belief (mean vector and covariance matrix)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=float)
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise ValueError(
                f"covariance shape {self.cov.shape} does not match mean length {n}"
            )

    def check_valid(self, sym_tol: float = 1e-9, psd_tol: float = 1e-9) -> None:
        """Raises ValueError unless cov is symmetric and PSD within tolerance."""
        scale = max(np.abs(self.cov).max(), 1.0)
        if np.abs(self.cov - self.cov.T).max() > sym_tol * scale:
            raise ValueError("covariance is not symmetric")
        min_eig = float(np.linalg.eigvalsh(self.cov).min())
        if min_eig < -psd_tol * max(float(np.trace(self.cov)), 1.0):
            raise ValueError(f"covariance has negative eigenvalue {min_eig}")


@dataclass
class ImmBelief:
    """Bank of per-mode beliefs plus the mode probability vector."""

    per_mode: list[GaussianBelief]
    mode_probs: np.ndarray

    def __post_init__(self) -> None:
        self.per_mode = list(self.per_mode)
        if len(self.per_mode) != N_MODES:
            raise ValueError(f"expected {N_MODES} per-mode beliefs")
        self.mode_probs = np.asarray(self.mode_probs, dtype=float).reshape(-1)
        if self.mode_probs.shape != (N_MODES,):
            raise ValueError("mode_probs must be a 3-vector")
        if np.any(self.mode_probs < -1e-12):
            raise ValueError("mode probabilities must be non-negative")
        if abs(float(self.mode_probs.sum()) - 1.0) > 1e-9:
            raise ValueError("mode probabilities must sum to 1")


@dataclass
class ImmStepOutput:
    """Result of one estimator cycle.

    innovations holds one (residual, innovation covariance) pair per mode;
    flags records numerical fallbacks taken during the cycle.
    """

    belief: ImmBelief
    fused: GaussianBelief
    likelihoods: np.ndarray
    innovations: list[tuple[np.ndarray, np.ndarray]]
    flags: tuple[str, ...] = ()


@dataclass
class ImmModel:
    """Model bundle consumed by imm_step."""

    pi: np.ndarray = field(default_factory=lambda: TRANSITION_MATRIX.copy())
    process_cov: np.ndarray = field(default_factory=lambda: PROCESS_NOISE_COV.copy())
    meas_matrix: np.ndarray = field(default_factory=lambda: MEASUREMENT_MATRIX.copy())
    meas_cov: np.ndarray = field(default_factory=lambda: MEASUREMENT_NOISE_COV.copy())
    dt: float = 1.0
    modes: tuple[Mode, Mode, Mode] = (Mode.STRAIGHT, Mode.LEFT_TURN, Mode.RIGHT_TURN)

    def __post_init__(self) -> None:
        self.pi = validate_transition_matrix(self.pi)
        self.process_cov = np.asarray(self.process_cov, dtype=float)
        self.meas_matrix = np.asarray(self.meas_matrix, dtype=float)
        self.meas_cov = np.asarray(self.meas_cov, dtype=float)
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    def transition_matrices(self, base_rate: float) -> list[np.ndarray]:
        """Per-mode transition matrices around the given base turn rate."""
        return [mode_matrix(m, base_rate, self.dt) for m in self.modes]


def mixing_probabilities(
    pi: np.ndarray, mu_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Mixing weights and predicted mode probabilities.

    Args:
        pi: Row-stochastic mode transition matrix.
        mu_prev: Previous mode probabilities.

    Returns:
        (mu_ij, c_bar) where mu_ij[i, j] is the probability of having been
        in mode i given mode j now, and c_bar = pi^T mu_prev. A column with
        c_bar[j] = 0 (mode j unreachable) is replaced by the uniform
        distribution so the mixer stays defined.
    """
    pi = validate_transition_matrix(pi)
    mu_prev = np.asarray(mu_prev, dtype=float)
    c_bar = pi.T @ mu_prev
    mu_ij = pi * mu_prev[:, None]
    for j in range(N_MODES):
        if c_bar[j] > 0.0:
            mu_ij[:, j] /= c_bar[j]
        else:
            mu_ij[:, j] = 1.0 / N_MODES
    return mu_ij, c_bar


def mix_initial_conditions(
    per_mode: list[GaussianBelief], mu_ij: np.ndarray
) -> list[GaussianBelief]:
    """Moment-matched mixture of the bank under each mixing column."""
    mu_ij = np.asarray(mu_ij, dtype=float)
    mixed = []
    for j in range(N_MODES):
        w = mu_ij[:, j]
        mean = sum(w[i] * per_mode[i].mean for i in range(N_MODES))
        cov = np.zeros_like(per_mode[0].cov)
        for i in range(N_MODES):
            d = per_mode[i].mean - mean
            cov = cov + w[i] * (per_mode[i].cov + np.outer(d, d))
        mixed.append(GaussianBelief(mean, 0.5 * (cov + cov.T)))
    return mixed


def kf_predict(
    belief: GaussianBelief, transition: np.ndarray, process_cov: np.ndarray
) -> GaussianBelief:
    """Kalman time update through a linear transition."""
    a = np.asarray(transition, dtype=float)
    mean = a @ belief.mean
    cov = a @ belief.cov @ a.T + np.asarray(process_cov, dtype=float)
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def kf_update(
    belief: GaussianBelief, z: np.ndarray, meas_matrix: np.ndarray, meas_cov: np.ndarray
) -> tuple[GaussianBelief, np.ndarray, np.ndarray]:
    """Kalman measurement update in Joseph form.

    Args:
        belief: Predicted belief.
        z: Measurement vector.
        meas_matrix: Measurement matrix.
        meas_cov: Measurement noise covariance.

    Returns:
        (posterior, residual, innovation covariance).

    Raises:
        DegenerateMeasurementError: If the innovation covariance condition
            number exceeds MAX_MEASUREMENT_CONDITION.
    """
    h = np.asarray(meas_matrix, dtype=float)
    r = np.asarray(meas_cov, dtype=float)
    residual = np.asarray(z, dtype=float) - h @ belief.mean
    s = h @ belief.cov @ h.T + r
    s = 0.5 * (s + s.T)
    if np.linalg.cond(s) > MAX_MEASUREMENT_CONDITION:
        raise DegenerateMeasurementError(
            f"innovation covariance is near-singular (cond > {MAX_MEASUREMENT_CONDITION:g})"
        )
    gain = belief.cov @ h.T @ np.linalg.inv(s)
    i_kh = np.eye(belief.mean.shape[0]) - gain @ h
    cov = i_kh @ belief.cov @ i_kh.T + gain @ r @ gain.T
    mean = belief.mean + gain @ residual
    return GaussianBelief(mean, 0.5 * (cov + cov.T)), residual, s


def gaussian_likelihood(residual: np.ndarray, innovation_cov: np.ndarray) -> float:
    """Planar Gaussian density of a residual under its innovation covariance.

    Raises:
        DegenerateMeasurementError: If the covariance is not positive
            definite.
    """
    r = np.asarray(residual, dtype=float)
    s = np.asarray(innovation_cov, dtype=float)
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMeasurementError(
            "innovation covariance is not positive definite"
        ) from exc
    w = np.linalg.solve(chol, r)
    return math.exp(-0.5 * float(w @ w)) / (TWO_PI * chol[0, 0] * chol[1, 1])


def update_mode_probabilities(
    likelihoods: np.ndarray, c_bar: np.ndarray
) -> np.ndarray:
    """Posterior mode probabilities from likelihoods and predicted priors.

    If every product underflows to zero the predicted prior c_bar is
    returned unchanged so the filter stays alive.
    """
    products = np.asarray(likelihoods, dtype=float) * np.asarray(c_bar, dtype=float)
    total = float(products.sum())
    if total <= 0.0:
        return np.asarray(c_bar, dtype=float).copy()
    return products / total


def fuse_estimates(
    per_mode: list[GaussianBelief], mode_probs: np.ndarray
) -> GaussianBelief:
    """Moment-matched single Gaussian over the mode-conditioned bank."""
    mu = np.asarray(mode_probs, dtype=float)
    mean = sum(mu[j] * per_mode[j].mean for j in range(N_MODES))
    cov = np.zeros_like(per_mode[0].cov)
    for j in range(N_MODES):
        d = per_mode[j].mean - mean
        cov = cov + mu[j] * (per_mode[j].cov + np.outer(d, d))
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def initial_belief(z0: np.ndarray) -> ImmBelief:
    """Track initialization from the first position fix.

    All modes start equiprobable with identical beliefs: measured position,
    zero velocity, zero turn rate, and a broad diagonal covariance.
    """
    z0 = np.asarray(z0, dtype=float)
    mean = np.array([z0[0], 0.0, z0[1], 0.0, 0.0])
    per_mode = [GaussianBelief(mean.copy(), INITIAL_COV.copy()) for _ in range(N_MODES)]
    return ImmBelief(per_mode, np.full(N_MODES, 1.0 / N_MODES))


def imm_step(belief: ImmBelief, z: np.ndarray, model: ImmModel) -> ImmStepOutput:
    """One full estimator cycle on a new measurement.

    Order: mixing probabilities, mixed initial conditions, per-mode
    predict/update/likelihood, mode probability update, fusion. The
    turn-mode transitions are rebuilt around the incoming fused turn-rate
    estimate.
    """
    flags: list[str] = []
    base_rate = float(
        np.dot(belief.mode_probs, [b.mean[4] for b in belief.per_mode])
    )
    transitions = model.transition_matrices(base_rate)

    mu_ij, c_bar = mixing_probabilities(model.pi, belief.mode_probs)
    if np.any(c_bar <= 0.0):
        flags.append("degenerate_mixing")
    mixed = mix_initial_conditions(belief.per_mode, mu_ij)

    posteriors: list[GaussianBelief] = []
    likelihoods = np.zeros(N_MODES)
    innovations: list[tuple[np.ndarray, np.ndarray]] = []
    for j in range(N_MODES):
        pred = kf_predict(mixed[j], transitions[j], model.process_cov)
        post, residual, s = kf_update(pred, z, model.meas_matrix, model.meas_cov)
        likelihoods[j] = gaussian_likelihood(residual, s)
        posteriors.append(post)
        innovations.append((residual, s))

    if not np.any(likelihoods * c_bar > 0.0):
        flags.append("likelihood_underflow")
    mu = update_mode_probabilities(likelihoods, c_bar)
    fused = fuse_estimates(posteriors, mu)
    return ImmStepOutput(
        ImmBelief(posteriors, mu), fused, likelihoods, innovations, tuple(flags)
    )

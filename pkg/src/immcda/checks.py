"""Desk-scale invariant self-tests behind the ``check`` subcommand.

Each check exercises one module invariant at a size that finishes in
seconds. The full-size versions live in the test suite; this module lets
an installed copy prove itself without pytest.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import avoidance, dynamics, imm, traceio
from .scenario import ScenarioConfig, run_episode, run_monte_carlo


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check_turn_matrix_orthogonality() -> CheckResult:
    worst = 0.0
    for omega in (-2.5, -1.0, -math.pi / 4, -1e-6, 0.0, 1e-6, 0.5, math.pi / 4, 2.0):
        for dt in (0.1, 0.5, 1.0, 2.0):
            a = dynamics.coordinated_turn_matrix(omega, dt)
            v = a[np.ix_([1, 3], [1, 3])]
            worst = max(worst, float(np.abs(v.T @ v - np.eye(2)).max()))
    return CheckResult(
        "turn_matrix_velocity_orthogonality", worst <= 1e-10, f"max dev {worst:.3g}"
    )


def _check_turn_matrix_continuity() -> CheckResult:
    a1 = dynamics.coordinated_turn_matrix(0.0, 1.0)
    worst = 0.0
    for omega in (1e-9, -1e-9, 5e-9, 9.9e-9):
        a = dynamics.coordinated_turn_matrix(omega, 1.0)
        worst = max(worst, float(np.abs(a - a1).max()))
    return CheckResult(
        "turn_matrix_zero_rate_continuity", worst <= 1e-8, f"max dev {worst:.3g}"
    )


def _check_markov_frequencies() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(20240817))
    n = 20000
    worst = 0.0
    for mode in dynamics.Mode:
        counts = np.zeros(3)
        for _ in range(n):
            nxt = dynamics.sample_next_mode(
                mode, dynamics.TRANSITION_MATRIX, rng.random()
            )
            counts[int(nxt) - 1] += 1
        row = dynamics.TRANSITION_MATRIX[int(mode) - 1]
        worst = max(worst, float(np.abs(counts / n - row).max()))
    return CheckResult(
        "markov_transition_frequencies", worst <= 0.02, f"max dev {worst:.4f}"
    )


def _check_mode_distribution_simplex() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(7))
    worst = 0.0
    for _ in range(200):
        m = rng.random(3)
        m /= m.sum()
        out = dynamics.evolve_mode_distribution(dynamics.TRANSITION_MATRIX, m)
        worst = max(worst, abs(float(out.sum()) - 1.0), float(max(0.0, -out.min())))
    return CheckResult(
        "mode_distribution_simplex", worst <= 1e-12, f"max dev {worst:.3g}"
    )


def _random_belief(rng: np.random.Generator) -> imm.ImmBelief:
    per_mode = []
    for _ in range(3):
        mean = np.concatenate(
            [rng.normal(0.0, 3000.0, 1), rng.normal(0.0, 300.0, 1)] * 2
            + [rng.normal(0.0, 0.3, 1)]
        )
        root = rng.normal(0.0, 1.0, (5, 5))
        cov = root @ root.T + np.eye(5) * 1e-3
        scale = np.diag([50.0, 10.0, 50.0, 10.0, 0.1])
        per_mode.append(imm.GaussianBelief(mean, scale @ cov @ scale))
    mu = rng.random(3) + 1e-3
    return imm.ImmBelief(per_mode, mu / mu.sum())


def _check_fuzzed_imm_steps() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(99))
    model = imm.ImmModel()
    worst_simplex = 0.0
    for i in range(300):
        belief = _random_belief(rng)
        z = belief.per_mode[0].mean[[0, 2]] + rng.normal(0.0, 100.0, 2)
        out = imm.imm_step(belief, z, model)
        worst_simplex = max(
            worst_simplex, abs(float(out.belief.mode_probs.sum()) - 1.0)
        )
        try:
            for b in out.belief.per_mode:
                b.check_valid()
            out.fused.check_valid()
        except ValueError as exc:
            return CheckResult("fuzzed_imm_steps", False, f"iter {i}: {exc}")
        lo = np.min([b.mean for b in out.belief.per_mode], axis=0)
        hi = np.max([b.mean for b in out.belief.per_mode], axis=0)
        slack = 1e-9 * (1.0 + np.abs(hi) + np.abs(lo))
        if np.any(out.fused.mean < lo - slack) or np.any(out.fused.mean > hi + slack):
            return CheckResult(
                "fuzzed_imm_steps", False, f"iter {i}: fused mean left convex hull"
            )
    return CheckResult(
        "fuzzed_imm_steps", worst_simplex <= 1e-12, f"max simplex dev {worst_simplex:.3g}"
    )


def _check_degenerate_kf_equivalence() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(5))
    model = imm.ImmModel(pi=np.eye(3))
    z0 = np.array([4000.0, 100.0])
    belief = imm.initial_belief(z0)
    belief = imm.ImmBelief(belief.per_mode, np.array([1.0, 0.0, 0.0]))
    kf = imm.GaussianBelief(belief.per_mode[0].mean.copy(), imm.INITIAL_COV.copy())
    a1 = dynamics.coordinated_turn_matrix(0.0, 1.0)
    worst = 0.0
    for _ in range(40):
        z = z0 + rng.normal(0.0, 50.0, 2)
        out = imm.imm_step(belief, z, model)
        belief = out.belief
        kf, _, _ = imm.kf_update(
            imm.kf_predict(kf, a1, model.process_cov),
            z,
            model.meas_matrix,
            model.meas_cov,
        )
        worst = max(
            worst,
            float(np.abs(out.fused.mean - kf.mean).max()),
            float(np.abs(out.fused.cov - kf.cov).max()),
        )
    return CheckResult(
        "single_mode_reduces_to_kf", worst <= 1e-12, f"max dev {worst:.3g}"
    )


def _check_tangency() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(11))
    worst = 0.0
    for _ in range(2000):
        r_safe = rng.uniform(100.0, 5000.0)
        bo = r_safe * rng.uniform(1.001, 4.0)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        b = bo * np.array([math.cos(ang), math.sin(ang)])
        c = b + rng.uniform(50.0, 3.0 * r_safe) * np.array(
            [math.cos(rng.uniform(0.0, 2.0 * math.pi)),
             math.sin(rng.uniform(0.0, 2.0 * math.pi))]
        )
        adv = avoidance.escape_angle(b, c, r_safe)
        if abs(adv.theta) > math.pi / 4 + 1e-12:
            return CheckResult("escape_tangency", False, "theta left the clamp range")
        c_new = b + avoidance._rotation(-adv.theta_unclamped) @ (c - b)
        d = c_new - b
        d /= np.hypot(d[0], d[1])
        t_foot = float(d @ -b)
        dist = float(abs(d[0] * b[1] - d[1] * b[0]))
        if t_foot <= 0.0:
            return CheckResult("escape_tangency", False, "tangent foot behind track")
        worst = max(worst, abs(dist - r_safe) / r_safe)
    return CheckResult("escape_tangency", worst <= 1e-6, f"max rel dev {worst:.3g}")


def _check_determinism() -> CheckResult:
    config = ScenarioConfig(seed=5, steps=12)
    a = run_episode(config)
    b = run_episode(config)
    same = (
        np.array_equal(a.truth, b.truth)
        and np.array_equal(a.z, b.z)
        and np.array_equal(a.est, b.est)
        and np.array_equal(a.mode_probs, b.mode_probs)
        and np.array_equal(a.advisory_theta, b.advisory_theta, equal_nan=True)
    )
    return CheckResult("episode_determinism", same)


def _check_roundtrip() -> CheckResult:
    config = ScenarioConfig(seed=3, steps=10)
    result = run_monte_carlo(config, 2, keep_traces=True)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path = os.path.join(tmp, "episode_3.csv")
        traceio.write_episode_csv(result.traces[0], csv_path)
        back = traceio.read_episode_csv(csv_path)
        trace = result.traces[0]
        worst = max(
            float(np.abs(back["truth_x1"] - trace.truth[:, 0]).max()),
            float(np.abs(back["est_x2"] - trace.est[:, 2]).max()),
            float(np.abs(back["separation"] - trace.separation).max()),
        )
        json_path = os.path.join(tmp, "summary.json")
        manifest = traceio.make_manifest(config, result.seeds, [csv_path])
        traceio.write_summary_json(result, manifest, json_path)
        payload = traceio.read_summary_json(json_path)
        worst = max(
            worst,
            abs(payload["breach_fraction"] - result.breach_fraction),
            abs(payload["min_separation"]["mean"] - result.min_separation_mean),
        )
    return CheckResult("trace_roundtrip", worst <= 1e-9, f"max dev {worst:.3g}")


_ALL_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    _check_turn_matrix_orthogonality,
    _check_turn_matrix_continuity,
    _check_markov_frequencies,
    _check_mode_distribution_simplex,
    _check_fuzzed_imm_steps,
    _check_degenerate_kf_equivalence,
    _check_tangency,
    _check_determinism,
    _check_roundtrip,
)


def run_all_checks(report: Callable[[str], None] = print) -> bool:
    """Runs every desk-scale check, reporting one line each."""
    all_ok = True
    for check in _ALL_CHECKS:
        result = check()
        status = "PASS" if result.passed else "FAIL"
        suffix = f": {result.detail}" if (result.detail and not result.passed) else ""
        report(f"{status} {result.name}{suffix}")
        all_ok = all_ok and result.passed
    return all_ok

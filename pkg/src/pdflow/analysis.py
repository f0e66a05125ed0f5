"""Certification and experiment layer.

KKT residuals, saddle-distance Lyapunov functions and their Lie
derivatives, projection-mode traces, omega-limit estimation, the
initial-condition continuity sweep, and the mode-switch discontinuity
witness search.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from pdflow.dynamics import (
    GainMatrices,
    field_primal_dual,
    field_with_gains,
    verify_projection_identity,
)
from pdflow.exceptions import ValidationError, WitnessSearchError
from pdflow.integrator import IntegratorConfig, Trajectory, integrate
from pdflow.problem_model import ConcaveProgram, PrimalDualPoint, SaddlePoint

__all__ = [
    "KktReport",
    "ModeTrace",
    "OmegaLimitEstimate",
    "WitnessPair",
    "continuity_experiment",
    "counterexample_witness",
    "estimate_omega_limit",
    "extract_mode_trace",
    "kkt_residual",
    "lie_derivative",
    "lie_derivative_sweep",
    "lyapunov_value",
    "lyapunov_value_gains",
    "projection_identity_sweep",
    "sample_states",
]

MODE_ACTIVE = "projection-active"
MODE_INACTIVE = "projection-inactive"


@dataclass(frozen=True)
class KktReport:
    """Residuals of the four KKT conditions at a point.

    ``total`` is the max of the four; it vanishes exactly at a primal-dual
    optimizer.
    """

    stationarity: float
    primal_feas: float
    dual_feas: float
    comp_slack: float
    total: float

    def as_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "primal_feas": self.primal_feas,
            "dual_feas": self.dual_feas,
            "comp_slack": self.comp_slack,
            "total": self.total,
        }


def kkt_residual(prog: ConcaveProgram, p: PrimalDualPoint) -> KktReport:
    """Measure how far p is from satisfying the KKT conditions.

    stationarity = ||grad f(x) - sum_i lambda_i grad g_i(x)||,
    primal_feas = ||max(g(x), 0)||, dual_feas = ||max(-lambda, 0)||,
    comp_slack = |lambda . g(x)|.
    """
    prog.check_point(p)
    grad = np.asarray(prog.objective_grad(p.x), dtype=float)
    if prog.m:
        jac = np.asarray(prog.constraint_jac(p.x), dtype=float)
        g = np.asarray(prog.constraints(p.x), dtype=float)
        stationarity = float(np.linalg.norm(grad - jac.T @ p.lam))
        primal = float(np.linalg.norm(np.maximum(g, 0.0)))
        dual = float(np.linalg.norm(np.maximum(-p.lam, 0.0)))
        comp = abs(float(p.lam @ g))
    else:
        stationarity = float(np.linalg.norm(grad))
        primal = dual = comp = 0.0
    return KktReport(
        stationarity=stationarity,
        primal_feas=primal,
        dual_feas=dual,
        comp_slack=comp,
        total=max(stationarity, primal, dual, comp),
    )


def lyapunov_value(saddle: SaddlePoint, p: PrimalDualPoint) -> float:
    """Half the squared distance to the saddle point."""
    dx = p.x - saddle.x_star
    dl = p.lam - saddle.lam_star
    return 0.5 * (float(dx @ dx) + float(dl @ dl))


def lyapunov_value_gains(
    saddle: SaddlePoint, gains: GainMatrices, p: PrimalDualPoint
) -> float:
    """Gain-weighted squared distance, matching the gain dynamics.

    Reduces to :func:`lyapunov_value` for identity gains.
    """
    dx = p.x - saddle.x_star
    dl = p.lam - saddle.lam_star
    return 0.5 * (float((dx * dx) @ (1.0 / gains.k1)) + float((dl * dl) @ (1.0 / gains.k2)))


def lie_derivative(
    prog: ConcaveProgram,
    saddle: SaddlePoint,
    p: PrimalDualPoint,
    gains: Optional[GainMatrices] = None,
) -> float:
    """Directional derivative of the matching Lyapunov function along the
    matching field at p.  Nonpositive on the whole domain."""
    if gains is None:
        vec, _ = field_primal_dual(prog, p)
        grad_v = np.concatenate([p.x - saddle.x_star, p.lam - saddle.lam_star])
    else:
        vec = field_with_gains(prog, gains, p)
        grad_v = np.concatenate(
            [(p.x - saddle.x_star) / gains.k1, (p.lam - saddle.lam_star) / gains.k2]
        )
    return float(grad_v @ vec)


def sample_states(
    rng: np.random.Generator,
    n: int,
    m: int,
    n_samples: int,
    center: Optional[PrimalDualPoint] = None,
    radius: float = 3.0,
    boundary_fraction: float = 0.3,
):
    """Seeded sample of domain points for certification sweeps.

    Points are drawn uniformly from a box of half-width ``radius`` around
    ``center`` (origin by default) and clamped into the domain.  The first
    ``boundary_fraction`` of the samples get a random nonempty subset of
    multiplier components set to exactly 0 so boundary behavior is
    exercised.  Returns arrays of shapes (n_samples, n), (n_samples, m).
    """
    cx = np.zeros(n) if center is None else np.asarray(center.x, dtype=float)
    cl = np.zeros(m) if center is None else np.asarray(center.lam, dtype=float)
    xs = cx + rng.uniform(-radius, radius, size=(n_samples, n))
    lams = np.maximum(cl + rng.uniform(-radius, radius, size=(n_samples, m)), 0.0)
    n_boundary = int(round(boundary_fraction * n_samples))
    if m > 0 and n_boundary > 0:
        zero_mask = rng.random(size=(n_boundary, m)) < 0.5
        none_zero = ~zero_mask.any(axis=1)
        zero_mask[none_zero, rng.integers(0, m, size=int(none_zero.sum()))] = True
        block = lams[:n_boundary]
        block[zero_mask] = 0.0
        lams[:n_boundary] = block
    return xs, lams


def lie_derivative_sweep(
    prog: ConcaveProgram,
    saddle: SaddlePoint,
    rng: np.random.Generator,
    n_samples: int = 10_000,
    v_max: float = 100.0,
    gains: Optional[GainMatrices] = None,
) -> np.ndarray:
    """Lie-derivative values on a seeded sample of the sublevel set
    V <= v_max around the saddle.  All values should be <= 0 up to float
    roundoff."""
    radius = np.sqrt(2.0 * v_max / (prog.n + prog.m))
    xs, lams = sample_states(
        rng, prog.n, prog.m, n_samples, center=saddle.as_point(), radius=radius
    )
    values = np.empty(n_samples)
    for i in range(n_samples):
        values[i] = lie_derivative(
            prog, saddle, PrimalDualPoint(xs[i], lams[i]), gains=gains
        )
    return values


def projection_identity_sweep(
    prog: ConcaveProgram,
    rng: np.random.Generator,
    n_samples: int = 10_000,
    radius: float = 3.0,
    boundary_fraction: float = 0.3,
) -> int:
    """Number of sampled points at which the projected field does not
    equal, exactly, the vector projection of the raw field."""
    xs, lams = sample_states(
        rng, prog.n, prog.m, n_samples, radius=radius,
        boundary_fraction=boundary_fraction,
    )
    violations = 0
    for i in range(n_samples):
        if not verify_projection_identity(prog, PrimalDualPoint(xs[i], lams[i])):
            violations += 1
    return violations


@dataclass(frozen=True)
class ModeTrace:
    """Alternating projection-active / projection-inactive segments of a
    trajectory, with switch times at recorded-sample midpoints."""

    segments: tuple
    switch_times: tuple

    @property
    def n_switches(self) -> int:
        return len(self.switch_times)

    def as_dict(self) -> dict:
        return {
            "segments": [
                {"t_start": t0, "t_end": t1, "mode": mode}
                for (t0, t1, mode) in self.segments
            ],
            "switch_times": list(self.switch_times),
        }


def extract_mode_trace(traj: Trajectory) -> ModeTrace:
    """Segment a trajectory by whether any projection is active.

    A recorded state is projection-active if any mask flag is set.  Switch
    times are midpoints between consecutive recorded states of differing
    mode; the resolution is the recording spacing.
    """
    if len(traj) == 0:
        raise ValidationError("cannot extract a mode trace from an empty trajectory")
    active = traj.masks.any(axis=1)
    times = traj.times
    segments = []
    switch_times = []
    seg_start = float(times[0])
    for i in range(1, len(traj)):
        if active[i] != active[i - 1]:
            mid = 0.5 * (float(times[i - 1]) + float(times[i]))
            segments.append(
                (seg_start, mid, MODE_ACTIVE if active[i - 1] else MODE_INACTIVE)
            )
            switch_times.append(mid)
            seg_start = mid
    segments.append(
        (seg_start, float(times[-1]), MODE_ACTIVE if active[-1] else MODE_INACTIVE)
    )
    return ModeTrace(segments=tuple(segments), switch_times=tuple(switch_times))


@dataclass(frozen=True)
class OmegaLimitEstimate:
    """Tail centroid of a trajectory with the tail's maximum spread.

    A small ``tail_radius`` certifies convergence to a single point; the
    estimate is only meaningful when the radius is below the caller's
    tolerance.
    """

    point: PrimalDualPoint
    tail_radius: float
    tail_fraction: float

    def is_converged(self, tol: float) -> bool:
        return self.tail_radius <= tol


def estimate_omega_limit(
    traj: Trajectory, tail_fraction: float = 0.1
) -> OmegaLimitEstimate:
    """Estimate the limit point from the trailing fraction of a trajectory."""
    if not (0.0 < tail_fraction <= 1.0):
        raise ValidationError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    k = len(traj)
    tail_len = int(np.ceil(tail_fraction * k))
    if tail_len < 10:
        raise ValidationError(
            f"trajectory too short: tail has {tail_len} states, need >= 10"
        )
    tail = traj.state_matrix()[k - tail_len :]
    centroid = tail.mean(axis=0)
    radius = float(np.linalg.norm(tail - centroid, axis=1).max())
    n = traj.n
    return OmegaLimitEstimate(
        point=PrimalDualPoint(centroid[:n], centroid[n:]),
        tail_radius=radius,
        tail_fraction=tail_fraction,
    )


def _sup_distance(a: Trajectory, b: Trajectory) -> float:
    if len(a) != len(b):
        raise ValidationError(
            f"trajectories have different lengths ({len(a)} vs {len(b)}); "
            "compare runs with identical configs and disabled early stopping"
        )
    return float(np.linalg.norm(a.state_matrix() - b.state_matrix(), axis=1).max())


def continuity_experiment(
    prog: ConcaveProgram,
    p0: PrimalDualPoint,
    direction,
    k_max: int,
    T: float,
    cfg: IntegratorConfig,
) -> list:
    """Shrinking-perturbation sweep around a base trajectory.

    For k = 1..k_max integrates from p0 + 2^-k * direction and records the
    sup, over recorded times in [0, T], of the state distance to the base
    trajectory.  Returns a list of (delta, sup_distance) pairs where delta
    is the actual perturbation norm.  Perturbed points outside the domain
    are skipped with a warning.
    """
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (prog.n + prog.m,):
        raise ValidationError(
            f"direction must have length n + m = {prog.n + prog.m}, "
            f"got shape {direction.shape}"
        )
    run_cfg = replace(cfg, horizon_T=T, stop_kkt_tol=0.0)
    base = integrate(prog, p0, run_cfg)
    rows = []
    for k in range(1, k_max + 1):
        scale = 2.0 ** -k
        vec = p0.as_vector() + scale * direction
        pk = PrimalDualPoint.from_vector(vec, prog.n)
        if not pk.in_domain:
            warnings.warn(
                f"perturbation k={k} leaves the domain (negative multiplier); "
                "skipped",
                stacklevel=2,
            )
            continue
        traj = integrate(prog, pk, run_cfg)
        delta = scale * float(np.linalg.norm(direction))
        rows.append((delta, _sup_distance(base, traj)))
    return rows


@dataclass(frozen=True)
class WitnessPair:
    """Two nearby initial conditions whose mode traces differ (0 vs 2
    switches) while their continuous trajectories stay uniformly close."""

    p_base: PrimalDualPoint
    p_pert: PrimalDualPoint
    trace_base: ModeTrace
    trace_pert: ModeTrace
    sup_distance: float
    traj_base: Trajectory
    traj_pert: Trajectory


# Candidate base points for the witness search: a fixed grid chosen near
# the region where trajectories graze the multiplier boundary, scanned in
# a fixed order for reproducibility.
WITNESS_X_GRID = tuple(np.round(np.arange(0.3, 0.90001, 0.1), 10))
WITNESS_LAMBDA_GRID = tuple(np.round(np.arange(0.05, 0.50001, 0.05), 10))
# Down-left offsets (norm <= 1e-2): perturbing toward the boundary is what
# produces the extra mode transit.
WITNESS_OFFSETS = ((-7.07e-3, -7.07e-3), (0.0, -9.9e-3), (-9.9e-3, -1e-3))
WITNESS_MAX_PAIR_DISTANCE = 1e-2
WITNESS_MAX_SUP_DISTANCE = 0.1


def _require_demo_problem(prog: ConcaveProgram):
    from pdflow.problems import interval_qp_spec

    spec = prog.quadratic
    ref = interval_qp_spec()
    ok = (
        spec is not None
        and np.array_equal(spec.P, ref.P)
        and np.array_equal(spec.q, ref.q)
        and spec.c == ref.c
        and np.array_equal(spec.A, ref.A)
        and np.array_equal(spec.b, ref.b)
        and np.array_equal(spec.d, ref.d)
    )
    if not ok:
        raise ValidationError(
            "the witness search is calibrated to the built-in 1-d interval "
            "problem (pdflow.problems.interval_qp)"
        )


def counterexample_witness(
    prog: ConcaveProgram,
    T: float = 10.0,
    cfg: Optional[IntegratorConfig] = None,
) -> WitnessPair:
    """Find nearby starts with mismatched mode-switch structure.

    Scans the documented candidate grid for a base point whose trajectory
    never clamps over [0, T], then perturbs it down-left by at most 1e-2
    looking for a trajectory with exactly two switches while the two
    continuous trajectories stay within 0.1 of each other.  Raises
    WitnessSearchError if the grid is exhausted.
    """
    _require_demo_problem(prog)
    if cfg is None:
        cfg = IntegratorConfig()
    run_cfg = replace(cfg, horizon_T=T, stop_kkt_tol=0.0)

    scanned = 0
    for lam0 in WITNESS_LAMBDA_GRID:
        for x0 in WITNESS_X_GRID:
            scanned += 1
            p_base = PrimalDualPoint([x0], [lam0])
            traj_base = integrate(prog, p_base, run_cfg)
            trace_base = extract_mode_trace(traj_base)
            if trace_base.n_switches != 0:
                continue
            for dx, dl in WITNESS_OFFSETS:
                if lam0 + dl < 0.0:
                    continue
                p_pert = PrimalDualPoint([x0 + dx], [lam0 + dl])
                traj_pert = integrate(prog, p_pert, run_cfg)
                trace_pert = extract_mode_trace(traj_pert)
                if trace_pert.n_switches != 2:
                    continue
                sup = _sup_distance(traj_base, traj_pert)
                if sup < WITNESS_MAX_SUP_DISTANCE:
                    return WitnessPair(
                        p_base=p_base,
                        p_pert=p_pert,
                        trace_base=trace_base,
                        trace_pert=trace_pert,
                        sup_distance=sup,
                        traj_base=traj_base,
                        traj_pert=traj_pert,
                    )
    raise WitnessSearchError(
        f"no witness pair found among {scanned} candidate base points "
        f"(x in [{WITNESS_X_GRID[0]}, {WITNESS_X_GRID[-1]}], lambda in "
        f"[{WITNESS_LAMBDA_GRID[0]}, {WITNESS_LAMBDA_GRID[-1]}]) over T={T}; "
        "widen the grid or increase T"
    )

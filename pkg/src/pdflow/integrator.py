"""Fixed-step integration of the projected primal-dual dynamics.

Trajectories stay in the domain by construction: every step ends with a
point projection, and clamped multiplier components are written as exact
zeros.  The step size is fixed (no adaptivity): the right-hand side is
discontinuous at the domain boundary, where adaptive error estimators
misfire, and fixed-step refinement studies are easier to audit.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from pdflow import kernels
from pdflow.exceptions import IntegrationError, ValidationError
from pdflow.problem_model import ConcaveProgram, PrimalDualPoint, SaddlePoint
from pdflow.projection import point_projection_orthant_product
from pdflow.dynamics import GainMatrices, field_unprojected

__all__ = [
    "DIVERGENCE_GUARD",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "integrate_batch",
    "read_trajectory_csv",
    "step_projected_euler",
    "step_projected_rk4",
    "write_trajectory_csv",
]

# Exact solutions are bounded (the squared distance to any optimizer is
# nonincreasing), so a state this large signals a misconfigured problem.
DIVERGENCE_GUARD = 1e12

_SCHEME_ALIASES = {
    "euler": "euler",
    "projected-euler": "euler",
    "rk4": "rk4",
    "projected-rk4": "rk4",
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Scheme, step size, horizon, stopping rule, and recording stride.

    ``stop_kkt_tol`` stops the run once the KKT residual falls strictly
    below it; 0.0 therefore disables early stopping.
    """

    scheme: str = "euler"
    step_h: float = 1e-3
    horizon_T: float = 50.0
    stop_kkt_tol: float = 1e-8
    record_stride: int = 1

    def __post_init__(self):
        scheme = _SCHEME_ALIASES.get(str(self.scheme).lower())
        if scheme is None:
            raise ValidationError(
                f"unknown scheme {self.scheme!r}; expected euler or rk4"
            )
        object.__setattr__(self, "scheme", scheme)
        if not (self.step_h > 0.0):
            raise ValidationError(f"step_h must be positive, got {self.step_h}")
        if not (self.horizon_T > 0.0):
            raise ValidationError(f"horizon_T must be positive, got {self.horizon_T}")
        if self.step_h > self.horizon_T:
            raise ValidationError(
                f"step_h={self.step_h} exceeds horizon_T={self.horizon_T}"
            )
        if self.stop_kkt_tol < 0.0:
            raise ValidationError(
                f"stop_kkt_tol must be nonnegative, got {self.stop_kkt_tol}"
            )
        if int(self.record_stride) < 1:
            raise ValidationError(
                f"record_stride must be >= 1, got {self.record_stride}"
            )
        object.__setattr__(self, "record_stride", int(self.record_stride))

    @property
    def n_steps(self) -> int:
        return max(int(round(self.horizon_T / self.step_h)), 1)


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one integration.

    ``v_values`` holds the squared-distance Lyapunov value at each
    recorded state when a reference saddle was supplied (the gain-weighted
    variant when the run used gains), else None.  ``masks`` holds, per
    recorded state, the constraint components at which the multiplier
    projection clamps (lambda_i = 0 and g_i < 0).
    """

    times: np.ndarray
    xs: np.ndarray
    lams: np.ndarray
    masks: np.ndarray
    v_values: Optional[np.ndarray]
    terminated_by: str

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def n(self) -> int:
        return self.xs.shape[1]

    @property
    def m(self) -> int:
        return self.lams.shape[1]

    def point(self, i: int) -> PrimalDualPoint:
        return PrimalDualPoint(self.xs[i], self.lams[i])

    def final_point(self) -> PrimalDualPoint:
        return self.point(len(self) - 1)

    def state_matrix(self) -> np.ndarray:
        """All recorded states stacked as rows of (x, lambda) vectors."""
        return np.hstack([self.xs, self.lams])


def _check_step_args(prog, p, h):
    prog.check_point(p)
    p.require_in_domain()
    if not (h > 0.0):
        raise ValidationError(f"step size must be positive, got {h}")


def _checked_field(prog, p, t=0.0):
    f = field_unprojected(prog, p)
    if not np.all(np.isfinite(f)):
        raise IntegrationError(
            f"non-finite field value at t={t}: field={f}", t=t, x=p.x, lam=p.lam
        )
    return f


def step_projected_euler(
    prog: ConcaveProgram, p: PrimalDualPoint, h: float
) -> PrimalDualPoint:
    """One explicit Euler step followed by projection onto the domain."""
    _check_step_args(prog, p, h)
    y = p.as_vector() + h * _checked_field(prog, p)
    return PrimalDualPoint.from_vector(
        point_projection_orthant_product(y, prog.n), prog.n
    )


def step_projected_rk4(
    prog: ConcaveProgram, p: PrimalDualPoint, h: float
) -> PrimalDualPoint:
    """Classical four-stage step on the raw field.

    Each stage state is projected onto the domain before evaluation and
    the final combination is projected as well, so all evaluations happen
    where the Lagrangian semantics hold.  Near the boundary the scheme
    degrades to first order, the ceiling for a discontinuous right-hand
    side.
    """
    _check_step_args(prog, p, h)
    n = prog.n
    y = p.as_vector()

    def proj_point(v):
        return PrimalDualPoint.from_vector(
            point_projection_orthant_product(v, n), n
        )

    s1 = _checked_field(prog, p)
    s2 = _checked_field(prog, proj_point(y + 0.5 * h * s1))
    s3 = _checked_field(prog, proj_point(y + 0.5 * h * s2))
    s4 = _checked_field(prog, proj_point(y + h * s3))
    return proj_point(y + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4))


def _make_generic_eval(prog: ConcaveProgram):
    m = prog.m
    empty = np.zeros(0)

    def eval_fn(x, lam):
        gx = np.asarray(prog.objective_grad(x), dtype=float)
        if m == 0:
            return gx, empty
        jac = np.asarray(prog.constraint_jac(x), dtype=float)
        g = np.asarray(prog.constraints(x), dtype=float)
        return gx - jac.T @ lam, g

    return eval_fn


def integrate(
    prog: ConcaveProgram,
    p0: PrimalDualPoint,
    cfg: IntegratorConfig,
    gains: Optional[GainMatrices] = None,
    saddle: Optional[SaddlePoint] = None,
) -> Trajectory:
    """Integrate from p0 until the horizon or the KKT stopping rule.

    Quadratic-backed programs run on the selected stepping kernel (see
    ``pdflow.kernels.BACKEND``); general programs run the same loop over
    their evaluator callables.  Raises IntegrationError if the state norm
    exceeds the divergence guard or the field turns non-finite.
    """
    prog.check_point(p0)
    p0.require_in_domain()
    if gains is not None:
        gains.check_dims(prog)
        k1, k2 = gains.k1, gains.k2
    else:
        k1, k2 = np.ones(prog.n), np.ones(prog.m)
    scheme = kernels.EULER if cfg.scheme == "euler" else kernels.RK4

    args = (
        p0.x,
        p0.lam,
        cfg.step_h,
        cfg.n_steps,
        cfg.record_stride,
        scheme,
        k1,
        k2,
        cfg.stop_kkt_tol,
        DIVERGENCE_GUARD,
    )
    if prog.quadratic is not None:
        spec = prog.quadratic
        result = kernels.run_quadratic(spec.P, spec.q, spec.A, spec.b, spec.d, *args)
    else:
        result = kernels.run_callable(_make_generic_eval(prog), *args)
    status, times, xs, lams, masks, t_fail, x_fail, lam_fail = result

    if status == kernels.STATUS_DIVERGED:
        raise IntegrationError(
            f"state norm exceeded the divergence guard {DIVERGENCE_GUARD:.0e} at "
            f"t={t_fail:.6g}; the problem is likely misconfigured (exact solutions "
            f"are bounded)",
            t=t_fail,
            x=x_fail,
            lam=lam_fail,
        )
    if status == kernels.STATUS_NONFINITE:
        raise IntegrationError(
            f"non-finite field value at t={t_fail:.6g}, state x={x_fail}, "
            f"lambda={lam_fail}",
            t=t_fail,
            x=x_fail,
            lam=lam_fail,
        )

    v_values = None
    if saddle is not None:
        dx = xs - saddle.x_star
        dl = lams - saddle.lam_star
        if gains is not None:
            v_values = 0.5 * ((dx * dx) @ (1.0 / k1) + (dl * dl) @ (1.0 / k2))
        else:
            v_values = 0.5 * (np.sum(dx * dx, axis=1) + np.sum(dl * dl, axis=1))

    terminated_by = "kkt-tolerance" if status == kernels.STATUS_KKT else "horizon"
    return Trajectory(
        times=times,
        xs=xs,
        lams=lams,
        masks=masks,
        v_values=v_values,
        terminated_by=terminated_by,
    )


def integrate_batch(
    prog: ConcaveProgram,
    points,
    cfg: IntegratorConfig,
    gains_list=None,
    saddle: Optional[SaddlePoint] = None,
    max_workers: Optional[int] = None,
) -> list:
    """Integrate a batch of initial conditions concurrently.

    Work items share no mutable state; results preserve input order.
    ``gains_list`` may be None, one GainMatrices for all, or a sequence
    matching ``points``.
    """
    points = list(points)
    if gains_list is None or isinstance(gains_list, GainMatrices):
        gains_list = [gains_list] * len(points)
    if len(gains_list) != len(points):
        raise ValidationError(
            f"gains_list length {len(gains_list)} != number of points {len(points)}"
        )
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(integrate, prog, p, cfg, g, saddle)
            for p, g in zip(points, gains_list)
        ]
        return [f.result() for f in futures]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectory_csv(traj: Trajectory, path):
    """Write the trajectory in the documented CSV layout.

    Columns: t, x_0..x_{n-1}, lambda_0..lambda_{m-1}, V, mask (mask as a
    0/1 bitstring, one character per constraint).  Floats are written with
    round-trip precision.  A leading comment line carries the termination
    reason.
    """
    n, m = traj.n, traj.m
    header = (
        ["t"]
        + [f"x_{i}" for i in range(n)]
        + [f"lambda_{j}" for j in range(m)]
        + ["V", "mask"]
    )
    with open(path, "w", newline="") as fh:
        fh.write(f"# pdflow-trajectory terminated_by={traj.terminated_by}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(traj)):
            row = [_fmt(traj.times[i])]
            row += [_fmt(v) for v in traj.xs[i]]
            row += [_fmt(v) for v in traj.lams[i]]
            row.append("" if traj.v_values is None else _fmt(traj.v_values[i]))
            row.append("".join("1" if f else "0" for f in traj.masks[i]))
            writer.writerow(row)


def read_trajectory_csv(path) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory_csv`."""
    terminated_by = "horizon"
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for token in first.strip().split():
                if token.startswith("terminated_by="):
                    terminated_by = token.split("=", 1)[1]
            header = next(csv.reader([fh.readline()]))
        else:
            header = next(csv.reader([first]))
        rows = list(csv.reader(fh))
    n = sum(1 for name in header if name.startswith("x_"))
    m = sum(1 for name in header if name.startswith("lambda_"))
    k = len(rows)
    times = np.empty(k)
    xs = np.empty((k, n))
    lams = np.empty((k, m))
    masks = np.empty((k, m), dtype=bool)
    v_values = np.empty(k)
    has_v = True
    for i, row in enumerate(rows):
        times[i] = float(row[0])
        xs[i] = [float(v) for v in row[1 : 1 + n]]
        lams[i] = [float(v) for v in row[1 + n : 1 + n + m]]
        v_field = row[1 + n + m]
        if v_field == "":
            has_v = False
        else:
            v_values[i] = float(v_field)
        bits = row[2 + n + m]
        masks[i] = [ch == "1" for ch in bits]
    return Trajectory(
        times=times,
        xs=xs,
        lams=lams,
        masks=masks,
        v_values=v_values if has_v else None,
        terminated_by=terminated_by,
    )


def config_with(cfg: IntegratorConfig, **kwargs) -> IntegratorConfig:
    """Return a copy of cfg with the given fields replaced."""
    return replace(cfg, **kwargs)

"""The primal-dual vector field and its projected / gain-scaled variants.

Sign convention, used everywhere: the multiplier slot of the raw field
holds g(x) itself (ascent in x, clamped ascent toward feasibility in
lambda).  Both the raw and the projected field read g through the same
evaluator, which makes the projected-system identity exact in floating
point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdflow.exceptions import DimensionMismatchError, ValidationError
from pdflow.problem_model import ConcaveProgram, PrimalDualPoint, grad_x_lagrangian
from pdflow.projection import positive_projection_vec, vector_projection

__all__ = [
    "GainMatrices",
    "field_primal_dual",
    "field_unprojected",
    "field_with_gains",
    "verify_projection_identity",
]


@dataclass(frozen=True)
class GainMatrices:
    """Diagonals of the positive-definite gain matrices (K1, K2)."""

    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        k1 = np.atleast_1d(np.asarray(self.k1, dtype=float))
        k2 = np.atleast_1d(np.asarray(self.k2, dtype=float))
        if np.any(k1 <= 0.0) or np.any(k2 <= 0.0):
            raise ValidationError(
                f"gain entries must be positive, got k1={k1}, k2={k2}"
            )
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)

    @classmethod
    def identity(cls, n: int, m: int) -> "GainMatrices":
        return cls(np.ones(n), np.ones(m))

    def check_dims(self, prog: ConcaveProgram):
        if self.k1.shape[0] != prog.n:
            raise DimensionMismatchError("k1", f"length {prog.n}", f"length {self.k1.shape[0]}")
        if self.k2.shape[0] != prog.m:
            raise DimensionMismatchError("k2", f"length {prog.m}", f"length {self.k2.shape[0]}")


def field_unprojected(prog: ConcaveProgram, p: PrimalDualPoint) -> np.ndarray:
    """Raw saddle field: (grad_x L(x, lambda), g(x)), length n + m.

    Defined on all of R^n x R^m; p need not have nonnegative multipliers.
    """
    prog.check_point(p)
    gx = grad_x_lagrangian(prog, p)
    if prog.m == 0:
        return gx
    g = np.asarray(prog.constraints(p.x), dtype=float)
    return np.concatenate([gx, g])


def field_primal_dual(prog: ConcaveProgram, p: PrimalDualPoint):
    """Projected primal-dual field; requires p in the domain.

    The multiplier slot applies the positive projection guarded by
    lambda.  Returns ``(field, mask)`` with mask flagging clamped
    components so callers can log mode switches without re-deriving the
    clamp condition.
    """
    p.require_in_domain()
    raw = field_unprojected(prog, p)
    n = prog.n
    lam_dot, mask = positive_projection_vec(raw[n:], p.lam)
    out = raw.copy()
    out[n:] = lam_dot
    return out, mask


def field_with_gains(
    prog: ConcaveProgram, gains: GainMatrices, p: PrimalDualPoint
) -> np.ndarray:
    """Gain-scaled projected field (K1 * x-part, K2 * lambda-part)."""
    gains.check_dims(prog)
    vec, _ = field_primal_dual(prog, p)
    out = vec.copy()
    out[: prog.n] *= gains.k1
    out[prog.n :] *= gains.k2
    return out


def verify_projection_identity(prog: ConcaveProgram, p: PrimalDualPoint) -> bool:
    """Check, exactly, that the projected field equals the vector
    projection of the raw field at p.

    Both sides are computed in the same float arithmetic, so equality is
    bitwise whenever the identity holds mathematically.
    """
    lhs, lhs_mask = field_primal_dual(prog, p)
    rhs, rhs_mask = vector_projection(p, field_unprojected(prog, p))
    return np.array_equal(lhs, rhs) and np.array_equal(lhs_mask, rhs_mask)

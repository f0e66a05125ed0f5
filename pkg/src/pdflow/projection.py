"""Projections onto the admissible domain K = R^n x R^m_{>=0}.

Two layers: the componentwise positive projection used by the multiplier
dynamics, and the point/vector projections of the domain viewed as a
closed convex set.  Active masks record which components were clamped.
"""

from __future__ import annotations

import numpy as np

from pdflow.exceptions import DimensionMismatchError, DomainError
from pdflow.problem_model import PrimalDualPoint

__all__ = [
    "active_mask",
    "point_projection_orthant_product",
    "positive_projection_scalar",
    "positive_projection_vec",
    "vector_projection",
]

# Tolerance used only when diagnosing states from external sources whose
# zero multipliers may carry float noise; integrator-produced states have
# exact zeros and use the default 0.0.
EXTERNAL_LAMBDA_TOL = 1e-12


def positive_projection_scalar(a: float, b: float) -> float:
    """Positive projection of a guarded by b: a if b > 0, max(0, a) if b = 0."""
    if b < 0.0:
        raise DomainError(f"guard value must be nonnegative, got {b}")
    if b == 0.0 and a < 0.0:
        return 0.0
    return float(a)


def positive_projection_vec(a, b):
    """Componentwise positive projection.

    Returns ``(projected, mask)`` where ``mask[i]`` is True iff component i
    was clamped (b_i = 0 and a_i < 0).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError("b", f"shape {a.shape}", f"shape {b.shape}")
    if np.any(b < 0.0):
        raise DomainError(f"guard vector must be nonnegative, got {b}")
    mask = (b == 0.0) & (a < 0.0)
    return np.where(mask, 0.0, a), mask


def point_projection_orthant_product(y, n: int) -> np.ndarray:
    """Nearest point of R^n x R^m_{>=0} to y (first n components free)."""
    y = np.asarray(y, dtype=float)
    out = y.copy()
    out[n:] = np.maximum(out[n:], 0.0)
    return out


def vector_projection(p: PrimalDualPoint, v):
    """Projection of a velocity v at the point p with respect to the domain.

    Multiplier components with lambda_j = 0 and v_j < 0 are zeroed (the
    field may not point out of the domain); everything else passes
    through.  This is the closed form of the difference-quotient limit of
    point projections for the orthant product.

    Returns ``(projected, mask)`` with mask flagging the zeroed components.
    """
    p.require_in_domain()
    n, m = p.x.shape[0], p.lam.shape[0]
    v = np.asarray(v, dtype=float)
    if v.shape != (n + m,):
        raise DimensionMismatchError("v", f"length {n + m}", f"shape {v.shape}")
    mask = (p.lam == 0.0) & (v[n:] < 0.0)
    out = v.copy()
    out[n:] = np.where(mask, 0.0, v[n:])
    return out, mask


def active_mask(lam, g_values, lam_tol: float = 0.0) -> np.ndarray:
    """Constraint components where the multiplier projection clamps.

    True at i iff lambda_i = 0 (within lam_tol) and g_i < 0.  Use
    ``lam_tol=EXTERNAL_LAMBDA_TOL`` for states not produced by the
    integrator.
    """
    lam = np.asarray(lam, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    return (lam <= lam_tol) & (g_values < 0.0)

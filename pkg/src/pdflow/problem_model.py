"""Concave programs, their Lagrangian, and a serializable quadratic subclass.

A program is

    maximize f(x)  subject to  g(x) <= 0,

with f strictly concave and each g_i convex, both continuously
differentiable.
General programs are built in-process from user-supplied evaluators;
convex-quadratic programs additionally round-trip through JSON and unlock
the compiled stepping kernel.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from pdflow.exceptions import (
    DimensionMismatchError,
    DomainError,
    SlaterUnverifiedWarning,
    ValidationError,
)

__all__ = [
    "ConcaveProgram",
    "PrimalDualPoint",
    "QuadraticProgramSpec",
    "SaddlePoint",
    "grad_lambda_lagrangian",
    "grad_x_lagrangian",
    "lagrangian",
    "load_problem",
    "load_quadratic",
    "save_problem",
]


def _vec(a, name, length=None):
    out = np.asarray(a, dtype=float)
    if out.ndim != 1:
        raise DimensionMismatchError(name, "1-d vector", f"{out.ndim}-d array")
    if length is not None and out.shape[0] != length:
        raise DimensionMismatchError(name, f"length {length}", f"length {out.shape[0]}")
    return out


@dataclass(frozen=True)
class PrimalDualPoint:
    """A point (x, lambda) in R^n x R^m.

    The admissible domain of the dynamics requires lambda >= 0; use
    :meth:`require_in_domain` at call sites that need it.  The raw
    (unprojected) vector field is also evaluated at points outside the
    domain, so construction itself does not reject negative multipliers.
    """

    x: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec(self.x, "x"))
        object.__setattr__(self, "lam", _vec(self.lam, "lambda"))

    @property
    def in_domain(self) -> bool:
        return bool(np.all(self.lam >= 0.0))

    def require_in_domain(self):
        if not self.in_domain:
            raise DomainError(
                f"point has negative multiplier components: lambda={self.lam}"
            )

    def as_vector(self) -> np.ndarray:
        """Concatenated (x, lambda) vector of length n + m."""
        return np.concatenate([self.x, self.lam])

    @classmethod
    def from_vector(cls, v, n: int) -> "PrimalDualPoint":
        v = _vec(v, "state vector")
        return cls(v[:n], v[n:])


@dataclass(frozen=True)
class SaddlePoint:
    """A certified primal-dual optimizer (x*, lambda*)."""

    x_star: np.ndarray
    lam_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_star", _vec(self.x_star, "x_star"))
        object.__setattr__(self, "lam_star", _vec(self.lam_star, "lam_star"))

    def as_point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x_star, self.lam_star)


@dataclass(frozen=True)
class ConcaveProgram:
    """A concave maximization problem with convex inequality constraints.

    Parameters
    ----------
    n, m : int
        Primal dimension and constraint count.
    objective : callable
        x -> f(x), scalar.
    objective_grad : callable
        x -> grad f(x), shape (n,).
    constraints : callable
        x -> g(x), shape (m,).
    constraint_jac : callable
        x -> Jacobian of g, shape (m, n); row i is grad g_i(x)^T.
    quadratic : QuadraticProgramSpec, optional
        Present when the program was built from quadratic data; enables
        the compiled integration kernel and file serialization.

    Instances are immutable and safe to share across concurrent solves.
    """

    n: int
    m: int
    objective: Callable[[np.ndarray], float]
    objective_grad: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    constraint_jac: Callable[[np.ndarray], np.ndarray]
    quadratic: Optional["QuadraticProgramSpec"] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"primal dimension must be positive, got {self.n}")
        if self.m < 0:
            raise ValidationError(f"constraint count must be nonnegative, got {self.m}")

    def check_point(self, p: PrimalDualPoint):
        """Raise DimensionMismatchError unless p matches (n, m)."""
        if p.x.shape[0] != self.n:
            raise DimensionMismatchError("x", f"length {self.n}", f"length {p.x.shape[0]}")
        if p.lam.shape[0] != self.m:
            raise DimensionMismatchError(
                "lambda", f"length {self.m}", f"length {p.lam.shape[0]}"
            )


def lagrangian(prog: ConcaveProgram, p: PrimalDualPoint) -> float:
    """L(x, lambda) = f(x) - lambda . g(x)."""
    prog.check_point(p)
    if prog.m == 0:
        return float(prog.objective(p.x))
    return float(prog.objective(p.x) - p.lam @ prog.constraints(p.x))


def grad_x_lagrangian(prog: ConcaveProgram, p: PrimalDualPoint) -> np.ndarray:
    """Gradient of L in x: grad f(x) - sum_i lambda_i grad g_i(x)."""
    prog.check_point(p)
    grad = np.asarray(prog.objective_grad(p.x), dtype=float)
    if prog.m == 0:
        return grad
    jac = np.asarray(prog.constraint_jac(p.x), dtype=float)
    return grad - jac.T @ p.lam


def grad_lambda_lagrangian(prog: ConcaveProgram, p: PrimalDualPoint) -> np.ndarray:
    """Gradient of L in lambda, which is -g(x) (independent of lambda)."""
    prog.check_point(p)
    return -np.asarray(prog.constraints(p.x), dtype=float)


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class QuadraticProgramSpec:
    """Data of a convex-quadratic instance.

    Objective  f(x) = -1/2 x^T P x + q^T x + c   with P symmetric positive
    definite, and constraints g_i(x) = 1/2 x^T A_i x + b_i^T x + d_i with
    each A_i symmetric positive semidefinite.  A_i = 0 gives a linear
    constraint.

    Arrays are stored stacked: A has shape (m, n, n), b has shape (m, n),
    d has shape (m,).
    """

    P: np.ndarray
    q: np.ndarray
    c: float
    A: np.ndarray = field(default=None)
    b: np.ndarray = field(default=None)
    d: np.ndarray = field(default=None)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        n = P.shape[0]
        q = _vec(self.q, "q", n)
        A = np.zeros((0, n, n)) if self.A is None else np.asarray(self.A, dtype=float)
        if A.ndim == 2:
            A = A[None, :, :]
        m = A.shape[0]
        b = np.zeros((m, n)) if self.b is None else np.atleast_2d(np.asarray(self.b, dtype=float))
        d = np.zeros(m) if self.d is None else np.atleast_1d(np.asarray(self.d, dtype=float))
        if P.shape != (n, n):
            raise DimensionMismatchError("P", f"({n}, {n})", str(P.shape))
        if A.shape != (m, n, n):
            raise DimensionMismatchError("A", f"({m}, {n}, {n})", str(A.shape))
        if b.shape != (m, n):
            raise DimensionMismatchError("b", f"({m}, {n})", str(b.shape))
        if d.shape != (m,):
            raise DimensionMismatchError("d", f"({m},)", str(d.shape))
        object.__setattr__(self, "P", _readonly(P))
        object.__setattr__(self, "q", _readonly(q))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "d", _readonly(d))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def validate(self, pd_tol: float = 1e-9):
        """Check symmetry and definiteness; raise ValidationError on failure.

        P must have minimum eigenvalue > pd_tol (strict concavity of f);
        each A_i must have minimum eigenvalue >= -pd_tol (convexity of g_i).
        """
        if not np.allclose(self.P, self.P.T, rtol=0.0, atol=1e-12):
            raise ValidationError("P is not symmetric")
        min_eig = float(np.linalg.eigvalsh(self.P).min())
        if min_eig <= pd_tol:
            raise ValidationError(
                f"P is not positive definite: minimum eigenvalue {min_eig:.3e} "
                f"<= {pd_tol:.0e}"
            )
        for i in range(self.m):
            Ai = self.A[i]
            if not np.allclose(Ai, Ai.T, rtol=0.0, atol=1e-12):
                raise ValidationError(f"A[{i}] is not symmetric")
            min_eig = float(np.linalg.eigvalsh(Ai).min())
            if min_eig < -pd_tol:
                raise ValidationError(
                    f"A[{i}] is not positive semidefinite: minimum eigenvalue "
                    f"{min_eig:.3e} < -{pd_tol:.0e}"
                )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "P": self.P.tolist(),
            "q": self.q.tolist(),
            "c": self.c,
            "constraints": [
                {"A": self.A[i].tolist(), "b": self.b[i].tolist(), "d": float(self.d[i])}
                for i in range(self.m)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuadraticProgramSpec":
        try:
            n = int(data["n"])
            m = int(data["m"])
            P = np.asarray(data["P"], dtype=float)
            q = np.asarray(data["q"], dtype=float)
            c = float(data["c"])
            cons = data.get("constraints", [])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed problem data: {exc}") from exc
        if len(cons) != m:
            raise ValidationError(
                f"problem declares m={m} but lists {len(cons)} constraints"
            )
        A = np.array([con["A"] for con in cons], dtype=float).reshape(m, n, n)
        b = np.array([con["b"] for con in cons], dtype=float).reshape(m, n)
        d = np.array([con["d"] for con in cons], dtype=float).reshape(m)
        return cls(P=P, q=q, c=c, A=A, b=b, d=d)


def load_quadratic(
    spec: QuadraticProgramSpec, slater_candidate=None
) -> ConcaveProgram:
    """Build a ConcaveProgram from quadratic data.

    Validates definiteness of the spec, then wires closed-form evaluators.
    If `slater_candidate` is given it must satisfy g(candidate) < 0
    componentwise (strict feasibility); without one the check is skipped
    with a SlaterUnverifiedWarning.
    """
    spec.validate()
    P, q, c = spec.P, spec.q, spec.c
    A, b, d = spec.A, spec.b, spec.d
    n, m = spec.n, spec.m

    def objective(x):
        x = np.asarray(x, dtype=float)
        return float(-0.5 * (x @ (P @ x)) + q @ x + c)

    def objective_grad(x):
        x = np.asarray(x, dtype=float)
        return q - P @ x

    def constraints(x):
        x = np.asarray(x, dtype=float)
        Ax = A @ x  # (m, n)
        return 0.5 * (Ax @ x) + b @ x + d

    def constraint_jac(x):
        x = np.asarray(x, dtype=float)
        return A @ x + b

    if m > 0:
        if slater_candidate is not None:
            cand = _vec(slater_candidate, "slater_candidate", n)
            gvals = constraints(cand)
            if not np.all(gvals < 0.0):
                raise ValidationError(
                    f"Slater candidate infeasible: g(candidate) = {gvals}"
                )
        else:
            warnings.warn(
                "no interior candidate supplied; strict feasibility (Slater) "
                "not verified",
                SlaterUnverifiedWarning,
                stacklevel=2,
            )

    return ConcaveProgram(
        n=n,
        m=m,
        objective=objective,
        objective_grad=objective_grad,
        constraints=constraints,
        constraint_jac=constraint_jac,
        quadratic=spec,
    )


def save_problem(spec: QuadraticProgramSpec, path):
    """Write a quadratic problem to a JSON file (decimal 64-bit floats)."""
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(path, slater_candidate=None) -> ConcaveProgram:
    """Read a problem JSON file and build the program.

    Raises ValidationError with line context on malformed JSON.
    """
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"cannot parse {path}: {exc.msg} (line {exc.lineno}, column {exc.colno})"
            ) from exc
    return load_quadratic(QuadraticProgramSpec.from_dict(data), slater_candidate)

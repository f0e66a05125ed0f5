"""Built-in quadratic test problems with hand-derived optimizers.

Each factory returns ``(program, saddle)`` where the saddle point was
derived by hand from the KKT conditions (active-set reasoning shown in
each docstring) and double-checked against an off-the-shelf NLP solver
before being frozen here.
"""

from __future__ import annotations

from pdflow.problem_model import (
    ConcaveProgram,
    QuadraticProgramSpec,
    SaddlePoint,
    load_quadratic,
)

__all__ = ["disc_halfplane_qp", "halfplane_qp", "interval_qp", "interval_qp_spec"]


def interval_qp_spec() -> QuadraticProgramSpec:
    """Spec of the 1-d demo problem: f(x) = -(x-5)^2, g(x) = x^2 - 1."""
    return QuadraticProgramSpec(
        P=[[2.0]], q=[10.0], c=-25.0, A=[[[2.0]]], b=[[0.0]], d=[-1.0]
    )


def interval_qp() -> tuple[ConcaveProgram, SaddlePoint]:
    """Maximize -(x-5)^2 subject to x^2 <= 1.

    The unconstrained maximizer x = 5 is infeasible, so the constraint is
    active at x* = 1.  Stationarity -2(x*-5) = lam * 2 x* gives lam* = 4.
    """
    prog = load_quadratic(interval_qp_spec(), slater_candidate=[0.0])
    return prog, SaddlePoint([1.0], [4.0])


def halfplane_qp() -> tuple[ConcaveProgram, SaddlePoint]:
    """Maximize -(x1^2 + 2 x2^2)/2 + 3 x1 + 4 x2 subject to x1 + x2 <= 3.

    The unconstrained maximizer (3, 2) violates the constraint, so it is
    active: stationarity gives x1 = 3 - lam, x2 = 2 - lam/2, and
    x1 + x2 = 3 yields lam* = 4/3, x* = (5/3, 4/3).
    """
    spec = QuadraticProgramSpec(
        P=[[1.0, 0.0], [0.0, 2.0]],
        q=[3.0, 4.0],
        c=0.0,
        A=[[[0.0, 0.0], [0.0, 0.0]]],
        b=[[1.0, 1.0]],
        d=[-3.0],
    )
    prog = load_quadratic(spec, slater_candidate=[0.0, 0.0])
    return prog, SaddlePoint([5.0 / 3.0, 4.0 / 3.0], [4.0 / 3.0])


def disc_halfplane_qp() -> tuple[ConcaveProgram, SaddlePoint]:
    """Maximize -||x||^2/2 + 4 x1 subject to ||x||^2/2 <= 2 and x2 >= -1.

    The unconstrained maximizer (4, 0) violates the disc constraint while
    satisfying the half-plane one.  With only the disc active,
    stationarity (q - x) = lam1 * x gives x = q / (1 + lam1); the active
    disc ||x|| = 2 then yields lam1* = 1, x* = (2, 0), lam2* = 0.
    """
    spec = QuadraticProgramSpec(
        P=[[1.0, 0.0], [0.0, 1.0]],
        q=[4.0, 0.0],
        c=0.0,
        A=[
            [[1.0, 0.0], [0.0, 1.0]],
            [[0.0, 0.0], [0.0, 0.0]],
        ],
        b=[[0.0, 0.0], [0.0, -1.0]],
        d=[-2.0, -1.0],
    )
    prog = load_quadratic(spec, slater_candidate=[0.0, 0.0])
    return prog, SaddlePoint([2.0, 0.0], [1.0, 0.0])

"""Pure-Python stepping kernel.

Reference implementation of the fixed-step projected integration loop.
The compiled kernel in ``_kernels.pyx`` mirrors this logic for quadratic
programs; this module also provides the generic loop over arbitrary
evaluator callables.  Semantics shared by both backends:

* projected explicit Euler: state <- proj(state + h * scaled_raw_field)
* projected RK4: four raw-field stages, each stage state projected onto
  the domain before evaluation, final combination projected
* multiplier clamping writes exact 0.0
* the KKT-residual stop test is strict (< tol), so tol = 0 disables it
* a step-wise divergence guard on the state norm
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

EULER = 0
RK4 = 1

STATUS_HORIZON = 0
STATUS_KKT = 1
STATUS_DIVERGED = 2
STATUS_NONFINITE = 3


def _kkt_total(gx, g, lam):
    # dual feasibility is zero by construction (lam >= 0 throughout)
    stationarity = np.sqrt(np.sum(gx * gx))
    primal = np.sqrt(np.sum(np.maximum(g, 0.0) ** 2))
    comp = abs(float(lam @ g)) if g.shape[0] else 0.0
    return max(stationarity, primal, comp)


def run_callable(eval_fn, x0, lam0, h, n_steps, stride, scheme, k1, k2,
                 stop_tol, guard):
    """Integrate with a generic evaluator.

    ``eval_fn(x, lam)`` must return ``(grad_x_lagrangian, g)`` as float
    arrays of shapes (n,) and (m,).  Returns

        (status, times, xs, lams, masks, t_fail, x_fail, lam_fail)

    with the failure fields set only for the diverged / non-finite
    statuses.
    """
    x = np.array(x0, dtype=float)
    lam = np.array(lam0, dtype=float)
    n, m = x.shape[0], lam.shape[0]
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)

    cap = n_steps // stride + 3
    times = np.empty(cap)
    xs = np.empty((cap, n))
    lams = np.empty((cap, m))
    masks = np.empty((cap, m), dtype=bool)
    nrec = 0

    def record(t, mask):
        nonlocal nrec
        times[nrec] = t
        xs[nrec] = x
        lams[nrec] = lam
        masks[nrec] = mask
        nrec += 1

    status = STATUS_HORIZON
    t_fail = x_fail = lam_fail = None
    k = 0
    while True:
        gx, g = eval_fn(x, lam)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(g))):
            status = STATUS_NONFINITE
            t_fail, x_fail, lam_fail = k * h, x.copy(), lam.copy()
            break
        mask = (lam == 0.0) & (g < 0.0)
        recorded = (k % stride == 0) or (k == n_steps)
        if recorded:
            record(k * h, mask)
        if _kkt_total(gx, g, lam) < stop_tol:
            if not recorded:
                record(k * h, mask)
            status = STATUS_KKT
            break
        if k == n_steps:
            break

        if scheme == EULER:
            x = x + h * (k1 * gx)
            lam = lam + h * (k2 * g)
            np.maximum(lam, 0.0, out=lam)
        else:
            s1x, s1l = k1 * gx, k2 * g
            gx2, g2 = eval_fn(x + 0.5 * h * s1x,
                              np.maximum(lam + 0.5 * h * s1l, 0.0))
            s2x, s2l = k1 * gx2, k2 * g2
            gx3, g3 = eval_fn(x + 0.5 * h * s2x,
                              np.maximum(lam + 0.5 * h * s2l, 0.0))
            s3x, s3l = k1 * gx3, k2 * g3
            gx4, g4 = eval_fn(x + h * s3x, np.maximum(lam + h * s3l, 0.0))
            s4x, s4l = k1 * gx4, k2 * g4
            x = x + (h / 6.0) * (s1x + 2.0 * s2x + 2.0 * s3x + s4x)
            lam = lam + (h / 6.0) * (s1l + 2.0 * s2l + 2.0 * s3l + s4l)
            np.maximum(lam, 0.0, out=lam)
        k += 1

        norm2 = float(x @ x) + float(lam @ lam)
        if norm2 > guard * guard:
            status = STATUS_DIVERGED
            t_fail, x_fail, lam_fail = k * h, x.copy(), lam.copy()
            break

    return (status, times[:nrec].copy(), xs[:nrec].copy(), lams[:nrec].copy(),
            masks[:nrec].copy(), t_fail, x_fail, lam_fail)


def make_quadratic_eval(P, q, A, b, d):
    """Closed-form (grad_x L, g) evaluator for quadratic problem data."""
    m = A.shape[0]
    if m == 0:
        empty = np.zeros(0)

        def eval_fn(x, lam):
            return q - P @ x, empty

        return eval_fn

    def eval_fn(x, lam):
        Ax = A @ x  # (m, n)
        jac = Ax + b
        g = 0.5 * (Ax @ x) + b @ x + d
        gx = q - P @ x - jac.T @ lam
        return gx, g

    return eval_fn


def run_quadratic(P, q, A, b, d, x0, lam0, h, n_steps, stride, scheme,
                  k1, k2, stop_tol, guard):
    """Quadratic-program entry point with the same contract as the
    compiled kernel."""
    P = np.ascontiguousarray(P, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    eval_fn = make_quadratic_eval(P, q, A, b, d)
    return run_callable(eval_fn, x0, lam0, h, n_steps, stride, scheme,
                        k1, k2, stop_tol, guard)

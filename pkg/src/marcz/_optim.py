"""Multistart searches over coefficient spheres.

Two problems recur across the package:

* extremes of a homogeneous ratio ``(sum a|A c|^r)^(1/r) / (sum b|B c|^s)^(1/s)``
  over directions ``c`` (sampling constants, Nikol'skii ratios with finite
  exponents), solved by batched normalized-gradient ascent with per-start
  adaptive step sizes;
* ``sup |f(x_j)| / ||f||_p`` at a fixed atom, a convex problem solved exactly
  (p = 2), by linear programming (p = 1) or by L-BFGS on the affine slice
  ``f(x_j) = 1``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, sparse

_TINY = 1e-300


def _log_pnorm(V: np.ndarray, w: np.ndarray, r: float) -> np.ndarray:
    A = np.abs(V)
    top = A.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    s = (A / safe[:, None]) ** r @ w
    with np.errstate(divide="ignore"):
        return np.where(top > 0, np.log(safe) + np.log(np.maximum(s, 0.0)) / r, -np.inf)


def _grad_log_pnorm(V: np.ndarray, w: np.ndarray, r: float, A: np.ndarray) -> np.ndarray:
    absV = np.abs(V)
    top = absV.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    X = absV / safe[:, None]
    num = (X ** (r - 1.0) * np.sign(V) * w[None, :]) @ A
    den = (X**r) @ w
    return num / (safe * np.maximum(den, _TINY))[:, None]


def log_ratio(C, A, a, r, B, b, s):
    """log of the norm ratio for each row of ``C``."""
    return _log_pnorm(C @ A.T, a, r) - _log_pnorm(C @ B.T, b, s)


def ratio_extremes(A, a, r, B, b, s, starts, mode="max", max_iter=300, step0=0.2,
                   tol=1e-10):
    """Best log-ratio over a batch of starting directions.

    Returns ``(best_value, best_direction, final_values)`` where values are
    logs of the norm-level ratio. ``mode`` is ``"max"`` or ``"min"``.
    """
    sign = 1.0 if mode == "max" else -1.0
    C = np.array(starts, dtype=float)
    C /= np.linalg.norm(C, axis=1, keepdims=True)
    val = log_ratio(C, A, a, r, B, b, s)
    eta = np.full(C.shape[0], step0)
    active = np.isfinite(val)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Ci = C[idx]
        g = _grad_log_pnorm(Ci @ A.T, a, r, A) - _grad_log_pnorm(Ci @ B.T, b, s, B)
        g -= np.sum(g * Ci, axis=1, keepdims=True) * Ci
        gn = np.linalg.norm(g, axis=1)
        flat = gn < 1e-15
        gn[flat] = 1.0
        trial = Ci + sign * (eta[idx] / gn)[:, None] * g
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        tv = log_ratio(trial, A, a, r, B, b, s)
        better = sign * (tv - val[idx]) > 0
        if mode == "min":
            better |= tv == -np.inf
        acc = idx[better]
        C[acc] = trial[better]
        val[acc] = tv[better]
        eta[acc] *= 1.5
        eta[idx[~better]] *= 0.3
        done = (eta[idx] < tol) | flat | ~np.isfinite(val[idx])
        active[idx[done]] = False
    k = int(np.argmax(sign * np.where(np.isnan(val), -sign * np.inf, val)))
    if mode == "min" and np.any(val == -np.inf):
        k = int(np.flatnonzero(val == -np.inf)[0])
    return float(val[k]), C[k].copy(), val


def polish(c, A, a, r, B, b, s, mode="max"):
    """Derivative-free refinement of a single direction (Nelder-Mead)."""
    sign = 1.0 if mode == "max" else -1.0

    def obj(x):
        return -sign * float(log_ratio(x[None, :], A, a, r, B, b, s)[0])

    c = np.asarray(c, dtype=float)
    f0 = obj(c)
    if not np.isfinite(f0):
        return c, -sign * f0
    res = optimize.minimize(obj, c, method="Nelder-Mead",
                            options={"xatol": 1e-13, "fatol": 1e-15,
                                     "maxiter": 4000 * c.size, "adaptive": True})
    if res.fun < f0:
        x = res.x / np.linalg.norm(res.x)
        return x, -sign * float(res.fun)
    return c, -sign * f0


def min_norm_at_atom(B, mu, p, j, Ginv=None):
    """min ||B c||_{L_p(mu)} subject to (B c)_j = 1, returned with its minimizer.

    The value is an upper bound on the true minimum (the returned point is
    feasible), so ``1 / value`` is a valid lower bound on the sup ratio.
    """
    bj = B[j]
    nb = float(bj @ bj)
    if nb == 0:
        return math.inf, np.zeros(B.shape[1])
    if p == 2:
        if Ginv is None:
            Ginv = np.linalg.inv(B.T @ (mu[:, None] * B))
        c = Ginv @ bj / float(bj @ Ginv @ bj)
        return float(math.sqrt(max(c @ (B.T @ (mu * (B @ c))), 0.0))), c
    if p == 1:
        return _min_l1_at_atom(B, mu, bj)
    c0 = bj / nb
    # orthonormal complement of bj
    Q, _ = np.linalg.qr(np.column_stack([bj, np.eye(B.shape[1])]))
    P = Q[:, 1:B.shape[1]]
    v0 = B @ c0
    W = B @ P

    def fg(z):
        v = v0 + W @ z
        av = np.abs(v)
        f = float(mu @ av**p)
        g = p * (W.T @ (mu * av ** (p - 1.0) * np.sign(v)))
        return f, g

    # Christoffel-direction start: c proportional to G^{-1} b_j
    if Ginv is None:
        Ginv = np.linalg.inv(B.T @ (mu[:, None] * B))
    cs = Ginv @ bj / float(bj @ Ginv @ bj)
    z0 = P.T @ (cs - c0)
    z = z0
    if P.shape[1] > 0:
        res = optimize.minimize(fg, z0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
        if res.fun <= fg(z0)[0]:
            z = res.x
    c = c0 + P @ z
    val = float(mu @ np.abs(B @ c) ** p) ** (1.0 / p)
    return val, c


def _min_l1_at_atom(B, mu, bj):
    M, N = B.shape
    I = sparse.identity(M, format="csr")
    Bs = sparse.csr_matrix(B)
    A_ub = sparse.vstack([sparse.hstack([Bs, -I]), sparse.hstack([-Bs, -I])], format="csr")
    b_ub = np.zeros(2 * M)
    A_eq = np.concatenate([bj, np.zeros(M)])[None, :]
    cost = np.concatenate([np.zeros(N), mu])
    bounds = [(None, None)] * N + [(0, None)] * M
    res = optimize.linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                           bounds=bounds, method="highs")
    if res.status != 0:
        return math.inf, np.zeros(N)
    c = res.x[:N]
    # rescale so the constraint holds exactly
    c = c / float(bj @ c)
    return float(mu @ np.abs(B @ c)), c

"""Random points in subspace balls and farthest-point separated sets."""

from __future__ import annotations

import math

import numpy as np

from ._rng import chunked_normal, rng
from .space import lp_norms


def ball_candidates(U: np.ndarray, mu: np.ndarray, p: float, n: int, seed: int,
                    label: int = 0, boundary_fraction: float = 0.5):
    """``n`` coefficient vectors in the unit L_p(mu) ball of span(U).

    Directions are Gaussian in the coordinates of ``U``; a ``boundary_fraction``
    of the points sits on the unit sphere, the rest at radius ``u^(1/N)``.
    Returns ``(C, V)`` with ``V = C U^T`` the values on the atoms.
    """
    N = U.shape[1]
    C = chunked_normal(seed, n, N, label=label)
    V = C @ U.T
    norms = lp_norms(mu, V, p)
    norms[norms == 0] = 1.0
    g = rng(seed, label, 10**6)
    r = g.random(n) ** (1.0 / N)
    r[g.random(n) < boundary_fraction] = 1.0
    scale = r / norms
    return C * scale[:, None], V * scale[:, None]


def _dist_to(Vs: np.ndarray, v: np.ndarray, mu: np.ndarray, q: float) -> np.ndarray:
    D = np.abs(Vs - v[None, :])
    if math.isinf(q):
        return D.max(axis=1)
    if q == 2:
        return np.sqrt(D * D @ mu)
    if q == 1:
        return D @ mu
    return (D**q @ mu) ** (1.0 / q)


def restrict_metric(V: np.ndarray, mu: np.ndarray, q: float):
    """Drop massless atoms (they never contribute to an L_q(mu) distance)."""
    keep = mu > 0
    return np.ascontiguousarray(V[:, keep]), mu[keep]


def farthest_point_traversal(V: np.ndarray, mu: np.ndarray, q: float,
                             stop_eps: float | None = None,
                             max_points: int | None = None):
    """Greedy farthest-point insertion over the rows of ``V``.

    Starting from row 0, repeatedly inserts the row farthest (in L_q(mu))
    from the current set; ties go to the lowest row index. Insertion radii are
    nonincreasing, so for any ``eps`` the prefix of points inserted at radius
    ``>= eps`` is eps-separated and covers every row within ``eps``.

    Returns ``(order, radii, next_radius)`` where ``next_radius`` is the
    largest remaining distance when the traversal stopped.
    """
    V, mu = restrict_metric(V, mu, q)
    S = V.shape[0]
    order = [0]
    radii = [math.inf]
    dmin = _dist_to(V, V[0], mu, q)
    alive = np.arange(S)
    while True:
        if stop_eps is not None:
            alive = alive[dmin[alive] >= stop_eps]
        if alive.size == 0:
            return np.array(order), np.array(radii), 0.0
        k = int(np.argmax(dmin[alive]))
        j = int(alive[k])
        r = float(dmin[j])
        if r <= 0 or (max_points is not None and len(order) >= max_points):
            return np.array(order), np.array(radii), r
        order.append(j)
        radii.append(r)
        dmin[alive] = np.minimum(dmin[alive], _dist_to(V[alive], V[j], mu, q))


def min_distances(V_set: np.ndarray, V_probe: np.ndarray, mu: np.ndarray, q: float) -> np.ndarray:
    """Distance from each probe row to the nearest row of ``V_set``."""
    keep = mu > 0
    A, B, w = V_set[:, keep], V_probe[:, keep], mu[keep]
    out = np.full(B.shape[0], math.inf)
    for v in A:
        out = np.minimum(out, _dist_to(B, v, w, q))
    return out

"""Orthonormal bases, Christoffel function and the model constants.

K1 is the Christoffel bound ``max_x w(x)^2 / N``; K2 the constant in
``||f||_inf <= K2 ||f||_q`` with ``q = max(2, ceil(log2 N))``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _optim
from ._rng import chunked_normal, pmap, rng
from .errors import InvariantError, PreconditionError, RankDeficiencyError
from .space import Subspace, gram, lp_norms

log = logging.getLogger(__name__)

GRAM_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    christoffel: np.ndarray
    K1: float
    K2: float | None = None
    q_logN: int | None = None
    log_base: str = "2"

    @property
    def N(self) -> int:
        return int(round(float(np.max(self.christoffel) ** 2 / self.K1))) if self.K1 else 0


@dataclass(frozen=True)
class MonteCarloMean:
    value: float
    stderr: float
    trials: int


def orthonormalize(subspace: Subspace) -> Subspace:
    """Map ``B -> B G^{-1/2}`` with ``G`` the mu-Gram matrix.

    Raises RankDeficiencyError when the smallest Gram eigenvalue is below
    ``1e-10`` times the largest.
    """
    G = gram(subspace)
    evals, V = np.linalg.eigh(G)
    if evals[0] < GRAM_RTOL * evals[-1] or evals[-1] <= 0:
        raise RankDeficiencyError(
            f"Gram eigenvalue ratio {evals[0] / max(evals[-1], 1e-300):.3e} below {GRAM_RTOL}")
    inv_sqrt = (V / np.sqrt(evals)) @ V.T
    U = subspace.values @ inv_sqrt
    return Subspace(space=subspace.space, values=U, orthonormal=True, label=subspace.label)


def ensure_orthonormal(subspace: Subspace) -> Subspace:
    return subspace if subspace.orthonormal else orthonormalize(subspace)


def christoffel(subspace: Subspace, check: bool = True, seed: int = 0,
                with_k2: bool = False, restarts: int = 64) -> SpectralProfile:
    """Christoffel function ``w(x) = (sum_i u_i(x)^2)^(1/2)`` and K1.

    With ``check`` the trace identity and the pointwise extremal property
    (sup |f(x)|/||f||_2 = w(x), attained at c proportional to u(x)) are
    verified at 5 random atoms.
    """
    sub = ensure_orthonormal(subspace)
    U = sub.values
    mu = sub.space.weights
    N = sub.dimension
    w2 = np.einsum("ij,ij->i", U, U)
    w = np.sqrt(w2)
    support = mu > 0
    K1 = float(w2[support].max() / N)
    if check:
        trace = float(mu @ w2)
        if abs(trace - N) > 1e-6:
            raise InvariantError(f"trace identity failed: sum mu w^2 = {trace}, N = {N}")
        _check_pointwise_extremal(U, w, seed)
    K2 = q = None
    if with_k2 and N >= 2:
        q = k2_exponent(N)
        K2 = k2_constant(sub, restarts=restarts, seed=seed)
    return SpectralProfile(christoffel=w, K1=K1, K2=K2, q_logN=q)


def _check_pointwise_extremal(U, w, seed, atoms=5, trials=256):
    g = rng(seed, 11)
    M, N = U.shape
    for j in g.choice(M, size=min(atoms, M), replace=False):
        C = g.standard_normal((trials, N))
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        observed = np.abs(C @ U[j]).max()
        if observed > w[j] + 1e-6:
            raise InvariantError(f"|f(x)| = {observed} exceeds w(x) = {w[j]} at atom {j}")
        if w[j] > 0:
            attained = abs(U[j] @ (U[j] / w[j]))
            if abs(attained - w[j]) > 1e-6:
                raise InvariantError(f"c ~ u(x) gives {attained}, expected {w[j]}")


def k2_exponent(N: int) -> int:
    return max(2, math.ceil(math.log2(N)))


def sup_ratio_inf(subspace: Subspace, p: float, restarts: int = 64) -> float:
    """Lower bound on ``sup ||f||_inf / ||f||_p`` over the subspace.

    The sup equals ``max_j 1 / min{||f||_p : f(x_j) = 1}``. Atoms are ranked
    by the ratio of the Christoffel-direction function peaked at them, and the
    convex minimization is solved at the ``restarts`` best ones.
    """
    sub = ensure_orthonormal(subspace)
    U = sub.values
    mu = sub.space.weights
    support = np.flatnonzero(mu > 0)
    # f_j = sum_i u_i(x_j) u_i peaks at x_j with value w(x_j)^2
    w2 = np.einsum("ij,ij->i", U[support], U[support])
    if p == 2:
        return float(np.sqrt(w2.max()))
    score = np.zeros(support.size)
    for start in range(0, support.size, 512):
        blk = support[start:start + 512]
        F = U[blk] @ U.T
        score[start:start + 512] = w2[start:start + 512] / np.maximum(lp_norms(mu, F, p), 1e-300)
    order = np.argsort(-score, kind="stable")[:restarts]
    Ginv = np.eye(U.shape[1])

    def solve(j):
        val, _ = _optim.min_norm_at_atom(U, mu, p, int(support[j]), Ginv=Ginv)
        return 1.0 / val if val > 0 else math.inf

    best = max(pmap(solve, order))
    return float(max(best, score.max()))


def sup_ratio_finite(subspace: Subspace, p: float, q: float, restarts: int = 64,
                     seed: int = 0) -> float:
    """Lower bound on ``sup ||f||_q / ||f||_p`` for finite ``q`` by multistart ascent."""
    sub = ensure_orthonormal(subspace)
    U = sub.values
    mu = sub.space.weights
    N = U.shape[1]
    g = rng(seed, 12)
    starts = [g.standard_normal((restarts, N))]
    w2 = np.einsum("ij,ij->i", U, U)
    top = np.argsort(-w2, kind="stable")[:max(1, restarts // 4)]
    starts.append(U[top])
    S = np.vstack(starts)
    best, c, _ = _optim.ratio_extremes(U, mu, q, U, mu, p, S, mode="max")
    c, best = _optim.polish(c, U, mu, q, U, mu, p, mode="max")
    return float(math.exp(best))


def k2_constant(subspace: Subspace, restarts: int = 64, seed: int = 0) -> float:
    """Measured ``sup ||f||_inf / ||f||_q``, ``q = max(2, ceil(log2 N))``; a lower bound on K2."""
    N = subspace.dimension
    if N < 2:
        raise PreconditionError("K2 needs N >= 2")
    q = k2_exponent(N)
    value = sup_ratio_inf(subspace, q, restarts=restarts)
    log.debug("K2 lower bound %.6g with q=%d, %d restarts", value, q, restarts)
    return value


def nikolskii_constant(subspace: Subspace, p: float, q: float, restarts: int = 64,
                       seed: int = 0, check: bool = True) -> float:
    """Measured ``sup ||f||_q / ||f||_p`` for ``1 <= p < q <= inf``.

    For ``p <= 2`` the value must not exceed ``(K1 N)^(1/p - 1/q)``; a
    violation raises InvariantError.
    """
    if not (1 <= p < q):
        raise PreconditionError("need 1 <= p < q <= inf")
    sub = ensure_orthonormal(subspace)
    if math.isinf(q):
        value = sup_ratio_inf(sub, p, restarts=restarts)
    else:
        value = sup_ratio_finite(sub, p, q, restarts=restarts, seed=seed)
    if check and p <= 2:
        prof = christoffel(sub, check=False)
        bound = (prof.K1 * sub.dimension) ** (1.0 / p - (0.0 if math.isinf(q) else 1.0 / q))
        if value > bound + 1e-6:
            raise InvariantError(f"Nikol'skii ratio {value} exceeds bound {bound}")
    return float(value)


def sphere_moment(N: int, q: float) -> float:
    """``(int_{S^{N-1}} |x . y|^q dsigma(y))^(1/q)`` for a unit vector x."""
    if N < 1 or q <= 0:
        raise PreconditionError("need N >= 1 and q > 0")
    lg = gammaln(N / 2) + gammaln((q + 1) / 2) - gammaln(0.5) - gammaln((N + q) / 2)
    return float(math.exp(lg / q))


def _sphere_samples(seed, trials, N, label):
    X = chunked_normal(seed, trials, N, label=label)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sphere_moment_mc(N: int, q: float, trials: int = 10_000, seed: int = 0) -> MonteCarloMean:
    """Monte Carlo estimate of ``sphere_moment`` with a delta-method standard error."""
    if trials < 2:
        raise PreconditionError("need at least 2 trials")
    Y = _sphere_samples(seed, trials, N, 21)
    z = np.abs(Y[:, 0]) ** q
    m = z.mean()
    se_m = z.std(ddof=1) / math.sqrt(trials)
    value = m ** (1.0 / q)
    return MonteCarloMean(value=float(value), stderr=float(value * se_m / (q * m)), trials=trials)


def gaussian_mean_norm(subspace: Subspace, q: float, trials: int = 10_000,
                       seed: int = 0) -> MonteCarloMean:
    """Mean of ``||sum_j xi_j u_j||_q`` over xi uniform on the unit sphere."""
    if trials < 100:
        raise PreconditionError("need at least 100 trials")
    if q < 1 or math.isinf(q):
        raise PreconditionError("q must lie in [1, inf)")
    sub = ensure_orthonormal(subspace)
    Xi = _sphere_samples(seed, trials, sub.dimension, 22)
    vals = np.concatenate([lp_norms(sub.space.weights, Xi[i:i + 1024] @ sub.values.T, q)
                           for i in range(0, trials, 1024)])
    return MonteCarloMean(value=float(vals.mean()),
                          stderr=float(vals.std(ddof=1) / math.sqrt(trials)), trials=trials)

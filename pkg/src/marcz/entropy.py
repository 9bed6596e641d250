"""Empirical covering, packing and entropy numbers of subspace balls.

The ball is ``X_N^p = {f in X_N : ||f||_p <= 1}``, measured in L_q.
Separated sets are grown by farthest-point insertion over a fixed budget of
random ball points. Insertion radii are nonincreasing, so one traversal
answers every scale at once: the points inserted at radius ``>= eps`` form
an eps-separated set that covers all candidates within eps.

Which directions are rigorous:

* ``log2(count)`` of a separated set is a true lower bound on the packing
  entropy, and every separated set satisfies the volumetric bound;
* the same number as a covering entropy upper bound is conditional on the
  candidates being dense in the ball ("maximality-conditional").
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _nets
from .analysis import christoffel, ensure_orthonormal, k2_constant, nikolskii_constant
from .errors import CheckFailed, PreconditionError
from .space import Subspace, coordinate_subspace, lp_norm

log = logging.getLogger(__name__)

SLACK_BITS = 1.0


@dataclass(frozen=True)
class EntropyEstimate:
    p: float
    q: float
    lower: float
    upper: float
    method: str
    budget: int
    eps: float | None = None
    k: int | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise PreconditionError(f"lower {self.lower} exceeds upper {self.upper}")


def _interval_length(sub: Subspace, p: float, q: float) -> float:
    u = sub.values[:, 0]
    return 2.0 * lp_norm(sub.space, u, q) / lp_norm(sub.space, u, p)


def _traverse(sub, p, q, budget, seed, stop_eps=None, max_points=None):
    mu = sub.space.weights
    _, V = _nets.ball_candidates(sub.values, mu, p, budget, seed, label=91)
    return _nets.farthest_point_traversal(V, mu, q, stop_eps=stop_eps, max_points=max_points)


def pack_greedy(subspace: Subspace, p: float, q: float, eps: float, budget: int = 100_000,
                seed: int = 0, max_count: int | None = None) -> EntropyEstimate:
    """eps-separated set in ``X_N^p`` under the L_q metric; reports ``log2(count)``.

    ``max_count`` stops the insertion early; the count then remains a valid
    packing lower bound and the result is flagged ``saturated``.

    For N = 1 the ball is a segment of length ``L = 2 ||u||_q / ||u||_p`` and
    the greedy count is exactly ``floor(L / eps) + 1``.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if budget < 1000:
        raise PreconditionError("budget must be at least 1000")
    N = subspace.dimension
    if N == 1:
        L = _interval_length(subspace, p, q)
        count = math.floor(L / eps * (1 + 1e-15)) + 1
        H = math.log2(count)
        return EntropyEstimate(p=p, q=q, eps=eps, lower=H, upper=H, method="lattice-net",
                               budget=0, detail={"count": count, "length": L})
    order, _, _ = _traverse(subspace, p, q, budget, seed, stop_eps=eps, max_points=max_count)
    count = int(order.size)
    H = math.log2(count)
    return EntropyEstimate(p=p, q=q, eps=eps, lower=H, upper=H, method="greedy-packing",
                           budget=budget,
                           detail={"count": count, "seed": seed, "upper_conditional": True,
                                   "saturated": max_count is not None and count >= max_count})


def packing_counts(subspace: Subspace, p: float, q: float, eps_grid, budget: int = 100_000,
                   seed: int = 0, max_count: int | None = None) -> np.ndarray:
    """Greedy counts over a grid of scales from a single traversal (capped at ``max_count``)."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    if subspace.dimension == 1:
        L = _interval_length(subspace, p, q)
        return np.floor(L / eps_grid * (1 + 1e-15)).astype(int) + 1
    _, radii, _ = _traverse(subspace, p, q, budget, seed, stop_eps=float(eps_grid.min()),
                            max_points=max_count)
    return np.array([int(np.count_nonzero(radii >= e)) for e in eps_grid])


def entropy_number(subspace: Subspace, p: float, q: float, k: int, budget: int = 100_000,
                   seed: int = 0) -> EntropyEstimate:
    """Bracket for ``eps_k = inf{eps : H_eps <= k}``.

    With ``r`` the radius at which the ``(2^k + 1)``-th point is inserted,
    the first ``2^k`` points cover the candidates at scale ``r`` (upper,
    conditional) and the first ``2^k + 1`` points are r-separated, so no
    ``2^k`` balls of radius below ``r/2`` can cover them (lower, rigorous).
    """
    if k < 1:
        raise PreconditionError("k must be >= 1")
    n = 2**k
    N = subspace.dimension
    if N == 1:
        L = _interval_length(subspace, p, q)
        r = L / n
        return EntropyEstimate(p=p, q=q, k=k, lower=r / 2, upper=r, method="lattice-net",
                               budget=0, detail={"greedy_eps": r, "length": L})
    if n + 1 > budget:
        raise PreconditionError(f"budget {budget} cannot resolve 2^{k} + 1 points")
    order, radii, nxt = _traverse(subspace, p, q, budget, seed, max_points=n + 1)
    exhausted = order.size < n + 1
    if exhausted:
        # every candidate was inserted; nothing separates 2^k + 1 points
        r_cover = 0.0 if order.size <= n else float(nxt)
        lower, upper = 0.0, float(radii[-1]) if order.size > 1 else 0.0
    else:
        r_cover = float(radii[n])
        lower, upper = r_cover / 2, r_cover
    return EntropyEstimate(p=p, q=q, k=k, lower=lower, upper=upper, method="greedy-packing",
                           budget=budget,
                           detail={"greedy_eps": r_cover, "seed": seed, "exhausted": exhausted,
                                   "upper_conditional": True})


def volumetric_lower_bound(N: int, eps: float) -> float:
    """``log2(pi^((N-1)/2) Gamma((N+1)/2) / (2^N eps^N))``.

    A lower bound on the entropy at scale ``2 eps`` of the Euclidean unit
    ball of R^N in the l_1 metric.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    ln = 0.5 * (N - 1) * math.log(math.pi) + gammaln(0.5 * (N + 1)) - N * math.log(2 * eps)
    return float(ln / math.log(2))


def volumetric_eps_k(N: int, k: int) -> float:
    """Largest scale ``2 eps`` at which the volumetric bound exceeds k bits."""
    c = (0.5 * (N - 1) * math.log(math.pi) + gammaln(0.5 * (N + 1))) / math.log(2) - N
    return 2.0 * 2 ** ((c - k) / N)


# ------------------------------------------------------------------ checks

@dataclass(frozen=True)
class SandwichReport:
    N: int
    p: float
    eps: float
    lower: float
    upper: float
    band_low: float
    band_high: float
    passed: bool


def check_ball_entropy_sandwich(N: int, p: float, eps: float, budget: int = 100_000,
                                seed: int = 0, strict: bool = True) -> SandwichReport:
    """Entropy of the unit l_p^N ball in its own norm against ``[N log2(1/eps), N log2(1 + 2/eps)]``.

    The rigorous lower estimate must not exceed the upper end; the
    conditional upper estimate must reach the lower end minus one bit.
    """
    if not 0 < eps <= 1:
        raise PreconditionError("eps must lie in (0, 1]")
    if N > 5:
        raise PreconditionError("sandwich checks are limited to N <= 5")
    est = pack_greedy(coordinate_subspace(N, p), p, p, eps, budget=budget, seed=seed)
    lo, hi = N * math.log2(1 / eps), N * math.log2(1 + 2 / eps)
    passed = est.lower <= hi + 1e-12 and est.upper >= lo - SLACK_BITS
    rep = SandwichReport(N=N, p=p, eps=eps, lower=est.lower, upper=est.upper, band_low=lo,
                         band_high=hi, passed=passed)
    if strict and not passed:
        raise CheckFailed(f"entropy estimate outside [{lo:.4g} - 1, {hi:.4g}]", rep)
    return rep


def transfer_exponents(p: float, q: float) -> tuple[float, float]:
    """``theta = (1/2 - 1/q)/(1/p - 1/q)`` and ``a = 2^(theta/(1 - theta))``."""
    iq = 0.0 if math.isinf(q) else 1.0 / q
    theta = (0.5 - iq) / (1.0 / p - iq)
    return theta, 2 ** (theta / (1 - theta))


def transfer_scales(p: float, q: float, eps: float, diameter: float) -> list[float]:
    """Scales of the right-hand side truncated where they reach the diameter."""
    theta, a = transfer_exponents(p, q)
    base = eps**theta
    scales = []
    s = 1
    while True:
        r = 2**-3 * a ** (s - 1) * base
        if r >= diameter:
            break
        scales.append(r)
        s += 1
    if base < diameter:
        scales.append(base)
    return scales


@dataclass(frozen=True)
class TransferReport:
    p: float
    q: float
    theta: float
    a: float
    rows: list
    passed: bool


def _diameter_bound(sub: Subspace, q: float) -> float:
    """Upper bound on the L_q diameter of the unit L_2 ball (orthonormal basis)."""
    w = christoffel(sub, check=False).christoffel.max()
    if math.isinf(q):
        return 2.0 * w
    return 2.0 * w ** max(0.0, 1 - 2 / q)


def check_transfer_inequality(subspace: Subspace, p: float, q: float, eps_list,
                              budget: int = 20_000, seed: int = 0, max_count: int = 512,
                              strict: bool = True) -> TransferReport:
    """Packing entropy of ``X_N^p`` against the multiscale sum over ``X_N^2``.

    For each eps the left side is the rigorous greedy lower estimate on
    ``X_N^p``; the right side sums conditional upper estimates on ``X_N^2``
    at the truncated scales. Passing means ``lhs <= rhs + 2`` bits. Counts
    are capped at ``max_count``, which keeps the left side rigorous and can
    only lower the right side.
    """
    if not 1 <= p < 2:
        raise PreconditionError("transfer check needs 1 <= p < 2")
    if subspace.dimension > 5:
        raise PreconditionError("transfer check limited to N <= 5")
    sub = ensure_orthonormal(subspace)
    theta, a = transfer_exponents(p, q)
    diam = _diameter_bound(sub, q)
    rows = []
    for eps in eps_list:
        lhs = pack_greedy(sub, p, q, eps, budget=budget, seed=seed, max_count=max_count).lower
        scales = transfer_scales(p, q, eps, diam)
        if scales:
            counts = packing_counts(sub, 2.0, q, scales, budget=budget, seed=seed + 1,
                                    max_count=max_count)
            rhs = float(np.sum(np.log2(counts)))
        else:
            rhs = 0.0
        rows.append({"eps": eps, "lhs_lower": lhs, "rhs_upper": rhs, "terms": len(scales),
                     "passed": lhs <= rhs + 2.0})
    passed = all(r["passed"] for r in rows)
    rep = TransferReport(p=p, q=q, theta=theta, a=a, rows=rows, passed=passed)
    if strict and not passed:
        raise CheckFailed("entropy transfer inequality violated", rep)
    return rep


@dataclass(frozen=True)
class ScalingReport:
    p: float
    q: float
    beta: float
    rows: list
    S0: float
    bounded: bool


def check_entropy_scaling(family, p: float, q: float, seed: int = 0, budget: int = 20_000,
                          restarts: int = 16, volumetric: bool = False) -> ScalingReport:
    """Normalized entropy numbers ``eps_k / ((K1 K2^2 log2 N)^beta (N/k)^beta)`` across a family.

    ``beta = 1/p - 1/q``. The family-wide constant is twice the largest
    ratio of the smallest member; growth beyond it is reported through
    ``bounded`` rather than raised. With ``volumetric`` every row also
    carries the l_1 volumetric lower bound on eps_k of the Euclidean ball,
    which is what the L_inf metric becomes on a Rademacher subspace.
    """
    if not 1 <= p <= 2:
        raise PreconditionError("scaling check needs 1 <= p <= 2")
    beta = 1.0 / p - (0.0 if math.isinf(q) else 1.0 / q)
    rows = []
    for sub in family:
        sub = ensure_orthonormal(sub)
        N = sub.dimension
        if N < 2 or N > 12:
            raise PreconditionError("family members need 2 <= N <= 12")
        K1 = christoffel(sub, check=False).K1
        K2 = k2_constant(sub, restarts=restarts, seed=seed)
        scale0 = (K1 * K2**2 * math.log2(N)) ** beta
        for k in sorted({1, math.ceil(N / 4), math.ceil(N / 2), N}):
            est = entropy_number(sub, p, q, k, budget=budget, seed=seed)
            norm = scale0 * (N / k) ** beta
            row = {"N": N, "k": k, "K1": K1, "K2": K2, "eps_lower": est.lower,
                   "eps_upper": est.upper, "ratio": est.upper / norm}
            if volumetric:
                row["volumetric_eps_lower"] = volumetric_eps_k(N, k)
            rows.append(row)
    smallest = min(r["N"] for r in rows)
    S0 = 2.0 * max(r["ratio"] for r in rows if r["N"] == smallest)
    bounded = all(r["ratio"] <= S0 for r in rows)
    if not bounded:
        log.warning("normalized entropy ratio exceeds the family constant %.4g", S0)
    return ScalingReport(p=p, q=q, beta=beta, rows=rows, S0=S0, bounded=bounded)


@dataclass(frozen=True)
class NikolskiiEntropyReport:
    p: float
    N: int
    nikolskii: float
    eps1_lower: float
    eps1_upper: float
    B: float
    bound: float
    passed: bool


def check_nikolskii_from_entropy(subspace: Subspace, p: float, seed: int = 0,
                                 budget: int = 20_000, restarts: int = 64,
                                 strict: bool = True) -> NikolskiiEntropyReport:
    """``sup ||f||_inf / ||f||_p <= 4 B N^(1/p)`` with ``B = eps_1 / N^(1/p)``.

    ``eps_1`` is the upper end of the entropy-number bracket in L_inf; the
    width of the bracket is added as slack.
    """
    sub = ensure_orthonormal(subspace)
    N = sub.dimension
    if N == 1:
        u = sub.values[:, 0]
        nik = lp_norm(sub.space, u, math.inf) / lp_norm(sub.space, u, p)
    else:
        nik = nikolskii_constant(sub, p, math.inf, restarts=restarts, seed=seed, check=p <= 2)
    est = entropy_number(sub, p, math.inf, 1, budget=budget, seed=seed)
    B = est.upper / N ** (1.0 / p)
    bound = 4 * B * N ** (1.0 / p) + 4 * (est.upper - est.lower)
    passed = nik <= bound + 1e-9
    rep = NikolskiiEntropyReport(p=p, N=N, nikolskii=nik, eps1_lower=est.lower,
                                 eps1_upper=est.upper, B=B, bound=bound, passed=passed)
    if strict and not passed:
        raise CheckFailed(f"Nikol'skii constant {nik:.4g} exceeds entropy bound {bound:.4g}", rep)
    return rep

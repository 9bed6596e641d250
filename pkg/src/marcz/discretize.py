"""Sample plans and certificates for two-sided discretization inequalities.

A plan is a list of atoms ``xi_nu`` with weights ``lambda_nu``; the
constants certified are the tightest ``C1, C2`` with

    C1 ||f||_p^p <= sum_nu lambda_nu |f(xi_nu)|^p <= C2 ||f||_p^p

for all ``f`` in the subspace. Three methods are provided: exact
eigenvalues (p = 2), a net-based bound with a transfer step, and a
multistart heuristic that brackets the constants from the inside.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _nets, _optim
from ._rng import get_workers, pmap, rng
from .analysis import christoffel, ensure_orthonormal
from .errors import (BudgetExhaustedError, CheckFailed, InvariantError,
                     NetTooCoarseError, PreconditionError)
from .space import DiscreteSpace, FunctionVec, Subspace, evaluate, lp_norm, lp_norms

log = logging.getLogger(__name__)

METHODS = ("exact-eigen", "net-rigorous", "heuristic")


@dataclass(frozen=True, eq=False)
class SamplePlan:
    indices: np.ndarray
    weights: np.ndarray
    p: float
    provenance: str = "random"

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if idx.size != w.size:
            raise PreconditionError("indices and weights differ in length")
        if idx.size == 0:
            raise PreconditionError("a plan needs at least one point")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise PreconditionError("plan weights must be finite and nonnegative")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", float(self.p))

    @property
    def m(self) -> int:
        return int(self.indices.size)

    @classmethod
    def equal(cls, indices, p: float, provenance: str = "random") -> "SamplePlan":
        idx = np.asarray(indices, dtype=np.int64).ravel()
        return cls(indices=idx, weights=np.full(idx.size, 1.0 / idx.size), p=p,
                   provenance=provenance)

    def check_against(self, space: DiscreteSpace) -> None:
        if self.indices.min() < 0 or self.indices.max() >= space.size:
            raise PreconditionError("plan references atoms outside the space")
        if np.any(space.weights[self.indices] <= 0):
            raise PreconditionError("plan references atoms of zero mass")

    def compressed(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct atoms with the weights of repeated draws summed."""
        idx, inv = np.unique(self.indices, return_inverse=True)
        w = np.zeros(idx.size)
        np.add.at(w, inv, self.weights)
        return idx, w


@dataclass(frozen=True)
class Certificate:
    p: float
    C1: float
    C2: float
    method: str
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise PreconditionError(f"unknown certificate method {self.method!r}")
        if self.method == "exact-eigen" and self.p != 2:
            raise PreconditionError("exact eigen certificates exist only at p = 2")
        if not (0 <= self.C1 <= self.C2):
            raise InvariantError(f"certificate constants out of order: C1={self.C1}, C2={self.C2}")

    def within(self, eps: float) -> bool:
        """True when ``[C1, C2]`` lies inside ``[1 - eps, 1 + eps]``."""
        return self.C1 >= 1 - eps and self.C2 <= 1 + eps

    @property
    def ratio(self) -> float:
        return self.C2 / self.C1 if self.C1 > 0 else math.inf


# --------------------------------------------------------------------- plans

def sample_random(space: DiscreteSpace, m: int, seed: int, p: float = 2.0) -> SamplePlan:
    """``m`` i.i.d. draws from mu with equal weights ``1/m``."""
    if m < 1:
        raise PreconditionError("m must be >= 1")
    idx = rng(seed, 41).choice(space.size, size=m, replace=True, p=space.weights)
    return SamplePlan.equal(idx, p=p, provenance="random")


def full_grid_plan(space: DiscreteSpace, p: float = 2.0) -> SamplePlan:
    """Every atom with mass, weighted by that mass (the discretization is exact)."""
    idx = space.support
    return SamplePlan(indices=idx, weights=space.weights[idx], p=p, provenance="full-grid")


def suggest_m(N: int, K1: float, eps: float, C: float = 8.0) -> int:
    """``ceil(C K1 eps^-2 N ln N)`` points for the random-sampling regime."""
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    if N < 2:
        raise PreconditionError("N must be >= 2")
    return math.ceil(C * K1 * N * math.log(N) / eps**2)


def plan_sum(subspace: Subspace, plan: SamplePlan, coeffs) -> float:
    """``sum_nu lambda_nu |f(xi_nu)|^p`` for ``f = B c``."""
    v = subspace.values[plan.indices] @ np.asarray(coeffs, dtype=float)
    return float(plan.weights @ np.abs(v) ** plan.p)


# -------------------------------------------------------------- certificates

def plan_gram(U: np.ndarray, plan: SamplePlan) -> np.ndarray:
    idx, w = plan.compressed()
    P = U[idx]
    G = P.T @ (w[:, None] * P)
    return 0.5 * (G + G.T)


def certify_exact_l2(subspace: Subspace, plan: SamplePlan) -> Certificate:
    """Extreme eigenvalues of ``sum lambda u(xi) u(xi)^T``: the exact p = 2 constants."""
    if plan.p != 2:
        raise PreconditionError("exact certification needs plan.p == 2")
    plan.check_against(subspace.space)
    sub = ensure_orthonormal(subspace)
    evals = np.linalg.eigvalsh(plan_gram(sub.values, plan))
    lo, hi = float(evals[0]), float(evals[-1])
    # roundoff may push a zero eigenvalue slightly negative
    if lo < 0:
        if lo < -1e-9 * max(hi, 1.0):
            raise InvariantError(f"plan Gram matrix has eigenvalue {lo}")
        lo = 0.0
    return Certificate(p=2.0, C1=lo, C2=hi, method="exact-eigen",
                       detail={"lambda_min": lo, "lambda_max": hi, "m": plan.m})


def certify_heuristic_lp(subspace: Subspace, plan: SamplePlan, restarts: int = 16,
                         seed: int = 0, polish: bool | None = None) -> Certificate:
    """Multistart search for the extremes of ``R(c) = sum lambda |f(xi)|^p / ||f||_p^p``.

    The minimum found is an upper bound on the true C1 and the maximum a
    lower bound on the true C2. Starts are random directions plus the
    extreme eigenvectors of the plan's Gram matrix. ``polish`` (default: on
    for N <= 4) refines both extremes with Nelder-Mead.
    """
    p = plan.p
    if not (1 <= p < math.inf):
        raise PreconditionError("heuristic certification needs 1 <= p < inf")
    if restarts < 1:
        raise PreconditionError("restarts must be >= 1")
    plan.check_against(subspace.space)
    sub = ensure_orthonormal(subspace)
    U, mu = sub.values, sub.space.weights
    N = U.shape[1]
    idx, lam = plan.compressed()
    P = U[idx]
    _, V = np.linalg.eigh(plan_gram(U, plan))
    starts = np.vstack([rng(seed, 51).standard_normal((restarts, N)), V[:, :1].T, V[:, -1:].T])

    if polish is None:
        polish = N <= 4
    out = {}
    for mode in ("min", "max"):
        val, c, vals = _optim.ratio_extremes(P, lam, p, U, mu, p, starts, mode=mode)
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise InvariantError("non-finite ratio objective; plan weights or basis are corrupt")
        if polish and np.isfinite(val):
            c, val = _optim.polish(c, P, lam, p, U, mu, p, mode=mode)
        out[mode] = math.exp(p * val) if np.isfinite(val) else 0.0
    C1, C2 = out["min"], max(out["max"], out["min"])
    return Certificate(p=p, C1=C1, C2=C2, method="heuristic",
                       detail={"restarts": restarts, "seed": seed, "polish": bool(polish),
                               "m": plan.m})


def net_transfer(c1: float, c2: float, eps: float) -> tuple[float, float]:
    """Norm-level constants on the whole sphere from constants on an eps-net of it."""
    return (c1 * (1 - eps) - c2 * eps * (1 + eps) / (1 - eps), c2 * (1 + eps) / (1 - eps))


def certify_via_net(subspace: Subspace, plan: SamplePlan, net_radius: float, seed: int = 0,
                    candidates: int = 100_000, probes: int = 2_000) -> Certificate:
    """Certificate from a greedy ``net_radius``-separated set on the unit L_p sphere.

    The separated set is grown by farthest-point insertion over ``candidates``
    random sphere points, so it covers every candidate; ``probes`` fresh
    points give an out-of-sample estimate of the uncovered fraction. The
    norm-level extremes over the net are transferred to the sphere and raised
    to the p-th power. Rigor is conditional on the net covering the sphere.
    """
    p, eps = plan.p, float(net_radius)
    if not (1 <= p < math.inf):
        raise PreconditionError("net certification needs 1 <= p < inf")
    if not 0 < eps < 1:
        raise PreconditionError("net_radius must lie in (0, 1)")
    if subspace.dimension > 10:
        raise PreconditionError("net certification is limited to N <= 10")
    plan.check_against(subspace.space)
    sub = ensure_orthonormal(subspace)
    U, mu = sub.values, sub.space.weights
    C, V = _nets.ball_candidates(U, mu, p, candidates, seed, label=61, boundary_fraction=1.0)
    order, _, _ = _nets.farthest_point_traversal(V, mu, p, stop_eps=eps)
    net_C = C[order]
    idx, lam = plan.compressed()
    disc = lp_norms(lam, net_C @ U[idx].T, p)
    cont = lp_norms(mu, net_C @ U.T, p)
    ratio = disc / cont
    c1n, c2n = float(ratio.min()), float(ratio.max())
    uncovered = 0.0
    if probes:
        _, Vp = _nets.ball_candidates(U, mu, p, probes, seed, label=62, boundary_fraction=1.0)
        d = _nets.min_distances(V[order], Vp, mu, p)
        uncovered = float(np.mean(d > eps))
    C1n, C2n = net_transfer(c1n, c2n, eps)
    detail = {"net_radius": eps, "net_size": int(order.size), "candidates": candidates,
              "probes": probes, "uncovered_fraction": uncovered,
              "net_C1": c1n, "net_C2": c2n, "seed": seed}
    log.info("net of %d points, uncovered probe fraction %.4g", order.size, uncovered)
    if C1n <= 0:
        raise NetTooCoarseError(
            f"transferred C1 = {C1n:.4g} <= 0 at net radius {eps}; shrink the radius")
    return Certificate(p=p, C1=C1n**p, C2=C2n**p, method="net-rigorous", detail=detail)


def certify(subspace: Subspace, plan: SamplePlan, method: str | None = None,
            restarts: int = 16, seed: int = 0, net_radius: float = 0.1) -> Certificate:
    """Dispatch: exact at p = 2 unless another method is requested."""
    if method is None:
        method = "exact-eigen" if plan.p == 2 else "heuristic"
    if method == "exact-eigen":
        return certify_exact_l2(subspace, plan)
    if method == "heuristic":
        return certify_heuristic_lp(subspace, plan, restarts=restarts, seed=seed)
    if method == "net-rigorous":
        return certify_via_net(subspace, plan, net_radius, seed=seed)
    raise PreconditionError(f"unknown method {method!r}")


# -------------------------------------------------------------- concentration

@dataclass(frozen=True)
class ConcentrationReport:
    m: int
    eps: float
    p: float
    trials: int
    rate: float
    stderr: float
    bound: float
    M1: float
    Minf: float
    passed: bool


def verify_concentration(space: DiscreteSpace, subspace: Subspace, f, p: float, m: int,
                         eps: float, trials: int = 10_000, seed: int = 0,
                         strict: bool = True) -> ConcentrationReport:
    """Empirical rate of ``|m^-1 sum |f(xi_j)|^p - ||f||_p^p| >= eps`` versus the tail bound.

    The bound is ``2 exp(-m eps^2 / (4 M1 Minf))`` with ``M1`` and ``Minf``
    the L_1 and sup norms of ``|f|^p - ||f||_p^p``; the check allows four
    binomial standard errors. With ``strict`` a failure raises CheckFailed.
    """
    if space is not subspace.space:
        raise PreconditionError("subspace does not live on the given space")
    v = evaluate(subspace, f)
    norm = lp_norm(space, v, p)
    if abs(norm - 1) > 1e-9:
        raise PreconditionError(f"f must have unit L_p norm, got {norm}")
    g = np.abs(v) ** p
    h = g - 1.0
    M1 = float(space.weights @ np.abs(h))
    Minf = float(np.abs(h[space.weights > 0]).max())
    bound = 2.0 * math.exp(-m * eps**2 / (4 * M1 * Minf)) if M1 * Minf > 0 else 0.0

    chunk = 256

    def run(k):
        n = min(chunk, trials - k * chunk)
        draws = rng(seed, 71, k).choice(space.size, size=(n, m), p=space.weights)
        dev = np.abs(g[draws].mean(axis=1) - 1.0)
        # the event is closed; keep roundoff from deciding boundary cases
        return int(np.count_nonzero(dev >= eps - 1e-12))

    failures = sum(pmap(run, range(math.ceil(trials / chunk))))
    rate = failures / trials
    stderr = math.sqrt(max(rate * (1 - rate), 1.0 / trials) / trials)
    passed = rate <= bound + 4 * stderr
    report = ConcentrationReport(m=m, eps=eps, p=p, trials=trials, rate=rate, stderr=stderr,
                                 bound=min(bound, 1.0) if bound else 0.0, M1=M1, Minf=Minf,
                                 passed=passed)
    if strict and not passed:
        raise CheckFailed(f"failure rate {rate:.4g} exceeds bound {bound:.4g} + 4 se", report)
    return report


# --------------------------------------------------------------- two stages

def stage_sizes(N: int, K1: float, eps: float, C: float = 8.0, C_p: float = 8.0) -> tuple[int, int]:
    """Oversample size ``ceil(C K1 eps^-2 N^2 ln N)`` and target ``ceil(C_p K1 N ln^3 N)``."""
    if N == 1:
        return 1, 1
    lnN = math.log(N)
    m1 = max(N, math.ceil(C * K1 * N * N * lnN / eps**2))
    target = max(N, math.ceil(C_p * K1 * N * lnN**3))
    return m1, min(m1, target)


def two_stage_discretize(subspace: Subspace, p: float, eps: float, seed: int = 0,
                         C: float = 8.0, C_p: float = 8.0, attempts: int = 200,
                         restarts: int = 16) -> tuple[SamplePlan, Certificate]:
    """Oversample i.i.d., then screen random equal-weight subsets of the target size.

    The first subset (in attempt order) whose certificate lies in
    ``[1 - eps, 1 + eps]`` is returned; screening is exact at p = 2 and
    heuristic otherwise. Raises BudgetExhaustedError carrying the best
    attempt when none of ``attempts`` subsets is accepted.
    """
    if not 1 <= p <= 2:
        raise PreconditionError("two-stage discretization needs 1 <= p <= 2")
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    sub = ensure_orthonormal(subspace)
    N = sub.dimension
    K1 = christoffel(sub, check=False).K1
    m1, target = stage_sizes(N, K1, eps, C, C_p)
    stage1 = sample_random(sub.space, m1, seed, p=p)
    detail = {"m1": m1, "target": target, "K1": K1, "C": C, "C_p": C_p,
              "alpha": math.log(K1) / math.log(N) if N > 1 else 0.0}

    def attempt(a):
        if target >= m1:
            chosen = stage1.indices
        else:
            pick = rng(seed, 42, a).choice(m1, size=target, replace=False)
            chosen = stage1.indices[np.sort(pick)]
        plan = SamplePlan.equal(chosen, p=p, provenance="two-stage")
        if p == 2:
            cert = certify_exact_l2(sub, plan)
        else:
            cert = certify_heuristic_lp(sub, plan, restarts=restarts, seed=seed + a)
        return plan, cert

    best = None
    batch = max(1, get_workers())
    for start in range(0, attempts, batch):
        results = pmap(attempt, range(start, min(start + batch, attempts)))
        for a, (plan, cert) in enumerate(results, start=start):
            if cert.within(eps):
                d = dict(cert.detail, **detail, attempt=a)
                return plan, Certificate(cert.p, cert.C1, cert.C2, cert.method, d)
            gap = max(1 - cert.C1, cert.C2 - 1)
            if best is None or gap < best[0]:
                best = (gap, plan, cert)
        if target >= m1:
            break
    _, plan, cert = best
    raise BudgetExhaustedError(
        f"no subset accepted in {attempts} attempts; best certificate [{cert.C1:.4g}, {cert.C2:.4g}]",
        plan=plan, certificate=cert)

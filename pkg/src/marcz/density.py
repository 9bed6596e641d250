"""Change of density: Lewis-type bases, the transform ``f -> f/F`` and weighted plans.

For ``1 <= p <= 2`` a basis ``phi`` of the subspace is sought such that
``F = (sum phi_i^2)^(1/2)`` satisfies

    sum_x mu(x) F(x)^(p-2) phi_i(x) phi_j(x) = delta_ij / N,   ||F||_p = 1.

Under ``nu = F^p mu`` the functions ``f/F`` then have a constant Christoffel
function ``sqrt(N)``, so sampling from nu needs no K1 factor. The basis is
the fixed point of ``G_t = sum mu F_t^(p-2) u u^T``,
``F_{t+1}^2 = u^T G_t^{-1} u / N``, which contracts for p < 4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._rng import rng
from .analysis import christoffel, ensure_orthonormal
from .discretize import (Certificate, SamplePlan, certify_exact_l2, certify_heuristic_lp,
                         sample_random, suggest_m, two_stage_discretize)
from .errors import ConvergenceError, InvariantError, PreconditionError, SupportCollapseError
from .space import DiscreteSpace, Subspace, lp_norms
from .sparsify import bss_select

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LewisBasis:
    phi: np.ndarray
    F: np.ndarray
    p: float
    residual: float
    iterations: int
    damped: bool = False

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.F > 0)

    def identity_residual(self, mu: np.ndarray, trials: int = 20, seed: int = 0) -> float:
        """Largest relative error of ``sum mu |phi l|^2 F^(p-2) = |l|^2 / N`` over random l."""
        s = self.support
        N = self.phi.shape[1]
        L = rng(seed, 81).standard_normal((trials, N))
        vals = (L @ self.phi[s].T) ** 2 @ (mu[s] * self.F[s] ** (self.p - 2))
        target = np.sum(L**2, axis=1) / N
        return float(np.max(np.abs(vals - target) / target))


def _lewis_step(U, mu, F, p):
    a = mu * F ** (p - 2)
    G = U.T @ (a[:, None] * U)
    evals, V = np.linalg.eigh(0.5 * (G + G.T))
    if evals[0] <= 1e-14 * evals[-1]:
        raise SupportCollapseError("weighted Gram matrix became singular")
    inv_sqrt = (V / np.sqrt(evals)) @ V.T
    phi = U @ inv_sqrt / math.sqrt(U.shape[1])
    return phi, np.sqrt(np.einsum("ij,ij->i", phi, phi))


def _normalize(F, mu, p):
    return F / (float(mu @ F**p) ** (1.0 / p))


def lewis_basis(subspace: Subspace, p: float, tol: float = 1e-10, max_iter: int = 500,
                init: str | np.ndarray = "christoffel") -> LewisBasis:
    """Fixed-point iteration for the basis described in the module docstring.

    ``init`` is ``"christoffel"`` (``F0 = w / ||w||_p``), ``"uniform"``
    (``F0 = 1``) or an explicit positive vector. Stops when
    ``max |F_{t+1}/F_t - 1| < tol`` on the support. If the residual fails to
    decrease over 10 consecutive steps the update is averaged with the
    previous iterate. Atoms where every basis function vanishes get F = 0.
    """
    if not 1 <= p <= 2:
        raise PreconditionError("the Lewis basis is computed for 1 <= p <= 2")
    sub = ensure_orthonormal(subspace)
    U = sub.values
    M, N = U.shape
    mu_full = sub.space.weights
    w = np.sqrt(np.einsum("ij,ij->i", U, U))
    scale = w.max()
    s = np.flatnonzero((mu_full > 0) & (w > 1e-13 * scale))
    if s.size < N:
        raise SupportCollapseError(f"only {s.size} atoms carry the subspace, need {N}")
    Us, mu = U[s], mu_full[s]

    if isinstance(init, str):
        if init == "christoffel":
            F = w[s].copy()
        elif init == "uniform":
            F = np.ones(s.size)
        else:
            raise PreconditionError(f"unknown init {init!r}")
    else:
        F = np.asarray(init, dtype=float).ravel()[s]
        if np.any(F <= 0):
            raise PreconditionError("initial F must be positive on the support")
    F = _normalize(F, mu, p)

    damped = False
    history: list[float] = []
    residual = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        _, F_new = _lewis_step(Us, mu, F, p)
        if np.any(F_new <= 0):
            raise SupportCollapseError("F vanished on part of the support")
        F_new = _normalize(F_new, mu, p)
        if damped:
            F_new = _normalize(0.5 * (F + F_new), mu, p)
        residual = float(np.max(np.abs(F_new / F - 1.0)))
        F = F_new
        history.append(residual)
        if residual < tol:
            break
        if not damped and len(history) >= 11:
            recent = np.array(history[-11:])
            if np.all(np.diff(recent) >= 0):
                damped = True
                log.info("Lewis iteration not contracting at step %d; averaging enabled", it)
    else:
        raise ConvergenceError(f"Lewis iteration did not converge in {max_iter} steps",
                               residual=residual, iterations=max_iter)

    phi_s, F_s = _lewis_step(Us, mu, F, p)
    # at the fixed point ||F||_p = 1 holds automatically; remove the roundoff
    c = float(mu @ F_s**p) ** (1.0 / p)
    phi_s, F_s = phi_s / c, F_s / c
    phi = np.zeros((M, N))
    Ffull = np.zeros(M)
    phi[s], Ffull[s] = phi_s, F_s
    return LewisBasis(phi=phi, F=Ffull, p=float(p), residual=residual, iterations=it,
                      damped=damped)


def change_of_density(subspace: Subspace, lewis: LewisBasis, check: bool = True,
                      seed: int = 0) -> tuple[DiscreteSpace, Subspace]:
    """The pair ``(nu, f/F)`` with ``nu = mu F^p`` restricted to ``F > 0``.

    The returned subspace keeps the coefficient coordinates of the input
    basis. With ``check`` the L_p isometry is verified on 20 random
    functions and the transformed Christoffel function is verified to be
    ``sqrt(N)`` everywhere.
    """
    space = subspace.space
    p = lewis.p
    s = lewis.support
    Fs = lewis.F[s]
    nu = space.weights[s] * Fs**p
    total = float(nu.sum())
    if abs(total - 1) > 1e-9:
        raise InvariantError(f"transformed weights sum to {total}, not 1")
    nu = nu / total
    coords = None if space.coords is None else space.coords[s]
    origin = s if space.origin is None else space.origin[s]
    new_space = DiscreteSpace(weights=nu, coords=coords, label=f"{space.label}|nu(p={p:g})",
                              origin=origin)
    new_sub = Subspace(space=new_space, values=subspace.values[s] / Fs[:, None],
                       label=f"{subspace.label}|U")
    if check:
        C = rng(seed, 82).standard_normal((20, subspace.dimension))
        before = lp_norms(space.weights, C @ subspace.values.T, p)
        after = lp_norms(nu, C @ new_sub.values.T, p)
        err = float(np.max(np.abs(after / before - 1)))
        if err > 1e-9:
            raise InvariantError(f"change of density is not an isometry: relative error {err}")
        prof = christoffel(new_sub, check=False)
        N = subspace.dimension
        dev = float(np.max(np.abs(prof.christoffel**2 - N)))
        if dev > 1e-6:
            raise InvariantError(f"transformed Christoffel function deviates from N by {dev}")
    return new_space, new_sub


def pull_back(plan: SamplePlan, lewis: LewisBasis, transformed: DiscreteSpace,
              provenance: str) -> SamplePlan:
    """Map a plan on the transformed space back, with ``lambda -> lambda F^-p``."""
    origin = lewis.support
    idx = origin[plan.indices]
    weights = plan.weights / lewis.F[idx] ** plan.p
    return SamplePlan(indices=idx, weights=weights, p=plan.p, provenance=provenance)


def weighted_discretize_lp(subspace: Subspace, p: float, eps: float, seed: int = 0,
                           C: float = 8.0, C_p: float = 8.0, attempts: int = 200,
                           restarts: int = 16) -> tuple[SamplePlan, Certificate]:
    """Two-stage discretization after the change of density, pulled back to mu.

    The plan weights are ``F(xi)^-p / m``; the certificate is recomputed
    against the original subspace and measure.
    """
    if not 1 <= p <= 2:
        raise PreconditionError("weighted discretization needs 1 <= p <= 2")
    lewis = lewis_basis(subspace, p)
    nu_space, nu_sub = change_of_density(subspace, lewis, seed=seed)
    plan_nu, cert_nu = two_stage_discretize(nu_sub, p, eps, seed=seed, C=C, C_p=C_p,
                                            attempts=attempts, restarts=restarts)
    plan = pull_back(plan_nu, lewis, nu_space, "density+two-stage")
    if p == 2:
        cert = certify_exact_l2(subspace, plan)
    else:
        cert = certify_heuristic_lp(subspace, plan, restarts=restarts, seed=seed)
    detail = dict(cert.detail, lewis_iterations=lewis.iterations,
                  transformed_C1=cert_nu.C1, transformed_C2=cert_nu.C2,
                  m1=cert_nu.detail.get("m1"), attempt=cert_nu.detail.get("attempt"))
    return plan, Certificate(cert.p, cert.C1, cert.C2, cert.method, detail)


def weighted_discretize_l2(subspace: Subspace, b: float = 2.0, seed: int = 0,
                           C: float = 8.0, eps: float = 0.5) -> tuple[SamplePlan, Certificate]:
    """At most ``ceil(b N)`` weighted points with an exact p = 2 certificate.

    Samples ``suggest_m(N, 1, eps, C)`` points under nu, selects among them
    with the barrier method and pulls the weights back by ``F^-2``.
    """
    lewis = lewis_basis(subspace, 2.0)
    nu_space, nu_sub = change_of_density(subspace, lewis, seed=seed)
    N = subspace.dimension
    m = 1 if N == 1 else suggest_m(N, 1.0, eps, C)
    stage1 = sample_random(nu_space, m, seed, p=2.0)
    selected = bss_select(nu_sub, b, start_plan=stage1)
    plan = pull_back(selected, lewis, nu_space, "density+bss")
    cert = certify_exact_l2(subspace, plan)
    # rescale so that the lower constant is exactly 1
    if cert.C1 > 0:
        plan = SamplePlan(plan.indices, plan.weights / cert.C1, 2.0, plan.provenance)
        cert = certify_exact_l2(subspace, plan)
    detail = dict(cert.detail, b=b, m_stage1=m,
                  ratio_bound=(b + 1 + 2 * math.sqrt(b)) / (b + 1 - 2 * math.sqrt(b)))
    return plan, Certificate(2.0, cert.C1, cert.C2, "exact-eigen", detail)

"""Deterministic weighted point selection for p = 2 with two barrier potentials.

Given vectors ``v_j`` with ``sum_j v_j v_j^T = I`` in R^N, ``ceil(b N)``
rank-one updates ``A += t v_j v_j^T`` keep
``l < lambda_min(A)`` and ``lambda_max(A) < u`` while both barriers move by
fixed shifts; at the end the spectrum of A lies in a band with ratio at
most ``(b + 1 + 2 sqrt b) / (b + 1 - 2 sqrt b)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .analysis import ensure_orthonormal
from .discretize import SamplePlan, plan_gram
from .errors import InvariantError, PreconditionError
from .space import Subspace

log = logging.getLogger(__name__)

IDENTITY_ATOL = 1e-8
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BarrierState:
    A: np.ndarray
    u_bar: float
    l_bar: float
    selected: tuple
    step: int

    def feasible(self) -> bool:
        ev = np.linalg.eigvalsh(self.A)
        return bool(self.l_bar < ev[0] and ev[-1] < self.u_bar)


def ratio_bound(b: float) -> float:
    r = math.sqrt(b)
    return (b + 1 + 2 * r) / (b + 1 - 2 * r)


def barrier_parameters(b: float, N: int) -> dict:
    r = math.sqrt(b)
    eps_L = 1.0 / r
    eps_U = (r - 1) / (b + r)
    return {"delta_L": 1.0, "eps_L": eps_L, "l0": -N / eps_L,
            "delta_U": (r + 1) / (r - 1), "eps_U": eps_U, "u0": N / eps_U}


def _candidates(sub: Subspace, start_plan: SamplePlan | None):
    """Atom indices, base weights and whitened vectors v_j with sum v v^T = I."""
    U = sub.values
    if start_plan is None:
        idx = sub.space.support
        base = sub.space.weights[idx]
        V = np.sqrt(base)[:, None] * U[idx]
        G = V.T @ V
        err = float(np.max(np.abs(G - np.eye(U.shape[1]))))
        if err > IDENTITY_ATOL:
            raise PreconditionError(f"candidate vectors do not resolve the identity (error {err:.2e})")
        return idx, base, V
    start_plan.check_against(sub.space)
    idx, base = start_plan.compressed()
    V = np.sqrt(base)[:, None] * U[idx]
    evals, Q = np.linalg.eigh(plan_gram(U, start_plan))
    if evals[0] <= 1e-12 * evals[-1]:
        raise PreconditionError("the start plan does not span the subspace")
    W = (Q / np.sqrt(evals)) @ Q.T
    return idx, base, V @ W


def bss_select(subspace: Subspace, b: float, start_plan: SamplePlan | None = None,
               allow_large_b: bool = False, trace: list | None = None) -> SamplePlan:
    """At most ``ceil(b N)`` atoms with weights, lower constant rescaled to 1.

    Candidates are all atoms of the space (weights mu) or the atoms of
    ``start_plan`` (weights lambda, whitened by the plan's Gram matrix). Each
    step picks the candidate maximizing ``L(v) - U(v)`` (lowest index on
    ties) with step ``1/t = (U + L)/2``. When ``trace`` is a list, a
    BarrierState is appended per step.
    """
    if not (b > 1 and (b <= 4 or allow_large_b)):
        raise PreconditionError("b must lie in (1, 4] (pass allow_large_b for larger b)")
    sub = ensure_orthonormal(subspace)
    N = sub.dimension
    idx, base, V = _candidates(sub, start_plan)

    if N == 1:
        j = int(np.argmax(V[:, 0] ** 2))
        x = int(idx[j])
        weights = np.array([1.0 / sub.values[x, 0] ** 2])
        return SamplePlan(indices=np.array([x]), weights=weights, p=2.0, provenance="bss")

    par = barrier_parameters(b, N)
    l, u = par["l0"], par["u0"]
    dL, dU = par["delta_L"], par["delta_U"]
    A = np.zeros((N, N))
    s = np.zeros(idx.size)
    steps = math.ceil(b * N)
    for step in range(steps):
        ev, Q = np.linalg.eigh(A)
        if not (l < ev[0] and ev[-1] < u):
            raise InvariantError(f"barrier infeasible at step {step}")
        u2, l2 = u + dU, l + dL
        Y2 = (V @ Q) ** 2
        up1, up2 = 1.0 / (u2 - ev), 1.0 / (u2 - ev) ** 2
        lo1, lo2 = 1.0 / (ev - l2), 1.0 / (ev - l2) ** 2
        phi_u = np.sum(1.0 / (u - ev)) - np.sum(up1)
        phi_l = np.sum(lo1) - np.sum(1.0 / (ev - l))
        Ucost = Y2 @ up2 / phi_u + Y2 @ up1
        Lgain = Y2 @ lo2 / phi_l - Y2 @ lo1
        gap = Lgain - Ucost
        # scores equal up to roundoff count as ties, resolved by lowest index
        top = float(gap.max())
        j = int(np.flatnonzero(gap >= top - TIE_RTOL * max(abs(top), 1.0))[0])
        if gap[j] < -1e-12 * max(abs(Lgain[j]), 1.0) or Lgain[j] <= 0:
            raise InvariantError(f"no admissible candidate at step {step}")
        t = 2.0 / (Ucost[j] + Lgain[j])
        A += t * np.outer(V[j], V[j])
        A = 0.5 * (A + A.T)
        s[j] += t
        u, l = u2, l2
        if trace is not None:
            trace.append(BarrierState(A=A.copy(), u_bar=u, l_bar=l,
                                      selected=tuple((int(idx[k]), float(s[k]))
                                                     for k in np.flatnonzero(s)),
                                      step=step + 1))
    ev = np.linalg.eigvalsh(A)
    if not (l < ev[0] and ev[-1] < u):
        raise InvariantError("barrier infeasible after the last step")
    keep = np.flatnonzero(s > 0)
    lam = s[keep] * base[keep]
    plan = SamplePlan(indices=idx[keep], weights=lam, p=2.0, provenance="bss")
    G = np.linalg.eigvalsh(plan_gram(sub.values, plan))
    log.debug("bss: %d atoms, spectrum [%.4g, %.4g]", keep.size, G[0], G[-1])
    return SamplePlan(indices=plan.indices, weights=lam / G[0], p=2.0, provenance="bss")

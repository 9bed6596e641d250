import math

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from marcz import discretize as D
from marcz import density as Dn
from marcz.analysis import christoffel, orthonormalize
from marcz.space import DiscreteSpace, build_random, hyperbolic_cross, lp_norm
from marcz.sparsify import bss_select, ratio_bound

FAST = settings(max_examples=25, deadline=None,
                suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(min_value=0, max_value=2**32 - 1)
exponents = st.floats(min_value=1.0, max_value=12.0)


def _space(seed, M):
    w = np.random.default_rng(seed).random(M) + 1e-3
    return DiscreteSpace(weights=w / w.sum())


@FAST
@given(seed=seeds, M=st.integers(2, 40), p=exponents, r=exponents)
def test_lp_norm_holder_and_homogeneity(seed, M, p, r):
    sp = _space(seed, M)
    g = np.random.default_rng(seed + 1)
    v, u = g.standard_normal(M), g.standard_normal(M)
    lo, hi = sorted((p, r))
    assert lp_norm(sp, v, lo) <= lp_norm(sp, v, hi) * (1 + 1e-12)
    assert lp_norm(sp, v, hi) <= lp_norm(sp, v, math.inf) * (1 + 1e-12)
    assert math.isclose(lp_norm(sp, -3.5 * v, p), 3.5 * lp_norm(sp, v, p), rel_tol=1e-12)
    assert lp_norm(sp, v + u, p) <= (lp_norm(sp, v, p) + lp_norm(sp, u, p)) * (1 + 1e-12)


@FAST
@given(seed=seeds, N=st.integers(1, 6), m=st.integers(1, 60))
def test_exact_certificate_brackets_ratios(seed, N, m):
    sub = orthonormalize(build_random(max(N, 30), N, seed=seed % 1000))
    plan = D.sample_random(sub.space, m, seed=seed)
    cert = D.certify_exact_l2(sub, plan)
    C = np.random.default_rng(seed).standard_normal((200, N))
    disc = (C @ sub.values[plan.indices].T) ** 2 @ plan.weights
    cont = np.sum(C**2, axis=1)
    R = disc / cont
    assert np.all(R >= cert.C1 - 1e-9) and np.all(R <= cert.C2 + 1e-9)


@FAST
@given(c1=st.floats(0.5, 1.0), spread=st.floats(0.0, 0.5), eps=st.floats(0.001, 0.3))
def test_net_transfer_widens(c1, spread, eps):
    c2 = c1 + spread
    C1, C2 = D.net_transfer(c1, c2, eps)
    assert C1 <= c1 and C2 >= c2


@FAST
@given(seed=seeds, N=st.integers(2, 6), b=st.floats(1.2, 4.0))
def test_bss_ratio_bound(seed, N, b):
    sub = orthonormalize(build_random(120, N, seed=seed % 1000))
    plan = bss_select(sub, b)
    cert = D.certify_exact_l2(sub, plan)
    assert plan.m <= math.ceil(b * N)
    assert cert.C1 >= 1 - 1e-9
    assert cert.ratio <= ratio_bound(b) + 1e-6


@settings(max_examples=15, deadline=None)
@given(seed=seeds, N=st.integers(1, 4), p=st.floats(1.0, 2.0))
def test_lewis_invariants(seed, N, p):
    sub = build_random(60, N, seed=seed % 1000, spike=0.2)
    lb = Dn.lewis_basis(sub, p)
    assert abs(lp_norm(sub.space, lb.F, p) - 1) < 1e-10
    assert lb.identity_residual(sub.space.weights, seed=seed % 100) < 1e-7
    _, new = Dn.change_of_density(sub, lb)
    assert abs(christoffel(new, check=False).K1 - 1) < 1e-6


@settings(max_examples=15, deadline=None)
@given(seed=seeds, N=st.integers(1, 4), p=st.floats(1.0, 2.0), m=st.integers(1, 30))
def test_pullback_identity(seed, N, p, m):
    sub = build_random(50, N, seed=seed % 1000)
    lb = Dn.lewis_basis(sub, p)
    nu_space, nu_sub = Dn.change_of_density(sub, lb, check=False)
    plan_nu = D.sample_random(nu_space, m, seed=seed, p=p)
    plan = Dn.pull_back(plan_nu, lb, nu_space, "density+two-stage")
    c = np.random.default_rng(seed).standard_normal(N)
    lhs = D.plan_sum(sub, plan, c)
    rhs = D.plan_sum(nu_sub, plan_nu, c)
    assert math.isclose(lhs, rhs, rel_tol=1e-10, abs_tol=1e-300)


@settings(max_examples=20, deadline=None)
@given(d=st.integers(1, 3), n=st.integers(0, 3))
def test_hyperbolic_cross_symmetric(d, n):
    Q = set(hyperbolic_cross(d, n).freqs)
    assert (0,) * d in Q
    for k in Q:
        assert tuple(-x for x in k) in Q
        assert sum(0 if x == 0 else abs(x).bit_length() for x in k) <= n

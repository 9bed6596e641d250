import itertools
import math

import numpy as np
import pytest

from marcz import analysis
from marcz.errors import PreconditionError, RankDeficiencyError
from marcz.space import (DiscreteSpace, Subspace, build_rademacher, build_random, build_trig_n,
                         gram, lp_norm, lp_norms)


def test_orthonormalize_already_orthonormal():
    sub = build_trig_n(9)
    out = analysis.orthonormalize(sub)
    assert np.abs(gram(out) - np.eye(9)).max() < 1e-10
    # same span: projecting the old columns onto the new ones loses nothing
    coef, *_ = np.linalg.lstsq(out.values, sub.values, rcond=None)
    assert np.abs(out.values @ coef - sub.values).max() < 1e-10


def test_orthonormalize_duplicate_column():
    sp, sub = build_rademacher(2)
    B = np.column_stack([sub.values, sub.values[:, :1]])
    with pytest.raises(RankDeficiencyError):
        analysis.orthonormalize(Subspace(space=sp, values=B))


def test_orthonormalize_random_span():
    sub = build_random(50, 4, seed=2)
    out = analysis.orthonormalize(sub)
    assert np.abs(gram(out) - np.eye(4)).max() < 1e-8
    coef, *_ = np.linalg.lstsq(out.values, sub.values, rcond=None)
    assert np.abs(out.values @ coef - sub.values).max() < 1e-8


def test_christoffel_trig_constant():
    prof = analysis.christoffel(build_trig_n(9))
    np.testing.assert_allclose(prof.christoffel, 3.0, atol=1e-12)
    assert prof.K1 == pytest.approx(1.0, abs=1e-12)
    assert prof.log_base == "2"


@pytest.mark.parametrize("N", [1, 3, 6])
def test_christoffel_rademacher(N):
    prof = analysis.christoffel(build_rademacher(N)[1])
    np.testing.assert_allclose(prof.christoffel, math.sqrt(N), atol=1e-12)
    assert prof.K1 == pytest.approx(1.0, abs=1e-12)


def test_christoffel_random_matches_sup_ratio():
    sub = analysis.orthonormalize(build_random(100, 5, seed=4))
    prof = analysis.christoffel(sub)
    mu = sub.space.weights
    assert float(mu @ prof.christoffel**2) == pytest.approx(5, abs=1e-6)
    # multistart maximization of |f(x)|/||f||_2 over random unit coefficients
    g = np.random.default_rng(0)
    C = g.standard_normal((20_000, 5))
    C /= np.linalg.norm(C, axis=1, keepdims=True)
    best = np.abs(C @ sub.values.T).max()
    assert best <= math.sqrt(prof.K1 * 5) + 1e-9
    assert best >= 0.98 * math.sqrt(prof.K1 * 5)


def test_k2_trig_n2_at_least_one():
    assert analysis.k2_constant(build_trig_n(2)) >= 1.0 - 1e-12


def test_k2_requires_n2():
    with pytest.raises(PreconditionError):
        analysis.k2_constant(build_trig_n(1))


def test_k2_trig9_seed_stable():
    sub = build_trig_n(9)
    a = analysis.k2_constant(sub, seed=0)
    b = analysis.k2_constant(sub, seed=1)
    assert math.isfinite(a) and abs(a - b) <= 0.05 * max(a, b)


def test_k2_rademacher8_above_all_ones_ratio():
    sp, sub = build_rademacher(8)
    assert analysis.k2_exponent(8) == 3
    # exact enumeration of the 256 atoms: f = sum r_j takes value 8 - 2 * popcount
    vals = np.array([8 - 2 * bin(j).count("1") for j in range(256)], dtype=float)
    q3 = np.mean(np.abs(vals) ** 3) ** (1 / 3)
    ratio = 8 / q3
    assert ratio == pytest.approx(8 / lp_norm(sp, sub.values.sum(axis=1), 3))
    assert analysis.k2_constant(sub) >= ratio - 1e-9


def test_nikolskii_2_inf_trig():
    sub = build_trig_n(9)
    assert analysis.nikolskii_constant(sub, 2, math.inf) == pytest.approx(3.0, abs=1e-8)


@pytest.mark.parametrize("seed", [0, 1])
def test_nikolskii_2_inf_equals_max_christoffel(seed):
    sub = analysis.orthonormalize(build_random(60, 4, seed=seed))
    w = analysis.christoffel(sub).christoffel
    assert analysis.nikolskii_constant(sub, 2, math.inf) == pytest.approx(w.max(), abs=1e-8)


def test_nikolskii_requires_p_below_q():
    with pytest.raises(PreconditionError):
        analysis.nikolskii_constant(build_trig_n(3), 2, 2)


def test_nikolskii_1_2_rademacher3_vs_sphere_grid():
    sp, sub = build_rademacher(3)
    value = analysis.nikolskii_constant(sub, 1, 2)
    g = np.random.default_rng(5)
    C = g.standard_normal((100_000, 3))
    C /= np.linalg.norm(C, axis=1, keepdims=True)
    F = C @ sub.values.T
    brute = float(np.max(lp_norms(sp.weights, F, 2) / lp_norms(sp.weights, F, 1)))
    # the maximum sits on a ridge of the nonsmooth ratio, so random directions
    # approach it slowly; f = r_1 + r_2 attains sqrt(2) exactly
    assert value >= brute - 1e-9
    assert value <= brute * (1 + 1e-2)
    f = sub.values[:, 0] + sub.values[:, 1]
    assert value == pytest.approx(lp_norm(sp, f, 2) / lp_norm(sp, f, 1), abs=1e-8)
    assert value <= math.sqrt(3) + 1e-6


def test_sphere_moment_exact_values():
    assert analysis.sphere_moment(4, 2) == pytest.approx(0.5, abs=1e-14)
    assert analysis.sphere_moment(2, 2) == pytest.approx(0.7071067812, abs=1e-10)
    assert analysis.sphere_moment(3, 1) == pytest.approx(0.5, abs=1e-14)


def test_sphere_moment_q2_is_inverse_sqrt_n():
    for N in range(1, 30):
        assert analysis.sphere_moment(N, 2) == pytest.approx(1 / math.sqrt(N), rel=1e-13)


def test_sphere_moment_asymptotic_band():
    for N, q in itertools.product(range(1, 65), range(1, 65)):
        s = analysis.sphere_moment(N, q) * math.sqrt(N + q) / math.sqrt(q)
        assert 0.5 <= s <= 1.5, (N, q, s)


def test_sphere_moment_mc_seed_determinism():
    a = analysis.sphere_moment_mc(5, 3, trials=2000, seed=9)
    b = analysis.sphere_moment_mc(5, 3, trials=2000, seed=9)
    assert a == b


def test_gaussian_mean_norm_q2():
    for sub in (build_trig_n(5), analysis.orthonormalize(build_random(80, 3, seed=1))):
        est = analysis.gaussian_mean_norm(sub, 2, trials=2000, seed=3)
        assert abs(est.value - 1) <= max(3 * est.stderr, 1e-12)


def test_gaussian_mean_norm_trig_q4_bounded():
    # Jensen: mean of ||f||_4 <= (E||f||_4^4)^(1/4) = (3N/(N+2))^(1/4) < 3^(1/4) for trig
    # systems with constant Christoffel function; the K1-scaled value stays bounded in N
    vals = []
    for N in (5, 9, 17):
        sub = build_trig_n(N)
        est = analysis.gaussian_mean_norm(sub, 4, trials=10_000, seed=N)
        K1 = analysis.christoffel(sub).K1
        vals.append(est.value / math.sqrt(K1 * 4))
        assert est.value <= (3 * N / (N + 2)) ** 0.25 + 3 * est.stderr
    assert max(vals) <= 1.0


def test_gaussian_mean_norm_preconditions():
    sub = build_trig_n(3)
    with pytest.raises(PreconditionError):
        analysis.gaussian_mean_norm(sub, 2, trials=0)
    with pytest.raises(PreconditionError):
        analysis.gaussian_mean_norm(sub, math.inf, trials=200)


def test_christoffel_on_weighted_space():
    w = np.array([0.5, 0.25, 0.25])
    sp = DiscreteSpace(weights=w)
    sub = Subspace(space=sp, values=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    prof = analysis.christoffel(sub)
    assert float(w @ prof.christoffel**2) == pytest.approx(2.0, abs=1e-10)

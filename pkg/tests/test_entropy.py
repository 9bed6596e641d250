import math

import numpy as np
import pytest

from marcz import _nets, entropy as E
from marcz.analysis import nikolskii_constant
from marcz.errors import CheckFailed, PreconditionError
from marcz.space import build_rademacher, build_random, build_trig_n, coordinate_subspace, lp_norm


# ------------------------------------------------------------------ packing

def test_interval_ball_count():
    est = E.pack_greedy(build_trig_n(1), 2.0, 2.0, 0.5)
    assert est.detail["count"] == 5
    assert est.lower == pytest.approx(math.log2(5)) and est.method == "lattice-net"


@pytest.mark.parametrize("p,q", [(1.0, 1.0), (2.0, math.inf), (1.5, 3.0)])
def test_interval_ball_any_norms(p, q):
    # the ball of a one-dimensional space is a segment of L_q length 2 ||u||_q / ||u||_p
    sub = build_random(30, 1, seed=3)
    u = sub.values[:, 0]
    L = 2 * lp_norm(sub.space, u, q) / lp_norm(sub.space, u, p)
    eps = L / 7.5
    assert E.pack_greedy(sub, p, q, eps).detail["count"] == 8


def test_beyond_diameter_single_point():
    sub = build_trig_n(3)
    est = E.pack_greedy(sub, 2.0, math.inf, 2 * 2 * math.sqrt(3) + 0.1, budget=5000)
    assert est.detail["count"] == 1 and est.lower == 0 and est.upper == 0


def test_pack_preconditions():
    sub = build_trig_n(3)
    with pytest.raises(PreconditionError):
        E.pack_greedy(sub, 2.0, math.inf, 0.0)
    with pytest.raises(PreconditionError):
        E.pack_greedy(sub, 2.0, math.inf, 0.5, budget=999)


def test_pack_set_is_separated_and_maximal():
    _, sub = build_rademacher(3)
    mu = sub.space.weights
    C, V = _nets.ball_candidates(sub.values, mu, 2.0, 20_000, 4, label=91)
    order, radii, nxt = _nets.farthest_point_traversal(V, mu, math.inf, stop_eps=0.8)
    S = V[order]
    for i in range(len(order)):
        d = _nets.min_distances(np.delete(S, i, axis=0), S[i:i + 1], mu, math.inf)
        assert d[0] >= 0.8
    assert np.all(_nets.min_distances(S, V, mu, math.inf) < 0.8)
    assert nxt < 0.8 <= radii[-1]


def _random_order_packing(sub, p, q, eps, n, seed):
    """Sequential greedy over n random ball points in random order."""
    mu = sub.space.weights
    _, V = _nets.ball_candidates(sub.values, mu, p, n, 1000 + seed, label=5)
    V, mu = _nets.restrict_metric(V, mu, q)
    S = np.empty((0, V.shape[1]))
    for start in range(0, V.shape[0], 512):
        B = V[start:start + 512]
        if S.shape[0]:
            B = B[_nets.min_distances(S, B, mu, q) >= eps]
        new = []
        for x in B:
            if not new or _nets.min_distances(np.array(new), x[None], mu, q)[0] >= eps:
                new.append(x)
        if new:
            S = np.vstack([S, new])
    return S.shape[0]


@pytest.fixture(scope="module")
def rademacher3_counts():
    _, sub = build_rademacher(3)
    greedy = [E.pack_greedy(sub, 2.0, math.inf, 0.8, budget=1_000_000, seed=s).detail["count"]
              for s in range(5)]
    oracle = [_random_order_packing(sub, 2.0, math.inf, 0.8, 1_000_000, s) for s in range(5)]
    return greedy, oracle


@pytest.mark.xfail(strict=True, reason="maximal packings from different orders differ by up to 3 "
                                       "points; see the decision log")
def test_rademacher3_within_one_of_exhaustive_oracle(rademacher3_counts):
    greedy, oracle = rademacher3_counts
    assert all(abs(g - o) <= 1 for g, o in zip(greedy, oracle)), (greedy, oracle)


def test_rademacher3_close_to_exhaustive_oracle(rademacher3_counts):
    greedy, oracle = rademacher3_counts
    # both are maximal separated sets, i.e. lower bounds on the same packing
    # number; they differ only by how the insertion order fills space
    assert all(abs(o - g) <= 4 for g, o in zip(greedy, oracle)), (greedy, oracle)
    assert max(greedy) - min(greedy) <= 2


@pytest.mark.parametrize("sub,p,q", [
    (build_trig_n(3), 2.0, math.inf),
    (coordinate_subspace(2, 1.0), 1.0, 1.0),
    (build_rademacher(3)[1], 1.0, 2.0),
])
def test_pack_monotone_in_eps(sub, p, q):
    grid = np.geomspace(1.5, 0.3, 60)
    counts = [E.pack_greedy(sub, p, q, e, budget=10_000, seed=2).detail["count"] for e in grid]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    np.testing.assert_array_equal(E.packing_counts(sub, p, q, grid, budget=10_000, seed=2),
                                  counts)


def test_pack_max_count_saturates():
    sub = build_trig_n(3)
    est = E.pack_greedy(sub, 2.0, math.inf, 0.05, budget=10_000, max_count=50)
    assert est.detail["count"] == 50 and est.detail["saturated"]


def test_pack_seed_determinism():
    sub = build_trig_n(5)
    a = E.pack_greedy(sub, 1.0, math.inf, 0.6, budget=5000, seed=8)
    b = E.pack_greedy(sub, 1.0, math.inf, 0.6, budget=5000, seed=8)
    assert a == b


# ---------------------------------------------------------- entropy numbers

@pytest.mark.parametrize("k", [1, 2, 5, 9])
def test_entropy_number_interval(k):
    est = E.entropy_number(build_trig_n(1), 2.0, 2.0, k)
    # exact value: ceil(1/eps) balls of radius eps cover [-1, 1], so eps_k = 2^-k
    assert est.lower <= 2.0**-k <= est.upper
    assert est.lower == pytest.approx(2.0**-k) and est.upper == pytest.approx(2.0 ** (1 - k))


def test_entropy_number_upper_is_cover_scale():
    sub = build_trig_n(5)
    for k in (2, 4):
        est = E.entropy_number(sub, 2.0, math.inf, k, budget=20_000, seed=3)
        above = E.pack_greedy(sub, 2.0, math.inf, est.upper * (1 + 1e-9), budget=20_000, seed=3)
        below = E.pack_greedy(sub, 2.0, math.inf, est.upper, budget=20_000, seed=3)
        assert above.detail["count"] <= 2**k < below.detail["count"]


def test_entropy_number_trig5_decreasing():
    sub = build_trig_n(5)
    N = 5
    a = E.entropy_number(sub, 2.0, math.inf, N, budget=50_000, seed=1)
    b = E.entropy_number(sub, 2.0, math.inf, 2 * N, budget=50_000, seed=1)
    assert b.upper < a.upper and b.lower < a.lower


def test_entropy_number_monotone_in_k():
    sub = build_rademacher(3)[1]
    ests = [E.entropy_number(sub, 1.0, math.inf, k, budget=20_000, seed=4) for k in range(1, 9)]
    assert all(b.upper <= a.upper and b.lower <= a.lower for a, b in zip(ests, ests[1:]))


def test_entropy_number_preconditions():
    with pytest.raises(PreconditionError):
        E.entropy_number(build_trig_n(3), 2.0, math.inf, 0)
    with pytest.raises(PreconditionError):
        E.entropy_number(build_trig_n(3), 2.0, math.inf, 12, budget=2000)


# --------------------------------------------------------------- volumetric

def test_volumetric_values():
    assert E.volumetric_lower_bound(2, 0.5) == pytest.approx(math.log2(math.pi / 2), abs=1e-12)
    assert E.volumetric_lower_bound(2, 0.5) == pytest.approx(0.6515, abs=1e-4)
    assert E.volumetric_lower_bound(1, 0.5) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(PreconditionError):
        E.volumetric_lower_bound(2, 0.0)


def test_volumetric_strictly_decreasing_in_eps():
    for N in (1, 3, 6):
        vals = [E.volumetric_lower_bound(N, e) for e in np.geomspace(2, 0.01, 40)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


def test_volumetric_eps_k_inverts_bound():
    for N, k in ((2, 3), (5, 8), (4, 1)):
        two_eps = E.volumetric_eps_k(N, k)
        assert E.volumetric_lower_bound(N, two_eps / 2) == pytest.approx(k, abs=1e-9)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_rademacher_volumetric_consistency(N):
    _, sub = build_rademacher(N)
    for eps in (0.3, 0.5):
        est = E.pack_greedy(sub, 2.0, math.inf, 2 * eps, budget=50_000, seed=N)
        assert E.volumetric_lower_bound(N, eps) <= est.upper + 1


def test_rademacher_sup_is_l1():
    space, sub = build_rademacher(4)
    g = np.random.default_rng(0)
    for _ in range(100):
        a = g.standard_normal(4)
        assert lp_norm(space, sub.values @ a, math.inf) == pytest.approx(np.abs(a).sum(),
                                                                         rel=1e-15)


# ------------------------------------------------------------------- checks

def test_sandwich_n2_band():
    rep = E.check_ball_entropy_sandwich(2, 2.0, 0.5, budget=50_000)
    assert rep.band_low == pytest.approx(2.0) and rep.band_high == pytest.approx(2 * math.log2(5))
    assert rep.passed and rep.band_low - 1 <= rep.lower <= rep.band_high


def test_sandwich_n1_eps1():
    rep = E.check_ball_entropy_sandwich(1, 1.0, 1.0)
    assert rep.band_low == 0 and rep.passed


@pytest.mark.parametrize("seed", [0, 1])
def test_sandwich_n3_p1(seed):
    rep = E.check_ball_entropy_sandwich(3, 1.0, 0.7, budget=100_000, seed=seed)
    assert rep.passed


def test_sandwich_preconditions():
    with pytest.raises(PreconditionError):
        E.check_ball_entropy_sandwich(6, 1.0, 0.5)
    with pytest.raises(PreconditionError):
        E.check_ball_entropy_sandwich(2, 1.0, 1.5)


def test_transfer_exponents():
    theta, a = E.transfer_exponents(1.0, math.inf)
    assert theta == pytest.approx(0.5) and a == pytest.approx(2.0)
    theta, a = E.transfer_exponents(1.0, 4.0)
    assert theta == pytest.approx((0.5 - 0.25) / (1 - 0.25))


def test_transfer_scales_p1():
    eps = 0.25
    scales = E.transfer_scales(1.0, math.inf, eps, diameter=100.0)
    n = len(scales) - 1
    np.testing.assert_allclose(scales[:n], [2.0 ** (s - 4) * math.sqrt(eps) for s in range(1, n + 1)])
    assert scales[-1] == pytest.approx(math.sqrt(eps))
    assert all(s < 100 for s in scales)


def test_transfer_trivial_above_diameter():
    sub = build_trig_n(3)
    rep = E.check_transfer_inequality(sub, 1.0, math.inf, [100.0], budget=5000)
    assert rep.rows[0]["lhs_lower"] == 0 and rep.passed


def test_transfer_preconditions():
    with pytest.raises(PreconditionError):
        E.check_transfer_inequality(build_trig_n(3), 2.0, math.inf, [0.5])
    with pytest.raises(PreconditionError):
        E.check_transfer_inequality(build_trig_n(6), 1.0, math.inf, [0.5])


def test_scaling_trig_family_bounded():
    rep = E.check_entropy_scaling([build_trig_n(N) for N in (3, 5, 9)], 2.0, math.inf, seed=0,
                                  budget=10_000)
    assert rep.bounded and rep.beta == pytest.approx(0.5)
    for r in rep.rows:
        assert 0 < r["ratio"] < math.inf
    assert {r["N"] for r in rep.rows} == {3, 5, 9}


def test_scaling_rademacher_volumetric_contrast():
    fam = [build_rademacher(N)[1] for N in range(3, 9)]
    rep = E.check_entropy_scaling(fam, 1.0, math.inf, seed=0, budget=10_000, volumetric=True)
    at_k1 = {r["N"]: r for r in rep.rows if r["k"] == 1}
    for N, r in at_k1.items():
        assert r["volumetric_eps_lower"] > 0
        # the certified ball entropy in the l_1 metric grows with N
    vols = [at_k1[N]["volumetric_eps_lower"] for N in sorted(at_k1)]
    assert all(a < b for a, b in zip(vols, vols[1:]))
    ups = [at_k1[N]["eps_upper"] for N in sorted(at_k1)]
    assert ups[-1] > ups[0]


def test_scaling_rejects_large_members():
    with pytest.raises(PreconditionError):
        E.check_entropy_scaling([build_trig_n(13)], 2.0, math.inf)


def test_nikolskii_from_entropy_trig9():
    rep = E.check_nikolskii_from_entropy(build_trig_n(9), 2.0, budget=20_000)
    assert rep.nikolskii == pytest.approx(3.0, abs=1e-8)
    assert rep.passed and 3.0 <= 4 * rep.eps1_upper


def test_nikolskii_from_entropy_n1():
    sub = build_random(20, 1, seed=0)
    rep = E.check_nikolskii_from_entropy(sub, 1.0)
    u = sub.values[:, 0]
    assert rep.nikolskii == pytest.approx(lp_norm(sub.space, u, math.inf)
                                          / lp_norm(sub.space, u, 1.0))
    assert rep.passed


def test_nikolskii_from_entropy_rademacher4():
    rep = E.check_nikolskii_from_entropy(build_rademacher(4)[1], 2.0, budget=20_000)
    assert rep.nikolskii == pytest.approx(2.0, abs=1e-8)
    assert rep.passed and rep.eps1_lower <= rep.eps1_upper


def test_nikolskii_from_entropy_strict_raises_on_violation(monkeypatch):
    monkeypatch.setattr(E, "nikolskii_constant", lambda *a, **k: 1e6)
    with pytest.raises(CheckFailed):
        E.check_nikolskii_from_entropy(build_trig_n(3), 2.0, budget=5000)
    assert nikolskii_constant(build_trig_n(3), 2.0, math.inf) == pytest.approx(math.sqrt(3))

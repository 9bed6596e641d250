"""Discrete probability spaces, model subspaces and exact L_p norms.

Every space is a finite set of atoms with probability masses, so integrals
are weighted sums and all norms below are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import rng as _rng
from .errors import PreconditionError, RankDeficiencyError, InvariantError

MAX_ATOMS = 10**7
RANK_RTOL = 1e-10
ORTHO_ATOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """Finite probability space ``(Omega_M, mu)``.

    ``origin`` maps atoms back to a parent space when this space was derived
    from another one (e.g. by restricting to the support of a density).
    """

    weights: np.ndarray
    coords: np.ndarray | None = None
    label: str = ""
    origin: np.ndarray | None = None

    def __post_init__(self):
        w = _frozen(self.weights).ravel()
        if w.size == 0:
            raise PreconditionError("a space needs at least one atom")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvariantError("atom weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvariantError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "weights", w)
        if self.coords is not None:
            c = _frozen(self.coords)
            if c.ndim == 1:
                c = c.reshape(-1, 1)
            if c.shape[0] != w.size:
                raise PreconditionError("coords must have one row per atom")
            object.__setattr__(self, "coords", c)
        if self.origin is not None:
            o = np.array(self.origin, dtype=np.int64).ravel()
            o.setflags(write=False)
            object.__setattr__(self, "origin", o)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return 0 if self.coords is None else self.coords.shape[1]

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)


@dataclass(frozen=True)
class IndexSet:
    """Finite set of integer frequency vectors in Z^d."""

    dim: int
    freqs: tuple

    def __post_init__(self):
        freqs = tuple(tuple(int(x) for x in k) for k in self.freqs)
        if any(len(k) != self.dim for k in freqs):
            raise PreconditionError("frequency has wrong dimension")
        if len(set(freqs)) != len(freqs):
            raise PreconditionError("duplicate frequencies in index set")
        object.__setattr__(self, "freqs", freqs)

    def __len__(self):
        return len(self.freqs)

    def __contains__(self, k):
        return tuple(k) in set(self.freqs)


@dataclass(frozen=True, eq=False)
class Subspace:
    """N-dimensional function space given by its basis values on the atoms.

    Column ``i`` of ``values`` is basis function ``i`` evaluated at every
    atom. ``orthonormal`` is True only if the columns are orthonormal in
    L_2(mu); it is verified at construction.
    """

    space: DiscreteSpace
    values: np.ndarray
    orthonormal: bool = False
    label: str = ""

    def __post_init__(self):
        B = _frozen(self.values)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if B.shape[0] != self.space.size:
            raise PreconditionError(
                f"values have {B.shape[0]} rows but the space has {self.space.size} atoms")
        if not np.all(np.isfinite(B)):
            raise InvariantError("basis values must be finite")
        object.__setattr__(self, "values", B)
        sv = np.linalg.svd(np.sqrt(self.space.weights)[:, None] * B, compute_uv=False)
        if sv.size < B.shape[1] or sv[-1] <= RANK_RTOL * max(sv[0], 1e-300):
            raise RankDeficiencyError(
                f"basis is rank deficient under mu (sigma_min/sigma_max = "
                f"{(sv[-1] / sv[0]) if sv.size and sv[0] > 0 else 0.0:.3e})")
        if self.orthonormal:
            err = np.abs(gram(self) - np.eye(B.shape[1])).max()
            if err > ORTHO_ATOL:
                raise InvariantError(f"orthonormal flag set but Gram error is {err:.3e}")

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def M(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FunctionVec:
    """Coefficients of a function in the current basis of a subspace."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(np.atleast_1d(self.coeffs)).ravel())


def gram(subspace: Subspace) -> np.ndarray:
    """Gram matrix ``B^T diag(mu) B``."""
    B = subspace.values
    return B.T @ (subspace.space.weights[:, None] * B)


def is_orthonormal(values: np.ndarray, weights: np.ndarray, atol: float = ORTHO_ATOL) -> bool:
    G = values.T @ (weights[:, None] * values)
    return bool(np.abs(G - np.eye(G.shape[0])).max() <= atol)


def make_space(weights, coords=None, label: str = "") -> DiscreteSpace:
    return DiscreteSpace(weights=np.asarray(weights, dtype=float), coords=coords, label=label)


def uniform_space(M: int, label: str = "uniform") -> DiscreteSpace:
    if M < 1:
        raise PreconditionError("M must be positive")
    return DiscreteSpace(weights=np.full(M, 1.0 / M), label=label)


def make_uniform_torus(d: int, points_per_axis: int, max_atoms: int = MAX_ATOMS) -> DiscreteSpace:
    """Equispaced grid on [0, 2pi)^d with equal masses."""
    if d < 1 or points_per_axis < 1:
        raise PreconditionError("need d >= 1 and points_per_axis >= 1")
    M = points_per_axis**d
    if M > max_atoms:
        raise PreconditionError(f"grid of {M} atoms exceeds the maximum {max_atoms}")
    axis = 2.0 * np.pi * np.arange(points_per_axis) / points_per_axis
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    return DiscreteSpace(weights=np.full(M, 1.0 / M), coords=coords,
                         label=f"torus(d={d},n={points_per_axis})")


def _dyadic_level(k: int) -> int:
    # the unique s with [2^(s-1)] <= |k| < 2^s
    return 0 if k == 0 else abs(k).bit_length()


def hyperbolic_cross(d: int, n: int) -> IndexSet:
    """Step hyperbolic cross: union of the dyadic blocks rho(s), ||s||_1 <= n."""
    if d < 1 or n < 0:
        raise PreconditionError("need d >= 1 and n >= 0")
    out = []

    def rec(prefix, budget):
        if len(prefix) == d:
            out.append(tuple(prefix))
            return
        for k in range(-(2**budget - 1), 2**budget):
            s = _dyadic_level(k)
            if s <= budget:
                rec(prefix + [k], budget - s)

    rec([], n)
    return IndexSet(dim=d, freqs=tuple(sorted(out)))


def frequency_block(d: int, kmax: int) -> IndexSet:
    """All k with max_j |k_j| <= kmax."""
    rng = range(-kmax, kmax + 1)
    return IndexSet(dim=d, freqs=tuple(itertools.product(rng, repeat=d)))


def _representative(k: tuple) -> tuple:
    for x in k:
        if x != 0:
            return k if x > 0 else tuple(-y for y in k)
    return k


def real_trig_frequencies(Q: IndexSet) -> tuple[bool, list]:
    """(has_constant, one representative per antipodal pair) in first-seen order."""
    has_const = False
    reps, seen = [], set()
    for k in Q.freqs:
        if all(x == 0 for x in k):
            has_const = True
            continue
        r = _representative(k)
        if r not in seen:
            seen.add(r)
            reps.append(r)
    return has_const, reps


def build_trig(space: DiscreteSpace, Q: IndexSet, label: str = "") -> Subspace:
    """Real trigonometric system 1, sqrt2 cos(k.x), sqrt2 sin(k.x) over ``Q``."""
    if space.coords is None or space.dim != Q.dim:
        raise PreconditionError("space needs torus coordinates of the index-set dimension")
    has_const, reps = real_trig_frequencies(Q)
    X = space.coords
    cols = []
    if has_const:
        cols.append(np.ones(space.size))
    for k in reps:
        phase = X @ np.asarray(k, dtype=float)
        cols.append(math.sqrt(2.0) * np.cos(phase))
        cols.append(math.sqrt(2.0) * np.sin(phase))
    if not cols:
        raise PreconditionError("empty index set")
    B = np.stack(cols, axis=1)
    ortho = is_orthonormal(B, space.weights)
    return Subspace(space=space, values=B, orthonormal=ortho,
                    label=label or f"trig(N={B.shape[1]})")


def trig_frequencies_for_dim(N: int) -> IndexSet:
    """Univariate frequency set whose real system has dimension ``N``.

    Odd N gives {-(N-1)/2, ..., (N-1)/2}; even N gives {1, ..., N/2} (no constant).
    """
    if N < 1:
        raise PreconditionError("N must be positive")
    if N % 2:
        h = (N - 1) // 2
        return IndexSet(dim=1, freqs=tuple((k,) for k in range(-h, h + 1)))
    return IndexSet(dim=1, freqs=tuple((k,) for k in range(1, N // 2 + 1)))


def build_trig_n(N: int, points: int = 64) -> Subspace:
    """Univariate real trig subspace of dimension N on a uniform grid."""
    return build_trig(make_uniform_torus(1, points), trig_frequencies_for_dim(N))


def build_rademacher(N: int) -> tuple[DiscreteSpace, Subspace]:
    """The first N Rademacher functions realized on their 2^N sign-pattern atoms.

    Atom ``j`` carries the pattern whose k-th entry is ``-1`` iff bit
    ``N-1-k`` of ``j`` is set, so the rows run (+,...,+), ..., (-,...,-).
    """
    if N < 1 or N > 24:
        raise PreconditionError("Rademacher dimension must satisfy 1 <= N <= 24")
    M = 1 << N
    j = np.arange(M)[:, None]
    bits = (j >> (N - 1 - np.arange(N))[None, :]) & 1
    B = 1.0 - 2.0 * bits
    space = DiscreteSpace(weights=np.full(M, 1.0 / M), label=f"rademacher(N={N})")
    return space, Subspace(space=space, values=B, orthonormal=True, label=f"rademacher(N={N})")


def build_random(M: int, N: int, seed: int = 0, spike: float | None = None,
                 label: str = "") -> Subspace:
    """Gaussian basis values on M atoms.

    With ``spike`` set, atom 0 carries mass ``spike`` and the rest share the
    remainder equally.
    """
    if N < 1 or M < N:
        raise PreconditionError("need 1 <= N <= M")
    if spike is None:
        w = np.full(M, 1.0 / M)
    else:
        if not 0 < spike < 1:
            raise PreconditionError("spike mass must lie in (0, 1)")
        w = np.full(M, (1.0 - spike) / (M - 1))
        w[0] = spike
        w /= w.sum()
    B = _rng(seed, 101).standard_normal((M, N))
    space = DiscreteSpace(weights=w, label=f"random(M={M})")
    return Subspace(space=space, values=B, label=label or f"random(M={M},N={N})")


def coordinate_subspace(N: int, p: float) -> Subspace:
    """R^N with the l_p norm, realized on N atoms of mass 1/N.

    Values are ``N^(1/p) I`` so that ``||B c||_{L_p(mu)} = ||c||_{l_p}``.
    """
    space = DiscreteSpace(weights=np.full(N, 1.0 / N), label=f"coords(N={N})")
    scale = float(N) ** (1.0 / p) if math.isfinite(p) else 1.0
    return Subspace(space=space, values=scale * np.eye(N), orthonormal=(p == 2),
                    label=f"l{p:g}^{N}")


def restrict(subspace: Subspace, atoms, weights=None, label: str = "") -> Subspace:
    """Subspace restricted to ``atoms`` under new (default: equal) weights."""
    atoms = np.asarray(atoms, dtype=np.int64)
    if weights is None:
        weights = np.full(atoms.size, 1.0 / atoms.size)
    old = subspace.space
    coords = None if old.coords is None else old.coords[atoms]
    parent = atoms if old.origin is None else old.origin[atoms]
    space = DiscreteSpace(weights=weights, coords=coords, label=label or old.label, origin=parent)
    return Subspace(space=space, values=subspace.values[atoms], label=label or subspace.label)


def lp_norm(space: DiscreteSpace, values, p: float) -> float:
    """``(sum_j mu_j |v_j|^p)^(1/p)``; ``p = inf`` is the max over atoms with mass."""
    v = np.abs(np.asarray(values, dtype=float).ravel())
    if v.size != space.size:
        raise PreconditionError("value vector does not match the space")
    if math.isinf(p):
        sup = v[space.weights > 0]
        return float(sup.max()) if sup.size else 0.0
    if p < 1:
        raise PreconditionError("p must be >= 1")
    top = v.max()
    if top == 0:
        return 0.0
    # scale out the max so large p does not overflow
    return float(top * np.dot(space.weights, (v / top) ** p) ** (1.0 / p))


def lp_norms(weights: np.ndarray, V: np.ndarray, p: float) -> np.ndarray:
    """Row-wise L_p(mu) norms of a batch ``V`` of shape (K, M)."""
    A = np.abs(V)
    if math.isinf(p):
        return A[:, weights > 0].max(axis=1)
    top = A.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    return top * ((A / safe[:, None]) ** p @ weights) ** (1.0 / p)


def evaluate(subspace: Subspace, f: FunctionVec | np.ndarray) -> np.ndarray:
    c = f.coeffs if isinstance(f, FunctionVec) else np.asarray(f, dtype=float).ravel()
    if c.size != subspace.dimension:
        raise PreconditionError(f"expected {subspace.dimension} coefficients, got {c.size}")
    return subspace.values @ c

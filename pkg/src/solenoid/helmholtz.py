"""The Helmholtz projection onto divergence-free fields on (0,1)^2.

The projection solves the Dirichlet problem Delta phi = d/dx u2 - d/dy u1,
phi = 0 on the boundary, and returns (-d/dy phi, d/dx phi).  In the mixed
product bases this is a pure mode-by-mode recombination: with u1 expanded in
sin.cos (coefficients a) and u2 in cos.sin (coefficients b),

    phi_{n,m}     = (n b_{n,m} - m a_{n,m}) / ((n^2+m^2) pi)
    (P u)_{1,n,m} = (m^2 a_{n,m} - n m b_{n,m}) / (n^2+m^2)   (sin.cos)
    (P u)_{2,n,m} = (n^2 b_{n,m} - n m a_{n,m}) / (n^2+m^2)   (cos.sin)

for n, m >= 1; modes with n = 0 or m = 0 are gradients and project to zero.
Both mode factors are bounded by 1, so discarded input mass of total L2 size
t contributes at most sqrt(2) t per output component; that is the only tail
a projection carries.

All inputs must present component 1 in the sin.cos basis and component 2 in
cos.sin.  This is not a restriction in the solver: mollified elements,
semigroup outputs, and the nonlinearity all land in exactly these bases.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Tuple

import numpy as np

from .approxcore import Name
from .floatball import BallGrid, FloatBall
from .polyfield import MollifiedElement
from .spectral import FourierField, coefficients

__all__ = [
    "VectorFieldName", "project", "project_pair", "project_search",
    "divergence", "truncation_index",
]

_EPS = 2.0 ** -52
_TINY = 5e-308


def _as_pair(u, k: int = None) -> Tuple[FourierField, FourierField]:
    """Resolve a vector-field argument to a concrete (sc, cs) field pair."""
    if isinstance(u, VectorFieldName):
        if k is None:
            raise ValueError("a precision level is needed to resolve a name")
        u = u.refine(k)
    if isinstance(u, MollifiedElement):
        u = coefficients(u, 64)
    if not (isinstance(u, tuple) and len(u) == 2):
        raise TypeError("expected a component pair, got %r" % type(u).__name__)
    f1, f2 = u
    if f1.basis != "sc" or f2.basis != "cs":
        raise ValueError("projection needs component 1 in sin.cos and "
                         "component 2 in cos.sin (got %s, %s)"
                         % (f1.basis, f2.basis))
    return f1, f2


class VectorFieldName:
    """Name of an (L2)^2 vector field: refine(k) yields a component pair
    (sin.cos, cos.sin) whose combined L2 distance to the field is <= 2^-k."""

    __slots__ = ("name",)

    def __init__(self, name: Name):
        self.name = name

    @staticmethod
    def constant(f1: FourierField, f2: FourierField) -> "VectorFieldName":
        pair = _as_pair((f1, f2))
        return VectorFieldName(Name(lambda k: pair, label="const field"))

    def refine(self, k: int) -> Tuple[FourierField, FourierField]:
        return _as_pair(self.name.refine(k))


def _pair_tail_sq(f1: FourierField, f2: FourierField) -> float:
    t1, t2 = f1.tail_l2.upper(), f2.tail_l2.upper()
    return (t1 * t1 + t2 * t2) * (1 + 8 * _EPS)


def _factor_grid(num: np.ndarray, den: np.ndarray) -> BallGrid:
    c = num / den
    return BallGrid(c, np.abs(c) * 2 * _EPS + _TINY)


def project_pair(f1: FourierField, f2: FourierField) \
        -> Tuple[FourierField, FourierField]:
    """Mode-wise Helmholtz projection of a concrete field pair.

    Total and exact up to enclosure arithmetic; input tails propagate with
    the factor sqrt(2) bound from the mode-factor estimate.
    """
    f1, f2 = _as_pair((f1, f2))
    cut = max(f1.cutoff, f2.cutoff)
    g1 = f1._embedded(cut).grid
    g2 = f2._embedded(cut).grid
    n = np.arange(cut + 1, dtype=np.float64)
    ng, mg = np.meshgrid(n, n, indexing="ij")
    den = ng * ng + mg * mg
    den[0, 0] = 1.0
    live = (ng >= 1) & (mg >= 1)
    mm = _factor_grid(np.where(live, mg * mg, 0.0), den)
    nn = _factor_grid(np.where(live, ng * ng, 0.0), den)
    nm = _factor_grid(np.where(live, ng * mg, 0.0), den)
    p1 = mm * g1 + -(nm * g2)
    p2 = nn * g2 + -(nm * g1)
    tail_sq = 2.0 * _pair_tail_sq(f1, f2)
    tail = FloatBall(0.0) if tail_sq == 0.0 else FloatBall.from_endpoints(
        0.0, math.sqrt(tail_sq) * (1 + 8 * _EPS) + _TINY)
    return (FourierField("sc", cut, p1, tail),
            FourierField("cs", cut, p2, tail))


def divergence(f1: FourierField, f2: FourierField) -> FourierField:
    """d/dx f1 + d/dy f2 for a band-limited (sc, cs) pair; lands in cos.cos."""
    f1, f2 = _as_pair((f1, f2))
    return f1.derivative(1) + f2.derivative(2)


def truncation_index(u, K: int) -> int:
    """Smallest N with 2 sum_{max(n,m) >= N} (a^2 + b^2) rho <= 2^-2(K+1),
    tails of the presented pair included.

    For a band-limited pair with cutoff c the answer is at most c + 1.
    """
    if K < 0:
        raise ValueError("precision must be nonnegative")
    f1, f2 = _as_pair(u, K + 2 if isinstance(u, VectorFieldName) else None)
    cut = max(f1.cutoff, f2.cutoff)
    a, b = f1._embedded(cut), f2._embedded(cut)
    mass = np.zeros((cut + 2,))
    for f in (a, b):
        hi = (np.abs(f.grid.c) + f.grid.r) ** 2 * f.weights()
        # mass[N] = upper bound on the pair mass with max(n, m) >= N
        ring = np.zeros(cut + 2)
        for N in range(cut, -1, -1):
            # modes with max(n, m) exactly N
            ring[N] = hi[N, :N + 1].sum() + hi[:N + 1, N].sum() - hi[N, N]
        mass[:-1] += np.cumsum(ring[::-1])[::-1][:cut + 1]
    mass = mass * (1 + (cut + 8) * _EPS) + _pair_tail_sq(f1, f2)
    target = 0.25 ** (K + 1) / 2
    for N in range(cut + 2):
        if mass[min(N, cut + 1)] <= target:
            return N
    raise ValueError("tail mass does not certify at this precision")


def project(u, K: int) -> Tuple[FourierField, FourierField]:
    """2^-K approximation of the Helmholtz projection of u.

    ``u`` is a VectorFieldName, a MollifiedElement, or a concrete
    (sin.cos, cos.sin) pair.  The budget splits as in the underlying
    truncation estimate: half for resolving the name, half for the series
    tail; the emitted pair is the truncated projection series itself, which
    is divergence-free and band-limited apart from the certified tail.
    """
    if K < 0:
        raise ValueError("precision must be nonnegative")
    f1, f2 = _as_pair(u, K + 1)
    N = truncation_index((f1, f2), K + 1)
    cap = max(N - 1, 0)
    p1, p2 = project_pair(f1.truncated(cap), f2.truncated(cap))
    return p1, p2


def project_name(u: VectorFieldName) -> Name:
    """Name of the projected field (componentwise pair approximants)."""
    return Name(lambda k: project(u, k), label="helmholtz")


def project_search(u, K: int, max_index: int = 64):
    """The literal dense-set search from the underlying construction: walk
    the enumeration of mollified trimmed polynomials and return the first
    element within 2^-(K+1) of the truncated projection series.

    Kept for fidelity experiments; the enumeration is far too slow for
    production use and the walk raises RuntimeError when ``max_index`` is
    exhausted.
    """
    from . import polyfield as pf
    from .spectral import mollified_field_pair

    p1, p2 = project(u, K + 1)
    bound = 2.0 ** -(K + 1)
    for j in range(1, max_index + 1):
        cand = pf.enumerate_solenoidal_polys(j)
        for k in range(1, 4):
            elem = pf.mollify(cand, k, k + 1)
            c1, c2 = mollified_field_pair(elem, max(p1.cutoff, 16))
            d = ((p1 - c1).l2_sq_ball() + (p2 - c2).l2_sq_ball())
            if math.sqrt(max(d.upper(), 0.0)) <= bound:
                return elem
    raise RuntimeError("no dense-set element within reach of the search cap")

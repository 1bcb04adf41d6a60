"""Exact algebra of divergence-free, boundary-free polynomial fields.

Everything structural here is exact rational arithmetic: the constraint
system on coefficients, its nullspace, the enumeration of rational kernel
points, and the trim rescaling.  Mollification is stored symbolically and
evaluated on demand through certified quadrature; the radial structure of
the bump kernel (it depends on the coordinates only through max(|z1|,|z2|))
lets every integral against it collapse to one dimension.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .approxcore import (BoundedValue, DEFAULT_PREC, bv_exp, bv_sqrt,
                         certified_integral)
from .taylor import NonsmoothPanel, TSeries

__all__ = [
    "RationalPoly2", "SolenoidalPolyPair", "TrimmedField", "MollifiedElement",
    "constraint_matrix", "kernel_basis", "matrix_rank", "solenoidal_kernel",
    "enumerate_solenoidal_polys", "index_of_kernel_point", "trim", "mollify",
    "metric", "approximation_defect", "gamma0", "gamma_radial_moment",
    "mollifier_cos_coefficient", "mollifier_mass", "poly_name",
]

_F0 = Fraction(0)
_F1 = Fraction(1)


# ---------------------------------------------------------------------------
# rational polynomials in two variables
# ---------------------------------------------------------------------------

class RationalPoly2:
    """Polynomial sum a[i][j] x^i y^j with Fraction coefficients.

    The stored degree is tight: unless the polynomial is zero, some entry in
    row N or column N is nonzero.
    """

    __slots__ = ("a", "N")

    def __init__(self, grid: Sequence[Sequence[Fraction]]):
        rows = [[Fraction(v) for v in row] for row in grid]
        if not rows:
            rows = [[_F0]]
        size = max(len(rows), max(len(r) for r in rows))
        full = [[rows[i][j] if i < len(rows) and j < len(rows[i]) else _F0
                 for j in range(size)] for i in range(size)]
        deg = 0
        for i in range(size):
            for j in range(size):
                if full[i][j] != 0:
                    deg = max(deg, i, j)
        self.N = deg
        self.a = tuple(tuple(full[i][j] for j in range(deg + 1))
                       for i in range(deg + 1))

    @staticmethod
    def zero() -> "RationalPoly2":
        return RationalPoly2([[_F0]])

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.a for v in row)

    def coeff(self, i: int, j: int) -> Fraction:
        if 0 <= i <= self.N and 0 <= j <= self.N:
            return self.a[i][j]
        return _F0

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x: Fraction, y: Fraction) -> Fraction:
        x, y = Fraction(x), Fraction(y)
        acc = _F0
        for i in range(self.N, -1, -1):
            row = _F0
            for j in range(self.N, -1, -1):
                row = row * y + self.a[i][j]
            acc = acc * x + row
        return acc

    def eval_ball(self, bx, by):
        """Horner evaluation with enclosure scalars (ball x and y)."""
        if isinstance(bx, BoundedValue):
            conv = BoundedValue.from_fraction
        else:
            conv = type(bx).exact
        acc = conv(_F0)
        for i in range(self.N, -1, -1):
            row = conv(_F0)
            for j in range(self.N, -1, -1):
                row = row * by + conv(self.a[i][j])
            acc = acc * bx + row
        return acc

    # -- calculus and algebra -----------------------------------------------

    def deriv_x(self) -> "RationalPoly2":
        if self.N == 0:
            return RationalPoly2.zero()
        return RationalPoly2([[self.a[i + 1][j] * (i + 1)
                               for j in range(self.N + 1)]
                              for i in range(self.N)])

    def deriv_y(self) -> "RationalPoly2":
        if self.N == 0:
            return RationalPoly2.zero()
        return RationalPoly2([[self.a[i][j + 1] * (j + 1)
                               for j in range(self.N)]
                              for i in range(self.N + 1)])

    def __add__(self, o: "RationalPoly2") -> "RationalPoly2":
        n = max(self.N, o.N)
        return RationalPoly2([[self.coeff(i, j) + o.coeff(i, j)
                               for j in range(n + 1)] for i in range(n + 1)])

    def __neg__(self) -> "RationalPoly2":
        return RationalPoly2([[-v for v in row] for row in self.a])

    def __sub__(self, o: "RationalPoly2") -> "RationalPoly2":
        return self + (-o)

    def scale(self, f: Fraction) -> "RationalPoly2":
        f = Fraction(f)
        return RationalPoly2([[v * f for v in row] for row in self.a])

    def __eq__(self, o) -> bool:
        return isinstance(o, RationalPoly2) and self.a == o.a

    def __hash__(self):
        return hash(self.a)

    def coeff_abs_sum(self) -> Fraction:
        return sum((abs(v) for row in self.a for v in row), _F0)

    def compose_affine(self, sx: Fraction, cx: Fraction,
                       sy: Fraction, cy: Fraction) -> "RationalPoly2":
        """Return p(sx*x + cx, sy*y + cy) expanded exactly."""
        sx, cx, sy, cy = map(Fraction, (sx, cx, sy, cy))
        n = self.N
        # binomial expansion tables: (s*t + c)^i = sum_d B[i][d] t^d
        def table(s, c):
            rows = [[_F1]]
            for i in range(1, n + 1):
                prev = rows[-1]
                cur = [_F0] * (i + 1)
                for d, v in enumerate(prev):
                    cur[d] += v * c
                    cur[d + 1] += v * s
                rows.append(cur)
            return rows
        bx, by = table(sx, cx), table(sy, cy)
        out = [[_F0] * (n + 1) for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(n + 1):
                aij = self.a[i][j]
                if aij == 0:
                    continue
                for d1, v1 in enumerate(bx[i]):
                    if v1 == 0:
                        continue
                    for d2, v2 in enumerate(by[j]):
                        if v2 != 0:
                            out[d1][d2] += aij * v1 * v2
        return RationalPoly2(out)

    def to_json(self) -> list:
        return [[str(v) for v in row] for row in self.a]

    @staticmethod
    def from_json(obj: list) -> "RationalPoly2":
        return RationalPoly2([[Fraction(v) for v in row] for row in obj])

    def __repr__(self):
        return "RationalPoly2(N=%d)" % self.N


def poly_inner_on_box(p: RationalPoly2, q: RationalPoly2,
                      box: Tuple[Tuple[Fraction, Fraction],
                                 Tuple[Fraction, Fraction]]) -> Fraction:
    """Exact integral of p*q over an axis-aligned rational box."""
    (xa, xb), (ya, yb) = box
    xa, xb, ya, yb = map(Fraction, (xa, xb, ya, yb))
    dmax = p.N + q.N
    xpow = [(xb ** (d + 1) - xa ** (d + 1)) / (d + 1) for d in range(dmax + 1)]
    ypow = [(yb ** (d + 1) - ya ** (d + 1)) / (d + 1) for d in range(dmax + 1)]
    acc = _F0
    for i in range(p.N + 1):
        for j in range(p.N + 1):
            pij = p.a[i][j]
            if pij == 0:
                continue
            for k in range(q.N + 1):
                for l in range(q.N + 1):
                    qkl = q.a[k][l]
                    if qkl != 0:
                        acc += pij * qkl * xpow[i + k] * ypow[j + l]
    return acc


# ---------------------------------------------------------------------------
# solenoidal pairs and the coefficient constraint system
# ---------------------------------------------------------------------------

class SolenoidalPolyPair:
    """Vector polynomial (p1, p2), divergence-free and zero on the boundary
    of (-1,1)^2 when is_solenoidal() holds."""

    __slots__ = ("p1", "p2")

    def __init__(self, p1: RationalPoly2, p2: RationalPoly2):
        self.p1 = p1
        self.p2 = p2

    @property
    def N(self) -> int:
        return max(self.p1.N, self.p2.N)

    @staticmethod
    def zero() -> "SolenoidalPolyPair":
        return SolenoidalPolyPair(RationalPoly2.zero(), RationalPoly2.zero())

    def is_zero(self) -> bool:
        return self.p1.is_zero() and self.p2.is_zero()

    def is_solenoidal(self) -> bool:
        """Exact rational test of the divergence and boundary conditions."""
        div = self.p1.deriv_x() + self.p2.deriv_y()
        if not div.is_zero():
            return False
        n = self.N
        for p in (self.p1, self.p2):
            for j in range(n + 1):
                if sum(p.coeff(i, j) for i in range(n + 1)) != 0:
                    return False
                if sum((-1) ** i * p.coeff(i, j) for i in range(n + 1)) != 0:
                    return False
            for i in range(n + 1):
                if sum(p.coeff(i, j) for j in range(n + 1)) != 0:
                    return False
                if sum((-1) ** j * p.coeff(i, j) for j in range(n + 1)) != 0:
                    return False
        return True

    def __add__(self, o: "SolenoidalPolyPair") -> "SolenoidalPolyPair":
        return SolenoidalPolyPair(self.p1 + o.p1, self.p2 + o.p2)

    def __sub__(self, o: "SolenoidalPolyPair") -> "SolenoidalPolyPair":
        return SolenoidalPolyPair(self.p1 - o.p1, self.p2 - o.p2)

    def scale(self, f: Fraction) -> "SolenoidalPolyPair":
        return SolenoidalPolyPair(self.p1.scale(f), self.p2.scale(f))

    def __eq__(self, o) -> bool:
        return (isinstance(o, SolenoidalPolyPair) and self.p1 == o.p1
                and self.p2 == o.p2)

    def __hash__(self):
        return hash((self.p1, self.p2))

    def sup_bound(self) -> Fraction:
        """sup over the closed square of max(|p1|, |p2|), via coefficient
        sums (each |x|,|y| <= 1)."""
        return max(self.p1.coeff_abs_sum(), self.p2.coeff_abs_sum())

    def lipschitz_bound(self) -> Fraction:
        """Bound L with |p_j(u) - p_j(v)| <= L(|u1-v1| + |u2-v2|) on the
        closed square, from derivative coefficient sums."""
        best = _F0
        for p in (self.p1, self.p2):
            best = max(best, p.deriv_x().coeff_abs_sum(),
                       p.deriv_y().coeff_abs_sum())
        return best

    def l2_norm_sq(self) -> Fraction:
        box = ((-_F1, _F1), (-_F1, _F1))
        return poly_inner_on_box(self.p1, self.p1, box) + \
            poly_inner_on_box(self.p2, self.p2, box)

    def to_json(self) -> dict:
        n = self.N
        def grid(p):
            return [[str(p.coeff(i, j)) for j in range(n + 1)]
                    for i in range(n + 1)]
        return {"N": n, "a1": grid(self.p1), "a2": grid(self.p2)}

    @staticmethod
    def from_json(obj: dict) -> "SolenoidalPolyPair":
        return SolenoidalPolyPair(RationalPoly2.from_json(obj["a1"]),
                                  RationalPoly2.from_json(obj["a2"]))

    def __repr__(self):
        return "SolenoidalPolyPair(N=%d)" % self.N


def constraint_matrix(N: int) -> List[List[int]]:
    """Integer matrix whose nullspace is the space of degree-N solenoidal
    coefficient vectors.

    Unknown ordering: a1 flattened row-major (index i*(N+1)+j), then a2 with
    offset (N+1)^2.  Rows: the divergence identities, then the two edge
    families of leading-coefficient conditions, then the boundary sum and
    alternating-sum families.
    """
    if N < 0:
        raise ValueError("degree must be nonnegative")
    w = N + 1
    ncols = 2 * w * w
    def a1(i, j):
        return i * w + j
    def a2(i, j):
        return w * w + i * w + j
    rows = []
    for i in range(N):
        for j in range(N):
            r = [0] * ncols
            r[a1(i + 1, j)] = i + 1
            r[a2(i, j + 1)] = j + 1
            rows.append(r)
    for i in range(N):
        r = [0] * ncols
        r[a1(i + 1, N)] = i + 1
        rows.append(r)
    for j in range(N):
        r = [0] * ncols
        r[a2(N, j + 1)] = j + 1
        rows.append(r)
    for j in range(w):  # column sums over i, plain and alternating
        for comp in (a1, a2):
            for sign in (False, True):
                r = [0] * ncols
                for i in range(w):
                    r[comp(i, j)] = (-1) ** i if sign else 1
                rows.append(r)
    for i in range(w):  # row sums over j
        for comp in (a1, a2):
            for sign in (False, True):
                r = [0] * ncols
                for j in range(w):
                    r[comp(i, j)] = (-1) ** j if sign else 1
                rows.append(r)
    return rows


def _row_reduce(rows: List[List[Fraction]],
                col_order: Optional[Sequence[int]] = None):
    """Gaussian elimination over the rationals; returns (rank, rref, pivots).

    ``col_order`` selects the order in which pivot columns are tried, which
    gives an independent elimination path for cross-checking ranks.
    """
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return 0, [], []
    ncols = len(m[0])
    order = list(col_order) if col_order is not None else list(range(ncols))
    pivots = []
    r = 0
    for c in order:
        pivot = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return r, m, pivots


def matrix_rank(rows, col_order=None) -> int:
    return _row_reduce(rows, col_order)[0]


def kernel_basis(rows: List[List[int]]) -> List[List[Fraction]]:
    """Exact rational basis of the nullspace of the given matrix."""
    if not rows:
        return []
    ncols = len(rows[0])
    rank, rref, pivots = _row_reduce(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        v = [_F0] * ncols
        v[fc] = _F1
        for r, pc in enumerate(pivots):
            v[pc] = -rref[r][fc]
        basis.append(v)
    return basis


@lru_cache(maxsize=None)
def solenoidal_kernel(N: int) -> Tuple[SolenoidalPolyPair, ...]:
    """Basis of degree-N solenoidal pairs, as polynomial objects."""
    basis = kernel_basis(constraint_matrix(N))
    w = N + 1
    out = []
    for v in basis:
        g1 = [[v[i * w + j] for j in range(w)] for i in range(w)]
        g2 = [[v[w * w + i * w + j] for j in range(w)] for i in range(w)]
        out.append(SolenoidalPolyPair(RationalPoly2(g1), RationalPoly2(g2)))
    return tuple(out)


# ---------------------------------------------------------------------------
# enumeration of rational kernel points
# ---------------------------------------------------------------------------

def cantor_pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b

def cantor_unpair(z: int) -> Tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b

def _nat_to_int(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2

def _int_to_nat(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1

def _nat_to_fraction(t: int) -> Fraction:
    u, v = cantor_unpair(t)
    return Fraction(_nat_to_int(u), v + 1)

def _fraction_to_nat(q: Fraction) -> int:
    q = Fraction(q)
    return cantor_pair(_int_to_nat(q.numerator), q.denominator - 1)

def _nat_to_tuple(t: int, d: int) -> Tuple[int, ...]:
    out = []
    for _ in range(d - 1):
        t, last = cantor_unpair(t)
        out.append(last)
    out.append(t)
    return tuple(reversed(out))

def _tuple_to_nat(vals: Sequence[int]) -> int:
    t = vals[0]
    for v in vals[1:]:
        t = cantor_pair(t, v)
    return t


def enumerate_solenoidal_polys(index: int) -> SolenoidalPolyPair:
    """Deterministic total enumeration of rational solenoidal pairs.

    Index 0 is the zero field.  Otherwise the index factors as
    2^N (2t + 1), so the degree N is read off the 2-adic valuation (keeping
    degrees small for small indices) and t encodes the rational coordinates
    in the cached kernel basis of degree N.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    if index == 0:
        return SolenoidalPolyPair.zero()
    N = (index & -index).bit_length() - 1
    t = (index >> (N + 1))
    basis = solenoidal_kernel(N)
    if not basis:
        return SolenoidalPolyPair.zero()
    codes = _nat_to_tuple(t, len(basis))
    out = SolenoidalPolyPair.zero()
    for code, b in zip(codes, basis):
        c = _nat_to_fraction(code)
        if c != 0:
            out = out + b.scale(c)
    return out


def index_of_kernel_point(N: int, coords: Sequence[Fraction]) -> int:
    """Inverse of the enumeration for a point given in the degree-N kernel
    basis coordinates."""
    basis = solenoidal_kernel(N)
    if len(coords) != len(basis):
        raise ValueError("expected %d coordinates" % len(basis))
    t = _tuple_to_nat([_fraction_to_nat(Fraction(c)) for c in coords])
    return (2 * t + 1) << N


# ---------------------------------------------------------------------------
# trim
# ---------------------------------------------------------------------------

class TrimmedField:
    """Piecewise field: rescaled polynomials inside the closed box
    [-(1-2^-k), 1-2^-k]^2, zero outside."""

    __slots__ = ("base", "k", "q1", "q2", "beta")

    def __init__(self, base: SolenoidalPolyPair, k: int):
        if k < 1:
            raise ValueError("trim index must be >= 1")
        self.base = base
        self.k = k
        self.beta = 1 - Fraction(1, 1 << k)
        s = 1 / self.beta
        self.q1 = base.p1.compose_affine(s, _F0, s, _F0)
        self.q2 = base.p2.compose_affine(s, _F0, s, _F0)

    def support_box(self):
        return ((-self.beta, self.beta), (-self.beta, self.beta))

    def component(self, j: int) -> RationalPoly2:
        return self.q1 if j == 1 else self.q2

    def __call__(self, x: Fraction, y: Fraction) -> Tuple[Fraction, Fraction]:
        x, y = Fraction(x), Fraction(y)
        if abs(x) <= self.beta and abs(y) <= self.beta:
            return self.q1(x, y), self.q2(x, y)
        return _F0, _F0

    def divergence(self) -> RationalPoly2:
        """Exact divergence of the interior polynomial part."""
        return self.q1.deriv_x() + self.q2.deriv_y()

    def l2_norm_sq(self) -> Fraction:
        box = self.support_box()
        return poly_inner_on_box(self.q1, self.q1, box) + \
            poly_inner_on_box(self.q2, self.q2, box)

    def h1_seminorm_sq(self) -> Fraction:
        box = self.support_box()
        acc = _F0
        for q in (self.q1, self.q2):
            for d in (q.deriv_x(), q.deriv_y()):
                acc += poly_inner_on_box(d, d, box)
        return acc


def trim(p: SolenoidalPolyPair, k: int) -> TrimmedField:
    return TrimmedField(p, k)


# ---------------------------------------------------------------------------
# the bump kernel: radial moments and derived integrals
# ---------------------------------------------------------------------------
#
# With u = r^2 and W(u) = exp(-1/(1-u)), every integral of the kernel against
# a separable even function reduces to the moments J_s = (1/2) int_0^1 W u^s.
# The panel Taylor models of W are built once per precision and shared by all
# moments.

_W_ORDER = 12


@lru_cache(maxsize=None)
def _w_panel_models(kbits: int):
    """Taylor models of W(u) = exp(-1/(1-u)) on a partition of [0,1].

    Returns a list of ('taylor', a, b, mid_coeffs, rem_ball) panels plus one
    trailing ('range', a, 1, hull) panel where W is below 2^-kbits.
    """
    target = Fraction(1, 1 << kbits)
    d = _W_ORDER
    panels = []
    stack = [(Fraction(0), Fraction(1))]
    while stack:
        a, b = stack.pop()
        if b == 1:
            # W <= exp(-1/(1-a)) on [a,1]
            va = 1 - a
            top = bv_exp(BoundedValue.from_fraction(-1 / va))
            if top.upper() <= target and b - a <= Fraction(1, 8):
                panels.append(("range", a, b,
                               BoundedValue.from_endpoints(_F0, top.upper())))
                continue
            mid = Fraction(a + b, 2)
            stack.append((mid, b))
            stack.append((a, mid))
            continue
        h = Fraction(b - a, 2)
        try:
            box = BoundedValue.from_endpoints(a, b)
            g = (-(1 - TSeries.variable(box, d)).reciprocal()).exp()
            rem = g.c[d]
            rad = rem.mag().to_fraction() * h ** d
            if rad > target:
                raise NonsmoothPanel
            mid = BoundedValue.from_fraction(Fraction(a + b, 2))
            pt = (-(1 - TSeries.variable(mid, d - 1)).reciprocal()).exp()
            panels.append(("taylor", a, b, pt.c, rem))
        except (NonsmoothPanel, ValueError, ZeroDivisionError, OverflowError):
            mid = Fraction(a + b, 2)
            stack.append((mid, b))
            stack.append((a, mid))
    panels.sort(key=lambda p: p[1])
    return tuple(panels)


@lru_cache(maxsize=None)
def _moments_upto(smax: int, kbits: int) -> Tuple[BoundedValue, ...]:
    """All J_0..J_smax in one sweep over the shared panel models.

    Per panel the power integrals int_a^b u^j du are accumulated as rounded
    balls (much cheaper than exact fractions for high powers) and reused for
    every moment order.
    """
    totals = [BoundedValue.exact(0) for _ in range(smax + 1)]
    for panel in _w_panel_models(kbits):
        if panel[0] == "range":
            _, a, b, hullv = panel
            contrib = hullv.scale(b - a)  # |u^s| <= 1 on the panel
            for s in range(smax + 1):
                totals[s] = totals[s] + contrib
            continue
        _, a, b, coeffs, rem = panel
        m = Fraction(a + b, 2)
        h = b - a
        jmax = smax + _W_ORDER
        ba = BoundedValue.from_fraction(Fraction(a))
        bb = BoundedValue.from_fraction(Fraction(b))
        apw = [BoundedValue.exact(1)]
        bpw = [BoundedValue.exact(1)]
        for _ in range(jmax + 1):
            apw.append(apw[-1] * ba)
            bpw.append(bpw[-1] * bb)
        pw = [(bpw[j + 1] - apw[j + 1]).scale(Fraction(1, j + 1))
              for j in range(jmax + 1)]
        mb = BoundedValue.from_fraction(-m)
        mpow = [BoundedValue.exact(1)]
        for _ in range(_W_ORDER):
            mpow.append(mpow[-1] * mb)
        hfac = Fraction(h, 2) ** _W_ORDER
        remw = rem.mag().to_fraction() * hfac
        for s in range(smax + 1):
            acc = BoundedValue.exact(0)
            # int (u-m)^t u^s du through the binomial theorem
            for t, ct in enumerate(coeffs):
                term = BoundedValue.exact(0)
                for i in range(t + 1):
                    term = term + (mpow[t - i] * pw[s + i]).scale(
                        math.comb(t, i))
                acc = acc + ct * term
            # Lagrange remainder: |W - model| <= |rem| (h/2)^d on the panel
            slack = remw * pw[s].mag().to_fraction()
            acc = acc.widened(BoundedValue.from_endpoints(-slack, slack))
            totals[s] = totals[s] + acc
    return tuple(t.scale(Fraction(1, 2)).rounded() for t in totals)


def gamma_radial_moment(s: int, kbits: int = 60) -> BoundedValue:
    """J_s = (1/2) int_0^1 exp(-1/(1-u)) u^s du, certified."""
    if s < 0:
        raise ValueError("moment order must be nonnegative")
    smax = ((s // 16) + 1) * 16  # batch to keep the cache effective
    return _moments_upto(smax, kbits)[s]


@lru_cache(maxsize=None)
def gamma0(kbits: int = 60) -> BoundedValue:
    """Normalizing constant of the bump kernel: the kernel mass without the
    constant is 8 J_0, so gamma0 = 1/(8 J_0)."""
    j0 = gamma_radial_moment(0, kbits)
    return BoundedValue.exact(1) / j0.scale(8)


def mollifier_mass(nu: int, kbits: int = 24) -> BoundedValue:
    """Mass of the scaled kernel by direct certified quadrature.

    Independent route from the panel-model moments: integrates
    -g'(r) * (2r)^2 over the radial variable, where g is the kernel profile
    at scale nu.  The result must enclose 1.
    """
    if nu < 0:
        raise ValueError("scale must be nonnegative")
    delta = Fraction(1, 1 << nu)
    g0 = gamma0(kbits + 20)
    four = Fraction(4)

    def integrand(t):
        prof = _neg_profile_derivative(t, nu, g0)
        return prof * (t * t).scale(four)

    return certified_integral(integrand, _F0, delta, Fraction(1, 1 << kbits))


def _neg_profile_derivative(t: TSeries, nu: int, g0: BoundedValue) -> TSeries:
    """-d/dr of the scaled radial profile gamma0 2^{2 nu} W((2^nu r)^2).

    Equals gamma0 2^{2 nu} * W * (2^{2 nu + 1} r) / (1 - (2^nu r)^2)^2.
    On panels touching the support edge the Taylor route divides by zero; the
    order-0 fallback returns a monotone range bound instead.
    """
    four_nu = Fraction(1 << (2 * nu))
    w = (t * t).scale(four_nu)
    u = 1 - w
    if t.order == 0:
        c = u.c[0]
        if c.lower() <= 0:
            hi = c.upper()
            if hi <= 0:
                return TSeries([BoundedValue.exact(0)])
            # sup of exp(-1/v)/v^2 over (0, hi]: increasing until v = 1/2
            v = min(hi, Fraction(1, 2))
            vb = BoundedValue.from_fraction(v)
            peak = bv_exp(BoundedValue.exact(-1) / vb) / (vb * vb)
            rmax = t.c[0].mag().to_fraction()
            top = (g0 * peak).scale(four_nu * four_nu * 2 * rmax)
            return TSeries([BoundedValue.from_endpoints(_F0, top.upper())])
    rec = u.reciprocal()
    wfac = (-rec).exp()
    out = wfac * rec * rec * t.scale(four_nu * 2)
    scal = g0.scale(four_nu)
    return out * TSeries.constant(scal, t.order)


@lru_cache(maxsize=None)
def mollifier_cos_coefficient(nu: int, n: int, m: int,
                              kbits: int = 40) -> BoundedValue:
    """Enclosure of int gamma_nu(z) cos(n pi z1) cos(m pi z2) dz.

    Expands the cosines around zero and contracts against the radial moments
    J_s; the error of truncating at order P is controlled by the cosh tail.
    Requires n pi 2^-nu <= 16 (larger frequencies are useless anyway: the
    coefficient is then astronomically small relative to the cost).
    """
    from .approxcore import bv_pi
    if nu < 0 or n < 0 or m < 0:
        raise ValueError("indices must be nonnegative")
    pi = bv_pi()
    scale = Fraction(1, 1 << nu)
    x = pi.scale(Fraction(n) * scale)
    y = pi.scale(Fraction(m) * scale)
    if x.upper() > 16 or y.upper() > 16:
        raise ValueError("frequency too high for this kernel scale")
    target = Fraction(1, 1 << kbits)
    # moment radii are amplified by at most cosh(x) cosh(y) <= e^{x+y}
    amp = float(x.upper() + y.upper())
    jbits = kbits + int(1.45 * amp) + 16
    jbits = ((jbits + 15) // 16) * 16  # quantize so the caches stay warm
    g0 = gamma0(jbits)

    def plan(xv: BoundedValue) -> int:
        # smallest P with x^(2P+2)/(2P+2)! below the truncation budget
        xm = xv.mag().to_fraction()
        term = _F1
        p = 0
        while True:
            term = term * xm * xm / ((2 * p + 1) * (2 * p + 2))
            if term <= target / 16 or p > 80:
                return p
            p += 1

    P, Q = plan(x), plan(y)
    jtab = _moments_upto((((P + Q) // 16) + 1) * 16, jbits)
    x2 = x * x
    y2 = y * y
    total = BoundedValue.exact(0)
    xpow = BoundedValue.exact(1)  # x^{2p}/(2p)!
    for p in range(P + 1):
        ypow = BoundedValue.exact(1)
        for q in range(Q + 1):
            j = jtab[p + q]
            wgt = Fraction(1, 2 * p + 1) + Fraction(1, 2 * q + 1)
            sign = 1 if (p + q) % 2 == 0 else -1
            total = total + (xpow * ypow * j * g0).scale(4 * sign * wgt)
            ypow = (ypow * y2).scale(Fraction(1, (2 * q + 1) * (2 * q + 2)))
        xpow = (xpow * x2).scale(Fraction(1, (2 * p + 1) * (2 * p + 2)))
    # truncation slack: remaining terms are bounded by 8 gamma0 J_0 times the
    # cosh tails in either variable
    j0u = (gamma_radial_moment(0, jbits) * g0).scale(8).mag().to_fraction()
    def cosh_tail(xv, p0):
        xm = xv.mag().to_fraction()
        lead = _F1
        for i in range(1, 2 * p0 + 3):
            lead = lead * xm / i
        den = 1 - xm * xm / ((2 * p0 + 3) * (2 * p0 + 4))
        if den <= 0:
            raise ValueError("tail bound did not converge")
        return lead / den
    def cosh_all(xv):
        xm = xv.mag().to_fraction()
        # crude upper bound on cosh(x)
        e = bv_exp(BoundedValue.from_fraction(xm))
        return e.mag().to_fraction()
    slack = j0u * (cosh_tail(x, P) * cosh_all(y) +
                   cosh_all(x) * cosh_tail(y, Q) +
                   cosh_tail(x, P) * cosh_tail(y, Q))
    return total.widened(
        BoundedValue.from_endpoints(-slack, slack)).rounded()


# ---------------------------------------------------------------------------
# mollified elements
# ---------------------------------------------------------------------------

class MollifiedElement:
    """The field gamma_n * Trim_k(base), stored symbolically."""

    __slots__ = ("base", "k", "n", "trimmed")

    def __init__(self, base: SolenoidalPolyPair, k: int, n: int):
        if k < 1:
            raise ValueError("trim index must be >= 1")
        if n <= k:
            raise ValueError("mollifier index must satisfy n >= k+1")
        self.base = base
        self.k = k
        self.n = n
        self.trimmed = TrimmedField(base, k)

    def support_halfwidth(self) -> Fraction:
        return 1 - Fraction(1, 1 << (self.k + 1))

    def is_zero(self) -> bool:
        return self.base.is_zero()

    def evaluate(self, x: Fraction, y: Fraction,
                 kbits: int = 14) -> Tuple[BoundedValue, BoundedValue]:
        """Pointwise enclosure of both components.

        The convolution integral collapses to one dimension: the kernel is a
        decreasing function g of r = max(|z1|,|z2|), its level sets are
        squares, so integrating by parts in r gives
        -int_0^delta g'(r) S(r) dr with S(r) the exact polynomial integral of
        the trimmed field over the square of half-width r centered at the
        evaluation point.
        """
        x, y = Fraction(x), Fraction(y)
        hw = self.support_halfwidth()
        if abs(x) > hw or abs(y) > hw:
            z = BoundedValue.exact(0)
            return z, z
        return (self._component_eval(self.trimmed.q1, x, y, kbits),
                self._component_eval(self.trimmed.q2, x, y, kbits))

    def _component_eval(self, q: RationalPoly2, x: Fraction, y: Fraction,
                        kbits: int) -> BoundedValue:
        if q.is_zero():
            return BoundedValue.exact(0)
        nu = self.n
        beta = self.trimmed.beta
        delta = Fraction(1, 1 << nu)
        g0 = gamma0(kbits + 20)

        # panel breakpoints: radii where a clipped endpoint changes regime
        cuts = {_F0, delta}
        for c in (x + beta, x - beta, beta - x, -beta - x,
                  y + beta, y - beta, beta - y, -beta - y):
            if 0 < c < delta:
                cuts.add(c)
        pts = sorted(cuts)

        total = BoundedValue.exact(0)
        budget = Fraction(1, 1 << kbits) / max(len(pts) - 1, 1)
        for a, b in zip(pts, pts[1:]):
            rm = Fraction(a + b, 2)
            regimes = []
            empty = False
            for center in (x, y):
                lo_clip = center - rm < -beta   # lower endpoint stuck at -beta
                hi_clip = center + rm > beta
                if center - rm > beta or center + rm < -beta:
                    empty = True
                regimes.append((lo_clip, hi_clip))
            if empty:
                continue
            total = total + self._panel_integral(q, x, y, a, b, regimes,
                                                 nu, g0, budget)
        return total.rounded()

    def _panel_integral(self, q, x, y, a, b, regimes, nu, g0, budget):
        centers = (x, y)

        def axis_powers(t: TSeries, axis: int, top_degree: int):
            lo_clip, hi_clip = regimes[axis]
            c = centers[axis]
            beta = self.trimmed.beta
            e0 = TSeries.constant(BoundedValue.from_fraction(-beta), t.order) \
                if lo_clip else (-t) + c
            e1 = TSeries.constant(BoundedValue.from_fraction(beta), t.order) \
                if hi_clip else t + c
            p0, p1 = e0, e1
            out = []
            for d in range(top_degree + 1):
                out.append((p1 - p0).scale(Fraction(1, d + 1)))
                p0 = p0 * e0
                p1 = p1 * e1
            return out

        def integrand(t):
            prof = _neg_profile_derivative(t, nu, g0)
            U = axis_powers(t, 0, q.N)
            V = axis_powers(t, 1, q.N)
            s = None
            for i in range(q.N + 1):
                w = None
                for j in range(q.N + 1):
                    cij = q.a[i][j]
                    if cij == 0:
                        continue
                    term = V[j].scale(cij)
                    w = term if w is None else w + term
                if w is None:
                    continue
                term = U[i] * w
                s = term if s is None else s + term
            if s is None:
                return TSeries.constant(BoundedValue.exact(0), t.order)
            return prof * s

        return certified_integral(integrand, a, b, budget, order=6)

    def to_json(self) -> dict:
        obj = self.base.to_json()
        obj["k"] = self.k
        obj["n"] = self.n
        return obj

    @staticmethod
    def from_json(obj: dict) -> "MollifiedElement":
        return MollifiedElement(SolenoidalPolyPair.from_json(obj),
                                obj["k"], obj["n"])

    def __repr__(self):
        return "MollifiedElement(N=%d, k=%d, n=%d)" % (
            self.base.N, self.k, self.n)


def mollify(p: SolenoidalPolyPair, k: int, n: int) -> MollifiedElement:
    return MollifiedElement(p, k, n)


def metric(a: MollifiedElement, b: MollifiedElement, k: int) -> BoundedValue:
    """Enclosure of the L2 distance over (-1,1)^2, radius at most 2^-k."""
    from .spectral import mollified_distance
    return mollified_distance(a, b, k)


def approximation_defect(p: SolenoidalPolyPair, k: int, n: int)\
        -> BoundedValue:
    """Upper bound on the L2 distance between p and its trimmed-and-mollified
    version, from the exact Lipschitz modulus of p."""
    if k < 1 or n <= k:
        raise ValueError("need k >= 1 and n >= k+1")
    if p.is_zero():
        return BoundedValue.exact(0)
    L = p.lipschitz_bound()
    # sup-norm gaps: trim moves arguments by at most 2^{-k+1} per coordinate
    # and truncates a 2^{-k} collar where |p| <= L 2^{-k}; mollification
    # shifts arguments by at most 2^{-n} per coordinate.
    c = Fraction(1, 1 << k)
    sup_gap = 4 * L * c + 4 * L * Fraction(1, 1 << n)
    # each component, L2 over the square of area 4, two components
    bound = 2 * sup_gap
    vec = bv_sqrt(BoundedValue.exact(2)) * BoundedValue.from_fraction(bound)
    return BoundedValue.from_endpoints(_F0, vec.upper())


def poly_name(p: SolenoidalPolyPair, max_k: int = 60):
    """Name of the field p whose level-K approximant is a mollified element
    within 2^-K in L2."""
    from .approxcore import Name

    def query(K: int):
        for k in range(1, max_k + 1):
            d = approximation_defect(p, k, k + 1)
            if d.upper() <= Fraction(1, 1 << K):
                return mollify(p, k, k + 1)
        raise RuntimeError("no trim level met the requested accuracy")

    return Name(query, label="poly field")

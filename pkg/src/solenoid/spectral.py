"""Fourier analysis on the unit square and the Sobolev-name calculus.

Everything here lives on the canonical domain (0,1)^2; objects produced by
`polyfield` on (-1,1)^2 enter through the affine pullback x -> (x+1)/2, which
halves lengths and turns the mollifier scale nu into nu+1.  The L2 norm on
the big square is exactly twice the canonical one.

Coefficient extraction for mollified fields rests on one geometric fact: the
kernel is a decreasing profile of max(|z1|,|z2|), so its level sets are
squares, and the indicator of a centered square acts on every product trig
mode as multiplication by w_n(r) = 2 sin(n pi r)/(n pi) per axis (w_0 = 2r).
Integrating the layer-cake decomposition therefore reduces every kernel
cosine coefficient to two one-dimensional transforms of the unit radial
profile, shared across all modes and all scales.

Truncation tails are certified, not estimated: the kernel is merely
Lipschitz across the diagonals, its coefficients decay like 1/(nm), and the
tail bound multiplies that envelope by an exactly computable Parseval
defect: the rational L2 (or H^1) mass of the trimmed polynomial minus the
certified partial sum of its retained modes.  The H^1 identity applies
termwise because the polynomial vanishes on its support box, leaving no
boundary terms.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .approxcore import (BoundedValue, ConstantsTable, Name, bv_pi,
                         certified_integral)
from .floatball import (FB_PI, BallGrid, FloatBall, fb_exp, fb_pow, fb_sincos,
                        fb_sqrt)
from .polyfield import (MollifiedElement, RationalPoly2, TrimmedField,
                        _neg_profile_derivative, gamma0, gamma_radial_moment,
                        poly_inner_on_box)
from .taylor import TSeries

__all__ = [
    "FourierField", "trig_poly_field", "coefficients", "mollified_field_pair",
    "mollified_distance", "HElement", "SobolevName", "differentiate",
    "multiply", "poly_mul", "BallPoly2", "mollify_poly",
]

_EPS = 2.0 ** -52
_TINY = 5e-308
_F0 = Fraction(0)
_F1 = Fraction(1)

TRIG_BASES = ("ss", "sc", "cs", "cc")

# Highest kbits the double-precision coefficient pipeline can certify.
MAX_COEFF_BITS = 40


# ---------------------------------------------------------------------------
# mode weights
# ---------------------------------------------------------------------------

def _axis_weights(char: str, cutoff: int) -> np.ndarray:
    """L2 weight of each 1D mode on (0,1): 1/2 generically, 1 for the
    constant cosine, 0 for the nonexistent sin(0 pi y)."""
    w = np.full(cutoff + 1, 0.5)
    w[0] = 1.0 if char == "c" else 0.0
    return w


def _weights(basis: str, cutoff: int) -> np.ndarray:
    wx = _axis_weights(basis[0], cutoff)
    wy = _axis_weights(basis[1], cutoff)
    return np.outer(wx, wy)


def _tail_add(a: FloatBall, b: FloatBall) -> FloatBall:
    """Tail-bound addition that keeps exact zeros exact, so band-limited
    fields stay band-limited under linear combinations."""
    if a.upper() == 0.0:
        return b
    if b.upper() == 0.0:
        return a
    return a + b


def _sum_ball(centers: np.ndarray, radii: np.ndarray) -> FloatBall:
    c = float(centers.sum())
    slack = (centers.size + 4) * _EPS * float(np.abs(centers).sum()
                                              + radii.sum()) + _TINY
    return FloatBall(c, float(radii.sum()) + slack)


def ball_matmul(x: BallGrid, y: BallGrid) -> BallGrid:
    """Matrix product with outward-rounded radius propagation."""
    c = x.c @ y.c
    r = np.abs(x.c) @ y.r + x.r @ (np.abs(y.c) + y.r)
    k = x.c.shape[-1]
    r = r + (np.abs(c) + r) * ((k + 4) * _EPS) + _TINY
    return BallGrid(c, r)


# ---------------------------------------------------------------------------
# FourierField
# ---------------------------------------------------------------------------

class FourierField:
    """One scalar component expanded in a product trig basis on (0,1)^2.

    ``grid`` stores expansion coefficients a_{n,m} (so that the function is
    sum a_{n,m} trig(n pi x) trig(m pi y)); ``tail_l2`` bounds the L2 mass of
    all modes beyond ``cutoff``.  ``basis`` is two characters, x-axis factor
    first, 's' or 'c'; the 'exp' basis (complex, symmetric index range) is
    produced by :meth:`to_exp` for interoperability and round-tripping only.
    """

    __slots__ = ("basis", "cutoff", "grid", "grid_im", "tail_l2", "tail_hs")

    def __init__(self, basis: str, cutoff: int, grid: BallGrid,
                 tail_l2: FloatBall = None, tail_hs: Dict = None,
                 grid_im: BallGrid = None):
        if basis not in TRIG_BASES and basis != "exp":
            raise ValueError("unknown basis %r" % basis)
        self.basis = basis
        self.cutoff = cutoff
        self.tail_l2 = tail_l2 if tail_l2 is not None else FloatBall(0.0)
        if self.tail_l2.lower() < 0:
            self.tail_l2 = FloatBall.from_endpoints(0.0, self.tail_l2.upper())
        self.tail_hs = dict(tail_hs or {})
        if basis == "exp":
            self.grid = grid
            self.grid_im = grid_im if grid_im is not None \
                else BallGrid.zeros(grid.shape)
            return
        mask = _weights(basis, cutoff) > 0
        self.grid = BallGrid(grid.c * mask, grid.r * mask)
        self.grid_im = None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(basis: str, cutoff: int) -> "FourierField":
        return FourierField(basis, cutoff,
                            BallGrid.zeros((cutoff + 1, cutoff + 1)))

    @staticmethod
    def single_mode(basis: str, n: int, m: int, coeff=1.0) -> "FourierField":
        cut = max(n, m)
        g = BallGrid.zeros((cut + 1, cut + 1))
        b = coeff if isinstance(coeff, FloatBall) else FloatBall.exact(coeff)
        g.set((n, m), b)
        return FourierField(basis, cut, g)

    def _require_trig(self):
        if self.basis == "exp":
            raise ValueError("operation needs a product trig basis")

    def band_limited(self) -> bool:
        return self.tail_l2.upper() == 0.0

    def _require_band_limited(self, what: str):
        if not self.band_limited():
            raise ValueError("%s needs a band-limited field "
                             "(uncontrolled tail)" % what)

    def weights(self) -> np.ndarray:
        self._require_trig()
        return _weights(self.basis, self.cutoff)

    # -- linear structure ---------------------------------------------------

    def _aligned(self, other: "FourierField"):
        if self.basis != other.basis:
            raise ValueError("basis mismatch: %s vs %s"
                             % (self.basis, other.basis))
        cut = max(self.cutoff, other.cutoff)
        return self._embedded(cut), other._embedded(cut), cut

    def _embedded(self, cutoff: int) -> "FourierField":
        if cutoff == self.cutoff:
            return self
        g = BallGrid.zeros((cutoff + 1, cutoff + 1))
        n = self.cutoff + 1
        g.c[:n, :n] = self.grid.c
        g.r[:n, :n] = self.grid.r
        return FourierField(self.basis, cutoff, g, self.tail_l2,
                            self.tail_hs)

    def __add__(self, other: "FourierField") -> "FourierField":
        self._require_trig()
        a, b, cut = self._aligned(other)
        tails = {s: _tail_add(a.tail_hs[s], b.tail_hs[s])
                 for s in a.tail_hs if s in b.tail_hs}
        return FourierField(self.basis, cut, a.grid + b.grid,
                            _tail_add(a.tail_l2, b.tail_l2), tails)

    def __sub__(self, other: "FourierField") -> "FourierField":
        return self + (-other)

    def __neg__(self) -> "FourierField":
        return FourierField(self.basis, self.cutoff, -self.grid,
                            self.tail_l2, self.tail_hs)

    def scale(self, factor) -> "FourierField":
        self._require_trig()
        b = factor if isinstance(factor, FloatBall) else FloatBall.exact(factor)
        mag = b.abs_ball()

        def tmul(t):
            return t if t.upper() == 0.0 else t * mag
        tails = {s: tmul(t) for s, t in self.tail_hs.items()}
        return FourierField(self.basis, self.cutoff, self.grid.scale_ball(b),
                            tmul(self.tail_l2), tails)

    # -- norms --------------------------------------------------------------

    def l2_sq_ball(self) -> FloatBall:
        self._require_trig()
        w = self.weights()
        sq = self.grid * self.grid
        s = _sum_ball(sq.c * w, sq.r * w)
        t2 = self.tail_l2.upper() ** 2
        return s + FloatBall(t2 / 2, t2 / 2 + 4 * _EPS * t2 + _TINY)

    def l2_norm_ball(self) -> FloatBall:
        return fb_sqrt(self.l2_sq_ball())

    def hs_norm(self, s) -> FloatBall:
        """Sobolev norm (sum (1+n^2+m^2)^s rho a^2)^(1/2); at s=0 this is the
        L2 norm.  Needs a band-limited field or a stored tail for this s."""
        self._require_trig()
        s = Fraction(s)
        if s == 0:
            return self.l2_norm_ball()
        if self.band_limited():
            tail = FloatBall(0.0)
        elif s in self.tail_hs:
            tail = self.tail_hs[s]
        else:
            raise ValueError("insufficient data: no H^%s tail bound" % s)
        w = self.weights()
        total = FloatBall(0.0)
        powers: Dict[int, FloatBall] = {}
        for n in range(self.cutoff + 1):
            for m in range(self.cutoff + 1):
                if w[n, m] == 0.0:
                    continue
                lam = 1 + n * n + m * m
                if lam not in powers:
                    powers[lam] = fb_pow(FloatBall(float(lam)), s)
                a = self.grid.at((n, m))
                total = total + powers[lam] * (a * a) * \
                    FloatBall(float(w[n, m]))
        t2 = tail.upper() ** 2
        total = total + FloatBall(t2 / 2, t2 / 2 + 4 * _EPS * t2 + _TINY)
        return fb_sqrt(total)

    def sup_upper(self) -> float:
        """Upper bound on the sup norm: sum of coefficient magnitudes."""
        self._require_band_limited("sup bound")
        n = self.grid.c.size
        return float(np.abs(self.grid.c).sum() + self.grid.r.sum()) * \
            (1 + (n + 4) * _EPS) + _TINY

    # -- analysis operations ------------------------------------------------

    def truncated(self, cap: int) -> "FourierField":
        """Drop modes beyond ``cap``, folding their mass into the tail."""
        self._require_trig()
        if cap >= self.cutoff:
            return self
        w = self.weights()
        sq = self.grid * self.grid
        keep = np.zeros_like(w, dtype=bool)
        keep[:cap + 1, :cap + 1] = True
        dropped = _sum_ball(np.where(keep, 0.0, sq.c * w),
                            np.where(keep, 0.0, sq.r * w))
        extra = fb_sqrt(FloatBall.from_endpoints(0.0, max(dropped.upper(),
                                                          0.0)))
        g = BallGrid(self.grid.c[:cap + 1, :cap + 1].copy(),
                     self.grid.r[:cap + 1, :cap + 1].copy())
        return FourierField(self.basis, cap, g,
                            self.tail_l2 + FloatBall.from_endpoints(
                                0.0, extra.upper()))

    def derivative(self, axis: int) -> "FourierField":
        """Termwise derivative; sin and cos swap along the derived axis."""
        self._require_trig()
        self._require_band_limited("termwise derivative")
        idx = np.arange(self.cutoff + 1, dtype=float)
        pi = FB_PI
        if axis == 1:
            fac_c = pi.c * idx[:, None] * np.ones_like(self.grid.c)
            fac_r = pi.r * idx[:, None] * np.ones_like(self.grid.c)
            sign = 1.0 if self.basis[0] == "s" else -1.0
            nb = ("c" if self.basis[0] == "s" else "s") + self.basis[1]
        elif axis == 2:
            fac_c = pi.c * idx[None, :] * np.ones_like(self.grid.c)
            fac_r = pi.r * idx[None, :] * np.ones_like(self.grid.c)
            sign = 1.0 if self.basis[1] == "s" else -1.0
            nb = self.basis[0] + ("c" if self.basis[1] == "s" else "s")
        else:
            raise ValueError("axis must be 1 or 2")
        fac_r = fac_r + np.abs(fac_c) * 2 * _EPS
        fac = BallGrid(sign * fac_c, fac_r)
        return FourierField(nb, self.cutoff, self.grid * fac)

    def multiply(self, other: "FourierField") -> "FourierField":
        """Pointwise product via the product-to-sum identities."""
        self._require_trig()
        other._require_trig()
        self._require_band_limited("product")
        other._require_band_limited("product")
        cx, x_terms = _axis_product_table(self.basis[0], other.basis[0],
                                          self.cutoff, other.cutoff)
        cy, y_terms = _axis_product_table(self.basis[1], other.basis[1],
                                          self.cutoff, other.cutoff)
        cut = self.cutoff + other.cutoff
        out = BallGrid.zeros((cut + 1, cut + 1))
        half = FloatBall.exact(Fraction(1, 2))
        act_a = np.argwhere((self.grid.c != 0.0) | (self.grid.r != 0.0))
        act_b = np.argwhere((other.grid.c != 0.0) | (other.grid.r != 0.0))
        for n1, m1 in act_a:
            a = self.grid.at((n1, m1))
            for n2, m2 in act_b:
                prod = a * other.grid.at((n2, m2))
                for ix, sx in x_terms[n1][n2]:
                    px = prod * half if sx > 0 else -(prod * half)
                    for iy, sy in y_terms[m1][m2]:
                        v = px * half if sy > 0 else -(px * half)
                        out.set((ix, iy), out.at((ix, iy)) + v)
        return FourierField(cx + cy, cut, out)

    def eval_ball(self, x: Fraction, y: Fraction) -> FloatBall:
        self._require_trig()
        self._require_band_limited("point evaluation")
        x, y = Fraction(x), Fraction(y)
        tx = _trig_values(self.basis[0], self.cutoff, x)
        ty = _trig_values(self.basis[1], self.cutoff, y)
        total = FloatBall(0.0)
        for n, m in np.argwhere((self.grid.c != 0.0) | (self.grid.r != 0.0)):
            total = total + self.grid.at((n, m)) * tx[n] * ty[m]
        return total

    def inner_l2(self, other: "FourierField") -> FloatBall:
        """L2 inner product; tails enter through Cauchy-Schwarz."""
        self._require_trig()
        a, b, cut = self._aligned(other)
        w = _weights(self.basis, cut)
        prod = a.grid * b.grid
        s = _sum_ball(prod.c * w, prod.r * w)
        ta, tb = a.tail_l2.upper(), b.tail_l2.upper()
        cross = ta * b.l2_norm_ball().upper() + tb * a.l2_norm_ball().upper() \
            + ta * tb
        return s.widened(cross * (1 + 8 * _EPS) + _TINY)

    # -- exp basis bridge ---------------------------------------------------

    def to_exp(self) -> "FourierField":
        """Re-express in theta_{n,m} = e^{i(nx+my)pi}; real input fields give
        conjugate-symmetric coefficients c_{-n,-m} = conj(c_{n,m})."""
        self._require_trig()
        c = self.cutoff
        re = BallGrid.zeros((2 * c + 1, 2 * c + 1))
        im = BallGrid.zeros((2 * c + 1, 2 * c + 1))

        def axis_factors(char, n):
            # trig(n pi t) as a combination of e^{+-i n pi t}; each factor is
            # (index, (re, im)) with exact dyadic parts
            if char == "s":
                return ((n, (0.0, -0.5)), (-n, (0.0, 0.5)))
            if n == 0:
                return ((0, (1.0, 0.0)),)
            return ((n, (0.5, 0.0)), (-n, (0.5, 0.0)))

        for n in range(c + 1):
            for m in range(c + 1):
                a = self.grid.at((n, m))
                if a.c == 0.0 and a.r == 0.0:
                    continue
                for en, (xr, xi) in axis_factors(self.basis[0], n):
                    for em, (yr, yi) in axis_factors(self.basis[1], m):
                        fr, fi = xr * yr - xi * yi, xr * yi + xi * yr
                        tgt = (en + c, em + c)
                        if fr:
                            re.set(tgt, re.at(tgt) + a * FloatBall(fr))
                        if fi:
                            im.set(tgt, im.at(tgt) + a * FloatBall(fi))
        return FourierField("exp", c, re, self.tail_l2, self.tail_hs,
                            grid_im=im)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        def grid_json(g):
            return [[str(Fraction(v)) for v in row] for row in g]
        im = self.grid_im.c if self.basis == "exp" \
            else np.zeros_like(self.grid.c)
        rad = self.grid.r if self.basis != "exp" \
            else self.grid.r + self.grid_im.r
        out = {
            "basis": self.basis,
            "cutoff": self.cutoff,
            "re": grid_json(self.grid.c),
            "im": grid_json(im),
            "rad": grid_json(rad),
            "tail_l2": str(Fraction(self.tail_l2.upper())),
        }
        if self.tail_hs:
            out["tail_hs"] = {str(s): str(Fraction(t.upper()))
                              for s, t in self.tail_hs.items()}
        return out

    @staticmethod
    def from_json(obj: dict) -> "FourierField":
        def grid_arr(rows):
            return np.array([[float(Fraction(v)) for v in row]
                             for row in rows])
        basis = obj["basis"]
        cutoff = int(obj["cutoff"])
        re = grid_arr(obj["re"])
        rad = grid_arr(obj["rad"])
        def tail_ball(text):
            hi = Fraction(text)
            # keep exact zeros exact so band-limitedness survives the trip
            return FloatBall(0.0) if hi == 0 \
                else FloatBall.from_endpoints(0.0, float(hi))
        tail = tail_ball(obj["tail_l2"])
        tails = {Fraction(s): tail_ball(t)
                 for s, t in obj.get("tail_hs", {}).items()}
        if basis == "exp":
            im = grid_arr(obj["im"])
            return FourierField("exp", cutoff, BallGrid(re, rad), tail, tails,
                                grid_im=BallGrid(im, np.zeros_like(im)))
        return FourierField(basis, cutoff, BallGrid(re, rad), tail, tails)

    def __repr__(self):
        return "FourierField(basis=%s, cutoff=%d, tail<=%.3g)" % (
            self.basis, self.cutoff, self.tail_l2.upper())


def _trig_values(char: str, cutoff: int, t: Fraction) -> List[FloatBall]:
    tb = FloatBall.exact(Fraction(t))
    out = []
    for n in range(cutoff + 1):
        s, c = fb_sincos(FB_PI * FloatBall(float(n)) * tb)
        out.append(s if char == "s" else c)
    return out


@lru_cache(maxsize=None)
def _axis_product_table(c1: str, c2: str, cut1: int, cut2: int):
    """Product-to-sum expansion per axis: trig(c1, i) trig(c2, j) =
    sum of +-(1/2) trig(out_char, index)."""
    out_char = "c" if c1 == c2 else "s"
    table = []
    for i in range(cut1 + 1):
        row = []
        for j in range(cut2 + 1):
            if c1 == "s" and c2 == "s":
                terms = [(abs(i - j), +1), (i + j, -1)]
            elif c1 == "c" and c2 == "c":
                terms = [(abs(i - j), +1), (i + j, +1)]
            elif c1 == "s" and c2 == "c":
                terms = [(i + j, +1)]
                if i > j:
                    terms.append((i - j, +1))
                elif j > i:
                    terms.append((j - i, -1))
            else:  # cos * sin
                terms = [(i + j, +1)]
                if j > i:
                    terms.append((j - i, +1))
                elif i > j:
                    terms.append((i - j, -1))
            if out_char == "c":
                row.append([t for t in terms])
            else:
                row.append([t for t in terms if t[0] != 0])
        table.append(row)
    return out_char, table


# ---------------------------------------------------------------------------
# radial profile transforms
# ---------------------------------------------------------------------------
#
# h1(rho) = -d/d rho [gamma0 e^{-1/(1-rho^2)}] is the (negative) derivative
# of the unit radial profile.  The two families
#     phi(x) = int_0^1 h1(rho) cos(x rho) d rho
#     psi(x) = int_0^1 h1(rho) rho sin(x rho) d rho
# generate every kernel cosine coefficient:
#     C(nu; n, m) = (2 / (n m pi^2)) 2^{2 nu} [phi(x_{|n-m|}) - phi(x_{n+m})]
#     C(nu; n, 0) = (4 / (n pi)) 2^{nu} psi(x_n),        x_N = N pi 2^{-nu}
#     C(nu; 0, 0) = 1 exactly (kernel mass).

_H1_ORDER = 12
_H1_TOL = 2.0 ** -46


def _fb_gamma0() -> FloatBall:
    return FloatBall.from_bounded(gamma0(60))


def _h1_series(t: TSeries, g0: FloatBall) -> TSeries:
    one = TSeries.constant(g0.one(), t.order)
    u = one - t * t
    rec = u.reciprocal()
    wf = (-rec).exp()
    return wf * rec * rec * t * TSeries.constant(g0 * FloatBall(2.0), t.order)


def _h1_range_bound(a: Fraction, g0: FloatBall) -> float:
    """sup of h1 on [a, 1]: monotone bound via sup of e^{-1/v}/v^2."""
    vhi = min(1 - Fraction(a) ** 2, Fraction(1, 2))
    if vhi <= 0:
        return 0.0
    vb = FloatBall.exact(vhi)
    peak = fb_exp(-(vb.one() / vb)) / (vb * vb)
    return (g0 * FloatBall(2.0) * peak).upper()


@lru_cache(maxsize=1)
def _h1_models() -> Tuple:
    """Shared panel Taylor models of h1 on [0, 1].

    Each entry is ("taylor", a, b, mid, coeffs, rem) with coeffs the midpoint
    series of length _H1_ORDER and |h1 - model| <= rem on the panel, or
    ("range", a, b, sup) near the flat right edge.
    """
    g0 = _fb_gamma0()
    panels = []
    stack = [(_F0, _F1, 0)]
    while stack:
        a, b, depth = stack.pop()
        sup = _h1_range_bound(a, g0)
        if sup <= _H1_TOL:
            panels.append(("range", a, b, sup))
            continue
        ok = False
        if depth >= 2:
            try:
                box = FloatBall.from_endpoints(float(a), float(b))
                box = FloatBall(box.c, box.r + float(b - a) * _EPS)
                g = _h1_series(TSeries.variable(box, _H1_ORDER), g0)
                h = float(b - a) / 2
                rem = g.c[_H1_ORDER].mag() * h ** _H1_ORDER
                if rem <= _H1_TOL or (depth >= 40 and rem <= 2.0 ** -30):
                    mid = Fraction(a + b, 2)
                    pt = _h1_series(TSeries.variable(
                        FloatBall.exact(mid), _H1_ORDER - 1), g0)
                    panels.append(("taylor", a, b, mid, tuple(pt.c), rem))
                    ok = True
            except (ZeroDivisionError, ValueError, OverflowError):
                ok = False
        if not ok:
            m = Fraction(a + b, 2)
            stack.append((a, m, depth + 1))
            stack.append((m, b, depth + 1))
    panels.sort(key=lambda p: p[1])
    return tuple(panels)


@lru_cache(maxsize=None)
def _ab_tables(q: Fraction, top: int) -> Tuple[Tuple[FloatBall, ...],
                                               Tuple[FloatBall, ...]]:
    """A_t = int_0^1 v^t cos(y v) dv and B_t = int_0^1 v^t sin(y v) dv for
    t = 0..top, at y = q pi.

    Three regimes keep absolute errors at the scale of the values: a power
    series for y < 1, the parts recurrence in 140-bit interval arithmetic
    for moderate y (where the recurrence amplifies roundoff by (t/y)^t),
    and the float-ball recurrence once y dominates t.
    """
    yb = FB_PI * FloatBall.exact(q)
    yf = yb.c
    if yf < 1.0:
        av, bv = [], []
        for t in range(top + 1):
            acc_a = FloatBall.exact(Fraction(1, t + 1))
            acc_b = yb * FloatBall.exact(Fraction(1, t + 2))
            pow2 = yb * yb
            ya, yb2 = pow2, pow2 * yb
            fa, fb = 2, 6
            j = 1
            term_a = ya * FloatBall.exact(Fraction(1, fa * (t + 2 * j + 1)))
            term_b = yb2 * FloatBall.exact(Fraction(1, fb * (t + 2 * j + 2)))
            while max(term_a.mag(), term_b.mag()) > 1e-20 and j < 40:
                sgn = FloatBall(-1.0 if j % 2 else 1.0)
                acc_a = acc_a + sgn * term_a
                acc_b = acc_b + sgn * term_b
                j += 1
                ya = ya * pow2
                yb2 = yb2 * pow2
                fa *= (2 * j - 1) * (2 * j)
                fb *= (2 * j) * (2 * j + 1)
                term_a = ya * FloatBall.exact(Fraction(1, fa * (t + 2 * j + 1)))
                term_b = yb2 * FloatBall.exact(Fraction(1, fb * (t + 2 * j + 2)))
            # alternating series with decreasing terms: first omitted bounds
            av.append(acc_a.widened(term_a.mag() * 1.01 + _TINY))
            bv.append(acc_b.widened(term_b.mag() * 1.01 + _TINY))
        return tuple(av), tuple(bv)
    if yf <= 4.0 * (top + 1):
        prec = 140
        y = bv_pi(prec).scale(Fraction(q))
        from .approxcore import bv_cos as _bc, bv_sin as _bs
        s, c = _bs(y, prec), _bc(y, prec)
        one = BoundedValue.exact(1)
        cs = [s / y]
        sn = [(one - c) / y]
        for t in range(1, top + 1):
            cs.append((s - sn[t - 1].scale(t)) / y)
            sn.append((cs[t - 1].scale(t) - c) / y)
        return (tuple(FloatBall.from_bounded(v) for v in cs),
                tuple(FloatBall.from_bounded(v) for v in sn))
    s, c = fb_sincos(yb)
    one = FloatBall(1.0)
    cs = [s / yb]
    sn = [(one - c) / yb]
    for t in range(1, top + 1):
        tf = FloatBall(float(t))
        cs.append((s - tf * sn[t - 1]) / yb)
        sn.append((tf * cs[t - 1] - c) / yb)
    return tuple(cs), tuple(sn)


def _osc_moments(x: FloatBall, q_x: Fraction, a: Fraction, b: Fraction,
                 mid: Fraction, top: int) \
        -> Tuple[List[FloatBall], List[FloatBall]]:
    """I_t^c = int_a^b (rho-mid)^t cos(x rho), I_t^s likewise with sin, for
    t = 0..top, where x = q_x pi.

    Everything is computed in the scaled variable v = (rho-mid)/H with
    H the half-width, so all absolute errors live at the scale of the
    (tiny) true values even when the caller multiplies by huge Taylor
    coefficients.
    """
    hh = Fraction(b - a, 2)
    av, bv = _ab_tables(q_x * hh, top)
    sth, cth = fb_sincos(x * FloatBall.exact(mid))
    hb = FloatBall.exact(hh)
    ic, isn = [], []
    hp = hb  # H^(t+1)
    for t in range(top + 1):
        if t % 2 == 0:
            two_a = av[t] * FloatBall(2.0)
            ic.append(hp * cth * two_a)
            isn.append(hp * sth * two_a)
        else:
            two_b = bv[t] * FloatBall(2.0)
            ic.append(-(hp * sth * two_b))
            isn.append(hp * cth * two_b)
        hp = hp * hb
    return ic, isn


def _transform_small_x(x_bv: BoundedValue, with_rho: bool) -> FloatBall:
    """phi or psi by certified quadrature in exact arithmetic.

    Slow independent route kept as a cross-check oracle for the panel
    transforms; converges only for moderate x."""
    g0 = gamma0(60)

    def integrand(t):
        prof = _neg_profile_derivative(t, 0, g0)
        s, c = (t * TSeries.constant(x_bv, t.order)).sincos()
        if with_rho:
            return prof * t * s
        return prof * c

    out = certified_integral(integrand, _F0, _F1, Fraction(1, 1 << 44))
    return FloatBall.from_bounded(out)


@lru_cache(maxsize=None)
def _window_transforms(n_index: int, nu: int) -> Tuple[FloatBall, FloatBall]:
    """(phi, psi) at x = n_index * pi * 2^{-nu}."""
    if n_index == 0:
        g0 = _fb_gamma0()
        return g0 * fb_exp(FloatBall(-1.0)), FloatBall(0.0)
    xb = FB_PI * FloatBall.exact(Fraction(n_index, 1 << nu))
    phi = FloatBall(0.0)
    psi = FloatBall(0.0)
    for panel in _h1_models():
        if panel[0] == "range":
            _, a, b, sup = panel
            w = float(b - a)
            phi = phi + FloatBall(0.0, sup * w * (1 + 8 * _EPS) + _TINY)
            psi = psi + FloatBall(0.0, sup * w * (1 + 8 * _EPS) + _TINY)
            continue
        _, a, b, mid, coeffs, rem = panel
        ic, isn = _osc_moments(xb, Fraction(n_index, 1 << nu), a, b, mid,
                               len(coeffs))
        pc = FloatBall(0.0)
        ps = FloatBall(0.0)
        midb = FloatBall.exact(mid)
        for t, ct in enumerate(coeffs):
            pc = pc + ct * ic[t]
            # rho sin = (rho-mid) sin + mid sin
            ps = ps + ct * (isn[t + 1] + midb * isn[t])
        slack = rem * float(b - a) * (1 + 8 * _EPS) + _TINY
        phi = phi + pc.widened(slack)
        psi = psi + ps.widened(slack)
    return phi, psi


@lru_cache(maxsize=None)
def mollifier_mode_grid(nu: int, cutoff: int) -> BallGrid:
    """C(nu; n, m) = int gamma_nu(z) cos(n pi z1) cos(m pi z2) dz for all
    n, m <= cutoff, from the two shared 1D transforms."""
    if nu < 0:
        raise ValueError("scale must be nonnegative")
    c = cutoff
    pc = np.empty(2 * c + 1)
    pr = np.empty(2 * c + 1)
    sc = np.zeros(c + 1)
    sr = np.zeros(c + 1)
    for nn in range(2 * c + 1):
        b = _window_transforms(nn, nu)[0]
        pc[nn], pr[nn] = b.c, b.r
    for nn in range(1, c + 1):
        b = _window_transforms(nn, nu)[1]
        sc[nn], sr[nn] = b.c, b.r
    two_over_pi2 = FloatBall(2.0) / (FB_PI * FB_PI)
    four_over_pi = FloatBall(4.0) / FB_PI
    idx = np.arange(1, c + 1)
    ng, mg = np.meshgrid(idx, idx, indexing="ij")
    dd, ss = np.abs(ng - mg), ng + mg
    num_c = pc[dd] - pc[ss]
    num_r = pr[dd] + pr[ss] + np.abs(num_c) * 2 * _EPS
    fac_c = two_over_pi2.c * float(1 << (2 * nu)) / (ng * mg)
    fac_r = np.abs(fac_c) * (two_over_pi2.r / max(two_over_pi2.c, _TINY)
                             + 4 * _EPS)
    grid = BallGrid.zeros((c + 1, c + 1))
    cc = fac_c * num_c
    grid.c[1:, 1:] = cc
    grid.r[1:, 1:] = (np.abs(fac_c) * num_r + fac_r * (np.abs(num_c) + num_r)
                      + np.abs(cc) * 2 * _EPS + _TINY)
    ec = four_over_pi.c * float(1 << nu) / idx * sc[1:]
    er = np.abs(four_over_pi.c * float(1 << nu) / idx) * sr[1:] + \
        np.abs(ec) * (four_over_pi.r / four_over_pi.c + 4 * _EPS) + _TINY
    grid.c[1:, 0] = ec
    grid.r[1:, 0] = er
    grid.c[0, 1:] = ec
    grid.r[0, 1:] = er
    grid.set((0, 0), FloatBall(1.0))
    return grid


# ---------------------------------------------------------------------------
# trig moments of polynomials
# ---------------------------------------------------------------------------

def axis_trig_moments(char: str, imax: int, cutoff: int,
                      a: Fraction, b: Fraction) -> BallGrid:
    """M[i, n] = int_a^b y^i trig(n pi y) dy, by parts recurrences."""
    a, b = Fraction(a), Fraction(b)
    out = BallGrid.zeros((imax + 1, cutoff + 1))
    apow = [a ** i for i in range(imax + 1)]
    bpow = [b ** i for i in range(imax + 1)]
    if char == "c":
        for i in range(imax + 1):
            out.set((i, 0), FloatBall.exact(
                Fraction(bpow[i] * b - apow[i] * a, i + 1)))
    for n in range(1, cutoff + 1):
        x = FB_PI * FloatBall(float(n))
        sa, ca = fb_sincos(x * FloatBall.exact(a))
        sb, cb = fb_sincos(x * FloatBall.exact(b))
        ic = (sb - sa) / x
        isn = (ca - cb) / x
        out.set((0, n), isn if char == "s" else ic)
        for i in range(1, imax + 1):
            av = FloatBall.exact(apow[i])
            bv = FloatBall.exact(bpow[i])
            tf = FloatBall(float(i))
            ic, isn = (bv * sb - av * sa) / x - (tf / x) * isn, \
                (av * ca - bv * cb) / x + (tf / x) * ic
            out.set((i, n), isn if char == "s" else ic)
    return out


def _poly_ball_grid(q: RationalPoly2) -> BallGrid:
    g = BallGrid.zeros((q.N + 1, q.N + 1))
    for i, row in enumerate(q.a):
        for j, v in enumerate(row):
            if v:
                g.set((i, j), FloatBall.exact(v))
    return g


def trig_poly_field(q: RationalPoly2, box, basis: str,
                    cutoff: int, h1_sq: Optional[Fraction] = None) \
        -> FourierField:
    """Expand a polynomial supported on ``box`` (inside (0,1)^2) in the given
    basis.  The H^1 tail bound is valid when ``q`` vanishes on the box
    boundary; pass ``h1_sq`` (exact integral of |grad q|^2 over the box) to
    activate it, else the field carries no tail and represents the projection
    onto modes <= cutoff.
    """
    (x0, x1), (y0, y1) = box
    qg = _poly_ball_grid(q)
    mx = axis_trig_moments(basis[0], qg.shape[0] - 1, cutoff, x0, x1)
    my = axis_trig_moments(basis[1], qg.shape[1] - 1, cutoff, y0, y1)
    # raw[n, m] = sum_ij q_ij mx[i, n] my[j, m]
    raw = ball_matmul(ball_matmul(BallGrid(mx.c.T, mx.r.T), qg), my)
    w = _weights(basis, cutoff)
    inv = np.where(w > 0, 1.0 / np.maximum(w, 1e-300), 0.0)
    grid = BallGrid(raw.c * inv, raw.r * inv)
    tail = FloatBall(0.0)
    if h1_sq is not None:
        field = FourierField(basis, cutoff, grid, tail)
        l2_def = _defect(poly_inner_on_box(q, q, box),
                         _partial_lower(field, weighted=False))
        h1_def = _defect(h1_sq, _partial_lower(field, weighted=True))
        cp = float(cutoff + 1)
        t = math.sqrt(min(l2_def, h1_def / ((math.pi * (1 - 1e-12)) ** 2
                                            * cp * cp))) * (1 + 1e-10) + _TINY
        tail = FloatBall.from_endpoints(0.0, t)
    return FourierField(basis, cutoff, grid, tail)


# ---------------------------------------------------------------------------
# mollified elements -> coefficient fields
# ---------------------------------------------------------------------------

def _pullback_component(elem: MollifiedElement, j: int) -> RationalPoly2:
    """Trimmed component as a polynomial of the canonical variable."""
    return elem.trimmed.component(j).compose_affine(
        Fraction(2), Fraction(-1), Fraction(2), Fraction(-1))


def _canonical_box(elem: MollifiedElement):
    lo = Fraction(1, 1 << (elem.k + 1))
    return ((lo, 1 - lo), (lo, 1 - lo))


def _component_h1_sq(q: RationalPoly2, box) -> Fraction:
    dx, dy = q.deriv_x(), q.deriv_y()
    return poly_inner_on_box(dx, dx, box) + poly_inner_on_box(dy, dy, box)


def _partial_lower(field: FourierField, weighted: bool) -> float:
    """Certified lower bound on the retained Parseval mass of a field.

    With ``weighted`` set, the sum carries the factor (n^2 + m^2) pi^2, so it
    lower-bounds the retained part of the H^1 seminorm identity.
    """
    g = field.grid
    blo = np.maximum(np.abs(g.c) - g.r, 0.0)
    t = blo * blo * _weights(field.basis, field.cutoff)
    if weighted:
        n2 = np.arange(field.cutoff + 1, dtype=np.float64) ** 2
        t = t * np.add.outer(n2, n2) * (math.pi * (1 - 1e-15)) ** 2
    return float(t.sum()) * (1 - 1e-9)


def _defect(exact_sq: Fraction, partial_lower: float) -> float:
    d = Fraction(exact_sq) - Fraction(partial_lower)
    if d <= 0:
        return _TINY
    return float(d) * (1 + 1e-12) + _TINY


def _env_consts(nu: int) -> Tuple[float, float]:
    """Upper bounds e1, e0 with |C(nu;n,m)| <= e1/(nm) for n, m >= 1 and
    |C(nu;n,0)| <= e0/n, from the layer-cake envelope 4 g_nu(0)/pi^2."""
    g0 = _fb_gamma0()
    d0 = (g0 * fb_exp(FloatBall(-1.0)) *
          FloatBall(float(1 << (2 * nu)))).upper()
    e1 = 4.0 * d0 / (math.pi ** 2) * (1 + 1e-12)
    e0 = 4.0 * d0 * 2.0 ** -nu / math.pi * (1 + 1e-12)
    return e1, e0


def _mollified_tail(nu: int, cutoff: int, l2_def: float,
                    h1_def: float) -> FloatBall:
    """Certified L2 mass of the discarded mollified modes.

    Two routes, both products of a sup of the coefficient envelope over the
    discarded region with an exactly computable defect of the trimmed
    polynomial (its rational L2 or H^1 mass minus the retained partial sum);
    the smaller wins.  0 <= C <= 1 always, so the defect alone is also valid.
    """
    e1, e0 = _env_consts(nu)
    cp = float(cutoff + 1)
    env = min(1.0, max(e1, e0) / cp)
    pi2 = (math.pi * (1 - 1e-12)) ** 2
    t_sq = min(env * env * l2_def,
               max(e1 * e1, e0 * e0) / (cp ** 4 * pi2) * h1_def)
    val = math.sqrt(t_sq) * (1 + 1e-10) + _TINY
    return FloatBall.from_endpoints(0.0, val)


def _mollified_hs_tail(nu: int, cutoff: int, h1_def: float,
                       s: Fraction) -> FloatBall:
    s = Fraction(s)
    if s >= 2:
        raise ValueError("H^s tails certified only for s < 2")
    e1, e0 = _env_consts(nu)
    cp = float(cutoff + 1)
    sf = float(s)
    pi2 = (math.pi * (1 - 1e-12)) ** 2
    # sup over the discarded region of (1+n^2+m^2)^s C^2 / ((n^2+m^2) pi^2)
    lam_edge = cp * cp + 1.0
    b_mid = (1.0 + lam_edge) ** sf * e1 ** 2 / (cp ** 2 * lam_edge * pi2)
    b_edge = (1.0 + cp * cp) ** sf * e0 ** 2 / (cp ** 4 * pi2)
    val = math.sqrt(max(b_mid, b_edge) * h1_def) * (1 + 1e-10) + _TINY
    return FloatBall.from_endpoints(0.0, val)


@lru_cache(maxsize=64)
def _component_expansion(elem: MollifiedElement, j: int, basis: str,
                         cutoff: int):
    """Base expansion of one pulled-back trimmed component plus its L2 and
    H^1 Parseval defects (cached per element object)."""
    box = _canonical_box(elem)
    q = _pullback_component(elem, j)
    base = trig_poly_field(q, box, basis, cutoff)
    l2_def = _defect(poly_inner_on_box(q, q, box),
                     _partial_lower(base, weighted=False))
    h1_def = _defect(_component_h1_sq(q, box),
                     _partial_lower(base, weighted=True))
    return base, l2_def, h1_def


def mollified_field_pair(elem: MollifiedElement, cutoff: int,
                         hs_tails=()) -> Tuple[FourierField, FourierField]:
    """Canonical-domain expansion of both components of a mollified element.

    Component 1 lands in the sin.cos basis, component 2 in cos.sin; the
    L2 norm over the original square is twice the canonical norm of the
    returned pair.
    """
    nu = elem.n + 1
    cgrid = mollifier_mode_grid(nu, cutoff)
    out = []
    for j, basis in ((1, "sc"), (2, "cs")):
        base, l2_def, h1_def = _component_expansion(elem, j, basis, cutoff)
        grid = base.grid * cgrid
        tail = _mollified_tail(nu, cutoff, l2_def, h1_def)
        tails = {Fraction(s): _mollified_hs_tail(nu, cutoff, h1_def,
                                                 Fraction(s))
                 for s in hs_tails}
        out.append(FourierField(basis, cutoff, grid, tail, tails))
    return out[0], out[1]


def _pair_tail_upper(elem: MollifiedElement, cutoff: int) -> Tuple[float, float]:
    nu = elem.n + 1
    out = []
    for j, basis in ((1, "sc"), (2, "cs")):
        _, l2_def, h1_def = _component_expansion(elem, j, basis, cutoff)
        out.append(_mollified_tail(nu, cutoff, l2_def, h1_def).upper())
    return out[0], out[1]


def mollified_distance(a: MollifiedElement, b: MollifiedElement,
                       kbits: int) -> BoundedValue:
    """L2 distance on the original square with radius <= 2^-kbits."""
    if kbits > MAX_COEFF_BITS - 4:
        raise ValueError("metric precision beyond the supported range "
                         "(kbits <= %d)" % (MAX_COEFF_BITS - 4))
    target = 2.0 ** -(kbits + 1)
    cutoff = None
    for c in (8, 16, 32, 64, 128, 256, 512, 1024, 2048):
        t1a, t2a = _pair_tail_upper(a, c)
        t1b, t2b = _pair_tail_upper(b, c)
        tvec = math.hypot(t1a + t1b, t2a + t2b)
        if 2.0 * tvec <= target / 2:
            cutoff = c
            break
    if cutoff is None:
        raise ValueError("tail bound will not close at this precision")
    fa1, fa2 = mollified_field_pair(a, cutoff)
    fb1, fb2 = mollified_field_pair(b, cutoff)
    total = (fa1 - fb1).l2_sq_ball() + (fa2 - fb2).l2_sq_ball()
    if total.lower() < 0:
        total = FloatBall.from_endpoints(0.0, max(total.upper(), 0.0))
    dist = fb_sqrt(total) * FloatBall(2.0)
    out = dist.to_bounded()
    if out.radius.to_fraction() > Fraction(1, 1 << kbits):
        raise ValueError("distance enclosure too wide: %r" % out)
    return out


def coefficients(f, cutoff: int, k: int = 30):
    """Certified Fourier data of a supported field object.

    Accepts a FourierField (re-truncation), a TrimmedField, or a
    MollifiedElement (for the vector objects a pair of fields is returned).
    Raises when the requested precision is beyond the pipeline or the object
    class is unsupported; there is no generic point-sampling quadrature
    because no evaluable-only inputs arise in the solver.
    """
    if k > MAX_COEFF_BITS:
        raise ValueError("coefficient precision limited to %d bits"
                         % MAX_COEFF_BITS)
    if isinstance(f, FourierField):
        return f.truncated(cutoff)
    if isinstance(f, MollifiedElement):
        return mollified_field_pair(f, cutoff)
    if isinstance(f, TrimmedField):
        out = []
        for j, basis in ((1, "sc"), (2, "cs")):
            q = f.component(j).compose_affine(Fraction(2), Fraction(-1),
                                              Fraction(2), Fraction(-1))
            beta = f.beta
            lo = Fraction(1 - beta, 2)
            box = ((lo, 1 - lo), (lo, 1 - lo))
            out.append(trig_poly_field(q, box, basis, cutoff,
                                       h1_sq=_component_h1_sq(q, box)))
        return out[0], out[1]
    raise TypeError("unsupported field object %r" % type(f).__name__)


# ---------------------------------------------------------------------------
# the dense set H = {gamma_n * q} and name-level calculus
# ---------------------------------------------------------------------------

def poly_mul(p: RationalPoly2, q: RationalPoly2) -> RationalPoly2:
    """Exact product of rational polynomials."""
    if p.is_zero() or q.is_zero():
        return RationalPoly2.zero()
    dp, dq = p.N, q.N
    out = [[_F0] * (dp + dq + 1) for _ in range(dp + dq + 1)]
    for i, row in enumerate(p.a):
        for j, a in enumerate(row):
            if not a:
                continue
            for u, qrow in enumerate(q.a):
                for v, b in enumerate(qrow):
                    if b:
                        out[i + u][j + v] += a * b
    return RationalPoly2(out)


class BallPoly2:
    """Polynomial with FloatBall coefficients, used for gamma_n * q, which
    is again a polynomial whose coefficients are kernel moments."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Dict[Tuple[int, int], FloatBall]):
        self.coeffs = {k: v for k, v in coeffs.items()
                       if v.c != 0.0 or v.r != 0.0}

    @staticmethod
    def from_rational(q: RationalPoly2) -> "BallPoly2":
        out = {}
        for i, row in enumerate(q.a):
            for j, v in enumerate(row):
                if v:
                    out[(i, j)] = FloatBall.exact(v)
        return BallPoly2(out)

    def __sub__(self, other: "BallPoly2") -> "BallPoly2":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = (out[k] - v) if k in out else -v
        return BallPoly2(out)

    def eval_ball(self, x: Fraction, y: Fraction) -> FloatBall:
        bx, by = FloatBall.exact(Fraction(x)), FloatBall.exact(Fraction(y))
        total = FloatBall(0.0)
        for (i, j), v in self.coeffs.items():
            total = total + v * fb_pow(bx, Fraction(i)) * \
                fb_pow(by, Fraction(j))
        return total

    def deriv(self, axis: int) -> "BallPoly2":
        out = {}
        for (i, j), v in self.coeffs.items():
            if axis == 1 and i > 0:
                out[(i - 1, j)] = v * FloatBall(float(i))
            elif axis == 2 and j > 0:
                out[(i, j - 1)] = v * FloatBall(float(j))
        return BallPoly2(out)

    def l2_sq_canonical(self) -> FloatBall:
        """int over (0,1)^2 of the square."""
        total = FloatBall(0.0)
        items = list(self.coeffs.items())
        for (i, j), v in items:
            for (u, w), s in items:
                total = total + v * s * FloatBall.exact(
                    Fraction(1, (i + u + 1) * (j + w + 1)))
        return total

    def sup_upper(self) -> float:
        return sum(v.abs_ball().upper() for v in self.coeffs.values())


@lru_cache(maxsize=None)
def _kernel_moment(p: int, q: int, nu: int) -> FloatBall:
    """int gamma_nu(z) z1^{2p} z2^{2q} dz (odd moments vanish)."""
    s = p + q
    j = FloatBall.from_bounded(gamma_radial_moment(s, 60))
    g0 = _fb_gamma0()
    fac = Fraction(4 * (2 * s + 2), (2 * p + 1) * (2 * q + 1)) / \
        Fraction(1 << (2 * nu * s))
    return g0 * j * FloatBall.exact(fac)


def mollify_poly(q: RationalPoly2, nu: int) -> BallPoly2:
    """gamma_nu * q, expanded exactly through kernel moments."""
    out: Dict[Tuple[int, int], FloatBall] = {}
    for a, row in enumerate(q.a):
        for b, v in enumerate(row):
            if not v:
                continue
            vb = FloatBall.exact(v)
            for i in range(0, a + 1, 2):
                for j in range(0, b + 1, 2):
                    mom = _kernel_moment(i // 2, j // 2, nu)
                    term = vb * mom * FloatBall.exact(
                        Fraction(math.comb(a, i) * math.comb(b, j)))
                    key = (a - i, b - j)
                    out[key] = out.get(key, FloatBall(0.0)) + term
    return BallPoly2(out)


class HElement:
    """Element of the dense set: gamma_nu * q (or the plain polynomial q when
    ``nu`` is None), on the canonical domain."""

    __slots__ = ("q", "nu", "_ball")

    def __init__(self, q: RationalPoly2, nu: Optional[int] = None):
        if nu is not None and nu < 0:
            raise ValueError("mollifier index must be nonnegative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "_ball", None)

    def __setattr__(self, *a):
        raise AttributeError("HElement is immutable")

    def ball(self) -> BallPoly2:
        if self._ball is None:
            b = BallPoly2.from_rational(self.q) if self.nu is None \
                else mollify_poly(self.q, self.nu)
            object.__setattr__(self, "_ball", b)
        return self._ball

    def deriv(self, axis: int) -> "HElement":
        dq = self.q.deriv_x() if axis == 1 else self.q.deriv_y()
        return HElement(dq, self.nu)

    def eval_ball(self, x, y) -> FloatBall:
        return self.ball().eval_ball(x, y)

    def l2_distance(self, other: "HElement") -> FloatBall:
        diff = self.ball() - other.ball()
        sq = diff.l2_sq_canonical()
        lo = max(sq.lower(), 0.0)
        return fb_sqrt(FloatBall.from_endpoints(lo, max(sq.upper(), lo)))

    def sup_upper(self) -> float:
        return self.ball().sup_upper()

    def multiply(self, other: "HElement") -> "HElement":
        if self.nu is not None or other.nu is not None:
            raise NotImplementedError(
                "products are emitted for polynomial approximants")
        return HElement(poly_mul(self.q, other.q))

    def __eq__(self, other):
        return isinstance(other, HElement) and self.q == other.q and \
            self.nu == other.nu

    def __hash__(self):
        return hash((self.q, self.nu))

    def __repr__(self):
        return "HElement(nu=%r, %r)" % (self.nu, self.q)


class SobolevName:
    """A Name whose approximants converge in H^s: refine(k) is within
    2^-k of the limit in the Sobolev norm.  ``hs_bound`` is an upper bound
    on the limit's H^s norm (computable from refine(0) when approximants
    expose hs_norm; supplied explicitly otherwise)."""

    __slots__ = ("name", "s", "_hs_bound")

    def __init__(self, name: Name, s, hs_bound: Optional[float] = None):
        self.name = name
        self.s = Fraction(s)
        self._hs_bound = hs_bound

    def refine(self, k: int):
        return self.name.refine(k)

    @property
    def hs_bound(self) -> float:
        if self._hs_bound is not None:
            return self._hs_bound
        p0 = self.refine(0)
        if isinstance(p0, FourierField):
            return p0.hs_norm(self.s).upper() + 1.0
        raise ValueError("hs_bound not supplied and not computable "
                         "from the first approximant")


def _deriv_any(p, axis: int):
    if isinstance(p, FourierField):
        return p.derivative(axis)
    if isinstance(p, HElement):
        return p.deriv(axis)
    raise TypeError("cannot differentiate %r" % type(p).__name__)


def _sup_any(p) -> float:
    return p.sup_upper()


def _prod_any(p, q):
    return p.multiply(q)


def differentiate(w: SobolevName, axis: int) -> Name:
    """Name of the partial derivative; valid for s >= 1 since then
    ||d(p_k) - d(limit)||_2 <= pi 2^-k, so shifting the index by 2 restores
    the 2^-k modulus."""
    if w.s < 1:
        raise ValueError("differentiation needs s >= 1")
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    return Name(lambda k: _deriv_any(w.refine(k + 2), axis),
                label="d%d" % axis)


def multiply(v: SobolevName, w: Name,
             constants: ConstantsTable = None) -> Name:
    """Name of the product v*w for s > 1, following the two-step accuracy
    selection: first resolve w until the sup-embedding bound of v absorbs
    the error, then resolve v against the sup bound of that approximant."""
    if v.s <= 1:
        raise ValueError("multiplication needs s > 1")
    table = constants or ConstantsTable.default()
    cs = float(table.C_s(v.s).upper())
    hv = max(v.hs_bound, 0.0)

    def query(n: int):
        lead = cs * hv
        k = n + 1 + max(0, math.ceil(math.log2(lead))) if lead > 0 else n + 1
        q = w.name.refine(k) if isinstance(w, SobolevName) else w.refine(k)
        supq = _sup_any(q)
        m = n + 1 + max(0, math.ceil(math.log2(supq))) if supq > 0 else n + 1
        p = v.refine(m)
        return _prod_any(p, q)

    return Name(query, label="mul")

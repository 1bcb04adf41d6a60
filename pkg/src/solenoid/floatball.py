"""IEEE-double ball arithmetic with explicit outward rounding.

This is the fast tier used by the spectral grids, the contour quadrature and
the Picard iteration.  A value is a center/radius pair of Python floats (or
numpy arrays of them).  Soundness rests only on IEEE-754 semantics of
+,-,*,/ and sqrt (correctly rounded, guaranteed by the platform): every
operation inflates the radius by a rigorous bound on its own rounding error.
Transcendentals (exp, log, sin, cos) are implemented here by argument
reduction plus Taylor series with certified remainders; nothing is trusted
from libm except correctly-rounded sqrt.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

__all__ = ["FloatBall", "BallGrid", "fb_exp", "fb_log", "fb_sincos",
           "fb_sqrt", "fb_pow", "FB_PI", "FB_LN2"]

_EPS = 2.0 ** -52          # one ulp at magnitude 1
_TINY = 5e-308             # absorbs subnormal rounding
_INFL = 1.0 + 2.0 ** -45   # generic relative inflation for radius formulas


def _bump(c: float, r: float) -> float:
    """Outward-correct a radius computed in rounded float arithmetic."""
    return (r + abs(c) * _EPS + _TINY) * _INFL


class FloatBall:
    """Center-radius enclosure over IEEE doubles."""

    __slots__ = ("c", "r")

    def __init__(self, c: float, r: float = 0.0):
        if not (r >= 0.0) or math.isinf(c) or math.isnan(c) or math.isinf(r):
            raise ValueError("invalid ball (%r, %r)" % (c, r))
        self.c = float(c)
        self.r = float(r)

    # -- constructors -----------------------------------------------------

    @staticmethod
    def exact(x) -> "FloatBall":
        """Enclose an int/Fraction/float exactly (floats are exact dyadics)."""
        if isinstance(x, float):
            return FloatBall(x, 0.0)
        f = Fraction(x)
        c = f.numerator / f.denominator  # correctly rounded
        err = abs(f - Fraction(c))
        return FloatBall(c, float(err) * (1.0 + _EPS) + (_TINY if err else 0.0))

    @staticmethod
    def from_endpoints(lo: float, hi: float) -> "FloatBall":
        c = 0.5 * (lo + hi)
        r = _bump(c, max(hi - c, c - lo))
        return FloatBall(c, r)

    @staticmethod
    def from_bounded(bv) -> "FloatBall":
        lo, hi = bv.lower(), bv.upper()
        c = (lo.numerator / lo.denominator + hi.numerator / hi.denominator) * 0.5
        rlo = abs(Fraction(c) - lo)
        rhi = abs(hi - Fraction(c))
        return FloatBall(c, float(max(rlo, rhi)) * (1.0 + 2 * _EPS) + _TINY)

    def to_bounded(self):
        from .approxcore import BoundedValue
        return BoundedValue.from_endpoints(
            Fraction(self.c) - Fraction(self.r),
            Fraction(self.c) + Fraction(self.r))

    # -- views ------------------------------------------------------------

    def lower(self) -> float:
        return self.c - self.r

    def upper(self) -> float:
        return self.c + self.r

    def mag(self) -> float:
        return abs(self.c) + self.r

    def mig(self) -> float:
        m = abs(self.c) - self.r
        return m if m > 0.0 else 0.0

    def contains(self, x) -> bool:
        x = Fraction(x)
        return Fraction(self.c) - Fraction(self.r) <= x <= \
            Fraction(self.c) + Fraction(self.r)

    def __repr__(self):
        return "FloatBall(%g +/- %g)" % (self.c, self.r)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, o):
        o = _fb(o)
        c = self.c + o.c
        return FloatBall(c, _bump(c, self.r + o.r))

    __radd__ = __add__

    def __neg__(self):
        return FloatBall(-self.c, self.r)

    def __sub__(self, o):
        return self + (-_fb(o))

    def __rsub__(self, o):
        return _fb(o) + (-self)

    def __mul__(self, o):
        o = _fb(o)
        c = self.c * o.c
        r = abs(self.c) * o.r + abs(o.c) * self.r + self.r * o.r
        return FloatBall(c, _bump(c, r * _INFL))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _fb(o)
        den = abs(o.c) - o.r
        if not den > 0.0:
            raise ZeroDivisionError("divisor ball contains zero")
        c = self.c / o.c
        r = ((self.r + abs(c) * o.r) / den) * _INFL
        return FloatBall(c, _bump(c, r))

    def __rtruediv__(self, o):
        return _fb(o) / self

    def hull(self, o: "FloatBall") -> "FloatBall":
        lo = min(self.c - self.r, o.c - o.r)
        hi = max(self.c + self.r, o.c + o.r)
        return FloatBall.from_endpoints(lo, hi)

    def widened(self, extra: float) -> "FloatBall":
        return FloatBall(self.c, _bump(self.c, self.r + abs(extra)))

    def abs_ball(self) -> "FloatBall":
        if abs(self.c) >= self.r:
            return FloatBall(abs(self.c), self.r)
        return FloatBall.from_endpoints(0.0, self.mag())

    # hooks for the generic Taylor arithmetic
    def one(self):
        return FloatBall(1.0)

    def zero(self):
        return FloatBall(0.0)

    def scale(self, f):
        return self * FloatBall.exact(Fraction(f))

    def exp_ball(self):
        return fb_exp(self)

    def log_ball(self):
        return fb_log(self)

    def sincos_ball(self):
        return fb_sincos(self)


def _fb(x) -> FloatBall:
    if isinstance(x, FloatBall):
        return x
    return FloatBall.exact(x)


# ---------------------------------------------------------------------------
# certified scalar transcendentals
# ---------------------------------------------------------------------------

# ln 2 and pi as tight balls (centers are the correctly rounded doubles,
# radii cover the distance to the true constants with margin)
FB_LN2 = FloatBall(0.6931471805599453, 1e-16)
FB_PI = FloatBall(3.141592653589793, 2e-16)
FB_PI_2 = FloatBall(1.5707963267948966, 1e-16)


def _exp_point(x: float) -> FloatBall:
    """Certified enclosure of exp(x) for |x| <= 745."""
    if x < -745.0:
        return FloatBall.from_endpoints(0.0, 5e-324 + 1e-323)
    if x > 709.0:
        raise OverflowError("exp overflow in float ball")
    n = int(round(x / 0.6931471805599453))
    red = FloatBall(x) - FB_LN2 * n
    # |red| <= 0.3466 + tiny
    term = FloatBall(1.0)
    acc = FloatBall(1.0)
    for k in range(1, 14):
        term = term * red * FloatBall.exact(Fraction(1, k))
        acc = acc + term
    # remainder: |red|^14/14! * e^{|red|} <= |red|^14/14! * 1.5
    m = red.mag()
    rem = (m ** 14) / math.factorial(14) * 1.5 * _INFL + _TINY
    acc = acc.widened(rem)
    return acc * FloatBall(math.ldexp(1.0, n))


def fb_exp(x: FloatBall) -> FloatBall:
    """exp of a ball: exp(c) spread by the radius factor."""
    base = _exp_point(x.c)
    if x.r == 0.0:
        return base
    if x.r > 700.0:
        raise OverflowError("exp of huge ball")
    # exp(c +/- r) = exp(c) * exp([-r, r]); |e^t - 1| <= r e^r for |t|<=r
    spread = x.r * _exp_point(x.r).mag() * _INFL
    return base * FloatBall(1.0, spread)


def _sincos_point(x: float) -> tuple:
    if abs(x) > 1e12:
        raise ValueError("trig argument too large for float ball reduction")
    n = int(math.floor(x / 1.5707963267948966 + 0.5))
    red = FloatBall(x) - FB_PI_2 * n
    # |red.c| <= pi/4 + reduction slack
    s = FloatBall(0.0)
    c = FloatBall(1.0)
    term = FloatBall(1.0)
    for k in range(1, 14):
        term = term * red * FloatBall.exact(Fraction(1, k))
        if k % 4 == 1:
            s = s + term
        elif k % 4 == 2:
            c = c - term
        elif k % 4 == 3:
            s = s - term
        else:
            c = c + term
    m = red.mag()
    rem = (m ** 14) / math.factorial(14) * _INFL + _TINY
    s = s.widened(rem)
    c = c.widened(rem)
    q = n % 4
    if q == 0:
        return s, c
    if q == 1:
        return c, -s
    if q == 2:
        return -s, -c
    return -c, s


def fb_sincos(x: FloatBall) -> tuple:
    s, c = _sincos_point(x.c)
    if x.r:
        # |sin(a)-sin(b)| <= |a-b|, same for cos
        s = s.widened(x.r)
        c = c.widened(x.r)
    return s, c


def fb_sin(x: FloatBall) -> FloatBall:
    return fb_sincos(x)[0]


def fb_cos(x: FloatBall) -> FloatBall:
    return fb_sincos(x)[1]


def fb_log(x: FloatBall) -> FloatBall:
    lo = x.c - x.r
    if not lo > 0.0:
        raise ValueError("log of ball touching zero")
    m, e = math.frexp(x.c)  # x.c = m * 2^e, m in [0.5, 1)
    # atanh series: log m = 2 atanh((m-1)/(m+1)), |s| <= 1/3
    mb = FloatBall(m)
    s = (mb - 1.0) / (mb + 1.0)
    s2 = s * s
    acc = FloatBall(0.0)
    p = s
    for k in range(0, 14):
        acc = acc + p * FloatBall.exact(Fraction(1, 2 * k + 1))
        p = p * s2
    # geometric remainder: |s|^(2K+1)/(2K+1) / (1 - s^2)
    sm = s.mag()
    rem = (sm ** 29) / 29.0 / max(1.0 - sm * sm, 0.5) * _INFL + _TINY
    out = acc.widened(rem) * 2.0 + FB_LN2 * e
    if x.r:
        # |log(a)-log(b)| <= |a-b| / min(a,b)
        out = out.widened(x.r / lo * _INFL)
    return out


def fb_sqrt(x: FloatBall) -> FloatBall:
    hi = x.c + x.r
    if hi < 0.0:
        raise ValueError("sqrt of negative ball")
    lo = max(x.c - x.r, 0.0)
    shi = math.sqrt(hi) * (1.0 + _EPS) + _TINY
    slo = math.sqrt(lo) * (1.0 - _EPS)
    return FloatBall.from_endpoints(max(slo, 0.0), shi)


def fb_pow(x: FloatBall, q: Fraction) -> FloatBall:
    """x**q for a rational exponent; positive base unless q is a small int."""
    q = Fraction(q)
    if q == 0:
        return FloatBall(1.0)
    if q.denominator == 1 and 0 < abs(q.numerator) <= 64:
        out = FloatBall(1.0)
        base = x if q > 0 else FloatBall(1.0) / x
        for _ in range(abs(q.numerator)):
            out = out * base
        return out
    if q == Fraction(1, 2):
        return fb_sqrt(x)
    if not (x.c - x.r) > 0.0:
        if x.c - x.r >= -_TINY and q > 0:
            hi = fb_pow(FloatBall(x.c + x.r), q).upper()
            return FloatBall.from_endpoints(0.0, max(hi, 0.0))
        raise ValueError("power of ball touching zero")
    return fb_exp(fb_log(x) * FloatBall.exact(q))


# ---------------------------------------------------------------------------
# vectorized grids
# ---------------------------------------------------------------------------

class BallGrid:
    """Numpy arrays of centers and radii with outward-rounded bulk ops."""

    __slots__ = ("c", "r")

    def __init__(self, c, r=None):
        self.c = np.asarray(c, dtype=np.float64)
        if r is None:
            r = np.zeros_like(self.c)
        self.r = np.asarray(r, dtype=np.float64)
        if self.r.shape != self.c.shape:
            self.r = np.broadcast_to(self.r, self.c.shape).copy()

    @staticmethod
    def zeros(shape) -> "BallGrid":
        return BallGrid(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.c.shape

    def copy(self) -> "BallGrid":
        return BallGrid(self.c.copy(), self.r.copy())

    def _bump(self, c, r):
        return (r + np.abs(c) * _EPS + _TINY) * _INFL

    def __add__(self, o: "BallGrid") -> "BallGrid":
        c = self.c + o.c
        return BallGrid(c, self._bump(c, self.r + o.r))

    def __neg__(self):
        return BallGrid(-self.c, self.r.copy())

    def __sub__(self, o: "BallGrid") -> "BallGrid":
        return self + (-o)

    def __mul__(self, o: "BallGrid") -> "BallGrid":
        c = self.c * o.c
        r = (np.abs(self.c) * o.r + np.abs(o.c) * self.r + self.r * o.r) * _INFL
        return BallGrid(c, self._bump(c, r))

    def scale_ball(self, b: FloatBall) -> "BallGrid":
        c = self.c * b.c
        r = (np.abs(self.c) * b.r + abs(b.c) * self.r + self.r * b.r) * _INFL
        return BallGrid(c, self._bump(c, r))

    def scale_grid(self, factors: "BallGrid") -> "BallGrid":
        return self * factors

    def widened(self, extra) -> "BallGrid":
        return BallGrid(self.c, self._bump(self.c, self.r + np.abs(extra)))

    def hull(self, o: "BallGrid") -> "BallGrid":
        lo = np.minimum(self.c - self.r, o.c - o.r)
        hi = np.maximum(self.c + self.r, o.c + o.r)
        c = 0.5 * (lo + hi)
        r = self._bump(c, np.maximum(hi - c, c - lo))
        return BallGrid(c, r)

    def at(self, idx) -> FloatBall:
        return FloatBall(float(self.c[idx]), float(self.r[idx]))

    def set(self, idx, b: FloatBall):
        self.c[idx] = b.c
        self.r[idx] = b.r

    def sumsq_upper(self) -> float:
        """Upper bound on sum of squares of the enclosed values."""
        m = np.abs(self.c) + self.r
        return float(np.sum(m * m)) * (1.0 + m.size * _EPS) * _INFL

    def sumsq_ball(self) -> FloatBall:
        """Ball enclosing sum of |value|^2 over the grid."""
        m = np.abs(self.c) + self.r
        lo_e = np.abs(self.c) - self.r
        lo_e = np.where(lo_e > 0.0, lo_e, 0.0)
        n = max(m.size, 1)
        hi = float(np.sum(m * m)) * (1.0 + n * _EPS) + _TINY
        lo = float(np.sum(lo_e * lo_e)) * (1.0 - n * _EPS)
        return FloatBall.from_endpoints(max(lo, 0.0), hi)

    def abs_upper(self) -> np.ndarray:
        return np.abs(self.c) + self.r

    def max_rad(self) -> float:
        return float(np.max(self.r)) if self.r.size else 0.0

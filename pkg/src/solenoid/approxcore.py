"""Exact and directed-rounded arithmetic, approximation streams, certified
quadrature, and the shared table of analytic constants.

Two numeric carriers live here:

* ``Fraction`` (stdlib) is the exact rational tier used by the polynomial
  algebra.
* ``Dyadic`` / ``BoundedValue`` form the outward-rounded ball tier: a value is
  stored as center +/- radius with both parts dyadic (mantissa * 2**exponent),
  and every operation rounds outward so the true result stays enclosed.

Transcendental enclosures (exp, log, sin, cos, pi) are delegated to
``mpmath.iv`` interval arithmetic, with exact conversions in both directions.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Callable, Union

from mpmath import iv, mp
from mpmath.libmp import finf, fninf, to_rational

__all__ = [
    "Dyadic",
    "BoundedValue",
    "Name",
    "refine",
    "ConstantsTable",
    "certified_integral",
    "beta",
    "gamma_tail",
    "bv_exp",
    "bv_log",
    "bv_sin",
    "bv_cos",
    "bv_pi",
    "bv_pow",
    "bv_sqrt",
]

DEFAULT_PREC = 120

_Number = Union[int, Fraction, "Dyadic"]


class Dyadic:
    """A dyadic rational mantissa * 2**exponent in canonical form.

    Canonical means the mantissa is odd or zero (zero has exponent 0), so
    equality of values is equality of representations.
    """

    __slots__ = ("m", "e")

    def __init__(self, m: int, e: int = 0):
        m = int(m)
        if m == 0:
            e = 0
        else:
            shift = (m & -m).bit_length() - 1
            m >>= shift
            e += shift
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "e", int(e))

    def __setattr__(self, *a):
        raise AttributeError("Dyadic is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def from_fraction(f: Fraction) -> "Dyadic":
        """Exact conversion; raises if the denominator is not a power of two."""
        q = f.denominator
        if q & (q - 1):
            raise ValueError("fraction %s is not dyadic" % f)
        return Dyadic(f.numerator, -(q.bit_length() - 1))

    @staticmethod
    def rounded(f: Fraction, prec: int, direction: int) -> "Dyadic":
        """Round a Fraction to a dyadic with about ``prec`` significant bits.

        ``direction`` < 0 rounds toward -inf, > 0 toward +inf.
        """
        p, q = f.numerator, f.denominator
        if p == 0:
            return Dyadic(0)
        mag = p.bit_length() - q.bit_length()  # floor(log2 |f|) within 1
        e = mag - prec
        # m = f * 2**-e, rounded in the requested direction
        if e >= 0:
            num, den = p, q << e
        else:
            num, den = p << (-e), q
        if direction < 0:
            m = num // den
        else:
            m = -((-num) // den)
        return Dyadic(m, e)

    # -- conversions -------------------------------------------------------

    def to_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m << self.e)
        return Fraction(self.m, 1 << (-self.e))

    def __float__(self) -> float:
        f = self.to_fraction()
        return f.numerator / f.denominator

    # -- arithmetic (always exact) ----------------------------------------

    def __add__(self, other: "Dyadic") -> "Dyadic":
        e = min(self.e, other.e)
        return Dyadic((self.m << (self.e - e)) + (other.m << (other.e - e)), e)

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.m, self.e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        return self + (-other)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.m * other.m, self.e + other.e)

    def __abs__(self) -> "Dyadic":
        return Dyadic(abs(self.m), self.e)

    def _cmp(self, other: "Dyadic") -> int:
        d = self - other
        return (d.m > 0) - (d.m < 0)

    def __lt__(self, o):
        return self._cmp(o) < 0

    def __le__(self, o):
        return self._cmp(o) <= 0

    def __gt__(self, o):
        return self._cmp(o) > 0

    def __ge__(self, o):
        return self._cmp(o) >= 0

    def __eq__(self, o):
        return isinstance(o, Dyadic) and self.m == o.m and self.e == o.e

    def __hash__(self):
        return hash((self.m, self.e))

    def __repr__(self):
        return "Dyadic(%d, %d)" % (self.m, self.e)

    @property
    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)

    def bit_length(self) -> int:
        return abs(self.m).bit_length()

    # -- serialization (schema: {"m": str, "e": int}) ----------------------

    def to_json(self) -> dict:
        return {"m": str(self.m), "e": self.e}

    @staticmethod
    def from_json(obj: dict) -> "Dyadic":
        return Dyadic(int(obj["m"]), int(obj["e"]))


_D0 = Dyadic(0)
_D1 = Dyadic(1)


def _as_dyadic(x: _Number) -> Dyadic:
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, int):
        return Dyadic(x)
    if isinstance(x, Fraction):
        return Dyadic.from_fraction(x)
    raise TypeError("cannot convert %r to Dyadic" % (x,))


class BoundedValue:
    """Center-radius enclosure of a real number with dyadic parts.

    The true value is guaranteed to lie in [center - radius, center + radius].
    Addition, subtraction and multiplication of dyadics are exact; the only
    rounding happens in :meth:`rounded`, which shrinks the mantissas and grows
    the radius outward, and in division / transcendental functions.
    """

    __slots__ = ("center", "radius")

    def __init__(self, center: Dyadic, radius: Dyadic = _D0):
        if radius.sign < 0:
            raise ValueError("negative radius")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    def __setattr__(self, *a):
        raise AttributeError("BoundedValue is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def exact(x: _Number) -> "BoundedValue":
        return BoundedValue(_as_dyadic(x))

    @staticmethod
    def from_fraction(f: Fraction, prec: int = DEFAULT_PREC) -> "BoundedValue":
        q = f.denominator
        if q & (q - 1) == 0:
            return BoundedValue(Dyadic.from_fraction(f))
        return BoundedValue.from_endpoints(f, f, prec)

    @staticmethod
    def from_endpoints(lo: Fraction, hi: Fraction,
                       prec: int = DEFAULT_PREC) -> "BoundedValue":
        """Enclose the interval [lo, hi] (given as Fractions) outward."""
        if lo > hi:
            raise ValueError("empty interval")
        c = Dyadic.rounded(Fraction(lo + hi, 2), prec, -1)
        cf = c.to_fraction()
        r = Fraction(max(hi - cf, cf - lo))
        return BoundedValue(c, Dyadic.rounded(r, prec, +1) if r else _D0)

    # -- views --------------------------------------------------------------

    def lower(self) -> Fraction:
        return (self.center - self.radius).to_fraction()

    def upper(self) -> Fraction:
        return (self.center + self.radius).to_fraction()

    def contains(self, x: Fraction) -> bool:
        return self.lower() <= x <= self.upper()

    def overlaps(self, other: "BoundedValue") -> bool:
        return self.lower() <= other.upper() and other.lower() <= self.upper()

    def mag(self) -> Dyadic:
        """Upper bound on |value|."""
        return abs(self.center) + self.radius

    def mignitude(self) -> Dyadic:
        """Lower bound on |value| (zero if the interval straddles 0)."""
        m = abs(self.center) - self.radius
        return m if m.sign > 0 else _D0

    def __float__(self):
        return float(self.center)

    def __repr__(self):
        return "BoundedValue(%s +/- %s)" % (float(self.center), float(self.radius))

    # -- rounding -----------------------------------------------------------

    def rounded(self, prec: int = DEFAULT_PREC) -> "BoundedValue":
        c, r = self.center, self.radius
        cb, rb = c.bit_length(), r.bit_length()
        if cb <= prec and rb <= prec:
            return self
        if cb > prec:
            s = cb - prec
            new_c = Dyadic(c.m >> s, c.e + s)  # floor toward -inf
            r = r + Dyadic(1, c.e + s)         # rounding error < 2**(c.e+s)
            c = new_c
        if r.bit_length() > prec:
            s = r.bit_length() - prec
            r = Dyadic(-((-r.m) >> s), r.e + s)  # ceil
        return BoundedValue(c, r)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "BoundedValue") -> "BoundedValue":
        return BoundedValue(self.center + other.center,
                            self.radius + other.radius).rounded()

    def __neg__(self) -> "BoundedValue":
        return BoundedValue(-self.center, self.radius)

    def __sub__(self, other: "BoundedValue") -> "BoundedValue":
        return self + (-other)

    def __mul__(self, other: "BoundedValue") -> "BoundedValue":
        c = self.center * other.center
        r = (abs(self.center) * other.radius
             + abs(other.center) * self.radius
             + self.radius * other.radius)
        return BoundedValue(c, r).rounded()

    def scale(self, f: Union[int, Fraction], prec: int = DEFAULT_PREC) -> "BoundedValue":
        """Multiply by an exact rational scalar."""
        f = Fraction(f)
        q = f.denominator
        if q & (q - 1) == 0:  # dyadic scalar: exact fast path
            d = Dyadic(f.numerator, -(q.bit_length() - 1))
            return BoundedValue(self.center * d, self.radius * abs(d)).rounded(prec)
        lo = self.lower() * f
        hi = self.upper() * f
        if lo > hi:
            lo, hi = hi, lo
        return BoundedValue.from_endpoints(lo, hi, prec)

    def __truediv__(self, other: "BoundedValue") -> "BoundedValue":
        if other.mignitude().sign == 0:
            raise ZeroDivisionError("divisor interval contains zero")
        a, b = self.lower(), self.upper()
        c, d = other.lower(), other.upper()
        qs = (a / c, a / d, b / c, b / d)
        return BoundedValue.from_endpoints(min(qs), max(qs))

    def widened(self, extra: "BoundedValue") -> "BoundedValue":
        """Grow the radius by an upper bound of ``extra`` (which must be >= 0)."""
        return BoundedValue(self.center, self.radius + extra.mag()).rounded()

    def hull(self, other: "BoundedValue") -> "BoundedValue":
        return BoundedValue.from_endpoints(min(self.lower(), other.lower()),
                                           max(self.upper(), other.upper()))

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"c": self.center.to_json(), "r": self.radius.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "BoundedValue":
        return BoundedValue(Dyadic.from_json(obj["c"]), Dyadic.from_json(obj["r"]))


# ---------------------------------------------------------------------------
# mpmath.iv bridge for transcendental enclosures
# ---------------------------------------------------------------------------

def _iv_from_dyadic(d: Dyadic):
    # iv.mpf(int) rounds outward to the working precision; ldexp is exact.
    return iv.ldexp(iv.mpf(d.m), d.e)


def _iv_from_bv(x: BoundedValue):
    lo = _iv_from_dyadic(x.center - x.radius)
    hi = _iv_from_dyadic(x.center + x.radius)
    return lo + (hi - lo) * iv.mpf([0, 1])


def _mpf_tuple_to_fraction(t) -> Fraction:
    if t in (finf, fninf):
        raise OverflowError("infinite interval endpoint")
    p, q = to_rational(t)
    return Fraction(int(p), int(q))


def _bv_from_iv(x, prec: int) -> BoundedValue:
    lo, hi = x._mpi_
    return BoundedValue.from_endpoints(_mpf_tuple_to_fraction(lo),
                                       _mpf_tuple_to_fraction(hi), prec)


def _iv_call(fun, x: BoundedValue, prec: int) -> BoundedValue:
    old = iv.prec
    try:
        iv.prec = prec + 10
        return _bv_from_iv(fun(_iv_from_bv(x)), prec)
    finally:
        iv.prec = old


def bv_exp(x: BoundedValue, prec: int = DEFAULT_PREC) -> BoundedValue:
    return _iv_call(iv.exp, x, prec)


def bv_log(x: BoundedValue, prec: int = DEFAULT_PREC) -> BoundedValue:
    if x.lower() <= 0:
        raise ValueError("log of interval touching zero")
    return _iv_call(iv.log, x, prec)


def bv_sin(x: BoundedValue, prec: int = DEFAULT_PREC) -> BoundedValue:
    return _iv_call(iv.sin, x, prec)


def bv_cos(x: BoundedValue, prec: int = DEFAULT_PREC) -> BoundedValue:
    return _iv_call(iv.cos, x, prec)


def bv_pi(prec: int = DEFAULT_PREC) -> BoundedValue:
    old = iv.prec
    try:
        iv.prec = prec + 10
        return _bv_from_iv(iv.pi, prec)
    finally:
        iv.prec = old


def bv_sqrt(x: BoundedValue, prec: int = DEFAULT_PREC) -> BoundedValue:
    """Directed-rounded square root of a nonnegative enclosure."""
    lo, hi = x.lower(), x.upper()
    if hi < 0:
        raise ValueError("sqrt of negative interval")
    lo = max(lo, Fraction(0))

    def _sqrt_lo(f: Fraction) -> Fraction:
        if f == 0:
            return Fraction(0)
        pq = f.numerator * f.denominator
        s = _isqrt(pq << (2 * prec))
        return Fraction(s, f.denominator << prec)

    def _sqrt_hi(f: Fraction) -> Fraction:
        if f == 0:
            return Fraction(0)
        pq = f.numerator * f.denominator
        s = _isqrt(pq << (2 * prec))
        return Fraction(s + 1, f.denominator << prec)

    return BoundedValue.from_endpoints(_sqrt_lo(lo), _sqrt_hi(hi), prec)


def _isqrt(n: int) -> int:
    import math
    return math.isqrt(n)


def bv_pow(x: BoundedValue, q: Fraction, prec: int = DEFAULT_PREC) -> BoundedValue:
    """x**q for positive x and rational q, via exp(q log x) with exact cases."""
    q = Fraction(q)
    if q == 0:
        return BoundedValue.exact(1)
    if q.denominator == 1 and 0 < q.numerator <= 64:
        out = x
        for _ in range(q.numerator - 1):
            out = out * x
        return out
    if x.lower() <= 0:
        if x.lower() == 0 and x.upper() == 0 and q > 0:
            return BoundedValue.exact(0)
        if x.lower() >= 0 and q > 0:
            # monotone power on [0, hi]: lower endpoint is exactly 0
            hi = bv_pow(BoundedValue.from_endpoints(x.upper(), x.upper(), prec),
                        q, prec)
            return BoundedValue.from_endpoints(Fraction(0), hi.upper(), prec)
        raise ValueError("power of interval touching zero with bad exponent")
    return bv_exp(bv_log(x, prec).scale(q), prec)


# ---------------------------------------------------------------------------
# Names (precision-indexed approximation streams)
# ---------------------------------------------------------------------------

class Name:
    """An approximation stream for a point of a represented metric space.

    ``query(k)`` must return an element of the dense set with distance at most
    2**-k from the represented point; results are memoized so a name is a pure
    deterministic function of (seed data, k).
    """

    def __init__(self, query: Callable[[int], object], label: str = ""):
        self._query = query
        self._cache: dict = {}
        self.label = label

    def refine(self, k: int):
        if k < 0:
            raise ValueError("precision index must be nonnegative")
        if k not in self._cache:
            self._cache[k] = self._query(k)
        return self._cache[k]

    @staticmethod
    def constant(value, label: str = "") -> "Name":
        return Name(lambda k: value, label)


def refine(name: Name, k: int):
    """Query a name at precision k: distance to the limit is at most 2**-k."""
    return name.refine(k)


# ---------------------------------------------------------------------------
# Certified adaptive quadrature (1D and 2D)
# ---------------------------------------------------------------------------

def certified_integral(f, a: Fraction, b: Fraction, target: Fraction,
                       max_panels: int = 20000, order: int = 8,
                       prec: int = DEFAULT_PREC) -> BoundedValue:
    """Enclose the integral of ``f`` over [a, b] by adaptive bisection.

    ``f`` is written against :class:`solenoid.taylor.TSeries`; each panel is
    integrated with a Taylor model of the given order (Lagrange remainder from
    the interval evaluation), falling back to the first-order range rule on
    panels the integrand rejects.  Panels are bisected, worst radius first,
    until the total radius is at most ``target``.
    """
    from .taylor import taylor_panel_integral

    a, b = Fraction(a), Fraction(b)
    if b < a:
        raise ValueError("reversed integration bounds")
    if a == b:
        return BoundedValue.exact(0)

    counter = 0
    heap = []

    def push(lo, hi):
        nonlocal counter
        contrib = taylor_panel_integral(f, lo, hi, order=order, prec=prec)
        counter += 1
        heapq.heappush(heap, (-contrib.radius.to_fraction(), counter, lo, hi, contrib))
        return contrib

    first = push(a, b)
    total_r = first.radius.to_fraction()
    target = Fraction(target)
    panels = 1
    while total_r > target and panels < max_panels:
        _, _, lo, hi, contrib = heapq.heappop(heap)
        total_r -= contrib.radius.to_fraction()
        mid = Fraction(lo + hi, 2)
        c1 = push(lo, mid)
        c2 = push(mid, hi)
        total_r += c1.radius.to_fraction() + c2.radius.to_fraction()
        panels += 1
    if total_r > target:
        raise RuntimeError("quadrature did not meet target radius %s within "
                           "%d panels" % (target, max_panels))
    out = BoundedValue.exact(0)
    for _, _, _, _, contrib in heap:
        out = out + contrib
    return out.rounded(prec)


def certified_integral_2d(f, box, target: Fraction, max_cells: int = 200000,
                          prec: int = DEFAULT_PREC) -> BoundedValue:
    """Enclose a double integral over an axis-aligned box by quadtree bisection.

    ``box`` is ((x_lo, x_hi), (y_lo, y_hi)) with Fraction entries; ``f`` maps a
    pair of BoundedValue intervals to a range enclosure.
    """
    (xa, xb), (ya, yb) = box
    xa, xb, ya, yb = map(Fraction, (xa, xb, ya, yb))

    counter = 0
    heap = []

    def push(x0, x1, y0, y1):
        nonlocal counter
        bx = BoundedValue.from_endpoints(x0, x1, prec)
        by = BoundedValue.from_endpoints(y0, y1, prec)
        val = f(bx, by)
        contrib = val.scale((x1 - x0) * (y1 - y0), prec)
        counter += 1
        heapq.heappush(heap, (-contrib.radius.to_fraction(), counter,
                              (x0, x1, y0, y1), contrib))
        return contrib

    first = push(xa, xb, ya, yb)
    total_r = first.radius.to_fraction()
    target = Fraction(target)
    cells = 1
    while total_r > target and cells < max_cells:
        _, _, (x0, x1, y0, y1), contrib = heapq.heappop(heap)
        total_r -= contrib.radius.to_fraction()
        xm = Fraction(x0 + x1, 2)
        ym = Fraction(y0 + y1, 2)
        for q in (push(x0, xm, y0, ym), push(xm, x1, y0, ym),
                  push(x0, xm, ym, y1), push(xm, x1, ym, y1)):
            total_r += q.radius.to_fraction()
        cells += 3
    if total_r > target:
        raise RuntimeError("2d quadrature did not meet target radius %s within "
                           "%d cells" % (target, max_cells))
    out = BoundedValue.exact(0)
    for _, _, _, contrib in heap:
        out = out + contrib
    return out.rounded(prec)


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def beta(x: Fraction, y: Fraction, k: int = 24) -> BoundedValue:
    """Enclose B(x, y) = int_0^1 (1-t)**(x-1) t**(y-1) dt with radius <= 2**-k.

    Standard exponent convention.  Endpoint singularities (exponents below 1)
    are handled by closed-form sliver bounds; the regular middle part goes to
    adaptive quadrature.
    """
    x, y = Fraction(x), Fraction(y)
    if x <= 0 or y <= 0:
        raise ValueError("beta arguments must be positive")
    prec = max(80, k + 30)
    target = Fraction(1, 1 << k)

    def integrand(t):
        return (1 - t).pow_frac(x - 1) * t.pow_frac(y - 1)

    def sliver(exp_inner: Fraction, exp_outer: Fraction, delta: Fraction):
        # integral over [0, delta] of t**(exp_inner-1) * (1-t)**(exp_outer-1)
        base = bv_pow(BoundedValue.exact(delta), exp_inner, prec).scale(
            Fraction(1, 1) / exp_inner)
        factor = bv_pow(BoundedValue.from_endpoints(1 - delta, Fraction(1), prec),
                        exp_outer - 1, prec)
        return base * factor

    lo_cut = Fraction(0)
    hi_cut = Fraction(1)
    parts = BoundedValue.exact(0)
    if y < 1:
        delta = Fraction(1, 2)
        while True:
            s = sliver(y, x, delta)
            if s.radius.to_fraction() <= target / 4:
                break
            delta /= 4
        parts = parts + s
        lo_cut = delta
    if x < 1:
        delta = Fraction(1, 2)
        while True:
            s = sliver(x, y, delta)
            if s.radius.to_fraction() <= target / 4:
                break
            delta /= 4
        parts = parts + s
        hi_cut = 1 - delta
    mid = certified_integral(integrand, lo_cut, hi_cut, target / 2, prec=prec)
    return (parts + mid).rounded(prec)


_COS_BETA_CACHE: dict = {}


def cos_contour_angle(prec: int = DEFAULT_PREC) -> BoundedValue:
    """Enclosure of cos(3*pi/5), the fixed contour angle cosine (negative)."""
    if prec not in _COS_BETA_CACHE:
        _COS_BETA_CACHE[prec] = bv_cos(bv_pi(prec).scale(Fraction(3, 5)), prec)
    return _COS_BETA_CACHE[prec]


def gamma_tail(l: BoundedValue, t: BoundedValue, k: int = 24) -> BoundedValue:
    """Upper enclosure of int_l^infty exp(t*r*cos(3pi/5)) / r dr.

    Both l and t must be strictly positive.  The finite head is certified
    quadrature; the analytic tail bound exp(t*c*L)/(t*|c|*L) (c = cos(3pi/5))
    is attached as pure radius above the head.
    """
    if l.lower() <= 0 or t.lower() <= 0:
        raise ValueError("gamma_tail requires l > 0 and t > 0")
    prec = max(80, k + 30)
    c = cos_contour_angle(prec)  # negative
    target = Fraction(1, 1 << k)
    t_lo = BoundedValue.from_endpoints(t.lower(), t.lower(), prec)

    def tail_bound(L: Fraction) -> Fraction:
        # int_L^inf e^{t c r}/r dr <= e^{t c L}/(t |c| L), using t >= t_lo
        num = bv_exp(t_lo * c.scale(L), prec)
        den = t_lo.scale(L) * (-c)
        return (num / den).upper()

    L = l.upper()
    while tail_bound(L) > target / 2:
        L *= 2

    tc = t * c

    def integrand(r):
        return (r * tc).exp() / r

    head = certified_integral(integrand, l.lower(), L, target / 2, prec=prec)
    # integrating from l.lower() over-covers [l, L]; keep it as an upper
    # enclosure by hulling with the integral from l.upper()
    tb = tail_bound(L)
    out = BoundedValue.from_endpoints(Fraction(0),
                                      head.upper() + tb, prec)
    return out


# ---------------------------------------------------------------------------
# Constants table
# ---------------------------------------------------------------------------

class ConstantsTable:
    """The analytic constants consumed by the solver layers.

    Entries are configuration with documented defaults; ``provenance`` records
    for each field whether it was configured or derived in-package.  Required
    relations (c1 and B1 as maxima, Ctilde = c1*M*B1) are recomputed, not
    stored independently.
    """

    def __init__(self, C=None, C_alpha=None, C_s=None, M=None,
                 C_half_time=None, prec: int = DEFAULT_PREC):
        one = BoundedValue.exact(1)
        self.prec = prec
        self.C = C if C is not None else one
        self._C_alpha = dict(C_alpha or {})
        self._C_s = dict(C_s or {})
        self.M = M if M is not None else one
        # constant in ||e^{-tA}a - a|| <= C t^{1/2} ||A^{1/2} a||
        self.C_half_time = C_half_time if C_half_time is not None else one
        self.provenance = {
            "C": "configured" if C is not None else "default",
            "C_alpha": "configured" if C_alpha else "default",
            "C_s": "configured" if C_s else "default/derived",
            "M": "configured" if M is not None else "default",
            "C_half_time": "configured" if C_half_time is not None else "default",
        }
        self._beta_cache: dict = {}

    # C_alpha defaults to 1: for a positive self-adjoint diagonal generator,
    # sup_lambda (t*lambda)^alpha e^{-t lambda} = (alpha/e)^alpha <= 1.
    def C_alpha(self, alpha: Fraction) -> BoundedValue:
        alpha = Fraction(alpha)
        if alpha == 0:
            return BoundedValue.exact(1)
        return self._C_alpha.get(alpha, BoundedValue.exact(1))

    def C_s(self, s: Fraction, k: int = 20) -> BoundedValue:
        """Sup-norm embedding constant for exponent s > 1.

        Default is the honest bound (sum over n,m >= 0 of (1+n^2+m^2)^-s)^(1/2)
        by certified partial sum plus integral tail.
        """
        s = Fraction(s)
        if s in self._C_s:
            return self._C_s[s]
        if s <= 1:
            raise ValueError("sup-norm embedding needs s > 1")
        key = (s, k)
        if key in self._beta_cache:
            return self._beta_cache[key]
        prec = self.prec
        N = 24
        total = BoundedValue.exact(0)
        for n in range(N + 1):
            for m in range(N + 1):
                term = bv_pow(BoundedValue.exact(1 + n * n + m * m), -s, prec)
                total = total + term
        # tail over max(n,m) > N: bounded by 2 * sum_{n>N} sum_{m>=0} (n^2+m^2)^-s
        # <= 2 * sum_{n>N} [ n^-2s + (pi/2) n^(1-2s) ] <= 2*integral bound
        # sum_{n>N} n^(1-2s) <= N^(2-2s)/(2s-2); sum_{n>N} n^-2s <= N^(1-2s)/(2s-1)
        Nf = BoundedValue.exact(N)
        t1 = bv_pow(Nf, 1 - 2 * s, prec).scale(Fraction(1, 1) / (2 * s - 1))
        t2 = bv_pow(Nf, 2 - 2 * s, prec) * bv_pi(prec).scale(Fraction(1, 2)).scale(
            Fraction(1, 1) / (2 * s - 2))
        tail = (t1 + t2).scale(2)
        enclosed = total.widened(tail)
        out = bv_sqrt(BoundedValue.from_endpoints(enclosed.lower(),
                                                  enclosed.upper(), prec), prec)
        self._beta_cache[key] = out
        return out

    def beta_value(self, x: Fraction, y: Fraction, k: int = 24) -> BoundedValue:
        key = ("beta", Fraction(x), Fraction(y), k)
        if key not in self._beta_cache:
            self._beta_cache[key] = beta(x, y, k)
        return self._beta_cache[key]

    @property
    def c1(self) -> BoundedValue:
        """max{C_{1/4}, C_{1/2}, C_{3/4}, 1}."""
        out = BoundedValue.exact(1)
        for a in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            ca = self.C_alpha(a)
            if ca.upper() > out.upper():
                out = out.hull(ca)
        lo = max(Fraction(1), out.lower())
        return BoundedValue.from_endpoints(lo, max(lo, out.upper()), self.prec)

    @property
    def B1(self) -> BoundedValue:
        """max{B(1/2,1/4), B(1/4,1/4), 1}."""
        b1 = self.beta_value(Fraction(1, 2), Fraction(1, 4))
        b2 = self.beta_value(Fraction(1, 4), Fraction(1, 4))
        hi = max(Fraction(1), b1.upper(), b2.upper())
        lo = max(Fraction(1), b1.lower(), b2.lower())
        return BoundedValue.from_endpoints(lo, hi, self.prec)

    @property
    def Ctilde(self) -> BoundedValue:
        return self.c1 * self.M * self.B1

    _default = None

    @classmethod
    def default(cls) -> "ConstantsTable":
        if cls._default is None:
            cls._default = cls()
        return cls._default

    def to_json(self) -> dict:
        return {
            "C": self.C.to_json(),
            "M": self.M.to_json(),
            "C_half_time": self.C_half_time.to_json(),
            "C_alpha": {str(k): v.to_json() for k, v in self._C_alpha.items()},
            "C_s": {str(k): v.to_json() for k, v in self._C_s.items()},
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConstantsTable":
        def _bv(o):
            return BoundedValue.from_json(o)
        return cls(
            C=_bv(obj["C"]) if "C" in obj else None,
            M=_bv(obj["M"]) if "M" in obj else None,
            C_half_time=_bv(obj["C_half_time"]) if "C_half_time" in obj else None,
            C_alpha={Fraction(k): _bv(v) for k, v in obj.get("C_alpha", {}).items()},
            C_s={Fraction(k): _bv(v) for k, v in obj.get("C_s", {}).items()},
        )

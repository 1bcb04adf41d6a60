"""Truncated Taylor-series arithmetic with enclosure coefficients.

This powers the higher-order certified quadrature: an integrand written
against :class:`TSeries` can be evaluated once around the panel midpoint (for
the polynomial part) and once over the whole panel (for the Lagrange
remainder coefficient), giving panel enclosures of order ``p`` instead of the
first-order range rule.

Coefficients are :class:`~solenoid.approxcore.BoundedValue` by default; any
type with the same operator surface plus ``exp_ball``/``log_ball``/
``sincos_ball`` hooks works (the complex ball used by the contour quadrature
does this).

Integrands that are not smooth on a given panel should raise
:class:`NonsmoothPanel` when ``order > 0``; with ``order == 0`` they must
return a plain range enclosure so the quadrature can fall back soundly.
"""

from __future__ import annotations

from fractions import Fraction

from .approxcore import (BoundedValue, DEFAULT_PREC, bv_cos, bv_exp, bv_log,
                         bv_sin)

__all__ = ["TSeries", "NonsmoothPanel", "taylor_panel_integral"]


class NonsmoothPanel(Exception):
    """Raised by integrands on panels where Taylor evaluation is invalid."""


def _exp0(c):
    if isinstance(c, BoundedValue):
        return bv_exp(c)
    return c.exp_ball()


def _log0(c):
    if isinstance(c, BoundedValue):
        return bv_log(c)
    return c.log_ball()


def _sincos0(c):
    if isinstance(c, BoundedValue):
        return bv_sin(c), bv_cos(c)
    return c.sincos_ball()


class TSeries:
    """Coefficients c[0..order] of sum c[j] (t - t0)^j, truncated."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = list(coeffs)

    @property
    def order(self):
        return len(self.c) - 1

    @staticmethod
    def variable(center, order: int) -> "TSeries":
        one = BoundedValue.exact(1) if isinstance(center, BoundedValue) else center.one()
        zero = BoundedValue.exact(0) if isinstance(center, BoundedValue) else center.zero()
        c = [center] + [one] + [zero] * (order - 1)
        return TSeries(c[:order + 1])

    @staticmethod
    def constant(value, order: int) -> "TSeries":
        zero = BoundedValue.exact(0) if isinstance(value, BoundedValue) else value.zero()
        return TSeries([value] + [zero] * order)

    def _zero(self):
        z = self.c[0]
        return BoundedValue.exact(0) if isinstance(z, BoundedValue) else z.zero()

    def _promote(self, other) -> "TSeries":
        if isinstance(other, TSeries):
            return other
        if isinstance(other, (int, Fraction)):
            other = BoundedValue.from_fraction(Fraction(other))
        return TSeries.constant(other, self.order)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        o = self._promote(other)
        return TSeries([a + b for a, b in zip(self.c, o.c)])

    __radd__ = __add__

    def __neg__(self):
        return TSeries([-a for a in self.c])

    def __sub__(self, other):
        return self + (-self._promote(other))

    def __rsub__(self, other):
        return self._promote(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(other))
        o = self._promote(other)
        n = self.order
        out = [self._zero() for _ in range(n + 1)]
        for i, a in enumerate(self.c):
            for j in range(n + 1 - i):
                out[i + j] = out[i + j] + a * o.c[j]
        return TSeries(out)

    __rmul__ = __mul__

    def scale(self, f: Fraction):
        return TSeries([a.scale(f) for a in self.c])

    def reciprocal(self):
        f0 = self.c[0]
        n = self.order
        g = [BoundedValue.exact(1) / f0 if isinstance(f0, BoundedValue)
             else f0.one() / f0]
        for k in range(1, n + 1):
            acc = self._zero()
            for j in range(1, k + 1):
                acc = acc + self.c[j] * g[k - j]
            g.append(-(acc / f0))
        return TSeries(g)

    def __truediv__(self, other):
        return self * self._promote(other).reciprocal()

    def __rtruediv__(self, other):
        return self._promote(other) * self.reciprocal()

    # -- elementary functions ------------------------------------------------

    def exp(self):
        n = self.order
        g = [_exp0(self.c[0])]
        for k in range(1, n + 1):
            acc = self._zero()
            for j in range(1, k + 1):
                acc = acc + (self.c[j] * g[k - j]).scale(j)
            g.append(acc.scale(Fraction(1, k)))
        return TSeries(g)

    def log(self):
        f0 = self.c[0]
        n = self.order
        g = [_log0(f0)]
        for k in range(1, n + 1):
            acc = self.c[k].scale(k)
            for j in range(1, k):
                acc = acc - g[j].scale(j) * self.c[k - j]
            g.append(acc.scale(Fraction(1, k)) / f0)
        return TSeries(g)

    def sincos(self):
        n = self.order
        s0, c0 = _sincos0(self.c[0])
        s, c = [s0], [c0]
        for k in range(1, n + 1):
            sa = self._zero()
            ca = self._zero()
            for j in range(1, k + 1):
                fj = self.c[j].scale(j)
                sa = sa + fj * c[k - j]
                ca = ca + fj * s[k - j]
            s.append(sa.scale(Fraction(1, k)))
            c.append((-ca).scale(Fraction(1, k)))
        return TSeries(s), TSeries(c)

    def sin(self):
        return self.sincos()[0]

    def cos(self):
        return self.sincos()[1]

    def pow_frac(self, q: Fraction):
        q = Fraction(q)
        if q == 0:
            one = (BoundedValue.exact(1) if isinstance(self.c[0], BoundedValue)
                   else self.c[0].one())
            return TSeries.constant(one, self.order)
        if q.denominator == 1 and 0 < q.numerator <= 32:
            out = self
            for _ in range(q.numerator - 1):
                out = out * self
            return out
        if self.order == 0 and isinstance(self.c[0], BoundedValue):
            from .approxcore import bv_pow
            return TSeries([bv_pow(self.c[0], q)])
        return self.log().scale(q).exp()


def taylor_panel_integral(f, lo: Fraction, hi: Fraction, order: int = 8,
                          prec: int = DEFAULT_PREC) -> BoundedValue:
    """Enclose the integral of ``f`` over one panel [lo, hi].

    ``f`` maps a TSeries in the integration variable to a TSeries.  Uses a
    Taylor model of the given order with a Lagrange remainder taken from the
    order-``order`` coefficient evaluated over the whole panel; falls back to
    the first-order range rule when the integrand refuses the panel.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    w = hi - lo
    if w == 0:
        return BoundedValue.exact(0)
    box = BoundedValue.from_endpoints(lo, hi, prec)
    try:
        g = f(TSeries.variable(box, order))
        mid = Fraction(lo + hi, 2)
        pt = f(TSeries.variable(BoundedValue.from_fraction(mid, prec),
                                max(order - 1, 0)))
    except (NonsmoothPanel, ValueError, ZeroDivisionError, OverflowError):
        g0 = f(TSeries.variable(box, 0))
        return g0.c[0].scale(w, prec)
    h = w / 2
    total = BoundedValue.exact(0)
    hp = h  # h^(j+1)
    for j in range(order):
        if j % 2 == 0:
            total = total + pt.c[j].scale(2 * hp / (j + 1), prec)
        hp *= h
    # remainder: f_p(xi_t) (t-mid)^p integrated over the panel
    if order == 0:
        rng = BoundedValue.exact(1)
    elif order % 2 == 0:
        rng = BoundedValue.from_endpoints(Fraction(0), h ** order, prec)
    else:
        rng = BoundedValue.from_endpoints(-(h ** order), h ** order, prec)
    total = total + (g.c[order] * rng).scale(w, prec)
    return total.rounded(prec)

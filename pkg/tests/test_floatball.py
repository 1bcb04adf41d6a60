"""Soundness tests for the double-precision ball layer.

The transcendental checks compare against mpmath evaluated at 30 digits,
which is an independent implementation; containment must hold for every
sampled argument.
"""

import math
from fractions import Fraction as F

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from solenoid.approxcore import BoundedValue
from solenoid.floatball import (
    BallGrid, FloatBall, fb_cos, fb_exp, fb_log, fb_pow, fb_sin, fb_sincos,
    fb_sqrt,
)

mp.mp.dps = 30

finite = st.floats(min_value=-1e6, max_value=1e6,
                   allow_nan=False, allow_infinity=False)
small = st.floats(min_value=-30.0, max_value=30.0,
                  allow_nan=False, allow_infinity=False)


def _contains_mp(ball, value) -> bool:
    return mp.mpf(ball.lower()) <= value <= mp.mpf(ball.upper())


class TestBallOps:
    @given(x=finite, y=finite)
    def test_add_mul_contain_exact(self, x, y):
        bx, by = FloatBall(x), FloatBall(y)
        assert (bx + by).contains(F(x) + F(y))
        assert (bx * by).contains(F(x) * F(y))
        assert (bx - by).contains(F(x) - F(y))

    @given(x=finite, y=finite.filter(lambda v: abs(v) > 1e-3))
    def test_div_contains_exact(self, x, y):
        assert (FloatBall(x) / FloatBall(y)).contains(F(x) / F(y))

    def test_div_through_zero_rejected(self):
        with pytest.raises(ZeroDivisionError):
            FloatBall(1.0) / FloatBall(0.5, 0.5)

    def test_exact_fraction_enclosure(self):
        b = FloatBall.exact(F(1, 3))
        assert b.contains(F(1, 3)) and b.r < 1e-16

    @given(x=finite, r=st.floats(min_value=0, max_value=10.0))
    def test_hull_and_widen(self, x, r):
        a = FloatBall(x, r)
        b = FloatBall(x + 1.0, 0.0)
        h = a.hull(b)
        assert h.contains(F(x)) and h.contains(F(x + 1.0))
        assert a.widened(0.5).contains(F(x) + F(r))


class TestTranscendentals:
    @given(x=st.floats(min_value=-700, max_value=700,
                       allow_nan=False, allow_infinity=False))
    def test_exp_containment(self, x):
        assert _contains_mp(fb_exp(FloatBall(x)), mp.exp(mp.mpf(x)))

    @given(x=finite)
    def test_sincos_containment(self, x):
        s, c = fb_sincos(FloatBall(x))
        assert _contains_mp(s, mp.sin(mp.mpf(x)))
        assert _contains_mp(c, mp.cos(mp.mpf(x)))

    @given(x=st.floats(min_value=1e-12, max_value=1e12,
                       allow_nan=False, allow_infinity=False))
    def test_log_containment(self, x):
        assert _contains_mp(fb_log(FloatBall(x)), mp.log(mp.mpf(x)))

    def test_exp_log_round_trip(self):
        b = fb_log(fb_exp(FloatBall(1.25)))
        assert b.contains(F(1.25))

    def test_pythagorean_identity(self):
        for x in (0.1, 1.0, 2.5, 40.0, -13.7):
            s, c = fb_sincos(FloatBall(x))
            assert (s * s + c * c).contains(F(1))

    def test_ball_argument_spread(self):
        e = fb_exp(FloatBall(0.0, 0.5))
        assert e.lower() <= math.exp(-0.5) and e.upper() >= math.exp(0.5)
        s = fb_sin(FloatBall(0.0, 0.2))
        assert s.lower() <= math.sin(-0.2) and s.upper() >= math.sin(0.2)

    def test_sqrt(self):
        b = fb_sqrt(FloatBall(2.0))
        assert _contains_mp(b, mp.sqrt(2))
        z = fb_sqrt(FloatBall(0.0, 1e-8))
        assert z.lower() <= 0.0 <= z.upper()

    def test_pow_rational(self):
        b = fb_pow(FloatBall(2.0), F(1, 3))
        assert _contains_mp(b, mp.cbrt(2))
        assert fb_pow(FloatBall(3.0), F(4)).contains(F(81))
        assert fb_pow(FloatBall(2.0), F(-2)).contains(F(1, 4))

    def test_log_rejects_zero(self):
        with pytest.raises(ValueError):
            fb_log(FloatBall(0.5, 0.5))

    def test_large_trig_argument_rejected(self):
        with pytest.raises(ValueError):
            fb_cos(FloatBall(1e13))


class TestBridge:
    @given(x=st.fractions(min_value=-100, max_value=100,
                          max_denominator=1 << 20))
    def test_round_trip_contains(self, x):
        bv = BoundedValue.from_fraction(x)
        fb = FloatBall.from_bounded(bv)
        assert fb.contains(x)
        assert fb.to_bounded().contains(x)


class TestBallGrid:
    def test_elementwise_containment(self):
        a = BallGrid(np.array([1.0, -2.0, 0.25]), np.array([0.0, 1e-15, 0.0]))
        b = BallGrid(np.array([3.0, 0.5, -4.0]))
        s = a + b
        p = a * b
        for i, (x, y) in enumerate([(1, 3), (-2, 0.5), (0.25, -4)]):
            assert s.at(i).contains(F(x) + F(y))
            assert p.at(i).contains(F(x) * F(y))

    def test_scale_ball(self):
        g = BallGrid(np.array([2.0, -6.0]))
        out = g.scale_ball(FloatBall.exact(F(1, 3)))
        assert out.at(0).contains(F(2, 3))
        assert out.at(1).contains(F(-2))

    def test_sumsq_ball(self):
        g = BallGrid(np.array([3.0, 4.0]))
        assert g.sumsq_ball().contains(F(25))
        assert g.sumsq_upper() >= 25.0

    def test_hull_covers_both(self):
        a = BallGrid(np.array([0.0]), np.array([1.0]))
        b = BallGrid(np.array([5.0]), np.array([0.5]))
        h = a.hull(b)
        assert h.at(0).contains(F(-1)) and h.at(0).contains(F(11, 2))

    def test_set_and_at(self):
        g = BallGrid.zeros((2, 2))
        g.set((1, 0), FloatBall(7.0, 0.125))
        got = g.at((1, 0))
        assert got.c == 7.0 and got.r == 0.125

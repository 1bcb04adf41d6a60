"""Pressure recovery along rectilinear paths.

The pressure of a stationary band-limited flow is reconstructed as the
path integral of the projected-out gradient part of Delta u - (u.grad)u.
Two different axis-aligned paths to the same point must give overlapping
enclosures; a pure-gradient forcing with u = 0 recovers its potential
exactly, up to the anchor gauge P(0,0) = 0.  Run:

    python3 demos/pressure_recovery.py
"""

import math
from fractions import Fraction as F

from solenoid import nse
from solenoid.floatball import BallGrid, FloatBall
from solenoid.spectral import FourierField


def mode_pair(n, m, c1, c2, cut):
    g1 = BallGrid.zeros((cut + 1, cut + 1))
    g2 = BallGrid.zeros((cut + 1, cut + 1))
    g1.set((n, m), FloatBall(float(c1)))
    g2.set((n, m), FloatBall(float(c2)))
    return FourierField("sc", cut, g1), FourierField("cs", cut, g2)


a = mode_pair(1, 2, 0.6, -0.3, 3)
b = mode_pair(1, 1, 0.25, -0.25, 3)
u = (a[0] + b[0], a[1] + b[1])
x = (F(1, 3), F(2, 5))

print("two-mode flow, pressure at x = (1/3, 2/5)")
corner_x = nse.PressureQuery(x)
corner_y = nse.PressureQuery(x, path=((F(0), F(0)), (F(0), x[1]), x))
p1 = nse.pressure(u, None, corner_x, 10)
p2 = nse.pressure(u, None, corner_y, 10)
print("  path through (x, 0): [%.12f, %.12f]"
      % (float(p1.lower()), float(p1.upper())))
print("  path through (0, y): [%.12f, %.12f]"
      % (float(p2.lower()), float(p2.upper())))
print("  enclosures overlap:", p1.lower() <= p2.upper()
      and p2.lower() <= p1.upper())
print()

print("pure-gradient forcing, u = 0: recovering cos(pi x) cos(pi y) - 1")
g1 = BallGrid.zeros((2, 2))
g2 = BallGrid.zeros((2, 2))
g1.set((1, 1), FloatBall(-math.pi))
g2.set((1, 1), FloatBall(-math.pi))
f = (FourierField("sc", 1, g1), FourierField("cs", 1, g2))
zero = (FourierField.zero("sc", 1), FourierField.zero("cs", 1))
for pt in ((F(1, 4), F(1, 2)), (F(1, 2), F(1, 2)), (F(3, 4), F(1, 8))):
    val = nse.pressure(zero, f, nse.PressureQuery(pt), 10)
    exact = math.cos(math.pi * float(pt[0])) \
        * math.cos(math.pi * float(pt[1])) - 1.0
    print("  P(%s, %s) in [%.9f, %.9f], potential %.9f, contained: %s"
          % (pt[0], pt[1], float(val.lower()), float(val.upper()), exact,
             val.lower() <= exact <= val.upper()))

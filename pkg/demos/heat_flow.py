"""Heat flow of a single Fourier mode, certified two ways.

The diagonal route multiplies the (1,1) coefficient by an enclosure of
e^{-2 pi^2 t}; the contour route integrates the resolvent along a sector
boundary and must produce an interval containing the same number.  Run:

    python3 demos/heat_flow.py
"""

import math
from fractions import Fraction

from solenoid.spectral import FourierField
from solenoid.stokes import semigroup_apply

a = FourierField.single_mode("sc", 1, 1)
print("datum: the single mode sin(pi x) cos(pi y)")
print()

for t in (Fraction(1, 64), Fraction(1, 8), Fraction(1, 2)):
    exact = math.exp(-float(t) * 2 * math.pi ** 2)
    diag = semigroup_apply(a, t, 20)
    cont = semigroup_apply(a, t, 20, force_contour=True)
    bd = diag.grid.at((1, 1))
    bc = cont.grid.at((1, 1))
    print("t = %-5s  exact factor %.12f" % (t, exact))
    print("   default route: %.12f +/- %.2e" % (bd.c, bd.r))
    print("   contour route: %.12f +/- %.2e" % (bc.c, bc.r))
    inside = bc.c - bc.r <= exact <= bc.c + bc.r
    print("   contour interval contains the exact factor:", inside)
    print()

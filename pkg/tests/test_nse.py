"""Tests for the nonlinear layer: B(u), the contraction certificate, the
Picard iteration, the smoothness lift, solve, and pressure recovery.

Oracles: the convection term of a single mode is integrated independently on
a real-space quadrature grid (exact for trig polynomials of bounded degree);
the m = 0 lift is compared with the diagonal heat multipliers; pressure
recovers a symbolic potential.  Certificate identities are replayed from
their defining recursions.  Claim-style bounds are measured on actual
iterates and compared against the certified tables.
"""

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solenoid import nse
from solenoid import polyfield as pf
from solenoid.approxcore import ConstantsTable, Name, bv_sqrt
from solenoid.floatball import BallGrid, FloatBall
from solenoid.helmholtz import VectorFieldName, divergence
from solenoid.spectral import FourierField, SobolevName, coefficients
from solenoid.stokes import frac_power_apply, semigroup_apply

EL = pf.mollify(pf.solenoidal_kernel(4)[0], 1, 2)
CT = ConstantsTable.default()


def _cert():
    # computed once; the horizon search is the expensive part
    if not hasattr(_cert, "value"):
        _cert.value = nse.compute_horizon(EL, mode_cap=12)
    return _cert.value


def _mode_pair(n, m, c1, c2, cutoff=None):
    cut = cutoff or max(n, m)
    g1 = BallGrid.zeros((cut + 1, cut + 1))
    g2 = BallGrid.zeros((cut + 1, cut + 1))
    g1.set((n, m), FloatBall(float(c1)))
    g2.set((n, m), FloatBall(float(c2)))
    return FourierField("sc", cut, g1), FourierField("cs", cut, g2)


def _sol_mode(n, m, scale=1.0, cutoff=None):
    return _mode_pair(n, m, m * scale, -n * scale, cutoff)


def _pair_norm_upper(p):
    s = p[0].l2_sq_ball() + p[1].l2_sq_ball()
    return math.sqrt(max(s.upper(), 0.0))


def _center_diff(p, q):
    cut = max(p[0].cutoff, q[0].cutoff)
    tot = 0.0
    for a, b in zip(p, q):
        ea, eb = a._embedded(cut), b._embedded(cut)
        d = ea.grid.c - eb.grid.c
        tot += float((d * d * ea.weights()).sum())
    return math.sqrt(tot)


def _pair_slack(p):
    """Certified radius of a pair: coefficient radii plus tails."""
    return nse._pair_radius(p) + math.hypot(p[0].tail_l2.upper(),
                                            p[1].tail_l2.upper())


# ---------------------------------------------------------------------------
# the coefficient-space product
# ---------------------------------------------------------------------------

class TestFastProduct:
    RNG = np.random.default_rng(20260823)

    def _random_field(self, basis, cut):
        c = self.RNG.normal(size=(cut + 1, cut + 1))
        r = np.abs(self.RNG.normal(size=(cut + 1, cut + 1))) * 1e-12
        return FourierField(basis, cut, BallGrid(c, r))

    @pytest.mark.parametrize("b1", ["sc", "cs", "cc", "ss"])
    @pytest.mark.parametrize("b2", ["sc", "cs"])
    def test_matches_reference_product(self, b1, b2):
        f = self._random_field(b1, 5)
        g = self._random_field(b2, 4)
        fast = nse._mul_fast(f, g)
        ref = f.multiply(g)
        assert fast.basis == ref.basis
        assert float(np.abs(fast.grid.c - ref.grid.c).max()) < 1e-11
        # enclosure property both ways: each center sits in the other's ball
        gap = np.abs(fast.grid.c - ref.grid.c)
        assert bool((gap <= fast.grid.r + ref.grid.r + 1e-15).all())

    def test_chunked_path_matches(self, monkeypatch):
        # shrink the slab budget so the product runs in several row chunks
        f = self._random_field("sc", 7)
        g = self._random_field("cs", 6)
        whole = nse._mul_fast(f, g)
        monkeypatch.setattr(nse, "_CHUNK_BUDGET", 200.0)
        split = nse._mul_fast(f, g)
        assert float(np.abs(whole.grid.c - split.grid.c).max()) < 1e-13

    def test_single_mode_product(self):
        # sin(pi x)cos(2 pi y) * cos(pi x)sin(pi y) expands over four modes
        f = FourierField.single_mode("sc", 1, 2)
        g = FourierField.single_mode("cs", 1, 1)
        p = nse._mul_fast(f, g)
        assert p.basis == "ss"
        # x: sin cos = (sin 2t)/2; y: cos(2t) sin(t) = (sin 3t - sin t)/2
        assert p.grid.at((2, 3)).contains(F(1, 4))
        assert p.grid.at((2, 1)).contains(F(-1, 4))


# ---------------------------------------------------------------------------
# the nonlinearity
# ---------------------------------------------------------------------------

def _convection_oracle(u1, u2, out_cut, grid=96):
    """Real-space quadrature of (u.grad)u for band-limited input.

    Midpoint quadrature on a grid x grid mesh is exact for the trig
    polynomials involved once grid exceeds twice the output band, so the
    only error is roundoff.  Returns coefficient arrays in sin.cos and
    cos.sin layout up to out_cut.
    """
    xs = (np.arange(grid) + 0.5) / grid
    X, Y = np.meshgrid(xs, xs, indexing="ij")

    def field_values(f, dx=0, dy=0):
        vals = np.zeros_like(X)
        cx = {"s": np.sin, "c": np.cos}
        for n in range(f.cutoff + 1):
            for m in range(f.cutoff + 1):
                c = f.grid.c[n, m]
                if c == 0.0:
                    continue
                gx = cx[f.basis[0]](n * np.pi * X)
                gy = cx[f.basis[1]](m * np.pi * Y)
                if dx:
                    gx = (np.cos if f.basis[0] == "s" else
                          lambda z: -np.sin(z))(n * np.pi * X) * n * np.pi
                if dy:
                    gy = (np.cos if f.basis[1] == "s" else
                          lambda z: -np.sin(z))(m * np.pi * Y) * m * np.pi
                vals += c * gx * gy
        return vals

    v1, v2 = field_values(u1), field_values(u2)
    w1 = v1 * field_values(u1, dx=1) + v2 * field_values(u1, dy=1)
    w2 = v1 * field_values(u2, dx=1) + v2 * field_values(u2, dy=1)

    def coeffs(vals, basis):
        out = np.zeros((out_cut + 1, out_cut + 1))
        cx = {"s": np.sin, "c": np.cos}
        for n in range(out_cut + 1):
            for m in range(out_cut + 1):
                gx = cx[basis[0]](n * np.pi * X)
                gy = cx[basis[1]](m * np.pi * Y)
                rho = (2 if n else 1) * (2 if m else 1)
                out[n, m] = rho * (vals * gx * gy).mean()
        return out
    return coeffs(w1, "sc"), coeffs(w2, "cs")


def _project_arrays(a, b):
    """Mode-by-mode solenoidal part of coefficient arrays (sc, cs)."""
    cut = a.shape[0] - 1
    n = np.arange(cut + 1, dtype=float)
    ng, mg = np.meshgrid(n, n, indexing="ij")
    den = ng * ng + mg * mg
    den[0, 0] = 1.0
    live = (ng >= 1) & (mg >= 1)
    p1 = np.where(live, (mg * mg * a - ng * mg * b) / den, 0.0)
    p2 = np.where(live, (ng * ng * b - ng * mg * a) / den, 0.0)
    return p1, p2


class TestNonlinearity:
    def test_zero_is_zero(self):
        z = (FourierField.zero("sc", 2), FourierField.zero("cs", 2))
        b = nse.nonlinearity(z, 8)
        # only the underflow guard of the enclosure arithmetic survives
        assert _pair_norm_upper(b) < 1e-100

    def test_symmetric_mode_vanishes(self):
        # the (1,1) cell flow: its convection term is a pure gradient
        b1, b2 = nse.nonlinearity_pair(*_sol_mode(1, 1))
        assert _pair_norm_upper((b1, b2)) < 1e-10

    def test_single_mode_oracle(self):
        u1, u2 = _sol_mode(1, 2)
        b1, b2 = nse.nonlinearity_pair(u1, u2)
        w1, w2 = _convection_oracle(u1, u2, b1.cutoff)
        p1, p2 = _project_arrays(w1, w2)
        assert float(np.abs(b1.grid.c - p1).max()) < 1e-9
        assert float(np.abs(b2.grid.c - p2).max()) < 1e-9
        # a lone solenoidal mode is a steady flow: its convection term is a
        # pure gradient, so both routes must see (essentially) zero here
        assert _pair_norm_upper((b1, b2)) < 1e-9

    def test_two_mode_oracle(self):
        # distinct Laplacian eigenvalues, so the convection term survives
        # the projection (same-eigenvalue combinations are steady flows)
        a = _sol_mode(1, 2, cutoff=2)
        b = _sol_mode(1, 1, cutoff=2)
        u1, u2 = a[0] + b[0], a[1] + b[1]
        b1, b2 = nse.nonlinearity_pair(u1, u2)
        w1, w2 = _convection_oracle(u1, u2, b1.cutoff)
        p1, p2 = _project_arrays(w1, w2)
        assert float(np.abs(b1.grid.c - p1).max()) < 1e-9
        assert float(np.abs(b2.grid.c - p2).max()) < 1e-9
        assert _pair_norm_upper((b1, b2)) > 0.1  # not a degenerate case

    def test_output_solenoidal(self):
        b1, b2 = nse.nonlinearity_pair(*_sol_mode(2, 3, 0.5))
        assert divergence(b1, b2).l2_norm_ball().upper() < 1e-9

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(1, 3), m=st.integers(1, 3),
           c=st.floats(min_value=-2, max_value=2, allow_nan=False))
    def test_quadratic_scaling(self, n, m, c):
        u = _sol_mode(n, m)
        scaled = (u[0].scale(F(3, 2)), u[1].scale(F(3, 2)))
        b = nse.nonlinearity_pair(*u)
        bs = nse.nonlinearity_pair(*scaled)
        ref = (b[0].scale(F(9, 4)), b[1].scale(F(9, 4)))
        assert _center_diff(bs, ref) < 1e-9

    def test_name_route_matches_band_route(self):
        u = _sol_mode(1, 2)
        names = tuple(SobolevName(Name(lambda k, f=f: f, label="c"),
                                  F(6, 5)) for f in u)
        b = nse.nonlinearity(names, 4)
        ref = nse.nonlinearity_pair(*u)
        assert _center_diff(b, ref) <= 2.0 ** -4 + _pair_slack(b) + 1e-9

    def test_low_smoothness_name_rejected(self):
        u = _sol_mode(1, 1)
        names = tuple(SobolevName(Name(lambda k, f=f: f), F(1)) for f in u)
        with pytest.raises(ValueError, match="insufficient smoothness"):
            nse.nonlinearity(names, 4)

    def test_bare_l2_tail_rejected(self):
        g = BallGrid.zeros((3, 3))
        g.set((1, 1), FloatBall(1.0))
        tail = FloatBall.from_endpoints(0.0, 0.1)
        u = (FourierField("sc", 2, g, tail), FourierField.zero("cs", 2))
        with pytest.raises(ValueError, match="insufficient smoothness"):
            nse.nonlinearity(u, 4)

    def test_mollified_element_certifies_coarse(self):
        b1, b2 = nse.nonlinearity(EL, 1)
        assert b1.tail_l2.upper() <= 0.5
        assert _pair_norm_upper((b1, b2)) < 10.0

    def test_mollified_element_budget_bounded(self):
        with pytest.raises(nse.BudgetError):
            nse.nonlinearity(EL, 12)


# ---------------------------------------------------------------------------
# the contraction certificate
# ---------------------------------------------------------------------------

class TestCertificate:
    def test_epsilon_strictly_contractive(self):
        c = _cert()
        assert c.epsilon.upper() < 1

    def test_cap_inequalities(self):
        from solenoid.approxcore import BoundedValue
        c = _cert()
        one = BoundedValue.exact(1)
        assert c.K_cap.upper() < (one / CT.Ctilde.scale(2)).lower()
        assert c.k0.upper() < (one / CT.Ctilde.scale(8)).lower()

    def test_claim_table_below_cap(self):
        c = _cert()
        for beta in (F(1, 4), F(1, 2)):
            for m, val in enumerate(c.K_beta_m[beta]):
                if m >= 1:
                    assert val.upper() <= c.K_cap.upper() * (1 + 1e-12)

    def test_epsilon_and_l_identities(self):
        c = _cert()
        eps = CT.Ctilde * c.K_cap.scale(2)
        assert abs(float(c.epsilon.upper()) - float(eps.upper())) < 1e-12
        L = c.K_cap.scale(2) * CT.C_alpha(F(1, 4)) * CT.beta_value(F(3, 4),
                                                                   F(1, 4))
        assert float(c.L.lower()) <= float(L.upper())
        assert float(L.lower()) <= float(c.L.upper())

    def test_m_table_recursion_replayed(self):
        c = _cert()
        m0 = {b: c.M_beta_m[b][0] for b in c.M_beta_m}
        for b in c.M_beta_m:
            for m in range(len(c.M_beta_m[b]) - 1):
                nxt = m0[b] + CT.C_alpha(b + F(1, 4)) * CT.M * \
                    c.M_beta_m[F(1, 4)][m] * c.M_beta_m[F(1, 2)][m] * \
                    CT.beta_value(F(3, 4) - b, F(1, 4))
                got = c.M_beta_m[b][m + 1]
                assert got.lower() <= nxt.upper()
                assert nxt.lower() <= got.upper()

    def test_w_recursion_fixed_point(self):
        c = _cert()
        limit = 4 * (math.sqrt(2) - 1) / math.sqrt(2)
        w = F(1)
        for wm in c.w_m:
            assert wm == w
            assert float(wm) <= limit + 1e-12
            w = 1 + w * w / 8

    def test_zero_datum(self):
        z = (FourierField.zero("sc", 1), FourierField.zero("cs", 1))
        c = nse.compute_horizon(z)
        assert float(c.k0.upper()) < 1e-100
        assert c.T_frac > 0

    def test_doubling_shrinks_horizon(self):
        pair = tuple(nse._strip_tail(f) for f in coefficients(EL, 16))
        doubled = (pair[0].scale(F(2)), pair[1].scale(F(2)))
        c1 = nse.compute_horizon(pair, mode_cap=12)
        c2 = nse.compute_horizon(doubled, mode_cap=12)
        assert c2.T_frac <= c1.T_frac

    def test_name_resolution_only_shrinks(self):
        # the exact pair is a finer presentation of the same field than a
        # name carrying the generic 2^-k resolution slack
        pair = tuple(nse._strip_tail(f) for f in coefficients(EL, 16))
        exact = nse.compute_horizon(pair, mode_cap=12)
        named = nse.compute_horizon(VectorFieldName.constant(*pair),
                                    mode_cap=12)
        assert exact.T_frac >= named.T_frac

    def test_json_serialization(self):
        d = _cert().to_json()
        for key in ("T_a", "k0", "K_cap", "epsilon", "L", "K_beta_m",
                    "M_beta_m", "w_m", "k_hat", "seed_res", "a_norm"):
            assert key in d


# ---------------------------------------------------------------------------
# iteration, lift, claims
# ---------------------------------------------------------------------------

class TestIterate:
    def test_initial_value_is_datum(self):
        c = _cert()
        for m in (0, 2, 5):
            p = nse.iterate(EL, c, m, 0, 4)
            ref = coefficients(EL, 64)
            assert _center_diff(p, ref) <= 2.0 ** -4 + _pair_slack(p)

    def test_m_zero_is_semigroup(self):
        c = _cert()
        t = c.T_frac / 2
        p = nse.iterate(EL, c, 0, t, 10)
        q = semigroup_apply(c.seed, t, 10)
        assert _center_diff(p, q) <= 2.0 ** -9

    def test_horizon_enforced(self):
        c = _cert()
        with pytest.raises(nse.HorizonError):
            nse.iterate(EL, c, 1, c.T_frac * 2, 6)
        with pytest.raises(nse.HorizonError):
            nse.iterate(EL, c, 1, F(-1, 8), 6)

    def test_small_time_modulus_path(self):
        c = _cert()
        k = 5
        eta = nse.eta_modulus(c, 3, k + 1)
        if eta is None or c.seed_res > F(1, 2 ** (k + 1)):
            pytest.skip("resolution floor blocks the modulus path here")
        p = nse.iterate(EL, c, 3, F(1, 2 ** max(eta, 60)), k)
        assert _center_diff(p, c.seed) == 0.0
        assert p[0].tail_l2.upper() <= 2.0 ** -(k + 1) * (1 + 1e-12)

    def test_modulus_values(self):
        c = _cert()
        e1 = nse.eta_modulus(c, 1, 6)
        assert e1 is None or e1 >= nse._log2_ceil_inv(c.T_frac)

    def test_energy_chain(self):
        c = _cert()
        t = c.T_frac
        p = nse.iterate(EL, c, 2, t, 8)
        bound = float(c.a_norm.upper()) + float(c.L.upper()) \
            + _pair_slack(p) + 2.0 ** -7
        assert _pair_norm_upper(p) <= bound


class TestSmoothnessLift:
    def test_time_must_be_positive(self):
        with pytest.raises(ValueError):
            nse.smoothness_lift(1, EL, 0, 6, cert=_cert())
        with pytest.raises(ValueError):
            nse.smoothness_lift(1, EL, F(-1, 4), 6, cert=_cert())

    def test_m_zero_heat_oracle(self):
        c = _cert()
        t = c.T_frac
        lift = nse.smoothness_lift(0, EL, t, 8, cert=c)
        lam = None
        for i in (0, 1):
            f = lift.band[i]
            seed = c.seed[i]._embedded(f.cutoff)
            n = np.arange(f.cutoff + 1, dtype=float)
            ng, mg = np.meshgrid(n, n, indexing="ij")
            lam = np.pi ** 2 * (ng * ng + mg * mg)
            oracle = seed.grid.c * np.exp(-float(t) * lam)
            gap = np.abs(f.grid.c - oracle)
            assert bool((gap <= f.grid.r + seed.grid.r + 1e-12).all())

    def test_h65_certificate_dominates_oracle(self):
        c = _cert()
        lift = nse.smoothness_lift(0, EL, c.T_frac, 8, cert=c)
        tot = 0.0
        for f in lift.band:
            n = np.arange(f.cutoff + 1, dtype=float)
            ng, mg = np.meshgrid(n, n, indexing="ij")
            w = (1 + ng * ng + mg * mg) ** F(6, 5) * f.weights()
            tot += float((w * f.grid.c ** 2).sum())
        assert math.sqrt(tot) <= lift.hs65.upper() * (1 + 1e-9)

    def test_endpoint_tail_schedule(self):
        c = _cert()
        t = c.T_frac
        tails = [nse._claim2_tail(c, 2, t, n) for n in range(4, 12)]
        assert all(b > a for a, b in zip(tails[1:], tails))
        # quartering t_n takes the bound down by about 2^(-1/2)
        assert tails[6] / tails[2] == pytest.approx(2.0 ** -1, rel=0.05)

    def test_lift_reports_meet_budget(self):
        c = _cert()
        lift = nse.smoothness_lift(1, EL, c.T_frac, 8, cert=c)
        assert lift.endpoint_tail <= 2.0 ** -10
        assert nse._pair_radius(lift.u) + lift.defect[F(0)] <= 2.0 ** -8 \
            * (1 + 1e-9)
        assert lift.t_n == c.T_frac / 2 ** lift.n


class TestClaimBounds:
    def test_beta_norm_tables_realized(self):
        c = _cert()
        for m in (1, 2):
            for t in (c.T_frac / 2, c.T_frac):
                lift = nse.smoothness_lift(m, EL, t, 8, cert=c)
                for beta in (F(1, 4), F(1, 2)):
                    ap = frac_power_apply(lift.band, beta)
                    measured = float(t) ** float(beta) * \
                        (_pair_norm_upper(ap) + lift.defect[beta])
                    idx = min(m, len(c.K_beta_m[beta]) - 1)
                    cap = float(c.K_beta_m[beta][idx].upper())
                    assert measured <= cap * (1 + 1e-9)

    def test_successive_difference_decay(self):
        c = _cert()
        t = c.T_frac
        eps = float(c.epsilon.upper())
        L = float(c.L.upper())
        iterates = [nse.iterate(EL, c, m, t, 8) for m in range(0, 6)]
        diffs, slacks = [], []
        for m in range(5):
            p, q = iterates[m], iterates[m + 1]
            diffs.append(_center_diff(p, q))
            slacks.append(_pair_slack(p) + _pair_slack(q))
        for m in range(1, 5):
            assert diffs[m] <= L * eps ** (m - 1) + slacks[m]
        for m in range(1, 4):
            if diffs[m] <= slacks[m + 1]:
                continue  # at the enclosure floor; the ratio is vacuous
            assert diffs[m + 1] / diffs[m] <= eps + 0.05


# ---------------------------------------------------------------------------
# solve and forcing
# ---------------------------------------------------------------------------

class TestSolve:
    def test_zero_data_zero_solution(self):
        z = (FourierField.zero("sc", 2), FourierField.zero("cs", 2))
        c = nse.compute_horizon(z)
        u = nse.solve(z, None, c.T_frac / 2, 8, cert=c)
        assert _pair_norm_upper(u) <= 2.0 ** -8

    def test_precision_self_consistency(self):
        c = _cert()
        t = c.T_frac / 2
        u6 = nse.solve(EL, None, t, 6, cert=c)
        u8 = nse.solve(EL, None, t, 8, cert=c)
        assert _center_diff(u6, u8) <= 2.0 ** -6 + 2.0 ** -8

    def test_agrees_with_semigroup_to_first_order(self):
        c = _cert()
        t = c.T_frac / 4
        u = nse.solve(EL, None, t, 8, cert=c)
        u0 = semigroup_apply(c.seed, t, 9)
        gap = _center_diff(u, u0)
        first_order = float(c.L.upper()) / (1 - float(c.epsilon.upper()))
        assert gap <= first_order + _pair_slack(u) + _pair_slack(u0) \
            + 2.0 ** -8

    def test_constant_forcing_m0_oracle(self):
        # with u frozen at m = 0 the forced iterate is the heat flow of the
        # datum plus the closed-form constant-forcing integral
        f1, f2 = _sol_mode(1, 1, 0.01, cutoff=2)
        forcing = nse.Forcing.constant(f1, f2)
        pair = tuple(nse._strip_tail(f) for f in coefficients(EL, 16))
        c = nse.compute_horizon(pair, mode_cap=12, forcing=forcing)
        t = c.T_frac
        u = nse.iterate(pair, c, 0, t, 8, forcing=forcing)
        lam = np.pi ** 2 * 2.0
        drive = 0.01 * (1 - math.exp(-float(t) * lam)) / lam
        seed = c.seed[0]._embedded(u[0].cutoff)
        expect = seed.grid.c.copy()
        n = np.arange(u[0].cutoff + 1, dtype=float)
        ng, mg = np.meshgrid(n, n, indexing="ij")
        expect *= np.exp(-float(t) * np.pi ** 2 * (ng * ng + mg * mg))
        expect[1, 1] += drive
        gap = np.abs(u[0]._embedded(u[0].cutoff).grid.c - expect)
        tol = u[0].grid.r.max() + u[0].tail_l2.upper() + 1e-10
        assert float(gap.max()) <= tol + 2.0 ** -8

    def test_forcing_shrinks_horizon(self):
        f1, f2 = _sol_mode(1, 1, 0.5, cutoff=2)
        forcing = nse.Forcing.constant(f1, f2)
        pair = tuple(nse._strip_tail(f) for f in coefficients(EL, 16))
        free = nse.compute_horizon(pair, mode_cap=12)
        forced = nse.compute_horizon(pair, mode_cap=12, forcing=forcing)
        assert forced.T_frac <= free.T_frac


# ---------------------------------------------------------------------------
# pressure recovery
# ---------------------------------------------------------------------------

def _pressure_test_flow():
    a = _sol_mode(1, 2, 0.3, cutoff=3)
    b = _sol_mode(2, 1, -0.2, cutoff=3)
    return a[0] + b[0], a[1] + b[1]


class TestPressure:
    def test_zero_everything(self):
        u = (FourierField.zero("sc", 1), FourierField.zero("cs", 1))
        q = nse.PressureQuery((F(1, 2), F(1, 2)))
        p = nse.pressure(u, None, q, 8)
        assert p.lower() <= 0 <= p.upper()

    def test_path_independence(self):
        u = _pressure_test_flow()
        x = (F(1, 3), F(2, 5))
        q1 = nse.PressureQuery(x)
        q2 = nse.PressureQuery(x, path=((F(0), F(0)), (F(0), F(2, 5)),
                                        (F(1, 3), F(2, 5))))
        p1 = nse.pressure(u, None, q1, 8)
        p2 = nse.pressure(u, None, q2, 8)
        assert p1.lower() <= p2.upper() and p2.lower() <= p1.upper()

    def test_anchor_gauge(self):
        u = _pressure_test_flow()
        q = nse.PressureQuery((F(0), F(0)), path=((F(0), F(0)),))
        p = nse.pressure(u, None, q, 10)
        assert p.lower() <= 0 <= p.upper()

    def test_gradient_forcing_recovers_potential(self):
        # f = grad(cos pi x cos pi y); with u = 0 the pressure is the
        # potential rebased to vanish at the anchor
        g1 = BallGrid.zeros((2, 2))
        g2 = BallGrid.zeros((2, 2))
        g1.set((1, 1), FloatBall(-math.pi))
        g2.set((1, 1), FloatBall(-math.pi))
        fpair = (FourierField("sc", 1, g1), FourierField("cs", 1, g2))
        u = (FourierField.zero("sc", 1), FourierField.zero("cs", 1))
        x = (F(1, 4), F(1, 2))
        p = nse.pressure(u, fpair, nse.PressureQuery(x), 8)
        exact = math.cos(math.pi / 4) * math.cos(math.pi / 2) - 1.0
        assert p.lower() <= exact <= p.upper()
        assert float(p.upper() - p.lower()) <= 2.0 ** -7

    def test_gradient_consistency(self):
        u = _pressure_test_flow()
        h1, h2 = nse.pressure_field(u)
        x, y = F(3, 8), F(5, 13)
        d = F(1, 256)
        pp = nse.pressure(u, None, nse.PressureQuery((x + d, y)), 12)
        pm = nse.pressure(u, None, nse.PressureQuery((x - d, y)), 12)
        fd = float((pp - pm).upper()) / (2 * float(d))
        hv = h1.eval_ball(x, y)
        # second-order finite-difference error: |h1''| <= (pi cut)^2 sup|h1|
        curv = (math.pi * h1.cutoff) ** 2 * h1.sup_upper()
        tol = curv * float(d) ** 2 / 6 + float(hv.r) + 2.0 ** -9
        assert abs(fd - float(hv.c)) <= tol

    def test_tail_data_rejected(self):
        g = BallGrid.zeros((2, 2))
        g.set((1, 1), FloatBall(1.0))
        tail = FloatBall.from_endpoints(0.0, 0.25)
        u = (FourierField("sc", 1, g, tail), FourierField.zero("cs", 1))
        with pytest.raises(ValueError, match="insufficient smoothness"):
            nse.pressure_field(u)

    def test_budget_failure_raises(self):
        u = _pressure_test_flow()
        q = nse.PressureQuery((F(1, 3), F(2, 5)))
        with pytest.raises(nse.BudgetError):
            nse.pressure(u, None, q, 64)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            nse.PressureQuery((F(3, 2), F(1, 2))).resolved_path()
        with pytest.raises(ValueError):
            nse.PressureQuery((F(1, 2), F(1, 2)),
                              path=((F(1, 4), F(0)),
                                    (F(1, 2), F(1, 2)))).resolved_path()
        with pytest.raises(ValueError):
            nse.PressureQuery((F(1, 2), F(1, 2)),
                              path=((F(0), F(0)),
                                    (F(1, 2), F(1, 2)))).resolved_path()

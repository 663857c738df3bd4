"""Triplet model: marginals, transforms, drifts, scaling, serialization."""

import math

import pytest

from gouruin.errors import (
    InvalidModelError,
    NotApplicableError,
    NotFiniteVariationError,
)
from gouruin.model import (
    Atoms1D,
    Density1D,
    FiniteAtomSet,
    JumpAtom,
    LevyTriplet2D,
    LineDensity,
    MarginalTriplet,
    d_eta,
    drift_vector,
    from_marginals,
    l_process,
    marginal_eta,
    marginal_xi,
    mean_at_one,
    s_process,
    scale_eta,
    triplet_from_json,
    triplet_to_json,
    w_jump,
    w_transform,
)
from gouruin.numerics import INF, NEG_INF
from gouruin.presets import continuous_example_triplet, jump_example_triplet

E = math.e


def atoms(*tuples):
    return FiniteAtomSet([JumpAtom(x, y, r) for x, y, r in tuples])


def triplet(gamma=(0.0, 0.0), sigma=((0.0, 0.0), (0.0, 0.0)), jumps=()):
    return LevyTriplet2D(gamma, sigma, atoms(*jumps))


# Independent oracle for the truncation-bridge region: a jump is corrected
# when its coordinate is small in the interval sense but the jump is large
# in the ball sense.
def corrected(x, y, coord):
    return abs(coord) < 1.0 and x * x + y * y >= 1.0


class TestMarginals:
    def test_continuous_pair_has_empty_correction(self):
        c = 0.7
        t = triplet((c, 0.5 - c), ((1.0, -1.0), (-1.0, 1.0)))
        m = marginal_xi(t)
        assert m.gamma == c
        assert m.sigma2 == 1.0
        assert m.jumps.atoms_or_none() == ()

    def test_unit_atom_outside_interval_and_ball(self):
        lam = 1.3
        t = triplet((0.25, -0.5), jumps=[(1.0, -1.0, lam)])
        assert not corrected(1.0, -1.0, 1.0)
        assert marginal_xi(t).gamma == 0.25
        assert marginal_eta(t).gamma == -0.5

    def test_atom_inside_interval_outside_ball_is_corrected(self):
        t = triplet((0.0, 0.0), jumps=[(0.3, 0.99, 1.0)])
        assert corrected(0.3, 0.99, 0.3)
        assert marginal_xi(t).gamma == pytest.approx(0.3, abs=1e-15)
        assert marginal_eta(t).gamma == pytest.approx(0.99, abs=1e-15)

    def test_ball_atom_needs_no_correction(self):
        t = triplet((0.1, 0.2), jumps=[(0.3, 0.4, 2.0)])
        assert marginal_xi(t).gamma == 0.1
        assert marginal_eta(t).gamma == 0.2

    def test_zero_coordinate_jumps_drop_from_the_projection(self):
        t = triplet(jumps=[(0.0, 1.5, 1.0), (-0.4, 0.0, 2.0)])
        assert marginal_xi(t).jumps.atoms_or_none() == ((-0.4, 2.0),)
        assert marginal_eta(t).jumps.atoms_or_none() == ((1.5, 1.0),)

    def test_roundtrip_via_from_marginals_is_bit_exact(self, corpus):
        for t in corpus:
            mx, me = marginal_xi(t), marginal_eta(t)
            rebuilt = from_marginals(mx, me, t.brownian_cov, t.jumps)
            mx2, me2 = marginal_xi(rebuilt), marginal_eta(rebuilt)
            assert mx2.gamma == mx.gamma
            assert me2.gamma == me.gamma
            assert mx2.sigma2 == mx.sigma2 and me2.sigma2 == me.sigma2
            assert mx2.jumps.atoms_or_none() == mx.jumps.atoms_or_none()


class TestWTransform:
    def test_pure_drift(self):
        t = triplet((0.8, 0.0))
        pair = w_transform(t)
        assert pair.gamma_tilde == (0.8, -0.8)
        assert pair.sigma == ((0.0, 0.0), (0.0, 0.0))

    def test_brownian_half_drift(self):
        # exp(-B_t) = stochexp(-B + t/2): drift of W must be one half.
        t = triplet((0.0, 0.0), ((1.0, 0.0), (0.0, 0.0)))
        pair = w_transform(t)
        assert pair.gamma_tilde[1] == pytest.approx(0.5, abs=1e-15)
        assert pair.sigma == ((1.0, -1.0), (-1.0, 1.0))

    def test_jump_map(self):
        t = triplet(jumps=[(1.0, -1.0, 2.0)])
        pair = w_transform(t)
        (a,) = pair.jumps.atoms_or_none()
        assert a.x == 1.0
        assert a.y == pytest.approx(math.exp(-1.0) - 1.0, abs=1e-16)
        assert a.rate == 2.0

    def test_one_dim_drift_identity(self, corpus):
        # gamma_xi + gamma_W = sigma^2/2 + sum of (x 1{|x|<1} + w 1{x>-ln2})
        for t in corpus:
            m_xi = marginal_xi(t)
            m_w = marginal_eta(w_transform(t))
            rhs = 0.5 * t.sigma_xi2
            for a in t.atoms():
                if a.x == 0.0:
                    continue
                term = a.x if abs(a.x) < 1.0 else 0.0
                if a.x > -math.log(2.0):
                    term += w_jump(a.x)
                rhs += a.rate * term
            assert m_xi.gamma + m_w.gamma == pytest.approx(rhs, abs=1e-12)


class TestSProcess:
    def test_u_zero_is_the_eta_marginal(self, corpus):
        for t in corpus[:50]:
            s = s_process(t, 0.0)
            m = marginal_eta(t)
            assert s.gamma == pytest.approx(m.gamma, abs=1e-12)
            assert s.sigma2 == pytest.approx(m.sigma2, abs=1e-15)
            assert s.jumps.atoms_or_none() == m.jumps.atoms_or_none()

    def test_continuous_example_variance_cancels_at_one(self):
        t = continuous_example_triplet(0.2)
        assert s_process(t, 1.0).sigma2 == 0.0

    def test_jump_value_map(self):
        t = triplet(jumps=[(1.0, -1.0, 1.0)])
        s = s_process(t, 2.0)
        ((v, r),) = s.jumps.atoms_or_none()
        assert v == pytest.approx(-1.0 - 2.0 * (math.exp(-1.0) - 1.0), abs=1e-15)
        assert v == pytest.approx(1.0 - 2.0 / E, abs=1e-15)

    def test_jump_example_at_critical_level_is_pure_drift(self):
        c, lam = 1.0, 1.0
        t = jump_example_triplet(c, lam)
        u = E / (E - 1.0)
        s = s_process(t, u)
        assert s.jumps.atoms_or_none() == ()
        assert s.sigma2 == 0.0
        assert s.gamma == pytest.approx(c * (2.0 - u), abs=1e-12)


class TestLProcess:
    def test_no_jumps_zero_cov_is_identity(self):
        t = triplet((0.3, -0.4), ((1.0, 0.0), (0.0, 2.0)))
        pair = l_process(t)
        assert pair.gamma_tilde == (0.3, -0.4)
        assert pair.sigma == t.sigma

    def test_jump_map_scales_by_discount(self):
        t = triplet(jumps=[(1.0, -1.0, 1.0)])
        (a,) = l_process(t).jumps.atoms_or_none()
        assert a.y == pytest.approx(-math.exp(-1.0), abs=1e-16)

    def test_continuous_example_shifts_drift_by_minus_cov(self):
        t = continuous_example_triplet(0.25)
        pair = l_process(t)
        assert pair.gamma_tilde[1] == pytest.approx((0.5 - 0.25) + 1.0, abs=1e-15)


class TestDriftVector:
    def test_jump_example(self):
        c = 0.6
        d = drift_vector(jump_example_triplet(c, 2.0))
        assert d == (-c, 2 * c)

    def test_pure_drift(self):
        assert drift_vector(triplet((1.5, -2.5))) == (1.5, -2.5)

    def test_ball_atom_subtracts(self):
        t = triplet((1.0, 1.0), jumps=[(0.5, 0.5, 2.0)])
        dx, dy = drift_vector(t)
        assert dx == pytest.approx(0.0, abs=1e-15)
        assert dy == pytest.approx(0.0, abs=1e-15)

    def test_gaussian_part_rejected(self):
        t = triplet((0.0, 0.0), ((1.0, 0.0), (0.0, 0.0)))
        with pytest.raises(NotFiniteVariationError):
            drift_vector(t)


class TestDEta:
    def test_atom_sum(self):
        m = MarginalTriplet(1.0, 0.0, Atoms1D([(0.5, 1.0)]))
        assert d_eta(m) == pytest.approx(0.5, abs=1e-15)

    def test_trivial(self):
        assert d_eta(MarginalTriplet(0.0, 0.0, Atoms1D([]))) == 0.0

    def test_negative_jumps_not_applicable(self):
        m = MarginalTriplet(0.4, 0.0, Atoms1D([(-0.1, 1.0)]))
        with pytest.raises(NotApplicableError):
            d_eta(m)

    def test_divergent_small_jump_integral_gives_minus_inf(self):
        # density v^-2 on (0, 1): the size-weighted small-jump integral is
        # the integral of 1/v, which diverges.
        m = MarginalTriplet(0.0, 0.0, Density1D(lambda v: v**-2, 0.0, 1.0, 1e-9))
        assert d_eta(m) == NEG_INF


class TestMeanAndScaling:
    def test_jump_example_mean(self):
        c, lam = 0.7, 1.9
        ex, ey = mean_at_one(jump_example_triplet(c, lam))
        assert ex == pytest.approx(-c + lam, abs=1e-14)
        assert ey == pytest.approx(2 * c - lam, abs=1e-14)

    def test_scale_identity(self, corpus):
        for t in corpus[:20]:
            s = scale_eta(t, 1.0)
            assert s.gamma_tilde == t.gamma_tilde
            assert s.sigma == t.sigma

    def test_scale_atom(self):
        t = triplet(jumps=[(1.0, -1.0, 2.5)])
        s = scale_eta(t, 3.0)
        (a,) = s.jumps.atoms_or_none()
        assert (a.x, a.y, a.rate) == (1.0, -3.0, 2.5)

    def test_scale_commutes_with_eta_marginal(self, corpus):
        # Oracle: the 1-d drift of the scaled component, recomputed from the
        # finite-variation decomposition of the marginal.
        for t in corpus[:60]:
            k = 1.7
            got = marginal_eta(scale_eta(t, k))
            m = marginal_eta(t)
            b = m.gamma - sum(r * v for v, r in m.jumps.atoms_or_none() if abs(v) < 1.0)
            expected = k * b + sum(
                k * v * r
                for v, r in m.jumps.atoms_or_none()
                if abs(k * v) < 1.0
            )
            assert got.gamma == pytest.approx(expected, abs=1e-12)
            assert got.sigma2 == pytest.approx(k * k * m.sigma2, rel=1e-15)

    def test_scale_requires_positive_factor(self):
        with pytest.raises(InvalidModelError):
            scale_eta(triplet(), 0.0)


class TestValidationAndJson:
    def test_sigma_must_be_psd(self):
        with pytest.raises(InvalidModelError):
            LevyTriplet2D((0, 0), ((1.0, 2.0), (2.0, 1.0)), FiniteAtomSet([]))

    def test_sigma_must_be_symmetric(self):
        with pytest.raises(InvalidModelError):
            LevyTriplet2D((0, 0), ((1.0, 0.5), (0.2, 1.0)), FiniteAtomSet([]))

    def test_atom_origin_rejected(self):
        with pytest.raises(InvalidModelError):
            JumpAtom(0.0, 0.0, 1.0)

    def test_rank_one_is_accepted(self):
        LevyTriplet2D((0, 0), ((1.0, -1.0), (-1.0, 1.0)), FiniteAtomSet([]))

    def test_json_roundtrip_atoms(self):
        t = triplet((0.1, -0.2), ((1.0, -0.5), (-0.5, 0.3)), [(1.0, -1.0, 2.0)])
        doc = triplet_to_json(t)
        t2 = triplet_from_json(doc)
        assert triplet_to_json(t2) == doc

    def test_json_density_family(self):
        doc = {
            "gamma_tilde": [0.0, 0.0],
            "sigma": [[0.0, 0.0], [0.0, 0.0]],
            "jumps": {
                "density": {
                    "kind": "uniform_box",
                    "params": {"c": 1.0},
                    "box": [1.0, 2.0, 1.0, 2.0],
                    "tol": 1e-9,
                }
            },
        }
        t = triplet_from_json(doc)
        assert triplet_to_json(t) == doc

    def test_unknown_density_family_rejected(self):
        with pytest.raises(InvalidModelError):
            triplet_from_json(
                {
                    "gamma_tilde": [0, 0],
                    "sigma": [[0, 0], [0, 0]],
                    "jumps": {"density": {"kind": "cauchy", "params": {}, "box": [0, 1, 0, 1]}},
                }
            )


class TestDensityTierMarginals:
    def test_uniform_box_marginal_gamma_matches_analytic(self):
        # Box [1, 2] x [1, 2] lies outside both truncation regions entirely,
        # so no correction applies.
        doc = {
            "gamma_tilde": [0.5, -0.5],
            "sigma": [[0.0, 0.0], [0.0, 0.0]],
            "jumps": {
                "density": {
                    "kind": "uniform_box",
                    "params": {"c": 1.0},
                    "box": [1.0, 2.0, 1.0, 2.0],
                }
            },
        }
        t = triplet_from_json(doc)
        assert marginal_xi(t).gamma == pytest.approx(0.5, abs=1e-9)
        assert marginal_eta(t).gamma == pytest.approx(-0.5, abs=1e-9)

    def test_box_straddling_the_bridge_region(self):
        # Uniform density on [0.2, 0.8] x [0.5, 1.5]: the x-correction is the
        # integral of x over the part of the box outside the unit ball.
        t = LevyTriplet2D(
            (0.0, 0.0),
            ((0.0, 0.0), (0.0, 0.0)),
            __import__("gouruin.model", fromlist=["density_from_json"]).density_from_json(
                {"kind": "uniform_box", "params": {"c": 1.0}, "box": [0.2, 0.8, 0.5, 1.5]}
            ),
        )
        from scipy import integrate

        oracle, _ = integrate.dblquad(
            lambda y, x: x if x * x + y * y >= 1.0 else 0.0, 0.2, 0.8, 0.5, 1.5
        )
        assert marginal_xi(t).gamma == pytest.approx(oracle, abs=1e-7)

    def test_line_density_eta_marginal(self):
        line = LineDensity("y", lambda v: 1.0, 0.5, 1.5, 1e-9)
        t = LevyTriplet2D((0.0, 0.0), ((0.0, 0.0), (0.0, 0.0)), line)
        m = marginal_eta(t)
        # correction: integral of y over {|y| < 1} outside the ball; on the
        # axis the ball is |y| < 1, so the correction region is empty.
        assert m.gamma == pytest.approx(0.0, abs=1e-9)
        assert m.jumps.mass(0.0, INF) == pytest.approx(1.0, abs=1e-8)


class TestGaussianVarianceDiscriminant:
    def test_vanishing_variance_iff_rigid_form(self, corpus):
        # The Gaussian variance of eta - u W is quadratic in u; it touches
        # zero for some u exactly when the covariance has the rigid rank-one
        # (or zero) shape.
        from gouruin.classify import _covariance_constraint
        from gouruin.model import s_gaussian_variance

        for t in corpus:
            s11 = t.sigma_xi2
            s22 = t.sigma_eta2
            cov = t.brownian_cov
            if s11 > 1e-12:
                min_var = s22 - cov * cov / s11
            else:
                min_var = s22
            touches_zero = abs(min_var) <= 1e-9
            rigid = not _covariance_constraint(t).is_empty()
            assert touches_zero == rigid, (t.sigma, min_var)
            if rigid and s11 > 1e-12:
                u0 = -cov / s11
                assert s_gaussian_variance(t.sigma, u0) <= 1e-9


class TestDensityFamilies:
    def test_exp_tails_parses_and_integrates(self):
        from gouruin.model import density_from_json

        dens = density_from_json(
            {
                "kind": "exp_tails",
                "params": {"c": 2.0, "a": 1.0, "b": 1.5},
                "box": [1.0, 3.0, 0.5, 2.0],
            }
        )
        # total mass: c * int e^-x dx * int e^-1.5 y dy over the box
        from scipy import integrate

        oracle = 2.0 * integrate.quad(lambda x: math.exp(-x), 1.0, 3.0)[0] * \
            integrate.quad(lambda y: math.exp(-1.5 * y), 0.5, 2.0)[0]
        from gouruin.regions import quadrant_mass

        assert quadrant_mass(dens, 1) == pytest.approx(oracle, rel=1e-7)

    def test_density_tier_mean(self):
        from gouruin.model import density_from_json

        c = 0.5
        dens = density_from_json(
            {"kind": "uniform_box", "params": {"c": c}, "box": [1.0, 2.0, -1.0, 1.0]}
        )
        t = LevyTriplet2D((0.25, -0.75), ((0.0, 0.0), (0.0, 0.0)), dens)
        ex, ey = mean_at_one(t)
        # box lies outside the unit ball, so the big-jump integral is the
        # whole measure: E x = c * (x1^2 - x0^2)/2 * height, E y = 0.
        assert ex == pytest.approx(0.25 + c * 1.5 * 2.0, rel=1e-7)
        assert ey == pytest.approx(-0.75, abs=1e-7)

    def test_density_scale_matches_quadrature_oracle(self):
        # Asymmetric box straddling the ball/ellipse bands so the truncation
        # adjustment is genuinely nonzero.
        from gouruin.model import density_from_json
        from scipy import integrate as si

        k = 2.0
        box = [0.1, 0.9, 0.2, 0.95]
        dens = density_from_json(
            {"kind": "uniform_box", "params": {"c": 1.0}, "box": box}
        )
        t = LevyTriplet2D((0.2, -0.3), ((0.0, 0.0), (0.0, 0.0)), dens)
        s = scale_eta(t, k)

        def diff(x, y):
            new = 1.0 if x * x + (k * y) ** 2 < 1.0 else 0.0
            old = 1.0 if x * x + y * y < 1.0 else 0.0
            return new - old

        import warnings as _w

        with _w.catch_warnings():
            _w.simplefilter("ignore")
            gx_oracle = 0.2 + si.dblquad(
                lambda y, x: x * diff(x, y), box[0], box[1], box[2], box[3],
                epsabs=1e-11,
            )[0]
            gy_oracle = k * (
                -0.3
                + si.dblquad(
                    lambda y, x: y * diff(x, y), box[0], box[1], box[2], box[3],
                    epsabs=1e-11,
                )[0]
            )
        assert gx_oracle != pytest.approx(0.2, abs=1e-3)  # nontrivial case
        assert s.gamma_tilde[0] == pytest.approx(gx_oracle, abs=1e-5)
        assert s.gamma_tilde[1] == pytest.approx(gy_oracle, abs=1e-5)

"""Tests for hypersurfaces, cone structures, and the dynamical checks."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from coneflat import cone, xi
from coneflat.coframe import Chart, Coframe, random_polynomial_coframe
from coneflat.funcfield import parse_poly, parse_ratfunc

VARS3 = ["x1", "x2", "x3"]
VARS6 = ["x1", "x2", "x3", "y1", "y2", "y3"]
P1 = xi.DEFAULT_PRIMES[0]


def mk_coframe(rows, names=VARS3):
    chart = Chart(len(names), tuple(names), (Fraction(0),) * len(names))
    return Coframe(chart, [[parse_ratfunc(e, names) for e in row] for row in rows])


def flat_coframe():
    return mk_coframe([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])


def rescaled_coframe():
    e = "1/(1 - x1)"
    return mk_coframe([[e, "0", "0"], ["0", e, "0"], ["0", "0", e]])


def twisted_coframe():
    return mk_coframe([["1", "0", "0"], ["0", "1", "x1"], ["0", "0", "1"]])


def fermat():
    return cone.Hypersurface(parse_poly("x1^4 + x2^4 + x3^4", VARS3))


@pytest.fixture(scope="module")
def fermat_xiz():
    return xi.xi_Z(fermat(), xi.XiConfig(samples=40, seed=9))


# ---------------------------------------------------------------------------
# hypersurface basics
# ---------------------------------------------------------------------------

def test_hypersurface_validation():
    z = fermat()
    assert z.n == 3 and z.degree == 4
    with pytest.raises(cone.ConeError):
        cone.Hypersurface(parse_poly("x1^2 + x2", VARS3))   # not homogeneous
    with pytest.raises(cone.ConeError):
        cone.Hypersurface(parse_poly("x1 + x2 + x3", VARS3))  # degree 1
    with pytest.raises(cone.ConeError):
        cone.Hypersurface(parse_poly("0", VARS3))
    with pytest.raises(cone.ConeError):
        cone.Hypersurface(parse_poly("x1^4 + x2^4", VARS3), degree=3)


def test_hypersurface_json_round_trip():
    data = {"n": 3, "degree": 4, "f": "x1^4+x2^4+x3^4"}
    z = cone.hypersurface_from_json(data)
    assert z.f == fermat().f
    again = cone.hypersurface_from_json(cone.hypersurface_to_json(z))
    assert again.f == z.f and again.degree == z.degree


def test_hypersurface_json_errors():
    with pytest.raises(cone.ConeError):
        cone.hypersurface_from_json({"n": 3})
    with pytest.raises(cone.ConeError):
        cone.hypersurface_from_json({"n": 3, "degree": 3,
                                     "f": "x1^4+x2^4+x3^4"})


# ---------------------------------------------------------------------------
# smoothness
# ---------------------------------------------------------------------------

def test_smooth_check_diagonal():
    report = cone.smooth_check(fermat())
    assert report.verdict == "smooth"
    assert report.method == "diagonal"


def test_smooth_check_diagonal_missing_variable():
    z = cone.Hypersurface(parse_poly("x1^4 + x2^4", VARS3))
    report = cone.smooth_check(z)
    assert report.verdict == "singular"
    # the x3-axis direction is the singular witness
    assert report.witness == (Fraction(0), Fraction(0), Fraction(1))


def test_smooth_check_singular_with_lifted_witness():
    z = cone.Hypersurface(parse_poly("x1^2*x2", VARS3))
    report = cone.smooth_check(z)
    assert report.verdict == "singular"
    assert report.method == "prime_search"
    w = report.witness
    assert w is not None and any(w)
    assert w[0] == 0  # the singular locus is the plane x1 = 0
    assert all(g.evaluate(w) == 0 for g in z.gradient())
    assert z.f.evaluate(w) == 0
    assert z.smoothness is report


def test_smooth_check_generic_quartic_by_search():
    z = cone.Hypersurface(parse_poly("x1^4 + x2^4 + x3^4 + x1^3*x2", VARS3))
    report = cone.smooth_check(z)
    assert report.verdict == "smooth"
    assert report.method == "prime_search"
    assert report.details["primes"] == [101, 103]


# ---------------------------------------------------------------------------
# adapted cone structures
# ---------------------------------------------------------------------------

def test_adapted_cone_flat_is_x_independent():
    cs = cone.adapted_cone(flat_coframe(), fermat())
    assert cs.F == parse_ratfunc("y1^4 + y2^4 + y3^4", VARS6)


def test_adapted_cone_rescaled_formula():
    cs = cone.adapted_cone(rescaled_coframe(), fermat())
    assert cs.F == parse_ratfunc("(y1^4 + y2^4 + y3^4)/(1 - x1)^4", VARS6)


def test_adapted_cone_twisted_formula():
    cs = cone.adapted_cone(twisted_coframe(), fermat())
    assert cs.F == parse_ratfunc("y1^4 + (y2 + x1*y3)^4 + y3^4", VARS6)


def test_adapted_cone_rejects_singular():
    z = cone.Hypersurface(parse_poly("x1^2*x2", VARS3))
    with pytest.raises(cone.ConeError):
        cone.adapted_cone(flat_coframe(), z)


def test_adapted_cone_dimension_mismatch():
    names4 = ["x1", "x2", "x3", "x4"]
    z4 = cone.Hypersurface(parse_poly("x1^4 + x2^4 + x3^4 + x4^4", names4))
    with pytest.raises(cone.ConeError):
        cone.adapted_cone(flat_coframe(), z4)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sample_cone_modp_exact_zeros():
    cs = cone.adapted_cone(rescaled_coframe(), fermat())
    pts = cone.sample_cone(cs, 15, seed="sc", field=P1)
    assert len(pts) == 15
    for x, y in pts:
        assert cs.F.evaluate_mod(list(x) + list(y), P1) == 0
    assert pts == cone.sample_cone(cs, 15, seed="sc", field=P1)
    assert pts != cone.sample_cone(cs, 15, seed="other", field=P1)


def test_sample_cone_float_newton_polish():
    cs = cone.adapted_cone(rescaled_coframe(), fermat())
    pts = cone.sample_cone(cs, 10, seed=5, field="float")
    assert len(pts) == 10
    for x, y in pts:
        val = cs.F.evaluate([complex(v) for v in x] + list(y))
        assert abs(val) < 1e-12


# ---------------------------------------------------------------------------
# geodesic tangency
# ---------------------------------------------------------------------------

def test_geodesic_tangency_three_models():
    z = fermat()
    for cf in (flat_coframe(), rescaled_coframe(), twisted_coframe()):
        report = cone.geodesic_tangency_check(cone.adapted_cone(cf, z))
        assert report.verdict
        assert report.mode == "exact"


def test_geodesic_tangency_random_coframe_and_variety():
    rng = random.Random(20260825)
    cf = random_polynomial_coframe(Chart.standard(3), rng, unimodular=True)
    z = cone.Hypersurface(parse_poly("x1^4 + x2^4 + x3^4 + x1^3*x2", VARS3))
    report = cone.geodesic_tangency_check(cone.adapted_cone(cf, z))
    assert report.verdict


# ---------------------------------------------------------------------------
# double bracket
# ---------------------------------------------------------------------------

def test_double_bracket_exact_flat():
    cs = cone.adapted_cone(flat_coframe(), fermat())
    report = cone.double_bracket_check(cs, samples=8, seed=1, mode="exact")
    assert report.verdict and report.identity_exact
    assert report.max_residual == 0


def test_double_bracket_exact_rescaled():
    cs = cone.adapted_cone(rescaled_coframe(), fermat())
    report = cone.double_bracket_check(cs, samples=12, seed=3, mode="exact")
    assert report.verdict and report.identity_exact
    assert report.samples == 12
    assert all(r == 0 for r in report.residuals)


def test_double_bracket_exact_twisted():
    # the identity holds for every adapted coframe, including ones that
    # later fail the characteristic test
    cs = cone.adapted_cone(twisted_coframe(), fermat())
    report = cone.double_bracket_check(cs, samples=8, seed=2, mode="exact")
    assert report.verdict and report.identity_exact


def test_double_bracket_float_random_coframe():
    rng = random.Random(42)
    cf = random_polynomial_coframe(Chart.standard(3), rng, unimodular=True)
    cs = cone.adapted_cone(cf, fermat())
    report = cone.double_bracket_check(cs, samples=10, seed=4, mode="float")
    assert report.identity_exact
    assert report.verdict
    assert report.max_residual < 1e-8


def test_double_bracket_unknown_mode():
    cs = cone.adapted_cone(flat_coframe(), fermat())
    with pytest.raises(cone.ConeError):
        cone.double_bracket_check(cs, samples=2, mode="symbolic-only")


# ---------------------------------------------------------------------------
# characteristic check
# ---------------------------------------------------------------------------

def test_characteristic_check_flat_passes(fermat_xiz):
    cs = cone.adapted_cone(flat_coframe(), fermat())
    report = cone.characteristic_check(cs, fermat_xiz, samples=10, seed=2)
    assert report.verdict
    assert report.samples == 10
    assert report.witness is None


def test_characteristic_check_rescaled_passes(fermat_xiz):
    cs = cone.adapted_cone(rescaled_coframe(), fermat())
    assert cone.characteristic_check(cs, fermat_xiz, samples=10, seed=2).verdict


def test_characteristic_check_scalar_rescale_passes(fermat_xiz):
    s = "1 + x2"
    cf = mk_coframe([[s, "0", "0"], ["0", s, "0"], ["0", "0", s]])
    cs = cone.adapted_cone(cf, fermat())
    assert cone.characteristic_check(cs, fermat_xiz, samples=10, seed=2).verdict


def test_characteristic_check_twisted_fails_with_witness(fermat_xiz):
    cs = cone.adapted_cone(twisted_coframe(), fermat())
    report = cone.characteristic_check(cs, fermat_xiz, samples=10, seed=2)
    assert not report.verdict
    assert report.witness is not None
    # the twisted tensor sits in a coordinate orthogonal to the whole
    # contraction image, so its distance to it is exactly 1
    assert report.witness_residual == pytest.approx(1.0, abs=1e-12)
    assert len(report.failures) == report.samples


def test_characteristic_check_float_backend():
    z = fermat()
    xiz_float = xi.xi_Z(z, xi.XiConfig(backend="float", samples=40, seed=11))
    cs = cone.adapted_cone(rescaled_coframe(), z)
    assert cone.characteristic_check(cs, xiz_float, samples=6, seed=3).verdict
    cs2 = cone.adapted_cone(twisted_coframe(), z)
    assert not cone.characteristic_check(cs2, xiz_float, samples=6, seed=3).verdict

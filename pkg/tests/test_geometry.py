import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from secpat.geometry import (
    ConvexDomain,
    Disk,
    Phantom,
    PhantomSupportError,
    UnsupportedDomainError,
    as_phantom,
    check_support,
    direction,
    from_angle,
    parse_phantom,
    phantom_eval,
    phantom_radon,
    phantom_spherical_mean,
    rasterize,
    support_point,
    tangency_radii,
    tangent_line,
    two_disk_phantom,
)

angles = st.floats(0, 2 * math.pi, allow_nan=False)
ELL = ConvexDomain.ellipse(2.0, 1.0)
UNIT = ConvexDomain.disk(1.0)


def test_domain_derived_values():
    assert ELL.eccentricity == pytest.approx(math.sqrt(3), abs=1e-15)
    assert math.tanh(ELL.elliptic_radius) == pytest.approx(0.5, abs=1e-15)
    # the boundary sits at elliptic radius r0
    assert ELL.eccentricity * math.cosh(ELL.elliptic_radius) == pytest.approx(2.0, rel=1e-14)
    assert ELL.eccentricity * math.sinh(ELL.elliptic_radius) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("kw", [dict(kind="disk", R=0.0), dict(kind="ellipse", a=1.0, b=1.0), dict(kind="cube")])
def test_domain_invariants(kw):
    with pytest.raises(ValueError):
        ConvexDomain(**kw)


@pytest.mark.parametrize("text", ["disk:2.5", "ellipse:2.0:1.0", "halfspace"])
def test_describe_parse_round_trip(text):
    dom = ConvexDomain.parse(text)
    assert ConvexDomain.parse(dom.describe()) == dom


@pytest.mark.parametrize(
    "domain, theta, expected",
    [(UNIT, (0.0, 1.0), (0.0, 1.0)), (ELL, (1.0, 0.0), (2.0, 0.0))],
)
def test_support_point_examples(domain, theta, expected):
    np.testing.assert_allclose(support_point(domain, theta), expected, atol=1e-15)


def test_support_point_matches_brute_force_maximizer():
    theta = np.array([1.0, 1.0]) / math.sqrt(2)
    phi = np.linspace(0, 2 * math.pi, 400001)
    boundary = np.stack([2 * np.cos(phi), np.sin(phi)], axis=-1)
    best = boundary[np.argmax(boundary @ theta)]
    np.testing.assert_allclose(support_point(ELL, theta), best, atol=1e-4)
    assert support_point(ELL, theta) @ theta >= (boundary @ theta).max() - 1e-12


def test_halfspace_rejects_support_point():
    with pytest.raises(UnsupportedDomainError):
        support_point(ConvexDomain.halfspace(), (0.0, 1.0))


@pytest.mark.parametrize(
    "domain, theta, r, normal_coord, value",
    [(UNIT, (1.0, 0.0), 0.0, 0, 1.0), (UNIT, (1.0, 0.0), -2.0, 0, -1.0), (ELL, (0.0, 1.0), -0.5, 1, 0.5)],
)
def test_tangent_line_examples(domain, theta, r, normal_coord, value):
    frame = tangent_line(domain, theta, r)
    pts = frame.point(np.linspace(-3, 3, 7))
    np.testing.assert_allclose(pts[:, normal_coord], value, atol=1e-14)
    np.testing.assert_allclose(frame.signed_distance(pts), 0.0, atol=1e-14)


@given(angles, angles)
def test_support_map_convexity(t1, t2):
    for dom in (UNIT, ELL):
        v1, v2 = from_angle(t1), from_angle(t2)
        assert (support_point(dom, v2) - support_point(dom, v1)) @ v1 <= 1e-12


@given(angles)
def test_support_point_on_boundary_with_normal_theta(t):
    z = support_point(ELL, t)
    assert (z[0] / 2) ** 2 + z[1] ** 2 == pytest.approx(1.0, abs=1e-12)
    n = np.array([z[0] / 4, z[1]])
    np.testing.assert_allclose(n / np.linalg.norm(n), from_angle(t), atol=1e-12)


def test_direction_normalizes_vectors():
    np.testing.assert_allclose(direction((3.0, 4.0)), (0.6, 0.8))
    with pytest.raises(ValueError):
        direction((0.0, 0.0))


one = as_phantom([((0.0, 0.0), 0.3, 1.0)])


@pytest.mark.parametrize("xi, expected", [((0, 0), 1.0), ((1, 0), 0.0)])
def test_phantom_eval_examples(xi, expected):
    assert phantom_eval(one, xi) == expected


def test_phantom_eval_additive_overlap():
    ph = as_phantom([((0, 0), 1.0, 1.0), ((0.5, 0), 1.0, 1.0)])
    assert phantom_eval(ph, (0.25, 0.0)) == 2.0


def _radon_quad(ph, s, theta):
    v = from_angle(theta)
    perp = np.array([-v[1], v[0]])
    val, _ = quad(lambda u: phantom_eval(ph, s * v + u * perp), -3, 3, points=[-1, 0, 1], limit=400)
    return val


@pytest.mark.parametrize(
    "ph, s, theta, expected",
    [
        (as_phantom([((0, 0), 1.0, 1.0)]), 0.0, 0.7, 2.0),
        (as_phantom([((0, 0), 1.0, 1.0)]), 1.0, 0.7, 0.0),
        (as_phantom([((0.5, 0), 0.25, 2.0)]), 0.5, 0.0, 1.0),
    ],
)
def test_phantom_radon_examples(ph, s, theta, expected):
    assert phantom_radon(ph, s, theta) == pytest.approx(expected, abs=1e-14)
    if expected:
        assert _radon_quad(ph, s, theta) == pytest.approx(expected, rel=1e-3)


def test_radon_mass_independent_of_angle():
    ph = two_disk_phantom()
    for th in np.linspace(0, math.pi, 7):
        ends = sorted(np.concatenate([ph.centers @ from_angle(th) - ph.radii, ph.centers @ from_angle(th) + ph.radii]))
        total, _ = quad(lambda s: phantom_radon(ph, s, th), -1.5, 1.5, points=ends, limit=200, epsabs=1e-12)
        assert total == pytest.approx(ph.mass, abs=1e-6)


def _mean_quad(ph, xi, r, n=4096):
    phi = np.arange(n) * 2 * math.pi / n
    pts = np.asarray(xi) + r * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return phantom_eval(ph, pts).mean()


@pytest.mark.parametrize("xi, r, expected", [((0, 0), 0.5, 1.0), ((0, 0), 2.0, 0.0)])
def test_spherical_mean_examples(xi, r, expected):
    unit = as_phantom([((0, 0), 1.0, 1.0)])
    assert phantom_spherical_mean(unit, xi, r) == expected


def test_spherical_mean_intersection_angle():
    unit = as_phantom([((0, 0), 1.0, 1.0)])
    # circle of radius 2 about (2, 0) meets the unit circle where cos(phi) = 7/8
    assert phantom_spherical_mean(unit, (2, 0), 2.0) == pytest.approx(math.acos(7 / 8) / math.pi, abs=1e-15)
    assert _mean_quad(unit, (2, 0), 2.0) == pytest.approx(math.acos(7 / 8) / math.pi, abs=1e-3)


@given(st.floats(0.01, 2.5), st.floats(0, 2 * math.pi))
def test_spherical_mean_agrees_with_quadrature(r, t):
    ph = two_disk_phantom()
    xi = 1.0 * from_angle(t)
    kinks = tangency_radii(ph, xi)
    if np.min(np.abs(r - kinks)) < 1e-3:
        return
    # the arc fraction is exact; the trapezoid rule on a step function converges like 1/n
    assert phantom_spherical_mean(ph, xi, r) == pytest.approx(_mean_quad(ph, xi, r, 1 << 16), abs=1e-4)


def test_spherical_mean_small_radius_limit():
    ph = two_disk_phantom()
    for xi in [(-0.15, 0.1), (0.3, -0.2), (0.9, 0.9), (0.0, 0.0)]:
        assert phantom_spherical_mean(ph, xi, 1e-9) == pytest.approx(phantom_eval(ph, xi))


def test_support_checks():
    check_support(two_disk_phantom(), UNIT)
    with pytest.raises(PhantomSupportError):
        check_support(as_phantom([((0.9, 0), 0.2, 1.0)]), UNIT)
    with pytest.raises(PhantomSupportError):
        check_support(two_disk_phantom(), ConvexDomain.halfspace())
    check_support(two_disk_phantom(ConvexDomain.halfspace()), ConvexDomain.halfspace())


def test_phantom_text_round_trip():
    ph = two_disk_phantom()
    assert parse_phantom(ph.to_text()) == ph
    assert parse_phantom("# nothing\n\n") == Phantom()
    with pytest.raises(ValueError, match="line 1"):
        parse_phantom("square 0 0 1 1")


def test_rasterize_orientation():
    ph = as_phantom([((0.5, -0.5), 0.2, 1.0)])
    xs = ys = np.linspace(-1, 1, 41)
    img = rasterize(ph, xs, ys)
    X, Y = np.meshgrid(xs, ys)
    assert (img * X).sum() / img.sum() == pytest.approx(0.5, abs=0.01)
    assert (img * Y).sum() / img.sum() == pytest.approx(-0.5, abs=0.01)


def test_disk_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        Disk((0, 0), 0.0)

import math

import numpy as np
import pytest

from frackorn.geometry import (Ball, Box, GeometryError, boundary_distance, collar_volume, contains,
                               domain_from_config, inner_offset_contains, ray_exit_distance, sample_collar,
                               sample_uniform, sphere_area, sphere_rule)


def test_contains_examples(disc, square):
    assert contains(disc, (0.0, 0.0))
    assert not contains(disc, (1.0, 0.0))
    assert contains(square, (0.5, 0.25))
    assert not contains(square, (0.0, 0.5))


def test_boundary_distance_examples(disc, square):
    assert boundary_distance(disc, (0.0, 0.0)) == 1.0
    assert boundary_distance(square, (0.5, 0.2)) == pytest.approx(0.2, abs=1e-15)
    assert boundary_distance(Ball((0.0, 0.0), 2.0), (1.0, 0.0)) == 1.0


def test_boundary_distance_rejects_outside(disc):
    with pytest.raises(GeometryError):
        boundary_distance(disc, (2.0, 0.0))
    with pytest.raises(GeometryError):
        boundary_distance(disc, (1.0, 0.0))


def test_inner_offset_examples(disc, square):
    assert inner_offset_contains(disc, 0.5, (0.0, 0.0))
    assert not inner_offset_contains(disc, 0.5, (0.6, 0.0))
    assert inner_offset_contains(square, 0.4, (0.5, 0.5))


def test_ray_exit_examples(disc, square):
    for angle in np.linspace(0, 2 * np.pi, 7):
        w = (math.cos(angle), math.sin(angle))
        assert ray_exit_distance(disc, (0.0, 0.0), w) == pytest.approx(1.0, rel=1e-15)
    assert ray_exit_distance(square, (0.5, 0.5), (1.0, 0.0)) == 0.5
    assert ray_exit_distance(disc, (0.5, 0.0), (1.0, 0.0)) == 0.5


def test_ray_exit_broadcasts(disc):
    dirs, _ = sphere_rule(2, 16)
    x = np.array([[0.1, 0.2], [-0.3, 0.0]])
    out = ray_exit_distance(disc, x[:, None, :], dirs[None, :, :])
    assert out.shape == (2, 16)
    y = x[:, None, :] + out[..., None] * dirs[None]
    assert np.allclose(np.linalg.norm(y, axis=2), 1.0)


def test_measures(disc, square):
    assert disc.volume == pytest.approx(math.pi)
    assert disc.perimeter == pytest.approx(2 * math.pi)
    assert square.perimeter == 4.0
    assert Box((0.0,), (1.0,)).perimeter == 2.0
    assert Ball((0.0, 0.0, 0.0), 1.0).perimeter == pytest.approx(4 * math.pi)


def test_collar_examples(disc, square):
    assert collar_volume(disc, 0.1) == pytest.approx(0.19 * math.pi, rel=1e-14)
    assert collar_volume(square, 0.1) == pytest.approx(0.36, rel=1e-14)
    with pytest.raises(GeometryError):
        collar_volume(disc, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_rule_mass_and_symmetry(n):
    dirs, wts = sphere_rule(n, 16)
    assert wts.sum() == pytest.approx(sphere_area(n), rel=1e-13)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert np.allclose(wts @ dirs, 0.0, atol=1e-13)


def test_sampling_statistics(disc, square):
    rng = np.random.default_rng(0)
    pts = sample_uniform(disc, rng, 100_000)
    assert np.all(np.abs(pts.mean(axis=0)) < 0.02)
    assert np.all(contains(disc, pts))
    pts = sample_uniform(square, np.random.default_rng(1), 100_000)
    assert abs(np.mean(pts[:, 0] < 0.5) - 0.5) < 0.01


def test_sampling_is_deterministic(disc):
    a = sample_uniform(disc, np.random.default_rng(42))
    b = sample_uniform(disc, np.random.default_rng(42))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("dom", [Ball((0.0, 0.0), 1.0), Box((0.0, 0.0), (1.0, 2.0))])
def test_collar_sampling_is_uniform(dom):
    t = 0.1
    pts = sample_collar(dom, t, np.random.default_rng(3), 50_000)
    d = dom._distance(pts)
    assert np.all((d > 0) & (d <= t))
    # fraction within t/2 of the boundary matches the measure ratio
    frac = np.mean(d <= t / 2)
    assert frac == pytest.approx(collar_volume(dom, t / 2) / collar_volume(dom, t), abs=0.01)


def test_invalid_domains():
    with pytest.raises(GeometryError):
        Ball((0.0, 0.0), -1.0)
    with pytest.raises(GeometryError):
        Box((0.0, 0.0), (1.0, 0.0))


def test_config_round_trip(disc, square):
    assert domain_from_config(disc.to_config()) == disc
    assert domain_from_config(square.to_config()) == square

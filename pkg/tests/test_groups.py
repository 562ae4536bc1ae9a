import math

import numpy as np
import pytest

from symdiv.errors import ArgumentError, DomainError, UnsupportedOperationError
from symdiv.groups import (
    GroupAction,
    apply,
    apply_points,
    check_assumption_a1,
    fundamental_grid,
    is_isometric,
    orbit,
    orbit_points,
    project_fundamental,
    project_points,
    quotient_distances,
)


@pytest.mark.parametrize("text", ["trivial", "rot:4", "trans1d:16", "rot:1"])
def test_parse_and_str_agree(text):
    assert str(GroupAction.parse(text)) == text


@pytest.mark.parametrize("text", ["rot:0", "rot", "foo:3", "trivial:2", "rot:x", "trans1d:-1"])
def test_parse_rejects_bad_groups(text):
    with pytest.raises(ArgumentError):
        GroupAction.parse(text)


def test_identity_element_returns_the_point():
    action = GroupAction.rotation(8)
    x = np.array([0.3, -0.7])
    np.testing.assert_array_equal(apply(action, 0, x), x)


def test_quarter_turn():
    np.testing.assert_allclose(apply(GroupAction.rotation(4), 1, [1.0, 0.0]), [0.0, 1.0], atol=1e-15)


def test_translation_wraps_mod_one():
    assert apply(GroupAction.translation(4), 1, [0.9])[0] == pytest.approx(0.15)


def test_group_law_composes_indices():
    action = GroupAction.rotation(6)
    x = [0.4, 0.2]
    np.testing.assert_allclose(apply(action, 2, apply(action, 3, x)), apply(action, 5, x), atol=1e-14)
    np.testing.assert_allclose(apply(action, 4, apply(action, 5, x)), apply(action, 3, x), atol=1e-14)


def test_index_out_of_range():
    with pytest.raises(ArgumentError):
        apply(GroupAction.rotation(4), 4, [1.0, 0.0])
    with pytest.raises(ArgumentError):
        apply(GroupAction.rotation(4), -1, [1.0, 0.0])


def test_points_outside_the_domain():
    with pytest.raises(DomainError):
        apply(GroupAction.translation(2), 1, [1.0])
    with pytest.raises(DomainError):
        apply(GroupAction.rotation(2), 1, [1.0])
    with pytest.raises(DomainError):
        orbit(GroupAction.rotation(2), [np.nan, 0.0])


def test_orbit_of_translation():
    points = [p[0] for p in orbit(GroupAction.translation(4), [0.1])]
    assert points == pytest.approx([0.1, 0.35, 0.6, 0.85])


def test_orbit_points_shape():
    pts = np.random.default_rng(0).normal(size=(5, 2))
    assert orbit_points(GroupAction.rotation(3), pts).shape == (3, 5, 2)


def test_project_fundamental_lands_in_sector_and_orbit(rng):
    action = GroupAction.rotation(5)
    domain = action.fundamental_domain
    for x in rng.normal(size=(50, 2)):
        rep = project_fundamental(action, x)
        assert domain.contains(rep)
        distances = [np.linalg.norm(rep - y) for y in orbit(action, x)]
        assert min(distances) < 1e-12


def _projection_inputs(action, rng):
    if action.dim == 1:
        edges = np.arange(action.order) / action.order
        return np.concatenate((rng.random(200), edges)).reshape(-1, 1)
    angles = 2 * np.pi * np.arange(action.order) / action.order
    edges = np.column_stack((np.cos(angles), np.sin(angles))) * 0.7
    return np.vstack((rng.normal(size=(200, 2)), edges))


@pytest.mark.parametrize("group", ["rot:3", "rot:4", "rot:7", "rot:16", "rot:256",
                                   "trans1d:3", "trans1d:4", "trans1d:7", "trans1d:256"])
def test_projection_is_idempotent_and_constant_on_orbits(group, rng):
    action = GroupAction.parse(group)
    points = _projection_inputs(action, rng)
    reps = project_points(action, points)
    np.testing.assert_allclose(project_points(action, reps), reps, rtol=0, atol=1e-12)
    for k in range(action.order):
        moved = project_points(action, apply_points(action, k, points))
        np.testing.assert_allclose(moved, reps, rtol=0, atol=1e-12)


def test_project_negative_axis():
    np.testing.assert_allclose(project_fundamental(GroupAction.rotation(4), [-1.0, 0.0]), [1.0, 0.0], atol=1e-15)


def test_project_origin_and_trivial():
    assert np.all(project_fundamental(GroupAction.rotation(7), [0.0, 0.0]) == 0.0)
    pts = np.array([[0.3, 0.4], [-2.0, 1.0]])
    np.testing.assert_array_equal(project_points(GroupAction.trivial(), pts), pts)


def test_project_translation():
    assert project_fundamental(GroupAction.translation(4), [0.6])[0] == pytest.approx(0.1)


def test_is_isometric():
    assert is_isometric(GroupAction.rotation(16))
    assert is_isometric(GroupAction.trivial())
    assert is_isometric(GroupAction.translation(1))
    assert not is_isometric(GroupAction.translation(2))


def test_quotient_distances_match_orbit_minimum(rng):
    action = GroupAction.rotation(4)
    X, Y = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    D = quotient_distances(action, X, Y)
    for i, x in enumerate(X):
        for j, y in enumerate(Y):
            expected = min(np.linalg.norm(x - z) for z in orbit(action, y))
            assert D[i, j] == pytest.approx(expected, abs=1e-14)


def test_quotient_distances_need_isometry():
    with pytest.raises(UnsupportedOperationError):
        quotient_distances(GroupAction.translation(2), [[0.1]], [[0.2]])


def test_fundamental_grid_shapes():
    action = GroupAction.rotation(4)
    with_origin = fundamental_grid(action, 8, min_radius=0.0)
    assert len(with_origin) == 1 + 7 * 8
    assert np.any(np.all(with_origin == 0.0, axis=1))

    without_origin = fundamental_grid(action, 8, min_radius=1e-6)
    assert len(without_origin) == 7 * 8
    assert action.fundamental_domain.contains(without_origin)

    line = fundamental_grid(GroupAction.translation(4), 10)
    assert line.shape == (10, 1)
    assert line.max() < 0.25


def test_check_separated_sector():
    action = GroupAction.rotation(4)
    report = check_assumption_a1(action, fundamental_grid(action, 8, min_radius=0.5), delta0=0.01)
    assert report.separation_ok
    assert report.noncontraction_ok
    assert report.worst_contraction_ratio == pytest.approx(1.0)
    assert report.min_cross_orbit_gap > 0.02


def test_check_flags_fixed_point():
    action = GroupAction.rotation(4)
    report = check_assumption_a1(action, fundamental_grid(action, 8, min_radius=0.0), delta0=0.01)
    assert not report.separation_ok
    assert report.min_cross_orbit_gap == 0.0


def test_check_translation_on_fundamental_interval():
    action = GroupAction.translation(4)
    report = check_assumption_a1(action, fundamental_grid(action, 16), delta0=0.001)
    assert report.noncontraction_ok
    assert report.separation_ok


def test_check_translation_across_the_wrap_contracts():
    report = check_assumption_a1(GroupAction.translation(4), [[0.1], [0.9]], delta0=0.001)
    assert not report.noncontraction_ok
    assert report.worst_contraction_ratio == pytest.approx(0.2 / 0.8)


def test_check_trivial_group():
    report = check_assumption_a1(GroupAction.trivial(), [[0.0, 0.0], [1.0, 1.0]], delta0=1.0)
    assert report.separation_ok
    assert math.isinf(report.min_cross_orbit_gap)


def test_check_rejects_bad_input():
    with pytest.raises(ArgumentError):
        check_assumption_a1(GroupAction.rotation(2), np.zeros((0, 2)), delta0=0.1)
    with pytest.raises(ArgumentError):
        check_assumption_a1(GroupAction.rotation(2), [[1.0, 0.0]], delta0=0.0)

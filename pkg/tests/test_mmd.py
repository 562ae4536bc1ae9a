import math

import numpy as np
import pytest

from symdiv.errors import ArgumentError, UnsupportedOperationError
from symdiv.groups import GroupAction, apply, apply_points, fundamental_grid
from symdiv.measures import EmpiricalMeasure, from_samples
from symdiv.mmd import (
    KernelSpec,
    MmdPath,
    c_big,
    check_kernel_invariance,
    default_path,
    estimate_c_sigma_k,
    estimate_mmd,
    gram_matrix,
    kernel_eval,
    mmd_invariant,
    mmd_permutation_test,
    mmd_plugin,
    mmd_squared,
)
from symdiv.samplers import sample_disk
from symdiv.streams import generator


def random_measure(rng, size, dim=2):
    weights = rng.random(size) + 0.05
    return EmpiricalMeasure.from_atoms(rng.normal(size=(size, dim)), weights / weights.sum())


def test_kernel_parse():
    kernel = KernelSpec.parse("gaussian:s=0.0654")
    assert kernel.bandwidth == pytest.approx(0.0654)
    assert kernel.K == 1.0
    assert KernelSpec.parse(str(kernel)) == kernel


@pytest.mark.parametrize("text", ["gaussian", "gaussian:s=0", "gaussian:s=-1", "laplace:s=1", "gaussian:s=1,t=2",
                                  "gaussian:s=wide"])
def test_kernel_parse_rejects(text):
    with pytest.raises(ArgumentError):
        KernelSpec.parse(text)


def test_kernel_eval():
    kernel = KernelSpec.gaussian(0.5)
    assert kernel_eval(kernel, [0.3, 0.4], [0.3, 0.4]) == 1.0
    y = [0.5 * math.sqrt(2.0), 0.0]
    assert kernel_eval(kernel, [0.0, 0.0], y) == pytest.approx(math.exp(-1.0), abs=1e-12)
    with pytest.raises(ArgumentError):
        kernel_eval(kernel, [0.0, 0.0], [0.0])


def test_kernel_is_rotation_invariant(rng):
    kernel = KernelSpec.gaussian(0.7)
    action = GroupAction.rotation(7)
    for x, y in zip(rng.normal(size=(10, 2)), rng.normal(size=(10, 2))):
        for k in range(action.order):
            rotated = kernel_eval(kernel, apply(action, k, x), apply(action, k, y))
            assert rotated == pytest.approx(kernel_eval(kernel, x, y), abs=1e-12)


def test_plugin_of_identical_measures(rng):
    P = random_measure(rng, 40)
    assert mmd_plugin(P, P, KernelSpec.gaussian(0.3)) <= 1e-8


def test_two_deltas_closed_form():
    kernel = KernelSpec.gaussian(0.8)
    x, y = [0.0, 0.0], [0.5, 0.9]
    expected = math.sqrt(2.0 - 2.0 * kernel_eval(kernel, x, y))
    assert mmd_plugin(from_samples([x]), from_samples([y]), kernel) == pytest.approx(expected, abs=1e-12)


def test_plugin_matches_witness_function(rng):
    kernel = KernelSpec.gaussian(0.6)
    for _ in range(20):
        P, Q = random_measure(rng, 5), random_measure(rng, 5)
        # witness(z) = E_P k(., z) - E_Q k(., z); MMD^2 = E_P witness - E_Q witness
        def witness(z):
            return (P.weights @ gram_matrix(kernel, P.points, z)) - (Q.weights @ gram_matrix(kernel, Q.points, z))

        squared = P.weights @ witness(P.points) - Q.weights @ witness(Q.points)
        assert mmd_plugin(P, Q, kernel) == pytest.approx(math.sqrt(max(squared, 0.0)), abs=1e-10)


def test_plugin_is_symmetric(rng):
    kernel = KernelSpec.gaussian(0.4)
    P, Q = random_measure(rng, 7), random_measure(rng, 4)
    assert mmd_plugin(P, Q, kernel) == pytest.approx(mmd_plugin(Q, P, kernel), abs=1e-14)


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        mmd_squared(from_samples([0.0]), from_samples([[0.0, 0.0]]), KernelSpec.gaussian(1.0))


def test_trivial_action_equals_plugin(rng):
    kernel = KernelSpec.gaussian(0.5)
    P, Q = random_measure(rng, 6), random_measure(rng, 8)
    assert mmd_invariant(P, Q, GroupAction.trivial(), kernel) == pytest.approx(mmd_plugin(P, Q, kernel), abs=1e-14)


def test_equal_orbits_give_zero():
    value = mmd_invariant(from_samples([[1.0, 0.0]]), from_samples([[0.0, 1.0]]), GroupAction.rotation(4),
                          KernelSpec.gaussian(0.5))
    assert value <= 1e-8


@pytest.mark.parametrize("order", [1, 2, 4, 16, 64])
def test_orbit_and_symmetrized_kernel_paths_agree(order):
    action = GroupAction.rotation(order)
    kernel = KernelSpec.gaussian(2 * math.pi / (6 * order))
    for trial in range(4):
        n = 8 * (trial + 1)
        P = from_samples(sample_disk(order, n, seed=trial))
        Q = from_samples(sample_disk(order, n, seed=100 + trial))
        orbit = mmd_invariant(P, Q, action, kernel, MmdPath.ORBIT)
        symk = mmd_invariant(P, Q, action, kernel, MmdPath.SYMMETRIZED_KERNEL)
        assert orbit == pytest.approx(symk, abs=1e-10)


@pytest.mark.slow
def test_paths_agree_on_large_instances():
    rng = np.random.default_rng(99)
    for trial in range(100):
        order = int(rng.choice([2, 4, 8, 16, 32, 64]))
        n = int(rng.integers(16, 257))
        action = GroupAction.rotation(order)
        kernel = KernelSpec.gaussian(float(rng.uniform(0.02, 1.0)))
        P = from_samples(sample_disk(order, n, seed=2 * trial))
        Q = from_samples(sample_disk(order, n, seed=2 * trial + 1))
        assert mmd_invariant(P, Q, action, kernel, "orbit") == pytest.approx(
            mmd_invariant(P, Q, action, kernel, "symk"), abs=1e-10)


def test_orbit_representatives_do_not_matter():
    action = GroupAction.rotation(8)
    kernel = KernelSpec.gaussian(0.2)
    for trial in range(50):
        X, Y = sample_disk(8, 10, seed=trial), sample_disk(8, 10, seed=500 + trial)
        rng = generator(trial)
        elements = rng.integers(0, 8, size=10)
        moved = np.array([apply_points(action, int(k), x[None, :])[0] for k, x in zip(elements, X)])
        base = mmd_invariant(from_samples(X), from_samples(Y), action, kernel, "symk")
        other = mmd_invariant(from_samples(moved), from_samples(Y), action, kernel, "symk")
        assert other == pytest.approx(base, abs=1e-10)


def test_default_path():
    assert default_path(GroupAction.rotation(4)) is MmdPath.ORBIT
    assert default_path(GroupAction.rotation(16)) is MmdPath.SYMMETRIZED_KERNEL
    assert default_path(GroupAction.translation(64)) is MmdPath.ORBIT


def test_symmetrized_kernel_needs_an_invariant_kernel():
    with pytest.raises(UnsupportedOperationError):
        mmd_invariant(from_samples([0.1]), from_samples([0.2]), GroupAction.translation(4),
                      KernelSpec.gaussian(0.1), "symk")
    with pytest.raises(ArgumentError):
        mmd_invariant(from_samples([0.1]), from_samples([0.2]), GroupAction.trivial(),
                      KernelSpec.gaussian(0.1), "fast")


def test_estimate_report():
    report = estimate_mmd(from_samples([[0.0, 0.0]]), from_samples([[1.0, 0.0]]), GroupAction.rotation(16),
                          KernelSpec.gaussian(1.0))
    assert report.divergence == "mmd"
    assert report.diagnostics["path"] == "symk"
    assert report.value == pytest.approx(math.sqrt(max(report.diagnostics["mmd_squared"], 0.0)))


def test_kernel_invariance_check():
    kernel = KernelSpec.gaussian(0.3)
    rot = GroupAction.rotation(8)
    assert check_kernel_invariance(rot, kernel, fundamental_grid(rot, 8)).invariant

    trans = GroupAction.translation(4)
    report = check_kernel_invariance(trans, kernel, [[0.1], [0.9]])
    assert not report.invariant
    assert report.max_deviation > 0.1


def test_c_sigma_k_trivial_group():
    estimate = estimate_c_sigma_k(GroupAction.trivial(), KernelSpec.gaussian(1.0), [[0.5, 0.5]])
    assert estimate.value == 0.0
    assert estimate.trivial


def test_c_sigma_k_quarter_turn_chord():
    s, rho = 0.5, 0.7
    estimate = estimate_c_sigma_k(GroupAction.rotation(4), KernelSpec.gaussian(s), [[rho, 0.0]])
    assert estimate.value == pytest.approx(math.exp(-rho ** 2 / s ** 2), rel=1e-12)
    assert estimate.argmax_element in (1, 3)
    assert not estimate.fixed_point


def test_c_sigma_k_origin_violates_decay():
    action = GroupAction.rotation(4)
    estimate = estimate_c_sigma_k(action, KernelSpec.gaussian(0.1), fundamental_grid(action, 8, min_radius=0.0))
    assert estimate.value == 1.0
    assert estimate.fixed_point
    np.testing.assert_array_equal(estimate.argmax_point, [0.0, 0.0])


def test_c_sigma_k_decreases_with_bandwidth():
    action = GroupAction.rotation(16)
    grid = fundamental_grid(action, 32, min_radius=1e-6)
    values = [estimate_c_sigma_k(action, KernelSpec.gaussian(2 * math.pi / m), grid).value for m in (6, 24, 96)]
    assert values[0] >= values[1] >= values[2]


def test_c_sigma_k_empty_grid():
    with pytest.raises(ArgumentError):
        estimate_c_sigma_k(GroupAction.rotation(4), KernelSpec.gaussian(1.0), np.zeros((0, 2)))


def test_c_big():
    assert c_big(1, 0.3) == 1.0
    assert c_big(4, 0.0) == 0.5
    assert c_big(10 ** 6, 0.25) == pytest.approx(math.sqrt((1 + 0.25 * (10 ** 6 - 1)) / 10 ** 6), rel=1e-15)
    assert c_big(10 ** 6, 0.25) == pytest.approx(0.50000075, abs=1e-8)
    for order, c in [(0, 0.5), (4, -0.1), (4, 1.5), (2.5, 0.1)]:
        with pytest.raises(ArgumentError):
            c_big(order, c)


def test_permutation_test_separates_distinct_laws():
    kernel = KernelSpec.gaussian(0.3)
    X = sample_disk(1, 300, seed=1)
    Y = sample_disk(1, 300, seed=2) + np.array([0.5, 0.0])
    result = mmd_permutation_test(X, Y, kernel, permutations=50, seed=3)
    assert result.p_value == pytest.approx(1 / 51)
    assert result.statistic > 0


def test_permutation_test_accepts_same_law():
    kernel = KernelSpec.gaussian(0.3)
    result = mmd_permutation_test(sample_disk(4, 300, seed=1), sample_disk(4, 300, seed=2), kernel,
                                  permutations=99, seed=0)
    assert 0.0 < result.p_value <= 1.0
    assert result.permutations == 99

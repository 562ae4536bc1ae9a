import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from symdiv import w1 as w1_module
from symdiv.errors import ArgumentError, ResourceError, UnsupportedOperationError
from symdiv.groups import GroupAction, apply_points
from symdiv.measures import EmpiricalMeasure, from_samples
from symdiv.samplers import sample_disk, sample_wss1d
from symdiv.streams import generator
from symdiv.w1 import W1Config, W1Method, estimate_w1, w1_1d, w1_exact, w1_invariant, w1_quotient


def lp_oracle(P, Q, L=1.0):
    """Dense transport LP solved by HiGHS, independent of the network simplex."""
    m, n = P.size, Q.size
    cost = L * cdist(P.points, Q.points)
    rows = np.kron(np.eye(m), np.ones((1, n)))
    cols = np.kron(np.ones((1, m)), np.eye(n))
    A_eq = np.vstack((rows, cols))
    b_eq = np.concatenate((P.weights, Q.weights))
    result = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert result.status == 0
    return result.fun


def random_measure(rng, size, dim):
    weights = rng.random(size) + 0.05
    return EmpiricalMeasure.from_atoms(rng.normal(size=(size, dim)), weights / weights.sum())


def test_matches_lp_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        dim = int(rng.integers(1, 3))
        P = random_measure(rng, int(rng.integers(1, 9)), dim)
        Q = random_measure(rng, int(rng.integers(1, 9)), dim)
        exact = w1_exact(P, Q)
        assert exact == pytest.approx(lp_oracle(P, Q), abs=1e-9)
        if dim == 1:
            assert w1_1d(P, Q) == pytest.approx(exact, abs=1e-10)


def test_two_deltas():
    assert w1_1d(from_samples([0.0]), from_samples([1.0])) == pytest.approx(1.0)
    assert w1_exact(from_samples([[0.0, 0.0]]), from_samples([[3.0, 4.0]]), L=2.0) == pytest.approx(10.0)


def test_identical_measures_are_at_distance_zero(rng):
    P = from_samples(rng.normal(size=(30, 2)))
    assert w1_exact(P, P) == pytest.approx(0.0, abs=1e-12)
    assert w1_invariant(P, P, GroupAction.rotation(3)) == pytest.approx(0.0, abs=1e-12)


def test_argument_errors():
    with pytest.raises(ArgumentError):
        w1_exact(from_samples([0.0]), from_samples([[0.0, 0.0]]))
    with pytest.raises(ArgumentError):
        w1_1d(from_samples([[0.0, 0.0]]), from_samples([[1.0, 0.0]]))
    with pytest.raises(ArgumentError):
        w1_exact(from_samples([0.0]), from_samples([1.0]), L=0.0)
    with pytest.raises(ArgumentError):
        W1Config(method="simplex")


def test_quotient_matches_orbit_expansion():
    rng = np.random.default_rng(7)
    for trial in range(100):
        order = int(rng.choice([2, 4, 8]))
        action = GroupAction.rotation(order)
        P = from_samples(sample_disk(order, int(rng.integers(1, 7)), seed=2 * trial))
        Q = from_samples(sample_disk(order, int(rng.integers(1, 7)), seed=2 * trial + 1))
        expanded = w1_invariant(P, Q, action, W1Config(method=W1Method.TRANSPORT_LP))
        assert w1_quotient(P, Q, action) == pytest.approx(expanded, abs=1e-9)


def test_quotient_needs_an_isometric_action():
    P, Q = from_samples([0.1]), from_samples([0.6])
    with pytest.raises(UnsupportedOperationError):
        w1_quotient(P, Q, GroupAction.translation(2))


def test_equal_orbits_have_zero_invariant_distance():
    P, Q = from_samples([[1.0, 0.0]]), from_samples([[0.0, 1.0]])
    assert w1_exact(P, Q) == pytest.approx(np.sqrt(2.0))
    assert w1_invariant(P, Q, GroupAction.rotation(4)) == pytest.approx(0.0, abs=1e-12)


def test_translation_invariant_distance_in_1d():
    P, Q = from_samples([0.1]), from_samples([0.6])
    assert w1_invariant(P, Q, GroupAction.translation(2)) == pytest.approx(0.0, abs=1e-12)
    assert w1_invariant(P, Q, GroupAction.trivial()) == pytest.approx(0.5)


def _random_orbit_copies(action, points, seed):
    rng = generator(seed)
    elements = rng.integers(0, action.order, size=len(points))
    out = np.array(points, dtype=float)
    for k in range(action.order):
        mask = elements == k
        if np.any(mask):
            out[mask] = apply_points(action, k, points[mask])
    return out


@pytest.mark.parametrize("group", ["rot:4", "trans1d:4"])
def test_orbit_representatives_do_not_matter(group):
    action = GroupAction.parse(group)
    for trial in range(50):
        if action.dim == 1:
            X, Y = sample_wss1d(4, 20, seed=trial), sample_wss1d(4, 20, seed=1000 + trial)
        else:
            X, Y = sample_disk(4, 12, seed=trial), sample_disk(4, 12, seed=1000 + trial)
        base = w1_invariant(from_samples(X), from_samples(Y), action)
        moved = w1_invariant(from_samples(_random_orbit_copies(action, X, trial)),
                             from_samples(_random_orbit_copies(action, Y, trial + 1)), action)
        assert moved == pytest.approx(base, abs=1e-9)


def test_auto_method_selection(monkeypatch):
    P1, Q1 = from_samples(sample_wss1d(4, 10, seed=1)), from_samples(sample_wss1d(4, 10, seed=2))
    assert estimate_w1(P1, Q1, GroupAction.translation(4)).diagnostics["method"] == "cdf1d"

    P2, Q2 = from_samples(sample_disk(4, 10, seed=1)), from_samples(sample_disk(4, 10, seed=2))
    action = GroupAction.rotation(4)
    report = estimate_w1(P2, Q2, action)
    assert report.diagnostics["method"] == "lp"
    assert report.divergence == "w1"

    monkeypatch.setattr(w1_module, "LP_GUARD", 500)
    quotient = estimate_w1(P2, Q2, action)
    assert quotient.diagnostics["method"] == "quotient"
    assert quotient.value == pytest.approx(report.value, abs=1e-9)


def test_resource_guard(monkeypatch):
    monkeypatch.setattr(w1_module, "LP_GUARD", 10)
    P, Q = from_samples(np.arange(4.0).reshape(-1, 1)), from_samples(np.arange(4.0).reshape(-1, 1) + 0.5)
    with pytest.raises(ResourceError):
        w1_exact(P, Q)


def test_lipschitz_scaling(rng):
    P, Q = random_measure(rng, 5, 2), random_measure(rng, 6, 2)
    assert w1_exact(P, Q, L=3.0) == pytest.approx(3.0 * w1_exact(P, Q), rel=1e-12)


@pytest.mark.parametrize("group", ["trivial", "rot:4", "trans1d:3"])
def test_metric_axioms_on_random_triples(group):
    action = GroupAction.parse(group)
    dim = action.dim or 2
    rng = np.random.default_rng(len(group))
    for _ in range(30):
        if dim == 1:
            P, Q, R = (from_samples(rng.random((int(rng.integers(1, 8)), 1))) for _ in range(3))
        else:
            P, Q, R = (random_measure(rng, int(rng.integers(1, 7)), 2) for _ in range(3))
        pq, qp = w1_invariant(P, Q, action), w1_invariant(Q, P, action)
        pr, qr = w1_invariant(P, R, action), w1_invariant(Q, R, action)
        assert min(pq, pr, qr) >= -1e-9
        assert pq == pytest.approx(qp, abs=1e-9)
        assert pr <= pq + qr + 1e-9

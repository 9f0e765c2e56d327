import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catr.optim import OptimizerOptions, constrained_minimize, ga_minimize

BOX6 = (-5 * np.ones(6), 5 * np.ones(6))


def sphere(x):
    return float(x @ x)


def test_sphere_with_polish():
    r = ga_minimize(sphere, BOX6, opts=OptimizerOptions(population=20, max_iterations=20), local_refine=True)
    assert r.best_value < 1e-2
    assert len(r.history) == 21


def test_plain_ga_improves_on_sphere():
    r = ga_minimize(sphere, BOX6)
    assert r.best_value < 0.2 * r.history[0]
    assert r.evaluations >= 20


def test_lamarckian_step_converges_early():
    plain = ga_minimize(sphere, BOX6)
    r = ga_minimize(sphere, BOX6, generation_refine=40)
    h = np.array(r.history)
    assert h[5] < 0.01 * h[0] and h[5] < 0.01 * plain.history[5]
    assert r.best_value < 1e-5


def test_degenerate_box():
    x = np.array([1.0, -2.0, 3.0])
    r = ga_minimize(sphere, (x, x))
    assert np.array_equal(r.best_point, x)
    assert r.history == [r.history[0]] * len(r.history)


def test_same_seed_same_result():
    a = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=7))
    b = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=7))
    c = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=8))
    assert np.array_equal(a.best_point, b.best_point) and a.history == b.history
    assert not np.array_equal(a.best_point, c.best_point)


def test_worker_count_does_not_change_result():
    a = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=3, workers=1))
    b = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=3, workers=4))
    assert np.array_equal(a.best_point, b.best_point) and a.history == b.history


def test_vectorized_matches_scalar():
    a = ga_minimize(sphere, BOX6, opts=OptimizerOptions(seed=2))
    b = ga_minimize(lambda X: np.einsum("ij,ij->i", X, X), BOX6, opts=OptimizerOptions(seed=2), vectorized=True)
    assert np.array_equal(a.best_point, b.best_point)


@given(st.integers(0, 2**32), st.integers(1, 5))
def test_history_monotone_and_in_box(seed, dim):
    lo, hi = -np.arange(1, dim + 1, dtype=float), np.arange(1, dim + 1, dtype=float) * 2
    seen = []

    def f(x):
        seen.append(x.copy())
        return float(np.sum(np.cos(3 * x) + 0.1 * x * x))

    r = ga_minimize(f, (lo, hi), opts=OptimizerOptions(population=8, elite=3, max_iterations=6, seed=seed))
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))
    P = np.array(seen)
    assert np.all(P >= lo) and np.all(P <= hi)
    assert r.evaluations >= 8


def test_discrete_dims_stay_in_set():
    vals = [1.0, 3.0, 5.0]
    seen = []

    def f(x):
        seen.append(x[1])
        return (x[0] - 0.3) ** 2 + (x[1] - 3.2) ** 2

    r = ga_minimize(f, ([0, 0], [1, 10]), {1: vals}, OptimizerOptions(seed=1))
    assert set(seen) <= set(vals)
    assert r.best_point[1] == 3.0


def test_penalty_constraint():
    r = ga_minimize(
        sphere, (-np.ones(2) * 3, np.ones(2) * 3),
        opts=OptimizerOptions(population=30, elite=10, max_iterations=40, seed=0, feasibility_tol=1e-2),
        constraints=lambda x: np.array([x[0] + x[1] - 2.0]),
        local_refine=True,
    )
    assert r.best_point == pytest.approx([1.0, 1.0], abs=2e-2)


def test_initial_individual_is_kept():
    x0 = np.zeros(6)
    r = ga_minimize(sphere, BOX6, initial=[x0])
    assert r.best_value == 0.0


def test_options_validation():
    for kw in (dict(elite=0), dict(elite=30), dict(max_iterations=0), dict(seed=-1), dict(workers=0)):
        with pytest.raises(ValueError):
            OptimizerOptions(**kw)
    with pytest.raises(ValueError):
        ga_minimize(sphere, (np.ones(2), np.zeros(2)))


def test_equality_constrained_scalar():
    r = constrained_minimize(lambda x: float(x[0] ** 2), lambda x: [x[0] - 1.0], ([-5.0], [5.0]), [0.0])
    assert r.feasible
    assert r.best_point[0] == pytest.approx(1.0, abs=1e-4)


def test_linear_equality_matches_projection():
    a = np.array([2.0, -1.0, 0.5])
    c, b = np.array([1.0, 2.0, -1.0]), 1.5
    # KKT: x = a - lambda c with c.x = b
    lam = (c @ a - b) / (c @ c)
    x_star = a - lam * c
    r = constrained_minimize(
        lambda x: float((x - a) @ (x - a)), lambda x: [c @ x - b], (-10 * np.ones(3), 10 * np.ones(3)), np.zeros(3)
    )
    assert r.feasible
    assert r.best_point == pytest.approx(x_star, abs=1e-4)


def test_infeasible_equality_reported():
    r = constrained_minimize(lambda x: float(x[0] ** 2), lambda x: [x[0] - 10.0], ([-5.0], [5.0]), [0.0])
    assert not r.feasible
    assert r.max_violation == pytest.approx(5.0, abs=1e-6)


def test_inequality_constraint():
    r = constrained_minimize(
        sphere, None, (-np.ones(2) * 2, np.ones(2) * 2), [1.5, 1.5], inequality=lambda x: [1.0 - x[0]]
    )
    assert r.feasible
    assert r.best_point == pytest.approx([1.0, 0.0], abs=1e-4)

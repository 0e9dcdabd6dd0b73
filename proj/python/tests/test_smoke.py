import math

import numpy as np
import pytest

import splinemart as sm


def test_partition_of_unity():
    knots = sm.realize({"family": "dyadic-dense"}, 3, 15)
    rng = np.random.default_rng(0)
    for t in rng.random(50):
        _, values = sm.eval_basis(knots, 3, t)
        assert abs(values.sum() - 1.0) <= 1e-12
        assert (values >= 0).all()


def test_gram_k2_single_span():
    g = sm.gram_matrix([0, 0, 1, 1], 2)
    assert np.allclose(g, [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-15)
    a = sm.dual_coefficients([0, 0, 1, 1], 2)
    assert np.allclose(a @ g, np.eye(2), atol=1e-12)


def test_toeplitz_rate():
    knots = np.concatenate([[0, 0], np.linspace(0, 1, 202)[1:-1], [1, 1]])
    fit = sm.fit_decay(knots, 2)
    assert abs(fit["q_hat"] - (2 - math.sqrt(3))) <= 0.02


def test_projection_reproduces_quadratics():
    knots = sm.realize({"family": "dyadic-dense"}, 3, 7)
    coeffs = sm.project_function(knots, 3, {"name": "square"})
    ts = np.linspace(0, 1, 33)
    assert np.max(np.abs(sm.evaluate(knots, 3, coeffs[:, 0], ts) - ts**2)) <= 1e-12


def test_insertion_preserves_function():
    knots = [0, 0, 0.5, 1, 1]
    new_knots, new_coeffs = sm.insert_knot(knots, 2, [0.0, 2.0, 1.0], 0.75)
    assert len(new_knots) == 6
    ts = np.linspace(0, 1, 101)
    assert np.allclose(sm.evaluate(knots, 2, [0.0, 2.0, 1.0], ts), sm.evaluate(new_knots, 2, new_coeffs, ts), atol=1e-14)


def test_measure_projection_mass():
    knots = sm.realize({"family": "dyadic-dense"}, 2, 31)
    coeffs = sm.project_measure(knots, 2, {"name": "dirac", "at": 1 / 3})
    widths = np.array([(knots[i + 2] - knots[i]) / 2 for i in range(len(knots) - 2)])
    assert abs(coeffs[:, 0] @ widths - 1.0) <= 1e-12


def test_martingale_consistency():
    defect = sm.martingale_defect({"family": "dyadic-dense"}, 3, {"name": "sin2pi"}, [7, 15, 31])
    assert defect <= 1e-9


def test_run_experiment_and_config_errors():
    passed, summary = sm.run_experiment(
        {"experiment": "tower-check", "k": 2, "n_schedule": [3, 7, 15], "function": "sin2pi"}
    )
    assert passed and summary["verdict"] == "PASS"
    with pytest.raises(sm.ConfigError, match=r":\d+: "):
        sm.run_experiment('{\n"experiment": "tower-check",\n"n_schedule": [7, 3],\n"function": "sin2pi"}')


def test_registry():
    reg = sm.registry()
    assert "converge" in reg["experiments"]

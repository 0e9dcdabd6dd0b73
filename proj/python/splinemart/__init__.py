"""Python access to the splinemart library.

Records (knot programs, functions, measures, experiment configs) are plain
dicts; they are serialized to JSON before crossing into the extension.
"""

import json

import numpy as np

from . import _splinemart as _ext
from ._splinemart import ConfigError, SplinemartError

__all__ = [
    "ConfigError",
    "SplinemartError",
    "realize",
    "mesh_width",
    "eval_basis",
    "basis_value",
    "evaluate",
    "insert_knot",
    "gram_matrix",
    "dual_coefficients",
    "fit_decay",
    "project_function",
    "project_measure",
    "martingale_defect",
    "run_experiment",
    "registry",
]


def _record(x):
    return x if isinstance(x, str) and x.lstrip().startswith("{") else json.dumps(x)


def realize(program, order, n):
    """Augmented knot vector of the first n knots of a program record."""
    return np.asarray(_ext.realize(_record(program), order, n))


def mesh_width(knots):
    return _ext.mesh_width(list(knots))


def eval_basis(knots, order, t):
    """(first index, values of the k basis functions that may be nonzero at t)."""
    first, values = _ext.eval_basis(list(knots), order, t)
    return first, np.asarray(values)


def basis_value(knots, order, i, t):
    return _ext.basis_value(list(knots), order, i, t)


def evaluate(knots, order, coeffs, ts):
    c = np.asarray(coeffs, dtype=float)
    if c.ndim == 1:
        return _ext.evaluate(list(knots), order, c[:, None], list(np.atleast_1d(ts)))[:, 0]
    return _ext.evaluate(list(knots), order, c, list(np.atleast_1d(ts)))


def insert_knot(knots, order, coeffs, x):
    c = np.asarray(coeffs, dtype=float)
    flat = c.ndim == 1
    new_knots, new_coeffs = _ext.insert_knot(list(knots), order, c[:, None] if flat else c, x)
    return np.asarray(new_knots), (new_coeffs[:, 0] if flat else new_coeffs)


def gram_matrix(knots, order):
    return _ext.gram_matrix(list(knots), order)


def dual_coefficients(knots, order):
    return _ext.dual_coefficients(list(knots), order)


def fit_decay(knots, order):
    return _ext.fit_decay(list(knots), order)


def project_function(knots, order, function, quad_depth=2):
    return _ext.project_function(list(knots), order, _record(function), quad_depth)


def project_measure(knots, order, measure, quad_depth=2):
    return _ext.project_measure(list(knots), order, _record(measure), quad_depth)


def martingale_defect(program, order, function, schedule):
    return _ext.martingale_defect(_record(program), order, _record(function), list(schedule))


def run_experiment(config):
    """Runs an experiment config (dict or JSON text); returns (passed, summary dict)."""
    passed, summary = _ext.run_experiment(_record(config))
    return passed, json.loads(summary)


def registry():
    return json.loads(_ext.registry())

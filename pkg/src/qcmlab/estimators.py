"""scikit-learn transformers over the kernel map and Riesz potentials.

Only pointwise evaluators fit the ``fit``/``transform`` contract; the randomized
checks return ``CheckReport`` objects and stay plain functions.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .io import parse_measure
from .mapping import KernelMapEval, f_mu, riesz_potential, v_mu
from .quadrature import QuadratureConfig


def _measure(spec):
    return parse_measure(spec) if isinstance(spec, str) else spec


class _MeasureTransformer(TransformerMixin, BaseEstimator):
    def _config(self):
        return QuadratureConfig(truncation_radius=self.truncation_radius, rel_tol=self.rel_tol)

    def _check_X(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X


class KernelMapTransformer(_MeasureTransformer):
    """Rows ``x`` to ``f_mu(x)``, or to ``(f_mu(x), v_mu(x))`` with ``with_potential``."""

    def __init__(self, measure="uniform-ball", truncation_radius=1e3, rel_tol=1e-6, route="origin",
                 with_potential=False):
        self.measure = measure
        self.truncation_radius = truncation_radius
        self.rel_tol = rel_tol
        self.route = route
        self.with_potential = with_potential

    def fit(self, X=None, y=None):
        self.evaluator_ = KernelMapEval(_measure(self.measure), self._config(), route=self.route)
        self.n_features_in_ = self.evaluator_.n
        if X is not None:
            self._check_X(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "evaluator_")
        X = self._check_X(X)
        F = np.array([f_mu(self.evaluator_, x) for x in X]).reshape(len(X), -1)
        if self.with_potential:
            V = np.array([v_mu(self.evaluator_, x) for x in X])[:, None]
            return np.hstack([F, V])
        return F


class RieszPotentialTransformer(_MeasureTransformer):
    """Rows ``x`` to ``I_gamma mu(x)`` (one column); ``gamma=None`` means ``n - 1``."""

    def __init__(self, measure="uniform-ball", gamma=None, truncation_radius=1e3, rel_tol=1e-6):
        self.measure = measure
        self.gamma = gamma
        self.truncation_radius = truncation_radius
        self.rel_tol = rel_tol

    def fit(self, X=None, y=None):
        self.measure_ = _measure(self.measure)
        self.n_features_in_ = self.measure_.n
        self.gamma_ = float(self.gamma) if self.gamma is not None else self.n_features_in_ - 1.0
        if X is not None:
            self._check_X(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "measure_")
        X = self._check_X(X)
        cfg = self._config()
        return np.array([[riesz_potential(self.measure_, self.gamma_, x, cfg)] for x in X])

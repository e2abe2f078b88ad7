"""Stateless scikit-learn style wrappers for batch evaluation.

Each estimator takes a 2-D array, one object per row.  ``fit`` only validates
the input shape and records ``n_features_in_``; there is nothing to learn.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from corrbounds._validation import check_rows
from corrbounds.boxes import FIELDS, Behavior222, to_probabilities
from corrbounds.dicke import DickeDiagonalState, ppt_all, sds_fit
from corrbounds.qbounds import npa1_satisfied, npa1ab_feasible
from corrbounds.tsirelson import TsirelsonFunctional, classical_max, nosig_max, tsirelson_bound


class _RowEstimator(BaseEstimator):
    _n_features: int | None = None

    def _width(self) -> int:
        return self._n_features

    def fit(self, X, y=None):
        X = check_rows(X, self._width())
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        return check_rows(X, self.n_features_in_)


class BehaviorToProbabilities(TransformerMixin, _RowEstimator):
    """Expectation coordinates (8 columns) to flattened p[a, b, x, y] (16 columns)."""

    _n_features = len(FIELDS)

    def transform(self, X):
        X = self._check(X)
        return np.array([to_probabilities(Behavior222.from_array(r)).p.ravel() for r in X])


class QuantumBoundClassifier(ClassifierMixin, _RowEstimator):
    """Predicts 1 when a behavior passes the chosen quantum necessary condition."""

    _n_features = len(FIELDS)

    def __init__(self, criterion: str = "npa1", seed: int = 0):
        self.criterion = criterion
        self.seed = seed

    def fit(self, X, y=None):
        if self.criterion not in ("npa1", "npa1ab"):
            raise ValueError(f"criterion must be 'npa1' or 'npa1ab', got {self.criterion!r}")
        self.classes_ = np.array([0, 1])
        return super().fit(X, y)

    def predict(self, X):
        X = self._check(X)
        test = npa1_satisfied if self.criterion == "npa1" else (
            lambda b: npa1ab_feasible(b, seed=self.seed))
        return np.array([int(test(Behavior222.from_array(r))) for r in X])


class PPTClassifier(ClassifierMixin, _RowEstimator):
    """Rows are Dicke populations chi_0..chi_N; predicts 1 for PPT across every cut."""

    def __init__(self, N: int = 4):
        self.N = N

    def _width(self) -> int:
        return self.N + 1

    def fit(self, X, y=None):
        self.classes_ = np.array([0, 1])
        return super().fit(X, y)

    def predict(self, X):
        X = self._check(X)
        return np.array([int(ppt_all(DickeDiagonalState(self.N, r))) for r in X])


class SeparabilityCertifier(PPTClassifier):
    """Predicts 1 when an explicit separable decomposition is found."""

    def __init__(self, N: int = 4, seed: int = 0):
        self.N = N
        self.seed = seed

    def predict(self, X):
        X = self._check(X)
        return np.array([int(sds_fit(DickeDiagonalState(self.N, r), seed=self.seed).certified)
                         for r in X])


class BellBoundTransformer(TransformerMixin, _RowEstimator):
    """Rows of 8 bipartite coefficients to columns (classical, quantum, no-signalling) maxima."""

    _n_features = 8

    def transform(self, X):
        X = self._check(X)
        out = []
        for r in X:
            f = TsirelsonFunctional.from_bipartite_vector(r)
            out.append((classical_max(f), tsirelson_bound(f), nosig_max(f)))
        return np.array(out)

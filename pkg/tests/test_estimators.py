import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from corrbounds.estimators import (BehaviorToProbabilities, BellBoundTransformer, PPTClassifier,
                                   QuantumBoundClassifier, SeparabilityCertifier)

CHSH_ROWS = np.array([[0, 0, 0, 0, 0.7, 0.7, 0.7, -0.7],
                      [0, 0, 0, 0, 0.75, 0.75, 0.75, -0.75]])


def test_probabilities_shape_and_norm():
    P = BehaviorToProbabilities().fit_transform(CHSH_ROWS)
    assert P.shape == (2, 16)
    assert np.allclose(P.reshape(2, 2, 2, 2, 2).sum(axis=(1, 2)), 1.0)


@pytest.mark.parametrize("criterion", ["npa1", "npa1ab"])
def test_quantum_classifier(criterion):
    # 0.7 < 1/sqrt(2) < 0.75 on the CHSH line
    clf = QuantumBoundClassifier(criterion).fit(CHSH_ROWS)
    assert list(clf.predict(CHSH_ROWS)) == [1, 0]


def test_unknown_criterion():
    with pytest.raises(ValueError):
        QuantumBoundClassifier("nope").fit(CHSH_ROWS)


def test_not_fitted_and_wrong_width():
    with pytest.raises(NotFittedError):
        PPTClassifier(2).predict([[0, 1, 0]])
    with pytest.raises(ValueError):
        PPTClassifier(2).fit([[0.5, 0.5]])


def test_ppt_and_certifier():
    X = [[0, 1, 0], [0.25, 0.5, 0.25]]
    assert list(PPTClassifier(2).fit(X).predict(X)) == [0, 1]
    assert list(SeparabilityCertifier(2).fit(X).predict(X)) == [0, 1]


def test_bell_bounds():
    out = BellBoundTransformer().fit_transform([[0, 0, 0, 0, 1, 1, 1, -1]])
    assert np.allclose(out, [[2, 2 * np.sqrt(2), 4]], atol=1e-6)


def test_get_params():
    assert QuantumBoundClassifier("npa1ab", seed=3).get_params() == {"criterion": "npa1ab", "seed": 3}

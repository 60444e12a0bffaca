import numpy as np
import pytest

from rbnn import data as D
from rbnn.network import Activation, Topology


@pytest.fixture(scope="session")
def iris_dataset():
    raw = D.load_iris()
    return D.preprocess(raw, D.DataSchema(label_column="species", normalize="none"))


@pytest.fixture(scope="session")
def iris_split(iris_dataset):
    train, test = D.split(iris_dataset, 0.2, seed=2)
    return D.normalize_train_test(train, test)


@pytest.fixture
def blob_dataset():
    """Linearly separable 2-class blobs: 2 features, 40 rows."""
    rng = np.random.default_rng(123)
    a = rng.normal(loc=[-1.5, -1.5], scale=0.4, size=(20, 2))
    b = rng.normal(loc=[1.5, 1.5], scale=0.4, size=(20, 2))
    X = np.vstack([a, b])
    Y = np.zeros((40, 2))
    Y[:20, 0] = 1.0
    Y[20:, 1] = 1.0
    return D.Dataset(X, Y, ("a", "b"), ("f0", "f1"))


@pytest.fixture
def small_topo():
    return Topology((2, 2, 1), (Activation.SIGMOID, Activation.SIGMOID))


@pytest.fixture
def blob_topo():
    return Topology((2, 4, 2), (Activation.TANH, Activation.SOFTMAX))

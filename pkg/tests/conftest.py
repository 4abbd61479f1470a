import numpy as np
import pytest

from causal_al import FeatureTable


@pytest.fixture
def simple_table():
    return FeatureTable(
        row_ids=("a", "b", "c"),
        feature_names=("f1", "f2", "y"),
        values=np.array([[1.0, 4.0, 0.5], [2.0, 5.0, 1.5], [3.0, 6.0, 2.5]]),
        target_names=("y",),
    )


def make_table(values, feature_names, target_names=(), prefix="r"):
    values = np.asarray(values, dtype=np.float64)
    return FeatureTable(
        row_ids=tuple(f"{prefix}{i}" for i in range(values.shape[0])),
        feature_names=tuple(feature_names),
        values=values,
        target_names=tuple(target_names),
    )

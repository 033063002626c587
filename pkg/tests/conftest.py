import pytest

from dataset_builders import make_dataset


@pytest.fixture
def tiny_dataset():
    return make_dataset(
        [
            [(0, (1.0, 0.0)), (0, (0.0, 1.0)), (1, (1.0, 1.0))],
            [(0, (2.0, 4.0))],
            [(1, (0.5, 0.5)), (1, (0.25, 0.75))],
        ],
        num_classes=2,
    )

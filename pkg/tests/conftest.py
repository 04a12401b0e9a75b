import os

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ADULT_CSV = os.path.join(ROOT, "data", "adult.csv")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    return str(path)


@pytest.fixture
def toy_csv(tmp_path):
    """400 rows; label is 'hi' exactly when colour is red (plus one numeric column)."""
    g = np.random.default_rng(7)
    rows = []
    for i in range(400):
        colour = ["red", "green", "blue"][g.integers(0, 3)]
        size = int(g.integers(0, 100))
        shape = ["round", "square"][g.integers(0, 2)]
        rows.append((colour, size, shape, "hi" if colour == "red" else "lo"))
    return write_csv(tmp_path / "toy.csv", ["colour", "size", "shape", "label"], rows)

import numpy as np
import pytest

from boundarykit.grid import LabelMap


def blob_labels(rng, h, w, num_classes=4, blobs=6, ignore_frac=0.0):
    """Piecewise-constant label map made of overlapping rectangles."""
    d = np.full((h, w), int(rng.integers(num_classes)))
    for _ in range(blobs):
        y0, x0 = int(rng.integers(h)), int(rng.integers(w))
        d[y0:y0 + int(rng.integers(1, h + 1)), x0:x0 + int(rng.integers(1, w + 1))] = int(rng.integers(num_classes))
    if ignore_frac:
        d[rng.random((h, w)) < ignore_frac] = 255
    return LabelMap(d, num_classes)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

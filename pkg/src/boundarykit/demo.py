"""Deterministic synthetic street-scene pair used by ``augment demo``."""
import numpy as np

from .grid import LabelMap
from .viz import CITYSCAPES_PALETTE

ROAD, BUILDING, POLE, VEGETATION, SKY, PERSON, CAR = 0, 2, 5, 8, 10, 11, 13


def _render(labels, rng):
    palette = np.array([CITYSCAPES_PALETTE.get(i, (0, 0, 0)) for i in range(256)], dtype=np.int16)
    noise = rng.integers(-12, 13, labels.shape + (3,))
    return np.clip(palette[labels] + noise, 0, 255).astype(np.uint8)


def demo_pair(height=64, width=96):
    """Return ``(target_img, target_pseudo, dest_img, dest_labels)``."""
    rng = np.random.default_rng(2022)
    dest = np.full((height, width), SKY)
    dest[height // 4:, :] = BUILDING
    dest[height // 2:, :] = ROAD
    dest[height // 3:height // 2, width // 2:] = VEGETATION

    target = np.full((height, width), SKY)
    target[height // 5:, :] = BUILDING
    target[3 * height // 5:, :] = ROAD
    target[height // 4:7 * height // 8, 10:22] = PERSON
    target[height // 2:7 * height // 8, 40:75] = CAR
    target[8:3 * height // 4, 84:88] = POLE
    # noisy pseudo-label border around the person
    ring = np.zeros_like(target, dtype=bool)
    ring[height // 4 - 1:7 * height // 8 + 1, 9:23] = True
    ring[height // 4 + 1:7 * height // 8 - 1, 11:21] = False
    flip = ring & (rng.random(target.shape) < 0.5)
    target[flip] = np.where(target[flip] == PERSON, BUILDING, PERSON)

    return (_render(target, rng), LabelMap(target, 19),
            _render(dest, rng), LabelMap(dest, 19))

"""Stage two: partition a rescaled reflection field into K phases.

Thresholding is completely independent of the decomposition solve, so
phase counts and thresholds can be explored freely without re-running
stage one.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .image_io import ImageIOError

# Fixed boundary palette (RGB in [0,1]), cycled for K > 6.
PALETTE = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.4, 1.0),
    (1.0, 0.8, 0.0),
    (1.0, 0.0, 1.0),
    (0.0, 1.0, 1.0),
)


@dataclass(frozen=True)
class Thresholds:
    """Strictly increasing threshold vector rho_0 = 0 < ... < rho_K = 1."""

    rho: tuple

    def __post_init__(self):
        rho = tuple(float(t) for t in self.rho)
        if len(rho) < 2:
            raise ValueError("need at least two thresholds (0 and 1)")
        if rho[0] != 0.0 or rho[-1] != 1.0:
            raise ValueError("thresholds must start at 0 and end at 1")
        if any(lo >= hi for lo, hi in zip(rho, rho[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_interior(cls, interior):
        """Build from the K-1 interior thresholds in (0, 1)."""
        return cls((0.0, *interior, 1.0))

    @property
    def K(self):
        return len(self.rho) - 1

    @property
    def interior(self):
        return self.rho[1:-1]


@dataclass
class LabelMap:
    """Per-pixel phase indices in 1..K plus the thresholds that made them."""

    labels: np.ndarray
    K: int
    thresholds: Thresholds


def threshold_phases(reflection, thresholds):
    """Assign phase i to pixels with rho_{i-1} <= R < rho_i.

    The input must already be rescaled to [0, 1].  The half-open
    intervals leave R = 1 uncovered; it is assigned to the top phase K,
    the only order-preserving choice.
    """
    reflection = np.asarray(reflection, dtype=np.float64)
    if reflection.size and (reflection.min() < 0.0 or reflection.max() > 1.0):
        raise ValueError("reflection must be rescaled to [0, 1]")
    if not isinstance(thresholds, Thresholds):
        thresholds = Thresholds(tuple(thresholds))
    interior = np.asarray(thresholds.interior)
    labels = np.searchsorted(interior, reflection.ravel(), side="right") + 1
    return LabelMap(labels.reshape(reflection.shape).astype(np.int32),
                    thresholds.K, thresholds)


def phase_mask(label_map, i):
    """Binary image of phase i (1 inside, 0 elsewhere)."""
    if not 1 <= i <= label_map.K:
        raise ValueError(f"phase index {i} outside 1..{label_map.K}")
    return (label_map.labels == i).astype(np.float64)


def boundary_mask(label_map):
    """Pixels whose 4-neighborhood contains a different label."""
    labels = label_map.labels
    mask = np.zeros(labels.shape, dtype=bool)
    mask[:-1, :] |= labels[:-1, :] != labels[1:, :]
    mask[1:, :] |= labels[1:, :] != labels[:-1, :]
    mask[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    mask[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    return mask


def render_overlay(label_map, base):
    """Draw phase boundaries over a grayscale base image, (H, W, 3) RGB.

    Boundary pixels take the palette color of their own phase; away from
    boundaries the base image shows through unchanged.
    """
    base = np.asarray(base, dtype=np.float64)
    if base.shape != label_map.labels.shape:
        raise ValueError("base image and label map dimensions differ")
    rgb = np.repeat(np.clip(base, 0.0, 1.0)[:, :, None], 3, axis=2)
    mask = boundary_mask(label_map)
    for i in range(1, label_map.K + 1):
        color = PALETTE[(i - 1) % len(PALETTE)]
        rgb[mask & (label_map.labels == i)] = color
    return rgb


def _gray_levels(k):
    if k == 1:
        return np.array([255], dtype=np.uint8)
    return np.round(255.0 * np.arange(k) / (k - 1)).astype(np.uint8)


def save_label_map(label_map, png_path):
    """Write labels as an 8-bit PNG (evenly spaced gray levels) + JSON sidecar.

    The sidecar records {K, thresholds, palette} so the gray values can be
    mapped back to phase indices.
    """
    png_path = Path(png_path)
    levels = _gray_levels(label_map.K)
    pixels = levels[label_map.labels - 1]
    try:
        Image.fromarray(pixels, mode="L").save(png_path, format="PNG")
        sidecar = {
            "K": label_map.K,
            "thresholds": list(label_map.thresholds.rho),
            "gray_levels": levels.tolist(),
            "palette": [list(c) for c in PALETTE[: max(label_map.K, 1)]],
        }
        png_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    except OSError as exc:
        raise ImageIOError(f"unwritable path: {png_path}: {exc}") from exc


def load_label_map(png_path):
    """Read back a label map written by :func:`save_label_map`."""
    png_path = Path(png_path)
    try:
        sidecar = json.loads(png_path.with_suffix(".json").read_text())
        with Image.open(png_path) as img:
            pixels = np.asarray(img)
    except OSError as exc:
        raise ImageIOError(f"unreadable file: {png_path}: {exc}") from exc
    levels = np.asarray(sidecar["gray_levels"], dtype=np.uint8)
    lookup = {int(level): i + 1 for i, level in enumerate(levels)}
    labels = np.vectorize(lookup.__getitem__, otypes=[np.int32])(pixels)
    return LabelMap(labels, int(sidecar["K"]), Thresholds(tuple(sidecar["thresholds"])))

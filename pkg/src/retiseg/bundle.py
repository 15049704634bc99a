"""Exploration bundle: a self-contained directory for stage-two tools.

A bundle carries the rescaled reflectance, the illumination, a preview of
the source image, and the solver metadata, so thresholds and phase counts
can be explored (including in the browser explorer) without touching the
solver again.  The manifest is versioned; readers must refuse bundles
with a different format version.
"""

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import image_io

FORMAT_VERSION = 1

_FIELD_FILES = {
    "reflectance": ("reflectance.f32", "reflectance.json", "reflectance.png"),
    "illumination": ("illumination.f32", "illumination.json", "illumination.png"),
}


class BundleError(Exception):
    """Raised for missing, corrupt, or version-mismatched bundles."""


@dataclass
class Bundle:
    """In-memory view of a loaded bundle directory."""

    reflectance: np.ndarray
    illumination: np.ndarray
    source: np.ndarray
    meta: dict
    bundle_id: str


def _reflectance_id(reflectance):
    blob = np.asarray(reflectance, dtype=np.float64).astype("<f4").tobytes(order="F")
    return hashlib.sha256(blob).hexdigest()[:16]


def write_bundle(out_dir, source, reflectance, illumination, solver_meta):
    """Write a bundle directory; returns the path of its manifest.

    ``reflectance`` must already be rescaled to [0, 1].  Re-exporting the
    same fields yields a byte-identical manifest except for the creation
    timestamp (the bundle id is a content hash of the reflectance).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reflectance = np.asarray(reflectance, dtype=np.float64)
    if reflectance.size and (reflectance.min() < 0.0 or reflectance.max() > 1.0):
        raise BundleError("bundle reflectance must be rescaled to [0, 1]")

    raw, _, png = _FIELD_FILES["reflectance"]
    image_io.save_field_raw(reflectance, out_dir / raw)
    image_io.save_image(reflectance, out_dir / png, clamp=True)
    raw, _, png = _FIELD_FILES["illumination"]
    image_io.save_field_raw(illumination, out_dir / raw)
    image_io.save_image(image_io.rescale_unit(illumination), out_dir / png, clamp=True)
    image_io.save_image(source, out_dir / "source.png", clamp=True)

    h, w = reflectance.shape
    manifest = {
        "format_version": FORMAT_VERSION,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "bundle_id": _reflectance_id(reflectance),
        "width": w,
        "height": h,
        "fields": {
            name: {"raw": files[0], "sidecar": files[1], "preview": files[2]}
            for name, files in _FIELD_FILES.items()
        },
        "source": {"preview": "source.png"},
        "solver": solver_meta,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest_path


def read_bundle(bundle_dir):
    """Load and validate a bundle directory."""
    bundle_dir = Path(bundle_dir)
    manifest_path = bundle_dir / "manifest.json"
    if not manifest_path.is_file():
        raise BundleError(f"no manifest.json in {bundle_dir}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BundleError(f"unreadable manifest in {bundle_dir}: {exc}") from exc

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleError(
            f"unsupported bundle version {version!r} (expected {FORMAT_VERSION})"
        )
    try:
        fields = manifest["fields"]
        reflectance = image_io.load_field_raw(bundle_dir / fields["reflectance"]["raw"])
        illumination = image_io.load_field_raw(bundle_dir / fields["illumination"]["raw"])
        source = image_io.load_image(bundle_dir / manifest["source"]["preview"])
    except (KeyError, image_io.ImageIOError) as exc:
        raise BundleError(f"corrupt bundle in {bundle_dir}: {exc}") from exc
    if reflectance.min() < 0.0 or reflectance.max() > 1.0:
        raise BundleError("bundle reflectance outside [0, 1]")
    return Bundle(
        reflectance=reflectance,
        illumination=illumination,
        source=source,
        meta=manifest,
        bundle_id=manifest.get("bundle_id", ""),
    )

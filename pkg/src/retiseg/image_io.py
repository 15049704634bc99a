"""Image loading, saving, and intensity-domain transforms.

Images and scalar fields are 2-D float64 numpy arrays of shape
(height, width), indexed ``field[row, col]``.  Whenever a field is
serialized as a flat vector (raw-float export), pixels are concatenated
column-wise, i.e. linear index ``col * height + row`` (Fortran order).
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luminance weights for RGB inputs.
_LUMA = np.array([0.299, 0.587, 0.114])

# Default floor for the log transform: one quantization step below the
# smallest positive 8-bit intensity, so log stays finite on zero pixels.
DEFAULT_LOG_FLOOR = 1.0 / 255.0


class ImageIOError(Exception):
    """Raised when an image or raw field cannot be read or written."""


def _read_pgm(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageIOError(f"unreadable file: {path}: {exc}") from exc

    # P5 header: magic, width, height, maxval, separated by whitespace,
    # with '#' comments allowed between tokens.
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageIOError(f"unreadable file: {path}: truncated header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise ImageIOError(f"unsupported format: {path}: not a binary PGM")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ImageIOError(f"unreadable file: {path}: bad header") from exc
    if width < 1 or height < 1:
        raise ImageIOError(f"unreadable file: {path}: zero-dimension image")
    if not 0 < maxval < 65536:
        raise ImageIOError(f"unreadable file: {path}: bad maxval {maxval}")

    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height
    raster = data[pos : pos + n * dtype.itemsize]
    if len(raster) < n * dtype.itemsize:
        raise ImageIOError(f"unreadable file: {path}: truncated raster")
    pixels = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    return pixels.reshape(height, width) / maxval


def _read_png(path):
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("LA", "RGBA"):
                img = img.convert("RGB" if mode == "RGBA" else "L")
                mode = img.mode
            arr = np.asarray(img)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageIOError(f"unreadable file: {path}: {exc}") from exc

    if arr.size == 0:
        raise ImageIOError(f"unreadable file: {path}: zero-dimension image")
    if mode == "L":
        return arr.astype(np.float64) / 255.0
    if mode in ("I", "I;16"):
        return arr.astype(np.float64) / 65535.0
    if mode == "RGB":
        return arr.astype(np.float64) @ _LUMA / 255.0
    raise ImageIOError(f"unsupported format: {path}: PNG mode {mode!r}")


def load_image(path):
    """Load a PGM (P5) or PNG image as an (H, W) float array in [0, 1].

    16-bit inputs are normalized by their maxval; RGB is reduced to
    luminance with BT.601 weights.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".png":
        return _read_png(path)
    raise ImageIOError(f"unsupported format: {path}: expected .pgm or .png")


def quantize_u8(field, clamp=False):
    """Quantize a [0, 1] field to uint8, rounding halves up (0.5 -> 128)."""
    field = np.asarray(field, dtype=np.float64)
    if clamp:
        field = np.clip(field, 0.0, 1.0)
    elif field.size and (field.min() < 0.0 or field.max() > 1.0):
        raise ValueError("field values outside [0, 1]; pass clamp=True to clip")
    return np.floor(field * 255.0 + 0.5).astype(np.uint8)


def save_image(field, path, clamp=False):
    """Write a field to an 8-bit grayscale PGM or PNG file.

    Round trip guarantee: load(save(x)) differs from clip(x, 0, 1) by at
    most 1/255 per pixel.
    """
    path = Path(path)
    pixels = quantize_u8(field, clamp=clamp)
    try:
        if path.suffix.lower() == ".pgm":
            header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode()
            path.write_bytes(header + pixels.tobytes())
        elif path.suffix.lower() == ".png":
            Image.fromarray(pixels, mode="L").save(path, format="PNG")
        else:
            raise ImageIOError(f"unsupported format: {path}: expected .pgm or .png")
    except OSError as exc:
        raise ImageIOError(f"unwritable path: {path}: {exc}") from exc


def save_image_rgb(rgb, path):
    """Write an (H, W, 3) float RGB array in [0, 1] to an 8-bit PNG."""
    path = Path(path)
    pixels = np.floor(np.clip(rgb, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    try:
        Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"unwritable path: {path}: {exc}") from exc


def to_log_domain(img, floor=DEFAULT_LOG_FLOOR):
    """Map intensities to the log domain: s = log(max(S, floor)).

    The floor (default 1/255) removes the log(0) singularity while leaving
    every positive 8-bit intensity untouched.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    return np.log(np.maximum(np.asarray(img, dtype=np.float64), floor))


def reflection_from_r(r):
    """Reflection R = exp(-r); requires r >= 0 so that R lies in (0, 1]."""
    r = np.asarray(r, dtype=np.float64)
    if r.size and r.min() < 0:
        raise ValueError("r must be nonnegative (R = exp(-r) must lie in (0, 1])")
    return np.exp(-r)


def rescale_unit(field):
    """Affinely rescale a field to [0, 1]; a constant field maps to 0.5."""
    field = np.asarray(field, dtype=np.float64)
    lo = field.min()
    hi = field.max()
    if hi == lo:
        return np.full_like(field, 0.5)
    return (field - lo) / (hi - lo)


def save_field_raw(field, path):
    """Write a field as little-endian float32, column-major, with a JSON sidecar.

    The sidecar (same stem, .json suffix) records
    {width, height, dtype: "f32le", order: "col"}.
    """
    path = Path(path)
    field = np.asarray(field, dtype=np.float64)
    try:
        path.write_bytes(field.astype("<f4").tobytes(order="F"))
        sidecar = {
            "width": int(field.shape[1]),
            "height": int(field.shape[0]),
            "dtype": "f32le",
            "order": "col",
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True))
    except OSError as exc:
        raise ImageIOError(f"unwritable path: {path}: {exc}") from exc


def load_field_raw(path):
    """Read a raw float32 field written by :func:`save_field_raw`."""
    path = Path(path)
    try:
        meta = json.loads(path.with_suffix(".json").read_text())
        blob = path.read_bytes()
    except OSError as exc:
        raise ImageIOError(f"unreadable file: {path}: {exc}") from exc
    if meta.get("dtype") != "f32le" or meta.get("order") != "col":
        raise ImageIOError(f"unsupported format: {path}: sidecar {meta}")
    w, h = int(meta["width"]), int(meta["height"])
    values = np.frombuffer(blob, dtype="<f4")
    if values.size != w * h:
        raise ImageIOError(f"unreadable file: {path}: size mismatch")
    return values.reshape((h, w), order="F").astype(np.float64)

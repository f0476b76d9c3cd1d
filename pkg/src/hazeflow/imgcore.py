"""Image representation, codecs and the small stencils shared by every pipeline.

Images are plain numpy arrays. An 8-bit image is ``uint8`` with shape
``(H, W)`` for grayscale or ``(H, W, 3)`` for RGB. The working
representation is ``float64`` with the same shapes and samples in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_SIGNATURES = {
    b"\x89PNG\r\n\x1a\n": "PNG",
    b"\xff\xd8\xff": "JPEG",
    b"P5": "PGM",
    b"P6": "PPM",
}


class ImageIOError(OSError):
    """The file could not be read or written."""


class UnsupportedFormatError(ValueError):
    """The file is not a PNG, JPEG, PGM (P5) or PPM (P6) stream."""


class CorruptImageError(ValueError):
    """The file claims a supported format but fails to decode."""


def _sniff(head: bytes) -> str | None:
    for magic, name in _SIGNATURES.items():
        if head.startswith(magic):
            return name
    return None


def load_image(path) -> np.ndarray:
    """Decode a PNG, JPEG, PGM or PPM file into a ``uint8`` array.

    Grayscale sources come back 2-D, colour sources ``(H, W, 3)``; alpha
    is dropped.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc

    fmt = _sniff(data[:8])
    if fmt is None:
        raise UnsupportedFormatError(f"{path}: unrecognised image signature")

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "LA", "1"):
                arr = np.asarray(im.convert("L"))
            elif mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr"):
                arr = np.asarray(im.convert("RGB"))
            else:
                raise UnsupportedFormatError(f"{path}: unsupported pixel mode {mode!r}")
    except UnsupportedFormatError:
        raise
    except Exception as exc:  # Pillow raises OSError/SyntaxError/ValueError on bad streams
        raise CorruptImageError(f"{path}: corrupt {fmt} stream: {exc}") from exc
    return np.ascontiguousarray(arr, dtype=np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit image as PNG."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise TypeError(f"save_image expects uint8, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    try:
        Image.fromarray(img).save(Path(path), format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def save_u16(field: np.ndarray, path) -> None:
    """Write a [0, 1] field as a 16-bit grayscale PNG."""
    q = np.floor(np.clip(field, 0.0, 1.0) * 65535.0 + 0.5).astype(np.uint16)
    try:
        Image.fromarray(q).save(Path(path), format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def load_u16(path) -> np.ndarray:
    """Read a 16-bit grayscale PNG written by :func:`save_u16` back to [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.float64)
    return arr / 65535.0


def to_unit(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=np.float64) / 255.0


def from_unit(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantise with round-half-up."""
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def invert(img: np.ndarray) -> np.ndarray:
    return 1.0 - img


def to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma for RGB input; 2-D input is returned as float."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img @ LUMA_WEIGHTS


def channels(img: np.ndarray) -> list[np.ndarray]:
    img = np.asarray(img)
    if img.ndim == 2:
        return [img]
    return [img[:, :, c] for c in range(img.shape[2])]


def stack(chans: list[np.ndarray], like: np.ndarray) -> np.ndarray:
    """Inverse of :func:`channels` for an image shaped like ``like``."""
    if np.ndim(like) == 2:
        return chans[0]
    return np.stack(chans, axis=-1)


def laplacian(ch: np.ndarray) -> np.ndarray:
    """5-point Laplacian (N + S + E + W - 4C) with replicate boundary."""
    ch = np.asarray(ch, dtype=np.float64)
    if ch.ndim != 2 or ch.shape[0] < 3 or ch.shape[1] < 3:
        raise ValueError(f"laplacian needs a 2-D field of at least 3x3, got {ch.shape}")
    p = np.pad(ch, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * ch


def gradient_magnitude(ch: np.ndarray) -> np.ndarray:
    """Per-pixel ``sqrt((dx^2 + dy^2) / 2)`` from forward differences."""
    ch = np.asarray(ch, dtype=np.float64)
    if ch.ndim != 2 or ch.shape[0] < 2 or ch.shape[1] < 2:
        raise ValueError(f"gradient_magnitude needs a 2-D field of at least 2x2, got {ch.shape}")
    dx = np.zeros_like(ch)
    dy = np.zeros_like(ch)
    dx[:, :-1] = ch[:, 1:] - ch[:, :-1]
    dy[:-1, :] = ch[1:, :] - ch[:-1, :]
    return np.sqrt((dx * dx + dy * dy) / 2.0)


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    std: float
    min: float
    max: float
    _sorted: np.ndarray

    def percentile(self, p: float) -> float:
        if not 0.0 <= p <= 100.0:
            raise ValueError(f"percentile must lie in [0, 100], got {p}")
        return float(np.percentile(self._sorted, p, method="linear"))


def channel_stats(ch: np.ndarray) -> ChannelStats:
    """Mean, population std, extrema and a percentile lookup of one channel."""
    flat = np.asarray(ch, dtype=np.float64).ravel()
    if flat.size == 0:
        raise ValueError("channel_stats of an empty channel")
    s = np.sort(flat)
    return ChannelStats(
        mean=float(flat.mean()),
        std=float(flat.std()),
        min=float(s[0]),
        max=float(s[-1]),
        _sorted=s,
    )

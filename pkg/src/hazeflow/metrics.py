"""No-reference quality measures used to judge enhancement.

Unless stated otherwise every measure quantises its input to 8 bits first
and works in 0-255 units, which is how these figures are usually reported.
Larger values after processing are read as an improvement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from skimage.color import rgb2lab

from .imgcore import from_unit, gradient_magnitude, to_gray

# Matkovic et al. (2005) resolution weights: w_i = (-0.406385 x + 0.334573) x + 0.0877526, x = i / 9
GCF_LEVELS = 9
GCF_GAMMA = 2.2

# Yang & Sowmya (2015) UCIQE coefficients
UCIQE_COEFFS = (0.4680, 0.2745, 0.2576)

# Hasler & Suesstrunk (2003) weight of the mean term
COLOURFULNESS_MEAN_WEIGHT = 0.3

EMEC_BLOCK = 8
EMEC_EPS = 1.0

RATIO_EPS = 1e-9

METRIC_NAMES = ("entropy", "ag", "gcf", "colourfulness", "emec", "uciqe")


def _as_255(img) -> np.ndarray:
    """8-bit quantised copy as float64 in 0-255 units."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = from_unit(arr)
    return arr.astype(np.float64)


def _as_rgb255(img) -> np.ndarray:
    arr = _as_255(img)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {arr.shape}")
    return arr


def _gray255(img) -> np.ndarray:
    return to_gray(_as_255(img))


def entropy(img) -> float:
    """Shannon entropy (bits) of the 256-bin gray histogram."""
    g = np.floor(_gray255(img) + 0.5).astype(np.int64)
    hist = np.bincount(g.ravel(), minlength=256).astype(np.float64)
    p = hist[hist > 0] / g.size
    return float(-np.sum(p * np.log2(p))) + 0.0


def average_gradient(img, quantize: bool = True) -> float:
    """Mean gradient magnitude of the gray image.

    With ``quantize=False`` the image is used as given (no 8-bit rounding,
    native units); the PDE stopping rule relies on that form.
    """
    g = _gray255(img) if quantize else to_gray(img)
    return float(gradient_magnitude(g).mean())


def rag(before, after) -> float:
    ag0 = average_gradient(before)
    if ag0 < RATIO_EPS:
        raise ValueError("relative average gradient undefined: AG of the reference is zero")
    return average_gradient(after) / ag0


def contrast_factor_f(before, after) -> float:
    """Ratio of gray coefficients of variation, ``(sd/mean)_after / (sd/mean)_before``."""
    g0 = _gray255(before)
    g1 = _gray255(after)
    m0, m1 = g0.mean(), g1.mean()
    if m0 <= 1e-6 or m1 <= 1e-6:
        raise ValueError("contrast factor undefined for a black image")
    cv0 = g0.std() / m0
    if cv0 < RATIO_EPS:
        raise ValueError("contrast factor undefined for a constant reference image")
    return float((g1.std() / m1) / cv0)


def _local_contrast(lum: np.ndarray) -> float:
    """Mean over pixels of the average absolute difference to 4-neighbours."""
    h, w = lum.shape
    if h * w < 2:
        return 0.0
    total = np.zeros_like(lum)
    count = np.zeros_like(lum)
    dv = np.abs(np.diff(lum, axis=0))
    dh = np.abs(np.diff(lum, axis=1))
    total[:-1, :] += dv
    total[1:, :] += dv
    count[:-1, :] += 1
    count[1:, :] += 1
    total[:, :-1] += dh
    total[:, 1:] += dh
    count[:, :-1] += 1
    count[:, 1:] += 1
    return float(np.mean(total / np.maximum(count, 1)))


def gcf(img) -> float:
    """Global contrast factor over nine successively halved resolutions.

    Linear luminance ``(k/255)^2.2`` is averaged over 2x2 superpixels between
    levels; local contrast uses perceptual lightness ``100 sqrt(l)``.
    """
    lin = (_gray255(img) / 255.0) ** GCF_GAMMA
    total = 0.0
    for i in range(1, GCF_LEVELS + 1):
        x = i / GCF_LEVELS
        weight = (-0.406385 * x + 0.334573) * x + 0.0877526
        total += weight * _local_contrast(100.0 * np.sqrt(lin))
        h, w = lin.shape
        if h >= 2 and w >= 2:
            h2, w2 = h // 2 * 2, w // 2 * 2
            lin = lin[:h2, :w2].reshape(h2 // 2, 2, w2 // 2, 2).mean(axis=(1, 3))
        else:
            lin = lin.reshape(1, -1).mean(axis=1, keepdims=True)
    return float(total)


def colourfulness(img) -> float:
    """Hasler-Suesstrunk colourfulness on opponent axes rg and yb."""
    rgb = _as_rgb255(img)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    rg = r - g
    yb = 0.5 * (r + g) - b
    sigma = math.hypot(rg.std(), yb.std())
    mu = math.hypot(rg.mean(), yb.mean())
    return float(sigma + COLOURFULNESS_MEAN_WEIGHT * mu)


def cef(before, after) -> float:
    m0 = colourfulness(before)
    if m0 < RATIO_EPS:
        raise ValueError("colour enhancement factor undefined for an achromatic reference")
    return colourfulness(after) / m0


def emec(img, block: int = EMEC_BLOCK) -> float:
    """Mean of ``20 log10((max + 1) / (min + 1))`` over 8x8 blocks of each channel.

    Trailing partial blocks are kept.
    """
    rgb = _as_rgb255(img)
    h, w, _ = rgb.shape
    vals = []
    for y in range(0, h, block):
        for x in range(0, w, block):
            tile = rgb[y:y + block, x:x + block, :]
            mx = tile.max(axis=(0, 1))
            mn = tile.min(axis=(0, 1))
            vals.append(20.0 * np.log10((mx + EMEC_EPS) / (mn + EMEC_EPS)))
    return float(np.mean(vals))


def uciqe(img) -> float:
    """Chroma spread, lightness contrast and mean saturation in CIELab.

    Lightness and chroma are scaled by 1/100; the lightness contrast is the
    mean of the brightest 1 % minus the mean of the darkest 1 %.
    """
    rgb = _as_rgb255(img) / 255.0
    lab = rgb2lab(rgb)
    light = lab[:, :, 0].ravel() / 100.0
    chroma = np.hypot(lab[:, :, 1], lab[:, :, 2]).ravel() / 100.0
    # rgb2lab leaves ~1e-3 chroma on exact grays; R = G = B is achromatic by definition
    neutral = (np.ptp(rgb, axis=2) == 0).ravel()
    chroma[neutral | (chroma < 1e-6)] = 0.0
    sat = np.divide(chroma, light, out=np.zeros_like(chroma), where=light > 1e-6)

    k = max(1, int(round(0.01 * light.size)))
    s = np.sort(light)
    contrast = s[-k:].mean() - s[:k].mean()
    c1, c2, c3 = UCIQE_COEFFS
    return float(c1 * chroma.std() + c2 * contrast + c3 * sat.mean())


def evaluate(img) -> dict[str, float]:
    """All absolute measures of one image, keyed by :data:`METRIC_NAMES`."""
    return {
        "entropy": entropy(img),
        "ag": average_gradient(img),
        "gcf": gcf(img),
        "colourfulness": colourfulness(img),
        "emec": emec(img),
        "uciqe": uciqe(img),
    }


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > RATIO_EPS else None


@dataclass
class MetricsReport:
    """Before/after measures of one image plus the paired ratios.

    Ratios are ``None`` when their denominator is (near) zero.
    """

    before: dict[str, float]
    after: dict[str, float]
    rag: float | None = None
    cef: float | None = None
    f_factor: float | None = None
    improved: dict[str, bool] = field(default_factory=dict)

    @classmethod
    def compare(cls, before, after) -> "MetricsReport":
        mb, ma = evaluate(before), evaluate(after)
        try:
            f = contrast_factor_f(before, after)
        except ValueError:
            f = None
        return cls(
            before=mb,
            after=ma,
            rag=_ratio(ma["ag"], mb["ag"]),
            cef=_ratio(ma["colourfulness"], mb["colourfulness"]),
            f_factor=f,
            improved=improvement_flags(mb, ma),
        )


def improvement_flags(before: dict, after: dict) -> dict[str, bool]:
    return {k: bool(after[k] > before[k]) for k in before if k in after}

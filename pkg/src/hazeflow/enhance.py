"""Pre- and post-enhancement operators: CLAHE, IRCES, FHE and GOC-CS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .imgcore import channels, gradient_magnitude, stack, to_gray
from .spectral import HALF_DIAGONAL, apply_transfer
from .validation import check_image, check_in_range

NBINS = 256


@dataclass(frozen=True)
class ClaheCfg:
    """Clip limit (normalised, as a fraction of the tile population) and tile grid size.

    ``tiles`` is the number of tiles along each image side.
    """

    clip: float = 0.002
    tiles: int = 32

    def __post_init__(self):
        check_in_range("clip", self.clip, 0.0, 1.0, lo_open=True)
        check_in_range("tiles", self.tiles, 1)


@dataclass(frozen=True)
class IrcesCfg:
    sigma_l: float | None = None  # None -> min(h, w) / 4
    gamma: float = 0.7
    sharpen_k: float = 0.5
    noise_gate: float = 0.02
    sharpen_sigma: float = 1.0

    def __post_init__(self):
        if self.sigma_l is not None:
            check_in_range("sigma_l", self.sigma_l, 0.0, lo_open=True)
        check_in_range("gamma", self.gamma, 0.0, 1.0, lo_open=True)
        check_in_range("sharpen_k", self.sharpen_k, 0.0)
        check_in_range("noise_gate", self.noise_gate, 0.0, 1.0)
        check_in_range("sharpen_sigma", self.sharpen_sigma, 0.0, lo_open=True)


@dataclass(frozen=True)
class FheCfg:
    gamma_low: float = 0.6
    gamma_high: float = 1.4
    d0: float = 0.1
    int_passes: int = 1

    def __post_init__(self):
        check_in_range("gamma_low", self.gamma_low, 0.0, lo_open=True)
        check_in_range("gamma_high", self.gamma_high, self.gamma_low)
        check_in_range("fhe_d0", self.d0, 0.0, lo_open=True)
        check_in_range("int_passes", self.int_passes, 0)


@dataclass(frozen=True)
class GocCsCfg:
    p_low: float = 1.0
    p_high: float = 99.0

    def __post_init__(self):
        check_in_range("p_low", self.p_low, 0.0, 100.0)
        check_in_range("p_high", self.p_high, self.p_low, 100.0, lo_open=True)


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return np.round(np.linspace(0, n, tiles + 1)).astype(np.int64)


def _tile_map(levels: np.ndarray, clip: float) -> np.ndarray:
    """Clipped, redistributed CDF of one tile as a 256-entry lookup into [0, 1]."""
    n = levels.size
    hist = np.bincount(levels.ravel(), minlength=NBINS).astype(np.float64)
    # clip=1 leaves the histogram untouched, clip->0 flattens it completely
    uniform = n / NBINS
    limit = uniform + clip * (n - uniform)
    excess = np.sum(np.maximum(hist - limit, 0.0))
    hist = np.minimum(hist, limit) + excess / NBINS
    return np.cumsum(hist) / n


def _interp_axis(n: int, edges: np.ndarray):
    """Lower/upper tile index and upper weight for every coordinate on one axis."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    last = len(centers) - 1
    i0 = np.clip(np.searchsorted(centers, pos, side="right") - 1, 0, last)
    i1 = np.minimum(i0 + 1, last)
    span = centers[i1] - centers[i0]
    wgt = np.divide(pos - centers[i0], span, out=np.zeros(n), where=span > 0)
    return i0, i1, np.clip(wgt, 0.0, 1.0)


def clahe(ch: np.ndarray, cfg: ClaheCfg = ClaheCfg()) -> np.ndarray:
    """Contrast-limited adaptive histogram equalisation of one [0, 1] channel.

    Each of the ``tiles x tiles`` regions gets a clipped 256-bin histogram
    with the excess spread uniformly over all bins; pixels blend the four
    nearest tile mappings bilinearly (edge tiles clamp).
    """
    ch = np.asarray(ch, dtype=np.float64)
    if ch.ndim != 2:
        raise ValueError(f"clahe works on a single channel, got shape {ch.shape}")
    h, w = ch.shape
    t = cfg.tiles
    if h < t or w < t:
        raise ValueError(f"image {h}x{w} is smaller than the {t}x{t} tile grid")

    levels = np.floor(np.clip(ch, 0.0, 1.0) * 255.0 + 0.5).astype(np.int64)
    ye, xe = _tile_edges(h, t), _tile_edges(w, t)
    maps = np.empty((t, t, NBINS))
    for i in range(t):
        for j in range(t):
            maps[i, j] = _tile_map(levels[ye[i]:ye[i + 1], xe[j]:xe[j + 1]], cfg.clip)

    y0, y1, wy = _interp_axis(h, ye)
    x0, x1, wx = _interp_axis(w, xe)
    y0, y1, wy = y0[:, None], y1[:, None], wy[:, None]
    x0, x1, wx = x0[None, :], x1[None, :], wx[None, :]
    top = (1 - wx) * maps[y0, x0, levels] + wx * maps[y0, x1, levels]
    bottom = (1 - wx) * maps[y1, x0, levels] + wx * maps[y1, x1, levels]
    return np.clip((1 - wy) * top + wy * bottom, 0.0, 1.0)


def irces(img, cfg: IrcesCfg = IrcesCfg()) -> np.ndarray:
    """Illumination-reflectance brightening with noise-gated sharpening.

    The gray image blurred with ``sigma_l`` is the illumination ``L``; the
    output recombines ``L**gamma`` with the reflectance ``img / L`` and then
    adds an unsharp-mask detail term only where the gradient exceeds
    ``noise_gate``, so flat noisy areas are left alone.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    sigma_l = cfg.sigma_l if cfg.sigma_l is not None else min(h, w) / 4.0
    illum = gaussian_filter(to_gray(img), sigma_l, mode="nearest")
    illum = np.clip(illum, 0.0, 1.0)
    ill = illum if img.ndim == 2 else illum[:, :, None]
    base = np.clip(ill ** cfg.gamma * (img / (ill + 1e-4)), 0.0, 1.0)
    if cfg.sharpen_k == 0:
        return base

    gate = gradient_magnitude(to_gray(base)) > cfg.noise_gate
    if img.ndim == 3:
        gate = gate[:, :, None]
        blur = np.stack([gaussian_filter(c, cfg.sharpen_sigma, mode="nearest")
                         for c in channels(base)], axis=-1)
    else:
        blur = gaussian_filter(base, cfg.sharpen_sigma, mode="nearest")
    return np.clip(base + cfg.sharpen_k * (base - blur) * gate, 0.0, 1.0)


def intensify(mu, passes: int = 1):
    """Pal-King fuzzy intensification ``2 mu^2`` below 0.5, ``1 - 2 (1-mu)^2`` above."""
    mu = np.asarray(mu, dtype=np.float64)
    for _ in range(passes):
        mu = np.where(mu <= 0.5, 2.0 * mu * mu, 1.0 - 2.0 * (1.0 - mu) ** 2)
    return mu if mu.ndim else float(mu)


def _homomorphic_channel(ch: np.ndarray, cfg: FheCfg) -> np.ndarray:
    d0 = cfg.d0 * HALF_DIAGONAL
    gl, gh = cfg.gamma_low, cfg.gamma_high

    def transfer(d):
        return gl + (gh - gl) * (1.0 - np.exp(-(d * d) / (2.0 * d0 * d0)))

    z = np.log1p(255.0 * ch)
    y = np.expm1(apply_transfer(z, transfer)) / 255.0
    lo, hi = ch.min(), ch.max()
    ylo, yhi = y.min(), y.max()
    if yhi - ylo < 1e-12 or hi - lo < 1e-12:
        return ch.copy()
    mu = intensify((y - ylo) / (yhi - ylo), cfg.int_passes)
    return lo + mu * (hi - lo)


def fhe(img, cfg: FheCfg = FheCfg()) -> np.ndarray:
    """Fuzzy homomorphic enhancement, channel by channel.

    High-emphasis filtering of ``ln(1 + 255 I)`` compresses illumination
    and lifts detail. The result is min-max normalised into a fuzzy
    membership, intensified ``int_passes`` times and mapped back onto the
    channel's original range, so neutral settings reproduce the input.
    """
    img = check_image(img)
    out = [_homomorphic_channel(c, cfg) for c in channels(img)]
    return np.clip(stack(out, img), 0.0, 1.0)


def goc_cs(img, cfg: GocCsCfg = GocCsCfg()) -> np.ndarray:
    """Gain/offset colour correction by per-channel percentile stretching.

    Channels whose percentile spread is below 1e-4 pass through.
    """
    img = check_image(img, rgb=True)
    out = []
    for c in channels(img):
        lo, hi = np.percentile(c, [cfg.p_low, cfg.p_high])
        if hi - lo < 1e-4:
            out.append(c.copy())
        else:
            out.append(np.clip((c - lo) / (hi - lo), 0.0, 1.0))
    return np.stack(out, axis=-1)

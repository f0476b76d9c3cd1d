"""Haze formation model, its exact inversion, and the two fast dehazers.

Variant A refines the inverted image (a transmission proxy) with LIP
followed by CLAHE. Variant B takes the log of the inverted image, low-pass
filters it into a transmission estimate and divides it out in 0-255
arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pde
from .enhance import ClaheCfg, clahe
from .imgcore import channels, stack
from .lip import LipParams, lip_mult, resolve_lambda
from .spectral import HALF_DIAGONAL, apply_transfer
from .validation import check_field, check_image, check_in_range

T_MIN = 0.05
LOG_MAX = 20.0 * math.log10(255.0)
LOG_SCALINGS = ("rescale", "none", "max")
FILTER_KINDS = ("fractional-gaussian", "bilateral")


@dataclass(frozen=True)
class FilterCfg:
    """Transmission refinement filter for variant B.

    ``d0`` is the cutoff relative to the spectrum half-diagonal and ``nu``
    the fractional order; ``sigma_s`` (pixels) and ``sigma_r`` (0-255
    intensity units) parameterise the bilateral alternative.
    """

    kind: str = "fractional-gaussian"
    d0: float = 0.15
    nu: float = 0.5
    sigma_s: float = 8.0
    sigma_r: float = 25.0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"kind={self.kind!r} out of range (must be one of {FILTER_KINDS})")
        check_in_range("d0", self.d0, 0.0, 1.0, lo_open=True)
        check_in_range("nu", self.nu, 0.0, 1.0, lo_open=True)
        check_in_range("sigma_s", self.sigma_s, 0.0, lo_open=True)
        check_in_range("sigma_r", self.sigma_r, 0.0, lo_open=True)


@dataclass
class HazeModel:
    """Airlight and transmission of a homogeneous haze layer."""

    airlight: float
    transmission: np.ndarray
    beta_scatter: float | None = None
    depth: np.ndarray | None = None

    @classmethod
    def from_depth(cls, depth, beta_scatter: float, airlight: float = 1.0) -> "HazeModel":
        return cls(airlight=airlight, transmission=transmission_from_depth(depth, beta_scatter),
                   beta_scatter=beta_scatter, depth=np.asarray(depth, dtype=np.float64))

    def render(self, clean) -> np.ndarray:
        return synth_haze(clean, self.transmission, self.airlight)

    def restore(self, hazy) -> np.ndarray:
        return restore_exact(hazy, self.transmission, self.airlight)


@dataclass
class TransmissionEstimate:
    t_prime: np.ndarray
    source: str


@dataclass
class FastBState:
    """Intermediate fields of variant B, all in 0-255 units, one entry per channel."""

    inverted: list[np.ndarray]
    log_inverted: list[np.ndarray]
    t_prime: TransmissionEstimate


def transmission_from_depth(depth, beta: float) -> np.ndarray:
    depth = check_field(depth, "depth")
    if beta < 0 or np.any(depth < 0):
        raise ValueError("depth and scattering coefficient must be non-negative")
    return np.exp(-beta * depth)


def _check_airlight(a: float) -> float:
    return check_in_range("airlight", a, 0.0, 1.0, lo_open=True)


def _broadcast_t(img: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.shape != img.shape[:2]:
        raise ValueError(f"transmission shape {t.shape} does not match image {img.shape[:2]}")
    return t if img.ndim == 2 else t[:, :, None]


def synth_haze(clean, t, airlight: float) -> np.ndarray:
    """Render ``I = J t + A (1 - t)``."""
    clean = np.asarray(clean, dtype=np.float64)
    _check_airlight(airlight)
    tt = _broadcast_t(clean, t)
    return clean * tt + airlight * (1.0 - tt)


def restore_exact(hazy, t, airlight: float, t_min: float = T_MIN) -> np.ndarray:
    """Invert the haze model with the transmission floored at ``t_min``."""
    hazy = np.asarray(hazy, dtype=np.float64)
    _check_airlight(airlight)
    tt = np.maximum(_broadcast_t(hazy, t), t_min)
    return np.clip((hazy - airlight) / tt + airlight, 0.0, 1.0)


def fractional_gaussian_transfer(d: np.ndarray, d0: float, nu: float) -> np.ndarray:
    """``H(D) = exp(-(D^2 / (2 D0^2))^nu)`` with ``D0 = d0`` times the half-diagonal."""
    cutoff = d0 * HALF_DIAGONAL
    return np.exp(-np.power((d * d) / (2.0 * cutoff * cutoff), nu))


def fractional_gaussian_lpf(field, d0: float = 0.15, nu: float = 0.5) -> np.ndarray:
    """Fractional-order Gaussian low-pass in the frequency domain; DC gain 1."""
    field = check_field(field)
    check_in_range("nu", nu, 0.0, 1.0, lo_open=True)
    check_in_range("d0", d0, 0.0, lo_open=True)
    return apply_transfer(field, lambda d: fractional_gaussian_transfer(d, d0, nu))


def bilateral_filter(field, sigma_s: float = 8.0, sigma_r: float = 25.0) -> np.ndarray:
    """Brute-force bilateral filter, window radius ``ceil(3 sigma_s)``, replicate boundary."""
    field = check_field(field)
    if sigma_s <= 0 or sigma_r <= 0:
        raise ValueError("bilateral sigmas must be positive")
    r = int(math.ceil(3.0 * sigma_s))
    h, w = field.shape
    p = np.pad(field, r, mode="edge")
    num = np.zeros_like(field)
    den = np.zeros_like(field)
    inv_s = 1.0 / (2.0 * sigma_s * sigma_s)
    inv_r = 1.0 / (2.0 * sigma_r * sigma_r)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ws = math.exp(-(dy * dy + dx * dx) * inv_s)
            nb = p[r + dy:r + dy + h, r + dx:r + dx + w]
            diff = nb - field
            wgt = ws * np.exp(-(diff * diff) * inv_r)
            num += wgt * nb
            den += wgt
    return num / den


def estimate_illumination(img, cfg: FilterCfg = FilterCfg()) -> np.ndarray:
    """Low-pass of the per-pixel channel maximum, clamped to [0, 1]."""
    img = check_image(img)
    peak = img if img.ndim == 2 else img.max(axis=2)
    return np.clip(fractional_gaussian_lpf(peak, cfg.d0, cfg.nu), 0.0, 1.0)


def fast_dehaze_simple(img, cfg: FilterCfg = FilterCfg()) -> np.ndarray:
    """Unit-airlight inversion ``J = (I - 1) / (1 - L) + 1`` with ``L`` the illumination."""
    img = check_image(img)
    illum = estimate_illumination(img, cfg)
    t = np.maximum(1.0 - illum, T_MIN)
    if img.ndim == 3:
        t = t[:, :, None]
    return np.clip((img - 1.0) / t + 1.0, 0.0, 1.0)


def fast_dehaze_a(img, clahe_cfg: ClaheCfg | None = ClaheCfg(), lip: LipParams = LipParams(),
                  return_transmission: bool = False):
    """LIP then CLAHE on the inverted image of each RGB channel.

    Suited only to thin, uniform haze. ``clahe_cfg=None`` skips the local
    stage.
    """
    img = check_image(img)
    t = 1.0 - img
    lam = resolve_lambda(t, lip)
    refined = lip_mult(t, lam)
    if clahe_cfg is not None:
        refined = stack([clahe(c, clahe_cfg) for c in channels(refined)], refined)
    out = np.clip(1.0 - refined, 0.0, 1.0)
    if return_transmission:
        return out, TransmissionEstimate(t_prime=refined, source="A:lip+clahe")
    return out


def log_inverted(img, scaling: str = "rescale") -> np.ndarray:
    """``20 log10`` of the inverted image in 0-255 units.

    The inverted image is floored at 1 before the logarithm. ``scaling``
    maps the result onto the 0-255 range of the image: ``"rescale"``
    multiplies by ``255 / (20 log10 255)``, ``"max"`` scales the per-image
    maximum to 255 and ``"none"`` keeps raw decibels.
    """
    img = np.asarray(img, dtype=np.float64)
    inv = 255.0 * (1.0 - img)
    raw = 20.0 * np.log10(np.maximum(inv, 1.0))
    if scaling == "rescale":
        return raw * (255.0 / LOG_MAX)
    if scaling == "max":
        peak = raw.max()
        return raw * (255.0 / peak) if peak > 0 else raw
    if scaling == "none":
        return raw
    raise ValueError(f"scaling must be one of {LOG_SCALINGS}, got {scaling!r}")


def _refine(field: np.ndarray, cfg: FilterCfg) -> np.ndarray:
    if cfg.kind == "bilateral":
        return bilateral_filter(field, cfg.sigma_s, cfg.sigma_r)
    return fractional_gaussian_lpf(field, cfg.d0, cfg.nu)


def fast_dehaze_b(img, cfg: FilterCfg = FilterCfg(), refine: bool = False, *,
                  pde_params: pde.PdeParams | None = None, log_scaling: str = "rescale",
                  return_state: bool = False):
    """Divide the filtered log-inverted image out of the hazy image.

    Per channel, in 0-255 units: ``J = 255 (I - Ilog) / max(255 - t', 1)``
    clamped to [0, 255], with ``t'`` the filtered ``Ilog``. With
    ``refine=True`` the result is further evolved by the PDE dehazer
    (without post-processing).
    """
    img = check_image(img)
    inv, logs, tps, outs = [], [], [], []
    for c in channels(img):
        i255 = 255.0 * c
        ilog = log_inverted(c, log_scaling)
        tp = _refine(ilog, cfg)
        j = 255.0 * (i255 - ilog) / np.maximum(255.0 - tp, 1.0)
        inv.append(255.0 - i255)
        logs.append(ilog)
        tps.append(tp)
        outs.append(np.clip(j, 0.0, 255.0) / 255.0)
    out = stack(outs, img)
    if refine:
        out = pde.dehaze_pde(out, pde_params or pde.PdeParams(), post="none")
    if return_state:
        source = "B:bilateral" if cfg.kind == "bilateral" else "B:fractional-gaussian"
        state = FastBState(inverted=inv, log_inverted=logs,
                           t_prime=TransmissionEstimate(t_prime=stack(tps, img), source=source))
        return out, state
    return out

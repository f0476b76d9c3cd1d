"""Procedural clean scenes, smooth depth fields and hazy renders.

Everything is driven by a ``numpy.random.Generator`` so a seed fixes the
whole corpus bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .fastdehaze import synth_haze, transmission_from_depth
from .imgcore import from_unit, save_image, save_u16, to_gray

DEFAULT_BETAS = (0.5, 1.0, 2.0)

# per-channel (R, G, B) extinction multipliers and veiling colour
WATER_EXTINCTION = np.array([2.5, 0.9, 0.6])
WATER_VEIL = np.array([0.05, 0.45, 0.60])
DUST_EXTINCTION = np.array([0.6, 1.0, 2.2])
DUST_VEIL = np.array([0.75, 0.55, 0.30])


def make_scene(rng: np.random.Generator, size: int = 256) -> np.ndarray:
    """Colour gradient background with random rectangles, discs and texture."""
    if size < 8:
        raise ValueError(f"scene size must be at least 8, got {size}")
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    c0, c1 = rng.uniform(0.05, 0.95, 3), rng.uniform(0.05, 0.95, 3)
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.clip(0.5 + (np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5)), 0, 1)
    img = c0 + (c1 - c0) * ramp[:, :, None]

    for _ in range(rng.integers(6, 12)):
        colour = rng.uniform(0.0, 1.0, 3)
        if rng.random() < 0.5:
            lo = min(8, size // 4)
            y0, x0 = rng.integers(0, size - lo, 2)
            hgt, wid = rng.integers(lo, size // 2, 2)
            img[y0:y0 + hgt, x0:x0 + wid] = colour
        else:
            cy, cx = rng.uniform(0, 1, 2)
            rad = rng.uniform(0.04, 0.2)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < rad * rad
            img[mask] = colour

    grain = rng.normal(0.0, 1.0, (size, size, 3))
    texture = np.stack([gaussian_filter(grain[:, :, c], 1.5) for c in range(3)], axis=-1)
    img = img + 0.08 * texture / (np.abs(texture).max() + 1e-12)
    return np.clip(img, 0.0, 1.0)


def make_depth(rng: np.random.Generator, size: int = 256, lo: float = 0.3, hi: float = 1.6) -> np.ndarray:
    """Smooth depth in ``[lo, hi]``: a tilted plane plus low-frequency undulation."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    tilt = rng.uniform(0.6, 1.0) * (1.0 - yy) + rng.uniform(-0.2, 0.2) * xx
    blob = gaussian_filter(rng.normal(0.0, 1.0, (size, size)), size / 8.0, mode="reflect")
    blob /= np.abs(blob).max() + 1e-12
    d = tilt + 0.3 * blob
    d = (d - d.min()) / (d.max() - d.min() + 1e-12)
    return lo + (hi - lo) * d


def tinted_haze(clean: np.ndarray, depth: np.ndarray, beta: float, extinction, veil) -> np.ndarray:
    """Wavelength-dependent haze: channel ``c`` uses ``exp(-beta k_c d)`` and veil ``B_c``."""
    t = np.exp(-beta * np.asarray(extinction)[None, None, :] * depth[:, :, None])
    return clean * t + np.asarray(veil)[None, None, :] * (1.0 - t)


@dataclass
class Sample:
    name: str
    scene: int
    beta: float
    airlight: float
    clean: np.ndarray
    hazy: np.ndarray
    transmission: np.ndarray


def generate(n_scenes: int = 20, betas=DEFAULT_BETAS, seed: int = 0, size: int = 256):
    """Yield one :class:`Sample` per (scene, beta), scene-major."""
    rng = np.random.default_rng(seed)
    for s in range(n_scenes):
        clean = make_scene(rng, size)
        depth = make_depth(rng, size)
        airlight = float(rng.uniform(0.85, 1.0))
        for beta in betas:
            t = transmission_from_depth(depth, beta)
            yield Sample(name=f"scene{s:03d}_b{beta:g}", scene=s, beta=float(beta),
                         airlight=airlight, clean=clean,
                         hazy=synth_haze(clean, t, airlight), transmission=t)


def desaturate(img: np.ndarray, keep: float) -> np.ndarray:
    """Blend towards BT.601 gray, keeping ``keep`` of the chroma."""
    g = to_gray(img)[:, :, None]
    return np.clip(g + keep * (img - g), 0.0, 1.0)


def generate_tinted(kind: str, n_scenes: int = 20, beta: float = 1.0, seed: int = 0,
                    size: int = 128, keep_chroma: float = 0.1):
    """Bluish (``"underwater"``) or reddish (``"dust"``) casts over near-neutral scenes.

    The cast is what a colour-correction stage should undo, so scene
    chroma is mostly removed and depth varies by +-20 % around a per-scene
    mean. Returns ``(clean, degraded)`` pairs.
    """
    if kind == "underwater":
        ext, veil = WATER_EXTINCTION, WATER_VEIL
    elif kind == "dust":
        ext, veil = DUST_EXTINCTION, DUST_VEIL
    else:
        raise ValueError(f"kind must be 'underwater' or 'dust', got {kind!r}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_scenes):
        clean = desaturate(make_scene(rng, size), keep_chroma)
        mid = rng.uniform(0.6, 1.2)
        depth = make_depth(rng, size, 0.8 * mid, 1.2 * mid)
        out.append((clean, tinted_haze(clean, depth, beta, ext, veil)))
    return out


def synth_corpus(out_dir, n_scenes: int = 20, betas=DEFAULT_BETAS, seed: int = 0, size: int = 256):
    """Write ``clean/``, ``hazy/`` and ``truth/`` (16-bit transmission) plus ``index.json``.

    Returns the list of index records.
    """
    out_dir = Path(out_dir)
    for sub in ("clean", "hazy", "truth"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    records = []
    written = set()
    for smp in generate(n_scenes, betas, seed, size):
        clean_name = f"scene{smp.scene:03d}.png"
        if clean_name not in written:
            save_image(from_unit(smp.clean), out_dir / "clean" / clean_name)
            written.add(clean_name)
        save_image(from_unit(smp.hazy), out_dir / "hazy" / f"{smp.name}.png")
        save_u16(smp.transmission, out_dir / "truth" / f"{smp.name}_t.png")
        records.append({"name": smp.name, "scene": smp.scene, "beta": smp.beta,
                        "airlight": round(smp.airlight, 6), "clean": f"clean/{clean_name}",
                        "hazy": f"hazy/{smp.name}.png", "truth": f"truth/{smp.name}_t.png"})
    with open(out_dir / "index.json", "w") as fh:
        json.dump(records, fh, indent=2)
    return records
